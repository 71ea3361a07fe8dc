#pragma once

#include "qpspec/arithmetic.hpp"
#include "qpspec/cocycle.hpp"
#include "qpspec/potential.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace qpspec {

/// Dirichlet: phi_{-1} = phi_N = 0. Neumann: phi_{-1} = phi_0, phi_N = phi_{N-1}.
enum class Boundary { Dirichlet, Neumann };
/// Cap replaces |V| > v_cap by sign(V) v_cap; Strict refuses such windows.
enum class PolePolicy { Cap, Strict };

const char* to_string(Boundary b);
const char* to_string(PolePolicy p);

struct SpectrumOptions {
    Boundary boundary = Boundary::Dirichlet;
    PolePolicy policy = PolePolicy::Cap;
    double v_cap = 1e12;
    double tolerance = 1e-10;
};

/// The N x N truncation: diagonal V(theta + k alpha), off-diagonal 1.
struct Tridiagonal {
    std::vector<double> diagonal;
    /// Sites whose potential was capped (or hit a pole exactly).
    std::vector<long long> capped_sites;
};

Tridiagonal truncation(const MeromorphicPotential& pot, const TorusPoint& theta, const ContinuedFraction& cf,
                       std::size_t N, const SpectrumOptions& options = {});

/// Number of eigenvalues strictly below x of the unit off-diagonal
/// tridiagonal matrix with the given diagonal (LDL^T inertia).
std::size_t sturm_count(const std::vector<double>& diagonal, double x);

/// Eigenvalues by bisection on sturm_count, ascending.
std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& diagonal, double tolerance = 1e-10);

struct TruncatedSpectrum {
    std::vector<double> eigenvalues;
    std::vector<long long> capped_sites;
    /// One flag per eigenvalue: it sits at the scale of a capped entry.
    std::vector<bool> pole_influenced;
};

TruncatedSpectrum truncated_spectrum(const MeromorphicPotential& pot, const TorusPoint& theta,
                                     const ContinuedFraction& cf, std::size_t N, const SpectrumOptions& options = {});

struct ScanEntry {
    double E = 0.0;
    std::optional<LyapunovEstimate> estimate;
    /// "kind: message" when the estimate failed.
    std::string error;
};

/// lyapunov at every energy; options.threads workers across energies, output in grid order.
std::vector<ScanEntry> lyapunov_scan(const MeromorphicPotential& pot, const ContinuedFraction& cf,
                                     const std::vector<double>& energies, const LyapunovOptions& options = {});

enum class RegimeLabel { ScCandidate, AboveDelta, Uncertain };
const char* to_string(RegimeLabel label);

/// sc-candidate iff L + u < lower, above-delta iff L - u > upper.
RegimeLabel regime_label(double L, double uncertainty, double delta_lower, double delta_upper);

struct RegimeClassification {
    std::vector<double> energies;
    std::vector<double> L_values;
    std::vector<double> discrepancy;
    /// discrepancy + |L(n) - L(n/2)|; infinite where the estimate failed.
    std::vector<double> uncertainty;
    std::vector<RegimeLabel> labels;
    std::vector<std::string> errors;
    IndexValue delta_hat;
    /// max of delta per_level over the last ceil(N/4) and ceil(N/2) levels.
    double delta_lower = 0.0;
    double delta_upper = 0.0;
    double uncertain_fraction = 0.0;
};

RegimeClassification classify_regime(const MeromorphicPotential& pot, const ContinuedFraction& cf,
                                     const std::vector<double>& energies, const IndexValue& delta_hat,
                                     const LyapunovOptions& options = {});

}  // namespace qpspec
