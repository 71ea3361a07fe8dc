#pragma once

#include "qpspec/arithmetic.hpp"
#include "qpspec/cocycle.hpp"
#include "qpspec/mat2.hpp"
#include "qpspec/potential.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace qpspec {

/// phi_k for k in [first, first + values.size()), solving
/// phi_{k+1} + phi_{k-1} + V(theta + k alpha) phi_k = E phi_k.
struct SolutionSegment {
    double E = 0.0;
    TorusPoint theta;
    Vec2<Real> initial;  // (phi_0, phi_{-1})
    long long first = 0;
    std::vector<Real> values;
    /// Set when a pole stopped the segment short of the requested range.
    std::optional<std::string> truncated;

    long long last() const { return first + static_cast<long long>(values.size()) - 1; }
    bool covers(long long lo, long long hi) const { return lo >= first && hi <= last(); }
    const Real& phi(long long k) const;
    /// ||(phi_k, phi_{k-1})||
    Real pair_norm(long long k) const;
    /// Largest relative residual of the recurrence over interior k.
    double max_residual(const MeromorphicPotential& pot, const ContinuedFraction& cf) const;
};

/// Fills [lo, hi] (lo <= -1, hi >= 0) from (phi_0, phi_{-1}) = initial / |initial|
/// with A steps forward and A^{-1} steps backward.
SolutionSegment solve_recurrence(const MeromorphicPotential& pot, double E, const TorusPoint& theta,
                                 const ContinuedFraction& cf, Vec2<double> initial, long long lo, long long hi,
                                 Bits prec = 0);

/// The four matrices behind Theorem 3.1 at one scale q, all in MPFR.
struct GordonMatrices {
    long long q = 0;
    Bits prec = 0;
    Mat2<Real> Aq;            // A_q(theta)
    Mat2<Real> A2q;           // A_{2q}(theta), its own 2q-step product
    Mat2<Real> Aq_inv;        // A_q(theta)^{-1} from single-step inverses
    Mat2<Real> Aq_inv_shift;  // A_q(theta - q alpha)^{-1} = M_{-q}(theta)
    Mat2<Real> square_diff;   // A_q^2 - A_{2q}
    Mat2<Real> inverse_diff;  // A_q^{-1}(theta) - A_q^{-1}(theta - q alpha)
    /// ln of the absolute rounding noise in the two differences.
    double log_noise_square = 0.0;
    double log_noise_inverse = 0.0;
};

/// prec = 0 sizes the precision so that differences down to e^{-resolve}
/// survive the cancellation; resolve = 0 takes ln q_{n+1} when q = q_n, else
/// half the precision of alpha.
GordonMatrices gordon_matrices(const MeromorphicPotential& pot, double E, const TorusPoint& theta,
                               const ContinuedFraction& cf, long long q, Bits prec = 0, double resolve = 0.0);

struct GordonLhs {
    /// ln ||(A_q^2 - A_{2q})(theta) v||, floored at the rounding noise.
    double log_square = 0.0;
    /// ln ||(A_q^{-1}(theta) - A_q^{-1}(theta - q alpha)) v||, floored likewise.
    double log_inverse = 0.0;
    /// Either value sits at the noise floor.
    bool noise_limited = false;
};

GordonLhs gordon_lhs(const GordonMatrices& m, const Vec2<Real>& v);
GordonLhs gordon_lhs(const MeromorphicPotential& pot, double E, const TorusPoint& theta, const ContinuedFraction& cf,
                     long long q, const Vec2<double>& v, Bits prec = 0);

enum class Verdict { Excluded, Inconclusive };
const char* to_string(Verdict v);

struct MaxInequality {
    double max_norm = 0.0;
    double log_max_norm = 0.0;
    Verdict verdict = Verdict::Inconclusive;
};

inline constexpr double kMaxNormTolerance = 1e-6;

/// max of ||(phi_q, phi_{q-1})||, ||(phi_{-q}, phi_{-q-1})||, ||(phi_{2q}, phi_{2q-1})||.
/// The segment must cover [-q-1, 2q]; excluded needs smallness_held as well.
MaxInequality max_inequality(const SolutionSegment& seg, long long q, bool smallness_held);
/// The same three vectors taken from the matrices: A_q v, M_{-q} v, A_{2q} v.
MaxInequality max_inequality(const GordonMatrices& m, const Vec2<Real>& v, bool smallness_held);

/// Residuals of the 2x2 Cayley-Hamilton identities for B with det B = det:
/// ||B^2 - tr(B) B + det I|| / ||B||^2 and ||B - tr(B) I + det B^{-1}|| / ||B||.
struct CayleyHamilton {
    double square = 0.0;
    double inverse = 0.0;
};

CayleyHamilton cayley_hamilton(const Mat2<double>& B, const Mat2<double>& B_inv, double det = 1.0);
CayleyHamilton cayley_hamilton(const Mat2<Real>& B, const Mat2<Real>& B_inv);
/// Renormalized unimodular products; B_inv typically from product_inverse.
CayleyHamilton cayley_hamilton(const TransferMatrix2& B, const TransferMatrix2& B_inv);

struct TraceReport {
    long long q = 0;
    double trace = 0.0;
    /// |tr A_q| > 1/2, the first case of the Theorem 3.1 argument.
    bool large_trace = false;
    CayleyHamilton residuals;
};

TraceReport trace_dichotomy(const MeromorphicPotential& pot, double E, const TorusPoint& theta,
                            const ContinuedFraction& cf, long long q, Bits prec = 0);
TraceReport trace_dichotomy(const GordonMatrices& m);

/// Right singular vector of A_q(theta) for its smallest singular value.
Vec2<Real> contracted_direction(const GordonMatrices& m);

struct LemmaReport {
    std::size_t level = 0;
    long long q = 0;
    double L = 0.0;
    double delta_hat = 0.0;
    double epsilon = 0.0;
    double log_square = 0.0;
    double log_inverse = 0.0;
    /// q (L - delta_hat + 4 epsilon)
    double log_bound = 0.0;
    /// The bound is >= 1, so the inequality says nothing.
    bool vacuous = false;
    /// max ||(phi_k, phi_{k-1})|| over k in {0, q, -q, 2q} for the tested direction.
    double window_bound = 0.0;
    bool noise_limited = false;

    bool holds() const { return !vacuous && log_square <= log_bound && log_inverse <= log_bound; }
};

/// Lemma 3.2 at one qualifying level, along the contracted direction.
LemmaReport lemma_A_check(const MeromorphicPotential& pot, double E, const TorusPoint& theta,
                          const ContinuedFraction& cf, const IndexValue& delta, std::size_t level, double epsilon,
                          double L, Bits prec = 0);
/// Same, on matrices already computed at q_level.
LemmaReport lemma_A_check(const GordonMatrices& m, const ContinuedFraction& cf, const IndexValue& delta,
                          std::size_t level, double epsilon, double L);

struct DirectionResult {
    double angle = 0.0;
    bool contracted = false;
    double log_square = 0.0;
    double log_inverse = 0.0;
    double max_norm = 0.0;
    Verdict verdict = Verdict::Inconclusive;
};

/// Summary fields take the worst direction: largest lhs, smallest max_norm.
struct GordonCertificate {
    double E = 0.0;
    std::size_t level = 0;
    mpz_class q;
    double lhs_square = 0.0;
    double lhs_inverse = 0.0;
    double log_lhs_square = 0.0;
    double log_lhs_inverse = 0.0;
    double trace = 0.0;
    double max_norm = 0.0;
    /// min over directions of -ln(lhs) / q, the larger lhs counting.
    double empirical_rate = 0.0;
    double rate = 0.0;
    Bits precision = 0;
    bool noise_limited = false;
    Verdict verdict = Verdict::Inconclusive;
    std::vector<DirectionResult> directions;
};

struct ExclusionOptions {
    std::size_t directions = 360;
    Bits prec = 0;
    unsigned threads = 1;
    std::size_t budget = 1'000'000;
};

struct ExclusionReport {
    double E = 0.0;
    double rate = 0.0;
    std::vector<GordonCertificate> levels;
    Verdict verdict = Verdict::Inconclusive;
};

/// One level of the certificate from precomputed matrices.
GordonCertificate certify_level(const GordonMatrices& m, double E, std::size_t level, double c,
                                std::size_t directions = 360);

ExclusionReport exclusion_certificate(const MeromorphicPotential& pot, double E, const TorusPoint& theta,
                                      const ContinuedFraction& cf, const std::vector<std::size_t>& levels, double c,
                                      const ExclusionOptions& options = {});

}  // namespace qpspec
