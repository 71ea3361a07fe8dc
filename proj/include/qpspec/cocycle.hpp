#pragma once

#include "qpspec/arithmetic.hpp"
#include "qpspec/mat2.hpp"
#include "qpspec/potential.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace qpspec {

/// A: [[E - V, -1], [1, 0]], unimodular. D = f A: [[E f - g, -f], [f, 0]], pole free.
enum class CocycleKind { A, D };
enum class MatrixKind { StepA, StepD, Product };

const char* to_string(CocycleKind kind);

/// The matrix e^{log_scale} * entries. Long products are renormalized, so the
/// entries alone usually have norm near 1.
struct TransferMatrix2 {
    Mat2<double> entries{1.0, 0.0, 0.0, 1.0};
    MatrixKind kind = MatrixKind::Product;
    CocycleKind cocycle = CocycleKind::A;
    double log_scale = 0.0;
    /// ln|det| the matrix must have: 0 for A-kind, sum of 2 ln|f| for D-kind.
    double log_det_expected = 0.0;

    double log_norm() const { return log_scale + std::log(norm(entries)); }
    /// Entries with the scale applied; overflows for long hyperbolic products.
    Mat2<double> value() const { return entries * std::exp(log_scale); }
    /// |det - det_expected| / max(|det_expected|, ||M||^2).
    double det_defect() const;
};

TransferMatrix2 step_A(const MeromorphicPotential& pot, double E, double x, double floor = kDefaultPoleFloor);
TransferMatrix2 step_D(const MeromorphicPotential& pot, double E, double x);

/// Single steps in MPFR. For A-kind a near-pole point (distance <= floor)
/// throws PoleError(PoleOnOrbit) carrying the step index.
Mat2<Real> step_matrix(const MeromorphicPotential& pot, const Real& E, const Real& x, CocycleKind kind,
                       long long step = 0);
Mat2<Real> step_inverse(const MeromorphicPotential& pot, const Real& E, const Real& x, CocycleKind kind,
                        long long step = 0);

/// M_n(x) = M(x + (n-1) alpha) ... M(x) for n >= 0 and
/// M_{-n}(x) = M_n(x - n alpha)^{-1} = M(x - n alpha)^{-1} ... M(x - alpha)^{-1},
/// the latter assembled from single-step inverses.
TransferMatrix2 product(const MeromorphicPotential& pot, double E, const TorusPoint& x, const ContinuedFraction& cf,
                        long long n, CocycleKind kind = CocycleKind::A, double floor = kDefaultPoleFloor);

/// (A_n(x))^{-1} = A^{-1}(x) A^{-1}(x + alpha) ... A^{-1}(x + (n-1) alpha), each
/// inverse taken as F / f with F = [[0, f], [-f, E f - g]].
TransferMatrix2 product_inverse(const MeromorphicPotential& pot, double E, const TorusPoint& x,
                                const ContinuedFraction& cf, long long n, double floor = kDefaultPoleFloor);

Mat2<Real> product_real(const MeromorphicPotential& pot, const Real& E, const TorusPoint& x,
                        const ContinuedFraction& cf, long long n, CocycleKind kind, Bits prec);
Mat2<Real> product_inverse_real(const MeromorphicPotential& pot, const Real& E, const TorusPoint& x,
                                const ContinuedFraction& cf, long long n, Bits prec);

/// frac(j alpha) for j = 0 .. n-1 in double, from exact residues.
std::vector<double> rotation_orbit(const ContinuedFraction& cf, std::size_t n);

enum class LyapunovMethod { PhaseAverage, SingleOrbit };
const char* to_string(LyapunovMethod method);

struct LyapunovOptions {
    std::size_t n = 10000;
    std::size_t grid = 64;
    double x0 = 0.41421356237309504880;  // sqrt(2) - 1
    LyapunovMethod method = LyapunovMethod::PhaseAverage;
    CocycleKind kind = CocycleKind::D;
    /// Pole floor for A-kind runs; grid phases whose orbit comes closer are shifted.
    double floor = 1e-14;
    unsigned threads = 1;
};

struct LyapunovEstimate {
    double E = 0.0;
    double value = 0.0;
    std::size_t n = 0;
    LyapunovMethod method = LyapunovMethod::PhaseAverage;
    CocycleKind kind = CocycleKind::D;
    std::size_t phases_used = 0;
    double phase_average = 0.0;
    double single_orbit = 0.0;
    double discrepancy = 0.0;
    /// Grid phases moved off a pole orbit (A-kind only).
    std::size_t shifted_phases = 0;
};

LyapunovEstimate lyapunov(const MeromorphicPotential& pot, double E, const ContinuedFraction& cf,
                          const LyapunovOptions& options = {});
/// Same, reusing a precomputed rotation_orbit(cf, options.n).
LyapunovEstimate lyapunov(const MeromorphicPotential& pot, double E, const std::vector<double>& orbit,
                          const LyapunovOptions& options = {});

/// (1/n) ln ||M_n(x)|| along one orbit, renormalized every 32 steps.
double log_growth(const MeromorphicPotential& pot, double E, double x, const std::vector<double>& orbit,
                  CocycleKind kind, double floor = kDefaultPoleFloor);

struct UniformBoundReport {
    double L = 0.0;
    double epsilon = 0.0;
    std::size_t n = 0;
    double log_f_integral = 0.0;
    std::vector<double> x;
    /// ln ||D_n(x)|| / n - (L + epsilon)
    std::vector<double> matrix_excess;
    /// (1/n) ln prod_j |f(x + j alpha)| - (int ln|f| + epsilon); NaN where the window meets a pole.
    std::vector<double> scalar_excess;

    double max_matrix_excess() const;
    double max_scalar_excess() const;
    /// Every excess <= ln(C) / n.
    bool holds(double C) const;
};

UniformBoundReport uniform_bound_check(const MeromorphicPotential& pot, double E, const ContinuedFraction& cf,
                                       std::size_t n, double epsilon, const std::vector<double>& sample_x, double L);

}  // namespace qpspec
