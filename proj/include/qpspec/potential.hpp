#pragma once

#include "qpspec/arithmetic.hpp"
#include "qpspec/real.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qpspec {

/// The regular numerator g of V = g / f. Both evaluators must describe the
/// same function; the Lipschitz constant is declared, never verified.
struct GFunction {
    std::string name;
    double lipschitz = 0.0;
    std::function<double(double)> eval;
    std::function<Real(const Real&)> eval_real;
};

/// coupling * h(x) for a registered h: cos2pi, sin2pi, cospi, sinpi, const.
GFunction named_g(const std::string& name, double coupling);
std::vector<std::string> g_registry_names();

/// V = g / f with f(x) = sign * prod_l (2 sin pi(x - theta_l))^{m_l}, x taken in [0, 1).
/// |f| then matches prod_l |e^{2 pi i x} - e^{2 pi i theta_l}|^{m_l}.
struct MeromorphicPotential {
    std::string label;
    std::vector<Pole> poles;
    GFunction g;
    int sign = 1;
    double coupling = 0.0;

    int pole_total() const { return pole_count(poles); }
    bool regular() const { return poles.empty(); }
};

MeromorphicPotential make_amo(double lambda);
/// V = lambda tan(pi x): pole at 1/2, f = 2 cos(pi x), g = 2 lambda sin(pi x).
MeromorphicPotential make_maryland(double lambda);
MeromorphicPotential make_custom(std::vector<Pole> poles, GFunction g, std::string label = "custom");
/// V == c, implemented as a pole-free potential with g constant.
MeromorphicPotential make_constant(double c);

inline constexpr double kDefaultPoleFloor = 1e-12;

/// Pole floor matched to a working precision: 2^{-3 bits / 4}, never above the default.
Real pole_floor_for(Bits prec);

template <class T>
struct PotentialValue {
    T value;
    bool near_pole = false;
    /// Torus distance to the nearest pole (infinite when m = 0).
    T pole_distance;
    std::optional<std::size_t> pole_index;
};

/// Throws PoleError when x sits exactly on a pole.
PotentialValue<double> eval_V(const MeromorphicPotential& pot, double x, double floor = kDefaultPoleFloor);
PotentialValue<Real> eval_V(const MeromorphicPotential& pot, const Real& x);
PotentialValue<Real> eval_V(const MeromorphicPotential& pot, const Real& x, const Real& floor);
PotentialValue<Real> eval_V(const MeromorphicPotential& pot, const TorusPoint& x, Bits prec = kDefaultBits);

double f_value(const MeromorphicPotential& pot, double x);
Real f_value(const MeromorphicPotential& pot, const Real& x);
double g_value(const MeromorphicPotential& pot, double x);
Real g_value(const MeromorphicPotential& pot, const Real& x);

double f_abs(const MeromorphicPotential& pot, double x);
Real f_abs(const MeromorphicPotential& pot, const Real& x);
/// ln|f(x)|; -inf exactly at a pole.
Real log_f_abs(const MeromorphicPotential& pot, const Real& x);
/// |prod_l (e^{2 pi i x} - e^{2 pi i theta_l})^{m_l}| in complex double arithmetic.
double f_abs_complex(const MeromorphicPotential& pot, double x);

/// integral over [0, 1) of ln|f|, split at the poles, tanh-sinh on each piece.
double log_f_integral(const MeromorphicPotential& pot);

/// Poles whose g also vanishes there (to within tol); such a pole is spurious.
std::vector<std::size_t> spurious_poles(const MeromorphicPotential& pot, double tol = 1e-12);

struct FProductCheck {
    std::size_t level = 0;
    mpz_class q;
    double log_lhs = 0.0;
    double log_bound = 0.0;
    /// m = 0: the product is identically 1 and the inequality carries no content.
    bool trivial = false;
    bool holds() const { return log_lhs >= log_bound; }
};

/// ln prod_{j < q_n} |f(theta + j alpha)| against q_n (delta_hat - epsilon) - ln q_{n+1}.
/// The level must qualify: per_level(delta) > delta_hat - epsilon / 4, else Subsequence.
FProductCheck f_product_check(const MeromorphicPotential& pot, const TorusPoint& theta, const ContinuedFraction& cf,
                              std::size_t level, double epsilon, std::size_t budget = kDefaultStepBudget);
FProductCheck f_product_check(const MeromorphicPotential& pot, const TorusPoint& theta, const ContinuedFraction& cf,
                              const IndexValue& delta, std::size_t level, double epsilon,
                              std::size_t budget = kDefaultStepBudget);

}  // namespace qpspec
