#include "qpspec/potential.hpp"

#include "qpspec/error.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace qpspec {

namespace {

constexpr double kPi = std::numbers::pi;

struct NamedShape {
    const char* name;
    double (*eval)(double);
    Real (*eval_real)(const Real&);
    double lipschitz;  // of the unscaled shape
};

const NamedShape kShapes[] = {
    {"cos2pi", [](double x) { return std::cos(2 * kPi * x); },
     [](const Real& x) { return cos(2.0 * Real::pi(x.precision()) * x); }, 2 * kPi},
    {"sin2pi", [](double x) { return std::sin(2 * kPi * x); },
     [](const Real& x) { return sin(2.0 * Real::pi(x.precision()) * x); }, 2 * kPi},
    {"cospi", [](double x) { return std::cos(kPi * x); }, [](const Real& x) { return cos(Real::pi(x.precision()) * x); },
     kPi},
    {"sinpi", [](double x) { return std::sin(kPi * x); }, [](const Real& x) { return sin(Real::pi(x.precision()) * x); },
     kPi},
    {"const", [](double) { return 1.0; }, [](const Real& x) { return Real(1.0, x.precision()); }, 0.0},
};

template <class T>
T torus_distance(const T& x, const T& pole) {
    return torus_norm(x - pole);
}

std::size_t nearest_pole(const MeromorphicPotential& pot, double x, double& dist) {
    std::size_t best = 0;
    dist = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < pot.poles.size(); ++l) {
        double d = torus_distance(x, pot.poles[l].location.to_double());
        if (d < dist) {
            dist = d;
            best = l;
        }
    }
    return best;
}

std::size_t nearest_pole(const MeromorphicPotential& pot, const Real& x, Real& dist) {
    std::size_t best = 0;
    dist = Real::infinity(1, x.precision());
    for (std::size_t l = 0; l < pot.poles.size(); ++l) {
        Real d = torus_distance(x, pot.poles[l].location.value(x.precision()));
        if (d < dist) {
            dist = d;
            best = l;
        }
    }
    return best;
}

[[noreturn]] void throw_pole_hit(const MeromorphicPotential& pot, std::size_t l) {
    throw PoleError(ErrorKind::Pole, l, 0,
                    "V evaluated exactly at pole " + std::to_string(l) + " (theta_l = " +
                        pot.poles[l].location.str() + ")");
}

}  // namespace

GFunction named_g(const std::string& name, double coupling) {
    for (const NamedShape& s : kShapes) {
        if (name == s.name) {
            auto eval = s.eval;
            auto eval_real = s.eval_real;
            return GFunction{
                name,
                std::abs(coupling) * s.lipschitz,
                [eval, coupling](double x) { return coupling * eval(x); },
                [eval_real, coupling](const Real& x) { return eval_real(x) * coupling; },
            };
        }
    }
    throw Error(ErrorKind::InvalidInput, "unknown g function '" + name + "'");
}

std::vector<std::string> g_registry_names() {
    std::vector<std::string> names;
    for (const NamedShape& s : kShapes) {
        names.emplace_back(s.name);
    }
    return names;
}

MeromorphicPotential make_amo(double lambda) {
    MeromorphicPotential pot;
    pot.label = "amo";
    pot.g = named_g("cos2pi", lambda);
    pot.coupling = lambda;
    return pot;
}

MeromorphicPotential make_maryland(double lambda) {
    if (lambda == 0.0) {
        throw Error(ErrorKind::DegenerateModel, "Maryland model needs lambda != 0");
    }
    MeromorphicPotential pot;
    pot.label = "maryland";
    pot.poles.push_back(Pole{TorusPoint(mpq_class(1, 2)), 1});
    pot.g = named_g("sinpi", 2.0 * lambda);
    // 2 sin pi(x - 1/2) = -2 cos pi x
    pot.sign = -1;
    pot.coupling = lambda;
    return pot;
}

MeromorphicPotential make_custom(std::vector<Pole> poles, GFunction g, std::string label) {
    for (const Pole& p : poles) {
        if (p.multiplicity < 1) {
            throw Error(ErrorKind::InvalidInput, "pole multiplicity must be >= 1");
        }
    }
    MeromorphicPotential pot;
    pot.label = std::move(label);
    pot.poles = std::move(poles);
    pot.g = std::move(g);
    return pot;
}

MeromorphicPotential make_constant(double c) {
    MeromorphicPotential pot;
    pot.label = "constant";
    pot.g = named_g("const", c);
    pot.coupling = c;
    return pot;
}

Real pole_floor_for(Bits prec) {
    Real floor(1.0, prec);
    mpfr_div_2ui(floor.get(), floor.get(), static_cast<unsigned long>(3 * prec / 4), MPFR_RNDN);
    return min(floor, Real(kDefaultPoleFloor, prec));
}

double f_value(const MeromorphicPotential& pot, double x) {
    const double xr = frac(x);
    double f = pot.sign;
    for (const Pole& p : pot.poles) {
        const double s = 2.0 * std::sin(kPi * (xr - p.location.to_double()));
        for (int k = 0; k < p.multiplicity; ++k) {
            f *= s;
        }
    }
    return f;
}

Real f_value(const MeromorphicPotential& pot, const Real& x) {
    const Bits prec = x.precision();
    const Real xr = frac(x);
    Real f(static_cast<long>(pot.sign), prec);
    for (const Pole& p : pot.poles) {
        Real s = sin(Real::pi(prec) * (xr - p.location.value(prec))) * 2.0;
        for (int k = 0; k < p.multiplicity; ++k) {
            f *= s;
        }
    }
    return f;
}

double g_value(const MeromorphicPotential& pot, double x) { return pot.g.eval(frac(x)); }

Real g_value(const MeromorphicPotential& pot, const Real& x) { return pot.g.eval_real(frac(x)); }

double f_abs(const MeromorphicPotential& pot, double x) { return std::abs(f_value(pot, x)); }

Real f_abs(const MeromorphicPotential& pot, const Real& x) { return abs(f_value(pot, x)); }

Real log_f_abs(const MeromorphicPotential& pot, const Real& x) {
    const Bits prec = x.precision();
    Real sum(prec);
    for (const Pole& p : pot.poles) {
        Real d = torus_distance(x, p.location.value(prec));
        if (d.is_zero()) {
            return Real::infinity(-1, prec);
        }
        Real term = log(sin(Real::pi(prec) * d) * 2.0);
        term *= static_cast<double>(p.multiplicity);
        sum += term;
    }
    return sum;
}

double f_abs_complex(const MeromorphicPotential& pot, double x) {
    std::complex<double> prod = 1.0;
    const std::complex<double> z = std::polar(1.0, 2 * kPi * x);
    for (const Pole& p : pot.poles) {
        const std::complex<double> w = std::polar(1.0, 2 * kPi * p.location.to_double());
        for (int k = 0; k < p.multiplicity; ++k) {
            prod *= z - w;
        }
    }
    return std::abs(prod);
}

PotentialValue<double> eval_V(const MeromorphicPotential& pot, double x, double floor) {
    PotentialValue<double> out{0.0, false, std::numeric_limits<double>::infinity(), std::nullopt};
    if (!pot.poles.empty()) {
        double dist = 0.0;
        const std::size_t l = nearest_pole(pot, x, dist);
        out.pole_distance = dist;
        out.pole_index = l;
        if (dist == 0.0) {
            throw_pole_hit(pot, l);
        }
        out.near_pole = dist <= floor;
    }
    out.value = g_value(pot, x) / f_value(pot, x);
    return out;
}

PotentialValue<Real> eval_V(const MeromorphicPotential& pot, const Real& x, const Real& floor) {
    PotentialValue<Real> out{Real(x.precision()), false, Real::infinity(1, x.precision()), std::nullopt};
    if (!pot.poles.empty()) {
        const std::size_t l = nearest_pole(pot, x, out.pole_distance);
        out.pole_index = l;
        if (out.pole_distance.is_zero()) {
            throw_pole_hit(pot, l);
        }
        out.near_pole = out.pole_distance <= floor;
    }
    out.value = g_value(pot, x) / f_value(pot, x);
    return out;
}

PotentialValue<Real> eval_V(const MeromorphicPotential& pot, const Real& x) {
    return eval_V(pot, x, pole_floor_for(x.precision()));
}

PotentialValue<Real> eval_V(const MeromorphicPotential& pot, const TorusPoint& x, Bits prec) {
    if (x.exact()) {
        for (std::size_t l = 0; l < pot.poles.size(); ++l) {
            const TorusPoint& p = pot.poles[l].location;
            if (p.exact() && *p.rational() == *x.rational()) {
                throw_pole_hit(pot, l);
            }
        }
    }
    return eval_V(pot, x.value(prec));
}

double log_f_integral(const MeromorphicPotential& pot) {
    if (pot.poles.empty()) {
        return 0.0;
    }
    std::vector<double> cuts{0.0, 1.0};
    for (const Pole& p : pot.poles) {
        cuts.push_back(frac(p.location.to_double()));
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    boost::math::quadrature::tanh_sinh<double> integrator;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double b = cuts[i + 1];
        // xc carries the distance to the nearer endpoint without cancellation
        auto integrand = [&](double x, double xc) {
            const double da = xc < 0 ? -xc : x - a;
            const double db = xc > 0 ? xc : b - x;
            double sum = 0.0;
            for (const Pole& p : pot.poles) {
                const double t = frac(p.location.to_double());
                double d;
                if (t == a || (a == 0.0 && t == 0.0)) {
                    d = da;
                } else if (t == b || (b == 1.0 && t == 0.0)) {
                    d = db;
                } else {
                    d = torus_norm(x - t);
                }
                sum += p.multiplicity * std::log(2.0 * std::sin(kPi * std::min(d, 1.0 - d)));
            }
            return sum;
        };
        total += integrator.integrate(integrand, a, b, 1e-12);
    }
    return total;
}

std::vector<std::size_t> spurious_poles(const MeromorphicPotential& pot, double tol) {
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < pot.poles.size(); ++l) {
        if (std::abs(g_value(pot, pot.poles[l].location.to_double())) <= tol) {
            out.push_back(l);
        }
    }
    return out;
}

FProductCheck f_product_check(const MeromorphicPotential& pot, const TorusPoint& theta, const ContinuedFraction& cf,
                              std::size_t level, double epsilon, std::size_t budget) {
    const IndexValue delta = delta_index(cf, theta, pot.poles);
    return f_product_check(pot, theta, cf, delta, level, epsilon, budget);
}

FProductCheck f_product_check(const MeromorphicPotential& pot, const TorusPoint& theta, const ContinuedFraction& cf,
                              const IndexValue& delta, std::size_t level, double epsilon, std::size_t budget) {
    if (level >= delta.per_level.size()) {
        throw Error(ErrorKind::Range, "level " + std::to_string(level) + " has no delta term");
    }
    require_window(cf, level, budget);
    if (!(delta.per_level[level] > delta.value - epsilon / 4.0)) {
        throw Error(ErrorKind::Subsequence, "level " + std::to_string(level) + " is not in the qualifying subsequence (" +
                                                std::to_string(delta.per_level[level]) + " <= " +
                                                std::to_string(delta.value) + " - epsilon/4)");
    }
    FProductCheck out;
    out.level = level;
    out.q = cf.q(level);
    out.trivial = pot.poles.empty();
    out.log_bound = cf.q(level).get_d() * (delta.value - epsilon) - log_integer(cf.q(level + 1), 128).to_double();
    if (out.trivial) {
        return out;
    }
    const std::size_t q = cf.q(level).get_ui();
    OrbitWalker walk(theta, cf, 0, cf.precision());
    Real sum(128);
    for (std::size_t j = 0; j < q; ++j, walk.advance()) {
        sum += log_f_abs(pot, walk.point());
    }
    out.log_lhs = sum.to_double();
    return out;
}

}  // namespace qpspec
