#include "qpspec/cocycle.hpp"

#include "qpspec/error.hpp"
#include "qpspec/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qpspec {

namespace {

constexpr std::size_t kRenormEvery = 32;
constexpr double kOverflowGuard = 1e150;
constexpr Bits kOrbitBits = 128;

struct Accumulator {
    Mat2<double> m{1.0, 0.0, 0.0, 1.0};
    double log_scale = 0.0;
    std::size_t since = 0;

    void renormalize() {
        const double s = norm(m);
        if (s > 0.0 && std::isfinite(s)) {
            m = m * (1.0 / s);
            log_scale += std::log(s);
        }
        since = 0;
    }

    void check() {
        if (++since >= kRenormEvery || std::abs(m.a) > kOverflowGuard || std::abs(m.b) > kOverflowGuard ||
            std::abs(m.c) > kOverflowGuard || std::abs(m.d) > kOverflowGuard) {
            renormalize();
        }
    }

    void left(const Mat2<double>& s) {
        m = s * m;
        check();
    }

    void right(const Mat2<double>& s) {
        m = m * s;
        check();
    }
};

// Pole positions cached as doubles for the hot loops.
struct FastPotential {
    const MeromorphicPotential& pot;
    std::vector<double> t;
    std::vector<int> mult;

    explicit FastPotential(const MeromorphicPotential& p) : pot(p) {
        for (const Pole& pole : p.poles) {
            t.push_back(pole.location.to_double());
            mult.push_back(pole.multiplicity);
        }
    }

    double f(double xr) const {
        double v = pot.sign;
        for (std::size_t l = 0; l < t.size(); ++l) {
            const double s = 2.0 * std::sin(std::numbers::pi * (xr - t[l]));
            for (int k = 0; k < mult[l]; ++k) {
                v *= s;
            }
        }
        return v;
    }

    double g(double xr) const { return pot.g.eval(xr); }

    // Nearest pole; returns its index and writes the torus distance.
    std::size_t nearest(double xr, double& dist) const {
        std::size_t best = 0;
        dist = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < t.size(); ++l) {
            const double d = torus_norm(xr - t[l]);
            if (d < dist) {
                dist = d;
                best = l;
            }
        }
        return best;
    }

    double V(double xr, double floor, long long step) const {
        if (!t.empty()) {
            double dist = 0.0;
            const std::size_t l = nearest(xr, dist);
            if (dist <= floor) {
                throw PoleError(ErrorKind::PoleOnOrbit, l, step,
                                "orbit step " + std::to_string(step) + " within " + std::to_string(dist) +
                                    " of pole " + std::to_string(l));
            }
        }
        return g(xr) / f(xr);
    }

    Mat2<double> step(double E, double x, CocycleKind kind, double floor, long long j) const {
        const double xr = frac(x);
        if (kind == CocycleKind::A) {
            return {E - V(xr, floor, j), -1.0, 1.0, 0.0};
        }
        const double fv = f(xr);
        return {E * fv - g(xr), -fv, fv, 0.0};
    }

    Mat2<double> inverse(double E, double x, CocycleKind kind, double floor, long long j) const {
        const double xr = frac(x);
        if (kind == CocycleKind::A) {
            return {0.0, 1.0, -1.0, E - V(xr, floor, j)};
        }
        const double fv = f(xr);
        if (fv == 0.0) {
            throw PoleError(ErrorKind::PoleOnOrbit, 0, j, "D is singular at orbit step " + std::to_string(j));
        }
        const double inv = 1.0 / fv;
        return {0.0, inv, -inv, (E * fv - g(xr)) * inv * inv};
    }
};

TransferMatrix2 finish(const Accumulator& acc, CocycleKind kind, double log_det) {
    TransferMatrix2 out;
    out.entries = acc.m;
    out.kind = MatrixKind::Product;
    out.cocycle = kind;
    out.log_scale = acc.log_scale;
    out.log_det_expected = log_det;
    return out;
}

[[noreturn]] void rethrow_on_orbit(const PoleError& e, long long step) {
    throw PoleError(ErrorKind::PoleOnOrbit, e.pole(), step,
                    "pole on orbit at step " + std::to_string(step) + ": " + e.what());
}

}  // namespace

const char* to_string(CocycleKind kind) { return kind == CocycleKind::A ? "A" : "D"; }

const char* to_string(LyapunovMethod method) {
    return method == LyapunovMethod::PhaseAverage ? "phase-average" : "single-orbit";
}

double TransferMatrix2::det_defect() const {
    // relative to the scale of the entries, the accuracy a double product can have
    const double expected = std::exp(log_det_expected - 2.0 * log_scale);
    const double n = norm(entries);
    return std::abs(entries.det() - expected) / std::max(expected, n * n);
}

TransferMatrix2 step_A(const MeromorphicPotential& pot, double E, double x, double floor) {
    const PotentialValue<double> v = eval_V(pot, x, floor);
    if (v.near_pole) {
        throw PoleError(ErrorKind::PoleOnOrbit, *v.pole_index, 0,
                        "step at distance " + std::to_string(v.pole_distance) + " from a pole");
    }
    TransferMatrix2 out;
    out.entries = {E - v.value, -1.0, 1.0, 0.0};
    out.kind = MatrixKind::StepA;
    out.cocycle = CocycleKind::A;
    return out;
}

TransferMatrix2 step_D(const MeromorphicPotential& pot, double E, double x) {
    const double f = f_value(pot, x);
    const double g = g_value(pot, x);
    TransferMatrix2 out;
    out.entries = {E * f - g, -f, f, 0.0};
    out.kind = MatrixKind::StepD;
    out.cocycle = CocycleKind::D;
    out.log_det_expected = f == 0.0 ? -std::numeric_limits<double>::infinity() : 2.0 * std::log(std::abs(f));
    return out;
}

Mat2<Real> step_matrix(const MeromorphicPotential& pot, const Real& E, const Real& x, CocycleKind kind,
                       long long step) {
    const Real xr = frac(x);
    const Real zero(x.precision());
    const Real one(1.0, x.precision());
    if (kind == CocycleKind::A) {
        PotentialValue<Real> v = [&] {
            try {
                return eval_V(pot, xr);
            } catch (const PoleError& e) {
                rethrow_on_orbit(e, step);
            }
        }();
        if (v.near_pole) {
            throw PoleError(ErrorKind::PoleOnOrbit, *v.pole_index, step,
                            "orbit step " + std::to_string(step) + " within the pole floor");
        }
        return {E - v.value, -one, one, zero};
    }
    const Real f = f_value(pot, xr);
    return {E * f - g_value(pot, xr), -f, f, zero};
}

Mat2<Real> step_inverse(const MeromorphicPotential& pot, const Real& E, const Real& x, CocycleKind kind,
                        long long step) {
    const Mat2<Real> s = step_matrix(pot, E, x, kind, step);
    if (kind == CocycleKind::A) {
        return s.adjugate();
    }
    if (s.c.is_zero()) {
        throw PoleError(ErrorKind::PoleOnOrbit, 0, step, "D is singular at orbit step " + std::to_string(step));
    }
    return s.inverse();
}

TransferMatrix2 product(const MeromorphicPotential& pot, double E, const TorusPoint& x, const ContinuedFraction& cf,
                        long long n, CocycleKind kind, double floor) {
    const FastPotential fast(pot);
    Accumulator acc;
    double log_det = 0.0;
    const long long count = std::llabs(n);
    OrbitWalker walk(x, cf, n >= 0 ? 0 : -count, kOrbitBits);
    for (long long i = 0; i < count; ++i, walk.advance()) {
        const double y = walk.point().to_double();
        const long long j = walk.index();
        if (n >= 0) {
            acc.left(fast.step(E, y, kind, floor, j));
        } else {
            acc.right(fast.inverse(E, y, kind, floor, j));
        }
        if (kind == CocycleKind::D) {
            log_det += 2.0 * std::log(std::abs(fast.f(frac(y))));
        }
    }
    acc.renormalize();
    return finish(acc, kind, n >= 0 ? log_det : -log_det);
}

TransferMatrix2 product_inverse(const MeromorphicPotential& pot, double E, const TorusPoint& x,
                                const ContinuedFraction& cf, long long n, double floor) {
    if (n < 0) {
        throw Error(ErrorKind::InvalidInput, "product_inverse needs n >= 0");
    }
    const FastPotential fast(pot);
    Accumulator acc;
    OrbitWalker walk(x, cf, 0, kOrbitBits);
    for (long long i = 0; i < n; ++i, walk.advance()) {
        const double y = frac(walk.point().to_double());
        const double f = fast.f(y);
        // F / f with F = [[0, f], [-f, E f - g]]
        if (f == 0.0) {
            throw PoleError(ErrorKind::PoleOnOrbit, 0, i, "f vanishes at orbit step " + std::to_string(i));
        }
        if (!fast.t.empty()) {
            double dist = 0.0;
            const std::size_t l = fast.nearest(y, dist);
            if (dist <= floor) {
                throw PoleError(ErrorKind::PoleOnOrbit, l, i, "orbit step " + std::to_string(i) + " near a pole");
            }
        }
        acc.right({0.0, 1.0, -1.0, (E * f - fast.g(y)) / f});
    }
    acc.renormalize();
    return finish(acc, CocycleKind::A, 0.0);
}

Mat2<Real> product_real(const MeromorphicPotential& pot, const Real& E, const TorusPoint& x,
                        const ContinuedFraction& cf, long long n, CocycleKind kind, Bits prec) {
    const Real Ep = E.rounded(prec);
    Mat2<Real> m = Mat2<Real>::identity(Ep);
    const long long count = std::llabs(n);
    OrbitWalker walk(x, cf, n >= 0 ? 0 : -count, prec);
    for (long long i = 0; i < count; ++i, walk.advance()) {
        if (n >= 0) {
            m = step_matrix(pot, Ep, walk.point(), kind, walk.index()) * m;
        } else {
            m = m * step_inverse(pot, Ep, walk.point(), kind, walk.index());
        }
    }
    return m;
}

Mat2<Real> product_inverse_real(const MeromorphicPotential& pot, const Real& E, const TorusPoint& x,
                                const ContinuedFraction& cf, long long n, Bits prec) {
    const Real Ep = E.rounded(prec);
    Mat2<Real> m = Mat2<Real>::identity(Ep);
    OrbitWalker walk(x, cf, 0, prec);
    for (long long i = 0; i < n; ++i, walk.advance()) {
        m = m * step_inverse(pot, Ep, walk.point(), CocycleKind::A, i);
    }
    return m;
}

std::vector<double> rotation_orbit(const ContinuedFraction& cf, std::size_t n) {
    std::vector<double> out;
    out.reserve(n);
    OrbitWalker walk(TorusPoint(), cf, 0, kOrbitBits);
    for (std::size_t j = 0; j < n; ++j, walk.advance()) {
        out.push_back(walk.point().to_double());
    }
    return out;
}

double log_growth(const MeromorphicPotential& pot, double E, double x, const std::vector<double>& orbit,
                  CocycleKind kind, double floor) {
    if (orbit.empty()) {
        throw Error(ErrorKind::InvalidInput, "log_growth needs n >= 1");
    }
    const FastPotential fast(pot);
    Accumulator acc;
    for (std::size_t j = 0; j < orbit.size(); ++j) {
        acc.left(fast.step(E, x + orbit[j], kind, floor, static_cast<long long>(j)));
    }
    const double growth = acc.log_scale + std::log(norm(acc.m));
    if (!std::isfinite(growth)) {
        throw Error(ErrorKind::Numeric, "non-finite cocycle growth at E = " + std::to_string(E));
    }
    return growth / static_cast<double>(orbit.size());
}

LyapunovEstimate lyapunov(const MeromorphicPotential& pot, double E, const ContinuedFraction& cf,
                          const LyapunovOptions& options) {
    return lyapunov(pot, E, rotation_orbit(cf, options.n), options);
}

LyapunovEstimate lyapunov(const MeromorphicPotential& pot, double E, const std::vector<double>& orbit,
                          const LyapunovOptions& options) {
    if (orbit.empty() || options.grid == 0) {
        throw Error(ErrorKind::InvalidInput, "lyapunov needs n >= 1 and grid >= 1");
    }
    const std::size_t K = options.grid;
    const double K_d = static_cast<double>(K);
    // Irrational nudge for grid phases whose orbit runs into a pole.
    const double nudge = 1.0 / (K_d * (1.0 + std::numbers::sqrt3));
    const double floor = options.kind == CocycleKind::A ? options.floor : 0.0;

    auto growth_from = [&](double x, std::size_t& shifts) {
        for (int attempt = 0; attempt < 16; ++attempt) {
            try {
                return log_growth(pot, E, x + attempt * nudge / 16.0, orbit, options.kind, floor);
            } catch (const PoleError&) {
                ++shifts;
            }
        }
        throw Error(ErrorKind::Numeric, "could not move phase " + std::to_string(x) + " off the pole orbits");
    };

    std::vector<double> per_phase(K);
    std::vector<std::size_t> shifts(K, 0);
    parallel_for(K, options.threads, [&](std::size_t k) {
        per_phase[k] = growth_from((static_cast<double>(k) + 0.5) / K_d, shifts[k]);
    });
    double sum = 0.0;
    std::size_t shifted = 0;
    for (std::size_t k = 0; k < K; ++k) {
        sum += per_phase[k];
        shifted += shifts[k] > 0 ? 1 : 0;
    }
    std::size_t single_shifts = 0;

    LyapunovEstimate out;
    out.E = E;
    out.n = orbit.size();
    out.method = options.method;
    out.kind = options.kind;
    out.phases_used = K;
    out.phase_average = sum / K_d;
    out.single_orbit = growth_from(options.x0, single_shifts);
    out.discrepancy = std::abs(out.phase_average - out.single_orbit);
    out.shifted_phases = shifted;
    out.value = options.method == LyapunovMethod::PhaseAverage ? out.phase_average : out.single_orbit;
    return out;
}

double UniformBoundReport::max_matrix_excess() const {
    double best = -std::numeric_limits<double>::infinity();
    for (double v : matrix_excess) {
        best = std::max(best, v);
    }
    return best;
}

double UniformBoundReport::max_scalar_excess() const {
    double best = -std::numeric_limits<double>::infinity();
    for (double v : scalar_excess) {
        if (!std::isnan(v)) {
            best = std::max(best, v);
        }
    }
    return best;
}

bool UniformBoundReport::holds(double C) const {
    const double slack = std::log(C) / static_cast<double>(n);
    return max_matrix_excess() <= slack && max_scalar_excess() <= slack;
}

UniformBoundReport uniform_bound_check(const MeromorphicPotential& pot, double E, const ContinuedFraction& cf,
                                       std::size_t n, double epsilon, const std::vector<double>& sample_x, double L) {
    UniformBoundReport out;
    out.L = L;
    out.epsilon = epsilon;
    out.n = n;
    out.log_f_integral = log_f_integral(pot);
    out.x = sample_x;
    const std::vector<double> orbit = rotation_orbit(cf, n);
    const FastPotential fast(pot);
    for (double x : sample_x) {
        out.matrix_excess.push_back(log_growth(pot, E, x, orbit, CocycleKind::D) - (L + epsilon));
        double log_prod = 0.0;
        bool pole_window = false;
        for (double u : orbit) {
            const double y = frac(x + u);
            double dist = std::numeric_limits<double>::infinity();
            if (!fast.t.empty()) {
                fast.nearest(y, dist);
            }
            if (dist <= kDefaultPoleFloor) {
                pole_window = true;
                break;
            }
            log_prod += std::log(std::abs(fast.f(y)));
        }
        out.scalar_excess.push_back(pole_window ? std::numeric_limits<double>::quiet_NaN()
                                                : log_prod / static_cast<double>(n) -
                                                      (out.log_f_integral + epsilon));
    }
    return out;
}

}  // namespace qpspec
