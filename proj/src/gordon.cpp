#include "qpspec/gordon.hpp"

#include "qpspec/error.hpp"
#include "qpspec/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qpspec {

namespace {

constexpr double kLn2 = std::numbers::ln2;

Real log_norm(const Vec2<Real>& v) {
    Real n = norm(v);
    return n.is_zero() ? Real::infinity(-1, n.precision()) : log(n);
}

double log_norm_d(const Vec2<Real>& v) { return log_norm(v).to_double(); }

Bits round_bits(double bits) {
    const auto b = static_cast<Bits>(std::ceil(bits / 64.0)) * 64;
    return std::max<Bits>(b, 128);
}

// V(theta + j alpha) for j in [first, first + count), at prec bits.
std::vector<Real> potential_window(const MeromorphicPotential& pot, const TorusPoint& theta,
                                   const ContinuedFraction& cf, long long first, long long count, Bits prec) {
    std::vector<Real> out;
    out.reserve(static_cast<std::size_t>(count));
    const Real floor = pole_floor_for(prec);
    OrbitWalker walk(theta, cf, first, prec);
    for (long long i = 0; i < count; ++i, walk.advance()) {
        PotentialValue<Real> v{Real(prec), false, Real(prec), std::nullopt};
        try {
            v = eval_V(pot, walk.point(), floor);
        } catch (const PoleError& e) {
            throw PoleError(ErrorKind::PoleOnOrbit, e.pole(), walk.index(),
                            "pole on the orbit window at step " + std::to_string(walk.index()));
        }
        if (v.near_pole) {
            throw PoleError(ErrorKind::PoleOnOrbit, *v.pole_index, walk.index(),
                            "orbit step " + std::to_string(walk.index()) + " within the pole floor (window [" +
                                std::to_string(first) + ", " + std::to_string(first + count - 1) + "])");
        }
        out.push_back(std::move(v.value));
    }
    return out;
}

// m <- [[e, -1], [1, 0]] m
void left_step(Mat2<Real>& m, const Real& e) {
    Real a = e * m.a - m.c;
    Real b = e * m.b - m.d;
    m.c = std::move(m.a);
    m.d = std::move(m.b);
    m.a = std::move(a);
    m.b = std::move(b);
}

// m <- m [[0, 1], [-1, e]], the inverse step
void right_inverse_step(Mat2<Real>& m, const Real& e) {
    Real a = -m.b;
    Real b = m.a + e * m.b;
    Real c = -m.d;
    Real d = m.c + e * m.d;
    m = {std::move(a), std::move(b), std::move(c), std::move(d)};
}

// Rough ln ||A_q(theta)|| from a double-precision run, used only to size the
// working precision.
double estimate_log_norm(const MeromorphicPotential& pot, double E, const TorusPoint& theta,
                         const ContinuedFraction& cf, long long q) {
    try {
        return std::max(0.0, product(pot, E, theta, cf, q, CocycleKind::A, 0.0).log_norm());
    } catch (const std::exception&) {
        return 0.0;
    }
}

// ln q_{n+1} (plus a margin) when q = q_n: the scale of the shift q alpha
// that the Gordon differences measure.
double level_resolve(const ContinuedFraction& cf, long long q) {
    for (std::size_t n = 0; n < cf.depth(); ++n) {
        if (cf.q(n) == static_cast<long>(q) && cf.q(n + 1) != static_cast<long>(q)) {
            return log_integer(cf.q(n + 1), 64).to_double() + 64.0 * kLn2;
        }
    }
    return static_cast<double>(cf.precision()) * kLn2 / 2.0;
}

}  // namespace

const char* to_string(Verdict v) { return v == Verdict::Excluded ? "excluded" : "inconclusive"; }

const Real& SolutionSegment::phi(long long k) const {
    if (k < first || k > last()) {
        throw Error(ErrorKind::Range, "phi_" + std::to_string(k) + " lies outside the segment [" +
                                          std::to_string(first) + ", " + std::to_string(last()) + "]");
    }
    return values[static_cast<std::size_t>(k - first)];
}

Real SolutionSegment::pair_norm(long long k) const { return norm(Vec2<Real>{phi(k), phi(k - 1)}); }

double SolutionSegment::max_residual(const MeromorphicPotential& pot, const ContinuedFraction& cf) const {
    if (values.size() < 3) {
        return 0.0;
    }
    const Bits prec = values.front().precision();
    const Real Ep(E, prec);
    const std::vector<Real> V =
        potential_window(pot, theta, cf, first + 1, static_cast<long long>(values.size()) - 2, prec);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < values.size(); ++i) {
        const Real& prev = values[i - 1];
        const Real& cur = values[i];
        const Real& next = values[i + 1];
        const Real& v = V[i - 1];
        Real r = abs(next + prev + v * cur - Ep * cur);
        Real scale = abs(next) + abs(prev) + abs(v * cur) + abs(Ep * cur);
        if (!scale.is_zero()) {
            worst = std::max(worst, (r / scale).to_double());
        }
    }
    return worst;
}

SolutionSegment solve_recurrence(const MeromorphicPotential& pot, double E, const TorusPoint& theta,
                                 const ContinuedFraction& cf, Vec2<double> initial, long long lo, long long hi,
                                 Bits prec) {
    if (lo > -1 || hi < 0) {
        throw Error(ErrorKind::InvalidInput, "solve_recurrence needs lo <= -1 and hi >= 0");
    }
    const double len = std::hypot(initial.x, initial.y);
    if (!(len > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "initial vector must be nonzero");
    }
    if (prec == 0) {
        const long long reach = std::max(-lo, hi);
        const double growth = estimate_log_norm(pot, E, theta, cf, reach);
        prec = round_bits(static_cast<double>(cf.precision()) + (2.0 * growth) / kLn2 + 64);
    }
    const Real Ep(E, prec);
    SolutionSegment seg;
    seg.E = E;
    seg.theta = theta;
    seg.initial = {Real(initial.x / len, prec), Real(initial.y / len, prec)};

    // forward: phi_{k+1} = (E - V_k) phi_k - phi_{k-1}
    std::vector<Real> forward{seg.initial.y, seg.initial.x};
    OrbitWalker walk(theta, cf, 0, prec);
    const Real floor = pole_floor_for(prec);
    auto potential_at = [&](const Real& x, long long k) -> std::optional<Real> {
        try {
            PotentialValue<Real> v = eval_V(pot, x, floor);
            if (!v.near_pole) {
                return v.value;
            }
        } catch (const PoleError&) {
        }
        seg.truncated = "pole at orbit step " + std::to_string(k);
        return std::nullopt;
    };
    for (long long k = 0; k < hi; ++k, walk.advance()) {
        const std::optional<Real> v = potential_at(walk.point(), k);
        if (!v) {
            break;
        }
        const std::size_t n = forward.size();
        forward.push_back((Ep - *v) * forward[n - 1] - forward[n - 2]);
    }
    // backward: phi_{k-1} = (E - V_k) phi_k - phi_{k+1}
    std::vector<Real> backward{seg.initial.x, seg.initial.y};
    for (long long k = -1; k > lo; --k) {
        const Real x = orbit_point(theta, cf, k, prec);
        const std::optional<Real> v = potential_at(x, k);
        if (!v) {
            break;
        }
        const std::size_t n = backward.size();
        backward.push_back((Ep - *v) * backward[n - 1] - backward[n - 2]);
    }
    seg.first = -static_cast<long long>(backward.size()) + 1;
    seg.values.reserve(backward.size() + forward.size() - 2);
    for (auto it = backward.rbegin(); it != backward.rend(); ++it) {
        seg.values.push_back(*it);
    }
    for (std::size_t i = 2; i < forward.size(); ++i) {
        seg.values.push_back(forward[i]);
    }
    return seg;
}

GordonMatrices gordon_matrices(const MeromorphicPotential& pot, double E, const TorusPoint& theta,
                               const ContinuedFraction& cf, long long q, Bits prec, double resolve) {
    if (q < 1) {
        throw Error(ErrorKind::InvalidInput, "Gordon scale q must be >= 1");
    }
    if (prec == 0) {
        if (resolve <= 0.0) {
            resolve = level_resolve(cf, q);
        }
        const double growth = estimate_log_norm(pot, E, theta, cf, q);
        prec = round_bits((resolve + 2.0 * growth + std::log(8.0 * q)) / kLn2 + 64);
    }
    const Real Ep(E, prec);
    // V at theta + j alpha, j in [-q, 2q)
    const std::vector<Real> V = potential_window(pot, theta, cf, -q, 3 * q, prec);
    auto e_at = [&](long long j) { return Ep - V[static_cast<std::size_t>(j + q)]; };

    GordonMatrices m;
    m.q = q;
    m.prec = prec;
    m.Aq = Mat2<Real>::identity(Ep);
    Mat2<Real> run = Mat2<Real>::identity(Ep);
    for (long long j = 0; j < 2 * q; ++j) {
        left_step(run, e_at(j));
        if (j == q - 1) {
            m.Aq = run;
        }
    }
    m.A2q = std::move(run);

    m.Aq_inv = Mat2<Real>::identity(Ep);
    for (long long j = 0; j < q; ++j) {
        right_inverse_step(m.Aq_inv, e_at(j));
    }
    m.Aq_inv_shift = Mat2<Real>::identity(Ep);
    for (long long j = -q; j < 0; ++j) {
        right_inverse_step(m.Aq_inv_shift, e_at(j));
    }

    const double steps = std::log(8.0 * static_cast<double>(q));
    const double ln_eps = -static_cast<double>(prec) * kLn2;
    const double ln_aq = log(norm(m.Aq)).to_double();
    const double ln_a2q = log(norm(m.A2q)).to_double();
    const double ln_inv = std::max(log(norm(m.Aq_inv)).to_double(), log(norm(m.Aq_inv_shift)).to_double());
    m.log_noise_square = std::max(2.0 * ln_aq, ln_a2q) + steps + ln_eps;
    m.log_noise_inverse = ln_inv + steps + ln_eps;
    m.square_diff = m.Aq * m.Aq - m.A2q;
    m.inverse_diff = m.Aq_inv - m.Aq_inv_shift;
    return m;
}

GordonLhs gordon_lhs(const GordonMatrices& m, const Vec2<Real>& v) {
    GordonLhs out;
    const double raw_square = log_norm_d(m.square_diff * v);
    const double raw_inverse = log_norm_d(m.inverse_diff * v);
    // An exactly zero difference (periodic orbit, constant cocycle) carries no rounding noise.
    auto floored = [&](double raw, double noise) {
        if (std::isinf(raw) && raw < 0.0) {
            return raw;
        }
        out.noise_limited = out.noise_limited || raw <= noise;
        return std::max(raw, noise);
    };
    out.log_square = floored(raw_square, m.log_noise_square);
    out.log_inverse = floored(raw_inverse, m.log_noise_inverse);
    return out;
}

GordonLhs gordon_lhs(const MeromorphicPotential& pot, double E, const TorusPoint& theta, const ContinuedFraction& cf,
                     long long q, const Vec2<double>& v, Bits prec) {
    const GordonMatrices m = gordon_matrices(pot, E, theta, cf, q, prec);
    const double len = std::hypot(v.x, v.y);
    return gordon_lhs(m, Vec2<Real>{Real(v.x / len, m.prec), Real(v.y / len, m.prec)});
}

namespace {

MaxInequality make_max(const Real& a, const Real& b, const Real& c, bool smallness_held) {
    const Real best = max(a, max(b, c));
    MaxInequality out;
    out.max_norm = best.to_double();
    out.log_max_norm = best.is_zero() ? -std::numeric_limits<double>::infinity() : log(best).to_double();
    out.verdict = smallness_held && out.max_norm >= 0.25 - kMaxNormTolerance ? Verdict::Excluded
                                                                              : Verdict::Inconclusive;
    return out;
}

}  // namespace

MaxInequality max_inequality(const SolutionSegment& seg, long long q, bool smallness_held) {
    if (!seg.covers(-q - 1, 2 * q)) {
        throw Error(ErrorKind::Range, "segment [" + std::to_string(seg.first) + ", " + std::to_string(seg.last()) +
                                          "] does not cover [-q-1, 2q] for q = " + std::to_string(q));
    }
    return make_max(seg.pair_norm(q), seg.pair_norm(-q), seg.pair_norm(2 * q), smallness_held);
}

MaxInequality max_inequality(const GordonMatrices& m, const Vec2<Real>& v, bool smallness_held) {
    return make_max(norm(m.Aq * v), norm(m.Aq_inv_shift * v), norm(m.A2q * v), smallness_held);
}

CayleyHamilton cayley_hamilton(const Mat2<double>& B, const Mat2<double>& B_inv, double det) {
    const Mat2<double> I{1.0, 0.0, 0.0, 1.0};
    const double nb = norm(B);
    const double tr = B.trace();
    CayleyHamilton out;
    out.square = norm(B * B - B * tr + I * det) / (nb * nb);
    out.inverse = norm(B - I * tr + B_inv * det) / nb;
    return out;
}

CayleyHamilton cayley_hamilton(const Mat2<Real>& B, const Mat2<Real>& B_inv) {
    const Mat2<Real> I = Mat2<Real>::identity(B.a);
    const Real nb = norm(B);
    const Real tr = B.trace();
    CayleyHamilton out;
    out.square = (norm(B * B - B * tr + I) / (nb * nb)).to_double();
    out.inverse = (norm(B - I * tr + B_inv) / nb).to_double();
    return out;
}

CayleyHamilton cayley_hamilton(const TransferMatrix2& B, const TransferMatrix2& B_inv) {
    // B = e^s Bt, B^{-1} = e^t Ct; divide the identities by e^{2s} and e^s.
    const Mat2<double>& Bt = B.entries;
    const Mat2<double> I{1.0, 0.0, 0.0, 1.0};
    const double nb = norm(Bt);
    const double tr = Bt.trace();
    CayleyHamilton out;
    out.square = norm(Bt * Bt - Bt * tr + I * std::exp(-2.0 * B.log_scale)) / (nb * nb);
    out.inverse = norm(Bt - I * tr + B_inv.entries * std::exp(B_inv.log_scale - B.log_scale)) / nb;
    return out;
}

TraceReport trace_dichotomy(const GordonMatrices& m) {
    TraceReport out;
    out.q = m.q;
    const Real tr = m.Aq.trace();
    out.trace = tr.to_double();
    out.large_trace = abs(tr) > 0.5;
    out.residuals = cayley_hamilton(m.Aq, m.Aq_inv);
    return out;
}

TraceReport trace_dichotomy(const MeromorphicPotential& pot, double E, const TorusPoint& theta,
                            const ContinuedFraction& cf, long long q, Bits prec) {
    return trace_dichotomy(gordon_matrices(pot, E, theta, cf, q, prec));
}

Vec2<Real> contracted_direction(const GordonMatrices& m) {
    const Mat2<Real>& A = m.Aq;
    // M^T M = [[p, r], [r, s]]; its top eigenvector sits at angle phi with
    // tan 2 phi = 2 r / (p - s). The contracted direction is orthogonal.
    const Real p = A.a * A.a + A.c * A.c;
    const Real s = A.b * A.b + A.d * A.d;
    const Real r = A.a * A.b + A.c * A.d;
    Real two_phi(m.prec);
    const Real y = r * 2.0;
    const Real x = p - s;
    mpfr_atan2(two_phi.get(), y.get(), x.get(), MPFR_RNDN);
    const Real phi = two_phi / 2.0 + Real::pi(m.prec) / 2.0;
    return {cos(phi), sin(phi)};
}

namespace {

void require_qualifying(const IndexValue& delta, std::size_t level, double epsilon) {
    if (level >= delta.per_level.size()) {
        throw Error(ErrorKind::Range, "level " + std::to_string(level) + " has no delta term");
    }
    if (!(delta.per_level[level] > delta.value - epsilon / 4.0)) {
        throw Error(ErrorKind::Subsequence,
                    "level " + std::to_string(level) + " is not in the qualifying subsequence");
    }
}

}  // namespace

LemmaReport lemma_A_check(const GordonMatrices& m, const ContinuedFraction& cf, const IndexValue& delta,
                          std::size_t level, double epsilon, double L) {
    require_qualifying(delta, level, epsilon);
    if (cf.q(level) != static_cast<long>(m.q)) {
        throw Error(ErrorKind::InvalidInput, "matrices were built for q = " + std::to_string(m.q) + ", not q_" +
                                                 std::to_string(level) + " = " + cf.q(level).get_str());
    }
    LemmaReport out;
    out.level = level;
    out.q = m.q;
    out.L = L;
    out.delta_hat = delta.value;
    out.epsilon = epsilon;
    out.log_bound = static_cast<double>(out.q) * (L - delta.value + 4.0 * epsilon);
    out.vacuous = out.log_bound >= 0.0;

    const Vec2<Real> v = contracted_direction(m);
    const GordonLhs lhs = gordon_lhs(m, v);
    out.log_square = lhs.log_square;
    out.log_inverse = lhs.log_inverse;
    out.noise_limited = lhs.noise_limited;
    const Real w = max(Real(1.0, m.prec), max(norm(m.Aq * v), max(norm(m.Aq_inv_shift * v), norm(m.A2q * v))));
    out.window_bound = w.to_double();
    return out;
}

LemmaReport lemma_A_check(const MeromorphicPotential& pot, double E, const TorusPoint& theta,
                          const ContinuedFraction& cf, const IndexValue& delta, std::size_t level, double epsilon,
                          double L, Bits prec) {
    require_qualifying(delta, level, epsilon);
    require_window(cf, level, 1'000'000);
    const long long q = cf.q(level).get_si();
    const double log_bound = static_cast<double>(q) * (L - delta.value + 4.0 * epsilon);
    const double resolve = std::max(-log_bound, 0.0) + 64.0 * kLn2;
    const GordonMatrices m = gordon_matrices(pot, E, theta, cf, q, prec, resolve);
    return lemma_A_check(m, cf, delta, level, epsilon, L);
}

GordonCertificate certify_level(const GordonMatrices& m, double E, std::size_t level, double c,
                                std::size_t directions) {
    const double threshold = -c * static_cast<double>(m.q);
    GordonCertificate cert;
    cert.E = E;
    cert.level = level;
    cert.q = mpz_class(static_cast<long>(m.q));
    cert.rate = c;
    cert.precision = m.prec;
    cert.trace = m.Aq.trace().to_double();
    cert.log_lhs_square = -std::numeric_limits<double>::infinity();
    cert.log_lhs_inverse = -std::numeric_limits<double>::infinity();
    cert.max_norm = std::numeric_limits<double>::infinity();
    bool all_excluded = true;

    auto test = [&](const Vec2<Real>& v, double angle, bool contracted) {
        const GordonLhs lhs = gordon_lhs(m, v);
        const bool small = lhs.log_square <= threshold && lhs.log_inverse <= threshold;
        const MaxInequality mi = max_inequality(m, v, small);
        DirectionResult d;
        d.angle = angle;
        d.contracted = contracted;
        d.log_square = lhs.log_square;
        d.log_inverse = lhs.log_inverse;
        d.max_norm = mi.max_norm;
        d.verdict = mi.verdict;
        cert.log_lhs_square = std::max(cert.log_lhs_square, lhs.log_square);
        cert.log_lhs_inverse = std::max(cert.log_lhs_inverse, lhs.log_inverse);
        cert.max_norm = std::min(cert.max_norm, mi.max_norm);
        cert.noise_limited = cert.noise_limited || lhs.noise_limited;
        all_excluded = all_excluded && mi.verdict == Verdict::Excluded;
        cert.directions.push_back(d);
    };

    const Real pi = Real::pi(m.prec);
    for (std::size_t k = 0; k < directions; ++k) {
        const double angle = std::numbers::pi * static_cast<double>(k) / static_cast<double>(directions);
        const Real a = pi * Real(static_cast<long>(k), m.prec) / Real(static_cast<long>(directions), m.prec);
        test(Vec2<Real>{cos(a), sin(a)}, angle, false);
    }
    const Vec2<Real> v = contracted_direction(m);
    Real angle(m.prec);
    mpfr_atan2(angle.get(), v.y.get(), v.x.get(), MPFR_RNDN);
    test(v, angle.to_double(), true);

    cert.lhs_square = std::exp(cert.log_lhs_square);
    cert.lhs_inverse = std::exp(cert.log_lhs_inverse);
    cert.empirical_rate = -std::max(cert.log_lhs_square, cert.log_lhs_inverse) / static_cast<double>(m.q);
    cert.verdict = all_excluded ? Verdict::Excluded : Verdict::Inconclusive;
    return cert;
}

ExclusionReport exclusion_certificate(const MeromorphicPotential& pot, double E, const TorusPoint& theta,
                                      const ContinuedFraction& cf, const std::vector<std::size_t>& levels, double c,
                                      const ExclusionOptions& options) {
    if (levels.empty()) {
        throw Error(ErrorKind::InvalidInput, "exclusion_certificate needs at least one level");
    }
    if (!(c > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "rate c must be positive");
    }
    for (std::size_t level : levels) {
        require_window(cf, level, options.budget);
    }
    ExclusionReport report;
    report.E = E;
    report.rate = c;
    report.levels.resize(levels.size());

    parallel_for(levels.size(), options.threads, [&](std::size_t i) {
        const long long q = cf.q(levels[i]).get_si();
        const double resolve = std::max(c * static_cast<double>(q) + 64.0 * kLn2, level_resolve(cf, q));
        const GordonMatrices m = gordon_matrices(pot, E, theta, cf, q, options.prec, resolve);
        report.levels[i] = certify_level(m, E, levels[i], c, options.directions);
    });

    report.verdict = Verdict::Inconclusive;
    for (const GordonCertificate& cert : report.levels) {
        if (cert.verdict == Verdict::Excluded) {
            report.verdict = Verdict::Excluded;
        }
    }
    return report;
}

}  // namespace qpspec
