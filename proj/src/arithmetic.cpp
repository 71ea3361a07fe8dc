#include "qpspec/arithmetic.hpp"

#include "qpspec/error.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <regex>

namespace qpspec {

namespace {

std::string to_sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

constexpr Bits kLogBits = 128;

Bits value_bits_for(const mpz_class& q) {
    Bits bits = 64 + 2 * static_cast<Bits>(mpz_sizeinbase(q.get_mpz_t(), 2));
    bits = ((bits + 63) / 64) * 64;
    return std::max<Bits>(bits, 128);
}

mpq_class frac_exact(const mpq_class& x) {
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    return x - mpq_class(fl);
}

mpq_class torus_norm_exact(const mpq_class& x) {
    mpq_class f = frac_exact(x);
    mpq_class g = 1 - f;
    return f < g ? f : g;
}

std::size_t default_tail(std::size_t terms, const std::optional<std::size_t>& requested) {
    if (terms == 0) {
        return 0;
    }
    std::size_t tail = requested ? *requested : (terms + 1) / 2;
    return std::min(tail, terms - 1);
}

void finish_surrogate(IndexValue& out, const std::optional<std::size_t>& tail) {
    out.terms_used = out.per_level.size();
    out.tail_start = default_tail(out.terms_used, tail);
    out.value = -std::numeric_limits<double>::infinity();
    for (std::size_t n = out.tail_start; n < out.per_level.size(); ++n) {
        out.value = std::max(out.value, out.per_level[n]);
    }
}

// (log_sum + ln q_{n+1}) / q_n, shared by beta and delta so that an empty
// pole sum reproduces beta bit for bit.
double level_ratio(const Real& log_sum, const ContinuedFraction& cf, std::size_t n) {
    Real num = log_sum + log_integer(cf.q(n + 1), kLogBits);
    num /= Real(cf.q(n), kLogBits);
    return num.to_double();
}

Real log_of_exact(const mpq_class& x) {
    if (x == 0) {
        return Real::infinity(-1, kLogBits);
    }
    Real num = log_integer(x.get_num(), kLogBits);
    Real den = log_integer(x.get_den(), kLogBits);
    return num - den;
}

// ln || q * (theta - pole) || together with a flag when the value cannot be
// trusted at the available precision.
struct LogNorm {
    Real value{kLogBits};
    bool limited = false;
};

LogNorm log_scaled_distance(const TorusPoint& theta, const TorusPoint& pole, const mpz_class& q) {
    LogNorm out;
    if (theta.exact() && pole.exact()) {
        mpq_class d = *theta.rational() - *pole.rational();
        mpq_class x = d * mpq_class(q);
        mpq_class norm = torus_norm_exact(x);
        out.value = log_of_exact(norm);
        out.limited = norm == 0;
        return out;
    }
    const Bits needed = 64 + static_cast<Bits>(mpz_sizeinbase(q.get_mpz_t(), 2));
    Bits available = std::numeric_limits<Bits>::max();
    if (!theta.exact()) {
        available = std::min(available, theta.precision());
    }
    if (!pole.exact()) {
        available = std::min(available, pole.precision());
    }
    const Bits work = std::max<Bits>(needed, std::min<Bits>(available, needed + 64));
    Real d = theta.value(work) - pole.value(work);
    d *= q;
    Real norm = torus_norm(d);
    out.limited = available < needed;
    Real threshold(1.0, work);
    mpfr_div_2ui(threshold.get(), threshold.get(), static_cast<unsigned long>(available / 2), MPFR_RNDN);
    if (norm < threshold) {
        out.limited = true;
    }
    out.value = norm.is_zero() ? Real::infinity(-1, kLogBits) : log(norm).rounded(kLogBits);
    return out;
}

void check_phase_not_excluded(const ContinuedFraction& cf, const TorusPoint& theta, std::span<const Pole> poles,
                              long long horizon) {
    const mpz_class& pN = cf.p(cf.depth());
    const mpz_class& qN = cf.q(cf.depth());
    for (std::size_t i = 0; i < poles.size(); ++i) {
        const TorusPoint& pole = poles[i].location;
        if (theta.exact() && pole.exact()) {
            // theta - theta_i = k p_N / q_N mod 1 has a solution only when
            // frac(theta - theta_i) * q_N is an integer r; then k = r p_N^{-1}.
            mpq_class t = frac_exact(*theta.rational() - *pole.rational()) * mpq_class(qN);
            if (t.get_den() != 1) {
                continue;
            }
            mpz_class inv;
            mpz_class k;
            if (qN == 1) {
                k = 0;
            } else {
                mpz_invert(inv.get_mpz_t(), pN.get_mpz_t(), qN.get_mpz_t());
                k = (t.get_num() * inv) % qN;
            }
            mpz_class alt = qN - k;
            if (k <= static_cast<long>(horizon)) {
                throw ExcludedPhaseError(i, k.get_si(),
                                         "phase lies on pole " + std::to_string(i) + " translated by k=" +
                                             k.get_str() + " (theta = theta_l + k alpha mod 1)");
            }
            if (alt <= static_cast<long>(horizon)) {
                throw ExcludedPhaseError(i, -alt.get_si(),
                                         "phase lies on pole " + std::to_string(i) + " translated by k=-" +
                                             alt.get_str() + " (theta = theta_l + k alpha mod 1)");
            }
            continue;
        }
        Bits prec = std::max<Bits>(cf.precision(), 128);
        Bits available = std::min(theta.exact() ? prec : theta.precision(), pole.exact() ? prec : pole.precision());
        TorusPoint diff = theta.shifted(pole, -1);
        Real threshold(1.0, prec);
        mpfr_div_2ui(threshold.get(), threshold.get(), static_cast<unsigned long>(available / 2), MPFR_RNDN);
        OrbitWalker walk(diff, cf, -horizon, prec);
        for (long long k = -horizon; k <= horizon; ++k, walk.advance()) {
            // a hit at index k means theta = theta_i - k alpha
            if (torus_norm(walk.point()) < threshold) {
                throw ExcludedPhaseError(i, -k,
                                         "phase within resolution of pole " + std::to_string(i) +
                                             " translated by k=" + std::to_string(-k));
            }
        }
    }
}

}  // namespace

ContinuedFraction ContinuedFraction::from_coefficients(std::vector<mpz_class> coefficients) {
    if (coefficients.empty()) {
        throw Error(ErrorKind::InvalidInput, "continued fraction needs at least one coefficient");
    }
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
        if (coefficients[i] < 1) {
            throw Error(ErrorKind::InvalidInput, "coefficient a_" + std::to_string(i + 1) +
                                                     " must be a positive integer, got " +
                                                     coefficients[i].get_str());
        }
    }
    ContinuedFraction cf;
    cf.coefficients_ = std::move(coefficients);
    cf.convergents_.reserve(cf.coefficients_.size() + 1);
    mpz_class p_prev = 1;
    mpz_class q_prev = 0;
    mpz_class p = 0;
    mpz_class q = 1;
    cf.convergents_.push_back({p, q});
    for (const mpz_class& a : cf.coefficients_) {
        mpz_class p_next = a * p + p_prev;
        mpz_class q_next = a * q + q_prev;
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
        cf.convergents_.push_back({p, q});
    }
    cf.value_ = Real(mpq_class(p, q), value_bits_for(q));
    return cf;
}

mpq_class ContinuedFraction::exact_value() const {
    const Convergent& last = convergents_.back();
    return mpq_class(last.p, last.q);
}

mpz_class ContinuedFraction::rotation_residue(long long j) const {
    const Convergent& last = convergents_.back();
    mpz_class r = mpz_class(static_cast<long>(j)) * last.p;
    mpz_class out;
    mpz_fdiv_r(out.get_mpz_t(), r.get_mpz_t(), last.q.get_mpz_t());
    return out;
}

ContinuedFraction cf_from_coeffs(std::vector<mpz_class> coefficients) {
    return ContinuedFraction::from_coefficients(std::move(coefficients));
}

CfExpansion cf_from_real(const Real& alpha, std::size_t max_terms, RealInput input) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw Error(ErrorKind::InvalidInput, "alpha must lie in (0, 1), got " + alpha.str());
    }
    mpq_class centre = alpha.to_rational();
    mpq_class lo = centre;
    mpq_class hi = centre;
    if (input == RealInput::Rounded) {
        // Half an ulp at the working precision.
        mpq_class half_ulp(1);
        long e = alpha.exponent() - static_cast<long>(alpha.precision()) - 1;
        if (e < 0) {
            mpq_div_2exp(half_ulp.get_mpq_t(), half_ulp.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
        } else {
            mpq_mul_2exp(half_ulp.get_mpq_t(), half_ulp.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
        }
        lo = centre - half_ulp;
        hi = centre + half_ulp;
    }

    std::vector<mpz_class> coeffs;
    bool terminated = false;
    bool exhausted = false;
    while (coeffs.size() < max_terms) {
        if (lo == 0 || hi == 0) {
            if (input == RealInput::Exact) {
                terminated = true;
            } else {
                exhausted = true;
            }
            break;
        }
        mpq_class inv_lo = 1 / lo;
        mpq_class inv_hi = 1 / hi;
        mpz_class a_lo;
        mpz_class a_hi;
        mpz_fdiv_q(a_lo.get_mpz_t(), inv_lo.get_num_mpz_t(), inv_lo.get_den_mpz_t());
        mpz_fdiv_q(a_hi.get_mpz_t(), inv_hi.get_num_mpz_t(), inv_hi.get_den_mpz_t());
        if (a_lo != a_hi) {
            exhausted = true;
            break;
        }
        coeffs.push_back(a_lo);
        lo = inv_lo - mpq_class(a_lo);
        hi = inv_hi - mpq_class(a_hi);
        if (input == RealInput::Exact && lo == 0) {
            terminated = true;
            break;
        }
    }
    if (coeffs.empty()) {
        throw Error(ErrorKind::PrecisionExhausted, "precision exhausted before the first coefficient");
    }
    CfExpansion out{ContinuedFraction::from_coefficients(coeffs), coeffs.size(), terminated, exhausted};
    return out;
}

std::vector<mpz_class> constant_coefficients(unsigned long a, std::size_t count) {
    return std::vector<mpz_class>(count, mpz_class(a));
}

TorusPoint::TorusPoint(const mpq_class& exact) : value_(kLogBits) {
    mpq_class canonical = exact;
    canonical.canonicalize();
    exact_ = frac_exact(canonical);
    value_ = Real(*exact_, kLogBits);
}

TorusPoint::TorusPoint(const Real& value) : value_(frac(value)) {}

TorusPoint TorusPoint::from_double(double x) { return TorusPoint(Real(x, 53)); }

TorusPoint TorusPoint::parse(const std::string& text, Bits prec) {
    static const std::regex fraction(R"(\s*([+-]?\d+)\s*/\s*(\d+)\s*)");
    static const std::regex decimal(R"(\s*([+-]?)(\d*)\.?(\d*)\s*)");
    std::smatch m;
    if (std::regex_match(text, m, fraction)) {
        mpz_class num(m[1].str(), 10);
        mpz_class den(m[2].str(), 10);
        if (den == 0) {
            throw Error(ErrorKind::InvalidInput, "zero denominator in '" + text + "'");
        }
        return TorusPoint(mpq_class(num, den));
    }
    if (std::regex_match(text, m, decimal) && (m[2].length() + m[3].length()) > 0) {
        std::string digits = m[2].str() + m[3].str();
        mpz_class num(digits, 10);
        mpz_class den;
        mpz_ui_pow_ui(den.get_mpz_t(), 10, static_cast<unsigned long>(m[3].length()));
        mpq_class value(num, den);
        value.canonicalize();
        if (m[1].str() == "-") {
            value = -value;
        }
        return TorusPoint(value);
    }
    return TorusPoint(Real::parse(text, prec));
}

Real TorusPoint::value(Bits prec) const {
    if (exact_) {
        return Real(*exact_, prec);
    }
    return value_.rounded(prec);
}

double TorusPoint::to_double() const { return exact_ ? exact_->get_d() : value_.to_double(); }

std::string TorusPoint::str() const { return exact_ ? exact_->get_str() : value_.str(30); }

TorusPoint TorusPoint::shifted(const TorusPoint& other, int sign) const {
    if (exact_ && other.exact_) {
        mpq_class r = sign >= 0 ? mpq_class(*exact_ + *other.exact_) : mpq_class(*exact_ - *other.exact_);
        return TorusPoint(r);
    }
    Bits prec = std::max(exact_ ? Bits{0} : value_.precision(), other.exact_ ? Bits{0} : other.value_.precision());
    Real a = value(prec);
    Real b = other.value(prec);
    return TorusPoint(sign >= 0 ? a + b : a - b);
}

int pole_count(std::span<const Pole> poles) {
    int m = 0;
    for (const Pole& p : poles) {
        m += p.multiplicity;
    }
    return m;
}

OrbitWalker::OrbitWalker(const TorusPoint& theta, const ContinuedFraction& cf, long long first, Bits prec)
    : theta_(theta.value(prec)),
      residue_(cf.rotation_residue(first)),
      step_(cf.p(cf.depth())),
      modulus_(cf.q(cf.depth())),
      index_(first),
      point_(prec) {
    if (modulus_ != 0) {
        step_ %= modulus_;
    }
    refresh();
}

void OrbitWalker::advance() {
    residue_ += step_;
    if (residue_ >= modulus_) {
        residue_ -= modulus_;
    }
    ++index_;
    refresh();
}

void OrbitWalker::refresh() {
    Bits prec = theta_.precision();
    Real shift(residue_, prec);
    mpfr_div_z(shift.get(), shift.get(), modulus_.get_mpz_t(), MPFR_RNDN);
    shift += theta_;
    point_ = frac(shift);
}

Real orbit_point(const TorusPoint& theta, const ContinuedFraction& cf, long long j, Bits prec) {
    OrbitWalker walk(theta, cf, j, prec);
    return walk.point();
}

std::vector<Real> orbit_points(const TorusPoint& theta, const ContinuedFraction& cf, long long first,
                               std::size_t count, Bits prec) {
    std::vector<Real> out;
    out.reserve(count);
    OrbitWalker walk(theta, cf, first, prec);
    for (std::size_t i = 0; i < count; ++i, walk.advance()) {
        out.push_back(walk.point());
    }
    return out;
}

double IndexValue::max_over_last(std::size_t count) const {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t from = count >= per_level.size() ? 0 : per_level.size() - count;
    for (std::size_t n = from; n < per_level.size(); ++n) {
        best = std::max(best, per_level[n]);
    }
    return best;
}

IndexValue beta(const ContinuedFraction& cf, const IndexOptions& options) {
    if (cf.depth() < 2) {
        throw Error(ErrorKind::InvalidInput, "beta needs at least three convergents");
    }
    IndexValue out;
    out.per_level.reserve(cf.depth());
    const Real zero(kLogBits);
    for (std::size_t n = 0; n < cf.depth(); ++n) {
        out.per_level.push_back(level_ratio(zero, cf, n));
    }
    finish_surrogate(out, options.tail_start);
    return out;
}

IndexValue gamma(const ContinuedFraction& cf, const TorusPoint& theta, const GammaOptions& options) {
    if (options.n_max < 1) {
        throw Error(ErrorKind::InvalidInput, "gamma needs n_max >= 1");
    }
    IndexValue out;
    out.per_level.assign(static_cast<std::size_t>(options.n_max), -std::numeric_limits<double>::infinity());
    const double inf = std::numeric_limits<double>::infinity();
    TorusPoint twice = theta.shifted(theta, +1);

    auto record = [&](long long n, double term, bool limited) {
        std::size_t k = static_cast<std::size_t>(std::llabs(n) - 1);
        out.per_level[k] = std::max(out.per_level[k], term);
        if (limited && (out.resolution_limited.empty() || out.resolution_limited.back() != k)) {
            out.resolution_limited.push_back(k);
        }
        if (term == inf && !out.resonance) {
            out.resonance = n;
        }
    };

    if (twice.exact()) {
        const mpq_class& t = *twice.rational();
        const mpz_class& qN = cf.q(cf.depth());
        for (long long a = 1; a <= options.n_max; ++a) {
            for (long long n : {a, -a}) {
                mpq_class x = t + mpq_class(cf.rotation_residue(n), qN);
                mpq_class norm = torus_norm_exact(x);
                if (norm == 0) {
                    record(n, inf, false);
                } else {
                    Real term = -log_of_exact(norm) / Real(static_cast<long>(a), kLogBits);
                    record(n, term.to_double(), false);
                }
            }
        }
    } else {
        Bits prec = std::max(cf.precision(), twice.precision());
        Real threshold(1.0, prec);
        mpfr_div_2ui(threshold.get(), threshold.get(), static_cast<unsigned long>(twice.precision() / 2), MPFR_RNDN);
        OrbitWalker forward(twice, cf, 1, prec);
        OrbitWalker backward(twice, cf, -options.n_max, prec);
        std::vector<Real> back;
        back.reserve(static_cast<std::size_t>(options.n_max));
        for (long long n = -options.n_max; n <= -1; ++n, backward.advance()) {
            back.push_back(torus_norm(backward.point()));
        }
        for (long long a = 1; a <= options.n_max; ++a, forward.advance()) {
            Real pos = torus_norm(forward.point());
            const Real& neg = back[static_cast<std::size_t>(options.n_max - a)];
            for (auto [n, norm] : {std::pair<long long, const Real*>{a, &pos}, {-a, &neg}}) {
                if (*norm < threshold) {
                    record(n, inf, true);
                } else {
                    Real term = -log(*norm) / Real(static_cast<long>(a), prec);
                    record(n, term.to_double(), false);
                }
            }
        }
    }
    finish_surrogate(out, options.tail_start);
    if (out.resonance) {
        out.value = inf;
    }
    return out;
}

IndexValue delta_index(const ContinuedFraction& cf, const TorusPoint& theta, std::span<const Pole> poles,
                       const DeltaOptions& options) {
    if (cf.depth() < 2) {
        throw Error(ErrorKind::InvalidInput, "delta needs at least three convergents");
    }
    check_phase_not_excluded(cf, theta, poles, options.horizon);
    IndexValue out;
    out.per_level.reserve(cf.depth());
    for (std::size_t n = 0; n < cf.depth(); ++n) {
        Real sum(kLogBits);
        bool limited = false;
        for (const Pole& pole : poles) {
            LogNorm term = log_scaled_distance(theta, pole.location, cf.q(n));
            limited = limited || term.limited;
            for (int k = 0; k < pole.multiplicity; ++k) {
                sum += term.value;
            }
        }
        if (limited) {
            out.resolution_limited.push_back(n);
        }
        out.per_level.push_back(level_ratio(sum, cf, n));
    }
    finish_surrogate(out, options.tail_start);
    return out;
}

std::vector<std::size_t> qualifying_levels(const IndexValue& delta, double epsilon) {
    std::vector<std::size_t> out;
    const double threshold = delta.value - epsilon / 4.0;
    for (std::size_t n = 0; n < delta.per_level.size(); ++n) {
        if (delta.per_level[n] > threshold) {
            out.push_back(n);
        }
    }
    return out;
}

void require_window(const ContinuedFraction& cf, std::size_t level, std::size_t budget) {
    if (level > cf.depth()) {
        throw Error(ErrorKind::Range, "level " + std::to_string(level) + " exceeds continued fraction depth " +
                                          std::to_string(cf.depth()));
    }
    if (cf.q(level) > static_cast<unsigned long>(budget)) {
        throw Error(ErrorKind::Budget, "q_" + std::to_string(level) + " = " + cf.q(level).get_str() +
                                           " exceeds the step budget " + std::to_string(budget));
    }
}

MinSine min_sine_index(const TorusPoint& theta, const ContinuedFraction& cf, std::size_t level,
                       std::size_t budget) {
    require_window(cf, level, budget);
    const std::size_t q = cf.q(level).get_ui();
    const Bits prec = cf.precision();
    OrbitWalker walk(theta, cf, 0, prec);
    MinSine out;
    Real best = torus_norm(walk.point());
    for (std::size_t j = 1; j < q; ++j) {
        walk.advance();
        Real d = torus_norm(walk.point());
        if (d < best) {
            best = std::move(d);
            out.j0 = j;
        }
    }
    Real s = sin(best * Real::pi(prec));
    out.value = s.to_double();
    out.log_value = s.is_zero() ? -std::numeric_limits<double>::infinity() : log(s).to_double();
    return out;
}

SineProduct sine_product_check(const TorusPoint& theta, const ContinuedFraction& cf, std::size_t level,
                               std::size_t budget) {
    MinSine min = min_sine_index(theta, cf, level, budget);
    const std::size_t q = cf.q(level).get_ui();
    OrbitWalker walk(theta, cf, 0, cf.precision());
    long double sum = 0.0L;
    for (std::size_t j = 0; j < q; ++j, walk.advance()) {
        if (j == min.j0) {
            continue;
        }
        const long double d = torus_norm(walk.point()).to_long_double();
        sum += std::log(std::sin(std::numbers::pi_v<long double> * d));
    }
    sum += static_cast<long double>(q - 1) * std::numbers::ln2_v<long double>;
    SineProduct out;
    out.j0 = min.j0;
    out.sum = static_cast<double>(sum);
    out.log_q = std::log(static_cast<double>(q));
    return out;
}

MinSineProduct min_sine_product_check(const TorusPoint& theta, std::span<const Pole> poles,
                                      const ContinuedFraction& cf, std::size_t level, double epsilon,
                                      double delta_hat) {
    if (level + 1 > cf.depth()) {
        throw Error(ErrorKind::Range, "level " + std::to_string(level) + " has no q_{n+1} in the stored expansion");
    }
    MinSineProduct out;
    long double log_lhs = 0.0L;
    for (const Pole& pole : poles) {
        MinSine min = min_sine_index(theta.shifted(pole.location, -1), cf, level);
        out.minimizers.push_back(min.j0);
        log_lhs += static_cast<long double>(pole.multiplicity) * min.log_value;
    }
    out.log_lhs = static_cast<double>(log_lhs);
    const double q = cf.q(level).get_d();
    out.log_bound = q * (delta_hat - epsilon / 2.0) - log_integer(cf.q(level + 1), kLogBits).to_double();
    return out;
}

namespace {

using Weight = std::function<Real(const mpz_class&)>;

std::vector<mpz_class> spike_coefficients(const SpikeSchedule& schedule, const Weight& weight, int pole_total) {
    if (!(schedule.target > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "spike target must be positive");
    }
    if (schedule.spikes == 0) {
        throw Error(ErrorKind::InvalidInput, "spike schedule needs at least one spike");
    }
    std::vector<mpz_class> coeffs;
    mpz_class q_prev = 0;
    mpz_class q = 1;
    auto next_q = [&](const mpz_class& a) { return mpz_class(a * q + q_prev); };
    auto push = [&](const mpz_class& a) {
        mpz_class n = next_q(a);
        coeffs.push_back(a);
        q_prev = q;
        q = n;
    };
    Real floor_weight(1.0, kLogBits);
    mpfr_div_2ui(floor_weight.get(), floor_weight.get(), static_cast<unsigned long>(2 * pole_total), MPFR_RNDN);
    // Raise a until the level it opens has a usable weight.
    auto push_into_spike = [&](mpz_class a) {
        for (int tries = 0; tries < 256 && weight(next_q(a)) < floor_weight; ++tries) {
            ++a;
        }
        push(a);
    };
    auto push_fillers = [&](std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            if (i + 1 == count) {
                push_into_spike(mpz_class(schedule.filler));
            } else {
                push(mpz_class(schedule.filler));
            }
        }
    };

    push_fillers(schedule.lead);
    double t = schedule.target;
    for (std::size_t s = 0; s < schedule.spikes; ++s) {
        if (s > 0) {
            push_fillers(schedule.gap);
        }
        const Real w = weight(q);
        if (w.is_zero()) {
            throw Error(ErrorKind::InvalidInput, "spike level q = " + q.get_str() + " has a zero phase weight");
        }
        const double exponent_bits = t * q.get_d() / std::numbers::ln2;
        if (!(exponent_bits < static_cast<double>(schedule.max_bits))) {
            throw Error(ErrorKind::Budget, "spike at q = " + q.get_str() + " needs about " +
                                               to_sci(exponent_bits) + " bits, over the budget of " +
                                               std::to_string(schedule.max_bits));
        }
        const Bits prec = static_cast<Bits>(exponent_bits) + 128;
        Real growth = exp(Real(t, prec) * Real(q, prec));
        growth /= Real(q, prec) * w.rounded(prec);
        mpz_class a = growth.ceil_integer();
        if (a < 1) {
            a = 1;
        }
        const bool opens_spike = s + 1 < schedule.spikes && schedule.gap == 0;
        const mpz_class q_here = q;
        if (opens_spike) {
            push_into_spike(a);
        } else {
            push(a);
        }
        if (s == 0 && schedule.track_realized) {
            Real realized = log(w) + log_integer(q, kLogBits);
            realized /= Real(q_here, kLogBits);
            t = realized.to_double();
        }
    }
    return coeffs;
}

}  // namespace

std::vector<mpz_class> liouville_coefficients(const SpikeSchedule& schedule) {
    return spike_coefficients(
        schedule, [](const mpz_class&) { return Real(1.0, kLogBits); }, 0);
}

std::vector<mpz_class> phase_compensated_coefficients(const SpikeSchedule& schedule, const TorusPoint& theta,
                                                      std::span<const Pole> poles) {
    auto weight = [&](const mpz_class& q) {
        Real w(1.0, kLogBits);
        for (const Pole& pole : poles) {
            LogNorm term = log_scaled_distance(theta, pole.location, q);
            Real factor = exp(term.value);
            for (int k = 0; k < pole.multiplicity; ++k) {
                w *= factor;
            }
        }
        return w;
    };
    return spike_coefficients(schedule, weight, pole_count(poles));
}

void write_cf_text(std::ostream& out, const ContinuedFraction& cf) {
    for (const mpz_class& a : cf.coefficients()) {
        out << a.get_str() << '\n';
    }
}

std::vector<mpz_class> read_cf_text(std::istream& in) {
    static const std::regex integer(R"(\s*(\d+)\s*)");
    std::vector<mpz_class> coeffs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::smatch m;
        if (!std::regex_match(line, m, integer)) {
            throw Error(ErrorKind::InvalidInput,
                        "line " + std::to_string(line_no) + ": expected a decimal integer, got '" + line + "'");
        }
        coeffs.emplace_back(m[1].str(), 10);
    }
    return coeffs;
}

}  // namespace qpspec
