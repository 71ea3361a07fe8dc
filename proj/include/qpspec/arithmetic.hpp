#pragma once

#include "qpspec/real.hpp"

#include <gmpxx.h>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qpspec {

struct Convergent {
    mpz_class p;
    mpz_class q;
};

/// Continued fraction alpha = [0; a_1, a_2, ..., a_N] with its convergents.
///
/// Convergents use (p_0, q_0) = (0, 1), (p_1, q_1) = (1, a_1). The stored
/// value of alpha is the last convergent p_N / q_N, held at
/// 64 + 2 log2(q_N) bits (rounded up to a multiple of 64, at least 128).
/// Orbit points theta + j*alpha are formed from the exact residue
/// j*p_N mod q_N, so a rational alpha yields exactly periodic orbits.
class ContinuedFraction {
public:
    static ContinuedFraction from_coefficients(std::vector<mpz_class> coefficients);

    std::size_t depth() const { return coefficients_.size(); }
    const std::vector<mpz_class>& coefficients() const { return coefficients_; }
    const std::vector<Convergent>& convergents() const { return convergents_; }
    const mpz_class& p(std::size_t n) const { return convergents_.at(n).p; }
    const mpz_class& q(std::size_t n) const { return convergents_.at(n).q; }

    const Real& value() const { return value_; }
    Bits precision() const { return value_.precision(); }
    mpq_class exact_value() const;

    /// (j * p_N) mod q_N in [0, q_N).
    mpz_class rotation_residue(long long j) const;

private:
    std::vector<mpz_class> coefficients_;
    std::vector<Convergent> convergents_;
    Real value_;
};

ContinuedFraction cf_from_coeffs(std::vector<mpz_class> coefficients);

struct CfExpansion {
    ContinuedFraction cf;
    /// Number of leading coefficients certified by the input precision.
    std::size_t valid_terms = 0;
    /// The expansion ended because the remainder was exactly zero.
    bool terminated = false;
    /// Precision ran out before max_terms were certified.
    bool precision_exhausted = false;
};

/// How the binary value passed to cf_from_real relates to the number meant.
enum class RealInput {
    Rounded,  // the true number lies within half an ulp of the stored value
    Exact,    // the stored binary value is the number itself
};

/// Expands alpha in (0, 1). For rounded input, only coefficients shared by
/// both ends of the half-ulp interval are emitted.
CfExpansion cf_from_real(const Real& alpha, std::size_t max_terms, RealInput input = RealInput::Rounded);

std::vector<mpz_class> constant_coefficients(unsigned long a, std::size_t count);
inline std::vector<mpz_class> golden_coefficients(std::size_t count) { return constant_coefficients(1, count); }
inline std::vector<mpz_class> silver_coefficients(std::size_t count) { return constant_coefficients(2, count); }

/// A point of R/Z. Rational points keep their exact value and can be
/// materialized at any precision; other points carry a fixed precision.
class TorusPoint {
public:
    TorusPoint() : TorusPoint(mpq_class(0)) {}
    explicit TorusPoint(const mpq_class& exact);
    explicit TorusPoint(const Real& value);

    static TorusPoint from_double(double x);
    /// Accepts "p/q", a decimal literal (kept exact), or scientific notation
    /// (rounded to prec bits).
    static TorusPoint parse(const std::string& text, Bits prec = kDefaultBits);

    bool exact() const { return exact_.has_value(); }
    const std::optional<mpq_class>& rational() const { return exact_; }
    /// Stored precision of an inexact point; exact points report 0.
    Bits precision() const { return exact_ ? 0 : value_.precision(); }
    Real value(Bits prec) const;
    double to_double() const;
    std::string str() const;

    TorusPoint shifted(const TorusPoint& other, int sign) const;

private:
    std::optional<mpq_class> exact_;
    Real value_;
};

struct Pole {
    TorusPoint location;
    int multiplicity = 1;
};

/// Total number of poles counted with multiplicity.
int pole_count(std::span<const Pole> poles);

/// Walks frac(theta + j*alpha) for j = first, first+1, ... at prec bits. Each
/// point is formed from the exact residue j*p_N mod q_N.
class OrbitWalker {
public:
    OrbitWalker(const TorusPoint& theta, const ContinuedFraction& cf, long long first, Bits prec);

    long long index() const { return index_; }
    const Real& point() const { return point_; }
    void advance();

private:
    void refresh();

    Real theta_;
    mpz_class residue_;
    mpz_class step_;
    mpz_class modulus_;
    long long index_;
    Real point_;
};

/// frac(theta + j*alpha) at prec bits, using the exact residue j*p_N mod q_N.
Real orbit_point(const TorusPoint& theta, const ContinuedFraction& cf, long long j, Bits prec);

/// frac(theta + j*alpha) for j = first, first+1, ..., first+count-1.
std::vector<Real> orbit_points(const TorusPoint& theta, const ContinuedFraction& cf, long long first,
                               std::size_t count, Bits prec);

/// Finite-N surrogate of a limsup: value is the max of per_level over
/// levels >= tail_start.
struct IndexValue {
    double value = 0.0;
    std::size_t terms_used = 0;
    std::size_t tail_start = 0;
    std::vector<double> per_level;
    /// Levels whose torus norm fell below the trusted resolution.
    std::vector<std::size_t> resolution_limited;
    /// Witness of an exact resonance (gamma only).
    std::optional<long long> resonance;

    double max_over_last(std::size_t count) const;
};

struct IndexOptions {
    /// Defaults to ceil(N / 2) where N is the number of per-level terms.
    std::optional<std::size_t> tail_start;
};

/// per_level[n] = ln(q_{n+1}) / q_n for n = 0 .. N-1.
IndexValue beta(const ContinuedFraction& cf, const IndexOptions& options = {});

struct GammaOptions {
    long long n_max = 10000;
    std::optional<std::size_t> tail_start;
};

/// per_level[k] = max over n = +-(k+1) of -ln||2 theta + n alpha|| / |n|.
IndexValue gamma(const ContinuedFraction& cf, const TorusPoint& theta, const GammaOptions& options = {});

struct DeltaOptions {
    std::optional<std::size_t> tail_start;
    /// |k| range scanned for theta in theta_l + k*alpha + Z.
    long long horizon = 10000;
};

/// per_level[n] = (sum_i ln||q_n (theta - theta_i)|| + ln q_{n+1}) / q_n,
/// poles repeated by multiplicity. Throws ExcludedPhaseError when theta sits
/// on a pole translate within the horizon.
IndexValue delta_index(const ContinuedFraction& cf, const TorusPoint& theta, std::span<const Pole> poles,
                       const DeltaOptions& options = {});

/// Levels n with per_level[n] > value - epsilon/4.
std::vector<std::size_t> qualifying_levels(const IndexValue& delta, double epsilon);

/// Raises Range when q_n exceeds the step budget.
void require_window(const ContinuedFraction& cf, std::size_t level, std::size_t budget);

struct MinSine {
    std::size_t j0 = 0;
    double value = 0.0;
    /// ln of the minimum, kept separately because value can underflow.
    double log_value = 0.0;
};

inline constexpr std::size_t kDefaultStepBudget = 10'000'000;

/// Smallest |sin pi (theta + j alpha)| over 0 <= j < q_n; ties go to the smallest j.
MinSine min_sine_index(const TorusPoint& theta, const ContinuedFraction& cf, std::size_t level,
                       std::size_t budget = kDefaultStepBudget);

struct SineProduct {
    std::size_t j0 = 0;
    /// sum_{j != j0} ln|sin pi(theta + j alpha)| + (q_n - 1) ln 2
    double sum = 0.0;
    double log_q = 0.0;
};

SineProduct sine_product_check(const TorusPoint& theta, const ContinuedFraction& cf, std::size_t level,
                               std::size_t budget = kDefaultStepBudget);

struct MinSineProduct {
    double log_lhs = 0.0;
    double log_bound = 0.0;
    std::vector<std::size_t> minimizers;
    bool holds() const { return log_lhs >= log_bound; }
};

/// ln prod_l |sin pi(theta - theta_l + j_l alpha)| against
/// q(delta_hat - epsilon/2) - ln q_{n+1}, where j_l minimizes each factor over
/// the q_n window.
MinSineProduct min_sine_product_check(const TorusPoint& theta, std::span<const Pole> poles,
                                      const ContinuedFraction& cf, std::size_t level, double epsilon,
                                      double delta_hat);

/// Spike construction for Liouville frequencies. At a spike level n the next
/// quotient is a_{n+1} = ceil(exp(t q_n) / (q_n w(q_n))), where w(q) is 1
/// for beta targeting and prod_i ||q (theta - theta_i)|| for delta targeting.
struct SpikeSchedule {
    double target = 1.0;
    std::size_t spikes = 3;
    /// Filler quotients inserted between consecutive spikes.
    std::size_t gap = 0;
    /// Filler quotients before the first spike.
    std::size_t lead = 0;
    unsigned long filler = 1;
    /// After the first spike, aim later spikes at the exponent it realized.
    bool track_realized = true;
    /// Refuse spikes whose quotient would exceed this many bits.
    std::size_t max_bits = 1u << 20;
};

std::vector<mpz_class> liouville_coefficients(const SpikeSchedule& schedule);
std::vector<mpz_class> phase_compensated_coefficients(const SpikeSchedule& schedule, const TorusPoint& theta,
                                                      std::span<const Pole> poles);

/// One decimal coefficient per line.
void write_cf_text(std::ostream& out, const ContinuedFraction& cf);
std::vector<mpz_class> read_cf_text(std::istream& in);

}  // namespace qpspec
