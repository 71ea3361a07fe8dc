#pragma once

#include <mpfr.h>
#include <gmpxx.h>

#include <cmath>
#include <string>

namespace qpspec {

using Bits = mpfr_prec_t;

inline constexpr Bits kDefaultBits = 128;

// Owning value wrapper around an MPFR number. Every value carries its own
// precision; binary operations produce a result at the larger of the two
// operand precisions, rounded to nearest.
class Real {
public:
    explicit Real(Bits prec = kDefaultBits);
    Real(double v, Bits prec);
    Real(long v, Bits prec);
    Real(int v, Bits prec) : Real(static_cast<long>(v), prec) {}
    Real(const mpz_class& v, Bits prec);
    Real(const mpq_class& v, Bits prec);

    // Parses a decimal or scientific literal; throws InvalidInput on garbage.
    static Real parse(const std::string& text, Bits prec);
    static Real pi(Bits prec);
    static Real infinity(int sign, Bits prec);

    Real(const Real& other);
    Real(Real&& other) noexcept;
    Real& operator=(const Real& other);
    Real& operator=(Real&& other) noexcept;
    ~Real();

    Bits precision() const { return mpfr_get_prec(v_); }
    // Rounds in place to a new precision.
    Real& set_precision(Bits prec);
    Real rounded(Bits prec) const;

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    long double to_long_double() const { return mpfr_get_ld(v_, MPFR_RNDN); }
    // Exact binary value as a rational; the number must be finite.
    mpq_class to_rational() const;
    mpz_class floor_integer() const;
    mpz_class ceil_integer() const;
    std::string str(int digits = 20) const;

    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    bool is_finite() const { return mpfr_number_p(v_) != 0; }
    bool is_inf() const { return mpfr_inf_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }
    // Binary exponent e with 0.5 <= |x| / 2^e < 1; meaningless for zero.
    long exponent() const { return mpfr_get_exp(v_); }

    mpfr_srcptr get() const { return v_; }
    mpfr_ptr get() { return v_; }

    Real& operator+=(const Real& o);
    Real& operator-=(const Real& o);
    Real& operator*=(const Real& o);
    Real& operator/=(const Real& o);
    Real& operator+=(double o);
    Real& operator-=(double o);
    Real& operator*=(double o);
    Real& operator/=(double o);
    Real& operator*=(const mpz_class& o);

    Real operator-() const;

    friend Real operator+(Real a, const Real& b) { return a += b; }
    friend Real operator-(Real a, const Real& b) { return a -= b; }
    friend Real operator*(Real a, const Real& b) { return a *= b; }
    friend Real operator/(Real a, const Real& b) { return a /= b; }
    friend Real operator+(Real a, double b) { return a += b; }
    friend Real operator-(Real a, double b) { return a -= b; }
    friend Real operator*(Real a, double b) { return a *= b; }
    friend Real operator/(Real a, double b) { return a /= b; }
    friend Real operator+(double a, Real b) { return b += a; }
    friend Real operator*(double a, Real b) { return b *= a; }
    friend Real operator-(double a, const Real& b);
    friend Real operator/(double a, const Real& b);
    friend Real operator*(Real a, const mpz_class& b) { return a *= b; }

    friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
    friend bool operator<(const Real& a, const Real& b) { return mpfr_less_p(a.v_, b.v_) != 0; }
    friend bool operator<=(const Real& a, const Real& b) { return mpfr_lessequal_p(a.v_, b.v_) != 0; }
    friend bool operator>(const Real& a, const Real& b) { return mpfr_greater_p(a.v_, b.v_) != 0; }
    friend bool operator>=(const Real& a, const Real& b) { return mpfr_greaterequal_p(a.v_, b.v_) != 0; }
    friend bool operator<(const Real& a, double b) { return mpfr_cmp_d(a.v_, b) < 0; }
    friend bool operator>(const Real& a, double b) { return mpfr_cmp_d(a.v_, b) > 0; }
    friend bool operator<=(const Real& a, double b) { return mpfr_cmp_d(a.v_, b) <= 0; }
    friend bool operator>=(const Real& a, double b) { return mpfr_cmp_d(a.v_, b) >= 0; }

private:
    mpfr_t v_;
};

Real abs(const Real& x);
Real sqrt(const Real& x);
Real log(const Real& x);
Real exp(const Real& x);
Real sin(const Real& x);
Real cos(const Real& x);
Real tan(const Real& x);
Real floor(const Real& x);
Real log_integer(const mpz_class& n, Bits prec);
Real max(const Real& a, const Real& b);
Real min(const Real& a, const Real& b);

// x - floor(x), in [0, 1).
Real frac(const Real& x);
inline double frac(double x) {
    double f = x - std::floor(x);
    return f >= 1.0 ? 0.0 : f;
}

// Distance from x to the nearest integer.
Real torus_norm(const Real& x);
double torus_norm(double x);

// Helpers that let numeric templates run on both double and Real.
inline double to_double(double x) { return x; }
inline double to_double(const Real& x) { return x.to_double(); }
inline double lift(double v, double /*like*/) { return v; }
inline Real lift(double v, const Real& like) { return Real(v, like.precision()); }
inline double pi_like(double) { return 3.14159265358979323846; }
inline Real pi_like(const Real& like) { return Real::pi(like.precision()); }

}  // namespace qpspec
