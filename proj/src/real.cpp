#include "qpspec/real.hpp"

#include "qpspec/error.hpp"


namespace qpspec {

namespace {

void widen(Real& a, const Real& b) {
    if (b.precision() > a.precision()) {
        a.set_precision(b.precision());
    }
}

}  // namespace

Real::Real(Bits prec) {
    mpfr_init2(v_, prec);
    mpfr_set_zero(v_, 1);
}

Real::Real(double v, Bits prec) {
    mpfr_init2(v_, prec);
    mpfr_set_d(v_, v, MPFR_RNDN);
}

Real::Real(long v, Bits prec) {
    mpfr_init2(v_, prec);
    mpfr_set_si(v_, v, MPFR_RNDN);
}

Real::Real(const mpz_class& v, Bits prec) {
    mpfr_init2(v_, prec);
    mpfr_set_z(v_, v.get_mpz_t(), MPFR_RNDN);
}

Real::Real(const mpq_class& v, Bits prec) {
    mpfr_init2(v_, prec);
    mpfr_set_q(v_, v.get_mpq_t(), MPFR_RNDN);
}

Real Real::parse(const std::string& text, Bits prec) {
    Real r(prec);
    char* end = nullptr;
    if (!text.empty()) {
        mpfr_strtofr(r.v_, text.c_str(), &end, 10, MPFR_RNDN);
    }
    if (end == nullptr || end == text.c_str() || *end != '\0') {
        throw Error(ErrorKind::InvalidInput, "not a real number: '" + text + "'");
    }
    return r;
}

Real Real::pi(Bits prec) {
    Real r(prec);
    mpfr_const_pi(r.v_, MPFR_RNDN);
    return r;
}

Real Real::infinity(int sign, Bits prec) {
    Real r(prec);
    mpfr_set_inf(r.v_, sign);
    return r;
}

Real::Real(const Real& other) {
    mpfr_init2(v_, other.precision());
    mpfr_set(v_, other.v_, MPFR_RNDN);
}

Real::Real(Real&& other) noexcept {
    mpfr_init2(v_, MPFR_PREC_MIN);
    mpfr_swap(v_, other.v_);
}

Real& Real::operator=(const Real& other) {
    if (this != &other) {
        mpfr_set_prec(v_, other.precision());
        mpfr_set(v_, other.v_, MPFR_RNDN);
    }
    return *this;
}

Real& Real::operator=(Real&& other) noexcept {
    mpfr_swap(v_, other.v_);
    return *this;
}

Real::~Real() { mpfr_clear(v_); }

Real& Real::set_precision(Bits prec) {
    mpfr_prec_round(v_, prec, MPFR_RNDN);
    return *this;
}

Real Real::rounded(Bits prec) const {
    Real r(*this);
    r.set_precision(prec);
    return r;
}

mpq_class Real::to_rational() const {
    if (!is_finite()) {
        throw Error(ErrorKind::Numeric, "cannot convert a non-finite value to a rational");
    }
    mpz_class mant;
    mpfr_exp_t e = mpfr_get_z_2exp(mant.get_mpz_t(), v_);
    mpq_class q(mant);
    if (e >= 0) {
        mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
    } else {
        mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
    }
    q.canonicalize();
    return q;
}

mpz_class Real::floor_integer() const {
    mpz_class z;
    mpfr_get_z(z.get_mpz_t(), v_, MPFR_RNDD);
    return z;
}

mpz_class Real::ceil_integer() const {
    mpz_class z;
    mpfr_get_z(z.get_mpz_t(), v_, MPFR_RNDU);
    return z;
}

std::string Real::str(int digits) const {
    char* buf = nullptr;
    mpfr_asprintf(&buf, "%.*Rg", digits, v_);
    std::string s(buf);
    mpfr_free_str(buf);
    return s;
}

Real& Real::operator+=(const Real& o) {
    widen(*this, o);
    mpfr_add(v_, v_, o.v_, MPFR_RNDN);
    return *this;
}

Real& Real::operator-=(const Real& o) {
    widen(*this, o);
    mpfr_sub(v_, v_, o.v_, MPFR_RNDN);
    return *this;
}

Real& Real::operator*=(const Real& o) {
    widen(*this, o);
    mpfr_mul(v_, v_, o.v_, MPFR_RNDN);
    return *this;
}

Real& Real::operator/=(const Real& o) {
    widen(*this, o);
    mpfr_div(v_, v_, o.v_, MPFR_RNDN);
    return *this;
}

Real& Real::operator+=(double o) {
    mpfr_add_d(v_, v_, o, MPFR_RNDN);
    return *this;
}

Real& Real::operator-=(double o) {
    mpfr_sub_d(v_, v_, o, MPFR_RNDN);
    return *this;
}

Real& Real::operator*=(double o) {
    mpfr_mul_d(v_, v_, o, MPFR_RNDN);
    return *this;
}

Real& Real::operator/=(double o) {
    mpfr_div_d(v_, v_, o, MPFR_RNDN);
    return *this;
}

Real& Real::operator*=(const mpz_class& o) {
    mpfr_mul_z(v_, v_, o.get_mpz_t(), MPFR_RNDN);
    return *this;
}

Real Real::operator-() const {
    Real r(precision());
    mpfr_neg(r.v_, v_, MPFR_RNDN);
    return r;
}

Real operator-(double a, const Real& b) {
    Real r(b.precision());
    mpfr_d_sub(r.get(), a, b.get(), MPFR_RNDN);
    return r;
}

Real operator/(double a, const Real& b) {
    Real r(b.precision());
    mpfr_d_div(r.get(), a, b.get(), MPFR_RNDN);
    return r;
}

#define QPSPEC_UNARY(name, fn)                   \
    Real name(const Real& x) {                   \
        Real r(x.precision());                   \
        fn(r.get(), x.get(), MPFR_RNDN);         \
        return r;                                \
    }

QPSPEC_UNARY(abs, mpfr_abs)
QPSPEC_UNARY(sqrt, mpfr_sqrt)
QPSPEC_UNARY(log, mpfr_log)
QPSPEC_UNARY(exp, mpfr_exp)
QPSPEC_UNARY(sin, mpfr_sin)
QPSPEC_UNARY(cos, mpfr_cos)
QPSPEC_UNARY(tan, mpfr_tan)

#undef QPSPEC_UNARY

Real floor(const Real& x) {
    Real r(x.precision());
    mpfr_floor(r.get(), x.get());
    return r;
}

Real log_integer(const mpz_class& n, Bits prec) {
    Real r(n, prec + 64);
    mpfr_log(r.get(), r.get(), MPFR_RNDN);
    return r.rounded(prec);
}

Real max(const Real& a, const Real& b) { return a < b ? b : a; }
Real min(const Real& a, const Real& b) { return b < a ? b : a; }

Real frac(const Real& x) {
    Real r(x.precision());
    mpfr_frac(r.get(), x.get(), MPFR_RNDN);
    if (r.sign() < 0) {
        r += 1.0;
    }
    if (r >= 1.0) {
        r = Real(x.precision());
    }
    return r;
}

Real torus_norm(const Real& x) {
    Real f = frac(x);
    Real g = 1.0 - f;
    return min(f, g);
}

double torus_norm(double x) {
    double f = frac(x);
    return f < 1.0 - f ? f : 1.0 - f;
}

}  // namespace qpspec
