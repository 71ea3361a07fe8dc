#pragma once

#include "qpspec/real.hpp"

#include <array>
#include <cmath>

namespace qpspec {

template <class T>
struct Vec2 {
    T x;
    T y;
};

// Row-major [[a, b], [c, d]].
template <class T>
struct Mat2 {
    T a, b, c, d;

    static Mat2 identity(const T& like) {
        return {lift(1.0, like), lift(0.0, like), lift(0.0, like), lift(1.0, like)};
    }

    T det() const { return a * d - b * c; }
    T trace() const { return a + d; }
    // Adjugate; equals the inverse when det = 1.
    Mat2 adjugate() const { return {d, -b, -c, a}; }
    Mat2 inverse() const {
        T inv = lift(1.0, a) / det();
        return {d * inv, -b * inv, -c * inv, a * inv};
    }

    friend Mat2 operator*(const Mat2& m, const Mat2& n) {
        return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d, m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
    }
    friend Vec2<T> operator*(const Mat2& m, const Vec2<T>& v) { return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y}; }
    friend Mat2 operator+(const Mat2& m, const Mat2& n) { return {m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d}; }
    friend Mat2 operator-(const Mat2& m, const Mat2& n) { return {m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d}; }
    friend Mat2 operator*(const Mat2& m, const T& s) { return {m.a * s, m.b * s, m.c * s, m.d * s}; }
};

template <class T>
T norm(const Vec2<T>& v) {
    using std::sqrt;
    return sqrt(v.x * v.x + v.y * v.y);
}

// Largest singular value from the closed form
// sigma^2 = (F + sqrt(F^2 - 4 det^2)) / 2, F the squared Frobenius norm.
template <class T>
T norm(const Mat2<T>& m) {
    using std::sqrt;
    const T f = m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d;
    // F^2 - 4 det^2 = ((a-d)^2 + (b+c)^2)((a+d)^2 + (b-c)^2)
    const T s1 = (m.a - m.d) * (m.a - m.d) + (m.b + m.c) * (m.b + m.c);
    const T s2 = (m.a + m.d) * (m.a + m.d) + (m.b - m.c) * (m.b - m.c);
    return sqrt((f + sqrt(s1 * s2)) * 0.5);
}

template <class T>
T frobenius(const Mat2<T>& m) {
    using std::sqrt;
    return sqrt(m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d);
}

template <class T>
Mat2<double> to_double(const Mat2<T>& m) {
    return {to_double(m.a), to_double(m.b), to_double(m.c), to_double(m.d)};
}

}  // namespace qpspec
