#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace wco {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

struct value_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double to_double(const Rat& q) { return static_cast<double>(q); }

/// Floor of the integer square root. `n` must be nonnegative.
inline Int isqrt(const Int& n) {
    if (n < 0) throw value_error("isqrt of negative integer");
    return boost::multiprecision::sqrt(n);
}

/// Strips the largest perfect-square factor out of `n`, returning (square_root, rest)
/// with n == square_root^2 * rest. Trial division; radicands here come from lattice
/// norms and stay small.
inline std::pair<Int, Int> split_square(Int n) {
    Int root = 1;
    if (n <= 1) return {1, n};
    for (Int d = 2; d * d * d * d <= n || d <= 3; ++d) {
        if (d * d > n) break;
        while (n % (d * d) == 0) {
            n /= d * d;
            root *= d;
        }
    }
    // n may itself still be a perfect square (large prime squared).
    Int r = isqrt(n);
    if (r * r == n) {
        root *= r;
        n = 1;
    }
    return {root, n};
}

/// Exact scalar of the form q * sqrt(rad) with q rational and rad a positive
/// integer (rad == 1 means plain rational), falling back to a flagged double
/// when an operation leaves that set (e.g. sqrt of a non-square surd, or a sum
/// of incompatible surds). Every operation propagates exactness.
class Scalar {
public:
    Scalar() : q_(0), rad_(1), exact_(true), approx_(0.0) {}
    Scalar(int n) : q_(n), rad_(1), exact_(true), approx_(static_cast<double>(n)) {}
    Scalar(long long n) : q_(n), rad_(1), exact_(true), approx_(static_cast<double>(n)) {}
    Scalar(const Rat& q) : q_(q), rad_(1), exact_(true), approx_(to_double(q)) {}

    static Scalar surd(const Rat& coeff, const Int& radicand) {
        if (radicand <= 0) throw value_error("surd radicand must be positive");
        auto [root, rest] = split_square(radicand);
        Scalar s;
        s.q_ = coeff * Rat(root);
        s.rad_ = rest;
        if (s.q_ == 0) s.rad_ = 1;
        s.exact_ = true;
        s.approx_ = to_double(s.q_) * std::sqrt(static_cast<double>(rest));
        return s;
    }

    static Scalar inexact(double x) {
        Scalar s;
        s.exact_ = false;
        s.approx_ = x;
        return s;
    }

    bool exact() const { return exact_; }
    bool is_rational() const { return exact_ && rad_ == 1; }
    const Rat& rational() const {
        if (!is_rational()) throw value_error("scalar is not an exact rational");
        return q_;
    }
    const Rat& coeff() const { return q_; }
    const Int& radicand() const { return rad_; }

    double approx() const { return exact_ ? approx_exact() : approx_; }

    bool is_zero() const { return exact_ ? q_ == 0 : approx_ == 0.0; }
    int sign() const {
        if (exact_) return q_ == 0 ? 0 : (q_ > 0 ? 1 : -1);
        return approx_ == 0.0 ? 0 : (approx_ > 0 ? 1 : -1);
    }

    Scalar operator-() const {
        Scalar r = *this;
        if (r.exact_) r.q_ = -r.q_;
        r.approx_ = -r.approx_;
        return r;
    }

    friend Scalar operator+(const Scalar& a, const Scalar& b) {
        if (a.exact_ && b.exact_) {
            if (a.q_ == 0) return b;
            if (b.q_ == 0) return a;
            if (a.rad_ == b.rad_) {
                Scalar r;
                r.q_ = a.q_ + b.q_;
                r.rad_ = r.q_ == 0 ? Int(1) : a.rad_;
                r.exact_ = true;
                return r;
            }
        }
        return inexact(a.approx() + b.approx());
    }
    friend Scalar operator-(const Scalar& a, const Scalar& b) { return a + (-b); }

    friend Scalar operator*(const Scalar& a, const Scalar& b) {
        if (a.exact_ && b.exact_) {
            if (a.q_ == 0 || b.q_ == 0) return Scalar(Rat(0));
            Int g = boost::multiprecision::gcd(a.rad_, b.rad_);
            // sqrt(m1)*sqrt(m2) = g*sqrt((m1/g)*(m2/g))
            return surd(a.q_ * b.q_ * Rat(g), (a.rad_ / g) * (b.rad_ / g));
        }
        return inexact(a.approx() * b.approx());
    }

    friend Scalar operator/(const Scalar& a, const Scalar& b) {
        if (b.is_zero()) throw value_error("division by zero");
        if (a.exact_ && b.exact_) {
            if (a.q_ == 0) return Scalar(Rat(0));
            // 1/sqrt(m) = sqrt(m)/m
            Int g = boost::multiprecision::gcd(a.rad_, b.rad_);
            return surd(a.q_ / (b.q_ * Rat(b.rad_)) * Rat(g), (a.rad_ / g) * (b.rad_ / g));
        }
        return inexact(a.approx() / b.approx());
    }

    Scalar abs() const {
        return sign() < 0 ? -*this : *this;
    }

    /// Exact square; always rational for exact inputs.
    Scalar squared() const { return *this * *this; }

    Scalar pow(long long e) const {
        if (e == 0) return Scalar(Rat(1));
        bool inv = e < 0;
        unsigned long long k = inv ? -static_cast<unsigned long long>(e) : e;
        Scalar acc(Rat(1));
        Scalar base = *this;
        while (k) {
            if (k & 1) acc = acc * base;
            base = base * base;
            k >>= 1;
        }
        if (inv) return Scalar(Rat(1)) / acc;
        return acc;
    }

    /// sqrt stays exact for nonnegative rationals: sqrt(a/b) = sqrt(ab)/b.
    Scalar sqrt() const {
        if (sign() < 0) throw value_error("sqrt of negative value");
        if (is_rational()) {
            Int num = boost::multiprecision::numerator(q_);
            Int den = boost::multiprecision::denominator(q_);
            if (num == 0) return Scalar(Rat(0));
            return surd(Rat(1, den), num * den);
        }
        return inexact(std::sqrt(approx()));
    }

    Scalar floor() const {
        if (!exact_) return inexact(std::floor(approx_));
        if (rad_ == 1) {
            Int num = boost::multiprecision::numerator(q_);
            Int den = boost::multiprecision::denominator(q_);
            Int fl = num >= 0 ? Int(num / den) : Int(-((-num + den - 1) / den));
            return Scalar(Rat(fl));
        }
        // floor(q*sqrt(m)) for irrational sqrt(m): bracket with integer arithmetic.
        Int num = boost::multiprecision::numerator(q_);
        Int den = boost::multiprecision::denominator(q_);
        bool neg = num < 0;
        if (neg) num = -num;
        // x = (num/den)*sqrt(rad) > 0; k = floor(x) satisfies k^2 den^2 <= num^2 rad.
        Int t = num * num * rad_ / (den * den);
        Int k = isqrt(t);
        while ((k + 1) * (k + 1) * den * den <= num * num * rad_) ++k;
        while (k > 0 && k * k * den * den > num * num * rad_) --k;
        // irrational, so never an integer: floor of the negative is -(k+1)
        return Scalar(Rat(neg ? -(k + 1) : k));
    }

    /// Three-way comparison, exact whenever both sides are exact.
    friend int compare(const Scalar& a, const Scalar& b) {
        if (a.exact_ && b.exact_) {
            int sa = a.sign(), sb = b.sign();
            if (sa != sb) return sa < sb ? -1 : 1;
            if (sa == 0) return 0;
            if (a.rad_ == b.rad_) {
                if (a.q_ == b.q_) return 0;
                return a.q_ < b.q_ ? -1 : 1;
            }
            // same sign, different radicands: compare squares, sign-adjusted
            Rat qa = a.q_ * a.q_ * Rat(a.rad_);
            Rat qb = b.q_ * b.q_ * Rat(b.rad_);
            int c = qa == qb ? 0 : (qa < qb ? -1 : 1);
            return sa > 0 ? c : -c;
        }
        double da = a.approx(), db = b.approx();
        return da < db ? -1 : (da > db ? 1 : 0);
    }
    friend bool operator<(const Scalar& a, const Scalar& b) { return compare(a, b) < 0; }
    friend bool operator>(const Scalar& a, const Scalar& b) { return compare(a, b) > 0; }
    friend bool operator<=(const Scalar& a, const Scalar& b) { return compare(a, b) <= 0; }
    friend bool operator>=(const Scalar& a, const Scalar& b) { return compare(a, b) >= 0; }
    friend bool operator==(const Scalar& a, const Scalar& b) {
        if (a.exact_ != b.exact_) return false;
        return compare(a, b) == 0;
    }
    friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }

    std::string str() const {
        if (!exact_) return std::to_string(approx_);
        std::string s = q_.str();
        if (rad_ != 1) s += "*sqrt(" + rad_.str() + ")";
        return s;
    }

private:
    double approx_exact() const {
        double d = to_double(q_);
        if (rad_ != 1) d *= std::sqrt(static_cast<double>(rad_));
        return d;
    }

    Rat q_;
    Int rad_;
    bool exact_;
    double approx_;
};

/// Complex value over Scalar. Squared modulus is rational whenever both parts
/// are exact (the surd parts square away), which keeps norm comparisons exact.
struct Complex {
    Scalar re, im;

    Complex() = default;
    Complex(Scalar r) : re(std::move(r)) {}
    Complex(Scalar r, Scalar i) : re(std::move(r)), im(std::move(i)) {}

    bool exact() const { return re.exact() && im.exact(); }
    bool is_zero() const { return re.is_zero() && im.is_zero(); }
    bool is_real() const { return im.is_zero(); }

    Scalar abs_sq() const { return re.squared() + im.squared(); }
    Scalar abs() const { return abs_sq().sqrt(); }

    friend Complex operator+(const Complex& a, const Complex& b) {
        return {a.re + b.re, a.im + b.im};
    }
    friend Complex operator-(const Complex& a, const Complex& b) {
        return {a.re - b.re, a.im - b.im};
    }
    friend Complex operator*(const Complex& a, const Complex& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend Complex operator*(const Scalar& s, const Complex& z) {
        return {s * z.re, s * z.im};
    }
    friend Complex operator/(const Complex& a, const Complex& b) {
        Scalar d = b.abs_sq();
        if (d.is_zero()) throw value_error("complex division by zero");
        return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
    }
    friend bool operator==(const Complex& a, const Complex& b) {
        return a.re == b.re && a.im == b.im;
    }
};

}  // namespace wco
