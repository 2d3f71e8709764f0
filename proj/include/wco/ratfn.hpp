#pragma once

#include "wco/number.hpp"

#include <optional>
#include <vector>

namespace wco {

/// Polynomial with rational coefficients, index = degree.
struct Poly {
    std::vector<Rat> c;

    static Poly constant(const Rat& q) { return {{q}}; }
    static Poly var() { return {{Rat(0), Rat(1)}}; }

    void trim() {
        while (!c.empty() && c.back() == 0) c.pop_back();
    }
    int degree() const { return static_cast<int>(c.size()) - 1; }  // -1 for zero poly
    bool is_zero() const { return c.empty(); }
    Rat leading() const { return c.empty() ? Rat(0) : c.back(); }

    Rat eval(const Rat& x) const {
        Rat acc(0);
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
        return acc;
    }

    friend Poly operator+(const Poly& a, const Poly& b) {
        Poly r;
        r.c.resize(std::max(a.c.size(), b.c.size()), Rat(0));
        for (std::size_t i = 0; i < a.c.size(); ++i) r.c[i] += a.c[i];
        for (std::size_t i = 0; i < b.c.size(); ++i) r.c[i] += b.c[i];
        r.trim();
        return r;
    }
    friend Poly operator-(const Poly& a, const Poly& b) {
        Poly nb = b;
        for (auto& q : nb.c) q = -q;
        return a + nb;
    }
    friend Poly operator*(const Poly& a, const Poly& b) {
        if (a.is_zero() || b.is_zero()) return {};
        Poly r;
        r.c.assign(a.c.size() + b.c.size() - 1, Rat(0));
        for (std::size_t i = 0; i < a.c.size(); ++i)
            for (std::size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
        r.trim();
        return r;
    }

    Poly derivative() const {
        Poly r;
        for (std::size_t i = 1; i < c.size(); ++i) r.c.push_back(c[i] * Rat(i));
        r.trim();
        return r;
    }

    /// Substitute another polynomial for the variable.
    Poly compose(const Poly& g) const {
        Poly acc;
        for (auto it = c.rbegin(); it != c.rend(); ++it) {
            acc = acc * g;
            acc = acc + Poly::constant(*it);
        }
        acc.trim();
        return acc;
    }

    /// Cauchy bound: all real roots lie in [-B, B].
    Rat root_bound() const {
        if (degree() <= 0) return Rat(0);
        Rat lead = c.back();
        Rat m(0);
        for (std::size_t i = 0; i + 1 < c.size(); ++i) {
            Rat q = boost::multiprecision::abs(c[i] / lead);
            if (q > m) m = q;
        }
        return m + 1;
    }
};

/// Extended nonnegative-or-real value used for sups/infs/limits.
struct ExtReal {
    enum class Kind { finite, plus_inf, minus_inf };
    Kind kind = Kind::finite;
    Rat value;

    static ExtReal finite(const Rat& q) { return {Kind::finite, q}; }
    static ExtReal pinf() { return {Kind::plus_inf, Rat(0)}; }
    static ExtReal minf() { return {Kind::minus_inf, Rat(0)}; }

    bool is_finite() const { return kind == Kind::finite; }
    bool is_pinf() const { return kind == Kind::plus_inf; }
    bool is_minf() const { return kind == Kind::minus_inf; }

    friend bool operator==(const ExtReal& a, const ExtReal& b) {
        if (a.kind != b.kind) return false;
        return a.kind != Kind::finite || a.value == b.value;
    }
    friend bool operator<(const ExtReal& a, const ExtReal& b) {
        if (a.kind == b.kind) return a.kind == Kind::finite && a.value < b.value;
        if (a.is_minf()) return true;
        if (b.is_minf()) return false;
        return b.is_pinf();
    }
    double approx() const {
        if (is_pinf()) return std::numeric_limits<double>::infinity();
        if (is_minf()) return -std::numeric_limits<double>::infinity();
        return to_double(value);
    }
};

/// Arithmetic progression of integer arguments: n >= start, n == residue (mod modulus).
struct ArgClass {
    std::int64_t start = 0;
    std::int64_t residue = 0;
    std::int64_t modulus = 1;

    bool contains(std::int64_t n) const {
        if (n < start) return false;
        std::int64_t r = n % modulus;
        if (r < 0) r += modulus;
        return r == residue % modulus;
    }
    std::int64_t first() const {
        std::int64_t r = residue % modulus;
        if (r < 0) r += modulus;
        std::int64_t n = start + ((r - start) % modulus + modulus) % modulus;
        return n;
    }
    std::int64_t next_after(std::int64_t n) const {
        std::int64_t f = first();
        if (n < f) return f;
        return n + modulus - ((n - f) % modulus);
    }
};

/// Result of an exact extremum over an argument class.
struct Extremum {
    ExtReal value;
    bool attained = false;
    std::int64_t at = 0;  // meaningful when attained
};

/// Rational function p/q over one integer variable, with exact tail analysis.
/// All "decide" routines either return an exact answer or nullopt when the
/// critical region is too large to scan (callers fall back to numerics).
class RatFn {
public:
    RatFn() : num_(Poly::constant(Rat(0))), den_(Poly::constant(Rat(1))) {}
    RatFn(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) {
        num_.trim();
        den_.trim();
        if (den_.is_zero()) throw value_error("rational function with zero denominator");
    }
    static RatFn constant(const Rat& q) { return RatFn(Poly::constant(q), Poly::constant(Rat(1))); }
    static RatFn var() { return RatFn(Poly::var(), Poly::constant(Rat(1))); }

    const Poly& num() const { return num_; }
    const Poly& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }

    std::optional<Rat> eval(const Rat& x) const {
        Rat d = den_.eval(x);
        if (d == 0) return std::nullopt;
        return num_.eval(x) / d;
    }

    friend RatFn operator+(const RatFn& a, const RatFn& b) {
        return RatFn(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend RatFn operator-(const RatFn& a, const RatFn& b) {
        return RatFn(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend RatFn operator*(const RatFn& a, const RatFn& b) {
        return RatFn(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend RatFn operator/(const RatFn& a, const RatFn& b) {
        if (b.num_.is_zero()) throw value_error("division by zero rational function");
        return RatFn(a.num_ * b.den_, a.den_ * b.num_);
    }
    RatFn pow(long long e) const {
        RatFn acc = RatFn::constant(Rat(1));
        RatFn base = e < 0 ? RatFn(den_, num_) : *this;
        unsigned long long k = e < 0 ? -static_cast<unsigned long long>(e) : e;
        while (k) {
            if (k & 1) acc = acc * base;
            base = base * base;
            k >>= 1;
        }
        return acc;
    }
    /// Substitute a polynomial for the variable.
    RatFn compose_poly(const Poly& g) const { return RatFn(num_.compose(g), den_.compose(g)); }

    /// Polynomial part when the function is a polynomial (division leaves no
    /// remainder), e.g. (n^2+n)/2.
    std::optional<Poly> as_poly() const {
        if (num_.is_zero()) return Poly{};
        if (den_.degree() == 0) {
            Poly q = num_;
            for (auto& c : q.c) c /= den_.c[0];
            return q;
        }
        // long division
        Poly rem = num_, quot;
        quot.c.assign(std::max<std::size_t>(1, num_.c.size()), Rat(0));
        while (rem.degree() >= den_.degree() && !rem.is_zero()) {
            int shift = rem.degree() - den_.degree();
            Rat f = rem.leading() / den_.leading();
            quot.c[static_cast<std::size_t>(shift)] += f;
            Poly sub;
            sub.c.assign(static_cast<std::size_t>(shift) + den_.c.size(), Rat(0));
            for (std::size_t i = 0; i < den_.c.size(); ++i)
                sub.c[static_cast<std::size_t>(shift) + i] = den_.c[i] * f;
            rem = rem - sub;
        }
        if (!rem.is_zero()) return std::nullopt;
        quot.trim();
        return quot;
    }

    bool identically(const Rat& c) const { return (num_ - Poly::constant(c) * den_).is_zero(); }

    ExtReal limit_at_infinity() const {
        if (num_.is_zero()) return ExtReal::finite(Rat(0));
        int dn = num_.degree(), dd = den_.degree();
        if (dn < dd) return ExtReal::finite(Rat(0));
        Rat lead = num_.leading() / den_.leading();
        if (dn == dd) return ExtReal::finite(lead);
        return lead > 0 ? ExtReal::pinf() : ExtReal::minf();
    }

    /// Bound beyond which the function is monotone with a pole-free,
    /// sign-constant denominator.
    Rat tail_bound() const {
        Poly w = num_.derivative() * den_ - num_ * den_.derivative();
        Rat b = w.root_bound();
        Rat bd = den_.root_bound();
        return std::max(b, bd) + 1;
    }

    std::optional<Extremum> sup_over(const ArgClass& cls, std::int64_t scan_cap = 1'000'000) const {
        return extremum(cls, true, scan_cap);
    }
    std::optional<Extremum> inf_over(const ArgClass& cls, std::int64_t scan_cap = 1'000'000) const {
        return extremum(cls, false, scan_cap);
    }

    /// Integer zeros of the function within the class (exact, or nullopt when
    /// the root region is too large). A zero numerator means "all of it".
    std::optional<std::vector<std::int64_t>> zeros_over(const ArgClass& cls,
                                                        std::int64_t scan_cap = 1'000'000) const {
        if (num_.is_zero()) return std::nullopt;  // callers must treat identically-zero specially
        Rat nb = num_.root_bound();
        std::int64_t hi = bound_to_int(std::max(nb, den_.root_bound()));
        if (hi > scan_cap) return std::nullopt;
        std::vector<std::int64_t> zs;
        for (std::int64_t n = cls.first(); n <= hi; n = cls.next_after(n)) {
            auto v = eval(Rat(n));
            if (v && *v == 0) zs.push_back(n);
        }
        return zs;
    }

    /// Sign of the function on the tail of the class (+1, -1, or 0 if
    /// identically zero there).
    std::optional<int> tail_sign(const ArgClass& cls) const {
        if (num_.is_zero()) return 0;
        std::int64_t k = bound_to_int(tail_bound());
        std::int64_t n1 = cls.next_after(std::max(k, cls.start));
        auto v = eval(Rat(n1));
        if (!v) return std::nullopt;
        return *v == 0 ? 0 : (*v > 0 ? 1 : -1);
    }

private:
    static std::int64_t bound_to_int(const Rat& b) {
        Int num = boost::multiprecision::numerator(b);
        Int den = boost::multiprecision::denominator(b);
        Int q = num / den + 1;
        if (q > Int(INT64_MAX / 4)) return INT64_MAX / 4;
        return static_cast<std::int64_t>(q);
    }

    std::optional<Extremum> extremum(const ArgClass& cls, bool want_sup,
                                     std::int64_t scan_cap) const {
        std::int64_t k = bound_to_int(tail_bound());
        std::int64_t lo = cls.first();
        if ((k - lo) / cls.modulus > scan_cap) return std::nullopt;
        Extremum best;
        bool have = false;
        auto consider = [&](const ExtReal& v, bool att, std::int64_t at) {
            if (!have || (want_sup ? best.value < v : v < best.value) ||
                (v == best.value && att && !best.attained)) {
                best.value = v;
                best.attained = att;
                best.at = at;
                have = true;
            }
        };
        for (std::int64_t n = lo; n <= k; n = cls.next_after(n)) {
            auto v = eval(Rat(n));
            if (!v) return std::nullopt;  // pole inside scan region: give up
            consider(ExtReal::finite(*v), true, n);
        }
        // beyond k the function is monotone: endpoint and limit bracket the tail
        std::int64_t n1 = cls.next_after(k);
        auto v1 = eval(Rat(n1));
        if (!v1) return std::nullopt;
        consider(ExtReal::finite(*v1), true, n1);
        consider(limit_at_infinity(), false, 0);
        return best;
    }

    Poly num_, den_;
};

}  // namespace wco
