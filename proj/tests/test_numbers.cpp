#include "wco/number.hpp"
#include "wco/ratfn.hpp"

#include <doctest.h>

using namespace wco;

TEST_CASE("exact rational arithmetic") {
    Scalar a(Rat(1, 3)), b(Rat(2, 5));
    CHECK((a + b).rational() == Rat(11, 15));
    CHECK((a * b).rational() == Rat(2, 15));
    CHECK((a / b).rational() == Rat(5, 6));
    CHECK((a - b).sign() < 0);
    CHECK(a.pow(-2).rational() == Rat(9));
}

TEST_CASE("surd arithmetic stays exact where it can") {
    // sqrt(2) * sqrt(2) = 2
    Scalar r2 = Scalar(Rat(2)).sqrt();
    CHECK(r2.exact());
    CHECK(!r2.is_rational());
    CHECK((r2 * r2).rational() == Rat(2));
    // sqrt(18) = 3 sqrt(2)
    Scalar r18 = Scalar(Rat(18)).sqrt();
    CHECK(r18.coeff() == Rat(3));
    CHECK(r18.radicand() == 2);
    // sqrt(9/4) is rational
    CHECK(Scalar(Rat(9, 4)).sqrt().rational() == Rat(3, 2));
    // sqrt(m)/sqrt(m) = 1 exactly
    Scalar r5 = Scalar(Rat(5)).sqrt();
    CHECK((r5 / r5).rational() == Rat(1));
    // incompatible radicand sums drop to inexact
    CHECK(!(r2 + r5).exact());
    // same-radicand sums stay exact
    CHECK((r2 + r2).coeff() == Rat(2));
}

TEST_CASE("surd comparisons and floor are exact") {
    Scalar r2 = Scalar(Rat(2)).sqrt();
    CHECK(r2 > Scalar(Rat(7, 5)));
    CHECK(r2 < Scalar(Rat(3, 2)));
    CHECK(r2.floor().rational() == Rat(1));
    CHECK((-r2).floor().rational() == Rat(-2));
    CHECK((Scalar(Rat(10)) * r2).floor().rational() == Rat(14));  // 14.142...
    CHECK(Scalar(Rat(-7, 2)).floor().rational() == Rat(-4));
    CHECK(Scalar(Rat(7, 2)).floor().rational() == Rat(3));
}

TEST_CASE("complex modulus squared is rational for exact parts") {
    Complex z(Scalar(Rat(3, 5)), Scalar(Rat(4, 5)));
    CHECK(z.abs_sq().rational() == Rat(1));
    CHECK(z.abs().rational() == Rat(1));
    Scalar r3 = Scalar(Rat(3)).sqrt();
    Complex w(r3, Scalar(Rat(1)));
    CHECK(w.abs_sq().rational() == Rat(4));
}

TEST_CASE("polynomial composition and root bound") {
    Poly n = Poly::var();
    Poly g = n * n + Poly::constant(Rat(1));  // n^2 + 1
    CHECK(g.eval(Rat(3)) == Rat(10));
    Poly h = g.compose(g);  // (n^2+1)^2 + 1
    CHECK(h.eval(Rat(2)) == Rat(26));
    // Cauchy bound dominates the roots of n^2 - 4
    Poly p = n * n - Poly::constant(Rat(4));
    CHECK(p.root_bound() >= 2);
}

namespace {

/// Dense-scan oracle for extrema over a class window (brute force).
Rat brute_sup(const RatFn& f, const ArgClass& cls, std::int64_t hi) {
    bool first = true;
    Rat best(0);
    for (std::int64_t k = cls.first(); k <= hi; k = cls.next_after(k)) {
        Rat v = *f.eval(Rat(k));
        if (first || v > best) best = v;
        first = false;
    }
    return best;
}

}  // namespace

TEST_CASE("rational-function tail analysis against a dense scan") {
    RatFn n = RatFn::var();
    RatFn one = RatFn::constant(Rat(1));

    // f = (n^2 - 10n + 3) / (n^2 + 1): limit 1, interior dip
    RatFn f = (n * n - RatFn::constant(Rat(10)) * n + RatFn::constant(Rat(3))) /
              (n * n + one);
    CHECK(f.limit_at_infinity() == ExtReal::finite(Rat(1)));
    ArgClass cls{1, 0, 1};
    auto inf = f.inf_over(cls);
    REQUIRE(inf.has_value());
    // brute force over a wide window
    Rat best(1);
    for (std::int64_t k = 1; k <= 10000; ++k) {
        Rat v = *f.eval(Rat(k));
        if (v < best) best = v;
    }
    CHECK(inf->value == ExtReal::finite(best));
    CHECK(inf->attained);

    auto sup = f.sup_over(cls);
    REQUIRE(sup.has_value());
    CHECK(sup->value == ExtReal::finite(Rat(1)));  // supremum is the limit
    CHECK(!sup->attained);

    // 1/n on odd arguments: sup attained at 1, inf is the limit 0
    RatFn g = one / n;
    ArgClass odd{1, 1, 2};
    CHECK(g.sup_over(odd)->value == ExtReal::finite(Rat(1)));
    CHECK(g.sup_over(odd)->attained);
    CHECK(g.inf_over(odd)->value == ExtReal::finite(Rat(0)));
    CHECK(!g.inf_over(odd)->attained);
    CHECK(brute_sup(g, odd, 999) == Rat(1));

    // degree growth diverges
    CHECK((n * n).limit_at_infinity().is_pinf());

    // zeros over a class: (n-3)(n-8) on evens has the single zero 8
    RatFn z = (n - RatFn::constant(Rat(3))) * (n - RatFn::constant(Rat(8)));
    ArgClass even{0, 0, 2};
    auto zeros = z.zeros_over(even);
    REQUIRE(zeros.has_value());
    CHECK(*zeros == std::vector<std::int64_t>{8});

    // identically-constant detection
    RatFn c = (n + n) / (RatFn::constant(Rat(2)) * n);
    CHECK(c.identically(Rat(1)));
}

TEST_CASE("polynomial division recovers integer-valued polynomials") {
    // (n^2 + n) / 2 is a polynomial with rational coefficients
    RatFn n = RatFn::var();
    RatFn f = (n * n + n) / RatFn::constant(Rat(2));
    auto p = f.as_poly();
    REQUIRE(p.has_value());
    CHECK(p->eval(Rat(7)) == Rat(28));
    // 1/n is not
    CHECK(!(RatFn::constant(Rat(1)) / n).as_poly().has_value());
}
