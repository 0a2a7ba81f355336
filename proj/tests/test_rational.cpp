#include "doctest.h"
#include "mframe/rational.hpp"

using mframe::Rational;

TEST_CASE("rational arithmetic stays in lowest terms with positive denominator") {
    Rational a(6, -4);
    CHECK(a.num() == -3);
    CHECK(a.den() == 2);
    CHECK((Rational(1, 3) + Rational(1, 6)) == Rational(1, 2));
    CHECK((Rational(2, 3) * Rational(3, 4)) == Rational(1, 2));
    CHECK((Rational(1) / Rational(-2, 5)) == Rational(-5, 2));
    CHECK(Rational(2).pow(-2) == Rational(1, 4));
}

TEST_CASE("rational nth roots") {
    Rational r;
    CHECK(Rational(9, 4).nth_root(2, r));
    CHECK(r == Rational(3, 2));
    CHECK(Rational(-8).nth_root(3, r));
    CHECK(r == Rational(-2));
    CHECK_FALSE(Rational(2).nth_root(2, r));
    CHECK_FALSE(Rational(-4).nth_root(2, r));
}

TEST_CASE("rational overflow throws instead of wrapping") {
    Rational big(INT64_MAX / 2, 1);
    CHECK_THROWS_AS(big * big, mframe::OverflowError);
}
