#include <gtest/gtest.h>

#include "drs/rational.hpp"

using drs::Rational;

TEST(Rational, NormalizesSignAndGcd) {
  const Rational r(6, -4);
  EXPECT_EQ(r.num(), -3);
  EXPECT_EQ(r.den(), 2);
  EXPECT_EQ(Rational(0, 5), Rational(0));
}

TEST(Rational, Parse) {
  EXPECT_EQ(Rational::parse("10864/7953"), Rational(10864, 7953));
  EXPECT_EQ(Rational::parse("3"), Rational(3));
  EXPECT_EQ(Rational::parse("+4/6"), Rational(2, 3));
  EXPECT_EQ(Rational::parse("-1/2").num(), -1);
  for (const char* bad : {"", "/", "1/", "a/2", "1/0", "1.5", "2/3x"}) EXPECT_THROW(Rational::parse(bad), drs::InvalidParameter) << bad;
}

TEST(Rational, OrderingWithoutOverflow) {
  const Rational a(4'000'000'000'000LL, 3), b(4'000'000'000'001LL, 3);
  EXPECT_LT(a, b);
  EXPECT_GT(Rational(2), Rational(3, 2));
  EXPECT_LE(Rational(1), Rational(2, 2));
}

TEST(Rational, Text) {
  EXPECT_EQ(Rational(15, 11).to_string(), "15/11");
  EXPECT_DOUBLE_EQ(Rational(3, 5).to_double(), 0.6);
}
