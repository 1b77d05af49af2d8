#include <gtest/gtest.h>

#include "emrm/rational.hpp"

using namespace emrm;

TEST(Rational, BasicArithmeticStaysExact) {
  const Rational a = make_rational(1, 3);
  const Rational b = make_rational(1, 6);
  EXPECT_EQ(a + b, make_rational(1, 2));
  EXPECT_EQ(to_string(a - b), "1/6");
  EXPECT_EQ(to_string(Rational{4}), "4");
  EXPECT_THROW(make_rational(1, 0), InvalidArgumentError);
}

TEST(Rational, PowersAndFactorials) {
  EXPECT_EQ(pow(make_rational(2, 3), 3), make_rational(8, 27));
  EXPECT_EQ(pow(make_rational(2, 3), -2), make_rational(9, 4));
  EXPECT_EQ(pow(Rational{0}, 0), Rational{1});
  EXPECT_EQ(factorial(10), Integer(3628800));
  EXPECT_EQ(binomial(6, 2), Integer(15));
  EXPECT_EQ(binomial(6, 7), Integer(0));
  EXPECT_EQ(falling_factorial(Integer(6), 3), Integer(120));
  EXPECT_EQ(falling_factorial(Integer(2), 3), Integer(0));
}

TEST(Rational, FactorialOfTwentyFiveNeedsBigIntegers) {
  EXPECT_EQ(factorial(25).str(), "15511210043330985984000000");
}

TEST(SurdValue, HalfPowersOfN) {
  const SurdValue r = SurdValue::sqrt_power(Integer(5), -1);  // 1/sqrt(5)
  EXPECT_FALSE(r.is_rational());
  EXPECT_EQ(r * r, SurdValue(make_rational(1, 5)));
  EXPECT_EQ(SurdValue::sqrt_power(Integer(5), 4), SurdValue(Rational{25}));
  EXPECT_NEAR(SurdValue::sqrt_power(Integer(7), 3).to_double(), 7.0 * std::sqrt(7.0), 1e-12);
}

TEST(SurdValue, FieldOperations) {
  const SurdValue s = SurdValue::sqrt_power(Integer(3), 1);
  const SurdValue x = SurdValue(Rational{2}) + s;  // 2 + sqrt 3
  const SurdValue y = SurdValue(Rational{2}) - s;  // 2 - sqrt 3
  EXPECT_EQ(x * y, SurdValue(Rational{1}));
  EXPECT_EQ((x - x), SurdValue(Rational{0}));
  EXPECT_EQ(x.to_string(), "2 + 1*sqrt(3)");
  EXPECT_THROW(s + SurdValue::sqrt_power(Integer(5), 1), InvalidArgumentError);
}
