#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "drs/analysis.hpp"

using drs::Rational;
using cplx = std::complex<double>;

TEST(ContinuedFraction, ConvergentsAreGoodApproximations) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> U(-50, 50);
  for (int trial = 0; trial < 200; ++trial) {
    const double x = U(rng);
    for (double tol : {1e-2, 1e-5, 1e-9}) {
      const auto r = drs::continued_fraction_approx(x, tol);
      const double err = std::fabs(x - r.to_double());
      EXPECT_LT(err, tol);
      EXPECT_LT(err, 1.0 / (double(r.den()) * double(r.den())));
    }
  }
}

TEST(ContinuedFraction, ExactRationalsAndErrors) {
  EXPECT_EQ(drs::continued_fraction_approx(0.75, 1e-12), Rational(3, 4));
  EXPECT_EQ(drs::continued_fraction_approx(-2.0, 1e-3), Rational(-2));
  EXPECT_EQ(drs::continued_fraction_approx(std::sqrt(2.0), 1e-2), Rational(17, 12));
  EXPECT_THROW(drs::continued_fraction_approx(1.0, 0.0), drs::InvalidParameter);
  EXPECT_THROW(drs::continued_fraction_approx(std::nan(""), 1e-3), drs::InvalidParameter);
}

TEST(ExactL, KnownMatrix) {
  const auto t = drs::exact_L_matrix(2.0);
  EXPECT_NEAR(std::abs(t(0, 0) - cplx(0, 5.0 / 3)), 0, 1e-15);
  EXPECT_NEAR(std::abs(t(0, 1) - cplx(0, -4.0 / 3)), 0, 1e-15);
  EXPECT_THROW(drs::exact_L_matrix(1.0), drs::DomainError);
}

TEST(ExactL, BasisTransformIsUnimodularCongruence) {
  // The change of basis is tau -> M tau M^T with M = [[1,1],[0,-1]].
  Eigen::Matrix2cd tau;
  tau << cplx(0.1, 1.2), cplx(-0.3, 0.4), cplx(-0.3, 0.4), cplx(0.2, 0.9);
  Eigen::Matrix2cd M;
  M << 1, 1, 0, -1;
  EXPECT_LT((drs::basis_transform_L(tau) - M * tau * M.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Convergence, ReportOnSmallLevels) {
  drs::Reference ref{"exact", Eigen::MatrixXcd(drs::exact_L_matrix(2.0))};
  const auto rep = drs::convergence_report(drs::make_L(Rational(2)), {0, 1, 2, 3}, ref);
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_TRUE(rep.errors_decreasing());
  EXPECT_FALSE(rep.rows[0].digits_gained.has_value());
  ASSERT_TRUE(rep.mean_digit_gain().has_value());
  EXPECT_GT(*rep.mean_digit_gain(), 0.5);
  const auto j = drs::to_json(rep);
  EXPECT_EQ(j.at("schema"), "drs-convergence/1");
  EXPECT_EQ(j.at("rows").size(), 4u);
  EXPECT_NE(drs::to_text(rep).find("mean digit gain"), std::string::npos);
}

TEST(Convergence, SkipsLevelsOverTheCap) {
  drs::SolverOptions o;
  o.max_factor_nonzeros = 5e4;
  const auto rep = drs::convergence_report(drs::make_JS(2), {0, 1, 3}, {}, o);
  EXPECT_TRUE(rep.rows[0].result.has_value());
  EXPECT_FALSE(rep.rows[2].result.has_value());
  EXPECT_EQ(rep.rows[2].status.rfind("skipped", 0), 0u);
  EXPECT_THROW(drs::convergence_report(drs::make_JS(2), {1, 0}, {}), drs::InvalidParameter);
}

TEST(Reciprocity, FindsHiddenPairing) {
  std::vector<cplx> pts = {cplx(2, 1), 1.0 / cplx(2, 1), cplx(-0.3, 4), 1.0 / cplx(-0.3, 4), cplx(5, -2), 1.0 / cplx(5, -2)};
  std::mt19937 rng(4);
  std::shuffle(pts.begin(), pts.end(), rng);
  const auto r = drs::reciprocity_check(pts);
  EXPECT_LT(r.max_deviation, 1e-14);
  for (const auto& [a, b] : r.pairs) EXPECT_NEAR(std::abs(pts[a] * pts[b] - 1.0), 0, 1e-14);
  EXPECT_THROW(drs::reciprocity_check({1.0, 2.0}), drs::InvalidParameter);
}

TEST(Format, ComplexText) {
  EXPECT_EQ(drs::format_complex(cplx(1.5, -2)), "1.5 - 2i");
  EXPECT_EQ(drs::format_complex(cplx(0, 0.25)), "0 + 0.25i");
}
