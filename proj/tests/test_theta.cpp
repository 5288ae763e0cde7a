#include <gtest/gtest.h>

#include <numbers>
#include <random>
#include <set>

#include "drs/analysis.hpp"
#include "drs/fixtures.hpp"
#include "drs/theta.hpp"

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

namespace {

// Direct sum over the box |n_i| <= N.
cplx box_theta(const Eigen::MatrixXcd& tau, const Eigen::VectorXcd& z, const drs::ThetaCharacteristic& ch, int N) {
  const int g = static_cast<int>(tau.rows());
  std::vector<int> n(g, -N);
  cplx sum = 0;
  while (true) {
    Eigen::VectorXcd v(g);
    for (int a = 0; a < g; ++a) v[a] = n[a] + 0.5 * ch.eps[a];
    Eigen::VectorXcd shift(g);
    for (int a = 0; a < g; ++a) shift[a] = z[a] + 0.5 * ch.delta[a];
    sum += std::exp(cplx(0, kPi) * v.dot(tau * v) + cplx(0, 2 * kPi) * v.dot(shift));
    int a = 0;
    while (a < g && ++n[a] > N) n[a++] = -N;
    if (a == g) break;
  }
  return sum;
}

Eigen::MatrixXcd sample_tau(int g) {
  std::mt19937 rng(11 + g);
  std::uniform_real_distribution<double> U(-0.2, 0.2);
  Eigen::MatrixXcd t(g, g);
  for (int a = 0; a < g; ++a)
    for (int b = a; b < g; ++b) t(a, b) = t(b, a) = cplx(U(rng), (a == b ? 1.0 : 0.0) + U(rng) * 0.5);
  return t;
}

Eigen::VectorXcd sample_z(int g, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-0.4, 0.4);
  Eigen::VectorXcd z(g);
  for (int a = 0; a < g; ++a) z[a] = cplx(U(rng), U(rng));
  return z;
}

}  // namespace

TEST(Theta, CharacteristicCounts) {
  for (int g = 1; g <= 5; ++g) {
    const std::size_t h = std::size_t(1) << (g - 1), p = std::size_t(1) << g;
    EXPECT_EQ(drs::characteristics_with_parity(g, true).size(), h * (p + 1));
    EXPECT_EQ(drs::characteristics_with_parity(g, false).size(), h * (p - 1));
    std::set<std::string> labels;
    for (const auto& c : drs::all_characteristics(g)) labels.insert(c.label());
    EXPECT_EQ(labels.size(), p * p);
  }
}

TEST(Theta, LabelParseRoundTrip) {
  const auto ch = drs::ThetaCharacteristic::parse("101/010");
  EXPECT_EQ(ch.label(), "101/010");
  EXPECT_FALSE(drs::ThetaCharacteristic::parse("101/011").even());
  EXPECT_TRUE(ch.even());
  EXPECT_FALSE(drs::ThetaCharacteristic::parse("1/1").even());
  EXPECT_THROW(drs::ThetaCharacteristic::parse("10/1"), drs::InvalidParameter);
  EXPECT_THROW(drs::ThetaCharacteristic::parse("12/01"), drs::InvalidParameter);
}

TEST(Theta, GenusOneSpecialValues) {
  // theta_00(0, i) = pi^(1/4) / Gamma(3/4); theta_01 = theta_10 = 2^(-1/4) theta_00 at tau = i.
  Eigen::MatrixXcd tau(1, 1);
  tau(0, 0) = cplx(0, 1);
  const double t00 = std::pow(kPi, 0.25) / std::tgamma(0.75);
  const drs::ThetaEvaluator ev(tau);
  EXPECT_NEAR(std::abs(ev.constant(drs::ThetaCharacteristic::parse("0/0")) - t00), 0, 1e-14);
  EXPECT_NEAR(std::abs(ev.constant(drs::ThetaCharacteristic::parse("1/0")) - t00 * std::pow(2.0, -0.25)), 0, 1e-14);
  EXPECT_NEAR(std::abs(ev.constant(drs::ThetaCharacteristic::parse("0/1")) - t00 * std::pow(2.0, -0.25)), 0, 1e-14);
}

TEST(Theta, JacobiQuarticIdentity) {
  Eigen::MatrixXcd tau(1, 1);
  for (cplx t : {cplx(0.3, 0.8), cplx(-0.45, 1.7), cplx(0.1, 0.5)}) {
    tau(0, 0) = t;
    const drs::ThetaEvaluator ev(tau);
    const cplx a = ev.constant(drs::ThetaCharacteristic::parse("0/0")), b = ev.constant(drs::ThetaCharacteristic::parse("0/1")),
               c = ev.constant(drs::ThetaCharacteristic::parse("1/0"));
    EXPECT_NEAR(std::abs(std::pow(a, 4) - std::pow(b, 4) - std::pow(c, 4)), 0, 1e-12);
  }
}

TEST(Theta, AgreesWithBoxSum) {
  for (int g = 1; g <= 3; ++g) {
    const auto tau = sample_tau(g);
    const auto z = sample_z(g, 5 + g);
    const drs::ThetaEvaluator ev(tau, {}, z.imag().norm());
    for (const auto& ch : drs::all_characteristics(g)) EXPECT_NEAR(std::abs(ev.value(z, ch) - box_theta(tau, z, ch, 9)), 0, 1e-12);
  }
}

TEST(Theta, ParityLaws) {
  for (int g = 1; g <= 5; ++g) {
    const auto tau = sample_tau(g);
    const auto z = sample_z(g, 17 + g);
    const drs::ThetaEvaluator ev(tau, {}, z.imag().norm());
    for (const auto& ch : drs::all_characteristics(g)) {
      const cplx p = ev.value(z, ch), m = ev.value(-z, ch);
      EXPECT_NEAR(std::abs(m - (ch.even() ? p : -p)), 0, 1e-11 * std::max(1.0, std::abs(p))) << ch.label();
      if (ch.even()) EXPECT_LT(ev.gradient0(ch).norm(), 1e-11) << ch.label();
      else EXPECT_LT(std::abs(ev.constant(ch)), 1e-11) << ch.label();
    }
  }
}

TEST(Theta, QuasiPeriodicity) {
  const int g = 2;
  const auto tau = sample_tau(g);
  const auto z = sample_z(g, 3);
  const drs::ThetaEvaluator ev(tau, {}, 3.0);
  for (const auto& ch : drs::all_characteristics(g))
    for (int j = 0; j < g; ++j) {
      Eigen::VectorXcd zj = z;
      zj[j] += 1.0;
      EXPECT_NEAR(std::abs(ev.value(zj, ch) - (ch.eps[j] ? -1.0 : 1.0) * ev.value(z, ch)), 0, 1e-11);
      zj = z + tau.col(j);
      const cplx factor = std::exp(cplx(0, -kPi) * (tau(j, j) + 2.0 * z[j] + double(ch.delta[j])));
      EXPECT_NEAR(std::abs(ev.value(zj, ch) - factor * ev.value(z, ch)), 0, 1e-10 * std::abs(ev.value(zj, ch)) + 1e-12);
    }
}

TEST(Theta, GradientMatchesFiniteDifference) {
  const auto tau = sample_tau(2);
  const drs::ThetaEvaluator ev(tau, {}, 0.1);
  const double h = 1e-5;
  for (const auto& ch : drs::characteristics_with_parity(2, false)) {
    const auto grad = ev.gradient0(ch);
    for (int j = 0; j < 2; ++j) {
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(2);
      e[j] = h;
      const cplx fd = (ev.value(e, ch) - ev.value(-e, ch)) / (2 * h);
      EXPECT_NEAR(std::abs(grad[j] - fd), 0, 1e-8);
    }
  }
}

TEST(Theta, ConventionsDifferOnlyByZScaling) {
  const auto tau = sample_tau(2);
  const auto z = sample_z(2, 9);
  drs::ThetaOptions half;
  half.convention = drs::ThetaConvention::half;
  const drs::ThetaEvaluator s(tau, {}, 1.0), h(tau, half, 1.0);
  for (const auto& ch : drs::all_characteristics(2)) {
    EXPECT_NEAR(std::abs(h.value(z, ch) - s.value(z / 2.0, ch)), 0, 1e-12);
    EXPECT_NEAR(std::abs(h.constant(ch) - s.constant(ch)), 0, 1e-14);
    EXPECT_NEAR((h.gradient0(ch) - 0.5 * s.gradient0(ch)).norm(), 0, 1e-12);
  }
  // Branch points are ratios of gradients, so they do not see the convention.
  const auto a = drs::branch_points_g2(tau), b = drs::branch_points_g2(tau, half);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(std::abs(a[k].value - b[k].value), 0, 1e-12);
}

TEST(Theta, TruncationBoundHonoured) {
  const auto tau = sample_tau(3);
  const drs::ThetaEvaluator ev(tau);
  EXPECT_LE(ev.tail_bound(), 1e-12);
  drs::ThetaOptions tight;
  tight.tol = 1e-15;
  const drs::ThetaEvaluator ev2(tau, tight);
  EXPECT_GE(ev2.radius(), ev.radius());
}

TEST(Theta, Errors) {
  Eigen::MatrixXcd bad(2, 2);
  bad << cplx(0, 1), 0, 0, cplx(0, -1);
  EXPECT_THROW(drs::ThetaEvaluator{bad}, drs::DomainError);
  Eigen::MatrixXcd thin(1, 1);
  thin(0, 0) = cplx(0, 1e-4);
  drs::ThetaOptions o;
  o.max_radius = 3;
  EXPECT_THROW(drs::ThetaEvaluator(thin, o), drs::PrecisionUnreachable);
  EXPECT_THROW(drs::branch_points_g2(sample_tau(3)), drs::InvalidParameter);
}

TEST(Theta, ExactLBranchPointsPairUp) {
  const auto pts = drs::branch_points_g2(drs::exact_L_matrix(2.0));
  std::vector<cplx> v;
  for (const auto& b : pts) {
    EXPECT_FALSE(b.at_infinity);
    EXPECT_LT(std::abs(b.value.imag()), 1e-12);
    v.push_back(b.value);
  }
  EXPECT_LT(drs::reciprocity_check(v).max_deviation, 1e-12);
}

TEST(Theta, ReferenceGenusTwoEvenPairs) {
  // Even constants of the level-7 genus-2 reference matrix coincide in three pairs.
  const auto tables = drs::load_reference_tables();
  const auto tau = drs::fixture_matrix(drs::find_table(tables, "JS2_1_1").row_at_level(7), true);
  std::set<std::set<std::string>> got;
  for (const auto& [a, b] : drs::even_constant_pairs(tau, 1e-6)) got.insert({a.label(), b.label()});
  const std::set<std::set<std::string>> want = {{"10/00", "01/00"}, {"00/10", "00/01"}, {"10/01", "01/10"}};
  EXPECT_EQ(got, want);
}

TEST(Theta, VanishingCountOnDiagonalMatrix) {
  // A block-diagonal tau is reducible: theta[eps,delta] factors, and a factor vanishes iff it is odd.
  Eigen::MatrixXcd tau = Eigen::MatrixXcd::Zero(2, 2);
  tau(0, 0) = cplx(0, 1);
  tau(1, 1) = cplx(0, 1.3);
  const auto rep = drs::vanishing_even_count(tau, 1e-6);
  EXPECT_EQ(rep.count, 1);  // only 11/11 = (1/1)(1/1), a product of two odd factors
  EXPECT_EQ(rep.ranked.front().first.label(), "11/11");
}
