#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drs/error.hpp"
#include "json.hpp"

namespace drs {

struct ThetaCharacteristic {
  std::vector<int> eps;
  std::vector<int> delta;

  int genus() const { return static_cast<int>(eps.size()); }
  bool even() const {
    int s = 0;
    for (std::size_t i = 0; i < eps.size(); ++i) s += eps[i] * delta[i];
    return s % 2 == 0;
  }
  // "10/01" for eps = (1,0), delta = (0,1).
  std::string label() const {
    std::string s;
    for (int e : eps) s += char('0' + e);
    s += '/';
    for (int d : delta) s += char('0' + d);
    return s;
  }
  static ThetaCharacteristic parse(const std::string& text) {
    const auto slash = text.find('/');
    if (slash == std::string::npos || slash * 2 + 1 != text.size())
      throw InvalidParameter("characteristic must look like 'eps/delta' with equal lengths, got '" + text + "'");
    ThetaCharacteristic ch;
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (i == slash) continue;
      if (text[i] != '0' && text[i] != '1') throw InvalidParameter("characteristic bits must be 0 or 1");
      (i < slash ? ch.eps : ch.delta).push_back(text[i] - '0');
    }
    return ch;
  }
  friend bool operator==(const ThetaCharacteristic&, const ThetaCharacteristic&) = default;
};

// All 4^g characteristics, eps outer and delta inner, bits most significant first.
inline std::vector<ThetaCharacteristic> all_characteristics(int g) {
  if (g < 1 || g > 12) throw InvalidParameter("characteristic enumeration needs 1 <= g <= 12");
  std::vector<ThetaCharacteristic> out;
  const int n = 1 << g;
  for (int e = 0; e < n; ++e)
    for (int d = 0; d < n; ++d) {
      ThetaCharacteristic ch;
      for (int i = g - 1; i >= 0; --i) {
        ch.eps.push_back((e >> i) & 1);
        ch.delta.push_back((d >> i) & 1);
      }
      out.push_back(std::move(ch));
    }
  return out;
}

inline std::vector<ThetaCharacteristic> characteristics_with_parity(int g, bool even) {
  std::vector<ThetaCharacteristic> out;
  for (auto& ch : all_characteristics(g))
    if (ch.even() == even) out.push_back(std::move(ch));
  return out;
}

// Factor on the z-term: standard is 2*pi*i*v.(z + delta/2); half uses pi*i*v.z + pi*i*v.delta.
enum class ThetaConvention { standard, half };

struct ThetaOptions {
  double tol = 1e-12;
  int max_radius = 60;
  ThetaConvention convention = ThetaConvention::standard;
};

// Truncated lattice sums over the ball |n + eps/2| <= R, with R from a Gaussian shell bound.
class ThetaEvaluator {
 public:
  ThetaEvaluator(const Eigen::MatrixXcd& tau, ThetaOptions opts = {}, double imag_z_norm = 0.0)
      : tau_(tau), opts_(opts), g_(static_cast<int>(tau.rows())) {
    if (tau.rows() != tau.cols() || g_ < 1) throw DomainError("tau must be a non-empty square matrix");
    if (!(opts.tol > 0)) throw InvalidParameter("theta tolerance must be positive");
    const Eigen::MatrixXd Y = 0.5 * (tau.imag() + tau.imag().transpose());
    lambda_min_ = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Y, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (!(lambda_min_ > 0)) throw DomainError("Im(tau) is not positive definite");
    choose_radius(imag_z_norm);
    build_lattice();
  }

  int genus() const { return g_; }
  double radius() const { return radius_; }
  double tail_bound() const { return tail_; }
  double lambda_min() const { return lambda_min_; }

  std::complex<double> constant(const ThetaCharacteristic& ch) const {
    check(ch);
    const Block& b = blocks_[eps_index(ch)];
    std::complex<double> s = 0;
    for (std::size_t p = 0; p < b.weight.size(); ++p) s += b.weight[p] * delta_phase(b, p, ch);
    return s;
  }

  Eigen::VectorXcd gradient0(const ThetaCharacteristic& ch) const {
    check(ch);
    const Block& b = blocks_[eps_index(ch)];
    Eigen::VectorXcd grad = Eigen::VectorXcd::Zero(g_);
    for (std::size_t p = 0; p < b.weight.size(); ++p) {
      const std::complex<double> t = b.weight[p] * delta_phase(b, p, ch);
      for (int a = 0; a < g_; ++a) grad[a] += t * b.v[p * g_ + a];
    }
    return grad * std::complex<double>(0.0, z_factor());
  }

  std::complex<double> value(const Eigen::VectorXcd& z, const ThetaCharacteristic& ch) const {
    check(ch);
    if (z.size() != g_) throw InvalidParameter("z has wrong dimension");
    const Block& b = blocks_[eps_index(ch)];
    std::complex<double> s = 0;
    const std::complex<double> iz(0.0, z_factor());
    for (std::size_t p = 0; p < b.weight.size(); ++p) {
      std::complex<double> vz = 0;
      for (int a = 0; a < g_; ++a) vz += b.v[p * g_ + a] * z[a];
      s += b.weight[p] * delta_phase(b, p, ch) * std::exp(iz * vz);
    }
    return s;
  }

 private:
  struct Block {
    std::vector<double> v;  // points n + eps/2, g per point
    std::vector<std::complex<double>> weight;  // exp(pi i v^T tau v)
  };

  double z_factor() const { return opts_.convention == ThetaConvention::standard ? 2 * std::numbers::pi : std::numbers::pi; }

  void check(const ThetaCharacteristic& ch) const {
    if (ch.genus() != g_ || static_cast<int>(ch.delta.size()) != g_) throw InvalidParameter("characteristic genus differs from tau");
  }

  static int eps_index(const ThetaCharacteristic& ch) {
    int e = 0;
    for (int bit : ch.eps) e = 2 * e + bit;
    return e;
  }

  // exp(pi i v.delta) = (-1)^{n.delta} * i^{eps.delta}; exact in both conventions.
  std::complex<double> delta_phase(const Block& b, std::size_t p, const ThetaCharacteristic& ch) const {
    double vd = 0;
    for (int a = 0; a < g_; ++a) vd += b.v[p * g_ + a] * ch.delta[a];
    const long twice = std::lround(2 * vd);
    static const std::complex<double> quarter[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return quarter[((twice % 4) + 4) % 4];
  }

  // Terms with |v| in [k, k+1) number at most (2k+4)^g and are bounded by
  // (1 + 2 pi (k+1)) exp(-pi lambda k^2 + 2 pi (k+1) |Im z|), derivative factor included.
  void choose_radius(double imag_z_norm) {
    const double pi = std::numbers::pi;
    auto shell = [&](int k) {
      const double logterm = g_ * std::log(2.0 * k + 4) + std::log1p(2 * pi * (k + 1)) - pi * lambda_min_ * k * k +
                             2 * pi * (k + 1) * imag_z_norm;
      return std::exp(logterm);
    };
    for (int R = 1; R <= opts_.max_radius; ++R) {
      double tail = 0;
      for (int k = R; k < R + 400; ++k) {
        const double s = shell(k);
        tail += s;
        if (k > R + 5 && s < 1e-30 * std::max(tail, 1e-300)) break;
      }
      if (tail < opts_.tol) {
        radius_ = R;
        tail_ = tail;
        return;
      }
    }
    throw PrecisionUnreachable("theta truncation radius exceeds " + std::to_string(opts_.max_radius) +
                               " (smallest eigenvalue of Im tau = " + std::to_string(lambda_min_) + ")");
  }

  void build_lattice() {
    const int n = 1 << g_;
    blocks_.resize(n);
    const double R2 = radius_ * radius_;
    std::vector<double> v(g_);
    for (int e = 0; e < n; ++e) {
      std::vector<double> half(g_);
      for (int a = 0; a < g_; ++a) half[a] = 0.5 * ((e >> (g_ - 1 - a)) & 1);
      Block& b = blocks_[e];
      // Depth-first enumeration of lattice points inside the ball.
      std::vector<long> lo(g_), cur(g_);
      auto rec = [&](auto&& self, int a, double used) -> void {
        if (a == g_) {
          b.v.insert(b.v.end(), v.begin(), v.end());
          return;
        }
        const double r = std::sqrt(std::max(0.0, R2 - used));
        const long first = static_cast<long>(std::ceil(-r - half[a]));
        const long last = static_cast<long>(std::floor(r - half[a]));
        for (long k = first; k <= last; ++k) {
          v[a] = k + half[a];
          if (used + v[a] * v[a] <= R2 + 1e-12) self(self, a + 1, used + v[a] * v[a]);
        }
      };
      rec(rec, 0, 0.0);
      const std::size_t np = b.v.size() / g_;
      b.weight.resize(np);
      const std::complex<double> ipi(0.0, std::numbers::pi);
      for (std::size_t p = 0; p < np; ++p) {
        std::complex<double> q = 0;
        for (int r = 0; r < g_; ++r)
          for (int c = 0; c < g_; ++c) q += b.v[p * g_ + r] * tau_(r, c) * b.v[p * g_ + c];
        b.weight[p] = std::exp(ipi * q);
      }
    }
  }

  Eigen::MatrixXcd tau_;
  ThetaOptions opts_;
  int g_;
  double lambda_min_ = 0;
  double radius_ = 0;
  double tail_ = 0;
  std::vector<Block> blocks_;
};

inline std::complex<double> theta(const Eigen::VectorXcd& z, const Eigen::MatrixXcd& tau, const ThetaCharacteristic& ch,
                                  ThetaOptions opts = {}) {
  return ThetaEvaluator(tau, opts, z.imag().norm()).value(z, ch);
}

inline Eigen::VectorXcd theta_grad0(const Eigen::MatrixXcd& tau, const ThetaCharacteristic& ch, ThetaOptions opts = {}) {
  return ThetaEvaluator(tau, opts).gradient0(ch);
}

struct ThetaEntry {
  ThetaCharacteristic ch;
  std::complex<double> constant;
  Eigen::VectorXcd gradient;
};

struct ThetaReport {
  double radius = 0;
  double tail_bound = 0;
  std::vector<ThetaEntry> entries;  // in all_characteristics order
};

inline ThetaReport theta_report(const Eigen::MatrixXcd& tau, ThetaOptions opts = {}) {
  ThetaEvaluator ev(tau, opts);
  ThetaReport rep;
  rep.radius = ev.radius();
  rep.tail_bound = ev.tail_bound();
  for (auto& ch : all_characteristics(ev.genus())) {
    ThetaEntry e{ch, ev.constant(ch), ev.gradient0(ch)};
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

struct BranchPoint {
  ThetaCharacteristic ch;
  std::complex<double> value;
  bool at_infinity = false;
};

// Six branch points -theta_1/theta_2 over the odd characteristics of a genus-2 tau.
inline std::vector<BranchPoint> branch_points_g2(const Eigen::MatrixXcd& tau, ThetaOptions opts = {}) {
  if (tau.rows() != 2) throw InvalidParameter("branch points need a genus-2 matrix");
  ThetaEvaluator ev(tau, opts);
  std::vector<BranchPoint> out;
  for (auto& ch : characteristics_with_parity(2, false)) {
    const Eigen::VectorXcd grad = ev.gradient0(ch);
    BranchPoint b{ch, {}, false};
    if (std::abs(grad[1]) <= 1e-12 * std::max(std::abs(grad[0]), 1e-300))
      b.at_infinity = true;
    else
      b.value = -grad[0] / grad[1];
    out.push_back(std::move(b));
  }
  return out;
}

struct VanishingReport {
  int count = 0;
  double median = 0;
  double threshold = 0;
  double rel_threshold = 0;
  // Even characteristics sorted by |theta|.
  std::vector<std::pair<ThetaCharacteristic, std::complex<double>>> ranked;
};

// Even theta constants with |theta| < rel_threshold * median |theta| over all even characteristics.
inline VanishingReport vanishing_even_count(const Eigen::MatrixXcd& tau, double rel_threshold = 1e-4, ThetaOptions opts = {}) {
  if (!(rel_threshold > 0 && rel_threshold < 1)) throw InvalidParameter("rel_threshold must lie in (0,1)");
  ThetaEvaluator ev(tau, opts);
  VanishingReport rep;
  rep.rel_threshold = rel_threshold;
  for (auto& ch : characteristics_with_parity(ev.genus(), true)) rep.ranked.push_back({ch, ev.constant(ch)});
  std::stable_sort(rep.ranked.begin(), rep.ranked.end(),
                   [](const auto& a, const auto& b) { return std::abs(a.second) < std::abs(b.second); });
  const std::size_t n = rep.ranked.size();
  const double lo = std::abs(rep.ranked[(n - 1) / 2].second), hi = std::abs(rep.ranked[n / 2].second);
  rep.median = 0.5 * (lo + hi);
  rep.threshold = rel_threshold * rep.median;
  for (const auto& [ch, v] : rep.ranked) rep.count += std::abs(v) < rep.threshold;
  return rep;
}

// Pairs of even characteristics whose theta constants agree to a relative tolerance.
inline std::vector<std::pair<ThetaCharacteristic, ThetaCharacteristic>> even_constant_pairs(const Eigen::MatrixXcd& tau, double tol = 1e-6,
                                                                                             ThetaOptions opts = {}) {
  ThetaEvaluator ev(tau, opts);
  const auto evens = characteristics_with_parity(ev.genus(), true);
  std::vector<std::complex<double>> vals;
  for (const auto& ch : evens) vals.push_back(ev.constant(ch));
  std::vector<std::pair<ThetaCharacteristic, ThetaCharacteristic>> out;
  for (std::size_t a = 0; a < evens.size(); ++a)
    for (std::size_t b = a + 1; b < evens.size(); ++b)
      if (std::abs(vals[a] - vals[b]) < tol * std::max(std::abs(vals[a]), std::abs(vals[b]))) out.push_back({evens[a], evens[b]});
  return out;
}

}  // namespace drs
