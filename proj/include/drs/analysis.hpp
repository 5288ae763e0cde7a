#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drs/error.hpp"
#include "drs/rational.hpp"
#include "drs/solver.hpp"
#include "drs/surface.hpp"
#include "json.hpp"

namespace drs {

// Closed-form Riemann matrix of the symmetric L with outer side lambda.
inline Eigen::Matrix2cd exact_L_matrix(double lambda) {
  if (!(lambda > 1)) throw DomainError("exact L matrix needs lambda > 1");
  const double d = 2 * lambda * lambda - 2 * lambda + 1;
  const double o = -2 * lambda * (lambda - 1);
  const std::complex<double> s(0.0, 1.0 / (2 * lambda - 1));
  Eigen::Matrix2cd t;
  t << s * d, s * o, s * o, s * d;
  return t;
}

// Change from the (alpha, beta) basis of the L to the (delta, gamma) basis.
inline Eigen::Matrix2cd basis_transform_L(const Eigen::Matrix2cd& tau) {
  const auto x = tau(0, 0), y = tau(0, 1), z = tau(1, 1);
  Eigen::Matrix2cd t;
  t << x + 2.0 * y + z, -y - z, -y - z, z;
  return t;
}

// Nearest-integer continued fraction; returns the first convergent within tol of x.
inline Rational continued_fraction_approx(double x, double tol) {
  if (!std::isfinite(x)) throw InvalidParameter("continued fraction of a non-finite number");
  if (!(tol > 0)) throw InvalidParameter("continued fraction tolerance must be positive");
  double d = std::round(x);
  double frac = x - d;
  long double p = d, q = 1, p_prev = 1, q_prev = 0;
  for (int it = 0; it < 64; ++it) {
    if (std::fabs(x - static_cast<double>(p / q)) < tol || frac == 0) break;
    const double flip = 1.0 / frac;
    const double step = std::round(flip);
    frac = flip - step;
    const long double p_next = p * step + p_prev, q_next = q * step + q_prev;
    p_prev = p;
    q_prev = q;
    p = p_next;
    q = q_next;
    if (std::fabs(p) > 9e15L || std::fabs(q) > 9e15L) throw PrecisionUnreachable("continued fraction exceeds 64-bit range");
  }
  return Rational(static_cast<std::int64_t>(p), static_cast<std::int64_t>(q));
}

struct Reference {
  std::string tag = "none";  // "none", "exact_L(lambda)", or a fixture id
  std::optional<Eigen::MatrixXcd> tau;
};

struct ConvergenceRow {
  int level = 0;
  std::optional<RiemannMatrix> result;
  std::optional<double> error;           // max_ab |tau_ab - ref_ab|
  std::optional<double> digits_gained;   // log10(err_{n-1} / err_n)
  std::string status = "ok";
};

struct ConvergenceReport {
  std::string surface;
  std::string reference_tag = "none";
  std::vector<ConvergenceRow> rows;

  std::optional<double> mean_digit_gain() const {
    double s = 0;
    int n = 0;
    for (const auto& r : rows)
      if (r.digits_gained) {
        s += *r.digits_gained;
        ++n;
      }
    if (n == 0) return std::nullopt;
    return s / n;
  }

  bool errors_decreasing() const {
    std::optional<double> prev;
    for (const auto& r : rows) {
      if (!r.error) continue;
      if (prev && !(*r.error < *prev)) return false;
      prev = r.error;
    }
    return true;
  }
};

inline double max_entry_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidParameter("matrix shapes differ");
  return (a - b).cwiseAbs().maxCoeff();
}

inline void fill_errors(ConvergenceReport& rep, const Reference& ref) {
  std::optional<double> prev;
  for (auto& row : rep.rows) {
    if (!row.result || !ref.tau) continue;
    row.error = max_entry_distance(row.result->tau, *ref.tau);
    if (prev && *row.error > 0) row.digits_gained = std::log10(*prev / *row.error);
    prev = row.error;
  }
}

// Levels that hit the resource cap are recorded as skipped; other errors propagate.
inline ConvergenceReport convergence_report(const SurfaceSpec& spec, std::vector<int> levels, const Reference& ref,
                                            const SolverOptions& opts = {}) {
  if (!std::is_sorted(levels.begin(), levels.end()) || std::adjacent_find(levels.begin(), levels.end()) != levels.end())
    throw InvalidParameter("levels must be strictly increasing");
  ConvergenceReport rep;
  rep.surface = spec.summary();
  rep.reference_tag = ref.tag;
  for (int n : levels) {
    ConvergenceRow row;
    row.level = n;
    try {
      row.result = period_matrix(spec, n, opts);
    } catch (const ResourceLimit& e) {
      row.status = std::string("skipped: ") + e.what();
    }
    rep.rows.push_back(std::move(row));
  }
  fill_errors(rep, ref);
  return rep;
}

inline std::string format_complex(std::complex<double> z, int precision = 15) {
  std::ostringstream os;
  os << std::setprecision(precision) << z.real() << (z.imag() < 0 ? " - " : " + ") << std::fabs(z.imag()) << "i";
  return os.str();
}

inline nlohmann::ordered_json to_json(const ConvergenceReport& rep) {
  nlohmann::ordered_json j;
  j["schema"] = "drs-convergence/1";
  j["surface"] = rep.surface;
  j["reference"] = rep.reference_tag;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rep.rows) {
    nlohmann::ordered_json row;
    row["level"] = r.level;
    row["status"] = r.status;
    if (r.result) row["tau"] = to_json(*r.result);
    row["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json(nullptr);
    row["digits_gained"] = r.digits_gained ? nlohmann::ordered_json(*r.digits_gained) : nlohmann::ordered_json(nullptr);
    if (r.result) row["wall_time_s"] = r.result->wall_time_s;
    j["rows"].push_back(row);
  }
  const auto gain = rep.mean_digit_gain();
  j["mean_digit_gain"] = gain ? nlohmann::ordered_json(*gain) : nlohmann::ordered_json(nullptr);
  return j;
}

// Plain-text layout: one block per level with the matrix rows, then error and timing.
inline std::string to_text(const ConvergenceReport& rep) {
  std::ostringstream os;
  os << rep.surface << "  (reference: " << rep.reference_tag << ")\n";
  os << std::left << std::setw(7) << "level" << std::setw(16) << "time (s)" << std::setw(14) << "error" << "digits\n";
  for (const auto& r : rep.rows) {
    os << std::left << std::setw(7) << r.level;
    if (!r.result) {
      os << r.status << "\n";
      continue;
    }
    std::ostringstream t, e, d;
    t << std::fixed << std::setprecision(3) << r.result->wall_time_s;
    if (r.error) e << std::scientific << std::setprecision(3) << *r.error;
    else e << "-";
    if (r.digits_gained) d << std::fixed << std::setprecision(3) << *r.digits_gained;
    else d << "-";
    os << std::setw(16) << t.str() << std::setw(14) << e.str() << d.str() << "\n";
    const auto& tau = r.result->tau;
    for (Eigen::Index a = 0; a < tau.rows(); ++a) {
      os << "       ";
      for (Eigen::Index b = 0; b < tau.cols(); ++b) os << std::left << std::setw(44) << format_complex(tau(a, b));
      os << "\n";
    }
  }
  if (auto g = rep.mean_digit_gain()) os << "mean digit gain per level: " << std::fixed << std::setprecision(3) << *g << "\n";
  return os.str();
}

struct ReciprocityResult {
  std::array<std::pair<int, int>, 3> pairs{};
  std::array<std::complex<double>, 3> products{};
  double max_deviation = 0;  // max |product - 1|
};

// Exhaustive search over the 15 perfect matchings of six points for the one
// minimizing sum |a b - 1|.
inline ReciprocityResult reciprocity_check(const std::vector<std::complex<double>>& pts) {
  if (pts.size() != 6) throw InvalidParameter("reciprocity check needs exactly six points");
  for (const auto& p : pts)
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) throw InvalidParameter("reciprocity check needs finite points");
  ReciprocityResult best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int b = 1; b < 6; ++b) {
    std::vector<int> rest;
    for (int k = 1; k < 6; ++k)
      if (k != b) rest.push_back(k);
    for (int c = 1; c < 4; ++c) {
      std::vector<int> last;
      for (int k = 1; k < 4; ++k)
        if (k != c) last.push_back(rest[k]);
      const std::array<std::pair<int, int>, 3> m = {{{0, b}, {rest[0], rest[c]}, {last[0], last[1]}}};
      double cost = 0, worst = 0;
      std::array<std::complex<double>, 3> prod{};
      for (int e = 0; e < 3; ++e) {
        prod[e] = pts[m[e].first] * pts[m[e].second];
        cost += std::abs(prod[e] - 1.0);
        worst = std::max(worst, std::abs(prod[e] - 1.0));
      }
      if (cost < best_cost) {
        best_cost = cost;
        best.pairs = m;
        best.products = prod;
        best.max_deviation = worst;
      }
    }
  }
  return best;
}

}  // namespace drs
