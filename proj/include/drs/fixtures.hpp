#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drs/error.hpp"
#include "json.hpp"

namespace drs {

// A decimal as printed: value plus the number of printed decimals (-1 when exact).
struct PrintedNumber {
  double value = 0;
  int decimals = -1;
  double half_ulp() const { return decimals < 0 ? 0.0 : 0.5 * std::pow(10.0, -decimals); }
};

struct PrintedEntry {
  std::string text;
  PrintedNumber re;
  PrintedNumber im;
  std::complex<double> value() const { return {re.value, im.value}; }
};

namespace detail {

inline PrintedNumber parse_real(const std::string& s, const std::string& whole) {
  if (s.empty() || s == "+" || s == "-") {
    return {s == "-" ? -1.0 : 1.0, -1};
  }
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw InvalidParameter("cannot parse printed number '" + whole + "'");
  const auto dot = s.find('.');
  return {v, dot == std::string::npos ? -1 : static_cast<int>(s.size() - dot - 1)};
}

}  // namespace detail

// Accepts "a", "bi", "a+bi", "a-bi" and "i"; whitespace ignored.
inline PrintedEntry parse_printed_complex(const std::string& text) {
  std::string s;
  for (char c : text)
    if (c != ' ') s += c;
  if (s.empty()) throw InvalidParameter("empty printed entry");
  PrintedEntry e;
  e.text = text;
  if (s.back() != 'i') {
    e.re = detail::parse_real(s, text);
    e.im = {0.0, e.re.decimals};
    return e;
  }
  const std::string body = s.substr(0, s.size() - 1);
  std::size_t split = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;)
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split = k;
      break;
    }
  if (split == std::string::npos) {
    e.im = detail::parse_real(body, text);
    e.re = {0.0, e.im.decimals};
  } else {
    e.re = detail::parse_real(body.substr(0, split), text);
    e.im = detail::parse_real(body.substr(split), text);
  }
  return e;
}

struct FixtureRow {
  int level = 0;
  std::optional<std::string> lambda;
  std::optional<std::string> mu;
  std::optional<std::string> cf_tol;
  std::optional<double> time_s;
  std::vector<std::vector<PrintedEntry>> tau;
  // Alternative readings for entries whose printed value is self-inconsistent.
  std::vector<std::vector<std::vector<PrintedEntry>>> alternatives;
};

struct FixtureTable {
  std::string id;
  std::string family;
  int genus = 2;
  std::optional<std::string> lambda;
  std::optional<std::string> mu;
  bool imaginary_only = false;
  std::string description;
  std::vector<FixtureRow> rows;
  nlohmann::json errata = nlohmann::json::array();

  const FixtureRow& row_at_level(int level) const {
    for (const auto& r : rows)
      if (r.level == level) return r;
    throw InvalidParameter("fixture " + id + " has no level " + std::to_string(level));
  }
};

inline std::string default_data_dir() {
  if (const char* env = std::getenv("DRS_DATA_DIR")) return env;
#ifdef DRS_DATA_DIR
  return DRS_DATA_DIR;
#else
  return "data";
#endif
}

inline std::vector<FixtureTable> load_reference_tables(const std::string& path = default_data_dir() + "/reference_tables.json") {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open fixture file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter("malformed fixture file " + path + ": " + e.what());
  }
  std::vector<FixtureTable> out;
  for (const auto& t : doc.at("tables")) {
    FixtureTable ft;
    ft.id = t.at("id").get<std::string>();
    ft.family = t.at("family").get<std::string>();
    ft.genus = t.value("genus", 2);
    if (t.contains("lambda")) ft.lambda = t.at("lambda").get<std::string>();
    if (t.contains("mu")) ft.mu = t.at("mu").get<std::string>();
    ft.imaginary_only = t.at("entries").get<std::string>() == "imaginary_part";
    ft.description = t.value("description", std::string());
    if (t.contains("errata")) ft.errata = t.at("errata");
    for (const auto& r : t.at("rows")) {
      FixtureRow fr;
      fr.level = r.at("level").get<int>();
      if (r.contains("lambda")) fr.lambda = r.at("lambda").get<std::string>();
      if (r.contains("mu")) fr.mu = r.at("mu").get<std::string>();
      if (r.contains("cf_tol")) fr.cf_tol = r.at("cf_tol").get<std::string>();
      if (r.contains("time_s")) fr.time_s = r.at("time_s").get<double>();
      for (const auto& row : r.at("tau")) {
        std::vector<PrintedEntry> entries;
        for (const auto& s : row) {
          PrintedEntry e = parse_printed_complex(s.get<std::string>());
          if (ft.imaginary_only) {
            e.im = e.re;
            e.re = {0.0, -1};
          }
          entries.push_back(e);
        }
        fr.tau.push_back(std::move(entries));
      }
      const std::size_t g = fr.tau.size();
      fr.alternatives.assign(g, std::vector<std::vector<PrintedEntry>>(g));
      for (const auto& e : ft.errata) {
        if (!e.contains("alternatives") || e.value("level", -1) != fr.level) continue;
        const auto a = e.at("row").get<std::size_t>(), b = e.at("col").get<std::size_t>();
        for (const auto& alt : e.at("alternatives")) fr.alternatives.at(a).at(b).push_back(parse_printed_complex(alt.get<std::string>()));
      }
      ft.rows.push_back(std::move(fr));
    }
    out.push_back(std::move(ft));
  }
  return out;
}

inline const FixtureTable& find_table(const std::vector<FixtureTable>& tables, const std::string& id) {
  for (const auto& t : tables)
    if (t.id == id) return t;
  throw InvalidParameter("no fixture table '" + id + "'");
}

inline Eigen::MatrixXcd fixture_matrix(const FixtureRow& row, bool symmetrize = false) {
  const Eigen::Index g = static_cast<Eigen::Index>(row.tau.size());
  Eigen::MatrixXcd m(g, g);
  for (Eigen::Index a = 0; a < g; ++a)
    for (Eigen::Index b = 0; b < g; ++b) m(a, b) = row.tau[a][b].value();
  if (symmetrize) m = (0.5 * (m + m.transpose())).eval();
  return m;
}

struct FixtureComparison {
  bool passed = true;
  double max_excess = 0;     // worst |diff| minus allowed rounding, clipped at 0
  double max_abs_diff = 0;   // worst |diff| per real component
  std::vector<std::string> used_alternatives;
  std::vector<std::string> failures;
};

// Entry-wise check: each real component may differ from the printed digits by half a unit
// in the last printed place plus abs_tol.
inline FixtureComparison compare_to_fixture(const Eigen::MatrixXcd& tau, const FixtureRow& row, double abs_tol) {
  FixtureComparison c;
  const Eigen::Index g = static_cast<Eigen::Index>(row.tau.size());
  if (tau.rows() != g || tau.cols() != g) {
    c.passed = false;
    c.failures.push_back("shape mismatch");
    return c;
  }
  auto excess = [&](std::complex<double> z, const PrintedEntry& e, double& absdiff) {
    const double dr = std::fabs(z.real() - e.re.value), di = std::fabs(z.imag() - e.im.value);
    absdiff = std::max(dr, di);
    return std::max(dr - e.re.half_ulp(), di - e.im.half_ulp());
  };
  for (Eigen::Index a = 0; a < g; ++a)
    for (Eigen::Index b = 0; b < g; ++b) {
      double diff = 0;
      double ex = excess(tau(a, b), row.tau[a][b], diff);
      std::string used;
      for (const auto& alt : row.alternatives[a][b]) {
        double d2 = 0;
        const double e2 = excess(tau(a, b), alt, d2);
        if (e2 < ex) {
          ex = e2;
          diff = d2;
          used = alt.text;
        }
      }
      if (!used.empty() && ex <= abs_tol)
        c.used_alternatives.push_back("(" + std::to_string(a) + "," + std::to_string(b) + ") read as " + used);
      c.max_abs_diff = std::max(c.max_abs_diff, diff);
      c.max_excess = std::max(c.max_excess, std::max(0.0, ex));
      if (ex > abs_tol) {
        c.passed = false;
        c.failures.push_back("(" + std::to_string(a) + "," + std::to_string(b) + ") printed " + row.tau[a][b].text);
      }
    }
  return c;
}

}  // namespace drs
