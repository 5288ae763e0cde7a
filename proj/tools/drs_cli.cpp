// Command-line front end: compute, converge, theta, fixtures, validate.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "drs/drs.hpp"

namespace {

using drs::Rational;
using json = nlohmann::ordered_json;

constexpr int kExitArgs = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitResource = 4;

struct SurfaceArgs {
  std::string family = "l";
  std::string lambda;
  std::optional<double> lambda_decimal;
  std::optional<double> cf_tol;
  std::string mu = "1/1";
  int genus = 2;
  std::string basis = "alpha";
};

struct SolverArgs {
  bool force = false;
  int threads = 1;
  double max_factor_nnz = drs::SolverOptions{}.max_factor_nonzeros;

  drs::SolverOptions options() const {
    drs::SolverOptions o;
    o.force = force;
    o.threads = threads;
    o.max_factor_nonzeros = max_factor_nnz;
    return o;
  }
};

void add_surface_flags(CLI::App* cmd, SurfaceArgs& s) {
  cmd->add_option("--family", s.family, "surface family: l or js")->check(CLI::IsMember({"l", "L", "js", "JS"}));
  cmd->add_option("--lambda", s.lambda, "side length lambda as p/q");
  cmd->add_option("--lambda-decimal", s.lambda_decimal, "decimal lambda, rationalized with --cf-tol");
  cmd->add_option("--cf-tol", s.cf_tol, "continued-fraction tolerance for --lambda-decimal");
  cmd->add_option("--mu", s.mu, "JS side length mu as p/q");
  cmd->add_option("--genus", s.genus, "JS genus");
  cmd->add_option("--basis", s.basis, "L homology basis: alpha or delta")->check(CLI::IsMember({"alpha", "delta"}));
}

void add_solver_flags(CLI::App* cmd, SolverArgs& s) {
  cmd->add_flag("--force", s.force, "run levels above the safety thresholds and the factor-size cap");
  cmd->add_option("--threads", s.threads, "worker threads (default: DRS_THREADS or 1)")->check(CLI::PositiveNumber);
  cmd->add_option("--max-factor-nnz", s.max_factor_nnz, "refuse factorizations estimated above this many nonzeros");
}

drs::SurfaceSpec build_spec(const SurfaceArgs& a) {
  const drs::Family fam = drs::parse_family(a.family);
  if (a.lambda_decimal && !a.lambda.empty()) throw drs::InvalidParameter("give either --lambda or --lambda-decimal, not both");
  if (a.lambda_decimal && !a.cf_tol) throw drs::InvalidParameter("--lambda-decimal needs an explicit --cf-tol");
  Rational lambda = fam == drs::Family::L ? Rational(2) : Rational(1);
  if (a.lambda_decimal) lambda = drs::continued_fraction_approx(*a.lambda_decimal, *a.cf_tol);
  else if (!a.lambda.empty()) lambda = Rational::parse(a.lambda);
  if (fam == drs::Family::L) return drs::make_L(lambda, drs::parse_basis(a.basis));
  return drs::make_JS(a.genus, lambda, Rational::parse(a.mu));
}

// Levels this expensive need an explicit --force.
void check_safety_threshold(const drs::SurfaceSpec& spec, int level, bool force) {
  if (force) return;
  const bool heavy = spec.family == drs::Family::L ? (level >= 5 && spec.steps_per_unit > 10) : (level >= 6 && spec.genus >= 4);
  if (heavy)
    throw drs::ResourceLimit("level " + std::to_string(level) + " of " + spec.summary() + " is above the safety threshold; pass --force");
}

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> out;
  try {
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
      const int a = std::stoi(text.substr(0, dots)), b = std::stoi(text.substr(dots + 2));
      for (int n = a; n <= b; ++n) out.push_back(n);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    }
  } catch (const std::exception&) {
    throw drs::InvalidParameter("cannot parse levels '" + text + "' (use a..b or a,b,c)");
  }
  for (int n : out)
    if (n < 0) throw drs::InvalidParameter("levels must be non-negative");
  return out;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw drs::InvalidParameter("cannot write " + out_path);
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

std::string riemann_text(const drs::RiemannMatrix& m) {
  std::ostringstream os;
  os << m.provenance << "\n";
  for (Eigen::Index a = 0; a < m.tau.rows(); ++a) {
    for (Eigen::Index b = 0; b < m.tau.cols(); ++b) os << std::left << std::setw(44) << drs::format_complex(m.tau(a, b));
    os << "\n";
  }
  os << "residual " << m.residual << "  symmetry_defect " << m.symmetry_defect << "  min_imag_eig " << m.min_imag_eig
     << "  wall_time_s " << m.wall_time_s << "\n";
  return os.str();
}

json cjson(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

json characteristic_json(const drs::ThetaCharacteristic& ch) {
  std::string e, d;
  for (int v : ch.eps) e += char('0' + v);
  for (int v : ch.delta) d += char('0' + v);
  return {{"eps", e}, {"delta", d}, {"parity", ch.even() ? "even" : "odd"}};
}

Eigen::MatrixXcd load_tau_input(const std::string& tau_file, const std::optional<double>& exact_l, const std::string& fixture) {
  const int given = !tau_file.empty() + exact_l.has_value() + !fixture.empty();
  if (given != 1) throw drs::InvalidParameter("give exactly one of --tau, --exact-l, --fixture");
  if (exact_l) return drs::exact_L_matrix(*exact_l);
  if (!fixture.empty()) {
    const auto colon = fixture.rfind(':');
    if (colon == std::string::npos) throw drs::InvalidParameter("--fixture takes TABLE_ID:LEVEL");
    const auto tables = drs::load_reference_tables();
    const auto& t = drs::find_table(tables, fixture.substr(0, colon));
    return drs::fixture_matrix(t.row_at_level(std::stoi(fixture.substr(colon + 1))), true);
  }
  std::ifstream in(tau_file);
  if (!in) throw drs::InvalidParameter("cannot open " + tau_file);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw drs::InvalidParameter("malformed JSON in " + tau_file);
  }
  return drs::riemann_from_json(j).tau;
}

int default_threads() {
  if (const char* env = std::getenv("DRS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

void print_error(const char* kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete Riemann matrices of square-tiled translation surfaces"};
  app.require_subcommand(1);
  std::string data_dir;
  app.add_option("--data", data_dir, "directory holding reference_tables.json");

  // compute
  SurfaceArgs c_surf;
  SolverArgs c_solv;
  c_solv.threads = default_threads();
  int c_level = 0;
  std::string c_out, c_format = "json", c_mtx, c_mesh, c_spec;
  auto* compute = app.add_subcommand("compute", "period matrix of one surface at one level");
  add_surface_flags(compute, c_surf);
  add_solver_flags(compute, c_solv);
  compute->add_option("--level", c_level, "refinement level n")->check(CLI::NonNegativeNumber);
  compute->add_option("--out", c_out, "output file (default stdout)");
  compute->add_option("--format", c_format, "json or text")->check(CLI::IsMember({"json", "text"}));
  compute->add_option("--export-mtx", c_mtx, "write the k=1 system as PREFIX.mtx and PREFIX_rhs.mtx");
  compute->add_option("--export-mesh", c_mesh, "write the mesh as JSON");
  compute->add_option("--export-spec", c_spec, "write the surface specification as JSON");

  // converge
  SurfaceArgs v_surf;
  SolverArgs v_solv;
  v_solv.threads = default_threads();
  std::string v_levels = "0..2", v_reference = "auto", v_out, v_format = "json";
  auto* converge = app.add_subcommand("converge", "convergence report over several levels");
  add_surface_flags(converge, v_surf);
  add_solver_flags(converge, v_solv);
  converge->add_option("--levels", v_levels, "levels as a..b or a,b,c");
  converge->add_option("--reference", v_reference, "auto, none, exact, or FIXTURE_ID:LEVEL");
  converge->add_option("--out", v_out, "output file (default stdout)");
  converge->add_option("--format", v_format, "json or text")->check(CLI::IsMember({"json", "text"}));

  // theta
  std::string t_tau, t_fixture, t_out;
  std::optional<double> t_exact;
  bool t_branch = false, t_vanishing = false, t_pairs = false;
  double t_rel = 1e-4, t_pair_tol = 1e-6, t_tol = 1e-12;
  auto* theta = app.add_subcommand("theta", "theta constants, branch points and signatures of a Riemann matrix");
  theta->add_option("--tau", t_tau, "Riemann matrix JSON as written by compute");
  theta->add_option("--exact-l", t_exact, "use the exact L matrix for this lambda");
  theta->add_option("--fixture", t_fixture, "use a reference matrix TABLE_ID:LEVEL (symmetrized)");
  theta->add_flag("--branch-points", t_branch, "genus-2 branch points and reciprocity pairing");
  theta->add_flag("--vanishing", t_vanishing, "count vanishing even theta constants");
  theta->add_flag("--pairs", t_pairs, "list coinciding even theta constants");
  theta->add_option("--rel-threshold", t_rel, "vanishing threshold relative to the median even constant");
  theta->add_option("--pair-tol", t_pair_tol, "relative tolerance for coinciding constants");
  theta->add_option("--tol", t_tol, "lattice-sum truncation tolerance");
  theta->add_option("--out", t_out, "output file (default stdout)");

  // fixtures
  bool f_check = false;
  int f_max_level = 3;
  SolverArgs f_solv;
  f_solv.threads = default_threads();
  std::string f_out;
  auto* fixtures = app.add_subcommand("fixtures", "list or re-run the reference tables");
  fixtures->add_flag("--check", f_check, "recompute every affordable row and compare");
  fixtures->add_option("--max-level", f_max_level, "skip rows above this level");
  add_solver_flags(fixtures, f_solv);
  fixtures->add_option("--out", f_out, "JSON summary file (default stdout)");

  // validate
  SurfaceArgs d_surf;
  std::string d_out, d_spec;
  auto* validate = app.add_subcommand("validate", "surface specification diagnostics");
  add_surface_flags(validate, d_surf);
  validate->add_option("--out", d_out, "output file (default stdout)");
  validate->add_option("--export-spec", d_spec, "write the surface specification as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("invalid-argument", e.what());
    return kExitArgs;
  }
  if (!data_dir.empty()) setenv("DRS_DATA_DIR", data_dir.c_str(), 1);

  try {
    if (*compute) {
      const auto spec = build_spec(c_surf);
      check_safety_threshold(spec, c_level, c_solv.force);
      if (!c_spec.empty()) emit(c_spec, drs::to_json(spec).dump(1));
      if (!c_mesh.empty() || !c_mtx.empty()) {
        const auto mesh = drs::QuadMesh::refine(spec, c_level);
        if (!c_mesh.empty()) emit(c_mesh, mesh.to_json().dump());
        if (!c_mtx.empty()) {
          drs::check_resources(mesh, c_solv.options());
          const auto sys = drs::assemble(mesh, 1, c_solv.threads);
          std::ofstream a(c_mtx + ".mtx"), b(c_mtx + "_rhs.mtx");
          if (!a || !b) throw drs::InvalidParameter("cannot write " + c_mtx + ".mtx");
          drs::write_matrix_market(a, sys.rows, sys.cols, sys.entries);
          drs::write_matrix_market_vector(b, sys.rhs);
        }
      }
      const auto m = drs::period_matrix(spec, c_level, c_solv.options());
      emit(c_out, c_format == "json" ? drs::to_json(m).dump(2) : riemann_text(m));
      return 0;
    }

    if (*converge) {
      const auto spec = build_spec(v_surf);
      const auto levels = parse_levels(v_levels);
      for (int n : levels) check_safety_threshold(spec, n, v_solv.force);
      drs::Reference ref;
      if (v_reference == "auto" || v_reference == "exact") {
        if (spec.family == drs::Family::L) {
          const double lam = v_surf.lambda_decimal ? *v_surf.lambda_decimal : spec.lambda.to_double();
          ref.tag = "exact_L(" + std::to_string(lam) + ")";
          ref.tau = drs::exact_L_matrix(lam);
        } else if (v_reference == "exact") {
          throw drs::InvalidParameter("no exact matrix is known for JS surfaces");
        }
      } else if (v_reference != "none") {
        const auto colon = v_reference.rfind(':');
        if (colon == std::string::npos) throw drs::InvalidParameter("--reference takes auto, none, exact or TABLE_ID:LEVEL");
        const auto tables = drs::load_reference_tables();
        const auto& t = drs::find_table(tables, v_reference.substr(0, colon));
        ref.tag = v_reference;
        ref.tau = drs::fixture_matrix(t.row_at_level(std::stoi(v_reference.substr(colon + 1))));
      }
      const auto rep = drs::convergence_report(spec, levels, ref, v_solv.options());
      json j = drs::to_json(rep);
      j["lambda"] = spec.lambda.to_string();
      emit(v_out, v_format == "json" ? j.dump(2) : drs::to_text(rep));
      return 0;
    }

    if (*theta) {
      const Eigen::MatrixXcd tau = load_tau_input(t_tau, t_exact, t_fixture);
      drs::ThetaOptions opts;
      opts.tol = t_tol;
      const auto rep = drs::theta_report(tau, opts);
      json j;
      j["schema"] = "drs-theta/1";
      j["genus"] = tau.rows();
      j["radius"] = rep.radius;
      j["tail_bound"] = rep.tail_bound;
      std::vector<std::size_t> order(rep.entries.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return std::abs(rep.entries[a].constant) < std::abs(rep.entries[b].constant); });
      std::vector<int> rank(order.size());
      for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r) + 1;
      j["characteristics"] = json::array();
      for (std::size_t k = 0; k < rep.entries.size(); ++k) {
        const auto& e = rep.entries[k];
        json c = characteristic_json(e.ch);
        c["constant"] = cjson(e.constant);
        c["magnitude"] = std::abs(e.constant);
        c["magnitude_rank"] = rank[k];
        c["gradient"] = json::array();
        for (Eigen::Index a = 0; a < e.gradient.size(); ++a) c["gradient"].push_back(cjson(e.gradient[a]));
        j["characteristics"].push_back(c);
      }
      if (t_branch) {
        const auto pts = drs::branch_points_g2(tau, opts);
        j["branch_points"] = json::array();
        std::vector<std::complex<double>> finite;
        for (const auto& b : pts) {
          json e = characteristic_json(b.ch);
          e["at_infinity"] = b.at_infinity;
          if (!b.at_infinity) {
            e["value"] = cjson(b.value);
            finite.push_back(b.value);
          }
          j["branch_points"].push_back(e);
        }
        if (finite.size() == 6) {
          const auto r = drs::reciprocity_check(finite);
          json rj;
          rj["pairs"] = json::array();
          for (int p = 0; p < 3; ++p)
            rj["pairs"].push_back({{"points", {r.pairs[p].first, r.pairs[p].second}}, {"product", cjson(r.products[p])}});
          rj["max_deviation"] = r.max_deviation;
          j["reciprocity"] = rj;
        }
      }
      if (t_vanishing) {
        const auto v = drs::vanishing_even_count(tau, t_rel, opts);
        json vj{{"count", v.count}, {"rel_threshold", v.rel_threshold}, {"median", v.median}, {"threshold", v.threshold}};
        vj["ranked"] = json::array();
        for (const auto& [ch, val] : v.ranked) {
          json e = characteristic_json(ch);
          e["magnitude"] = std::abs(val);
          vj["ranked"].push_back(e);
        }
        j["vanishing"] = vj;
      }
      if (t_pairs) {
        j["pairs"] = json::array();
        for (const auto& [a, b] : drs::even_constant_pairs(tau, t_pair_tol, opts)) j["pairs"].push_back({a.label(), b.label()});
      }
      emit(t_out, j.dump(2));
      return 0;
    }

    if (*fixtures) {
      const auto tables = drs::load_reference_tables();
      json j;
      j["schema"] = "drs-fixture-check/1";
      j["rows"] = json::array();
      bool all_ok = true;
      for (const auto& t : tables) {
        for (const auto& row : t.rows) {
          json r{{"table", t.id}, {"level", row.level}};
          if (row.lambda) r["lambda"] = *row.lambda;
          if (row.mu) r["mu"] = *row.mu;
          if (!f_check) {
            r["status"] = "listed";
            j["rows"].push_back(r);
            continue;
          }
          if (row.level > f_max_level) {
            r["status"] = "skipped: level above --max-level";
            j["rows"].push_back(r);
            continue;
          }
          const Rational lam = Rational::parse(row.lambda ? *row.lambda : t.lambda.value_or("1/1"));
          const Rational mu = Rational::parse(row.mu ? *row.mu : t.mu.value_or("1/1"));
          const auto spec = t.family == "L" ? drs::make_L(lam) : drs::make_JS(t.genus, lam, mu);
          try {
            check_safety_threshold(spec, row.level, f_solv.force);
            const auto m = drs::period_matrix(spec, row.level, f_solv.options());
            // The 7953-denominator rows are compared to 1e-6, everything else to 1e-9.
            const double tol = t.id == "L_10864_7953" ? 1e-6 : 1e-9;
            const auto cmp = drs::compare_to_fixture(m.tau, row, tol);
            r["status"] = cmp.passed ? "match" : "mismatch";
            r["max_abs_diff"] = cmp.max_abs_diff;
            r["wall_time_s"] = m.wall_time_s;
            if (!cmp.used_alternatives.empty()) r["errata_used"] = cmp.used_alternatives;
            if (!cmp.failures.empty()) r["failures"] = cmp.failures;
            all_ok = all_ok && cmp.passed;
          } catch (const drs::ResourceLimit& e) {
            r["status"] = std::string("skipped: ") + e.what();
          }
          std::cerr << t.id << " level " << row.level << (row.lambda ? " lambda " + *row.lambda : "")
                    << (row.mu ? " mu " + *row.mu : "") << ": " << r["status"].get<std::string>() << "\n";
          j["rows"].push_back(r);
        }
      }
      j["ok"] = all_ok;
      emit(f_out, j.dump(2));
      return all_ok ? 0 : kExitNumerical;
    }

    if (*validate) {
      const auto spec = build_spec(d_surf);
      if (!d_spec.empty()) emit(d_spec, drs::to_json(spec).dump(1));
      json j = drs::validate_spec(spec).to_json();
      j["surface"] = spec.summary();
      emit(d_out, j.dump(2));
      return 0;
    }
  } catch (const drs::InvalidParameter& e) {
    print_error(e.kind(), e.what());
    return kExitArgs;
  } catch (const drs::ResourceLimit& e) {
    print_error(e.kind(), e.what());
    return kExitResource;
  } catch (const drs::Error& e) {
    print_error(e.kind(), e.what());
    return e.kind() == std::string("internal-error") ? 1 : kExitNumerical;
  } catch (const std::bad_alloc&) {
    print_error("resource-limit", "out of memory");
    return kExitResource;
  } catch (const std::exception& e) {
    print_error("error", e.what());
    return 1;
  }
  return 0;
}
