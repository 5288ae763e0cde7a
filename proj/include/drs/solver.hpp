#pragma once

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>
#include <SuiteSparseQR.hpp>

#include "drs/assembly.hpp"
#include "drs/diagnostics.hpp"
#include "drs/error.hpp"
#include "drs/mesh.hpp"
#include "drs/surface.hpp"
#include "json.hpp"

namespace drs {

struct SolverOptions {
  // Refuse systems whose estimated R factor exceeds this many nonzeros unless forced.
  double max_factor_nonzeros = 2.0e8;
  bool force = false;
  int threads = 1;
  // Column rank tolerance handed to SPQR; negative selects its default.
  double rank_tol = -2.0;
  int ordering = SPQR_ORDERING_METIS;
};

struct LeastSquaresSolution {
  std::vector<std::vector<cplx>> x;  // one column per right-hand side
  std::vector<double> relative_residuals;
  std::int64_t rank = 0;
  std::int64_t factor_nonzeros = 0;
};

// Rough size of the R factor for a quad-grid system with N unknowns under nested dissection.
// Calibrated against SPQR on L and JS systems (see tests/test_solver.cpp).
inline double estimated_factor_nonzeros(std::int64_t unknowns) {
  const double n = static_cast<double>(std::max<std::int64_t>(unknowns, 2));
  return 4.0 * n * std::log2(n);
}

namespace detail {

class CholmodSession {
 public:
  CholmodSession() { cholmod_l_start(&cc); }
  ~CholmodSession() { cholmod_l_finish(&cc); }
  CholmodSession(const CholmodSession&) = delete;
  CholmodSession& operator=(const CholmodSession&) = delete;
  cholmod_common cc;
};

inline void check_status(const cholmod_common& cc, const char* what) {
  if (cc.status == CHOLMOD_OUT_OF_MEMORY) throw ResourceLimit(std::string(what) + ": out of memory");
  if (cc.status < CHOLMOD_OK) throw NumericalError(std::string(what) + " failed with CHOLMOD status " + std::to_string(cc.status));
}

inline cholmod_sparse* to_cholmod(std::int64_t rows, std::int64_t cols, const std::vector<Triplet>& entries, cholmod_common* cc) {
  cholmod_sparse* A = cholmod_l_allocate_sparse(rows, cols, entries.size(), 1, 1, 0, CHOLMOD_COMPLEX, cc);
  check_status(*cc, "allocate sparse matrix");
  auto* Ap = static_cast<SuiteSparse_long*>(A->p);
  auto* Ai = static_cast<SuiteSparse_long*>(A->i);
  auto* Ax = static_cast<double*>(A->x);
  std::vector<SuiteSparse_long> next(static_cast<std::size_t>(cols) + 1, 0);
  for (const auto& t : entries) {
    if (t.col < 0 || t.col >= cols || t.row < 0 || t.row >= rows) {
      cholmod_l_free_sparse(&A, cc);
      throw InternalError("triplet outside matrix bounds");
    }
    ++next[t.col + 1];
  }
  for (std::int64_t c = 0; c < cols; ++c) next[c + 1] += next[c];
  for (std::int64_t c = 0; c <= cols; ++c) Ap[c] = next[c];
  // Row-sorted input keeps every column's row list sorted.
  for (const auto& t : entries) {
    const SuiteSparse_long k = next[t.col]++;
    Ai[k] = t.row;
    Ax[2 * k] = t.value.real();
    Ax[2 * k + 1] = t.value.imag();
  }
  return A;
}

// Factors A once and solves every right-hand side; frees A.
inline LeastSquaresSolution solve_cholmod(cholmod_sparse*& A, const std::vector<std::vector<cplx>>& rhs,
                                          const SolverOptions& opts, cholmod_common* cc) {
  const std::int64_t rows = static_cast<std::int64_t>(A->nrow);
  const std::int64_t cols = static_cast<std::int64_t>(A->ncol);
  const std::size_t nrhs = rhs.size();
  cholmod_dense* B = cholmod_l_allocate_dense(rows, nrhs, rows, CHOLMOD_COMPLEX, cc);
  check_status(*cc, "allocate right-hand side");
  auto* Bx = static_cast<double*>(B->x);
  for (std::size_t k = 0; k < nrhs; ++k)
    for (std::int64_t r = 0; r < rows; ++r) {
      Bx[2 * (k * rows + r)] = rhs[k][r].real();
      Bx[2 * (k * rows + r) + 1] = rhs[k][r].imag();
    }

  cholmod_dense* X = SuiteSparseQR<std::complex<double>>(opts.ordering, opts.rank_tol, A, B, cc);
  if (!X) {
    cholmod_l_free_sparse(&A, cc);
    cholmod_l_free_dense(&B, cc);
    check_status(*cc, "sparse QR");
    throw NumericalError("sparse QR returned no solution");
  }

  LeastSquaresSolution sol;
  sol.factor_nonzeros = static_cast<std::int64_t>(cc->SPQR_istat[0]);
  sol.rank = static_cast<std::int64_t>(cc->SPQR_istat[4]);

  // B <- B - A X, column by column.
  double minus_one[2] = {-1.0, 0.0}, one[2] = {1.0, 0.0};
  cholmod_l_sdmult(A, 0, minus_one, one, X, B, cc);
  const auto* Xx = static_cast<const double*>(X->x);
  sol.x.assign(nrhs, std::vector<cplx>(static_cast<std::size_t>(cols)));
  for (std::size_t k = 0; k < nrhs; ++k) {
    for (std::int64_t c = 0; c < cols; ++c) sol.x[k][c] = {Xx[2 * (k * cols + c)], Xx[2 * (k * cols + c) + 1]};
    double rn = 0, bn = 0;
    for (std::int64_t r = 0; r < rows; ++r) {
      rn += Bx[2 * (k * rows + r)] * Bx[2 * (k * rows + r)] + Bx[2 * (k * rows + r) + 1] * Bx[2 * (k * rows + r) + 1];
      bn += std::norm(rhs[k][r]);
    }
    sol.relative_residuals.push_back(bn > 0 ? std::sqrt(rn / bn) : std::sqrt(rn));
  }
  cholmod_l_free_dense(&X, cc);
  cholmod_l_free_dense(&B, cc);
  cholmod_l_free_sparse(&A, cc);

  if (sol.rank < cols)
    throw SingularSystem("numerical rank " + std::to_string(sol.rank) + " below column count " + std::to_string(cols));
  return sol;
}

inline void check_rhs(std::int64_t rows, std::int64_t cols, const std::vector<std::vector<cplx>>& rhs) {
  if (rows < cols) throw SingularSystem("underdetermined system: " + std::to_string(rows) + " rows < " + std::to_string(cols) + " columns");
  if (rhs.empty()) throw InvalidParameter("no right-hand sides");
  for (const auto& b : rhs)
    if (static_cast<std::int64_t>(b.size()) != rows) throw InvalidParameter("right-hand side length differs from row count");
}

}  // namespace detail

// Least-squares solve of an overdetermined complex system, sharing one QR factorization
// across all right-hand sides. Entries must be sorted by (row, col).
inline LeastSquaresSolution solve_least_squares(std::int64_t rows, std::int64_t cols, const std::vector<Triplet>& entries,
                                                const std::vector<std::vector<cplx>>& rhs, const SolverOptions& opts = {}) {
  detail::check_rhs(rows, cols, rhs);
  detail::CholmodSession s;
  s.cc.SPQR_nthreads = std::max(1, opts.threads);
  cholmod_sparse* A = detail::to_cholmod(rows, cols, entries, &s.cc);
  return detail::solve_cholmod(A, rhs, opts, &s.cc);
}

// Same as above, but releases the triplets before factorizing to lower peak memory.
inline LeastSquaresSolution solve_least_squares(LinearSystem&& sys, const std::vector<std::vector<cplx>>& rhs,
                                                const SolverOptions& opts = {}) {
  detail::check_rhs(sys.rows, sys.cols, rhs);
  detail::CholmodSession s;
  s.cc.SPQR_nthreads = std::max(1, opts.threads);
  cholmod_sparse* A = detail::to_cholmod(sys.rows, sys.cols, sys.entries, &s.cc);
  std::vector<Triplet>().swap(sys.entries);
  return detail::solve_cholmod(A, rhs, opts, &s.cc);
}

struct SolveResult {
  std::vector<cplx> x;
  double residual = 0;  // ||Ax - b|| / ||b||
};

inline SolveResult solve_system(const LinearSystem& sys, const SolverOptions& opts = {}) {
  auto sol = solve_least_squares(sys.rows, sys.cols, sys.entries, {sys.rhs}, opts);
  return {std::move(sol.x[0]), sol.relative_residuals[0]};
}

struct RiemannMatrix {
  Eigen::MatrixXcd tau;
  double symmetry_defect = 0;
  double min_imag_eig = 0;
  double residual = 0;
  double wall_time_s = 0;
  int level = -1;
  std::string provenance;
  std::int64_t unknowns = 0;
  std::int64_t equations = 0;
  std::int64_t factor_nonzeros = 0;

  int genus() const { return static_cast<int>(tau.rows()); }

  void update_diagnostics() {
    symmetry_defect = (tau - tau.transpose()).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd im = tau.imag();
    const Eigen::MatrixXd sym = 0.5 * (im + im.transpose());
    min_imag_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  }

  static RiemannMatrix from_tau(Eigen::MatrixXcd tau, std::string provenance = {}) {
    if (tau.rows() != tau.cols() || tau.rows() == 0) throw InvalidParameter("Riemann matrix must be square and non-empty");
    RiemannMatrix m;
    m.tau = std::move(tau);
    m.provenance = std::move(provenance);
    m.update_diagnostics();
    return m;
  }
};

inline nlohmann::ordered_json to_json(const RiemannMatrix& m) {
  nlohmann::ordered_json j;
  j["schema"] = "drs-riemann/1";
  j["genus"] = m.genus();
  j["level"] = m.level;
  auto part = [&](bool imag) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < m.tau.rows(); ++r) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (Eigen::Index c = 0; c < m.tau.cols(); ++c) row.push_back(imag ? m.tau(r, c).imag() : m.tau(r, c).real());
      rows.push_back(row);
    }
    return rows;
  };
  j["tau_re"] = part(false);
  j["tau_im"] = part(true);
  j["residual"] = m.residual;
  j["symmetry_defect"] = m.symmetry_defect;
  j["min_imag_eig"] = m.min_imag_eig;
  j["wall_time_s"] = m.wall_time_s;
  j["provenance"] = m.provenance;
  j["unknowns"] = m.unknowns;
  j["equations"] = m.equations;
  j["factor_nonzeros"] = m.factor_nonzeros;
  return j;
}

inline RiemannMatrix riemann_from_json(const nlohmann::ordered_json& j) {
  try {
    const auto re = j.at("tau_re").get<std::vector<std::vector<double>>>();
    const auto im = j.at("tau_im").get<std::vector<std::vector<double>>>();
    const Eigen::Index g = static_cast<Eigen::Index>(re.size());
    if (im.size() != re.size()) throw InvalidParameter("tau_re and tau_im differ in shape");
    Eigen::MatrixXcd tau(g, g);
    for (Eigen::Index r = 0; r < g; ++r) {
      if (static_cast<Eigen::Index>(re[r].size()) != g || static_cast<Eigen::Index>(im[r].size()) != g)
        throw InvalidParameter("tau must be square");
      for (Eigen::Index c = 0; c < g; ++c) tau(r, c) = {re[r][c], im[r][c]};
    }
    RiemannMatrix m = RiemannMatrix::from_tau(tau, j.value("provenance", std::string()));
    m.level = j.value("level", -1);
    m.residual = j.value("residual", 0.0);
    m.wall_time_s = j.value("wall_time_s", 0.0);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter(std::string("malformed Riemann matrix JSON: ") + e.what());
  }
}

// Measured peak memory of the factorization, per estimated factor nonzero.
inline constexpr double kBytesPerFactorNonzero = 30.0;

inline double physical_memory_bytes() {
  const long pages = sysconf(_SC_PHYS_PAGES), page = sysconf(_SC_PAGE_SIZE);
  return pages > 0 && page > 0 ? static_cast<double>(pages) * static_cast<double>(page) : 0.0;
}

// The cap can be overridden; a factorization that cannot fit in physical memory cannot.
inline void check_resources(const QuadMesh& mesh, const SolverOptions& opts) {
  const std::int64_t unknowns = mesh.vertex_count() + 4 * mesh.genus();
  const double est = estimated_factor_nonzeros(unknowns);
  const double ram = physical_memory_bytes();
  if (ram > 0 && est * kBytesPerFactorNonzero > ram)
    throw ResourceLimit("level " + std::to_string(mesh.level()) + " needs about " +
                        std::to_string(static_cast<long long>(est * kBytesPerFactorNonzero / 1e9)) + " GB for the factorization (" +
                        std::to_string(unknowns) + " unknowns); this machine has " +
                        std::to_string(static_cast<long long>(ram / 1e9)) + " GB");
  if (!opts.force && est > opts.max_factor_nonzeros)
    throw ResourceLimit("level " + std::to_string(mesh.level()) + " needs about " + std::to_string(static_cast<long long>(est)) +
                        " factor nonzeros (" + std::to_string(unknowns) + " unknowns), above the cap of " +
                        std::to_string(static_cast<long long>(opts.max_factor_nonzeros)) + "; pass force to override");
}

// Row k of tau is (B^w + B^b)/2 of the differential normalized by A_j = delta_jk.
inline RiemannMatrix period_matrix(const SurfaceSpec& spec, int level, const SolverOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const QuadMesh mesh = QuadMesh::refine(spec, level);
  check_resources(mesh, opts);
  const int g = spec.genus;
  LinearSystem sys = assemble(mesh, 1, opts.threads);
  std::vector<std::vector<cplx>> rhs;
  for (int k = 1; k <= g; ++k) rhs.push_back(sys.rhs_for(k));
  const VariableLayout layout = sys.layout;
  const std::int64_t unknowns = sys.cols, equations = sys.rows;
  const auto sol = solve_least_squares(std::move(sys), rhs, opts);

  Eigen::MatrixXcd tau(g, g);
  for (int k = 1; k <= g; ++k)
    for (int j = 1; j <= g; ++j)
      tau(k - 1, j - 1) = 0.5 * (sol.x[k - 1][layout.B(j, Color::white)] + sol.x[k - 1][layout.B(j, Color::black)]);

  RiemannMatrix m = RiemannMatrix::from_tau(tau, spec.summary() + " level=" + std::to_string(level));
  m.level = level;
  m.residual = *std::max_element(sol.relative_residuals.begin(), sol.relative_residuals.end());
  m.unknowns = unknowns;
  m.equations = equations;
  m.factor_nonzeros = sol.factor_nonzeros;
  m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

struct RiemannTolerances {
  double symmetry_rel = 1e-8;
  double residual = 1e-10;
};

inline DiagnosticsReport validate_riemann(const RiemannMatrix& m, const RiemannTolerances& tol = {}) {
  DiagnosticsReport rep;
  const double norm = m.tau.cwiseAbs().maxCoeff();
  rep.metrics["symmetry_defect"] = m.symmetry_defect;
  rep.metrics["min_imag_eig"] = m.min_imag_eig;
  rep.metrics["residual"] = m.residual;
  rep.add("symmetric", m.symmetry_defect <= tol.symmetry_rel * std::max(norm, 1.0),
          "max |tau_ab - tau_ba| = " + std::to_string(m.symmetry_defect));
  rep.add("imaginary_part_positive_definite", m.min_imag_eig > 0, "smallest eigenvalue " + std::to_string(m.min_imag_eig));
  rep.add("residual", m.residual <= tol.residual, "relative residual " + std::to_string(m.residual));
  return rep;
}

}  // namespace drs
