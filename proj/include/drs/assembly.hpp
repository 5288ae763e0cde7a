#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include "drs/error.hpp"
#include "drs/mesh.hpp"
#include "drs/surface.hpp"

namespace drs {

using cplx = std::complex<double>;

struct Triplet {
  std::int64_t row = 0;
  std::int64_t col = 0;
  cplx value;
};

// Rows numbered from 0 within the block.
struct RowBlock {
  std::int64_t rows = 0;
  std::vector<Triplet> entries;
  std::vector<cplx> rhs;
};

struct EquationCounts {
  std::int64_t holomorphicity = 0;
  std::int64_t periodicity = 0;
  std::int64_t normalization = 0;
  std::int64_t total() const { return holomorphicity + periodicity + normalization; }
};

// Columns: mesh vertices first, then A_1^b, A_1^w, ..., A_g^w, B_1^b, ..., B_g^w.
class VariableLayout {
 public:
  VariableLayout() = default;
  VariableLayout(std::int64_t vertex_vars, int genus) : nv_(vertex_vars), g_(genus) {}

  std::int64_t vertex_vars() const { return nv_; }
  int genus() const { return g_; }
  std::int64_t total() const { return nv_ + 4 * g_; }
  std::int64_t A(int k, Color c) const { return period(0, k, c); }
  std::int64_t B(int k, Color c) const { return period(1, k, c); }

 private:
  std::int64_t period(int kind, int k, Color c) const {
    if (k < 1 || k > g_) throw InternalError("period index out of range");
    return nv_ + 2 * (kind * g_ + (k - 1)) + static_cast<int>(c);
  }
  std::int64_t nv_ = 0;
  int g_ = 0;
};

struct LinearSystem {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<Triplet> entries;  // sorted by (row, col)
  std::vector<cplx> rhs;
  EquationCounts counts;
  VariableLayout layout;
  int differential = 1;
  std::int64_t normalization_row0 = 0;

  // Right-hand side of the k-th canonical differential; the matrix does not depend on k.
  std::vector<cplx> rhs_for(int k) const {
    if (k < 1 || k > layout.genus()) throw InvalidParameter("differential index out of range");
    std::vector<cplx> b(static_cast<std::size_t>(rows), cplx(0.0));
    b[static_cast<std::size_t>(normalization_row0 + 2 + 2 * (k - 1) + 1)] = 1.0;
    return b;
  }
};

inline void sort_row(Triplet* first, Triplet* last) {
  std::sort(first, last, [](const Triplet& a, const Triplet& b) { return a.col < b.col; });
}

// One row per square: i x(i+1,j+1) - i x(i,j) - x(i,j+1) + x(i+1,j) = 0.
inline RowBlock holomorphicity_equations(const QuadMesh& mesh, int threads = 1) {
  const cplx I(0.0, 1.0);
  RowBlock blk;
  blk.rows = mesh.square_count();
  blk.entries.resize(static_cast<std::size_t>(4 * blk.rows));
  blk.rhs.assign(static_cast<std::size_t>(blk.rows), cplx(0.0));
  auto work = [&](std::int64_t first, std::int64_t last) {
    mesh.for_each_square(first, last, [&](std::int64_t s, Point p) {
      Triplet* t = &blk.entries[static_cast<std::size_t>(4 * s)];
      t[0] = {s, mesh.index({p.i + 1, p.j + 1}), I};
      t[1] = {s, mesh.index(p), -I};
      t[2] = {s, mesh.index({p.i, p.j + 1}), -1.0};
      t[3] = {s, mesh.index({p.i + 1, p.j}), 1.0};
      sort_row(t, t + 4);
    });
  };
  // Each square owns a fixed slot, so the output does not depend on the thread count.
  threads = std::max(1, threads);
  if (threads == 1 || blk.rows < 4096) {
    work(0, blk.rows);
  } else {
    std::vector<std::thread> pool;
    const std::int64_t chunk = (blk.rows + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::int64_t a = t * chunk, b = std::min(blk.rows, a + chunk);
      if (a < b) pool.emplace_back(work, a, b);
    }
    for (auto& th : pool) th.join();
  }
  return blk;
}

// One row per lattice point on every identified source segment.
inline RowBlock periodicity_equations(const QuadMesh& mesh, const VariableLayout& layout) {
  const int g = layout.genus();
  RowBlock blk;
  for (const auto& r : mesh.boundary_map()) {
    if (static_cast<int>(r.a.size()) != g || static_cast<int>(r.b.size()) != g)
      throw InternalError("coefficient vector length differs from genus");
    for (std::int64_t t = 0; t <= r.source.length; ++t) {
      const Point p = r.source.at(t);
      const Color c = vertex_color(p.i, p.j);
      const std::size_t first = blk.entries.size();
      const std::int64_t row = blk.rows++;
      blk.entries.push_back({row, mesh.index(p + r.shift), 1.0});
      blk.entries.push_back({row, mesh.index(p), -1.0});
      for (int k = 1; k <= g; ++k) {
        if (r.a[k - 1] != 0) blk.entries.push_back({row, layout.A(k, c), -static_cast<double>(r.a[k - 1])});
        if (r.b[k - 1] != 0) blk.entries.push_back({row, layout.B(k, c), -static_cast<double>(r.b[k - 1])});
      }
      sort_row(blk.entries.data() + first, blk.entries.data() + blk.entries.size());
    }
  }
  blk.rhs.assign(static_cast<std::size_t>(blk.rows), cplx(0.0));
  return blk;
}

// x(0,0) = 0, x(1,0) = 0, and for each j: A_j^w - A_j^b = 0, A_j^w = [j == k].
inline RowBlock normalization_equations(const QuadMesh& mesh, const VariableLayout& layout, int k) {
  const int g = layout.genus();
  if (k < 1 || k > g) throw InvalidParameter("differential index " + std::to_string(k) + " outside 1.." + std::to_string(g));
  RowBlock blk;
  blk.entries.push_back({blk.rows++, mesh.index({0, 0}), 1.0});
  blk.entries.push_back({blk.rows++, mesh.index({1, 0}), 1.0});
  blk.rhs.assign(2, cplx(0.0));
  for (int j = 1; j <= g; ++j) {
    blk.entries.push_back({blk.rows, layout.A(j, Color::black), -1.0});
    blk.entries.push_back({blk.rows++, layout.A(j, Color::white), 1.0});
    blk.rhs.push_back(0.0);
    blk.entries.push_back({blk.rows++, layout.A(j, Color::white), 1.0});
    blk.rhs.push_back(j == k ? 1.0 : 0.0);
  }
  return blk;
}

inline LinearSystem assemble(const QuadMesh& mesh, int k = 1, int threads = 1) {
  LinearSystem sys;
  sys.layout = VariableLayout(mesh.vertex_count(), mesh.genus());
  sys.cols = sys.layout.total();
  sys.differential = k;

  RowBlock blocks[3] = {holomorphicity_equations(mesh, threads), periodicity_equations(mesh, sys.layout),
                        normalization_equations(mesh, sys.layout, k)};
  sys.counts = {blocks[0].rows, blocks[1].rows, blocks[2].rows};
  sys.normalization_row0 = blocks[0].rows + blocks[1].rows;
  std::size_t nnz = 0;
  for (const auto& b : blocks) nnz += b.entries.size();
  sys.entries.reserve(nnz);
  std::int64_t offset = 0;
  for (auto& b : blocks) {
    for (auto t : b.entries) {
      t.row += offset;
      sys.entries.push_back(t);
    }
    sys.rhs.insert(sys.rhs.end(), b.rhs.begin(), b.rhs.end());
    offset += b.rows;
    b = RowBlock{};
  }
  sys.rows = offset;
  return sys;
}

struct ClosedFormCounts {
  std::int64_t variables = 0;
  std::int64_t equations = 0;
};

// Published closed forms for the variable and equation totals. JS forms cover unit side lengths only.
inline std::optional<ClosedFormCounts> closed_form_counts(const SurfaceSpec& spec, int n) {
  const std::int64_t p3 = pow3(n);
  if (spec.family == Family::L) {
    const std::int64_t s = spec.steps_per_unit;
    const Rational& lam = spec.lambda;
    // 9 + 3^{2n} s^2 (2 lambda - 1) + 2 lambda 3^n s, with lambda s integral.
    const std::int64_t lam_s = lam.num() * (s / lam.den());
    const std::int64_t v = 9 + p3 * p3 * s * (2 * lam_s - s) + 2 * lam_s * p3;
    return ClosedFormCounts{v, v + 1};
  }
  if (!(spec.lambda == Rational(1)) || !(spec.mu == Rational(1))) return std::nullopt;
  const std::int64_t g = spec.genus;
  const std::int64_t base = p3 * p3 * (4 * g - 4) + p3 * (4 * g - 3);
  return ClosedFormCounts{base + 4 * g + 1, base + 6 * g - 1};
}

inline void write_matrix_market(std::ostream& os, std::int64_t rows, std::int64_t cols, const std::vector<Triplet>& entries) {
  os << "%%MatrixMarket matrix coordinate complex general\n";
  os << rows << ' ' << cols << ' ' << entries.size() << '\n';
  os << std::setprecision(17);
  for (const auto& t : entries) os << t.row + 1 << ' ' << t.col + 1 << ' ' << t.value.real() << ' ' << t.value.imag() << '\n';
}

inline void write_matrix_market_vector(std::ostream& os, const std::vector<cplx>& v) {
  os << "%%MatrixMarket matrix array complex general\n";
  os << v.size() << " 1\n";
  os << std::setprecision(17);
  for (const auto& z : v) os << z.real() << ' ' << z.imag() << '\n';
}

struct MatrixMarketData {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<Triplet> entries;
};

inline MatrixMarketData read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("%%MatrixMarket matrix coordinate complex general", 0) != 0)
    throw InvalidParameter("expected a complex general coordinate Matrix Market file");
  while (std::getline(is, line) && !line.empty() && line[0] == '%') {
  }
  MatrixMarketData m;
  std::size_t nnz = 0;
  std::istringstream head(line);
  if (!(head >> m.rows >> m.cols >> nnz)) throw InvalidParameter("bad Matrix Market size line");
  m.entries.reserve(nnz);
  for (std::size_t e = 0; e < nnz; ++e) {
    std::int64_t r, c;
    double re, im;
    if (!(is >> r >> c >> re >> im)) throw InvalidParameter("truncated Matrix Market body");
    m.entries.push_back({r - 1, c - 1, {re, im}});
  }
  return m;
}

}  // namespace drs
