#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include "drs/error.hpp"
#include "drs/rational.hpp"
#include "drs/surface.hpp"
#include "json.hpp"

namespace drs {

enum class Color { black = 0, white = 1 };

inline Color vertex_color(std::int64_t i, std::int64_t j) {
  return ((i + j) & 1) == 0 ? Color::black : Color::white;
}

inline std::int64_t pow3(int n) {
  std::int64_t p = 1;
  for (int k = 0; k < n; ++k) {
    if (p > std::numeric_limits<std::int64_t>::max() / 3) throw ResourceLimit("3^level overflows");
    p *= 3;
  }
  return p;
}

// Level-n quadrangulation: every base cell split into 3^n x 3^n squares.
// Vertices are numbered column by column; each column is one contiguous j-range.
class QuadMesh {
 public:
  static QuadMesh refine(const SurfaceSpec& spec, int level) {
    if (level < 0) throw InvalidParameter("level must be non-negative");
    if (spec.cells.empty()) throw InvalidParameter("surface has no cells");
    QuadMesh m;
    m.level_ = level;
    m.genus_ = spec.genus;
    m.scale_ = pow3(level);
    m.steps_per_unit_ = spec.steps_per_unit;
    const std::int64_t k = m.scale_;
    for (const auto& c : spec.cells) m.cells_.push_back({k * c.x0, k * c.y0, k * c.width, k * c.height});
    for (const auto& r : spec.relations) {
      if ((r.shift.i + r.shift.j) % 2 != 0)
        throw InvalidParameter("identification of side " + r.side + " does not preserve the vertex coloring");
      PeriodRelation s = r;
      s.source.start = k * r.source.start;
      s.source.length = k * r.source.length;
      s.shift = k * r.shift;
      m.relations_.push_back(std::move(s));
    }

    m.width_ = 0;
    for (const auto& c : m.cells_) m.width_ = std::max(m.width_, c.x0 + c.width);
    const std::size_t ncols = static_cast<std::size_t>(m.width_ + 1);
    m.col_lo_.assign(ncols, std::numeric_limits<std::int64_t>::max());
    m.col_hi_.assign(ncols, std::numeric_limits<std::int64_t>::min());
    std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> spans(ncols);
    for (const auto& c : m.cells_)
      for (std::int64_t x = c.x0; x <= c.x0 + c.width; ++x) spans[x].push_back({c.y0, c.y0 + c.height});
    for (std::size_t x = 0; x < ncols; ++x) {
      auto& sp = spans[x];
      if (sp.empty()) throw InternalError("column without vertices");
      std::sort(sp.begin(), sp.end());
      std::int64_t hi = sp.front().second;
      for (const auto& [a, b] : sp) {
        if (a > hi) throw InvalidParameter("cell columns must be contiguous");
        hi = std::max(hi, b);
      }
      m.col_lo_[x] = sp.front().first;
      m.col_hi_[x] = hi;
    }
    m.col_off_.resize(ncols + 1);
    m.col_off_[0] = 0;
    for (std::size_t x = 0; x < ncols; ++x) m.col_off_[x + 1] = m.col_off_[x] + (m.col_hi_[x] - m.col_lo_[x] + 1);

    m.cell_off_.resize(m.cells_.size() + 1, 0);
    for (std::size_t c = 0; c < m.cells_.size(); ++c)
      m.cell_off_[c + 1] = m.cell_off_[c] + m.cells_[c].width * m.cells_[c].height;

    for (const auto& r : m.relations_)
      for (const Point p : {r.source.start, r.source.end(), r.target().start, r.target().end()})
        if (!m.contains(p)) throw InternalError("relation for side " + r.side + " leaves the mesh");
    return m;
  }

  int level() const { return level_; }
  int genus() const { return genus_; }
  std::int64_t scale() const { return scale_; }
  // Geometric side length of one square.
  Rational base_step() const { return Rational(1, steps_per_unit_ * scale_); }
  std::int64_t width() const { return width_; }

  std::int64_t vertex_count() const { return col_off_.back(); }
  std::int64_t square_count() const { return cell_off_.back(); }

  bool contains(Point p) const {
    return p.i >= 0 && p.i <= width_ && p.j >= col_lo_[p.i] && p.j <= col_hi_[p.i];
  }

  std::int64_t index(Point p) const {
    if (!contains(p)) throw InternalError("vertex (" + std::to_string(p.i) + "," + std::to_string(p.j) + ") not in mesh");
    return col_off_[p.i] + (p.j - col_lo_[p.i]);
  }

  Point vertex(std::int64_t idx) const {
    auto it = std::upper_bound(col_off_.begin(), col_off_.end(), idx);
    const std::int64_t x = (it - col_off_.begin()) - 1;
    return {x, col_lo_[x] + (idx - col_off_[x])};
  }

  // Bottom-left corner of square number s (cells in order, column-major inside a cell).
  Point square(std::int64_t s) const {
    auto it = std::upper_bound(cell_off_.begin(), cell_off_.end(), s);
    const std::size_t c = static_cast<std::size_t>((it - cell_off_.begin()) - 1);
    const std::int64_t local = s - cell_off_[c];
    const Cell& cell = cells_[c];
    return {cell.x0 + local / cell.height, cell.y0 + local % cell.height};
  }

  template <class F>
  void for_each_square(std::int64_t first, std::int64_t last, F&& f) const {
    if (first >= last) return;
    auto it = std::upper_bound(cell_off_.begin(), cell_off_.end(), first);
    std::size_t c = static_cast<std::size_t>((it - cell_off_.begin()) - 1);
    std::int64_t s = first;
    while (s < last) {
      const Cell& cell = cells_[c];
      const std::int64_t end = std::min(last, cell_off_[c + 1]);
      for (; s < end; ++s) {
        const std::int64_t local = s - cell_off_[c];
        f(s, Point{cell.x0 + local / cell.height, cell.y0 + local % cell.height});
      }
      ++c;
    }
  }

  std::complex<double> position(Point p) const {
    const double h = base_step().to_double();
    return {static_cast<double>(p.i) * h, static_cast<double>(p.j) * h};
  }

  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<PeriodRelation>& boundary_map() const { return relations_; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "drs-mesh/1";
    j["level"] = level_;
    j["genus"] = genus_;
    j["base_step"] = base_step().to_string();
    j["vertex_count"] = vertex_count();
    j["square_count"] = square_count();
    auto& vs = j["vertices"] = nlohmann::ordered_json::array();
    for (std::int64_t v = 0; v < vertex_count(); ++v) {
      const Point p = vertex(v);
      const auto z = position(p);
      vs.push_back({p.i, p.j, z.real(), z.imag(), vertex_color(p.i, p.j) == Color::black ? "b" : "w"});
    }
    auto& sq = j["squares"] = nlohmann::ordered_json::array();
    for_each_square(0, square_count(), [&](std::int64_t, Point p) { sq.push_back({p.i, p.j}); });
    return j;
  }

 private:
  int level_ = 0;
  int genus_ = 0;
  std::int64_t scale_ = 1;
  std::int64_t steps_per_unit_ = 1;
  std::int64_t width_ = 0;
  std::vector<Cell> cells_;
  std::vector<PeriodRelation> relations_;
  std::vector<std::int64_t> col_lo_, col_hi_, col_off_;
  std::vector<std::int64_t> cell_off_;
};

}  // namespace drs
