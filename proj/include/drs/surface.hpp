#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "drs/diagnostics.hpp"
#include "drs/error.hpp"
#include "drs/rational.hpp"
#include "json.hpp"

namespace drs {

inline constexpr int kMaxGenus = 16;

enum class Family { L, JS };
enum class BasisVariant { alpha, delta };

inline std::string to_string(Family f) { return f == Family::L ? "L" : "JS"; }
inline std::string to_string(BasisVariant b) { return b == BasisVariant::alpha ? "alpha" : "delta"; }

inline Family parse_family(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s == "L") return Family::L;
  if (s == "JS") return Family::JS;
  throw InvalidParameter("unknown surface family '" + s + "'");
}

inline BasisVariant parse_basis(const std::string& s) {
  if (s == "alpha") return BasisVariant::alpha;
  if (s == "delta") return BasisVariant::delta;
  throw InvalidParameter("unknown basis variant '" + s + "'");
}

struct Point {
  std::int64_t i = 0;
  std::int64_t j = 0;
  friend bool operator==(const Point&, const Point&) = default;
  friend Point operator+(Point a, Point b) { return {a.i + b.i, a.j + b.j}; }
  friend Point operator-(Point a, Point b) { return {a.i - b.i, a.j - b.j}; }
  friend Point operator*(std::int64_t s, Point p) { return {s * p.i, s * p.j}; }
};

struct PointHash {
  std::size_t operator()(const Point& p) const noexcept {
    return std::hash<std::int64_t>()(p.i * 0x9E3779B97F4A7C15LL ^ p.j);
  }
};

// Axis-aligned block of unit cells in the base lattice.
struct Cell {
  std::int64_t x0 = 0;
  std::int64_t y0 = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

// Lattice points start + t*step for t = 0..length.
struct Segment {
  Point start;
  Point step;
  std::int64_t length = 0;
  Point at(std::int64_t t) const { return start + t * step; }
  Point end() const { return at(length); }
  friend bool operator==(const Segment&, const Segment&) = default;
};

// x(p + shift) - x(p) = sum_k a[k] A_k + b[k] B_k for every p on source.
struct PeriodRelation {
  std::string side;
  Segment source;
  Point shift;
  std::vector<int> a;
  std::vector<int> b;
  Segment target() const { return {source.start + shift, source.step, source.length}; }
};

struct Permutation {
  std::vector<int> images;  // images[k-1] = pi(k)
  int operator()(int k) const { return images.at(k - 1); }
  int size() const { return static_cast<int>(images.size()); }
  int inverse(int v) const {
    auto it = std::find(images.begin(), images.end(), v);
    if (it == images.end()) throw InternalError("value outside permutation range");
    return static_cast<int>(it - images.begin()) + 1;
  }
};

struct SurfaceSpec {
  Family family = Family::L;
  int genus = 2;
  Rational lambda{2};
  Rational mu{1};
  BasisVariant basis = BasisVariant::alpha;
  std::int64_t steps_per_unit = 1;  // base lattice steps per unit length
  std::vector<Cell> cells;
  std::vector<PeriodRelation> relations;
  std::optional<Permutation> gluing;  // JS top/bottom gluing

  std::int64_t width() const {
    std::int64_t w = 0;
    for (const auto& c : cells) w = std::max(w, c.x0 + c.width);
    return w;
  }
  std::int64_t height() const {
    std::int64_t h = 0;
    for (const auto& c : cells) h = std::max(h, c.y0 + c.height);
    return h;
  }
  std::int64_t square_count() const {
    std::int64_t n = 0;
    for (const auto& c : cells) n += c.width * c.height;
    return n;
  }
  std::string summary() const {
    std::string s = to_string(family) + " g=" + std::to_string(genus) + " lambda=" + lambda.to_string();
    if (family == Family::JS) s += " mu=" + mu.to_string();
    if (family == Family::L) s += " basis=" + to_string(basis);
    return s;
  }
};

inline Permutation js_permutation(int g) {
  if (g < 2) throw InvalidParameter("JS permutation needs genus >= 2");
  const int m = 4 * g - 4;
  Permutation p;
  p.images.resize(m);
  for (int k = 1; k <= m; ++k) {
    if (k % 2 == 1)
      p.images[k - 1] = k + 1;
    else if (k % 4 == 2)
      p.images[k - 1] = k - 1;
    else
      p.images[k - 1] = (k + 3 - 1) % m + 1;
  }
  return p;
}

inline std::int64_t lcm_checked(std::int64_t a, std::int64_t b) {
  const std::int64_t l = std::lcm(a, b);
  if (l <= 0) throw InvalidParameter("step size overflows 64-bit lattice");
  return l;
}

inline SurfaceSpec make_L(Rational lambda, BasisVariant variant = BasisVariant::alpha) {
  if (lambda <= Rational(1)) throw InvalidParameter("L-shape needs lambda > 1, got " + lambda.to_string());
  SurfaceSpec s;
  s.family = Family::L;
  s.genus = 2;
  s.lambda = lambda;
  s.basis = variant;
  // Both M and lambda*M must be even so every gluing translation preserves the vertex coloring.
  s.steps_per_unit = lcm_checked(lambda.den(), 2);
  if ((lambda.num() * (s.steps_per_unit / lambda.den())) % 2 != 0) s.steps_per_unit *= 2;
  const std::int64_t M = s.steps_per_unit;
  const std::int64_t Lam = lambda.num() * (M / lambda.den());
  s.cells = {{0, 0, M, Lam}, {M, 0, Lam - M, M}};

  const bool alpha = variant == BasisVariant::alpha;
  const Point up{0, 1}, right{1, 0};
  s.relations = {
      {"4", {{0, 0}, up, M}, {Lam, 0}, {1, 0}, {0, 0}},
      {"3", {{0, M}, up, Lam - M}, {M, 0}, alpha ? std::vector<int>{1, -1} : std::vector<int>{0, 1}, {0, 0}},
      {"1", {{0, 0}, right, M}, {0, Lam}, {0, 0}, alpha ? std::vector<int>{1, 0} : std::vector<int>{1, 1}},
      {"2", {{M, 0}, right, Lam - M}, {0, M}, {0, 0}, alpha ? std::vector<int>{1, 1} : std::vector<int>{1, 0}},
  };
  return s;
}

inline void require_odd_rational(const Rational& r, const char* name) {
  if (r <= Rational(0)) throw InvalidParameter(std::string(name) + " must be positive");
  if (r.num() % 2 == 0 || r.den() % 2 == 0)
    throw InvalidParameter(std::string(name) + " = " + r.to_string() +
                           " needs odd numerator and denominator for a bipartite quadrangulation");
}

// Jenkins-Strebel representative: a row of 4g-4 squares, lambda on the vertical side,
// mu on the leftmost top side, top and bottom glued by js_permutation(g).
inline SurfaceSpec make_JS(int g, Rational lambda = Rational(1), Rational mu = Rational(1)) {
  if (g < 2 || g > kMaxGenus)
    throw InvalidParameter("JS genus must lie in [2, " + std::to_string(kMaxGenus) + "], got " + std::to_string(g));
  require_odd_rational(lambda, "lambda");
  require_odd_rational(mu, "mu");

  SurfaceSpec s;
  s.family = Family::JS;
  s.genus = g;
  s.lambda = lambda;
  s.mu = mu;
  s.steps_per_unit = lcm_checked(lambda.den(), mu.den());
  const std::int64_t U = s.steps_per_unit;
  const std::int64_t H = lambda.num() * (U / lambda.den());
  const std::int64_t Wmu = mu.num() * (U / mu.den());
  const int m = 4 * g - 4;
  const std::int64_t W = Wmu + (m - 1) * U;

  auto side_len = [&](int k) { return k == 1 ? Wmu : U; };
  auto top_x = [&](int k) -> std::int64_t { return k == 1 ? 0 : Wmu + (k - 2) * U; };
  s.gluing = js_permutation(g);
  const Permutation& pi = *s.gluing;
  auto bottom_x = [&](int pos) -> std::int64_t {
    std::int64_t x = 0;
    for (int q = 1; q < pos; ++q) x += side_len(pi(q));
    return x;
  };

  s.cells.push_back({0, 0, Wmu, H});
  for (int k = 2; k <= m; ++k) s.cells.push_back({top_x(k), 0, U, H});

  auto unit = [g](int k) {
    std::vector<int> v(g, 0);
    v[k - 1] = 1;
    return v;
  };
  const std::vector<int> zero(g, 0);

  for (int k = 1; k <= m; ++k) {
    std::vector<int> a = zero, b = zero;
    if (k % 4 == 2) {
      a = unit((k - 2) / 4 + 1);
    } else if (k % 4 == 0) {
      a[g - 1] = -1;
    } else if (k % 4 == 1) {
      b = unit((k - 1) / 4 + 1);
    } else if (k == 3) {
      b[g - 1] = -1;
      a[g - 1] = g - 2;
      for (int j = 2; j <= g - 1; ++j) {
        b[j - 1] += 1;
        a[j - 1] -= 1;
      }
    } else {
      const int jj = (k - 7) / 4 + 2;  // side 4j+7 carries A_{j+2} - B_{j+2} - A_g
      a[jj - 1] += 1;
      b[jj - 1] -= 1;
      a[g - 1] -= 1;
    }
    const std::int64_t bx = bottom_x(pi.inverse(k));
    s.relations.push_back({std::to_string(k), {{bx, 0}, {1, 0}, side_len(k)}, {top_x(k) - bx, H}, a, b});
  }

  // Vertical side: right minus left.
  std::vector<int> a0 = zero, b0 = zero;
  b0[g - 1] = 1;
  a0[g - 1] = -(g - 1);
  for (int j = 1; j <= g - 1; ++j) {
    a0[j - 1] += 1;
    b0[j - 1] -= 1;
  }
  s.relations.push_back({"0", {{0, 0}, {0, 1}, H}, {W, 0}, a0, b0});
  return s;
}

namespace detail {

// Union-find whose nodes carry a potential in Z^dim relative to their parent.
class PotentialUnionFind {
 public:
  explicit PotentialUnionFind(int dim) : dim_(dim) {}

  int node(const Point& p) {
    auto [it, inserted] = ids_.try_emplace(p, static_cast<int>(parent_.size()));
    if (inserted) {
      parent_.push_back(it->second);
      pot_.insert(pot_.end(), dim_, 0);
    }
    return it->second;
  }

  // Root of a, with pot(a) - pot(root) accumulated into out.
  int find(int a, std::vector<std::int64_t>& out) {
    out.assign(dim_, 0);
    int r = a;
    while (parent_[r] != r) {
      for (int d = 0; d < dim_; ++d) out[d] += pot_[r * dim_ + d];
      r = parent_[r];
    }
    // Path compression keeps potentials relative to the new parent.
    std::vector<std::int64_t> acc = out;
    int c = a;
    while (parent_[c] != r) {
      const int next = parent_[c];
      std::vector<std::int64_t> own(pot_.begin() + c * dim_, pot_.begin() + (c + 1) * dim_);
      for (int d = 0; d < dim_; ++d) pot_[c * dim_ + d] = acc[d];
      for (int d = 0; d < dim_; ++d) acc[d] -= own[d];
      parent_[c] = r;
      c = next;
    }
    return r;
  }

  // Impose x(b) - x(a) = w. Returns false on a contradiction.
  bool unite(int a, int b, const std::vector<std::int64_t>& w) {
    std::vector<std::int64_t> pa, pb;
    const int ra = find(a, pa);
    const int rb = find(b, pb);
    if (ra == rb) {
      for (int d = 0; d < dim_; ++d)
        if (pb[d] - pa[d] != w[d]) return false;
      return true;
    }
    parent_[rb] = ra;
    for (int d = 0; d < dim_; ++d) pot_[rb * dim_ + d] = w[d] - pb[d] + pa[d];
    return true;
  }

  int classes() const {
    int n = 0;
    for (std::size_t i = 0; i < parent_.size(); ++i) n += parent_[i] == static_cast<int>(i);
    return n;
  }

 private:
  int dim_;
  std::unordered_map<Point, int, PointHash> ids_;
  std::vector<int> parent_;
  std::vector<std::int64_t> pot_;
};

struct UnitEdge {
  std::int64_t x, y;
  int dir;  // 0 horizontal [x,x+1]x{y}, 1 vertical {x}x[y,y+1]
  friend bool operator==(const UnitEdge&, const UnitEdge&) = default;
};

struct UnitEdgeHash {
  std::size_t operator()(const UnitEdge& e) const noexcept {
    return PointHash()({e.x * 2 + e.dir, e.y});
  }
};

inline void for_each_unit_edge(const Segment& s, const std::function<void(const UnitEdge&)>& f) {
  for (std::int64_t t = 0; t < s.length; ++t) {
    const Point p = s.at(t), q = s.at(t + 1);
    const Point lo{std::min(p.i, q.i), std::min(p.j, q.j)};
    f({lo.i, lo.j, p.j == q.j ? 0 : 1});
  }
}

}  // namespace detail

inline DiagnosticsReport validate_spec(const SurfaceSpec& spec) {
  DiagnosticsReport rep;
  const int g = spec.genus;

  bool shapes_ok = true;
  for (const auto& r : spec.relations) {
    if (static_cast<int>(r.a.size()) != g || static_cast<int>(r.b.size()) != g) {
      rep.add("coefficient_shape", false, "side " + r.side + " has coefficient vectors of wrong length");
      shapes_ok = false;
    }
    const bool unit_step = std::abs(r.source.step.i) + std::abs(r.source.step.j) == 1;
    if (!unit_step || r.source.length <= 0) {
      rep.add("segment_shape", false, "side " + r.side + " is not a unit-step axis-parallel segment");
      shapes_ok = false;
    }
  }
  if (!shapes_ok) return rep;

  // Boundary of the cell union: unit edges covered by exactly one cell.
  std::unordered_map<detail::UnitEdge, int, detail::UnitEdgeHash> cell_edges;
  for (const auto& c : spec.cells) {
    const Point corners[4] = {{c.x0, c.y0}, {c.x0 + c.width, c.y0}, {c.x0 + c.width, c.y0 + c.height}, {c.x0, c.y0 + c.height}};
    for (int e = 0; e < 4; ++e) {
      const Point a = corners[e], b = corners[(e + 1) % 4];
      const Point step{(b.i > a.i) - (b.i < a.i), (b.j > a.j) - (b.j < a.j)};
      const std::int64_t len = std::abs(b.i - a.i) + std::abs(b.j - a.j);
      detail::for_each_unit_edge({a, step, len}, [&](const detail::UnitEdge& u) { ++cell_edges[u]; });
    }
  }
  std::unordered_map<detail::UnitEdge, int, detail::UnitEdgeHash> covered;
  std::int64_t off_boundary = 0;
  for (const auto& r : spec.relations) {
    for (const Segment& s : {r.source, r.target()}) {
      detail::for_each_unit_edge(s, [&](const detail::UnitEdge& u) {
        auto it = cell_edges.find(u);
        if (it == cell_edges.end() || it->second != 1) ++off_boundary;
        ++covered[u];
      });
    }
  }
  std::int64_t unpaired = 0, doubled = 0;
  for (const auto& [e, n] : cell_edges) {
    if (n != 1) continue;
    auto it = covered.find(e);
    if (it == covered.end()) ++unpaired;
    else if (it->second > 1) ++doubled;
  }
  rep.metrics["unpaired_edges"] = unpaired;
  rep.add("unpaired_edges", unpaired == 0, std::to_string(unpaired) + " boundary unit edges without identification");
  rep.add("multiply_paired_edges", doubled == 0, std::to_string(doubled) + " boundary unit edges identified more than once");
  rep.add("segments_on_boundary", off_boundary == 0, std::to_string(off_boundary) + " identified unit edges off the boundary");

  // Translation maps source onto target exactly by construction; parity of the shift decides color.
  std::int64_t color_conflicts = 0;
  for (const auto& r : spec.relations)
    if ((r.shift.i + r.shift.j) % 2 != 0) ++color_conflicts;
  rep.metrics["color_conflicts"] = color_conflicts;
  rep.add("color_consistency", color_conflicts == 0, std::to_string(color_conflicts) + " identifications join vertices of different color");

  // Closed-loop consistency of the coefficient table over identified lattice points.
  detail::PotentialUnionFind uf(2 * g);
  bool consistent = true;
  std::string first_conflict;
  for (const auto& r : spec.relations) {
    std::vector<std::int64_t> w(2 * g);
    for (int k = 0; k < g; ++k) {
      w[k] = r.a[k];
      w[g + k] = r.b[k];
    }
    for (std::int64_t t = 0; t <= r.source.length; ++t) {
      const int u = uf.node(r.source.at(t));
      const int v = uf.node(r.source.at(t) + r.shift);
      if (!uf.unite(u, v, w) && consistent) {
        consistent = false;
        first_conflict = "side " + r.side;
      }
    }
  }
  rep.add("closed_loop_consistency", consistent,
          consistent ? "coefficients sum to zero around every identified loop" : "contradiction at " + first_conflict);

  // Geometric check: the shifts must be the holonomy of dz for some choice of periods.
  const Eigen::Index E = static_cast<Eigen::Index>(spec.relations.size());
  Eigen::MatrixXd C(E, 2 * g);
  Eigen::MatrixXd rhs(E, 2);
  for (Eigen::Index e = 0; e < E; ++e) {
    const auto& r = spec.relations[e];
    for (int k = 0; k < g; ++k) {
      C(e, k) = r.a[k];
      C(e, g + k) = r.b[k];
    }
    rhs(e, 0) = static_cast<double>(r.shift.i);
    rhs(e, 1) = static_cast<double>(r.shift.j);
  }
  const Eigen::MatrixXd periods = C.colPivHouseholderQr().solve(rhs);
  const double holonomy_residual = (C * periods - rhs).norm() / std::max(1.0, rhs.norm());
  rep.metrics["holonomy_residual"] = holonomy_residual;
  rep.add("holonomy_consistency", holonomy_residual < 1e-9, "relative residual " + std::to_string(holonomy_residual));

  // Euler characteristic: polygon vertices are segment endpoints.
  detail::PotentialUnionFind vf(1);
  const std::vector<std::int64_t> z1{0};
  for (const auto& r : spec.relations) {
    vf.unite(vf.node(r.source.start), vf.node(r.target().start), z1);
    vf.unite(vf.node(r.source.end()), vf.node(r.target().end()), z1);
  }
  const int V = vf.classes();
  const int Ecount = static_cast<int>(spec.relations.size());

  // Faces: connected components of the cell set, adjacency through shared edges.
  std::vector<int> comp(spec.cells.size());
  std::iota(comp.begin(), comp.end(), 0);
  std::function<int(int)> root = [&](int a) { return comp[a] == a ? a : comp[a] = root(comp[a]); };
  for (std::size_t a = 0; a < spec.cells.size(); ++a)
    for (std::size_t b = a + 1; b < spec.cells.size(); ++b) {
      const Cell &p = spec.cells[a], &q = spec.cells[b];
      const bool vertical_touch = (p.x0 + p.width == q.x0 || q.x0 + q.width == p.x0) &&
                                  std::min(p.y0 + p.height, q.y0 + q.height) > std::max(p.y0, q.y0);
      const bool horizontal_touch = (p.y0 + p.height == q.y0 || q.y0 + q.height == p.y0) &&
                                    std::min(p.x0 + p.width, q.x0 + q.width) > std::max(p.x0, q.x0);
      if (vertical_touch || horizontal_touch) comp[root(static_cast<int>(a))] = root(static_cast<int>(b));
    }
  int F = 0;
  for (std::size_t a = 0; a < comp.size(); ++a) F += root(static_cast<int>(a)) == static_cast<int>(a);

  const int chi = V - Ecount + F;
  rep.metrics["vertex_classes"] = V;
  rep.metrics["edges"] = Ecount;
  rep.metrics["faces"] = F;
  rep.metrics["euler_characteristic"] = chi;
  const bool even_chi = chi % 2 == 0;
  rep.metrics["genus_from_euler"] = even_chi ? (2 - chi) / 2 : -1;
  rep.add("euler_genus", even_chi && (2 - chi) / 2 == g,
          "V - E + F = " + std::to_string(V) + " - " + std::to_string(Ecount) + " + " + std::to_string(F) + " = " +
              std::to_string(chi) + ", declared genus " + std::to_string(g));
  return rep;
}

// JSON schema "drs-surface/1"; see docs/schemas.md.
inline nlohmann::ordered_json to_json(const SurfaceSpec& s) {
  auto pt = [](Point p) { return nlohmann::ordered_json::array({p.i, p.j}); };
  auto seg = [&](const Segment& g) {
    return nlohmann::ordered_json{{"start", pt(g.start)}, {"step", pt(g.step)}, {"length", g.length}};
  };
  nlohmann::ordered_json j;
  j["schema"] = "drs-surface/1";
  j["family"] = to_string(s.family);
  j["genus"] = s.genus;
  j["params"] = {{"lambda", s.lambda.to_string()}};
  if (s.family == Family::JS) j["params"]["mu"] = s.mu.to_string();
  j["basis_variant"] = to_string(s.basis);
  j["steps_per_unit"] = s.steps_per_unit;
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : s.cells) j["cells"].push_back({c.x0, c.y0, c.width, c.height});
  if (s.gluing) j["gluing_permutation"] = s.gluing->images;
  j["identifications"] = nlohmann::ordered_json::array();
  j["periodicity_table"] = nlohmann::ordered_json::array();
  for (const auto& r : s.relations) {
    j["identifications"].push_back(
        {{"side", r.side}, {"segment_a", seg(r.source)}, {"segment_b", seg(r.target())}, {"translation", pt(r.shift)}});
    j["periodicity_table"].push_back({{"side", r.side}, {"a", r.a}, {"b", r.b}});
  }
  return j;
}

inline SurfaceSpec spec_from_json(const nlohmann::ordered_json& j) {
  try {
    auto pt = [](const nlohmann::ordered_json& a) { return Point{a.at(0).get<std::int64_t>(), a.at(1).get<std::int64_t>()}; };
    auto seg = [&](const nlohmann::ordered_json& a) {
      return Segment{pt(a.at("start")), pt(a.at("step")), a.at("length").get<std::int64_t>()};
    };
    SurfaceSpec s;
    s.family = parse_family(j.at("family").get<std::string>());
    s.genus = j.at("genus").get<int>();
    s.lambda = Rational::parse(j.at("params").at("lambda").get<std::string>());
    if (j.at("params").contains("mu")) s.mu = Rational::parse(j.at("params").at("mu").get<std::string>());
    s.basis = parse_basis(j.value("basis_variant", std::string("alpha")));
    s.steps_per_unit = j.at("steps_per_unit").get<std::int64_t>();
    for (const auto& c : j.at("cells"))
      s.cells.push_back({c.at(0).get<std::int64_t>(), c.at(1).get<std::int64_t>(), c.at(2).get<std::int64_t>(),
                         c.at(3).get<std::int64_t>()});
    if (j.contains("gluing_permutation")) s.gluing = Permutation{j.at("gluing_permutation").get<std::vector<int>>()};
    const auto& ids = j.at("identifications");
    const auto& table = j.at("periodicity_table");
    if (ids.size() != table.size()) throw InvalidParameter("identification and periodicity lists differ in length");
    for (std::size_t e = 0; e < ids.size(); ++e) {
      const auto& id = ids[e];
      const auto& row = table[e];
      if (id.at("side") != row.at("side")) throw InvalidParameter("periodicity table out of order with identifications");
      PeriodRelation r{id.at("side").get<std::string>(), seg(id.at("segment_a")), pt(id.at("translation")),
                       row.at("a").get<std::vector<int>>(), row.at("b").get<std::vector<int>>()};
      if (!(r.target() == seg(id.at("segment_b"))))
        throw InvalidParameter("side " + r.side + ": translation does not map segment_a onto segment_b");
      s.relations.push_back(std::move(r));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter(std::string("malformed surface JSON: ") + e.what());
  }
}

}  // namespace drs
