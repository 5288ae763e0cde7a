#include <gtest/gtest.h>

#include <set>

#include "drs/mesh.hpp"

using drs::Rational;

namespace {

std::vector<drs::SurfaceSpec> sample_specs() {
  return {drs::make_L(Rational(2)), drs::make_L(Rational(3, 2)), drs::make_JS(2), drs::make_JS(3),
          drs::make_JS(2, Rational(3, 5), Rational(5, 7))};
}

}  // namespace

TEST(Mesh, ColorsAlternate) {
  EXPECT_EQ(drs::vertex_color(0, 0), drs::Color::black);
  EXPECT_EQ(drs::vertex_color(1, 0), drs::Color::white);
  EXPECT_EQ(drs::vertex_color(-1, -1), drs::Color::black);
  EXPECT_EQ(drs::vertex_color(-3, 0), drs::Color::white);
}

TEST(Mesh, Pow3) {
  EXPECT_EQ(drs::pow3(0), 1);
  EXPECT_EQ(drs::pow3(4), 81);
  EXPECT_THROW(drs::pow3(60), drs::ResourceLimit);
}

TEST(Mesh, CountsMatchBruteForce) {
  for (const auto& spec : sample_specs())
    for (int n = 0; n <= 2; ++n) {
      const auto mesh = drs::QuadMesh::refine(spec, n);
      std::set<std::pair<std::int64_t, std::int64_t>> corners;
      std::int64_t squares = 0;
      for (const auto& c : mesh.cells())
        for (std::int64_t x = c.x0; x < c.x0 + c.width; ++x)
          for (std::int64_t y = c.y0; y < c.y0 + c.height; ++y) {
            ++squares;
            for (int a = 0; a < 2; ++a)
              for (int b = 0; b < 2; ++b) corners.insert({x + a, y + b});
          }
      EXPECT_EQ(mesh.square_count(), squares);
      EXPECT_EQ(mesh.vertex_count(), static_cast<std::int64_t>(corners.size()));
      EXPECT_EQ(mesh.square_count(), spec.square_count() * drs::pow3(n) * drs::pow3(n));
    }
}

TEST(Mesh, IndexIsBijective) {
  const auto mesh = drs::QuadMesh::refine(drs::make_JS(3), 2);
  for (std::int64_t v = 0; v < mesh.vertex_count(); ++v) EXPECT_EQ(mesh.index(mesh.vertex(v)), v);
  EXPECT_THROW(mesh.index({-1, 0}), drs::InternalError);
}

TEST(Mesh, SquaresVisitedInOrder) {
  const auto mesh = drs::QuadMesh::refine(drs::make_L(Rational(2)), 1);
  std::int64_t expect = 0;
  mesh.for_each_square(0, mesh.square_count(), [&](std::int64_t s, drs::Point p) {
    EXPECT_EQ(s, expect++);
    EXPECT_EQ(mesh.square(s), p);
  });
  EXPECT_EQ(expect, mesh.square_count());
}

TEST(Mesh, RefinementNests) {
  // Every vertex of level n, scaled by 3, is a vertex of level n+1 at the same position.
  for (const auto& spec : sample_specs())
    for (int n = 0; n <= 2; ++n) {
      const auto coarse = drs::QuadMesh::refine(spec, n), fine = drs::QuadMesh::refine(spec, n + 1);
      for (std::int64_t v = 0; v < coarse.vertex_count(); ++v) {
        const drs::Point p = coarse.vertex(v), q{3 * p.i, 3 * p.j};
        ASSERT_TRUE(fine.contains(q));
        EXPECT_NEAR(std::abs(fine.position(q) - coarse.position(p)), 0.0, 1e-12);
        EXPECT_EQ(drs::vertex_color(p.i, p.j), drs::vertex_color(q.i, q.j));
      }
    }
}

TEST(Mesh, GeometryIndependentOfLevel) {
  const auto spec = drs::make_L(Rational(3, 2));
  for (int n = 0; n <= 3; ++n) {
    const auto mesh = drs::QuadMesh::refine(spec, n);
    const double side = mesh.base_step().to_double();
    EXPECT_NEAR(mesh.square_count() * side * side, 1.5 * 1.5 - 0.5 * 0.5, 1e-12);
  }
}

TEST(Mesh, JsonExport) {
  const auto mesh = drs::QuadMesh::refine(drs::make_JS(2), 1);
  const auto j = mesh.to_json();
  EXPECT_EQ(j.at("schema"), "drs-mesh/1");
  EXPECT_EQ(j.at("vertices").size(), static_cast<std::size_t>(mesh.vertex_count()));
  EXPECT_EQ(j.at("squares").size(), static_cast<std::size_t>(mesh.square_count()));
}

TEST(Mesh, RejectsColorBreakingIdentification) {
  auto spec = drs::make_L(Rational(2));
  spec.relations[0].shift.i += 1;
  EXPECT_THROW(drs::QuadMesh::refine(spec, 0), drs::InvalidParameter);
}

TEST(Mesh, RejectsNegativeLevel) { EXPECT_THROW(drs::QuadMesh::refine(drs::make_JS(2), -1), drs::InvalidParameter); }
