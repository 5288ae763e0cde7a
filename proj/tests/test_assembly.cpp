#include <gtest/gtest.h>

#include <sstream>

#include "drs/assembly.hpp"

using drs::Rational;

namespace {

std::vector<drs::Triplet> row_entries(const drs::LinearSystem& sys, std::int64_t row) {
  std::vector<drs::Triplet> out;
  for (const auto& t : sys.entries)
    if (t.row == row) out.push_back(t);
  return out;
}

}  // namespace

TEST(Assembly, HolomorphicityRowCoefficients) {
  const auto mesh = drs::QuadMesh::refine(drs::make_L(Rational(2)), 0);
  const auto sys = drs::assemble(mesh);
  const drs::Point p = mesh.square(0);
  const auto row = row_entries(sys, 0);
  ASSERT_EQ(row.size(), 4u);
  auto coeff = [&](drs::Point q) {
    for (const auto& t : row)
      if (t.col == mesh.index(q)) return t.value;
    return drs::cplx(99.0);
  };
  const drs::cplx I(0, 1);
  EXPECT_EQ(coeff({p.i + 1, p.j + 1}), I);
  EXPECT_EQ(coeff(p), -I);
  EXPECT_EQ(coeff({p.i, p.j + 1}), drs::cplx(-1.0));
  EXPECT_EQ(coeff({p.i + 1, p.j}), drs::cplx(1.0));
}

TEST(Assembly, HolomorphicFunctionSatisfiesEquations) {
  // Every holomorphicity row annihilates a linear function x = a z + b.
  const auto mesh = drs::QuadMesh::refine(drs::make_JS(3), 1);
  const auto sys = drs::assemble(mesh);
  std::vector<drs::cplx> x(static_cast<std::size_t>(sys.cols), 0.0);
  for (std::int64_t v = 0; v < mesh.vertex_count(); ++v) x[v] = drs::cplx(0.3, -1.2) * mesh.position(mesh.vertex(v)) + 0.7;
  std::vector<drs::cplx> r(static_cast<std::size_t>(sys.counts.holomorphicity), 0.0);
  for (const auto& t : sys.entries)
    if (t.row < sys.counts.holomorphicity) r[t.row] += t.value * x[t.col];
  for (const auto& v : r) EXPECT_LT(std::abs(v), 1e-12);
}

TEST(Assembly, EntriesSortedAndInRange) {
  const auto sys = drs::assemble(drs::QuadMesh::refine(drs::make_JS(2, Rational(3, 5), Rational(5, 7)), 1));
  for (std::size_t e = 1; e < sys.entries.size(); ++e) {
    const auto& a = sys.entries[e - 1];
    const auto& b = sys.entries[e];
    EXPECT_TRUE(a.row < b.row || (a.row == b.row && a.col < b.col));
  }
  for (const auto& t : sys.entries) {
    EXPECT_GE(t.col, 0);
    EXPECT_LT(t.col, sys.cols);
    EXPECT_LT(t.row, sys.rows);
  }
}

TEST(Assembly, ThreadCountDoesNotChangeOutput) {
  const auto mesh = drs::QuadMesh::refine(drs::make_JS(3), 3);
  const auto a = drs::assemble(mesh, 1, 1), b = drs::assemble(mesh, 1, 4);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t e = 0; e < a.entries.size(); ++e) {
    EXPECT_EQ(a.entries[e].row, b.entries[e].row);
    EXPECT_EQ(a.entries[e].col, b.entries[e].col);
    EXPECT_EQ(a.entries[e].value, b.entries[e].value);
  }
}

TEST(Assembly, CountsMatchClosedForms) {
  std::vector<drs::SurfaceSpec> specs = {drs::make_L(Rational(2)), drs::make_L(Rational(3, 2)), drs::make_L(Rational(15, 11))};
  for (int g = 2; g <= 6; ++g) specs.push_back(drs::make_JS(g));
  for (const auto& spec : specs)
    for (int n = 0; n <= 2; ++n) {
      const auto sys = drs::assemble(drs::QuadMesh::refine(spec, n));
      const auto cf = drs::closed_form_counts(spec, n);
      ASSERT_TRUE(cf.has_value());
      EXPECT_EQ(sys.cols, cf->variables) << spec.summary() << " n=" << n;
      EXPECT_EQ(sys.rows, cf->equations) << spec.summary() << " n=" << n;
      EXPECT_EQ(sys.rows, sys.counts.total());
    }
  EXPECT_FALSE(drs::closed_form_counts(drs::make_JS(2, Rational(3)), 0).has_value());
}

TEST(Assembly, SmallLCountsByHand) {
  // L(2), level 0: 12 squares, 21 distinct corners, 4 relations with 3+3+3+3 points, 6 normalization rows.
  const auto sys = drs::assemble(drs::QuadMesh::refine(drs::make_L(Rational(2)), 0));
  EXPECT_EQ(sys.cols, 21 + 8);
  EXPECT_EQ(sys.counts.holomorphicity, 12);
  EXPECT_EQ(sys.counts.periodicity, 12);
  EXPECT_EQ(sys.counts.normalization, 6);
}

TEST(Assembly, RightHandSides) {
  const auto sys = drs::assemble(drs::QuadMesh::refine(drs::make_JS(3), 0), 2);
  EXPECT_EQ(sys.rhs, sys.rhs_for(2));
  for (int k = 1; k <= 3; ++k) {
    const auto b = sys.rhs_for(k);
    int ones = 0;
    for (const auto& v : b) ones += v == drs::cplx(1.0);
    EXPECT_EQ(ones, 1);
  }
  EXPECT_THROW(sys.rhs_for(4), drs::InvalidParameter);
}

TEST(Assembly, MatrixMarketRoundTrip) {
  const auto sys = drs::assemble(drs::QuadMesh::refine(drs::make_L(Rational(3, 2)), 1));
  std::stringstream ss;
  drs::write_matrix_market(ss, sys.rows, sys.cols, sys.entries);
  const auto back = drs::read_matrix_market(ss);
  EXPECT_EQ(back.rows, sys.rows);
  EXPECT_EQ(back.cols, sys.cols);
  ASSERT_EQ(back.entries.size(), sys.entries.size());
  for (std::size_t e = 0; e < back.entries.size(); ++e) {
    EXPECT_EQ(back.entries[e].row, sys.entries[e].row);
    EXPECT_EQ(back.entries[e].col, sys.entries[e].col);
    EXPECT_EQ(back.entries[e].value, sys.entries[e].value);
  }
  std::stringstream bad("%%MatrixMarket matrix coordinate real general\n1 1 0\n");
  EXPECT_THROW(drs::read_matrix_market(bad), drs::InvalidParameter);
}
