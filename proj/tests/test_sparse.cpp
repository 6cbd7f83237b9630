#include <cmath>

#include "biogds/rng.hpp"
#include "biogds/sparse.hpp"
#include "doctest.h"

using namespace biogds;

TEST_CASE("triplet assembly sums duplicates and orders columns") {
  std::vector<Triplet> t = {{1, 0, 2.0}, {0, 1, 3.0}, {0, 1, -1.0}, {0, 0, 1.0}, {1, 1, 4.0}};
  SparseMatrix a = SparseMatrix::from_triplets(2, 2, t);
  CHECK(a.nnz() == 4);
  CHECK(a.value_at(0, 1) == 2.0);
  CHECK(a.value_at(0, 0) == 1.0);
  CHECK(a.value_at(1, 0) == 2.0);
  std::vector<double> y = a.multiply({1.0, 2.0});
  CHECK(y[0] == doctest::Approx(5.0));
  CHECK(y[1] == doctest::Approx(10.0));
}

TEST_CASE("cg solves an SPD system to tolerance") {
  // 1D Laplacian, n = 50
  const int n = 50;
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    t.push_back({i, i, 2.0});
    if (i > 0) t.push_back({i, i - 1, -1.0});
    if (i + 1 < n) t.push_back({i, i + 1, -1.0});
  }
  SparseMatrix a = SparseMatrix::from_triplets(n, n, t);
  Rng rng(7);
  std::vector<double> xref(n), b;
  for (double& v : xref) v = rng.uniform(-1.0, 1.0);
  b = a.multiply(xref);
  std::vector<double> x(n, 0.0);
  CgOptions opts;
  opts.tol = 1e-13;
  CgResult r = cg_solve(a, b, x, opts);
  CHECK(r.converged);
  for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(xref[i]).epsilon(1e-9));
}

TEST_CASE("cg with fixed mask solves the reduced system") {
  std::vector<Triplet> t = {{0, 0, 4.0}, {1, 1, 4.0}, {2, 2, 4.0},
                            {0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}};
  SparseMatrix a = SparseMatrix::from_triplets(3, 3, t);
  std::vector<char> fixed = {0, 1, 0};
  std::vector<double> x = {0.0, 2.0, 0.0};  // x1 pinned at 2
  std::vector<double> b = {1.0, 0.0, 1.0};
  CgResult r = cg_solve(a, b, x, {}, &fixed);
  CHECK(r.converged);
  CHECK(x[1] == 2.0);
  // free equations: 4 x0 + x1 = 1, 4 x2 + x1 = 1
  CHECK(x[0] == doctest::Approx(-0.25).epsilon(1e-10));
  CHECK(x[2] == doctest::Approx(-0.25).epsilon(1e-10));
}

TEST_CASE("dense cholesky matches cg") {
  const int n = 8;
  Rng rng(11);
  std::vector<double> m(n * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[i * n + j] = rng.uniform(-1.0, 1.0);
  // SPD via M^T M + I
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = (i == j) ? 1.0 : 0.0;
      for (int k = 0; k < n; ++k) s += m[k * n + i] * m[k * n + j];
      t.push_back({i, j, s});
    }
  SparseMatrix a = SparseMatrix::from_triplets(n, n, t);
  std::vector<double> b(n);
  for (double& v : b) v = rng.uniform(-1.0, 1.0);
  std::vector<double> xd = dense_solve_spd(a, b);
  std::vector<double> xc(n, 0.0);
  CgOptions opts;
  opts.tol = 1e-14;
  cg_solve(a, b, xc, opts);
  for (int i = 0; i < n; ++i) CHECK(xd[i] == doctest::Approx(xc[i]).epsilon(1e-8));
  CHECK(a.max_asymmetry() < 1e-12);
}
