#include <cmath>

#include "biogds/gdm.hpp"
#include "biogds/rng.hpp"
#include "biogds/scheme_hmm.hpp"
#include "biogds/scheme_p1.hpp"
#include "doctest.h"

using namespace biogds;

namespace {

const DomainSpec kUnitBox{-1.0, 1.0};

std::vector<double> random_field(const GradientDiscretisation& gd, Rng& rng, bool zero_lift) {
  std::vector<double> v(gd.n_total());
  for (int i = 0; i < gd.n_total(); ++i) v[i] = rng.uniform(-1.0, 1.0);
  if (zero_lift)
    for (int i = gd.n_interior(); i < gd.n_total(); ++i) v[i] = 0.0;
  return v;
}

}  // namespace

TEST_CASE("mass matrix of the constant field integrates the domain area") {
  Mesh mesh = generate_rect_mesh(kUnitBox, 3);
  for (bool hmm : {true, false}) {
    auto gd = hmm ? build_hmm(mesh) : build_p1(mesh);
    SparseMatrix m = assemble_mass(*gd);
    std::vector<double> ones = gd->interpolate([](const Point2&) { return 1.0; });
    CHECK(m.quad_form(ones) == doctest::Approx(4.0).epsilon(1e-13));
  }
}

TEST_CASE("p1 mass on the single-cell fan matches hand integration") {
  Mesh mesh = generate_rect_mesh(kUnitBox, 1);
  auto gd = build_p1(mesh);
  SparseMatrix m = assemble_mass(*gd);
  // 4 fan triangles of area 1. Corner hats span 2 triangles, the center hat 4.
  // Entries of the standard triangle mass: |T|/6 diagonal, |T|/12 off-diagonal.
  const int center = 0;  // only interior dof
  REQUIRE(gd->n_interior() == 1);
  CHECK(m.value_at(center, center) == doctest::Approx(4.0 / 6.0).epsilon(1e-13));
  // corner-center couple through 2 triangles
  for (int lift = gd->n_interior(); lift < gd->n_total(); ++lift)
    CHECK(m.value_at(center, lift) == doctest::Approx(2.0 / 12.0).epsilon(1e-13));
  // row sums integrate the hats: 4 * (|T|/3) for the center
  double row = m.value_at(center, center);
  for (int lift = gd->n_interior(); lift < gd->n_total(); ++lift)
    row += m.value_at(center, lift);
  CHECK(row == doctest::Approx(4.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("hmm mass is the diagonal of cell areas") {
  Mesh mesh = generate_hex_mesh(kUnitBox, 3);
  auto gd = build_hmm(mesh);
  SparseMatrix m = assemble_mass(*gd);
  for (int c = 0; c < mesh.n_cells(); ++c)
    CHECK(m.value_at(c, c) == doctest::Approx(mesh.cells()[c].area).epsilon(1e-13));
  double offdiag = 0.0;
  for (int r = 0; r < m.rows(); ++r)
    for (int k = m.row_ptr()[r]; k < m.row_ptr()[r + 1]; ++k)
      if (m.col_idx()[k] != r) offdiag = std::max(offdiag, std::abs(m.values()[k]));
  CHECK(offdiag <= 1e-15);
  // face rows carry no mass
  for (int d = mesh.n_cells(); d < m.rows(); ++d) CHECK(m.value_at(d, d) == 0.0);
}

TEST_CASE("gram identities: v'Mv = |Pi v|^2 and v'Kv = |grad v|^2 vs quadrature") {
  Mesh mesh = generate_hex_mesh(kUnitBox, 3);
  Rng rng(101);
  for (bool hmm : {true, false}) {
    auto gd = hmm ? build_hmm(mesh) : build_p1(mesh);
    SparseMatrix m = assemble_mass(*gd);
    SparseMatrix k = gradient_gram(*gd);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> v = random_field(*gd, rng, false);
      const double mq = m.quad_form(v);
      const double kq = k.quad_form(v);
      const double mn = l2_norm_value(*gd, v);
      const double kn = l2_norm_gradient(*gd, v);
      CHECK(mq == doctest::Approx(mn * mn).epsilon(1e-10));
      CHECK(kq == doctest::Approx(kn * kn).epsilon(1e-10));
    }
  }
}

TEST_CASE("diffusion matrix: symmetry, constants in kernel, linear scaling, positivity") {
  Mesh mesh = generate_rect_mesh(kUnitBox, 2);
  Rng rng(55);
  for (bool hmm : {true, false}) {
    auto gd = hmm ? build_hmm(mesh) : build_p1(mesh);
    SparseMatrix a1 = assemble_diffusion(*gd, isotropic_tensor(1.0));
    SparseMatrix a001 = assemble_diffusion(*gd, isotropic_tensor(0.01));
    CHECK(a1.max_asymmetry() <= 1e-12 * a1.max_abs());

    std::vector<double> ones(gd->n_total(), 1.0);
    std::vector<double> k1 = a1.multiply(ones);
    for (double v : k1) CHECK(std::abs(v) <= 1e-12);

    REQUIRE(a1.nnz() == a001.nnz());
    for (std::size_t i = 0; i < a1.nnz(); ++i)
      CHECK(a001.values()[i] == doctest::Approx(0.01 * a1.values()[i]).epsilon(1e-13));

    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> v = random_field(*gd, rng, true);
      CHECK(a1.quad_form(v) > 0.0);
    }
  }
}

TEST_CASE("non-symmetric diffusion coefficient is rejected") {
  Mesh mesh = generate_rect_mesh(kUnitBox, 2);
  auto gd = build_p1(mesh);
  TensorFn bad = [](const Point2&) { return std::array<double, 4>{1.0, 0.5, -0.5, 1.0}; };
  CHECK_THROWS_AS(assemble_diffusion(*gd, bad), std::invalid_argument);
}

TEST_CASE("coercivity constant on the 1-dof toy system") {
  SparseMatrix m = SparseMatrix::from_triplets(1, 1, {{0, 0, 2.0}});
  SparseMatrix k = SparseMatrix::from_triplets(1, 1, {{0, 0, 8.0}});
  CHECK(coercivity_constant(m, k) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("coercivity constant reports a singular gradient Gram") {
  SparseMatrix m = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, 2.0}});
  // rank-1 Gram: the inner solve faces an inconsistent right-hand side
  SparseMatrix k =
      SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}});
  CHECK_THROWS_AS(coercivity_constant(m, k), std::runtime_error);
}

TEST_CASE("coercivity constant is finite and positive for both schemes") {
  Mesh mesh = generate_rect_mesh(kUnitBox, 4);
  for (bool hmm : {true, false}) {
    auto gd = hmm ? build_hmm(mesh) : build_p1(mesh);
    auto ii = interior_ids(*gd);
    SparseMatrix m = assemble_mass(*gd).block(ii, ii);
    SparseMatrix k = gradient_gram(*gd).block(ii, ii);
    const double cd = coercivity_constant(m, k);
    CHECK(cd > 0.0);
    CHECK(cd < 10.0);
  }
}

TEST_CASE("consistency defect: zero and affine probes") {
  Mesh mesh = generate_hex_mesh(kUnitBox, 3);
  auto zero = [](const Point2&) { return 0.0; };
  auto zero_g = [](const Point2&) { return Point2{0.0, 0.0}; };
  auto affine = [](const Point2& p) { return 2.0 + 3.0 * p.x - 0.5 * p.y; };
  auto affine_g = [](const Point2&) { return Point2{3.0, -0.5}; };
  for (bool hmm : {true, false}) {
    auto gd = hmm ? build_hmm(mesh) : build_p1(mesh);
    CHECK(consistency_defect(*gd, zero, zero_g) <= 1e-14);
    if (!hmm) CHECK(consistency_defect(*gd, affine, affine_g) <= 1e-12);
  }
  // the HMM gradient is exact on affine interpolants even though Pi_D is not
  auto gd = build_hmm(mesh);
  CHECK(l2_error_gradient(*gd, gd->interpolate(affine), affine_g) <= 1e-12);
}

TEST_CASE("consistency defect of sin product decreases under refinement") {
  auto phi = [](const Point2& p) { return std::sin(M_PI * p.x) * std::sin(M_PI * p.y); };
  auto gphi = [](const Point2& p) {
    return Point2{M_PI * std::cos(M_PI * p.x) * std::sin(M_PI * p.y),
                  M_PI * std::sin(M_PI * p.x) * std::cos(M_PI * p.y)};
  };
  for (bool hmm : {true, false}) {
    Mesh coarse = generate_rect_mesh(kUnitBox, 4);
    Mesh fine = generate_rect_mesh(kUnitBox, 8);
    auto g1 = hmm ? build_hmm(coarse) : build_p1(coarse);
    auto g2 = hmm ? build_hmm(fine) : build_p1(fine);
    const double s1 = consistency_defect(*g1, phi, gphi);
    const double s2 = consistency_defect(*g2, phi, gphi);
    CHECK(s2 < s1);
    CHECK(s1 / s2 > 1.5);
  }
}

TEST_CASE("limit-conformity defect vanishes for p1 on random smooth probes") {
  Mesh mesh = generate_hex_mesh(kUnitBox, 3);
  auto gd = build_p1(mesh);
  auto ii = interior_ids(*gd);
  SparseMatrix k = gradient_gram(*gd).block(ii, ii);
  Rng rng(2024);
  for (int probe = 0; probe < 10; ++probe) {
    const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0),
                 c = rng.uniform(0.5, 2.0);
    VectorFn psi = [=](const Point2& p) {
      return Point2{a * std::sin(c * p.x) * p.y + b, b * std::exp(0.3 * p.x * p.y) - a * p.x};
    };
    CHECK(limit_conformity_defect(*gd, k, psi) <= 1e-10);
  }
}

TEST_CASE("limit-conformity defect of a constant field vanishes for hmm") {
  Mesh mesh = generate_hex_mesh(kUnitBox, 3);
  auto gd = build_hmm(mesh);
  auto ii = interior_ids(*gd);
  SparseMatrix k = gradient_gram(*gd).block(ii, ii);
  VectorFn psi = [](const Point2&) { return Point2{0.8, -1.7}; };
  CHECK(limit_conformity_defect(*gd, k, psi) <= 1e-10);
}

TEST_CASE("limit-conformity defect of hmm decreases under refinement") {
  VectorFn psi = [](const Point2& p) {
    return Point2{std::sin(M_PI * p.x) * std::cos(M_PI * p.y), std::exp(0.5 * (p.x + p.y))};
  };
  double w_prev = 0.0;
  int level = 0;
  for (int n : {4, 8}) {
    Mesh mesh = generate_rect_mesh(kUnitBox, n);
    auto gd = build_hmm(mesh);
    auto ii = interior_ids(*gd);
    SparseMatrix k = gradient_gram(*gd).block(ii, ii);
    const double w = limit_conformity_defect(*gd, k, psi);
    CHECK(w > 0.0);
    if (level > 0) CHECK(w_prev / w > 1.5);
    w_prev = w;
    ++level;
  }
}

TEST_CASE("canonical interpolant maps feasible functions into the discrete set") {
  Mesh mesh = generate_hex_mesh(kUnitBox, 3);
  const double chi = 0.3;
  auto phi = [&](const Point2& p) { return chi + 0.5 * (1.0 + std::sin(p.x + 2.0 * p.y)); };
  for (bool hmm : {true, false}) {
    auto gd = hmm ? build_hmm(mesh) : build_p1(mesh);
    gd->set_barrier([&](const Point2&) { return chi; });
    std::vector<double> w = gd->interpolate(phi);
    for (int i = 0; i < gd->n_interior(); ++i) {
      const double lo = gd->barrier_dof()[i];
      if (lo == kUnconstrained) continue;
      CHECK(w[i] >= lo - 1e-13);
    }
  }
}

TEST_CASE("interpolate_initial: constant barrier data sits exactly on the barrier") {
  Mesh mesh = generate_hex_mesh(kUnitBox, 2);
  auto gd = build_hmm(mesh);
  gd->set_barrier([](const Point2&) { return 0.3; });
  auto init = interpolate_initial(
      *gd, [](const Point2&) { return 0.3; }, [](const Point2&) { return 0.0; }, true, true);
  CHECK(init.p_feasible);
  CHECK(std::abs(init.min_slack) <= 1e-13);
  for (int c = 0; c < mesh.n_cells(); ++c) CHECK(init.p[c] == doctest::Approx(0.3).epsilon(1e-13));
}

TEST_CASE("interpolate_initial: indicator data gives in-cell volume fractions") {
  Mesh mesh = generate_hex_mesh(kUnitBox, 6);
  auto gd = build_hmm(mesh);
  auto ball = [](const Point2& p) { return (p.x * p.x + p.y * p.y < 0.09) ? 1.0 : 0.0; };
  auto init = interpolate_initial(*gd, ball, ball, false, false);
  Rng rng(77);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CHECK(init.p[c] >= -1e-14);
    CHECK(init.p[c] <= 1.0 + 1e-14);
    // dense-sampling oracle for the volume fraction
    const Cell& cell = mesh.cells()[c];
    double inside = 0.0, total = 0.0;
    for (const ReconTri& t : gd->recon()[c].tris) {
      std::vector<QuadPoint> pts;
      tri_quad_points_subdivided(tri_rule_deg5(), t.v0, t.v1, t.v2, 3, pts);
      for (const auto& q : pts) {
        total += q.w;
        inside += q.w * ball(q.x);
      }
    }
    (void)cell;
    CHECK(std::abs(init.p[c] - inside / total) <= 0.05);
  }
}

TEST_CASE("interpolate_initial: smooth data are cell means on the single-cell mesh") {
  Mesh mesh = generate_rect_mesh(kUnitBox, 1);
  auto gd = build_hmm(mesh);
  auto f = [](const Point2& p) { return std::exp(p.x + p.y); };
  auto init = interpolate_initial(*gd, f, f, true, true);
  const double exact_mean = std::pow(std::exp(1.0) - std::exp(-1.0), 2.0) / 4.0;
  // plain degree-5 quadrature on this one huge cell
  CHECK(init.q[0] == doctest::Approx(exact_mean).epsilon(1e-4));
  // the subdivided mean path is tighter
  std::vector<double> sub = gd->interpolate_mean(f, 3);
  CHECK(sub[0] == doctest::Approx(exact_mean).epsilon(1e-8));
}

TEST_CASE("consistency defect agrees with an independently coded quadrature loop") {
  Mesh mesh = generate_hex_mesh(kUnitBox, 3);
  auto phi = [](const Point2& p) { return std::exp(0.3 * p.x - 0.2 * p.y); };
  auto gphi = [](const Point2& p) {
    const double e = std::exp(0.3 * p.x - 0.2 * p.y);
    return Point2{0.3 * e, -0.2 * e};
  };
  for (bool hmm : {true, false}) {
    auto gd = hmm ? build_hmm(mesh) : build_p1(mesh);
    const double s = consistency_defect(*gd, phi, gphi);
    // same formula, separate code path: raw loops over the patches
    std::vector<double> w = gd->interpolate(phi);
    double v2 = 0.0, g2 = 0.0;
    for (const CellRecon& cr : gd->recon())
      for (const ReconTri& t : cr.tris) {
        std::vector<QuadPoint> pts;
        tri_quad_points(tri_rule_deg5(), t.v0, t.v1, t.v2, pts);
        const Point2 gr = t.gradient_of(w);
        for (const auto& q : pts) {
          const double dv = t.value_at(w, q.x) - phi(q.x);
          const Point2 dg = gr - gphi(q.x);
          v2 += q.w * dv * dv;
          g2 += q.w * dot(dg, dg);
        }
      }
    const double ref = std::sqrt(v2) + std::sqrt(g2);
    CHECK(s == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("min interpolant does not exceed the canonical defect") {
  Mesh mesh = generate_rect_mesh(kUnitBox, 4);
  auto phi = [](const Point2& p) { return std::sin(M_PI * p.x) * std::sin(M_PI * p.y); };
  auto gphi = [](const Point2& p) {
    return Point2{M_PI * std::cos(M_PI * p.x) * std::sin(M_PI * p.y),
                  M_PI * std::sin(M_PI * p.x) * std::cos(M_PI * p.y)};
  };
  for (bool hmm : {true, false}) {
    auto gd = hmm ? build_hmm(mesh) : build_p1(mesh);
    SparseMatrix m = assemble_mass(*gd);
    SparseMatrix k = gradient_gram(*gd);
    std::vector<double> w = min_interpolant(*gd, m, k, phi, gphi);
    const double s_min = consistency_defect_of(*gd, w, phi, gphi);
    const double s_can = consistency_defect(*gd, phi, gphi);
    CHECK(s_min <= s_can * 1.000001 + 1e-12);
  }
}
