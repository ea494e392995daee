#include <catch2/catch_amalgamated.hpp>

#include "bmv/laplace.hpp"
#include "bmv/sampling.hpp"

using namespace bmv;

namespace {

HermitianMatrix herm(int n, std::uint64_t seed, double scale = 1.0) {
  return sample_hermitian(n, seed, scale);
}

PositiveMatrix pd(int n, std::uint64_t seed, double cond = 20.0) {
  return sample_psd(n, seed, PsdSpec{cond, 1.0, true});
}

}  // namespace

TEST_CASE("cm_margins: completely monotone references stay nonnegative") {
  for (const CmGrid& g : default_cm_grids()) {
    auto values = tabulate([](double l) { return std::exp(-l); }, g);
    for (const CmOrderMargin& m : cm_margins(values, g, 8)) REQUIRE(m.worst_margin > 0.0);

    auto trace_values =
        tabulate([](double l) { return std::exp(-l) + std::exp(-2 * l); }, g);
    for (const CmOrderMargin& m : cm_margins(trace_values, g, 8))
      REQUIRE(m.worst_margin > 0.0);
  }
}

TEST_CASE("cm_margins: sin(lambda)+2 is caught") {
  CmGrid g{0.0, 0.2, 64};
  auto values = tabulate([](double l) { return std::sin(l) + 2.0; }, g);
  bool violated = false;
  for (const CmOrderMargin& m : cm_margins(values, g, 8))
    violated = violated || m.worst_margin < -1e-8 * std::max(m.scale, 1.0);
  REQUIRE(violated);
}

TEST_CASE("cm_margins: grid shape errors") {
  CmGrid g{0.0, 0.1, 4};
  std::vector<double> v(4, 1.0);
  REQUIRE_THROWS_AS(cm_margins(v, g, 5), DomainError);
  std::vector<double> wrong(3, 1.0);
  REQUIRE_THROWS_AS(cm_margins(wrong, g, 2), DomainError);
}

TEST_CASE("theorem4b: j=1 reduces to the trace of the exponential") {
  HermitianMatrix a = herm(3, 201);
  PositiveMatrix b = pd(3, 202);
  for (double lambda : {0.0, 0.7, 2.4}) {
    const double direct = matrix_exp(HermitianMatrix(MatC(a.mat() - lambda * b.mat())))
                              .mat()
                              .trace()
                              .real();
    REQUIRE(rel_gap(ej_exp_value(a, b, lambda, 1), direct) < 1e-11);
  }
  CmCheckOutcome out = theorem4b_check(a, b, 1);
  REQUIRE(out.pass);
  REQUIRE(out.cross_gap <= 1e-9);
}

TEST_CASE("theorem4b: j=n is the scalar exponential e^{Tr A - lambda Tr B}") {
  HermitianMatrix a = herm(3, 211);
  PositiveMatrix b = pd(3, 212);
  const double want = std::exp(a.mat().trace().real() - 0.9 * b.mat().trace().real());
  REQUIRE(rel_gap(ej_exp_value(a, b, 0.9, 3), want) < 1e-11);
  CmCheckOutcome out = theorem4b_check(a, b, 3);
  REQUIRE(out.pass);
  REQUIRE(out.worst_margin >= 0.0);
}

TEST_CASE("theorem4b: random 3x3 instances pass at j=2") {
  for (std::uint64_t t = 0; t < 5; ++t) {
    HermitianMatrix a = herm(3, derive_seed(221, 1, t));
    PositiveMatrix b = pd(3, derive_seed(221, 2, t));
    CmCheckOutcome out = theorem4b_check(a, b, 2);
    INFO("t=" << t << " worst margin " << out.worst_margin << " at order " << out.worst_order);
    REQUIRE(out.pass);
    REQUIRE(out.cross_gap <= 1e-9);
  }
}

TEST_CASE("simplex integral: scalar case k=1 gives b e^a") {
  MatC am(1, 1), bm(1, 1);
  am(0, 0) = 0.8;
  bm(0, 0) = 1.7;
  SimplexIntegralResult r =
      simplex_integral_ej(HermitianMatrix(am), PositiveMatrix(HermitianMatrix(bm)), 1, 1);
  const double want = 1.7 * std::exp(0.8);
  REQUIRE(rel_gap(r.value_blockexp, want) < 1e-12);
  // the k=1 integrand is constant under cyclicity, so MC is exact here
  REQUIRE(std::abs(r.value_mc - want) <= 4.0 * r.mc_stderr + 1e-11 * want);
}

TEST_CASE("simplex integral: A = 0 reduces to e_j(B^k)/k!") {
  MatC zero = MatC::Zero(2, 2);
  PositiveMatrix b = pd(2, 231);
  for (int k : {1, 2, 3})
    for (int j : {1, 2}) {
      SimplexIntegralResult r = simplex_integral_ej(HermitianMatrix(zero), b, k, j);
      MatC bk = mat_pow_generic(b.mat(), static_cast<long>(k));
      double fact = 1;
      for (int i = 2; i <= k; ++i) fact *= i;
      const double want = elem_sym_of_matrix(bk, j).real() / fact;
      INFO("k=" << k << " j=" << j);
      REQUIRE(rel_gap(r.value_blockexp, want, 1e-30) < 1e-11);
    }
}

TEST_CASE("simplex integral: dual paths agree and values are nonnegative") {
  for (std::uint64_t t = 0; t < 3; ++t) {
    HermitianMatrix a = herm(3, derive_seed(241, 1, t));
    PositiveMatrix b = pd(3, derive_seed(241, 2, t));
    SimplexIntegralResult r = simplex_integral_ej(a, b, 2, 2);
    REQUIRE(std::abs(r.value_blockexp - r.value_mc) <= 4.0 * std::max(r.mc_stderr, 1e-14));
    REQUIRE(r.value_blockexp >= -1e-8 * std::max(r.scale, 1.0));
  }
}

TEST_CASE("simplex integral: wedge cap enforced") {
  HermitianMatrix a = herm(8, 251);
  PositiveMatrix b = pd(8, 252);
  SimplexOptions opt;
  opt.wedge_cap = 64;
  REQUIRE_THROWS_AS(simplex_integral_ej(a, b, 3, 4, opt), DomainError);
}

TEST_CASE("k-th derivative of Tr exp(alpha - lambda beta) matches the simplex integral") {
  HermitianMatrix a = herm(3, 261, 0.8);
  PositiveMatrix b = pd(3, 262);
  const int j = 2;
  MatC alpha = wedge_sum_lift(a.mat(), j);
  MatC beta = compound(b.mat(), j);
  auto fn = [&](double l) {
    SpectralDecomposition sd = eig(HermitianMatrix(MatC(alpha - l * beta)));
    double tr = 0;
    for (Eigen::Index q = 0; q < sd.eigenvalues.size(); ++q) tr += std::exp(sd.eigenvalues(q));
    return tr;
  };
  double fact = 1;
  for (int k = 1; k <= 3; ++k) {
    fact *= k;
    SimplexIntegralResult s = simplex_integral_ej(a, b, k, j);
    FdResult fd = derivative_fd(fn, 0.0, k);
    const double want = ((k % 2) ? -1.0 : 1.0) * fact * s.value_blockexp;
    INFO("k=" << k << " fd=" << fd.value << " want=" << want);
    REQUIRE(std::abs(fd.value - want) <= 1e-6 * std::max(1.0, std::abs(want)) + 3 * fd.err);
  }
}

TEST_CASE("det identity: trivial and diagonal cases") {
  HermitianMatrix zero(MatC::Zero(2, 2));
  DetIdentityReport rep = det_identity_check(zero, zero, 0.7);
  REQUIRE(rep.lhs == Catch::Approx(1.0));
  REQUIRE(rep.gap < 1e-15);

  MatC da = MatC::Zero(2, 2), db = MatC::Zero(2, 2);
  da.diagonal() << 0.3, -1.1;
  db.diagonal() << 0.9, 0.4;
  rep = det_identity_check(HermitianMatrix(da), HermitianMatrix(db), -0.3);
  REQUIRE(rep.gap <= 1e-12);
}

TEST_CASE("det identity: random indefinite pairs, 50 instances") {
  for (std::uint64_t t = 0; t < 50; ++t) {
    HermitianMatrix a = herm(3 + static_cast<int>(t % 2), derive_seed(271, 1, t));
    HermitianMatrix b = herm(a.n(), derive_seed(271, 2, t));
    DetIdentityReport rep = det_identity_check(a, b, -0.3 + 0.02 * static_cast<double>(t));
    INFO("t=" << t << " gap=" << rep.gap);
    REQUIRE(rep.gap <= 1e-12);
  }
}

TEST_CASE("e2 difference: n=2 reduces to the determinant") {
  HermitianMatrix a = herm(2, 281);
  PositiveMatrix b = pd(2, 282);
  // e_2 of a 2x2 matrix is its determinant
  const double lambda = 0.6;
  MatC e = matrix_exp(HermitianMatrix(MatC(a.mat() - lambda * b.mat()))).mat();
  REQUIRE(rel_gap(ej_exp_value(a, b, lambda, 2), e.determinant().real()) < 1e-11);
  E2DifferenceOutcome out = e2_difference_check(a, b);
  REQUIRE(out.cm.pass);
  REQUIRE(out.identity_worst_gap <= 1e-10);
}

TEST_CASE("e2 difference: commuting diagonal case has positive margins") {
  MatC da = MatC::Zero(3, 3), db = MatC::Zero(3, 3);
  da.diagonal() << 0.5, -0.2, 1.0;
  db.diagonal() << 1.0, 0.5, 0.25;
  E2DifferenceOutcome out =
      e2_difference_check(HermitianMatrix(da), PositiveMatrix(HermitianMatrix(db)));
  REQUIRE(out.cm.pass);
  REQUIRE(out.cm.worst_margin >= 0.0);
}

TEST_CASE("e2 difference: random 4x4 instances") {
  for (std::uint64_t t = 0; t < 3; ++t) {
    HermitianMatrix a = herm(4, derive_seed(291, 1, t));
    PositiveMatrix b = pd(4, derive_seed(291, 2, t));
    E2DifferenceOutcome out = e2_difference_check(a, b);
    INFO("t=" << t << " worst margin " << out.cm.worst_margin);
    REQUIRE(out.cm.pass);
  }
}
