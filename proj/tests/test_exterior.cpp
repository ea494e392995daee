#include <catch2/catch_amalgamated.hpp>

#include "bmv/exterior.hpp"
#include "bmv/sampling.hpp"

using namespace bmv;

namespace {

// independent oracle: e_j by explicit subset enumeration
double elem_sym_bruteforce(const std::vector<double>& vals, int j) {
  const int n = static_cast<int>(vals.size());
  double total = 0;
  for (const auto& subset : index_subsets(n, j)) {
    double prod = 1;
    for (int i : subset) prod *= vals[i];
    total += prod;
  }
  return total;
}

// independent oracle: e_j as the sum of principal j x j subdeterminants, exact
Rational elem_sym_minors_exact(const RatMat& m, int j) {
  Rational total = 0;
  for (const auto& subset : index_subsets(m.n(), j)) {
    RatMat sub(j);
    for (int r = 0; r < j; ++r)
      for (int c = 0; c < j; ++c) sub.at(r, c) = m.at(subset[r], subset[c]);
    total += rat_det(sub);
  }
  return total;
}

MatC diag3(double a, double b, double c) {
  MatC m = MatC::Zero(3, 3);
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return m;
}

}  // namespace

TEST_CASE("index_subsets: lexicographic order and count") {
  auto s = index_subsets(4, 2);
  REQUIRE(s.size() == 6);
  REQUIRE(s.front() == std::vector<int>{0, 1});
  REQUIRE(s.back() == std::vector<int>{2, 3});
}

TEST_CASE("compound: diagonal gives pairwise products") {
  MatC c = compound(diag3(1, 2, 3), 2);
  REQUIRE(c(0, 0).real() == Catch::Approx(2.0));   // {0,1}
  REQUIRE(c(1, 1).real() == Catch::Approx(3.0));   // {0,2}
  REQUIRE(c(2, 2).real() == Catch::Approx(6.0));   // {1,2}
  REQUIRE(c.norm() == Catch::Approx(std::sqrt(4.0 + 9 + 36)));
}

TEST_CASE("compound: j=1 is the matrix, j=n is the determinant") {
  HermitianMatrix h = sample_hermitian(3, 8);
  REQUIRE((compound(h.mat(), 1) - h.mat()).norm() == 0.0);
  MatC top = compound(h.mat(), 3);
  REQUIRE(top.rows() == 1);
  REQUIRE(std::abs(top(0, 0) - h.mat().determinant()) <
          1e-12 * std::max(1.0, std::abs(top(0, 0))));
}

TEST_CASE("compound: multiplicativity over >= 50 random pairs") {
  int checked = 0;
  for (std::uint64_t t = 0; t < 18; ++t) {
    const int n = 2 + static_cast<int>(t % 4);  // 2..5
    MatC m = sample_hermitian(n, derive_seed(21, 1, t)).mat();
    MatC w = sample_hermitian(n, derive_seed(21, 2, t)).mat();
    for (int j = 1; j <= n; ++j) {
      MatC lhs = compound(m * w, j);
      MatC rhs = compound(m, j) * compound(w, j);
      REQUIRE((lhs - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));
      ++checked;
    }
  }
  REQUIRE(checked >= 50);
}

TEST_CASE("compound: order out of range throws") {
  REQUIRE_THROWS_AS(compound(diag3(1, 2, 3), 4), DomainError);
  REQUIRE_THROWS_AS(compound(diag3(1, 2, 3), 0), DomainError);
}

TEST_CASE("elem_sym_from_eigs: known values") {
  std::vector<double> v{1, 2, 3};
  REQUIRE(elem_sym_from_eigs(v, 1) == Catch::Approx(6.0));
  REQUIRE(elem_sym_from_eigs(v, 2) == Catch::Approx(11.0));
  REQUIRE(elem_sym_from_eigs(v, 3) == Catch::Approx(6.0));
}

TEST_CASE("elem_sym_from_eigs: matches subset enumeration oracle") {
  Rng rng(2024);
  std::vector<double> vals(20);
  for (double& x : vals) x = rng.uniform(-2, 2);
  const double got = elem_sym_from_eigs(vals, 4);
  const double want = elem_sym_bruteforce(vals, 4);
  REQUIRE(rel_gap(got, want) < 1e-12);
}

TEST_CASE("elem_sym_of_matrix: diagonal and nilpotent cases") {
  REQUIRE(elem_sym_of_matrix(diag3(1, 2, 3), 2).real() == Catch::Approx(11.0));
  MatC nil = MatC::Zero(2, 2);
  nil(0, 1) = 1;
  REQUIRE(std::abs(elem_sym_of_matrix(nil, 1)) == 0.0);
  REQUIRE(std::abs(elem_sym_of_matrix(nil, 2)) == 0.0);
}

TEST_CASE("elem_sym_of_matrix: word product vs trace of compound") {
  for (std::uint64_t t = 0; t < 25; ++t) {
    MatC a = sample_hermitian(3, derive_seed(33, 1, t)).mat();
    MatC b = sample_hermitian(3, derive_seed(33, 2, t)).mat();
    MatC w = a * b * b * a * b;  // non-normal word product
    for (int j = 1; j <= 3; ++j) {
      cxd got = elem_sym_of_matrix(w, j);
      cxd want = compound(w, j).trace();
      REQUIRE(std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("elem_sym_of_matrix: exact lane vs principal-minor oracle") {
  for (std::uint64_t t = 0; t < 10; ++t) {
    RatMat a = sample_psd_rational(4, derive_seed(44, 1, t));
    RatMat b = sample_psd_rational(4, derive_seed(44, 2, t));
    RatMat w = a * b * a;
    for (int j = 1; j <= 4; ++j) REQUIRE(elem_sym_of_matrix(w, j) == elem_sym_minors_exact(w, j));
  }
}

TEST_CASE("trace of compound equals elementary symmetric of spectrum") {
  for (std::uint64_t t = 0; t < 20; ++t) {
    const int n = 3 + static_cast<int>(t % 2);
    HermitianMatrix h = sample_hermitian(n, derive_seed(55, 1, t));
    auto sd = eig(h);
    std::vector<double> eigs(sd.eigenvalues.data(), sd.eigenvalues.data() + n);
    for (int j = 1; j <= n; ++j) {
      const double want = elem_sym_from_eigs(eigs, j);
      const double got = compound(h.mat(), j).trace().real();
      REQUIRE(std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("e_1 is the trace and e_n is the determinant") {
  HermitianMatrix h = sample_hermitian(4, 606);
  REQUIRE(std::abs(elem_sym_of_matrix(h.mat(), 1) - h.mat().trace()) <=
          1e-10 * std::abs(h.mat().trace()));
  REQUIRE(std::abs(elem_sym_of_matrix(h.mat(), 4) - h.mat().determinant()) <=
          1e-10 * std::max(1.0, std::abs(h.mat().determinant())));
}

TEST_CASE("e_2 equals ((Tr M)^2 - Tr M^2)/2") {
  // exact on the rational lane
  RatMat m = sample_symmetric_rational(4, 17);
  Rational tr = trace(m), tr2 = trace(m * m);
  REQUIRE(elem_sym_of_matrix(m, 2) == (tr * tr - tr2) / 2);
  // float lane to near machine precision
  MatC f = sample_hermitian(4, 18).mat();
  cxd t1 = f.trace(), t2 = (f * f).trace();
  REQUIRE(std::abs(elem_sym_of_matrix(f, 2) - 0.5 * (t1 * t1 - t2)) < 1e-13);
}

TEST_CASE("wedge_sum_lift: diagonal case gives pair sums") {
  MatC l = wedge_sum_lift(diag3(1, 2, 3), 2);
  REQUIRE(l(0, 0).real() == Catch::Approx(3.0));  // {0,1}
  REQUIRE(l(1, 1).real() == Catch::Approx(4.0));  // {0,2}
  REQUIRE(l(2, 2).real() == Catch::Approx(5.0));  // {1,2}
  REQUIRE((l - MatC(l.diagonal().asDiagonal())).norm() == 0.0);
}

TEST_CASE("wedge_sum_lift: j=1 is the matrix itself") {
  HermitianMatrix h = sample_hermitian(4, 70);
  REQUIRE((wedge_sum_lift(h.mat(), 1) - h.mat()).norm() == 0.0);
}

TEST_CASE("wedge_sum_lift: exp identity exp(lift(A)) = compound(exp(A))") {
  int checked = 0;
  for (std::uint64_t t = 0; t < 10; ++t) {
    const int n = 3 + static_cast<int>(t % 3);  // 3..5
    HermitianMatrix a = sample_hermitian(n, derive_seed(88, 1, t));
    for (int j = 1; j <= std::min(3, n); ++j) {
      MatC lhs = matrix_exp(wedge_sum_lift(a, j)).mat();
      MatC rhs = compound(matrix_exp(a).mat(), j);
      REQUIRE((lhs - rhs).norm() <= 1e-9 * std::max(1.0, rhs.norm()));
      ++checked;
    }
  }
  REQUIRE(checked >= 20);
}

TEST_CASE("wedge_sum_lift: order out of range throws") {
  REQUIRE_THROWS_AS(wedge_sum_lift(diag3(1, 2, 3), 4), DomainError);
}
