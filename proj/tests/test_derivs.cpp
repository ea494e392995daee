#include <catch2/catch_amalgamated.hpp>

#include "bmv/derivs.hpp"
#include "bmv/words.hpp"

using namespace bmv;

namespace {

PositiveMatrix pd_instance(int n, std::uint64_t seed, double cond = 20.0) {
  return sample_psd(n, seed, PsdSpec{cond, 1.0, true});
}

PositiveMatrix pd_from_rational(const RatMat& m) {
  return PositiveMatrix(HermitianMatrix(m.to_complex()));
}

MatC diag_c(std::initializer_list<double> xs) {
  MatC m = MatC::Zero(xs.size(), xs.size());
  int i = 0;
  for (double x : xs) m(i, i) = x, ++i;
  return m;
}

}  // namespace

TEST_CASE("derivative_fd: polynomial and exponential references") {
  FdResult r2 = derivative_fd([](double x) { return x * x * x; }, 1.0, 2);
  REQUIRE(std::abs(r2.value - 6.0) < 1e-8);
  FdResult r5 = derivative_fd([](double x) { return std::exp(-x); }, 0.0, 5);
  REQUIRE(std::abs(r5.value - (-1.0)) < 1e-6);
  FdResult r0 = derivative_fd([](double x) { return 2 * x + 1; }, 3.0, 0);
  REQUIRE(r0.value == 7.0);
  REQUIRE_THROWS_AS(derivative_fd([](double) { return 0.0; }, 0.0, 9), DomainError);
}

TEST_CASE("f_p_value: identity pair and lambda=0") {
  PositiveMatrix id(HermitianMatrix(MatC::Identity(3, 3)));
  for (double lambda : {0.0, 0.4, 1.7})
    REQUIRE(rel_gap(f_p_value(id, id, lambda, 2.5), 3.0 * std::pow(1 + lambda, 2.5)) < 1e-12);

  PositiveMatrix a = pd_instance(3, 11), b = pd_instance(3, 12);
  const double at0 = f_p_value(a, b, 0.0, 3.0);
  REQUIRE(rel_gap(at0, (a.mat() * a.mat() * a.mat()).trace().real()) < 1e-10);
}

TEST_CASE("f_p_value: p=2 matches the explicit quadratic expansion") {
  PositiveMatrix a = pd_instance(3, 21), b = pd_instance(3, 22);
  const double l = 0.37;
  const double want = (a.mat() * a.mat()).trace().real() +
                      2 * l * (a.mat() * b.mat()).trace().real() +
                      l * l * (b.mat() * b.mat()).trace().real();
  REQUIRE(rel_gap(f_p_value(a, b, l, 2.0), want) < 1e-10);
}

TEST_CASE("f_p_value: monotone nondecreasing in lambda for p > 0") {
  PositiveMatrix a = pd_instance(3, 23), b = pd_instance(3, 24);
  for (double p : {0.5, 1.0, 2.7}) {
    double prev = f_p_value(a, b, 0.0, p);
    for (double l = 0.25; l <= 1.5; l += 0.25) {
      const double cur = f_p_value(a, b, l, p);
      REQUIRE(cur >= prev - 1e-10 * std::abs(cur));
      prev = cur;
    }
  }
}

TEST_CASE("exact_derivative_I1: base cases") {
  RatMat a = sample_psd_rational(3, 31), b = sample_psd_rational(3, 32);
  REQUIRE(exact_derivative_I1(a, b, 4, 0) == trace(rat_pow(a, 4)));
  REQUIRE(exact_derivative_I1(a, b, 1, 1) == Rational(2) * trace(a * b));
}

TEST_CASE("exact_derivative_I1: equals r! times the interpolation coefficient") {
  // I1(p, r) is the r-th derivative at 0 of Tr(A+lambda B)^{p+r}, hence
  // r! * c_r of that polynomial.
  RatMat a = sample_psd_rational(3, 41), b = sample_psd_rational(3, 42);
  const int p = 3, r = 2;
  auto table = coefficient_table_exact(a, b, p + r);
  REQUIRE(exact_derivative_I1(a, b, p, r) == Rational(2) * table.c[r]);
}

TEST_CASE("exact_derivative_I2: base cases") {
  RatMat a = sample_psd_rational(2, 51, 2, 1), b = sample_symmetric_rational(2, 52);
  RatMat c = rat_inverse(a);
  REQUIRE(exact_derivative_I2(a, b, 3, 0) == trace(rat_pow(c, 3)));
  Rational want = Rational(0) - trace((c * b) * c);
  REQUIRE(exact_derivative_I2(a, b, 1, 1) == want);
}

TEST_CASE("exact_derivative_I2: matches finite differences of Tr (a+lb)^{-p}") {
  RatMat ar = sample_psd_rational(3, 61, 2, 2), br = sample_symmetric_rational(3, 62, 1);
  const int p = 3, r = 2;
  const double exact = to_double(exact_derivative_I2(ar, br, p, r));
  MatC af = ar.to_complex(), bf = br.to_complex();
  Eigen::SelfAdjointEigenSolver<MatC> es(bf);
  const double rho = std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(2)));
  auto fn = [&](double l) {
    SpectralDecomposition sd = eig(HermitianMatrix(af + l * bf));
    double tot = 0;
    for (int i = 0; i < 3; ++i) tot += std::pow(sd.eigenvalues(i), -static_cast<double>(p));
    return tot;
  };
  SpectralDecomposition sa = eig(HermitianMatrix(af));
  FdOptions opt;
  opt.domain_radius = 0.9 * sa.eigenvalues(0) / rho;
  FdResult fd = derivative_fd(fn, 0.0, r, opt);
  REQUIRE(rel_gap(exact, fd.value) < 1e-6);
}

TEST_CASE("lemma1: frozen scalar case a=diag(1,2), b=I, p=2, r=1") {
  RatMat a(2), b(2);
  a.at(0, 0) = 1;
  a.at(1, 1) = 2;
  b.at(0, 0) = 1;
  b.at(1, 1) = 1;
  Lemma1Report exact = lemma1_check_exact(a, b, 2, 1);
  REQUIRE(exact.exact);
  REQUIRE(exact.lhs == -6.75);      // (p+r) I2 = 3 * (-9/4)
  REQUIRE(exact.rhs == -6.75);      // p (-1)^r I1 = -2 * 27/8
  REQUIRE(exact.raw_lhs == -2.25);  // I2
  REQUIRE(exact.raw_rhs == 3.375);  // I1

  PositiveMatrix af(HermitianMatrix(diag_c({1, 2})));
  HermitianMatrix bf(MatC::Identity(2, 2));
  Lemma1Report flt = lemma1_check(af, bf, 2.0, 1);
  REQUIRE(std::abs(flt.lhs - (-6.75)) < 1e-8);
  REQUIRE(flt.rel_gap < 1e-9);
}

TEST_CASE("lemma1: exact equality for p in 1..6, r in 1..3") {
  for (std::uint64_t t = 0; t < 5; ++t) {
    RatMat a = sample_psd_rational(3, derive_seed(71, 1, t), 2, 1);
    RatMat b = sample_symmetric_rational(3, derive_seed(71, 2, t), 2);
    for (int p = 1; p <= 6; ++p)
      for (int r = 1; r <= 3; ++r) {
        Lemma1Report rep = lemma1_check_exact(a, b, p, r);
        INFO("p=" << p << " r=" << r << " t=" << t);
        REQUIRE(rep.exact);
      }
  }
}

TEST_CASE("lemma1: float-lane identity at real p") {
  for (std::uint64_t t = 0; t < 5; ++t) {
    PositiveMatrix a = pd_instance(3, derive_seed(81, 1, t), 10.0);
    // keep b small so both stencils stay inside the PD cone
    HermitianMatrix b = sample_hermitian(3, derive_seed(81, 2, t), 0.25);
    for (double p : {-2.5, 0.7, 1.5, 4.2})
      for (int r = 1; r <= 3; ++r) {
        Lemma1Report rep = lemma1_check(a, b, p, r);
        INFO("p=" << p << " r=" << r << " t=" << t << " gap=" << rep.rel_gap);
        REQUIRE(rep.rel_gap <= 1e-6);
      }
  }
}

TEST_CASE("lemma1: degenerate p = -r is flagged") {
  PositiveMatrix a = pd_instance(2, 91, 5.0);
  HermitianMatrix b = sample_hermitian(2, 92, 0.2);
  Lemma1Report rep = lemma1_check(a, b, -2.0, 2);
  REQUIRE(rep.degenerate);
  // both sides vanish through the structural prefactors
  REQUIRE(std::abs(rep.lhs) < 1e-6 * std::max(1.0, std::abs(rep.raw_lhs)));
  REQUIRE(std::abs(rep.rhs) < 1e-12);
}

TEST_CASE("integral_rep_power: scalar identities") {
  PositiveMatrix one(HermitianMatrix(MatC::Identity(1, 1)));
  PositiveMatrix zero_b(HermitianMatrix(MatC::Zero(1, 1)));
  QuadResult q = integral_rep_power(one, zero_b, 0.3, 0.5);
  REQUIRE(std::abs(q.value - 1.0) < 1e-8);

  MatC two = MatC::Identity(1, 1) * 2.0;
  PositiveMatrix a2{HermitianMatrix(two)};
  QuadResult q2 = integral_rep_power(a2, zero_b, 0.0, 1.5);
  REQUIRE(std::abs(q2.value - std::pow(2.0, 1.5)) < 1e-8);
}

TEST_CASE("integral_rep_power: agrees with the spectral path") {
  for (std::uint64_t t = 0; t < 5; ++t) {
    PositiveMatrix a = pd_instance(3, derive_seed(101, 1, t));
    PositiveMatrix b = pd_instance(3, derive_seed(101, 2, t));
    for (double p : {0.5, 2.3, 3.7}) {
      QuadResult q = integral_rep_power(a, b, 0.7, p);
      const double spectral = f_p_value(a, b, 0.7, p);
      INFO("p=" << p << " t=" << t);
      REQUIRE(rel_gap(q.value, spectral) < 1e-7);
    }
  }
  REQUIRE_THROWS_AS(integral_rep_power(pd_instance(2, 1), pd_instance(2, 2), 0.0, 3.0),
                    DomainError);
}

TEST_CASE("resolvent_derivative: r=0 and r=1") {
  PositiveMatrix a = pd_instance(3, 111), b = pd_instance(3, 112);
  const double t = 0.8, l = 0.3;
  MatC base = a.mat() + l * b.mat() + t * MatC::Identity(3, 3);
  MatC resolvent = base.partialPivLu().inverse();
  REQUIRE((resolvent_derivative(a.mat(), b.mat(), t, l, 0) - resolvent).norm() < 1e-12);
  MatC d1 = resolvent_derivative(a.mat(), b.mat(), t, l, 1);
  REQUIRE((d1 - (-resolvent * b.mat() * resolvent)).norm() < 1e-12);
  REQUIRE(d1.trace().real() <= 0.0);
}

TEST_CASE("resolvent_derivative: matches entrywise finite differences, r! included") {
  PositiveMatrix a = pd_instance(3, 121), b = pd_instance(3, 122);
  const double t = 1.1, l = 0.4;
  const int n = 3;
  for (int r : {2, 3}) {
    MatC formula = resolvent_derivative(a.mat(), b.mat(), t, l, r);
    MatC bare = resolvent_derivative(a.mat(), b.mat(), t, l, r, false);
    double fact = 1;
    for (int i = 2; i <= r; ++i) fact *= i;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        auto fre = [&](double x) {
          MatC base = a.mat() + x * b.mat() + t * MatC::Identity(n, n);
          return base.partialPivLu().inverse()(i, j).real();
        };
        auto fim = [&](double x) {
          MatC base = a.mat() + x * b.mat() + t * MatC::Identity(n, n);
          return base.partialPivLu().inverse()(i, j).imag();
        };
        const cxd fd(derivative_fd(fre, l, r).value, derivative_fd(fim, l, r).value);
        REQUIRE(std::abs(fd - formula(i, j)) < 1e-6 * std::max(1.0, std::abs(fd)));
        // the r!-free variant misses by exactly the factorial
        REQUIRE(std::abs(fd - fact * bare(i, j)) < 1e-6 * std::max(1.0, std::abs(fd)));
      }
  }
}

TEST_CASE("resolvent_derivative: alternating trace positivity up to r=5") {
  PositiveMatrix a = pd_instance(3, 131), b = pd_instance(3, 132);
  for (int r = 0; r <= 5; ++r) {
    MatC d = resolvent_derivative(a.mat(), b.mat(), 0.6, 0.2, r);
    const double signed_trace = ((r % 2) ? -1.0 : 1.0) * d.trace().real();
    REQUIRE(signed_trace >= -1e-12 * std::abs(d.trace().real()));
  }
}

TEST_CASE("binomial splitting: only the top term survives r >= ceil(p) derivatives") {
  PositiveMatrix a = pd_instance(2, 141), b = pd_instance(2, 142);
  const int q = 2;  // ceil(p) for p in (1,2)
  for (double t : {0.5, 2.0}) {
    auto lhs_fn = [&](double l) {
      MatC m = a.mat() + l * b.mat();
      MatC base = m + t * MatC::Identity(2, 2);
      return base.partialPivLu().solve(mat_pow_generic(m, q)).trace().real();
    };
    auto rhs_fn = [&](double l) {
      MatC base = a.mat() + l * b.mat() + t * MatC::Identity(2, 2);
      return ipow(-t, q) * base.partialPivLu().inverse().trace().real();
    };
    for (int r : {2, 3}) {
      FdResult lhs = derivative_fd(lhs_fn, 0.3, r);
      FdResult rhs = derivative_fd(rhs_fn, 0.3, r);
      REQUIRE(std::abs(lhs.value - rhs.value) <=
              1e-6 * std::max({1.0, std::abs(lhs.value), std::abs(rhs.value)}));
    }
  }
}

TEST_CASE("theorem2_suite: scalar case p=2.5 has signs +,+,+,-") {
  PositiveMatrix one(HermitianMatrix(MatC::Identity(1, 1)));
  DerivativeTable table = theorem2_suite(one, one, 2.5, 4, {0.3});
  REQUIRE(table.rows.size() == 4);
  for (const DerivRow& row : table.rows) {
    REQUIRE(row.pass);
    REQUIRE(row.margin >= 0.0);
    if (row.r <= 3) {
      REQUIRE(row.cls == 'a');
      REQUIRE(row.value > 0.0);
    } else {
      REQUIRE(row.cls == 'b');
      REQUIRE(row.value < 0.0);  // F'''' of (1+l)^{2.5} is negative
    }
  }
}

TEST_CASE("theorem2_suite: integer p has vanishing high derivatives") {
  PositiveMatrix a = pd_instance(2, 151), b = pd_instance(2, 152);
  DerivativeTable table = theorem2_suite(a, b, 3.0, 6, {0.0, 1.0});
  for (const DerivRow& row : table.rows) {
    REQUIRE(row.pass);
    if (row.r > 3) REQUIRE(std::abs(row.value) <= 1e-8 * std::max(row.scale, 1.0));
  }
}

TEST_CASE("theorem2_suite: alternating signs for p = -1.2") {
  PositiveMatrix a = pd_instance(3, 161, 5.0), b = pd_instance(3, 162, 5.0);
  DerivativeTable table = theorem2_suite(a, b, -1.2, 3, {0.0, 0.5, 1.0});
  for (const DerivRow& row : table.rows) {
    REQUIRE(row.cls == 'c');
    REQUIRE(row.pass);
    // genuinely alternating: the signed value is strictly positive here
    REQUIRE(row.margin > 0.0);
  }
}

TEST_CASE("theorem2_suite: integral-representation cross-check engages for fractional p") {
  PositiveMatrix a = pd_instance(2, 171), b = pd_instance(2, 172);
  Theorem2Options opt;
  opt.cross_check = true;
  opt.cross_check_lambdas = {0.0, 1.0};
  REQUIRE_NOTHROW(theorem2_suite(a, b, 1.3, 4, {0.0, 0.5, 1.0}, opt));
}

TEST_CASE("cross-path: float FD of integer-p derivatives matches the exact sums") {
  RatMat ar = sample_psd_rational(3, 181), br = sample_psd_rational(3, 182);
  const int p = 3, r = 2;
  const double exact = to_double(exact_derivative_I1(ar, br, p, r));
  MatC af = ar.to_complex(), bf = br.to_complex();
  auto fn = [&](double l) {
    MatC m = af + l * bf;
    return mat_pow_generic(m, static_cast<long>(p + r)).trace().real();
  };
  FdResult fd = derivative_fd(fn, 0.0, r);
  REQUIRE(rel_gap(exact, fd.value) < 1e-6);
}
