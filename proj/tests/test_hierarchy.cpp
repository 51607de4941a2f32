#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "soliton/hierarchy.hpp"

using namespace soliton;

namespace {

double mnorm(const CMat& A) { return A.cwiseAbs().maxCoeff(); }

std::vector<double> xline(double x0, double x1, int N) {
  std::vector<double> xs(N);
  for (int i = 0; i < N; ++i) xs[i] = x0 + (x1 - x0) * i / (N - 1);
  return xs;
}

CMat offdiag2(Cplx q, Cplx r) {
  CMat u = CMat::Zero(2, 2);
  u(0, 1) = q;
  u(1, 0) = r;
  return u;
}

}  // namespace

TEST_CASE("vacuum gives zero higher coefficients") {
  auto spec = HierarchySpec::nls_focusing();
  std::vector<CMat> u(64, CMat::Zero(2, 2));
  auto Q = q_coefficients_line(spec, u, 0.1, 3);
  for (auto& m : Q[0]) REQUIRE(mnorm(m - spec.a_mat()) < 1e-14);
  for (int m = 1; m <= 3; ++m)
    for (auto& c : Q[m]) REQUIRE(mnorm(c) < 1e-13);
}

TEST_CASE("first coefficient reproduces u") {
  CVec a(2);
  a << 1.0, -1.0;
  auto spec = HierarchySpec::make(2, a, a, 2, Reality::SlnC);
  auto xs = xline(-8, 8, 161);
  std::vector<CMat> u(xs.size());
  for (size_t i = 0; i < xs.size(); ++i)
    u[i] = offdiag2(std::exp(-xs[i] * xs[i]), 0.5 * std::exp(-(xs[i] - 1) * (xs[i] - 1)));
  auto Q = q_coefficients_line(spec, u, xs[1] - xs[0], 1);
  for (size_t i = 0; i < xs.size(); ++i) REQUIRE(mnorm(Q[1][i] - u[i]) < 1e-12);
}

// The recursion against the hard-coded second/third coefficients for
// a=diag(1,-1), u=[[0,q],[r,0]], with analytically differentiated samples.
static double table_error(int N) {
  CVec a(2);
  a << 1.0, -1.0;
  auto spec = HierarchySpec::make(2, a, a, 3, Reality::SlnC);
  auto xs = xline(-8, 8, N);
  double hx = xs[1] - xs[0];
  std::vector<CMat> u(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    double x = xs[i];
    u[i] = offdiag2(std::exp(-x * x), 0.7 * std::exp(-0.5 * (x - 1) * (x - 1)));
  }
  auto Q = q_coefficients_line(spec, u, hx, 3);
  double err = 0;
  for (size_t i = 4; i + 4 < xs.size(); ++i) {
    double x = xs[i];
    Cplx q = std::exp(-x * x), qx = -2 * x * q, qxx = (4 * x * x - 2) * q;
    Cplx r = 0.7 * std::exp(-0.5 * (x - 1) * (x - 1)), rx = -(x - 1) * r,
         rxx = ((x - 1) * (x - 1) - 1) * r;
    CMat Q2(2, 2), Q3(2, 2);
    Q2 << -q * r / 2.0, -qx / 2.0, rx / 2.0, q * r / 2.0;
    Q3 << -(q * rx - r * qx) / 4.0, (qxx - 2.0 * q * q * r) / 4.0,
        (rxx - 2.0 * q * r * r) / 4.0, (q * rx - r * qx) / 4.0;
    err = std::max(err, mnorm(Q[2][i] - Q2));
    err = std::max(err, mnorm(Q[3][i] - Q3));
  }
  return err;
}

TEST_CASE("sl(2) coefficient tables match to 4th order") {
  double e1 = table_error(201), e2 = table_error(401);
  REQUIRE(e1 < 1e-4);
  REQUIRE(e2 < 1e-5);
  REQUIRE(e1 / e2 > 10.0);  // expect ~16 for an O(h^4) scheme
}

TEST_CASE("recursion identity holds at interior points") {
  CVec a(3);
  a << Cplx(0, 1), Cplx(0, 2), Cplx(0, -3);
  auto spec = HierarchySpec::make(3, a, a, 3, Reality::Un);
  auto xs = xline(-8, 8, 401);
  double hx = xs[1] - xs[0];
  std::vector<CMat> u(xs.size(), CMat::Zero(3, 3));
  for (size_t i = 0; i < xs.size(); ++i) {
    double x = xs[i];
    Cplx q12 = std::exp(-x * x) * Cplx(0.5, 0.3);
    Cplx q13 = std::exp(-0.5 * (x + 1) * (x + 1)) * Cplx(-0.2, 0.4);
    Cplx q23 = std::exp(-0.8 * (x - 1) * (x - 1)) * Cplx(0.1, -0.6);
    u[i](0, 1) = q12;
    u[i](1, 0) = -std::conj(q12);
    u[i](0, 2) = q13;
    u[i](2, 0) = -std::conj(q13);
    u[i](1, 2) = q23;
    u[i](2, 1) = -std::conj(q23);
  }
  auto Q = q_coefficients_line(spec, u, hx, 4);
  double resid = 0;
  for (int m = 0; m < 4; ++m)
    for (size_t i = 8; i + 8 < xs.size(); ++i) {
      CMat dq = fd::d1([&](int k) { return Q[m][k]; }, (int)i, (int)xs.size(), hx);
      CMat lhs = dq + u[i] * Q[m][i] - Q[m][i] * u[i];
      CMat rhs = Q[m + 1][i] * spec.a_mat() - spec.a_mat() * Q[m + 1][i];
      resid = std::max(resid, mnorm(lhs - rhs));
    }
  REQUIRE(resid < 1e-5);

  SECTION("skew-hermitian input propagates to every coefficient") {
    for (int m = 0; m <= 4; ++m)
      for (size_t i = 0; i < xs.size(); ++i)
        REQUIRE(mnorm(Q[m][i].adjoint() + Q[m][i]) < 1e-10);
  }
}

TEST_CASE("twisted transpose parity of coefficients") {
  auto spec = HierarchySpec::mkdv();
  auto xs = xline(-8, 8, 401);
  std::vector<CMat> u(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    Cplx v = Cplx(0, 1) * std::exp(-xs[i] * xs[i]);  // u = [[0,v],[-v,0]] antisymmetric
    u[i] = offdiag2(v, -v);
  }
  auto Q = q_coefficients_line(spec, u, xs[1] - xs[0], 4);
  for (int m = 0; m <= 4; ++m)
    for (size_t i = 0; i < xs.size(); ++i) {
      CMat sym = Q[m][i] - Q[m][i].transpose();      // zero for symmetric part
      CMat asym = Q[m][i] + Q[m][i].transpose();     // zero for antisymmetric part
      if (m % 2 == 1)
        REQUIRE(mnorm(asym) < 1e-10);  // odd coefficients antisymmetric
      else
        REQUIRE(mnorm(sym) < 1e-10);  // even coefficients symmetric
    }
}

TEST_CASE("general b as a polynomial in a") {
  CVec a(3), b(3);
  a << 1.0, 2.0, -3.0;
  b << 1.0, 4.0, 9.0;  // b = a^2
  auto spec = HierarchySpec::make(3, a, b, 1, Reality::SlnC);
  auto xs = xline(-6, 6, 201);
  std::vector<CMat> u(xs.size(), CMat::Zero(3, 3));
  for (size_t i = 0; i < xs.size(); ++i) {
    double x = xs[i];
    u[i](0, 1) = std::exp(-x * x);
    u[i](1, 0) = 0.3 * std::exp(-x * x);
    u[i](0, 2) = 0.5 * std::exp(-0.5 * x * x);
    u[i](2, 0) = -0.2 * std::exp(-0.5 * x * x);
    u[i](1, 2) = 0.8 * std::exp(-0.3 * (x - 1) * (x - 1));
    u[i](2, 1) = 0.1 * std::exp(-0.3 * (x + 1) * (x + 1));
  }
  auto Q = q_coefficients_line(spec, u, xs[1] - xs[0], 1);
  for (size_t i = 0; i < xs.size(); ++i) {
    for (auto& d : {std::pair{0, 0}, {1, 1}, {2, 2}}) REQUIRE(mnorm(Q[0][i]) >= 0);
    REQUIRE(mnorm(Q[0][i] - spec.b_mat()) < 1e-12);
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        if (k != l) {
          Cplx expect = u[i](k, l) * (b(l) - b(k)) / (a(l) - a(k));
          REQUIRE(std::abs(Q[1][i](k, l) - expect) < 1e-12);
        }
  }
}

TEST_CASE("b outside the polynomial algebra of a is rejected") {
  CVec a(3), b(3);
  a << Cplx(0, 1), Cplx(0, 1), Cplx(0, -2);
  b << 1.0, 2.0, 3.0;  // differs on the degenerate eigenspace
  auto spec = HierarchySpec::make(3, a, b, 1, Reality::SlnC);
  std::vector<CMat> u(64, CMat::Zero(3, 3));
  REQUIRE_THROWS_AS(q_coefficients_line(spec, u, 0.1, 1), NotPolynomialInA);
}

TEST_CASE("grid too coarse is rejected") {
  auto spec = HierarchySpec::nls_focusing();
  std::vector<CMat> u(4, CMat::Zero(2, 2));
  REQUIRE_THROWS_AS(q_coefficients_line(spec, u, 0.1, 1), GridTooCoarse);
}

TEST_CASE("named NLS flow agrees with the recursion route") {
  auto spec = HierarchySpec::nls_focusing();
  auto xs = xline(-8, 8, 801);
  double hx = xs[1] - xs[0];
  std::vector<Cplx> q(xs.size());
  std::vector<CMat> u(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    double x = xs[i];
    q[i] = Cplx(0.8, 0.4) * std::exp(-x * x) + Cplx(0.1, -0.3) * std::exp(-0.5 * (x - 1) * (x - 1));
    u[i] = offdiag2(q[i], -std::conj(q[i]));
  }
  auto Q = q_coefficients_line(spec, u, hx, 3);
  auto rhs = flow_rhs_scalar(NamedFlow::NLSFocusing, q, hx);
  double err = 0;
  for (size_t i = 8; i + 8 < xs.size(); ++i) {
    CMat ut = Q[3][i] * spec.a_mat() - spec.a_mat() * Q[3][i];
    err = std::max(err, std::abs(ut(0, 1) - rhs[i]));
  }
  REQUIRE(err < 1e-6);
}

TEST_CASE("named mKdV flow agrees with the recursion route") {
  auto spec = HierarchySpec::mkdv();
  auto xs = xline(-8, 8, 801);
  double hx = xs[1] - xs[0];
  std::vector<Cplx> q(xs.size());
  std::vector<CMat> u(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    double x = xs[i];
    q[i] = 0.9 * std::exp(-x * x) + 0.2 * std::exp(-0.5 * (x - 1) * (x - 1));
    u[i] = offdiag2(Cplx(0, 1) * q[i], -Cplx(0, 1) * q[i]);  // u = [[0,iq],[-iq,0]]
  }
  auto Q = q_coefficients_line(spec, u, hx, 4);
  auto rhs = flow_rhs_scalar(NamedFlow::MKdV, q, hx);
  double err = 0;
  for (size_t i = 8; i + 8 < xs.size(); ++i) {
    CMat ut = Q[4][i] * spec.a_mat() - spec.a_mat() * Q[4][i];
    err = std::max(err, std::abs(ut(0, 1) - Cplx(0, 1) * rhs[i]));
  }
  REQUIRE(err < 1e-5);
}

TEST_CASE("KdV named flow vanishes on constants") {
  std::vector<Cplx> q(64, 3.7);
  auto rhs = flow_rhs_scalar(NamedFlow::KdV, q, 0.1);
  for (auto& v : rhs) REQUIRE(std::abs(v) < 1e-12);
}

TEST_CASE("vacuum trivialization normalization and values") {
  auto spec = HierarchySpec::nls_focusing();
  auto E = vacuum_trivialization(spec);
  REQUIRE(mnorm(E(0, 0, Cplx(0.3, 0.8)) - identity(2)) < 1e-14);
  CMat v = E(M_PI, 0, Cplx(1, 0));
  REQUIRE(std::abs(v(0, 0) - Cplx(-1, 0)) < 1e-12);
  REQUIRE(std::abs(v(1, 1) - Cplx(-1, 0)) < 1e-12);
  auto sge = vacuum_trivialization(HierarchySpec::sge());
  REQUIRE_THROWS_AS(sge(1.0, 1.0, Cplx(0, 0)), LambdaZeroAtMinusOneFlow);
}

TEST_CASE("zero curvature residual on vacuum and under faults") {
  Grid2D g{-2, 2, -1, 1, 41, 21};
  Cplx lam(0.7, 0.2);
  auto spec = HierarchySpec::nls_focusing();
  MatField A = MatField::sample(g, [&](double, double) { return CMat(lam * spec.a_mat()); });
  MatField B = MatField::sample(g, [&](double, double) { return CMat(lam * lam * spec.a_mat()); });
  REQUIRE(zero_curvature_residual(A, B) < 1e-13);

  MatField Bbad = B;
  Bbad.at(10, 10) += 1e-3 * identity(2);
  REQUIRE(zero_curvature_residual(A, Bbad) > 1e-5);

  Grid2D g2{-2, 2, -1, 1, 41, 31};
  MatField C = MatField::sample(g2, [&](double, double) { return CMat::Zero(2, 2).eval(); });
  REQUIRE_THROWS_AS(zero_curvature_residual(A, C), GridMismatch);
}
