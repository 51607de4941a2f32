#pragma once
// Hierarchy specifications, the Q-coefficient recursion (off-diagonal parts
// from ad(a)^{-1}, centralizer parts from the minimal-polynomial identity),
// named flow right-hand sides, vacuum trivializations, zero-curvature.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "soliton/grid.hpp"
#include "soliton/linalg.hpp"

namespace soliton {

enum class Reality { SlnC, Un, UkJ, TwistedTranspose, KdV, KW, GD };

struct NotPolynomialInA : std::runtime_error {
  explicit NotPolynomialInA(const std::string& m) : std::runtime_error(m) {}
};
struct GridTooCoarse : std::runtime_error {
  explicit GridTooCoarse(const std::string& m) : std::runtime_error(m) {}
};
struct UnknownFlow : std::runtime_error {
  explicit UnknownFlow(const std::string& m) : std::runtime_error(m) {}
};
struct LambdaZeroAtMinusOneFlow : std::runtime_error {
  explicit LambdaZeroAtMinusOneFlow(const std::string& m) : std::runtime_error(m) {}
};
struct GridMismatch : std::runtime_error {
  explicit GridMismatch(const std::string& m) : std::runtime_error(m) {}
};

struct HierarchySpec {
  int n = 2;
  CVec a;  // diagonal of a, traceless
  CVec b;  // diagonal of b (commutes with a trivially)
  int j = 2;
  Reality reality = Reality::Un;
  JSignature J;  // used when reality == UkJ

  CMat a_mat() const {
    CMat M = CMat::Zero(n, n);
    for (int i = 0; i < n; ++i) M(i, i) = a(i);
    return M;
  }
  CMat b_mat() const {
    CMat M = CMat::Zero(n, n);
    for (int i = 0; i < n; ++i) M(i, i) = b(i);
    return M;
  }

  static HierarchySpec make(int n, const CVec& a, const CVec& b, int j, Reality r) {
    HierarchySpec s;
    s.n = n;
    s.a = a;
    s.b = b;
    s.j = j;
    s.reality = r;
    if (r == Reality::SlnC && std::abs(a.sum()) > 1e-12)
      throw std::invalid_argument("a must be traceless in sl(n,C)");
    return s;
  }
  // su(2) second flow; the focusing NLS frame a = diag(i,-i), b = a.
  static HierarchySpec nls_focusing() {
    CVec a(2);
    a << Cplx(0, 1), Cplx(0, -1);
    return make(2, a, a, 2, Reality::Un);
  }
  // su(2) twisted third flow (mKdV frame), a = diag(i,-i).
  static HierarchySpec mkdv() {
    CVec a(2);
    a << Cplx(0, 1), Cplx(0, -1);
    return make(2, a, a, 3, Reality::TwistedTranspose);
  }
  // -1 flow frame for q_{xt} = sin q: a = diag(i,-i), b = -a/4.
  static HierarchySpec sge() {
    CVec a(2);
    a << Cplx(0, 1), Cplx(0, -1);
    return make(2, a, CVec(-0.25 * a), -1, Reality::TwistedTranspose);
  }
};

// Membership residual in sl(n)_a^perp = image of ad(a): centralizer part of u.
inline double a_perp_residual(const HierarchySpec& s, const CMat& u) {
  double r = 0;
  for (int k = 0; k < s.n; ++k)
    for (int l = 0; l < s.n; ++l)
      if (std::abs(s.a(k) - s.a(l)) < 1e-10) r = std::max(r, std::abs(u(k, l)));
  return r;
}

namespace detail {

using MatSeries = std::vector<CMat>;  // coefficients of mu^0..mu^m, mu = 1/lambda

inline MatSeries mul_trunc(const MatSeries& A, const MatSeries& B, int m, int n) {
  MatSeries C(m + 1, CMat::Zero(n, n));
  for (int i = 0; i <= m && i < static_cast<int>(A.size()); ++i)
    for (int k = 0; i + k <= m && k < static_cast<int>(B.size()); ++k)
      C[i + k] += A[i] * B[k];
  return C;
}

// Distinct eigenvalues of diagonal a, clustered at tolerance 1e-10.
inline std::vector<Cplx> distinct_values(const CVec& a) {
  std::vector<Cplx> d;
  for (int i = 0; i < a.size(); ++i) {
    bool found = false;
    for (auto& v : d)
      if (std::abs(v - a(i)) < 1e-10) found = true;
    if (!found) d.push_back(a(i));
  }
  return d;
}

}  // namespace detail

// Q_{b,0..upto} along one x-line of samples u (values in sl(n)_a^perp).
// Returns Q[m][ix].  b must be a polynomial in a.
inline std::vector<std::vector<CMat>> q_coefficients_line(
    const HierarchySpec& spec, const std::vector<CMat>& u, double hx, int upto,
    int stencil_order = 4) {
  const int n = spec.n;
  const int N = static_cast<int>(u.size());
  if (N < 7) throw GridTooCoarse("x-line too short for derivative stencils");

  const auto dvals = detail::distinct_values(spec.a);
  // f'(a_k) for the minimal polynomial f = prod (x - d_c)
  CVec fprime(n);
  for (int k = 0; k < n; ++k) {
    Cplx p = 1.0;
    for (auto& d : dvals)
      if (std::abs(d - spec.a(k)) >= 1e-10) p *= spec.a(k) - d;
    fprime(k) = p;
  }

  // centralizer mask of a
  std::vector<std::vector<bool>> cent(n, std::vector<bool>(n));
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) cent[k][l] = std::abs(spec.a(k) - spec.a(l)) < 1e-10;

  std::vector<std::vector<CMat>> Q(upto + 1, std::vector<CMat>(N));
  for (int ix = 0; ix < N; ++ix) Q[0][ix] = spec.a_mat();

  for (int m = 1; m <= upto; ++m) {
    // derivative + commutator of the previous coefficient
    std::vector<CMat> D(N);
    for (int ix = 0; ix < N; ++ix) {
      CMat dq = fd::d1([&](int k) { return Q[m - 1][k]; }, ix, N, hx, stencil_order);
      D[ix] = dq + u[ix] * Q[m - 1][ix] - Q[m - 1][ix] * u[ix];
    }
    for (int ix = 0; ix < N; ++ix) {
      // off-centralizer part: [Q_m, a] = D  =>  Q_m(k,l) (a_l - a_k) = D(k,l)
      CMat P = CMat::Zero(n, n);
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          if (!cent[k][l]) P(k, l) = D[ix](k, l) / (spec.a(l) - spec.a(k));
      // centralizer part from f(a + Q_1 mu + ... ) = 0 at order mu^m
      detail::MatSeries S(m + 1);
      S[0] = spec.a_mat();
      for (int i = 1; i < m; ++i) S[i] = Q[i][ix];
      S[m] = P;
      detail::MatSeries acc(1, identity(n));
      for (auto& d : dvals) {
        detail::MatSeries lin = S;
        lin[0] -= d * identity(n);
        acc = detail::mul_trunc(acc, lin, m, n);
      }
      const CMat& R = acc.size() > static_cast<size_t>(m) ? acc[m] : CMat::Zero(n, n).eval();
      CMat T = CMat::Zero(n, n);
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          if (cent[k][l]) T(k, l) = -R(k, l) / fprime(k);
      Q[m][ix] = P + T;
    }
  }

  // b == a: done
  if ((spec.b - spec.a).cwiseAbs().maxCoeff() < 1e-14) return Q;

  // express b = p(a) on the distinct values, then Q_b = p(M)
  const int s = static_cast<int>(dvals.size());
  CMat V(s, s);
  CVec rhs(s);
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) V(r, c) = std::pow(dvals[r], c);
    // consistent b value on the cluster
    Cplx bv = 0;
    bool set = false;
    for (int k = 0; k < n; ++k)
      if (std::abs(spec.a(k) - dvals[r]) < 1e-10) {
        if (set && std::abs(bv - spec.b(k)) > 1e-10)
          throw NotPolynomialInA("b is not constant on eigenspaces of a");
        bv = spec.b(k);
        set = true;
      }
    rhs(r) = bv;
  }
  CVec p = V.partialPivLu().solve(rhs);

  std::vector<std::vector<CMat>> Qb(upto + 1, std::vector<CMat>(N));
  for (int ix = 0; ix < N; ++ix) {
    detail::MatSeries M(upto + 1);
    for (int i = 0; i <= upto; ++i) M[i] = Q[i][ix];
    detail::MatSeries acc(1, identity(n));
    detail::MatSeries out(upto + 1, CMat::Zero(n, n));
    for (int i = 0; i <= upto; ++i) out[i] += p(0) * (i == 0 ? identity(n) : CMat::Zero(n, n));
    for (int c = 1; c < s; ++c) {
      acc = detail::mul_trunc(acc, M, upto, n);
      for (int i = 0; i <= upto; ++i) out[i] += p(c) * acc[i];
    }
    for (int i = 0; i <= upto; ++i) Qb[i][ix] = out[i];
  }
  return Qb;
}

enum class NamedFlow { NLSFocusing, NLSDefocusing, MKdV, KdV, SGE, MatrixMKdV, NWave };

// Scalar named flows: time derivative of q from x-samples.
inline std::vector<Cplx> flow_rhs_scalar(NamedFlow flow, const std::vector<Cplx>& q,
                                         double hx, int order = 4) {
  const int N = static_cast<int>(q.size());
  if (N < 7) throw GridTooCoarse("x-line too short");
  auto at = [&](int i) { return q[i]; };
  std::vector<Cplx> out(N);
  for (int i = 0; i < N; ++i) {
    switch (flow) {
      case NamedFlow::NLSFocusing: {
        Cplx qxx = fd::d2(at, i, N, hx, order);
        out[i] = Cplx(0, 0.5) * (qxx + 2.0 * std::norm(q[i]) * q[i]);
        break;
      }
      case NamedFlow::NLSDefocusing: {
        Cplx qxx = fd::d2(at, i, N, hx, order);
        out[i] = Cplx(0, 0.5) * (qxx - 2.0 * std::norm(q[i]) * q[i]);
        break;
      }
      case NamedFlow::MKdV: {
        Cplx qx = fd::d1(at, i, N, hx, order), qxxx = fd::d3(at, i, N, hx, order);
        out[i] = -0.25 * (qxxx - 6.0 * q[i] * q[i] * qx);
        break;
      }
      case NamedFlow::KdV: {
        Cplx qx = fd::d1(at, i, N, hx, order), qxxx = fd::d3(at, i, N, hx, order);
        out[i] = 0.25 * (qxxx - 6.0 * q[i] * qx);
        break;
      }
      default:
        throw UnknownFlow("not a scalar x-local flow");
    }
  }
  return out;
}

// Matrix named flows (matrix mKdV; n-wave via spec a,b).
inline std::vector<CMat> flow_rhs_matrix(NamedFlow flow, const HierarchySpec& spec,
                                         const std::vector<CMat>& v, double hx,
                                         int order = 4) {
  const int N = static_cast<int>(v.size());
  if (N < 7) throw GridTooCoarse("x-line too short");
  auto at = [&](int i) { return v[i]; };
  std::vector<CMat> out(N);
  for (int i = 0; i < N; ++i) {
    switch (flow) {
      case NamedFlow::MatrixMKdV: {
        CMat vx = fd::d1(at, i, N, hx, order), vxxx = fd::d3(at, i, N, hx, order);
        const CMat& w = v[i];
        out[i] = -0.25 * (vxxx + 3.0 * (vx * w.transpose() * w + w * w.transpose() * vx));
        break;
      }
      case NamedFlow::NWave: {
        // first flow with general b: u_t = (Bu)_x + [u, Bu],
        // (Bu)_{kl} = u_{kl} (b_k - b_l)/(a_k - a_l)
        auto Bu = [&](int p) {
          CMat m = CMat::Zero(spec.n, spec.n);
          for (int k = 0; k < spec.n; ++k)
            for (int l = 0; l < spec.n; ++l)
              if (std::abs(spec.a(k) - spec.a(l)) >= 1e-10)
                m(k, l) = v[p](k, l) * (spec.b(k) - spec.b(l)) / (spec.a(k) - spec.a(l));
          return m;
        };
        CMat bx = fd::d1(Bu, i, N, hx, order);
        out[i] = bx + v[i] * Bu(i) - Bu(i) * v[i];
        break;
      }
      default:
        throw UnknownFlow("not a matrix flow");
    }
  }
  return out;
}

// Vacuum trivialization exp(a lambda x + b lambda^j t), diagonal.
inline std::function<CMat(double, double, Cplx)> vacuum_trivialization(
    const HierarchySpec& spec) {
  return [spec](double x, double t, Cplx lam) {
    if (spec.j == -1 && std::abs(lam) < 1e-300)
      throw LambdaZeroAtMinusOneFlow("lambda = 0 is a pole of the -1 flow");
    Cplx lj = spec.j == -1 ? 1.0 / lam : std::pow(lam, spec.j);
    CMat E = CMat::Zero(spec.n, spec.n);
    for (int k = 0; k < spec.n; ++k)
      E(k, k) = std::exp(spec.a(k) * lam * x + spec.b(k) * lj * t);
    return E;
  };
}

// Max-norm of B_x - A_t + [A,B] at interior nodes (central differences).
inline double zero_curvature_residual(const MatField& A, const MatField& B) {
  if (A.grid.nx != B.grid.nx || A.grid.nt != B.grid.nt ||
      std::abs(A.grid.hx() - B.grid.hx()) > 1e-14 ||
      std::abs(A.grid.ht() - B.grid.ht()) > 1e-14)
    throw GridMismatch("A and B sampled on different grids");
  double r = 0;
  for (int j = 1; j < A.grid.nt - 1; ++j)
    for (int i = 1; i < A.grid.nx - 1; ++i) {
      CMat Bx = (B.at(i + 1, j) - B.at(i - 1, j)) / (2 * B.grid.hx());
      CMat At = (A.at(i, j + 1) - A.at(i, j - 1)) / (2 * A.grid.ht());
      CMat res = Bx - At + A.at(i, j) * B.at(i, j) - B.at(i, j) * A.at(i, j);
      r = std::max(r, res.cwiseAbs().maxCoeff());
    }
  return r;
}

}  // namespace soliton
