#pragma once
// KdV flow q_t = (q_xxx - 6 q q_x)/4 through the sl(2,R) frame with the
// r = 1 restriction: degree-one rational elements p_{xi,k}, Darboux and
// Backlund transformations, vacuum solitons, the rational solution, and the
// algebraic permutability ladder.

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "soliton/grid.hpp"
#include "soliton/linalg.hpp"

namespace soliton {

struct F2VanishesAt : std::runtime_error {
  double x, t;
  F2VanishesAt(double x_, double t_)
      : std::runtime_error("denominator component vanishes at (" +
                           std::to_string(x_) + ", " + std::to_string(t_) + ")"),
        x(x_),
        t(t_) {}
};
struct BlowUpDetected : std::runtime_error {
  double x, t;
  BlowUpDetected(double x_, double t_)
      : std::runtime_error("Riccati blow-up near (" + std::to_string(x_) + ", " +
                           std::to_string(t_) + ")"),
        x(x_),
        t(t_) {}
};
struct XiCollision : std::runtime_error {
  explicit XiCollision(const std::string& m) : std::runtime_error(m) {}
};
struct SingularB : std::runtime_error {
  explicit SingularB(const std::string& m) : std::runtime_error(m) {}
};

// p_{xi,k}(lambda) = [[lambda+xi, xi^2-k^2], [1, -lambda+xi]],
// det = -(lambda^2 - k^2), inverse = p_{-xi,k}/(lambda^2-k^2).
struct KdVElement {
  double xi = 0, k = 0;

  CMat p(Cplx lam) const {
    CMat m(2, 2);
    m << lam + xi, xi * xi - k * k, 1, -lam + xi;
    return m;
  }
  CMat p_inv(Cplx lam) const {
    Cplx det = lam * lam - k * k;
    if (std::abs(det) < 1e-12) throw SingularB("inverse evaluated at a zero of p");
    return CMat(KdVElement{-xi, k}.p(lam) / det);
  }
  // kernel directions at the zeros +-k
  CVec v_plus() const {
    CVec v(2);
    v << k - xi, 1;
    return v;
  }
  CVec v_minus() const {
    CVec v(2);
    v << -(k + xi), 1;
    return v;
  }
};

// Kernel/image data of p_{xi,k} and the reconstruction Y = -k a B a B^{-1}
// with B = [v_+ | v_-]; a lambda + Y recovers p_{xi,k}.
struct KdVKernelData {
  CVec v_plus, v_minus;
  CMat B, Y;
};

inline KdVKernelData kdv_kernel_data(double xi, double k) {
  KdVElement e{xi, k};
  KdVKernelData out;
  out.v_plus = e.v_plus();
  out.v_minus = e.v_minus();
  out.B = CMat(2, 2);
  out.B << out.v_plus, out.v_minus;
  if (std::abs(out.B.determinant()) < 1e-12)
    throw SingularB("kernel directions coincide (k = 0)");
  CMat a(2, 2);
  a << 1, 0, 0, -1;
  out.Y = -k * a * out.B * a * out.B.inverse();
  return out;
}

// Max defect of the two frame conditions over the sample points:
// conj(A(conj lambda)) = A(lambda) and phi^{-1} A phi even in lambda,
// phi = [[1, lambda], [0, 1]].
inline double kdv_reality_residual(const std::function<CMat(Cplx)>& A,
                                   const std::vector<Cplx>& samples) {
  auto twist = [&](Cplx lam) {
    CMat phi(2, 2), phi_inv(2, 2);
    phi << 1, lam, 0, 1;
    phi_inv << 1, -lam, 0, 1;
    return CMat(phi_inv * A(lam) * phi);
  };
  double r = 0;
  for (Cplx lam : samples) {
    r = std::max(r, (A(std::conj(lam)).conjugate() - A(lam)).cwiseAbs().maxCoeff());
    r = std::max(r, (twist(lam) - twist(-lam)).cwiseAbs().maxCoeff());
  }
  return r;
}

// A solution together with its normalized trivialization E(0,0,.) = I and the
// pointwise Darboux parameter field xi of the last applied step.
struct KdVState {
  std::function<double(double, double)> q;
  std::function<CMat(double, double, Cplx)> E;
  std::function<double(double, double)> xi;  // empty for the vacuum
  std::vector<KdVElement> chain;

  static KdVState vacuum() {
    KdVState s;
    s.q = [](double, double) { return 0.0; };
    s.E = [](double x, double t, Cplx lam) {
      Cplx th = lam * x + lam * lam * lam * t;
      CMat E0(2, 2);
      // sinh(th)/lam has a removable limit x + lam^2 t at lam = 0
      Cplx slope = (std::abs(lam) < 1e-6)
                       ? (x + lam * lam * t) * (1.0 + th * th / 6.0)
                       : std::sinh(th) / lam;
      E0 << std::exp(th), 0, slope, std::exp(-th);
      return E0;
    };
    return s;
  }
};

// One Darboux step: f = E(x,t,k)^{-1} (k-xi, 1)^t, xi~ = k - f1/f2,
// q~ = -q + 2(xi~^2 - k^2), E~ = p_{xi,k} E p_{-xi~,k} / (lambda^2 - k^2).
// k = 0 takes the series-matched path xi~ = r2/r1 with (r1,r2) = (1,xi) E(.,0).
inline KdVState kdv_darboux(const KdVState& state, double xi, double k) {
  KdVState out;
  out.chain = state.chain;
  out.chain.push_back(KdVElement{xi, k});
  std::function<double(double, double)> xif;
  if (k == 0.0) {
    auto base = state;
    xif = [base, xi](double x, double t) {
      CMat E0 = base.E(x, t, Cplx(0, 0));
      Cplx r1 = E0(0, 0) + xi * E0(1, 0);
      Cplx r2 = E0(0, 1) + xi * E0(1, 1);
      double denom = std::abs(r1);
      if (denom < 1e-12 * (1 + std::abs(r2))) throw F2VanishesAt(x, t);
      // row (1, xi) E(x,t,0) = (r1, r2); the double zero of the dressed
      // numerator at lambda = 0 forces xi~ r1 = r2
      return (r2 / r1).real();
    };
  } else {
    auto base = state;
    xif = [base, xi, k](double x, double t) {
      CVec rhs(2);
      rhs << k - xi, 1;
      CMat Ek = base.E(x, t, Cplx(k, 0));
      CVec f = Ek.partialPivLu().solve(rhs);
      double scale = f.cwiseAbs().maxCoeff();
      if (std::abs(f(1)) < 1e-12 * (1 + scale)) throw F2VanishesAt(x, t);
      return k - (f(0) / f(1)).real();
    };
  }
  out.xi = xif;
  auto q0 = state.q;
  out.q = [q0, xif, k](double x, double t) {
    double xt = xif(x, t);
    return -q0(x, t) + 2 * (xt * xt - k * k);
  };
  auto E0 = state.E;
  auto raw = [E0, xif, xi, k](double x, double t, Cplx lam) {
    Cplx det = lam * lam - Cplx(k * k, 0);
    KdVElement front{xi, k}, back{-xif(x, t), k};
    return CMat(front.p(lam) * E0(x, t, lam) * back.p(lam) / det);
  };
  out.E = [raw, k](double x, double t, Cplx lam) {
    // the poles at +-k are removable; evaluate there by symmetric sampling
    // around the nearer pole with one step of even-order extrapolation
    Cplx center = (std::abs(lam - k) <= std::abs(lam + k)) ? Cplx(k, 0) : Cplx(-k, 0);
    if (std::abs(lam - center) >= 1e-6) return raw(x, t, lam);
    auto avg = [&](double d) {
      return CMat(0.5 * (raw(x, t, center + d) + raw(x, t, center - d)));
    };
    return CMat((4.0 * avg(5e-4) - avg(1e-3)) / 3.0);
  };
  return out;
}

// First-order Backlund system integrated on a grid, anchored at the node
// nearest the origin:
//   A_x = q - A^2 + k^2,
//   A_t = (q_xx - 2q^2)/4 - q_x A/2 + q(A^2+k^2)/2 - k^2(A^2-k^2).
struct KdVBtResult {
  Field2D<double> A;
  Field2D<double> q_new;  // -q + 2(A^2 - k^2)
  double compat_residual = 0;  // max grid defect of both equations
};

inline KdVBtResult kdv_bt_ode(const std::function<double(double, double)>& q,
                              double k, double xi0, const Grid2D& g) {
  const double hs = 1e-4;
  auto qx = [&](double x, double t) {
    return (q(x - 2 * hs, t) - 8 * q(x - hs, t) + 8 * q(x + hs, t) -
            q(x + 2 * hs, t)) /
           (12 * hs);
  };
  auto qxx = [&](double x, double t) {
    return (-q(x - 2 * hs, t) + 16 * q(x - hs, t) - 30 * q(x, t) +
            16 * q(x + hs, t) - q(x + 2 * hs, t)) /
           (12 * hs * hs);
  };
  auto fx = [&](double x, double t, double A) {
    return q(x, t) - A * A + k * k;
  };
  auto ft = [&](double x, double t, double A) {
    double qv = q(x, t);
    return 0.25 * (qxx(x, t) - 2 * qv * qv) - 0.5 * qx(x, t) * A +
           0.5 * qv * (A * A + k * k) - k * k * (A * A - k * k);
  };
  auto rk4 = [&](auto&& f, double s0, double fixed, double A, double h, bool x_dir) {
    auto eval = [&](double s, double An) {
      return x_dir ? f(s, fixed, An) : f(fixed, s, An);
    };
    double k1 = eval(s0, A);
    double k2 = eval(s0 + h / 2, A + h / 2 * k1);
    double k3 = eval(s0 + h / 2, A + h / 2 * k2);
    double k4 = eval(s0 + h, A + h * k3);
    double out = A + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (std::abs(out) > 1e8) throw BlowUpDetected(x_dir ? s0 : fixed, x_dir ? fixed : s0);
    return out;
  };
  int i0 = 0, j0 = 0;
  for (int i = 0; i < g.nx; ++i)
    if (std::abs(g.x(i)) < std::abs(g.x(i0))) i0 = i;
  for (int j = 0; j < g.nt; ++j)
    if (std::abs(g.t(j)) < std::abs(g.t(j0))) j0 = j;

  KdVBtResult out{Field2D<double>(g), Field2D<double>(g), 0.0};
  const int sub = 8;  // substeps per grid cell
  auto march_x = [&](int j, double tval) {
    double A = out.A.at(i0, j);
    for (int dir : {+1, -1}) {
      double Ac = A;
      for (int i = i0; (dir > 0) ? i + 1 < g.nx : i > 0; i += dir) {
        double h = (g.x(i + dir) - g.x(i)) / sub;
        double xc = g.x(i);
        for (int s = 0; s < sub; ++s, xc += h) Ac = rk4(fx, xc, tval, Ac, h, true);
        out.A.at(i + dir, j) = Ac;
      }
    }
  };
  // seed column in t through the origin node, then rows in x
  out.A.at(i0, j0) = xi0;
  for (int dir : {+1, -1}) {
    double Ac = xi0;
    for (int j = j0; (dir > 0) ? j + 1 < g.nt : j > 0; j += dir) {
      double h = (g.t(j + dir) - g.t(j)) / sub;
      double tc = g.t(j);
      for (int s = 0; s < sub; ++s, tc += h) Ac = rk4(ft, tc, g.x(i0), Ac, h, false);
      out.A.at(i0, j + dir) = Ac;
    }
  }
  for (int j = 0; j < g.nt; ++j) march_x(j, g.t(j));

  for (int j = 0; j < g.nt; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double A = out.A.at(i, j);
      out.q_new.at(i, j) = -q(g.x(i), g.t(j)) + 2 * (A * A - k * k);
      double rx = std::abs(dx(out.A, i, j) - fx(g.x(i), g.t(j), A));
      double rt = std::abs(dt(out.A, i, j) - ft(g.x(i), g.t(j), A));
      out.compat_residual = std::max(out.compat_residual, std::max(rx, rt));
    }
  return out;
}

// xi12 = -xi1 + (k1^2 - k2^2)/(xi1 - xi2); q12 = -q1 + 2(xi12^2 - k2^2)
inline double kdv_permutability_point(double xi1, double k1, double xi2, double k2,
                                      double q1) {
  if (k1 * k1 == k2 * k2)
    throw XiCollision("permutability needs k1^2 != k2^2");
  if (std::abs(xi1 - xi2) < 1e-12)
    throw XiCollision("parameter fields collide (xi1 = xi2)");
  double xi12 = -xi1 + (k1 * k1 - k2 * k2) / (xi1 - xi2);
  return -q1 + 2 * (xi12 * xi12 - k2 * k2);
}

// Iterated algebraic ladder on the vacuum for parameters (a_i, k_i):
// evaluates q_{1 2 ... n} pointwise with the induction
//   xi_{P j m} = -xi_{P j} + (k_j^2 - k_m^2)/(xi_{P j} - xi_{P m}).
inline std::function<double(double, double)> kdv_ladder(
    const std::vector<KdVElement>& elems) {
  if (elems.empty()) throw std::invalid_argument("empty ladder");
  return [elems](double x, double t) {
    const int n = static_cast<int>(elems.size());
    KdVState vac = KdVState::vacuum();
    // level 0: single-step parameter fields
    std::vector<double> xi(n);
    for (int i = 0; i < n; ++i)
      xi[i] = kdv_darboux(vac, elems[i].xi, elems[i].k).xi(x, t);
    double q = 0.0;  // vacuum
    // after r steps, xi[m] holds xi_{1..r m} for m > r-1 (0-based: m >= r)
    for (int r = 0; r + 1 < n; ++r) {
      double kj = elems[r].k;
      std::vector<double> next = xi;
      for (int m = r + 1; m < n; ++m) {
        double d = xi[r] - xi[m];
        if (std::abs(d) < 1e-12) throw XiCollision("ladder parameter collision");
        next[m] = -xi[r] + (kj * kj - elems[m].k * elems[m].k) / d;
      }
      q = -q + 2 * (xi[r] * xi[r] - kj * kj);
      xi = next;
    }
    double kn = elems[n - 1].k;
    return -q + 2 * (xi[n - 1] * xi[n - 1] - kn * kn);
  };
}

}  // namespace soliton
