#pragma once
// Closed-form soliton evaluators: 1-solitons, the F-matrix N-soliton formula,
// the sine-Gordon breather, and time-periodic pole selection.

#include <numeric>

#include "soliton/dressing.hpp"

namespace soliton {

struct RealPole : std::runtime_error {
  explicit RealPole(const std::string& m) : std::runtime_error(m) {}
};
struct RankDeficientU : std::runtime_error {
  explicit RankDeficientU(const std::string& m) : std::runtime_error(m) {}
};
struct FSingularAtPoint : std::runtime_error {
  FSingularAtPoint(double x, double t, double cond)
      : std::runtime_error("F-matrix numerically singular"), x(x), t(t), cond(cond) {}
  double x, t, cond;
};
struct DegenerateAngle : std::runtime_error {
  explicit DegenerateAngle(const std::string& m) : std::runtime_error(m) {}
};
struct NoCommonPeriod : std::runtime_error {
  explicit NoCommonPeriod(const std::string& m) : std::runtime_error(m) {}
};

namespace detail {

// exponent of row i of the vacuum trivialization at pole z
inline Cplx pole_exponent(const HierarchySpec& s, int i, Cplx z, double x, double t) {
  Cplx zj = (s.j == -1) ? 1.0 / z : std::pow(z, s.j);
  return s.a(i) * z * x + s.b(i) * zj * t;
}

// columns of e^{-(a z_k x + b z_k^j t)} v_k, each rescaled by its dominant
// exponent so no entry overflows; the scales cancel in every use below
inline CMat transported_columns(const HierarchySpec& s, const std::vector<Cplx>& z,
                                const std::vector<CVec>& v, double x, double t) {
  const int N = static_cast<int>(z.size());
  CMat M(s.n, N);
  for (int k = 0; k < N; ++k) {
    double peak = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < s.n; ++i)
      if (std::abs(v[k](i)) > 0)
        peak = std::max(peak, -pole_exponent(s, i, std::conj(z[k]), x, t).real());
    for (int i = 0; i < s.n; ++i)
      M(i, k) = (std::abs(v[k](i)) > 0)
                    ? v[k](i) * std::exp(-pole_exponent(s, i, std::conj(z[k]), x, t) - peak)
                    : Cplx(0);
  }
  return M;
}

}  // namespace detail

// g_{z,pi} * 0 = (z - conj z)[pi~, a] with pi~ the orthogonal projection onto
// e^{-(a conj(z) x + b conj(z)^j t)} U, evaluated in column-balanced form.
inline std::function<CMat(double, double)> one_soliton(const HierarchySpec& spec, Cplx z,
                                                       const CMat& U) {
  if (std::abs(z.imag()) <= 1e-8) throw RealPole("pole must be off the real axis");
  if (U.cols() > 0 && relative_sigma_min(U) < kDegenerateTol)
    throw RankDeficientU("projection basis is rank deficient");
  return [spec, z, U](double x, double t) {
    const int n = spec.n;
    CMat W(n, U.cols());
    for (int c = 0; c < U.cols(); ++c) {
      double peak = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i)
        if (std::abs(U(i, c)) > 0)
          peak = std::max(peak,
                          -detail::pole_exponent(spec, i, std::conj(z), x, t).real());
      for (int i = 0; i < n; ++i)
        W(i, c) = (std::abs(U(i, c)) > 0)
                      ? U(i, c) * std::exp(-detail::pole_exponent(spec, i, std::conj(z),
                                                                  x, t) -
                                           peak)
                      : Cplx(0);
    }
    CMat P = proj_from_basis(W).matrix();
    CMat a = spec.a_mat();
    return CMat((z - std::conj(z)) * (P * a - a * P));
  };
}

// Singularity data of a regular rational loop: distinct non-real poles z_k
// with rank-one residue directions v_k (pole convention of the one-pole
// factor I + (z - conj z)/(lambda - z) pi).
struct SingularityData {
  std::vector<Cplx> z;
  std::vector<CVec> v;

  static SingularityData make(std::vector<Cplx> z, std::vector<CVec> v) {
    if (z.size() != v.size()) throw std::invalid_argument("pole/direction count mismatch");
    for (size_t i = 0; i < z.size(); ++i) {
      if (std::abs(z[i].imag()) <= 1e-8) throw RealPole("poles must be off the real axis");
      if (v[i].norm() < 1e-14) throw RankDeficientU("zero residue direction");
      for (size_t k = 0; k < i; ++k)
        if (std::abs(z[i] - z[k]) < 1e-10 || std::abs(z[i] - std::conj(z[k])) < 1e-10)
          throw std::invalid_argument("poles must be distinct and non-conjugate");
    }
    return SingularityData{std::move(z), std::move(v)};
  }
};

// N-soliton in closed form.  With M the matrix of transported directions and
// F_{mk} = (M^*M)_{mk} / (z_m - conj(z_k)):
//   u(x,t) = [M F^{-1} M^*, a],   E(x,t,lambda) normalized to I at the origin.
class NSoliton {
 public:
  HierarchySpec spec;
  SingularityData data;

  NSoliton(const HierarchySpec& s, const SingularityData& d) : spec(s), data(d) {}

  // F^{-1} through LU plus one step of iterative refinement
  CMat xi_matrix(double x, double t, double* cond_out = nullptr) const {
    const int N = static_cast<int>(data.z.size());
    CMat M = detail::transported_columns(spec, data.z, data.v, x, t);
    CMat F(N, N);
    CMat G = M.adjoint() * M;
    for (int m = 0; m < N; ++m)
      for (int k = 0; k < N; ++k) F(m, k) = G(m, k) / (data.z[m] - std::conj(data.z[k]));
    Eigen::JacobiSVD<CMat> svd(F);
    double cond = svd.singularValues()(0) / svd.singularValues()(N - 1);
    if (cond_out) *cond_out = cond;
    if (!(cond < 1e12)) throw FSingularAtPoint(x, t, cond);
    auto lu = CMat(F.transpose()).partialPivLu();
    CMat Xt = lu.solve(M.transpose());
    Xt += lu.solve(M.transpose() - F.transpose() * Xt);
    return Xt.transpose();  // columns are the balanced xi_k
  }

  CMat eval(double x, double t) const {
    CMat M = detail::transported_columns(spec, data.z, data.v, x, t);
    CMat P = xi_matrix(x, t) * M.adjoint();
    CMat a = spec.a_mat();
    return CMat(P * a - a * P);
  }

  // e_{a,b,j} (I + sum_k P_k^*/(lambda - conj z_k)), no left normalization
  CMat eval_unnormalized_trivialization(double x, double t, Cplx lam) const {
    const int N = static_cast<int>(data.z.size());
    CMat M = detail::transported_columns(spec, data.z, data.v, x, t);
    CMat Xi = xi_matrix(x, t);
    CMat tail = identity(spec.n);
    for (int k = 0; k < N; ++k)
      tail += (M.col(k) * Xi.col(k).adjoint()) / (lam - std::conj(data.z[k]));
    CMat E0 = CMat::Zero(spec.n, spec.n);
    for (int i = 0; i < spec.n; ++i)
      E0(i, i) = std::exp(detail::pole_exponent(spec, i, lam, x, t));
    return E0 * tail;
  }

  CMat eval_trivialization(double x, double t, Cplx lam) const {
    return eval_unnormalized_trivialization(0, 0, lam).partialPivLu().solve(
        eval_unnormalized_trivialization(x, t, lam));
  }
};

inline NSoliton n_soliton(const HierarchySpec& spec, const SingularityData& data) {
  for (const auto& v : data.v)
    if (v.size() != spec.n) throw std::invalid_argument("direction dimension mismatch");
  return NSoliton(spec, data);
}

// Unitary chain whose product has the given singularity data: factor by
// factor, the residue direction is matched through the previous partial
// product, W_k = G_{k-1}(z_k)^{-*} v_k.
inline DressedState chain_for_data(const HierarchySpec& spec, const SingularityData& data) {
  DressedState st(spec);
  std::vector<SimpleElement> built;
  auto partial = [&](Cplx lam) {
    CMat G = identity(spec.n);
    for (const auto& e : built)
      G = detail::factor_eval(e, detail::bare_projection(e), lam, false) * G;
    return G;
  };
  for (size_t k = 0; k < data.z.size(); ++k) {
    CMat W = partial(data.z[k]).adjoint().partialPivLu().solve(CMat(data.v[k]));
    SimpleElement e = UnitaryElem{std::conj(data.z[k]), proj_from_basis(W).perp()};
    built.push_back(e);
    st = st.with(e);
  }
  return st;
}

// classical breather of q_{xt} = sin q from a conjugate pair of unit-circle
// poles; pi must be real symmetric so the pair satisfies the twisted reality
inline std::function<double(double, double)> breather(double theta, const HermProj& pi) {
  double c = std::cos(theta), s = std::sin(theta);
  if (std::abs(c) < 1e-12 || std::abs(s) < 1e-12)
    throw DegenerateAngle("breather angle must avoid the axes");
  CMat P = pi.matrix();
  if ((P - P.conjugate()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("projection must be real symmetric");
  return [c, s](double x, double t) {
    return 4.0 * std::atan(s * std::sin((x + t) * c) / (c * std::cosh((x - t) * s)));
  };
}

// Pole families with rationally related time periods and their least common
// period.  j >= 2: z_k = (rho k) e^{2 pi i / j} (i rho k for j = 2), common
// period pi / rho^j in the su(2) frame b = a.  j = -1: z_k = e^{i theta_k}
// with cos(theta_k) = rho / k, common period (2 pi / rho) lcm(1..m).
struct PeriodicPoles {
  std::vector<Cplx> z;
  double period;
};

inline PeriodicPoles periodic_poles(int j, long rho_num, long rho_den, int m) {
  if (rho_num == 0 || rho_den == 0) throw std::invalid_argument("rho must be nonzero");
  if (m < 1) throw std::invalid_argument("need at least one pole");
  if (j < 2 && j != -1) throw std::invalid_argument("flow must be j >= 2 or j = -1");
  double rho = static_cast<double>(rho_num) / static_cast<double>(rho_den);
  PeriodicPoles out;
  if (j == -1) {
    if (!(rho > 0 && rho < 1))
      throw NoCommonPeriod("unit-circle poles need 0 < rho < 1");
    long l = 1;
    for (int k = 1; k <= m; ++k) {
      double ct = rho / k;
      out.z.push_back(Cplx(ct, std::sqrt(1 - ct * ct)));
      l = std::lcm(l, static_cast<long>(k));
    }
    out.period = 2 * M_PI / rho * static_cast<double>(l);
    return out;
  }
  Cplx dir = (j == 2) ? Cplx(0, 1) : std::exp(Cplx(0, 2 * M_PI / j));
  for (int k = 1; k <= m; ++k) out.z.push_back(rho * static_cast<double>(k) * dir);
  // component periods pi/(rho k)^j; the k = 1 period is a common multiple
  out.period = M_PI / std::pow(std::abs(rho), j);
  return out;
}

}  // namespace soliton
