#pragma once
// Small dense complex-matrix kernel: projections (Hermitian, oblique,
// J-orthogonal) over C^n for n <= 8.  Everything is an immutable value.

#include <Eigen/Dense>
#include <complex>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace soliton {

using Cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double kDegenerateTol = 1e-10;  // relative sigma_min cutoff

struct DegenerateBasis : std::runtime_error {
  explicit DegenerateBasis(const std::string& m) : std::runtime_error(m) {}
};
struct NotComplementary : std::runtime_error {
  explicit NotComplementary(const std::string& m) : std::runtime_error(m) {}
};
struct NullVector : std::runtime_error {
  explicit NullVector(const std::string& m) : std::runtime_error(m) {}
};

inline CMat identity(int n) { return CMat::Identity(n, n); }

// Relative rank check: smallest/largest singular value of V.
inline double relative_sigma_min(const CMat& V) {
  Eigen::JacobiSVD<CMat> svd(V);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

// Modified Gram-Schmidt; columns assumed independent (checked by caller).
inline CMat mgs_orthonormalize(const CMat& V) {
  CMat Q = V;
  for (int j = 0; j < Q.cols(); ++j) {
    for (int i = 0; i < j; ++i) Q.col(j) -= Q.col(i).dot(Q.col(j)) * Q.col(i);
    double nrm = Q.col(j).norm();
    if (nrm < 1e-300) throw DegenerateBasis("zero column in orthonormalization");
    Q.col(j) /= nrm;
  }
  return Q;
}

// Hermitian projection, stored by an orthonormal image basis.
struct HermProj {
  int n = 0;
  CMat basis;  // n x r, orthonormal columns

  int rank() const { return static_cast<int>(basis.cols()); }
  CMat matrix() const { return basis * basis.adjoint(); }
  CMat perp_matrix() const { return identity(n) - matrix(); }
  // Orthogonal complement as a projection.
  HermProj perp() const {
    Eigen::FullPivLU<CMat> lu(basis.adjoint());
    if (lu.dimensionOfKernel() == 0) return HermProj{n, CMat(n, 0)};
    CMat ker = lu.kernel();  // columns span basis^perp
    return HermProj{n, mgs_orthonormalize(ker)};
  }
};

inline HermProj proj_from_basis(const CMat& V) {
  if (V.cols() == 0 || V.rows() == 0)
    throw DegenerateBasis("empty basis");
  if (relative_sigma_min(V) < kDegenerateTol)
    throw DegenerateBasis("basis is numerically rank-deficient");
  return HermProj{static_cast<int>(V.rows()), mgs_orthonormalize(V)};
}

inline HermProj proj_from_vectors(const std::vector<CVec>& vs) {
  if (vs.empty()) throw DegenerateBasis("no vectors");
  CMat V(vs[0].size(), static_cast<Eigen::Index>(vs.size()));
  for (size_t k = 0; k < vs.size(); ++k) V.col(static_cast<Eigen::Index>(k)) = vs[k];
  return proj_from_basis(V);
}

// Oblique (possibly non-Hermitian) projection with Im = span(im_basis),
// Ker = span(ker_basis); the two spans must be complementary in C^n.
struct ObliqueProj {
  int n = 0;
  CMat im_basis;   // n x r
  CMat ker_basis;  // n x (n-r)

  int rank() const { return static_cast<int>(im_basis.cols()); }
  CMat matrix() const {
    CMat M(n, n);
    M << im_basis, ker_basis;
    CMat target = CMat::Zero(n, n);
    target.leftCols(im_basis.cols()) = im_basis;
    // pi * [im ker] = [im 0]
    return M.transpose().partialPivLu().solve(target.transpose()).transpose();
  }
  ObliqueProj complement() const { return ObliqueProj{n, ker_basis, im_basis}; }
};

inline ObliqueProj oblique_proj(const CMat& im, const CMat& ker) {
  if (im.rows() != ker.rows() || im.cols() + ker.cols() != im.rows())
    throw NotComplementary("dim(im)+dim(ker) must equal n");
  if (relative_sigma_min(im) < kDegenerateTol || relative_sigma_min(ker) < kDegenerateTol)
    throw DegenerateBasis("rank-deficient span");
  CMat M(im.rows(), im.rows());
  M << mgs_orthonormalize(im), mgs_orthonormalize(ker);
  if (relative_sigma_min(M) < kDegenerateTol)
    throw NotComplementary("image and kernel spans intersect");
  return ObliqueProj{static_cast<int>(im.rows()), im, ker};
}

// Signature matrix J = diag(+1..+1, -1..-1) and friends.
struct JSignature {
  int n = 0;
  RVec eps;  // entries in {+1,-1}

  static JSignature diag(std::initializer_list<double> es) {
    JSignature J;
    J.n = static_cast<int>(es.size());
    J.eps = RVec(J.n);
    int i = 0;
    for (double e : es) J.eps(i++) = e;
    return J;
  }
  CMat matrix() const {
    CMat M = CMat::Zero(n, n);
    for (int i = 0; i < n; ++i) M(i, i) = eps(i);
    return M;
  }
  // A^{*J} = J^{-1} A^* J
  CMat star(const CMat& A) const { return matrix() * A.adjoint() * matrix(); }
};

// J-orthogonal projection onto span(V): pi = V (V^*JV)^{-1} V^* J.
// Fails when the Gram form degenerates (null vectors in the span).
inline ObliqueProj j_proj_from_basis(const CMat& V, const JSignature& J) {
  CMat G = V.adjoint() * J.matrix() * V;
  if (relative_sigma_min(G) < kDegenerateTol || relative_sigma_min(V) < kDegenerateTol)
    throw NullVector("V^*JV is singular (J-null direction in span)");
  // kernel of pi = J-orthogonal complement = null space of V^*J
  Eigen::FullPivLU<CMat> lu(V.adjoint() * J.matrix());
  CMat ker = lu.kernel();
  return ObliqueProj{static_cast<int>(V.rows()), V, ker};
}

}  // namespace soliton
