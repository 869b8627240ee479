#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <complex>
#include <limits>
#include <tuple>
#include <vector>

#include "fkdet/errors.hpp"

namespace fkdet {

/// Pivots at or below this magnitude mark a matrix as numerically singular.
inline constexpr double kSingularPivot = 1e-300;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

namespace detail {

template <class T>
bool less_scalar(const T& a, const T& b) {
  if constexpr (std::is_same_v<T, std::complex<double>>)
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  else
    return a < b;
}

template <class T>
T conj_if(const T& x) {
  if constexpr (std::is_same_v<T, std::complex<double>>)
    return std::conj(x);
  else
    return x;
}

/// -1 if M^H sorts before M in row-major order, +1 if after, 0 if M is Hermitian.
/// |det| is invariant under M ↦ M^H; factoring the smaller of the two makes
/// the result bitwise identical for both.
template <class Mat>
int compare_with_adjoint(const Mat& M) {
  using T = typename Mat::Scalar;
  const auto n = M.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const T a = M(i, j), b = conj_if(M(j, i));
      if (a == b) continue;
      return less_scalar(b, a) ? -1 : 1;
    }
  return 0;
}

template <class T>
using Triplets = std::vector<std::tuple<Eigen::Index, Eigen::Index, T>>;

template <class T>
Triplets<T> sorted_triplets(const Eigen::SparseMatrix<T>& M, bool adjoint) {
  Triplets<T> out;
  out.reserve(static_cast<std::size_t>(M.nonZeros()));
  for (Eigen::Index k = 0; k < M.outerSize(); ++k)
    for (typename Eigen::SparseMatrix<T>::InnerIterator it(M, k); it; ++it) {
      if (it.value() == T(0)) continue;
      if (adjoint)
        out.emplace_back(it.col(), it.row(), conj_if(it.value()));
      else
        out.emplace_back(it.row(), it.col(), it.value());
    }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  return out;
}

template <class T>
int compare_with_adjoint(const Eigen::SparseMatrix<T>& M) {
  const auto a = sorted_triplets(M, false);
  const auto b = sorted_triplets(M, true);
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t k = 0; k < n; ++k) {
    const auto& [ri, ci, vi] = a[k];
    const auto& [rj, cj, vj] = b[k];
    // Any fixed antisymmetric order works here; positions decide first.
    if (ri != rj || ci != cj) return std::tie(rj, cj) < std::tie(ri, ci) ? -1 : 1;
    if (vi == vj) continue;
    return less_scalar(vj, vi) ? -1 : 1;
  }
  if (a.size() != b.size()) return b.size() < a.size() ? -1 : 1;
  return 0;
}

template <class Mat>
double logabsdet_lu(const Mat& M) {
  Eigen::PartialPivLU<Mat> lu(M);
  const auto& LU = lu.matrixLU();
  double s = 0.0;
  for (Eigen::Index i = 0; i < LU.rows(); ++i) {
    const double p = std::abs(LU(i, i));
    if (!(p > kSingularPivot)) return kNegInf;
    s += std::log(p);
  }
  return s;
}

template <class Mat>
double logabsdet_dense_oriented(const Mat& M, bool hermitian) {
  if (hermitian) {
    Eigen::LLT<Mat> llt(M);
    if (llt.info() == Eigen::Success) {
      const auto& L = llt.matrixLLT();
      double s = 0.0;
      bool ok = true;
      for (Eigen::Index i = 0; i < L.rows(); ++i) {
        const double p = std::abs(L(i, i));
        if (!(p > kSingularPivot)) {
          ok = false;
          break;
        }
        s += 2.0 * std::log(p);
      }
      if (ok) return s;
    }
  }
  return logabsdet_lu(M);
}

template <class T>
double logabsdet_sparse_oriented(const Eigen::SparseMatrix<T>& M, bool hermitian) {
  if (hermitian) {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<T>, Eigen::Lower, Eigen::AMDOrdering<int>> llt(M);
    if (llt.info() == Eigen::Success) {
      Eigen::SparseMatrix<T> L = llt.matrixL();
      double s = 0.0;
      bool ok = true;
      for (Eigen::Index i = 0; i < L.rows(); ++i) {
        const double p = std::abs(L.coeff(i, i));
        if (!(p > kSingularPivot)) {
          ok = false;
          break;
        }
        s += 2.0 * std::log(p);
      }
      if (ok) return s;
    }
  }
  Eigen::SparseLU<Eigen::SparseMatrix<T>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(M);
  lu.factorize(M);
  if (lu.info() != Eigen::Success) return kNegInf;
  const double v = std::real(lu.logAbsDeterminant());
  return std::isfinite(v) ? v : kNegInf;
}

}  // namespace detail

/// log|det M| (natural log), accumulated from pivot magnitudes; Cholesky when
/// M is Hermitian positive definite, partial-pivot LU otherwise. Returns -inf
/// for numerically singular M. The result for M and M^H is bitwise identical.
template <class Derived>
double logabsdet(const Eigen::MatrixBase<Derived>& A) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (A.rows() != A.cols()) throw DomainError("logabsdet of a non-square matrix");
  const Mat M = A;
  if (M.rows() == 0) return 0.0;
  const int cmp = detail::compare_with_adjoint(M);
  if (cmp < 0) return detail::logabsdet_dense_oriented<Mat>(M.adjoint(), false);
  return detail::logabsdet_dense_oriented<Mat>(M, cmp == 0);
}

template <class T>
double logabsdet(const Eigen::SparseMatrix<T>& M) {
  if (M.rows() != M.cols()) throw DomainError("logabsdet of a non-square matrix");
  if (M.rows() == 0) return 0.0;
  const int cmp = detail::compare_with_adjoint(M);
  if (cmp < 0) {
    Eigen::SparseMatrix<T> H = M.adjoint();
    H.makeCompressed();
    return detail::logabsdet_sparse_oriented(H, false);
  }
  Eigen::SparseMatrix<T> C = M;
  C.makeCompressed();
  return detail::logabsdet_sparse_oriented(C, cmp == 0);
}

}  // namespace fkdet
