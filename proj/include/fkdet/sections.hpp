#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fkdet/errors.hpp"
#include "fkdet/groups.hpp"
#include "fkdet/logdet.hpp"
#include "fkdet/matrix.hpp"
#include "fkdet/ring.hpp"
#include "fkdet/symbol.hpp"

namespace fkdet {

/// f_F = p_F ∘ f ∘ ι_F on a window F: entry(γ', γ) = f_{γ'γ⁻¹}, rows and
/// columns in window order. Stored sparse when density < 1/4.
template <RingScalar S>
class CompressionMatrix {
 public:
  struct Entry {
    std::size_t row, col;
    S value;
  };

  CompressionMatrix(std::shared_ptr<const FolnerWindow> window, std::vector<Entry> entries)
      : window_(std::move(window)), n_(window_->size()) {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    const double density = n_ ? static_cast<double>(entries.size()) / (static_cast<double>(n_) * n_) : 0.0;
    sparse_ = density < 0.25;
    if (sparse_) {
      entries_ = std::move(entries);
    } else {
      dense_.assign(n_ * n_, S(0));
      for (auto& e : entries) dense_[e.row * n_ + e.col] = std::move(e.value);
    }
  }

  const FolnerWindow& window() const { return *window_; }
  std::shared_ptr<const FolnerWindow> window_ptr() const { return window_; }
  std::size_t size() const noexcept { return n_; }
  bool is_sparse() const noexcept { return sparse_; }

  std::size_t nonzeros() const {
    if (sparse_) return entries_.size();
    return static_cast<std::size_t>(
        std::count_if(dense_.begin(), dense_.end(), [](const S& x) { return !ScalarTraits<S>::is_zero(x); }));
  }

  S entry(std::size_t i, std::size_t j) const {
    if (!sparse_) return dense_[i * n_ + j];
    auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{i, j}, [](const Entry& e, const auto& p) {
      return e.row != p.first ? e.row < p.first : e.col < p.second;
    });
    if (it != entries_.end() && it->row == i && it->col == j) return it->value;
    return S(0);
  }

  /// Calls fn(row, col, value) for every nonzero entry in row-major order.
  template <class Fn>
  void for_each_nonzero(Fn&& fn) const {
    if (sparse_) {
      for (const auto& e : entries_) fn(e.row, e.col, e.value);
      return;
    }
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        if (!ScalarTraits<S>::is_zero(dense_[i * n_ + j])) fn(i, j, dense_[i * n_ + j]);
  }

  Matrix<S> to_exact() const {
    Matrix<S> m(n_, n_);
    for_each_nonzero([&](std::size_t i, std::size_t j, const S& v) { m(i, j) = v; });
    return m;
  }

  /// Whether any entry has a nonzero imaginary part.
  bool is_complex_valued() const {
    if constexpr (std::is_same_v<S, Complex>) {
      bool any = false;
      for_each_nonzero([&](std::size_t, std::size_t, const S& v) { any = any || v.imag() != 0.0; });
      return any;
    } else {
      return false;
    }
  }

  template <class T>
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> to_dense() const {
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> m =
        Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>::Zero(static_cast<Eigen::Index>(n_),
                                                               static_cast<Eigen::Index>(n_));
    for_each_nonzero([&](std::size_t i, std::size_t j, const S& v) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = convert<T>(v);
    });
    return m;
  }

  template <class T>
  Eigen::SparseMatrix<T> to_sparse() const {
    std::vector<Eigen::Triplet<T>> trips;
    for_each_nonzero([&](std::size_t i, std::size_t j, const S& v) {
      trips.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), convert<T>(v));
    });
    Eigen::SparseMatrix<T> m(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
  }

 private:
  template <class T>
  static T convert(const S& v) {
    if constexpr (std::is_same_v<T, Complex>)
      return ScalarTraits<S>::to_complex(v);
    else
      return ScalarTraits<S>::to_double(v);
  }

  std::shared_ptr<const FolnerWindow> window_;
  std::size_t n_;
  bool sparse_ = true;
  std::vector<Entry> entries_;
  std::vector<S> dense_;
};

template <class S>
CompressionMatrix<S> compress(const RingElement<S>& f, std::shared_ptr<const FolnerWindow> F) {
  if (!F || F->empty()) throw DomainError("compression needs a nonempty window");
  detail::require_same_group(f.group(), F->group());
  const auto& G = f.group();
  std::vector<typename CompressionMatrix<S>::Entry> entries;
  entries.reserve(f.support_size() * F->size());
  for (std::size_t col = 0; col < F->size(); ++col) {
    const auto& g = (*F)[col];
    for (const auto& [s, c] : f.terms())
      if (auto row = F->position(multiply(G, s, g))) entries.push_back({*row, col, c});
  }
  return CompressionMatrix<S>(std::move(F), std::move(entries));
}

template <class S>
CompressionMatrix<S> compress(const RingElement<S>& f, const FolnerWindow& F) {
  return compress(f, std::make_shared<const FolnerWindow>(F));
}

/// log|det| of a compression, dense or sparse per its storage.
template <class S>
double logabsdet(const CompressionMatrix<S>& M) {
  if (M.is_complex_valued()) {
    return M.is_sparse() ? logabsdet(M.template to_sparse<Complex>()) : logabsdet(M.template to_dense<Complex>());
  }
  return M.is_sparse() ? logabsdet(M.template to_sparse<double>()) : logabsdet(M.template to_dense<double>());
}

// ---------------------------------------------------------------------------
// Invertibility certificates

enum class CertificateMethod { torus_min, l1_neumann, positive_gap };

inline std::string to_string(CertificateMethod m) {
  switch (m) {
    case CertificateMethod::torus_min: return "torus-min";
    case CertificateMethod::l1_neumann: return "l1-neumann";
    case CertificateMethod::positive_gap: return "positive-gap";
  }
  return "?";
}

inline CertificateMethod parse_certificate_method(std::string_view s) {
  if (s == "torus-min") return CertificateMethod::torus_min;
  if (s == "l1-neumann") return CertificateMethod::l1_neumann;
  if (s == "positive-gap") return CertificateMethod::positive_gap;
  throw DomainError("unknown certificate method '" + std::string(s) + "'");
}

struct CertificateParams {
  std::int64_t grid_size = 256;
};

/// Rigorous invertibility evidence for f acting on ℓ²(Γ). `certified == false`
/// means "not certifiable by this method", never "not invertible".
struct InvertibilityCertificate {
  CertificateMethod method;
  bool certified = false;
  double sigma_min_lower = 0.0;
  std::optional<double> inverse_norm_upper;
  /// Spectrum enclosure [lo, hi] (positive-gap only).
  std::optional<std::pair<double, double>> spectrum;
  std::optional<std::int64_t> grid_size;
  std::optional<double> lipschitz;
  std::optional<double> residual_l1;
  std::string reason;
};

namespace detail {

inline double next_down(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }
inline double next_up(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }

/// Splits f = c·e + r and returns (c, ‖r‖₁) as exact rationals when possible.
template <class S>
std::pair<S, typename ScalarTraits<S>::Magnitude> split_identity(const RingElement<S>& f) {
  const auto e = identity(f.group());
  S c = f.coefficient(e);
  typename ScalarTraits<S>::Magnitude r(0);
  for (const auto& [g, x] : f.terms())
    if (!(g == e)) r += ScalarTraits<S>::abs(x);
  return {c, r};
}

template <class T>
double lower_double(const T& x) {
  if constexpr (std::is_same_v<T, double>)
    return x;
  else
    return round_down(Rational(x));
}

template <class T>
double upper_double(const T& x) {
  if constexpr (std::is_same_v<T, double>)
    return x;
  else
    return round_up(Rational(x));
}

}  // namespace detail

template <class S>
InvertibilityCertificate certify_invertible(const RingElement<S>& f, CertificateMethod method,
                                            const CertificateParams& params = {}) {
  InvertibilityCertificate cert;
  cert.method = method;
  switch (method) {
    case CertificateMethod::torus_min: {
      if (!f.group().is_lattice()) {
        cert.reason = "torus-min needs an integer lattice group";
        return cert;
      }
      const std::int64_t N = params.grid_size;
      if (N < 2) {
        cert.reason = "grid size must be >= 2";
        return cert;
      }
      double weighted = 0.0, l1 = 0.0;
      for (const auto& [g, c] : f.terms()) {
        double len = 0.0;
        for (auto x : g.coords()) len += std::abs(static_cast<double>(x));
        const double a = std::abs(ScalarTraits<S>::to_complex(c));
        weighted += a * len;
        l1 += a;
      }
      const double lip = 2.0 * std::numbers::pi * weighted;
      double min_abs = std::numeric_limits<double>::infinity();
      for_each_grid_value(f, N, [&](const auto&, Complex v) { min_abs = std::min(min_abs, std::abs(v)); });
      // Lipschitz slack for the half grid spacing plus a floating-point
      // allowance for the evaluated sums.
      const double slack = lip / (2.0 * static_cast<double>(N));
      const double fp = 64.0 * std::numeric_limits<double>::epsilon() * (l1 + 1.0) * static_cast<double>(f.support_size() + 1);
      const double bound = detail::next_down(min_abs - slack - fp);
      cert.grid_size = N;
      cert.lipschitz = lip;
      cert.sigma_min_lower = std::max(0.0, bound);
      if (bound > 0.0) {
        cert.certified = true;
        cert.inverse_norm_upper = detail::next_up(1.0 / bound);
      } else {
        cert.reason = "grid minimum does not exceed the Lipschitz slack";
      }
      return cert;
    }
    case CertificateMethod::l1_neumann: {
      auto [c, r] = detail::split_identity(f);
      const auto ac = ScalarTraits<S>::abs(c);
      cert.residual_l1 = detail::upper_double(r);
      if (!(ac > r)) {
        cert.reason = "|c| <= ||f - c e||_1";
        return cert;
      }
      const double gap = detail::lower_double(ac - r);
      cert.certified = gap > 0.0;
      cert.sigma_min_lower = gap;
      if (cert.certified) cert.inverse_norm_upper = detail::next_up(1.0 / gap);
      return cert;
    }
    case CertificateMethod::positive_gap: {
      if (!is_self_adjoint(f)) {
        cert.reason = "f is not self-adjoint";
        return cert;
      }
      auto [c, r] = detail::split_identity(f);
      cert.residual_l1 = detail::upper_double(r);
      double creal;
      if constexpr (std::is_same_v<S, Complex>) {
        creal = c.real();
        if (!(creal > r)) {
          cert.reason = "c <= ||f - c e||_1";
          return cert;
        }
        cert.sigma_min_lower = detail::next_down(creal - r);
        cert.spectrum = std::pair{cert.sigma_min_lower, detail::next_up(creal + r)};
      } else {
        if (!(c > r)) {
          cert.reason = "c <= ||f - c e||_1";
          return cert;
        }
        cert.sigma_min_lower = detail::lower_double(c - r);
        cert.spectrum = std::pair{cert.sigma_min_lower, detail::upper_double(c + r)};
      }
      cert.certified = cert.sigma_min_lower > 0.0;
      if (cert.certified) cert.inverse_norm_upper = detail::next_up(1.0 / cert.sigma_min_lower);
      return cert;
    }
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Smallest singular value

namespace detail {

template <class T, class Solver, class AdjSolve>
double inverse_iteration(Eigen::Index n, const Solver& solve, const AdjSolve& adj_solve) {
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = T(1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i)));
  x.normalize();
  double prev = 0.0;
  for (int it = 0; it < 20000; ++it) {
    Vec z = solve(adj_solve(x));  // (M^H M)^{-1} x
    if (!z.allFinite()) return 0.0;
    const double ray = std::real(x.dot(z));  // Rayleigh quotient of (M^H M)^{-1}
    const double nz = z.norm();
    if (!(nz > 0.0) || !(ray > 0.0)) return 0.0;
    x = z / nz;
    const double est = 1.0 / std::sqrt(ray);
    if (it > 2 && std::abs(est - prev) <= 1e-13 * est) return est;
    prev = est;
  }
  return prev;
}

}  // namespace detail

/// σ_min by inverse power iteration on M^H M from a fixed start vector.
/// Returns 0 for singular M.
template <class S>
double sigma_min_estimate(const CompressionMatrix<S>& M) {
  const auto n = static_cast<Eigen::Index>(M.size());
  if (n == 0) return 0.0;
  if (!std::isfinite(logabsdet(M))) return 0.0;
  const auto run = [&]<class T>(T*) {
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    if (M.is_sparse()) {
      Eigen::SparseMatrix<T> A = M.template to_sparse<T>();
      Eigen::SparseLU<Eigen::SparseMatrix<T>, Eigen::COLAMDOrdering<int>> lu;
      lu.analyzePattern(A);
      lu.factorize(A);
      if (lu.info() != Eigen::Success) return 0.0;
      Eigen::SparseMatrix<T> AH = A.adjoint();
      AH.makeCompressed();
      Eigen::SparseLU<Eigen::SparseMatrix<T>, Eigen::COLAMDOrdering<int>> luh;
      luh.analyzePattern(AH);
      luh.factorize(AH);
      if (luh.info() != Eigen::Success) return 0.0;
      return detail::inverse_iteration<T>(
          n, [&](const Vec& v) -> Vec { return lu.solve(v); }, [&](const Vec& v) -> Vec { return luh.solve(v); });
    }
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    Mat A = M.template to_dense<T>();
    Eigen::PartialPivLU<Mat> lu(A);
    Eigen::PartialPivLU<Mat> luh(Mat(A.adjoint()));
    return detail::inverse_iteration<T>(
        n, [&](const Vec& v) -> Vec { return lu.solve(v); }, [&](const Vec& v) -> Vec { return luh.solve(v); });
  };
  if (M.is_complex_valued()) return run(static_cast<Complex*>(nullptr));
  return run(static_cast<double*>(nullptr));
}

}  // namespace fkdet
