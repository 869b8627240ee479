#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SparseCore>

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fkdet/errors.hpp"
#include "fkdet/groups.hpp"
#include "fkdet/logdet.hpp"
#include "fkdet/matrix.hpp"
#include "fkdet/ring.hpp"
#include "fkdet/sections.hpp"
#include "fkdet/tiling.hpp"

namespace fkdet {

/// Rational near-isometry from C[W \ W'] onto (f·C[W'])⊥ ⊂ C[W]:
/// T̃ = numerators / denominator.
struct TransferMap {
  std::vector<GroupElement> interior;    // W'
  std::vector<GroupElement> complement;  // W \ W', column order of T̃
  IntMatrix numerators;                  // |W| × |W \ W'|
  Integer denominator = 1;
  double norm = 0.0;          // ‖T̃‖
  double inverse_norm = 0.0;  // 1/σ_min(T̃)
};

struct PerturbedCompression {
  Eigen::SparseMatrix<double> matrix;  // S_F
  std::size_t rank_defect = 0;         // rank(S_F − f_F), numerical
  std::size_t interior_size = 0;       // |F'|
  Integer denominator = 1;             // M = Π M_j over placed tiles
  Tiling tiling;
  std::vector<TransferMap> transfers;  // per tile shape

  double logabsdet() const { return fkdet::logabsdet(matrix); }
};

namespace detail {

/// Basis of {v : Aᵀv = 0} for an integer matrix A, one primitive integer
/// vector per free column of the reduced row echelon form of Aᵀ.
inline std::vector<std::vector<Integer>> left_nullspace(const IntMatrix& A) {
  const std::size_t rows = A.cols(), cols = A.rows();  // work on Aᵀ
  Matrix<Rational> B(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) B(i, j) = Rational(A(j, i));
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && B(p, c) == 0) ++p;
    if (p == rows) continue;
    B.swap_rows(r, p);
    const Rational inv = 1 / B(r, c);
    for (std::size_t j = c; j < cols; ++j) B(r, j) *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || B(i, c) == 0) continue;
      const Rational q = B(i, c);
      for (std::size_t j = c; j < cols; ++j) B(i, j) -= q * B(r, j);
    }
    pivots.push_back(c);
    ++r;
  }
  std::vector<char> is_pivot(cols, 0);
  for (auto c : pivots) is_pivot[c] = 1;
  std::vector<std::vector<Integer>> basis;
  for (std::size_t free = 0; free < cols; ++free) {
    if (is_pivot[free]) continue;
    std::vector<Rational> v(cols, Rational(0));
    v[free] = 1;
    for (std::size_t i = 0; i < pivots.size(); ++i) v[pivots[i]] = -B(i, free);
    Integer L = 1;
    for (const auto& x : v) L = boost::multiprecision::lcm(L, boost::multiprecision::denominator(x));
    std::vector<Integer> w(cols);
    Integer g = 0;
    for (std::size_t i = 0; i < cols; ++i) {
      w[i] = boost::multiprecision::numerator(Rational(v[i] * L));
      g = boost::multiprecision::gcd(g, w[i]);
    }
    if (g > 1)
      for (auto& x : w) x /= g;
    basis.push_back(std::move(w));
  }
  return basis;
}

inline TransferMap build_transfer(const IntegerElement& f, const FolnerWindow& W, std::vector<GroupElement> interior,
                                  std::vector<GroupElement> complement) {
  const auto& G = f.group();
  TransferMap T;
  T.interior = std::move(interior);
  T.complement = std::move(complement);
  const std::size_t n = W.size(), k = T.complement.size();
  T.numerators = IntMatrix(n, k);
  if (k == 0) return T;

  // Columns f·δ_g for g ∈ W'; they stay inside W by the interior condition.
  IntMatrix A(n, T.interior.size());
  for (std::size_t c = 0; c < T.interior.size(); ++c)
    for (const auto& [s, x] : f.terms()) A(*W.position(multiply(G, s, T.interior[c])), c) += x;
  const auto basis = left_nullspace(A);
  if (basis.size() != k)
    throw PreconditionError("f is not injective on C[W'] for a tile of size " + std::to_string(n));

  // Exact Gram-Schmidt keeps the columns orthogonal, so the singular values
  // of T̃ are its column norms.
  std::vector<std::vector<Integer>> w;
  std::vector<Integer> w_sq;
  for (const auto& v : basis) {
    std::vector<Rational> u(v.begin(), v.end());
    for (std::size_t i = 0; i < w.size(); ++i) {
      Integer dot = 0;
      for (std::size_t r = 0; r < n; ++r) dot += v[r] * w[i][r];
      if (dot == 0) continue;
      const Rational q(dot, w_sq[i]);
      for (std::size_t r = 0; r < n; ++r) u[r] -= q * w[i][r];
    }
    Integer L = 1;
    for (const auto& x : u) L = boost::multiprecision::lcm(L, boost::multiprecision::denominator(x));
    std::vector<Integer> wi(n);
    Integer g = 0, sq = 0;
    for (std::size_t r = 0; r < n; ++r) {
      wi[r] = boost::multiprecision::numerator(Rational(u[r] * L));
      g = boost::multiprecision::gcd(g, wi[r]);
    }
    for (auto& x : wi) {
      x /= g;
      sq += x * x;
    }
    w.push_back(std::move(wi));
    w_sq.push_back(std::move(sq));
  }

  // Column j scaled by c_j / 2^bits with c_j = floor(2^bits / ‖w_j‖).
  std::size_t bits = 16;
  for (const auto& sq : w_sq) bits = std::max<std::size_t>(bits, boost::multiprecision::msb(sq) / 2 + 17);
  const Integer den = Integer(1) << bits;
  const Integer den_sq = den * den;
  Integer g = den;
  T.norm = 0.0;
  double smin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    const Integer c = boost::multiprecision::sqrt(Integer(den_sq / w_sq[j]));
    for (std::size_t i = 0; i < n; ++i) {
      T.numerators(i, j) = w[j][i] * c;
      g = boost::multiprecision::gcd(g, T.numerators(i, j));
    }
    const double norm = Rational(Rational(c * c * w_sq[j]) / den_sq).convert_to<double>();
    T.norm = std::max(T.norm, std::sqrt(norm));
    smin = std::min(smin, std::sqrt(norm));
  }
  if (g > 1) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) T.numerators(i, j) /= g;
  }
  T.denominator = den / g;
  T.inverse_norm = 1.0 / smin;
  if (!(T.norm <= 2.0 && T.inverse_norm <= 2.0)) throw PreconditionError("transfer map outside norm 2");
  return T;
}

}  // namespace detail

/// S_F: f_F on the tiled interiors W'_j·c, rational transfer maps on the tile
/// complements (W_j \ W'_j)·c, identity on points no tile covers. Tiles must
/// satisfy |W'| >= (1 − ε/2)|W| with W' = {g ∈ W : K_f·g ⊆ W}.
inline PerturbedCompression build_perturbed_compression(const IntegerElement& f,
                                                        std::shared_ptr<const FolnerWindow> F,
                                                        const std::vector<FolnerWindow>& tiles, double epsilon) {
  if (!F || F->empty()) throw DomainError("perturbed compression needs a nonempty window");
  if (!(epsilon > 0.0 && epsilon < 2.0)) throw DomainError("epsilon must lie in (0, 2)");
  if (tiles.empty()) throw DomainError("perturbed compression needs at least one tile");
  detail::require_same_group(f.group(), F->group());
  const auto& G = f.group();
  const auto K = support_kernel(f);

  PerturbedCompression out;
  for (std::size_t j = 0; j < tiles.size(); ++j) {
    const auto& W = tiles[j];
    detail::require_same_group(G, W.group());
    std::vector<GroupElement> interior, complement;
    for (const auto& g : W.elements()) {
      const bool in = std::all_of(K.begin(), K.end(), [&](const auto& s) { return W.contains(multiply(G, s, g)); });
      (in ? interior : complement).push_back(g);
    }
    // 2|W'| >= (2 − ε)|W|
    if (2.0 * static_cast<double>(interior.size()) < (2.0 - epsilon) * static_cast<double>(W.size()))
      throw PreconditionError("tile " + std::to_string(j) + " (size " + std::to_string(W.size()) + ") has interior " +
                              std::to_string(interior.size()) + ", below (1 - epsilon/2)|W|");
    out.transfers.push_back(detail::build_transfer(f, W, std::move(interior), std::move(complement)));
  }

  out.tiling = detail::greedy_quasitile(F, tiles, std::min(epsilon, 0.5), DisjointnessMode::pairwise_disjoint);

  const auto n = static_cast<Eigen::Index>(F->size());
  const auto fF = compress(f, F);
  std::vector<int> kind(F->size(), 0);  // 0 uncovered, 1 interior, 2 complement
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& p : out.tiling.placements) {
    const auto& T = out.transfers[p.tile];
    const auto& W = out.tiling.tiles[p.tile];
    for (const auto& g : T.interior) kind[*F->position(multiply(G, g, p.center))] = 1;
    for (std::size_t c = 0; c < T.complement.size(); ++c) {
      const auto col = *F->position(multiply(G, T.complement[c], p.center));
      kind[col] = 2;
      for (std::size_t r = 0; r < W.size(); ++r) {
        if (T.numerators(r, c) == 0) continue;
        const auto row = *F->position(multiply(G, W[r], p.center));
        trips.emplace_back(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col),
                           Rational(T.numerators(r, c), T.denominator).convert_to<double>());
      }
    }
    out.denominator *= T.denominator;
  }
  fF.for_each_nonzero([&](std::size_t i, std::size_t j, const Integer& v) {
    if (kind[j] == 1) trips.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), v.convert_to<double>());
  });
  for (std::size_t j = 0; j < F->size(); ++j)
    if (kind[j] == 0) trips.emplace_back(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j), 1.0);
  out.matrix = Eigen::SparseMatrix<double>(n, n);
  out.matrix.setFromTriplets(trips.begin(), trips.end());
  out.matrix.makeCompressed();
  out.interior_size = static_cast<std::size_t>(std::count(kind.begin(), kind.end(), 1));

  // rank(S − f_F); only columns outside the interior can differ.
  std::vector<std::size_t> outside;
  for (std::size_t j = 0; j < F->size(); ++j)
    if (kind[j] != 1) outside.push_back(j);
  if (!outside.empty()) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(outside.size()));
    std::vector<Eigen::Index> col_of(F->size(), -1);
    for (std::size_t c = 0; c < outside.size(); ++c) col_of[outside[c]] = static_cast<Eigen::Index>(c);
    for (Eigen::Index k = 0; k < out.matrix.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(out.matrix, k); it; ++it)
        if (col_of[static_cast<std::size_t>(it.col())] >= 0) D(it.row(), col_of[static_cast<std::size_t>(it.col())]) += it.value();
    fF.for_each_nonzero([&](std::size_t i, std::size_t j, const Integer& v) {
      if (col_of[j] >= 0) D(static_cast<Eigen::Index>(i), col_of[j]) -= v.convert_to<double>();
    });
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
    qr.setThreshold(1e-10);
    out.rank_defect = static_cast<std::size_t>(qr.rank());
  }
  return out;
}

}  // namespace fkdet
