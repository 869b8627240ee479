#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "fkdet/errors.hpp"
#include "fkdet/matrix.hpp"
#include "fkdet/scalar.hpp"

namespace fkdet {

/// Elementary divisors d_1 | d_2 | ... of an integer matrix. With transforms,
/// M = U · diag(d) · V where U, V are unimodular; Vinv = V⁻¹.
struct SnfResult {
  std::size_t rows = 0, cols = 0;
  std::vector<Integer> divisors;  // min(rows, cols) entries
  std::optional<IntMatrix> U, V, Vinv;

  IntMatrix diagonal() const {
    IntMatrix D(rows, cols);
    for (std::size_t i = 0; i < divisors.size(); ++i) D(i, i) = divisors[i];
    return D;
  }
};

namespace detail {

class SnfWorker {
 public:
  SnfWorker(IntMatrix A, bool transforms) : A_(std::move(A)), track_(transforms) {
    if (track_) {
      U_ = IntMatrix::identity(A_.rows());
      V_ = IntMatrix::identity(A_.cols());
      Vinv_ = IntMatrix::identity(A_.cols());
    }
  }

  SnfResult run() {
    const std::size_t m = A_.rows(), n = A_.cols(), r = std::min(m, n);
    for (std::size_t t = 0; t < r; ++t) {
      if (!move_min_to(t)) break;  // remaining block is zero
      while (true) {
        bool dirty = clear_column(t);
        dirty = clear_row(t) || dirty;
        if (dirty) continue;
        if (!fix_divisibility(t)) break;
      }
      if (A_(t, t) < 0) negate_row(t);
    }
    SnfResult out;
    out.rows = m;
    out.cols = n;
    out.divisors.resize(r);
    for (std::size_t i = 0; i < r; ++i) out.divisors[i] = A_(i, i);
    if (track_) {
      out.U = std::move(U_);
      out.V = std::move(V_);
      out.Vinv = std::move(Vinv_);
    }
    return out;
  }

 private:
  // Row operations act on A from the left; U absorbs their inverses on the right.
  void swap_rows(std::size_t i, std::size_t j) {
    if (i == j) return;
    A_.swap_rows(i, j);
    if (track_) U_.swap_cols(i, j);
  }
  void negate_row(std::size_t i) {
    for (std::size_t c = 0; c < A_.cols(); ++c) A_(i, c) = -A_(i, c);
    if (track_)
      for (std::size_t k = 0; k < U_.rows(); ++k) U_(k, i) = -U_(k, i);
  }
  // row_i += q * row_j
  void add_row(std::size_t i, std::size_t j, const Integer& q) {
    for (std::size_t c = 0; c < A_.cols(); ++c) A_(i, c) += q * A_(j, c);
    if (track_)
      for (std::size_t k = 0; k < U_.rows(); ++k) U_(k, j) -= q * U_(k, i);
  }

  // Column operations act on A from the right; V absorbs C⁻¹ on the left.
  void swap_cols(std::size_t i, std::size_t j) {
    if (i == j) return;
    A_.swap_cols(i, j);
    if (track_) {
      V_.swap_rows(i, j);
      Vinv_.swap_cols(i, j);
    }
  }
  // col_j += q * col_i
  void add_col(std::size_t j, std::size_t i, const Integer& q) {
    for (std::size_t r = 0; r < A_.rows(); ++r) A_(r, j) += q * A_(r, i);
    if (track_) {
      for (std::size_t c = 0; c < V_.cols(); ++c) V_(i, c) -= q * V_(j, c);
      for (std::size_t r = 0; r < Vinv_.rows(); ++r) Vinv_(r, j) += q * Vinv_(r, i);
    }
  }

  bool move_min_to(std::size_t t) {
    std::size_t bi = 0, bj = 0;
    bool found = false;
    Integer best;
    for (std::size_t i = t; i < A_.rows(); ++i)
      for (std::size_t j = t; j < A_.cols(); ++j) {
        if (A_(i, j) == 0) continue;
        Integer a = boost::multiprecision::abs(A_(i, j));
        if (!found || a < best) {
          best = std::move(a);
          bi = i;
          bj = j;
          found = true;
        }
      }
    if (!found) return false;
    swap_rows(t, bi);
    swap_cols(t, bj);
    return true;
  }

  // Reduces column t below the pivot; if a nonzero remainder appears it
  // becomes the new pivot. Returns whether anything changed.
  bool clear_column(std::size_t t) {
    bool changed = false;
    while (true) {
      bool remainder = false;
      for (std::size_t i = t + 1; i < A_.rows(); ++i) {
        if (A_(i, t) == 0) continue;
        const Integer q = A_(i, t) / A_(t, t);
        if (q != 0) add_row(i, t, -q);
        changed = true;
        if (A_(i, t) != 0) remainder = true;
      }
      if (!remainder) return changed;
      std::size_t best = t;
      for (std::size_t i = t + 1; i < A_.rows(); ++i)
        if (A_(i, t) != 0 && boost::multiprecision::abs(A_(i, t)) < boost::multiprecision::abs(A_(best, t))) best = i;
      swap_rows(t, best);
    }
  }

  bool clear_row(std::size_t t) {
    bool changed = false;
    while (true) {
      bool remainder = false;
      for (std::size_t j = t + 1; j < A_.cols(); ++j) {
        if (A_(t, j) == 0) continue;
        const Integer q = A_(t, j) / A_(t, t);
        if (q != 0) add_col(j, t, -q);
        changed = true;
        if (A_(t, j) != 0) remainder = true;
      }
      if (!remainder) return changed;
      std::size_t best = t;
      for (std::size_t j = t + 1; j < A_.cols(); ++j)
        if (A_(t, j) != 0 && boost::multiprecision::abs(A_(t, j)) < boost::multiprecision::abs(A_(t, best))) best = j;
      swap_cols(t, best);
    }
  }

  // Pulls a row whose entries are not all divisible by the pivot into row t.
  bool fix_divisibility(std::size_t t) {
    for (std::size_t i = t + 1; i < A_.rows(); ++i)
      for (std::size_t j = t + 1; j < A_.cols(); ++j)
        if (A_(i, j) % A_(t, t) != 0) {
          add_row(t, i, Integer(1));
          return true;
        }
    return false;
  }

  IntMatrix A_;
  bool track_;
  IntMatrix U_, V_, Vinv_;
};

}  // namespace detail

/// Smith normal form by gcd-driven elimination with minimal-magnitude pivots.
inline SnfResult snf(const IntMatrix& M, bool with_transforms = false) {
  return detail::SnfWorker(M, with_transforms).run();
}

/// |Z^rows / M Z^cols|, or nullopt when the quotient is infinite.
inline std::optional<Integer> quotient_order(const SnfResult& r) {
  if (r.cols < r.rows) return std::nullopt;
  Integer prod = 1;
  for (const auto& d : r.divisors) {
    if (d == 0) return std::nullopt;
    prod *= d;
  }
  return prod;
}

}  // namespace fkdet
