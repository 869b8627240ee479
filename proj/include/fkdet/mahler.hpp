#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "fkdet/errors.hpp"
#include "fkdet/logdet.hpp"
#include "fkdet/ring.hpp"
#include "fkdet/sections.hpp"
#include "fkdet/symbol.hpp"

namespace fkdet {

/// One-variable Laurent polynomial u^{-k}(c_0 + c_1 u + ... + c_n u^n) with
/// c_0 c_n ≠ 0.
template <ExactScalar S>
struct LaurentPoly {
  std::int64_t shift = 0;  // k
  std::vector<S> coeffs;   // c_0..c_n

  static LaurentPoly from_ring(const RingElement<S>& f) {
    if (!f.group().is_lattice() || f.group().arity() != 1) throw DomainError("Laurent polynomials here live on Z");
    if (f.is_zero()) throw DomainError("the zero element has no Mahler measure");
    const auto t = f.terms();  // sorted by exponent
    const std::int64_t lo = t.front().first[0], hi = t.back().first[0];
    LaurentPoly p;
    p.shift = -lo;
    p.coeffs.assign(static_cast<std::size_t>(hi - lo + 1), S(0));
    for (const auto& [g, c] : t) p.coeffs[static_cast<std::size_t>(g[0] - lo)] = c;
    return p;
  }

  RingElement<S> to_ring() const {
    const auto G = GroupDescriptor::lattice(1);
    std::vector<typename RingElement<S>::Term> terms;
    for (std::size_t j = 0; j < coeffs.size(); ++j)
      terms.emplace_back(GroupElement{static_cast<std::int64_t>(j) - shift}, coeffs[j]);
    return RingElement<S>::from_canonical(G, std::move(terms));
  }

  std::size_t degree() const { return coeffs.size() - 1; }
};

namespace detail {

using RPoly = std::vector<Rational>;  // ascending coefficients

inline void trim(RPoly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

inline RPoly derivative(const RPoly& p) {
  RPoly d;
  for (std::size_t i = 1; i < p.size(); ++i) d.push_back(p[i] * static_cast<long long>(i));
  trim(d);
  return d;
}

/// Quotient and remainder of exact polynomial division.
inline std::pair<RPoly, RPoly> divmod(RPoly a, const RPoly& b) {
  trim(a);
  if (b.empty()) throw DomainError("polynomial division by zero");
  if (a.size() < b.size()) return {RPoly{}, a};
  RPoly q(a.size() - b.size() + 1, Rational(0));
  for (std::size_t i = a.size(); i-- >= b.size();) {
    const Rational c = a[i] / b.back();
    q[i - (b.size() - 1)] = c;
    for (std::size_t j = 0; j < b.size(); ++j) a[i - (b.size() - 1) + j] -= c * b[j];
    if (i == b.size() - 1) break;
  }
  trim(a);
  trim(q);
  return {q, a};
}

inline RPoly monic(RPoly p) {
  trim(p);
  const Rational lead = p.back();
  for (auto& x : p) x /= lead;
  return p;
}

inline RPoly gcd(RPoly a, RPoly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    auto r = divmod(a, b).second;
    a = std::move(b);
    b = std::move(r);
  }
  return monic(a);
}

/// Yun's square-free decomposition: p = lead · Π_i q_i^i with q_i monic,
/// square-free and pairwise coprime. Returns (q_i, i) for nonconstant q_i.
inline std::vector<std::pair<RPoly, int>> squarefree_parts(const RPoly& p) {
  std::vector<std::pair<RPoly, int>> out;
  RPoly a = monic(p);
  if (a.size() <= 1) return out;
  RPoly b = derivative(a);
  RPoly c = gcd(a, b);
  RPoly w = divmod(a, c).first;
  RPoly y = divmod(b, c).first;
  int i = 1;
  while (true) {
    RPoly z = y;
    const RPoly dw = derivative(w);
    z.resize(std::max(z.size(), dw.size()), Rational(0));
    for (std::size_t j = 0; j < dw.size(); ++j) z[j] -= dw[j];
    trim(z);
    RPoly g = z.empty() ? monic(w) : gcd(w, z);
    if (g.size() > 1) out.emplace_back(g, i);
    if (w.size() <= 1 || (z.empty() && g == monic(w))) break;
    w = divmod(w, g).first;
    y = divmod(z, g).first;
    ++i;
    if (w.size() <= 1) break;
  }
  return out;
}

/// Parlett–Reinsch balancing (radix 2) in place.
inline void balance(Eigen::MatrixXd& A) {
  const Eigen::Index n = A.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) {
          c += std::abs(A(j, i));
          r += std::abs(A(i, j));
        }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / 2.0, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= 2.0;
        c *= 4.0;
      }
      g = r * 2.0;
      while (c > g) {
        f /= 2.0;
        c /= 4.0;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        A.row(i) /= f;
        A.col(i) *= f;
      }
    }
  }
}

/// Roots of a square-free polynomial (ascending coefficients, degree >= 1)
/// from the balanced companion matrix, polished by Newton steps.
inline std::vector<std::complex<double>> simple_roots(const RPoly& p) {
  const std::size_t n = p.size() - 1;
  std::vector<std::complex<double>> roots;
  if (n == 1) {
    roots.emplace_back((-p[0] / p[1]).convert_to<double>(), 0.0);
    return roots;
  }
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < n; ++i) C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) = (-p[i] / p[n]).convert_to<double>();
  balance(C);
  Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
  if (es.info() != Eigen::Success) throw DomainError("companion eigenvalue solver did not converge");
  std::vector<std::complex<long double>> pc(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) pc[i] = static_cast<long double>(p[i].convert_to<double>());
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    std::complex<long double> z(es.eigenvalues()(k).real(), es.eigenvalues()(k).imag());
    for (int it = 0; it < 3; ++it) {
      std::complex<long double> v = 0, d = 0;
      for (std::size_t i = p.size(); i-- > 0;) {
        d = d * z + v;
        v = v * z + pc[i];
      }
      if (std::abs(d) == 0.0L) break;
      const auto step = v / d;
      if (!(std::abs(step) < 1e-6L * (1.0L + std::abs(z)))) break;  // only polish, never jump
      z -= step;
    }
    roots.emplace_back(static_cast<double>(z.real()), static_cast<double>(z.imag()));
  }
  return roots;
}

}  // namespace detail

/// log|c_n| + Σ log⁺|λ_j| over the roots of c_0 + ... + c_n u^n.
template <ExactScalar S>
double mahler_roots(const LaurentPoly<S>& f) {
  if (f.coeffs.empty() || std::all_of(f.coeffs.begin(), f.coeffs.end(), [](const S& c) { return c == 0; }))
    throw DomainError("the zero element has no Mahler measure");
  detail::RPoly p;
  for (const auto& c : f.coeffs) p.push_back(Rational(c));
  detail::trim(p);
  while (!p.empty() && p.front() == 0) p.erase(p.begin());  // roots at 0 add nothing
  double sum = std::log(std::abs(p.back().convert_to<double>()));
  if (p.size() <= 1) return sum;
  for (const auto& [q, mult] : detail::squarefree_parts(p)) {
    double part = 0.0;
    for (const auto& z : detail::simple_roots(q)) part += std::max(0.0, std::log(std::abs(z)));
    sum += mult * part;
  }
  return sum;
}

template <ExactScalar S>
double mahler_roots(const RingElement<S>& f) {
  return mahler_roots(LaurentPoly<S>::from_ring(f));
}

struct GridMahler {
  double value = 0.0;
  std::size_t points = 0;   // N^d
  std::size_t defects = 0;  // points with |f| < 1e-14, excluded from the mean
};

inline constexpr double kGridDefect = 1e-14;

/// (1/#) Σ log|f(ω)| over the N^d grid of N-th roots of unity, Neumaier
/// summation in grid order. f and f* give bitwise equal results.
template <class S>
GridMahler mahler_grid(const RingElement<S>& f, std::int64_t N) {
  if (f.is_zero()) throw DomainError("the zero element has no Mahler measure");
  if (N < 2) throw DomainError("grid size must be >= 2");
  if (!f.group().is_lattice()) throw DomainError("mahler_grid needs Z^d");
  // |f*(ω)| = |f(ω)| on the torus; evaluate the canonical one of the pair.
  const auto fs = adjoint(f);
  const auto less = [](const RingElement<S>& a, const RingElement<S>& b) {
    const auto ta = a.terms(), tb = b.terms();
    for (std::size_t i = 0; i < std::min(ta.size(), tb.size()); ++i) {
      if (ta[i].first != tb[i].first) return ta[i].first < tb[i].first;
      const Complex x = ScalarTraits<S>::to_complex(ta[i].second), y = ScalarTraits<S>::to_complex(tb[i].second);
      if (x != y) return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    }
    return ta.size() < tb.size();
  };
  const auto& h = less(fs, f) ? fs : f;
  GridMahler out;
  double s = 0.0, comp = 0.0;
  std::size_t used = 0;
  for_each_grid_value(h, N, [&](const auto&, Complex v) {
    ++out.points;
    const double a = std::abs(v);
    if (a < kGridDefect) {
      ++out.defects;
      return;
    }
    const double term = std::log(a);
    const double t = s + term;
    comp += std::abs(s) >= std::abs(term) ? (s - t) + term : (term - t) + s;
    s = t;
    ++used;
  });
  out.value = used ? (s + comp) / static_cast<double>(used) : kNegInf;
  return out;
}

/// (1/N^d)·log|det| of f acting on C[(Z/N)^d].
template <class S>
double circulant_logdet(const RingElement<S>& f, std::int64_t N) {
  if (!f.group().is_lattice()) throw DomainError("circulant_logdet needs Z^d");
  const auto q = reduce_to_quotient(f, N);
  const auto M = compress(q, full_group(q.group()));
  const double ld = logabsdet(M);
  return std::isfinite(ld) ? ld / static_cast<double>(M.size()) : kNegInf;
}

}  // namespace fkdet
