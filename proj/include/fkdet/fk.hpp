#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fkdet/errors.hpp"
#include "fkdet/groups.hpp"
#include "fkdet/logdet.hpp"
#include "fkdet/ring.hpp"
#include "fkdet/sections.hpp"

namespace fkdet {

struct ConvergenceRow {
  std::int64_t n = 0;
  std::size_t window_size = 0;
  Rational boundary_ratio;
  double value = 0.0;  // -inf marks a singular section
  std::string method;

  bool defect() const { return !std::isfinite(value); }
};

struct ConvergenceTable {
  std::string target;
  std::vector<ConvergenceRow> rows;

  static constexpr const char* csv_header = "n,window_size,boundary_ratio,value,method";

  std::string to_csv() const {
    std::string out = std::string(csv_header) + "\n";
    for (const auto& r : rows)
      out += std::to_string(r.n) + "," + std::to_string(r.window_size) + "," +
             format_value(r.boundary_ratio.convert_to<double>()) + "," + format_value(r.value) + "," + r.method + "\n";
    return out;
  }
};

namespace detail {

inline std::int64_t row_label(const FolnerWindow& F, std::size_t index) {
  return F.parameter().value_or(static_cast<std::int64_t>(index + 1));
}

inline void require_increasing(const std::vector<std::shared_ptr<const FolnerWindow>>& schedule) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!schedule[i] || schedule[i]->empty()) throw DomainError("schedule windows must be nonempty");
    if (i && schedule[i]->size() <= schedule[i - 1]->size())
      throw DomainError("schedule window sizes must be strictly increasing");
  }
}

}  // namespace detail

/// Rows (1/|F|)·log|det f_F| per window with |K_f F Δ F|/|F| diagnostics.
template <class S>
ConvergenceTable fk_finite_sections(const RingElement<S>& f,
                                    const std::vector<std::shared_ptr<const FolnerWindow>>& schedule) {
  detail::require_increasing(schedule);
  const auto K = support_kernel(f);
  ConvergenceTable table;
  table.target = "log det_LG(f) via finite sections";
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& F = schedule[i];
    const double ld = logabsdet(compress(f, F));
    ConvergenceRow row;
    row.n = detail::row_label(*F, i);
    row.window_size = F->size();
    row.boundary_ratio = boundary_ratio(*F, K);
    row.value = std::isfinite(ld) ? ld / static_cast<double>(F->size()) : kNegInf;
    row.method = "sections";
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Polynomial-trace method

struct PolyTraceResult {
  double value = 0.0;
  double error_bound = 0.0;
  std::vector<double> coefficients;  // Chebyshev coefficients of log on [a, b]
  std::vector<double> traces;        // tr T_k(t(f*f)), k = 0..m
};

namespace detail {

/// Chebyshev interpolant of log on [a, b] through the m+1 extrema of T_m,
/// returned as c_0..c_m with Q(x) = Σ c_k T_k(t(x)).
inline std::vector<double> chebyshev_log_coefficients(double a, double b, int m) {
  std::vector<double> fx(static_cast<std::size_t>(m) + 1);
  for (int j = 0; j <= m; ++j) {
    const double t = std::cos(std::numbers::pi * j / m);
    fx[static_cast<std::size_t>(j)] = std::log(0.5 * (a + b) + 0.5 * (b - a) * t);
  }
  std::vector<double> c(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k <= m; ++k) {
    double s = 0.0;
    for (int j = 0; j <= m; ++j) {
      const double w = (j == 0 || j == m) ? 0.5 : 1.0;
      s += w * fx[static_cast<std::size_t>(j)] * std::cos(std::numbers::pi * static_cast<double>(j) * k / m);
    }
    c[static_cast<std::size_t>(k)] = 2.0 * s / m;
  }
  c.front() *= 0.5;
  c.back() *= 0.5;
  return c;
}

/// sup |Q − log| on [a, b] from analyticity in the Bernstein ellipse E_ρ:
/// 4Mρ^{−m}/(ρ − 1), minimized over ρ below the pole of log at x = 0.
inline double chebyshev_log_error(double a, double b, int m) {
  const double t0 = (a + b) / (b - a);  // |pole| in t
  const double rho0 = t0 + std::sqrt(t0 * t0 - 1.0);
  const double h = 0.5 * (b - a);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i < 2000; ++i) {
    const double rho = 1.0 + (rho0 - 1.0) * i / 2000.0;
    const double A = 0.5 * (rho + 1.0 / rho);
    const double lo = h * (t0 - A), hi = h * (t0 + A);
    if (!(lo > 0.0)) continue;
    const double M = std::max(std::abs(std::log(lo)), std::abs(std::log(hi))) + std::numbers::pi;
    const double e = 4.0 * M * std::pow(rho, -m) / (rho - 1.0);
    best = std::min(best, e);
  }
  return best;
}

/// tr T_k for k = 0..m where T_k are Chebyshev polynomials of G/W, with G
/// integral and W a positive integer. Exact: U_k = W^k T_k(G/W) is integral,
/// U_{k+1} = 2G U_k − W² U_{k−1}, and only U_0..U_{⌈m/2⌉} are formed.
inline std::vector<double> chebyshev_traces_exact(const IntegerElement& G, const Integer& W, int m) {
  const int half = (m + 1) / 2;
  std::vector<IntegerElement> U;
  U.reserve(static_cast<std::size_t>(half) + 1);
  U.push_back(IntegerElement::identity(G.group()));
  if (half >= 1) U.push_back(G);
  const Integer W2 = W * W;
  const auto twoG = scale(G, Integer(2));
  for (int k = 1; k < half; ++k)
    U.push_back(subtract(convolve(twoG, U[static_cast<std::size_t>(k)]),
                         scale(U[static_cast<std::size_t>(k - 1)], W2)));
  std::vector<Integer> Wpow(static_cast<std::size_t>(m) + 1);
  Wpow[0] = 1;
  for (int k = 1; k <= m; ++k) Wpow[static_cast<std::size_t>(k)] = Wpow[static_cast<std::size_t>(k - 1)] * W;

  std::vector<double> tr(static_cast<std::size_t>(m) + 1);
  const Integer trU1 = trace_identity(G);
  for (int k = 0; k <= m; ++k) {
    Integer num;
    if (k <= half) {
      num = trace_identity(U[static_cast<std::size_t>(k)]);
    } else if (k % 2 == 0) {
      // T_{2j} = 2T_j² − 1
      const auto j = static_cast<std::size_t>(k / 2);
      num = 2 * trace_of_product(U[j], U[j]) - Wpow[static_cast<std::size_t>(k)];
    } else {
      // T_{2j+1} = 2T_jT_{j+1} − T_1
      const auto j = static_cast<std::size_t>(k / 2);
      num = 2 * trace_of_product(U[j], U[j + 1]) - trU1 * Wpow[static_cast<std::size_t>(k - 1)];
    }
    tr[static_cast<std::size_t>(k)] = Rational(num, Wpow[static_cast<std::size_t>(k)]).convert_to<double>();
  }
  return tr;
}

inline std::vector<double> chebyshev_traces_float(const ComplexElement& G, int m) {
  const int half = (m + 1) / 2;
  std::vector<ComplexElement> T;
  T.push_back(ComplexElement::identity(G.group()));
  if (half >= 1) T.push_back(G);
  const auto twoG = scale(G, Complex(2.0));
  for (int k = 1; k < half; ++k)
    T.push_back(subtract(convolve(twoG, T[static_cast<std::size_t>(k)]), T[static_cast<std::size_t>(k - 1)]));
  std::vector<double> tr(static_cast<std::size_t>(m) + 1);
  const double t1 = trace_identity(G).real();
  for (int k = 0; k <= m; ++k) {
    if (k <= half) {
      tr[static_cast<std::size_t>(k)] = trace_identity(T[static_cast<std::size_t>(k)]).real();
    } else {
      const auto j = static_cast<std::size_t>(k / 2);
      tr[static_cast<std::size_t>(k)] = k % 2 == 0 ? 2.0 * trace_of_product(T[j], T[j]).real() - 1.0
                                                   : 2.0 * trace_of_product(T[j], T[j + 1]).real() - t1;
    }
  }
  return tr;
}

inline Integer lcm_denominator(const RationalElement& f) {
  Integer L = 1;
  for (const auto& [g, c] : f.terms()) L = boost::multiprecision::lcm(L, boost::multiprecision::denominator(c));
  return L;
}

}  // namespace detail

/// ½·tr Q(f*f) where Q is the degree-m Chebyshev interpolant of log on
/// [a, b] ⊇ spectrum(f*f). Exact ring arithmetic for exact f.
template <class S>
PolyTraceResult fk_poly_trace(const RingElement<S>& f, const Rational& a, const Rational& b, int degree) {
  if (!(a > 0)) throw DomainError("poly-trace interval needs a > 0");
  if (b < a) throw DomainError("poly-trace interval needs a <= b");
  if (degree < 1) throw DomainError("poly-trace degree must be >= 1");
  if (!f.group().is_amenable()) throw UnsupportedFamily("poly-trace needs an amenable group");
  PolyTraceResult out;
  const double ad = a.convert_to<double>(), bd = b.convert_to<double>();
  if (a == b) {
    out.value = 0.5 * std::log(ad);
    out.error_bound = 0.0;
    return out;
  }
  const int m = degree;
  out.coefficients = detail::chebyshev_log_coefficients(ad, bd, m);

  if constexpr (ScalarTraits<S>::exact) {
    // With a = A/q, b = B/q and f = g/L the map t(x) = (2x − a − b)/(b − a)
    // sends f*f to G/W, G = 2q·g*g − (A+B)L²·e, W = (B − A)L².
    const RationalElement fr = [&] {
      if constexpr (std::is_same_v<S, Integer>)
        return to_rational(f);
      else
        return f;
    }();
    const Integer L = detail::lcm_denominator(fr);
    const auto g = *to_integer(scale(fr, Rational(L)));
    const Integer q = boost::multiprecision::lcm(boost::multiprecision::denominator(a),
                                                 boost::multiprecision::denominator(b));
    const Integer A = boost::multiprecision::numerator(Rational(a * q));
    const Integer B = boost::multiprecision::numerator(Rational(b * q));
    const auto gg = convolve(adjoint(g), g);
    const auto G = subtract(scale(gg, Integer(2 * q)), IntegerElement::identity(f.group(), Integer((A + B) * L * L)));
    const Integer W = (B - A) * L * L;
    out.traces = detail::chebyshev_traces_exact(G, W, m);
  } else {
    const auto ff = convolve(adjoint(f), f);
    const auto G = add(scale(ff, Complex(2.0 / (bd - ad))),
                       ComplexElement::identity(f.group(), Complex(-(ad + bd) / (bd - ad))));
    out.traces = detail::chebyshev_traces_float(G, m);
  }

  // Fixed-order compensated sum of c_k tr T_k.
  double s = 0.0, comp = 0.0, cmax = 0.0;
  for (int k = 0; k <= m; ++k) {
    const double term = out.coefficients[static_cast<std::size_t>(k)] * out.traces[static_cast<std::size_t>(k)];
    const double t = s + term;
    comp += std::abs(s) >= std::abs(term) ? (s - t) + term : (term - t) + s;
    s = t;
    cmax = std::max(cmax, std::abs(out.coefficients[static_cast<std::size_t>(k)]));
  }
  out.value = 0.5 * (s + comp);
  // Interpolation remainder plus a floating-point allowance for the
  // coefficients and the traces (|tr T_k| <= 1).
  const double fp = 64.0 * std::numeric_limits<double>::epsilon() * (m + 1) * (cmax + std::abs(std::log(bd)) + 1.0);
  out.error_bound = 0.5 * detail::chebyshev_log_error(ad, bd, m) + fp;
  return out;
}

/// Interval for fk_poly_trace from a certificate: [σ², ‖f‖₁²] padded 5%
/// outward and rounded outward to multiples of 1/64.
template <class S>
std::pair<Rational, Rational> poly_trace_interval(const RingElement<S>& f, const InvertibilityCertificate& cert) {
  if (!cert.certified || !(cert.sigma_min_lower > 0.0)) throw PreconditionError("f is not certified invertible");
  const Rational lo = Rational(cert.sigma_min_lower) * Rational(cert.sigma_min_lower);
  Rational hi;
  if constexpr (ScalarTraits<S>::exact) {
    const Rational n = Rational(l1_norm(f));
    hi = n * n;
  } else {
    hi = Rational(detail::next_up(l1_norm(f)));
    hi *= hi;
  }
  const Rational width = hi - lo;
  Rational pa = lo - width / 20, pb = hi + width / 20;
  const auto floor64 = [](const Rational& x) {
    Integer num = boost::multiprecision::numerator(Rational(x * 64));
    Integer den = boost::multiprecision::denominator(Rational(x * 64));
    Integer fl = num / den;
    if (fl * den > num) fl -= 1;
    return Rational(fl, 64);
  };
  const auto ceil64 = [&](const Rational& x) {
    Rational fl = floor64(x);
    return fl == x ? fl : fl + Rational(1, 64);
  };
  pa = floor64(pa);
  if (!(pa > 0)) pa = lo / 2;  // keep strictly positive
  pb = ceil64(pb);
  if (pa == pb) pb += Rational(1, 64);
  return {pa, pb};
}

// ---------------------------------------------------------------------------
// Random unit-vector perturbations

namespace detail {

/// Uniform integer in [0, n) from raw 64-bit output by rejection, so the
/// sequence is the same on every standard library.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  while (true) {
    const std::uint64_t x = rng();
    if (x < limit) return x % n;
  }
}

/// k distinct indices from [0, n) by a partial Fisher-Yates shuffle.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

/// Per window: replace the rows and columns of f_F at ⌊δ|F|⌋ seeded random
/// positions by unit vectors and tabulate (1/|F|)·log|det S|.
template <class S>
ConvergenceTable perturbation_study(const RingElement<S>& f,
                                    const std::vector<std::shared_ptr<const FolnerWindow>>& schedule, double delta,
                                    std::uint64_t seed) {
  if (!(delta >= 0.0 && delta <= 0.1)) throw DomainError("rank fraction must lie in [0, 0.1]");
  detail::require_increasing(schedule);
  const auto K = support_kernel(f);
  ConvergenceTable table;
  table.target = "log det_LG(f) via perturbed sections";
  for (std::size_t w = 0; w < schedule.size(); ++w) {
    const auto& F = schedule[w];
    const auto n = F->size();
    const auto k = static_cast<std::size_t>(std::floor(delta * static_cast<double>(n)));
    // Each window gets its own stream derived from the seed.
    const auto R = detail::sample_indices(n, k, seed + 0x9e3779b97f4a7c15ULL * (w + 1));
    std::vector<char> hit(n, 0);
    for (auto i : R) hit[i] = 1;
    const auto M = compress(f, F);
    double ld;
    const auto build = [&]<class T>(T*) {
      std::vector<Eigen::Triplet<T>> trips;
      M.for_each_nonzero([&](std::size_t i, std::size_t j, const S& v) {
        if (hit[i] || hit[j]) return;
        if constexpr (std::is_same_v<T, Complex>)
          trips.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), ScalarTraits<S>::to_complex(v));
        else
          trips.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), ScalarTraits<S>::to_double(v));
      });
      for (auto i : R) trips.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), T(1));
      Eigen::SparseMatrix<T> Sm(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      Sm.setFromTriplets(trips.begin(), trips.end());
      return logabsdet(Sm);
    };
    if (R.empty())
      ld = logabsdet(M);
    else if (M.is_complex_valued())
      ld = build(static_cast<Complex*>(nullptr));
    else
      ld = build(static_cast<double*>(nullptr));
    ConvergenceRow row;
    row.n = detail::row_label(*F, w);
    row.window_size = n;
    row.boundary_ratio = boundary_ratio(*F, K);
    row.value = std::isfinite(ld) ? ld / static_cast<double>(n) : kNegInf;
    row.method = "perturbed";
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace fkdet
