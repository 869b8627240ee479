#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "fkdet/errors.hpp"
#include "fkdet/ring.hpp"

namespace fkdet {

/// N-th roots of unity with table[N-j] == conj(table[j]) bitwise.
inline std::vector<Complex> roots_of_unity(std::int64_t N) {
  std::vector<Complex> t(static_cast<std::size_t>(N));
  for (std::int64_t j = 0; 2 * j <= N; ++j) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(N);
    t[static_cast<std::size_t>(j)] = {std::cos(th), std::sin(th)};
    if (j) t[static_cast<std::size_t>(N - j)] = std::conj(t[static_cast<std::size_t>(j)]);
  }
  if (N % 4 == 0) {
    t[static_cast<std::size_t>(N / 4)] = {0.0, 1.0};
    t[static_cast<std::size_t>(3 * N / 4)] = {0.0, -1.0};
  }
  if (N % 2 == 0) t[static_cast<std::size_t>(N / 2)] = {-1.0, 0.0};
  return t;
}

/// Visits every point ω_k = (e^{2πi k_1/N}, ..., e^{2πi k_d/N}) of the N^d grid
/// in lexicographic order of k and passes f(ω_k). Exponents are reduced
/// exactly mod N before the table lookup.
template <class S, class Fn>
void for_each_grid_value(const RingElement<S>& f, std::int64_t N, Fn&& fn) {
  const auto& G = f.group();
  if (!G.is_lattice()) throw DomainError("torus symbols exist for Z^d only");
  if (N < 1) throw DomainError("grid size must be >= 1");
  const std::size_t d = G.arity();
  const auto roots = roots_of_unity(N);
  std::vector<Complex> coef;
  std::vector<std::vector<std::int64_t>> exps;
  for (const auto& [g, c] : f.terms()) {
    coef.push_back(ScalarTraits<S>::to_complex(c));
    std::vector<std::int64_t> e(d);
    for (std::size_t i = 0; i < d; ++i) e[i] = detail::floor_mod(g[i], N);
    exps.push_back(std::move(e));
  }
  std::vector<std::int64_t> k(d, 0);
  std::vector<std::int64_t> phase(coef.size(), 0);  // Σ_i e_i k_i mod N per term
  while (true) {
    Complex v(0.0, 0.0);
    for (std::size_t t = 0; t < coef.size(); ++t) v += coef[t] * roots[static_cast<std::size_t>(phase[t])];
    fn(k, v);
    std::size_t i = d;
    bool done = true;
    while (i > 0) {
      --i;
      if (k[i] + 1 < N) {
        ++k[i];
        for (std::size_t t = 0; t < coef.size(); ++t) phase[t] = (phase[t] + exps[t][i]) % N;
        done = false;
        break;
      }
      for (std::size_t t = 0; t < coef.size(); ++t)
        phase[t] = detail::floor_mod(phase[t] - exps[t][i] * (N - 1), N);
      k[i] = 0;
    }
    if (done) break;
  }
}

}  // namespace fkdet
