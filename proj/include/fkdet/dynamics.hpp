#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fkdet/errors.hpp"
#include "fkdet/groups.hpp"
#include "fkdet/logdet.hpp"
#include "fkdet/matrix.hpp"
#include "fkdet/ring.hpp"
#include "fkdet/sections.hpp"
#include "fkdet/snf.hpp"

namespace fkdet {

/// Point of (R/Z)^Γ for finite Γ, coordinates numerators[i]/denominator in
/// [0, 1), indexed in full-group window order.
class TorusVector {
 public:
  TorusVector(GroupDescriptor G, std::vector<std::int64_t> numerators, std::int64_t denominator)
      : group_(std::move(G)), num_(std::move(numerators)), den_(denominator) {
    if (!group_.is_finite()) throw DomainError("torus vectors are indexed by a finite group");
    if (den_ < 1) throw DomainError("torus vector denominator must be >= 1");
    if (num_.size() != static_cast<std::size_t>(group_.order())) throw DomainError("torus vector has wrong length");
    for (auto& x : num_) x = detail::floor_mod(x, den_);
  }

  static TorusVector from_rationals(GroupDescriptor G, const std::vector<Rational>& coords) {
    Integer L = 1;
    for (const auto& c : coords) L = boost::multiprecision::lcm(L, boost::multiprecision::denominator(c));
    if (L > std::numeric_limits<std::int64_t>::max()) throw ScaleExceeded("torus vector denominator too large");
    std::vector<std::int64_t> num;
    for (const auto& c : coords)
      num.push_back(boost::multiprecision::numerator(Rational(c * L)).convert_to<std::int64_t>());
    return TorusVector(std::move(G), std::move(num), L.convert_to<std::int64_t>());
  }

  const GroupDescriptor& group() const { return group_; }
  std::size_t size() const { return num_.size(); }
  std::int64_t denominator() const { return den_; }
  std::int64_t numerator(std::size_t i) const { return num_[i]; }
  Rational coordinate(std::size_t i) const { return Rational(num_[i], den_); }

  /// Same point, any representation.
  friend bool operator==(const TorusVector& a, const TorusVector& b) {
    if (!(a.group_ == b.group_) || a.num_.size() != b.num_.size()) return false;
    for (std::size_t i = 0; i < a.num_.size(); ++i)
      if (static_cast<__int128>(a.num_[i]) * b.den_ != static_cast<__int128>(b.num_[i]) * a.den_) return false;
    return true;
  }

  /// Reduced-coordinate text `p/q` (or `0`).
  std::string coordinate_text(std::size_t i) const {
    const auto g = std::gcd(num_[i], den_);
    const auto p = num_[i] / g, q = den_ / g;
    return q == 1 ? std::to_string(p) : std::to_string(p) + "/" + std::to_string(q);
  }

 private:
  GroupDescriptor group_;
  std::vector<std::int64_t> num_;
  std::int64_t den_;
};

/// Right shift (γh)_{γ'} = h_{γ'γ}.
inline TorusVector shift(const TorusVector& h, const GroupElement& gamma) {
  const auto& G = h.group();
  require_member(G, gamma);
  const auto F = full_group(G);
  std::vector<std::int64_t> out(h.size());
  for (std::size_t i = 0; i < F.size(); ++i) out[i] = h.numerator(*F.position(multiply(G, F[i], gamma)));
  return TorusVector(G, std::move(out), h.denominator());
}

struct DualSolutionSet {
  GroupDescriptor group;
  std::vector<TorusVector> solutions;
  SnfResult snf;

  std::size_t size() const { return solutions.size(); }

  /// One row per solution, rational coordinates `p/q`, columns in group order.
  std::string to_csv() const {
    const auto F = full_group(group);
    std::string out;
    for (std::size_t i = 0; i < F.size(); ++i) {
      if (i) out += ',';
      out += "h[" + format_element(group, F[i]) + "]";
    }
    out += '\n';
    for (const auto& h : solutions) {
      for (std::size_t i = 0; i < h.size(); ++i) {
        if (i) out += ',';
        out += h.coordinate_text(i);
      }
      out += '\n';
    }
    return out;
  }
};

inline constexpr std::size_t kMaxDualSolutions = std::size_t{1} << 18;

/// X_f = {h ∈ (R/Z)^Γ : f·h = 0} for finite Γ via the Smith form of f_Γ.
inline DualSolutionSet solve_dual_finite(const IntegerElement& f, const GroupDescriptor& G,
                                         std::size_t max_solutions = kMaxDualSolutions) {
  detail::require_same_group(f.group(), G);
  if (!G.is_finite()) throw DomainError("solve_dual_finite needs a finite group");
  const auto M = compress(f, full_group(G)).to_exact();
  DualSolutionSet out{G, {}, snf(M, true)};
  const auto order = quotient_order(out.snf);
  if (!order) throw InfiniteSolutionSet("f_G is singular; X_f is infinite");
  if (*order > Integer(max_solutions))
    throw ScaleExceeded("|X_f| = " + order->str() + " exceeds the enumeration limit " + std::to_string(max_solutions));
  const std::size_t n = M.rows();
  const auto& d = out.snf.divisors;
  const std::int64_t D = d.back().convert_to<std::int64_t>();  // every d_i divides d_n
  // h·D = Vinv·(y·D) mod D with (y·D)_j = k_j·(D/d_j).
  std::vector<std::int64_t> Vmod(n * n), step(n), dj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Integer r = (*out.snf.Vinv)(i, j) % D;
      if (r < 0) r += D;
      Vmod[i * n + j] = r.convert_to<std::int64_t>();
    }
  for (std::size_t j = 0; j < n; ++j) {
    dj[j] = d[j].convert_to<std::int64_t>();
    step[j] = D / dj[j];
  }
  std::vector<std::int64_t> Mint(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Integer r = M(i, j) % D;
      if (r < 0) r += D;
      Mint[i * n + j] = r.convert_to<std::int64_t>();
    }
  std::vector<std::int64_t> k(n, 0), h(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) {
      __int128 s = 0;
      for (std::size_t j = 0; j < n; ++j) s += static_cast<__int128>(Vmod[i * n + j]) * (k[j] * step[j] % D);
      h[i] = static_cast<std::int64_t>(s % D);
    }
    // exact check: M·h ≡ 0 (mod D)
    for (std::size_t i = 0; i < n; ++i) {
      __int128 s = 0;
      for (std::size_t j = 0; j < n; ++j) s += static_cast<__int128>(Mint[i * n + j]) * h[j];
      if (s % D != 0) throw std::logic_error("dual solution failed verification");
    }
    out.solutions.emplace_back(G, h, D);
    std::size_t j = n;
    bool done = true;
    while (j > 0) {
      --j;
      if (k[j] + 1 < dj[j]) {
        ++k[j];
        done = false;
        break;
      }
      k[j] = 0;
    }
    if (done) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orbit pseudometrics

/// p ∈ {1, 2, ∞}; 0 encodes ∞.
enum class OrbitNorm { l1 = 1, l2 = 2, linf = 0 };

inline OrbitNorm parse_orbit_norm(std::string_view s) {
  if (s == "1") return OrbitNorm::l1;
  if (s == "2") return OrbitNorm::l2;
  if (s == "inf" || s == "infinity") return OrbitNorm::linf;
  throw DomainError("p must be 1, 2 or inf");
}

inline std::string to_string(OrbitNorm p) {
  return p == OrbitNorm::l1 ? "1" : p == OrbitNorm::l2 ? "2" : "inf";
}

namespace detail {

inline std::vector<std::size_t> subset_positions(const GroupDescriptor& G, std::span<const GroupElement> F) {
  if (F.empty()) throw DomainError("orbit distance needs a nonempty F");
  const auto W = full_group(G);
  std::vector<std::size_t> pos;
  for (const auto& g : F) {
    require_member(G, g);
    pos.push_back(*W.position(g));
  }
  return pos;
}

/// ϑ(x_γ, y_γ)·L as integers, L = lcm of the two denominators.
inline std::int64_t theta_scaled(const TorusVector& x, const TorusVector& y, std::size_t i, std::int64_t L) {
  const auto a = static_cast<__int128>(x.numerator(i)) * (L / x.denominator());
  const auto b = static_cast<__int128>(y.numerator(i)) * (L / y.denominator());
  auto d = a - b;
  if (d < 0) d = -d;
  d %= L;
  return static_cast<std::int64_t>(std::min<__int128>(d, L - d));
}

}  // namespace detail

/// d(x, y) = (1/|F| Σ_{γ∈F} ϑ(x_γ, y_γ)^p)^{1/p}, max for p = ∞, where
/// (γx)_e = x_γ and ϑ(s, t) = min_m |s − t − m|.
inline double orbit_distance(const TorusVector& x, const TorusVector& y, std::span<const GroupElement> F, OrbitNorm p) {
  if (!(x.group() == y.group())) throw DomainError("orbit distance of vectors over different groups");
  const auto pos = detail::subset_positions(x.group(), F);
  const std::int64_t L = std::lcm(x.denominator(), y.denominator());
  double acc = 0.0;
  for (auto i : pos) {
    const double t = static_cast<double>(detail::theta_scaled(x, y, i, L)) / static_cast<double>(L);
    if (p == OrbitNorm::linf)
      acc = std::max(acc, t);
    else
      acc += p == OrbitNorm::l1 ? t : t * t;
  }
  if (p == OrbitNorm::linf) return acc;
  acc /= static_cast<double>(pos.size());
  return p == OrbitNorm::l1 ? acc : std::sqrt(acc);
}

enum class CountMode { separated, spanning };

inline CountMode parse_count_mode(std::string_view s) {
  if (s == "separated") return CountMode::separated;
  if (s == "spanning") return CountMode::spanning;
  throw DomainError("mode must be separated or spanning");
}

struct ExtremalCount {
  std::size_t count = 0;
  std::size_t greedy = 0;  // greedy bound: lower for separated, upper for spanning
  std::size_t points = 0;
};

inline constexpr std::size_t kMaxExtremalPoints = 4096;

namespace detail {

/// Exact "d(x, y) > ε" on a solution set sharing one denominator.
class FarPredicate {
 public:
  FarPredicate(const DualSolutionSet& S, std::span<const GroupElement> F, OrbitNorm p, const Rational& eps)
      : S_(S), pos_(subset_positions(S.group, F)), p_(p) {
    if (eps < 0) throw DomainError("epsilon must be >= 0");
    L_ = 1;
    for (const auto& h : S.solutions) L_ = std::lcm(L_, h.denominator());
    // d > ε  ⇔  Σ t^p > floor(ε^p L^p |F|)  (t = ϑ·L integral); ∞: max t > floor(εL).
    const int e = p == OrbitNorm::l2 ? 2 : 1;
    Rational rhs = eps;
    Integer Lp = L_;
    if (e == 2) {
      rhs *= eps;
      Lp *= L_;
    }
    rhs *= Rational(Lp);
    if (p != OrbitNorm::linf) rhs *= static_cast<long long>(pos_.size());
    const Integer fl = boost::multiprecision::numerator(rhs) / boost::multiprecision::denominator(rhs);
    threshold_ = fl > Integer(std::numeric_limits<std::int64_t>::max()) ? std::numeric_limits<std::int64_t>::max()
                                                                         : fl.convert_to<std::int64_t>();
    if (static_cast<double>(L_) * static_cast<double>(L_) * static_cast<double>(pos_.size()) > 9e18)
      throw ScaleExceeded("denominators too large for exact distance comparison");
  }

  bool far(std::size_t a, std::size_t b) const {
    const auto& x = S_.solutions[a];
    const auto& y = S_.solutions[b];
    std::int64_t acc = 0;
    for (auto i : pos_) {
      const std::int64_t t = theta_scaled(x, y, i, L_);
      if (p_ == OrbitNorm::linf)
        acc = std::max(acc, t);
      else
        acc += p_ == OrbitNorm::l1 ? t : t * t;
    }
    return acc > threshold_;
  }

 private:
  const DualSolutionSet& S_;
  std::vector<std::size_t> pos_;
  OrbitNorm p_;
  std::int64_t L_;
  std::int64_t threshold_;
};

using Bits = std::vector<std::uint64_t>;

inline std::size_t popcount(const Bits& b) {
  std::size_t c = 0;
  for (auto w : b) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

/// Maximum clique, branch and bound with greedy-coloring bounds.
class MaxClique {
 public:
  explicit MaxClique(std::vector<Bits> adj) : adj_(std::move(adj)), n_(adj_.size()), words_((n_ + 63) / 64) {}

  std::size_t solve(std::size_t lower) {
    best_ = lower;
    Bits all(words_, 0);
    for (std::size_t i = 0; i < n_; ++i) all[i / 64] |= std::uint64_t{1} << (i % 64);
    expand(all, 0);
    return best_;
  }

 private:
  void expand(Bits P, std::size_t size) {
    std::vector<std::size_t> order, color;
    color_sort(P, order, color);
    for (std::size_t k = order.size(); k-- > 0;) {
      if (size + color[k] <= best_) return;
      const auto v = order[k];
      Bits next(words_);
      for (std::size_t w = 0; w < words_; ++w) next[w] = P[w] & adj_[v][w];
      if (popcount(next) == 0) {
        best_ = std::max(best_, size + 1);
      } else {
        expand(next, size + 1);
      }
      P[v / 64] &= ~(std::uint64_t{1} << (v % 64));
    }
  }

  // Vertices of P in increasing color order with the color count of each prefix.
  void color_sort(const Bits& P, std::vector<std::size_t>& order, std::vector<std::size_t>& color) const {
    Bits uncolored = P;
    std::size_t c = 0;
    while (popcount(uncolored) > 0) {
      ++c;
      Bits candidates = uncolored;
      for (std::size_t w = 0; w < words_; ++w)
        while (candidates[w]) {
          const auto bit = static_cast<std::size_t>(std::countr_zero(candidates[w]));
          const auto v = w * 64 + bit;
          candidates[w] &= candidates[w] - 1;
          uncolored[w] &= ~(std::uint64_t{1} << bit);
          for (std::size_t u = 0; u < words_; ++u) candidates[u] &= ~adj_[v][u];
          order.push_back(v);
          color.push_back(c);
        }
    }
  }

  std::vector<Bits> adj_;
  std::size_t n_, words_;
  std::size_t best_ = 0;
};

/// Minimum number of sets (balls) covering every point, exact search.
class SetCover {
 public:
  SetCover(std::vector<Bits> balls, std::size_t n, std::size_t node_budget)
      : balls_(std::move(balls)), n_(n), words_((n + 63) / 64), budget_(node_budget) {
    for (const auto& b : balls_) max_ball_ = std::max(max_ball_, popcount(b));
  }

  std::size_t solve(std::size_t upper) {
    best_ = upper;
    Bits uncovered(words_, 0);
    for (std::size_t i = 0; i < n_; ++i) uncovered[i / 64] |= std::uint64_t{1} << (i % 64);
    search(uncovered, 0);
    return best_;
  }

 private:
  void search(const Bits& uncovered, std::size_t used) {
    if (++nodes_ > budget_) throw ScaleExceeded("spanning-set search exceeded its node budget");
    const auto left = popcount(uncovered);
    if (left == 0) {
      best_ = std::min(best_, used);
      return;
    }
    if (used + (left + max_ball_ - 1) / max_ball_ >= best_) return;
    // Branch on the uncovered point with the fewest covering balls.
    std::size_t pick = 0, fewest = SIZE_MAX;
    for (std::size_t w = 0; w < words_; ++w) {
      auto bits = uncovered[w];
      while (bits) {
        const auto v = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
        bits &= bits - 1;
        std::size_t c = 0;
        for (std::size_t s = 0; s < n_; ++s) c += (balls_[s][v / 64] >> (v % 64)) & 1U;
        if (c < fewest) {
          fewest = c;
          pick = v;
        }
      }
    }
    std::vector<std::pair<std::size_t, std::size_t>> options;  // (-gain, ball)
    for (std::size_t s = 0; s < n_; ++s)
      if ((balls_[s][pick / 64] >> (pick % 64)) & 1U) {
        std::size_t gain = 0;
        for (std::size_t w = 0; w < words_; ++w) gain += static_cast<std::size_t>(std::popcount(uncovered[w] & balls_[s][w]));
        options.emplace_back(gain, s);
      }
    std::stable_sort(options.begin(), options.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [gain, s] : options) {
      Bits next(words_);
      for (std::size_t w = 0; w < words_; ++w) next[w] = uncovered[w] & ~balls_[s][w];
      search(next, used + 1);
    }
  }

  std::vector<Bits> balls_;
  std::size_t n_, words_, budget_;
  std::size_t max_ball_ = 1;
  std::size_t best_ = 0;
  std::size_t nodes_ = 0;
};

}  // namespace detail

/// Separated: largest subset pairwise farther than ε. Spanning: smallest
/// subset within ε of every point. Both exact at |S| <= 4096.
inline ExtremalCount extremal_count(const DualSolutionSet& S, std::span<const GroupElement> F, OrbitNorm p,
                                    const Rational& eps, CountMode mode, std::size_t node_budget = 50'000'000) {
  const std::size_t n = S.solutions.size();
  if (n == 0) throw DomainError("empty solution set");
  if (n > kMaxExtremalPoints)
    throw ScaleExceeded(std::to_string(n) + " points exceed the exact-count limit " +
                        std::to_string(kMaxExtremalPoints));
  const detail::FarPredicate pred(S, F, p, eps);
  const std::size_t words = (n + 63) / 64;
  std::vector<detail::Bits> far(n, detail::Bits(words, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (pred.far(i, j)) {
        far[i][j / 64] |= std::uint64_t{1} << (j % 64);
        far[j][i / 64] |= std::uint64_t{1} << (i % 64);
      }
  ExtremalCount out;
  out.points = n;
  if (mode == CountMode::separated) {
    // greedy seed in index order
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < n; ++i)
      if (std::all_of(chosen.begin(), chosen.end(), [&](auto c) { return (far[i][c / 64] >> (c % 64)) & 1U; }))
        chosen.push_back(i);
    out.greedy = chosen.size();
    out.count = detail::MaxClique(std::move(far)).solve(out.greedy);
    return out;
  }
  std::vector<detail::Bits> balls(n, detail::Bits(words, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t w = 0; w < words; ++w) balls[i][w] = ~far[i][w];
  if (n % 64)
    for (auto& b : balls) b.back() &= (std::uint64_t{1} << (n % 64)) - 1;
  // greedy cover for the initial upper bound
  detail::Bits uncovered(words, 0);
  for (std::size_t i = 0; i < n; ++i) uncovered[i / 64] |= std::uint64_t{1} << (i % 64);
  std::size_t greedy = 0;
  while (detail::popcount(uncovered) > 0) {
    std::size_t best = 0, gain = 0;
    for (std::size_t s = 0; s < n; ++s) {
      std::size_t g = 0;
      for (std::size_t w = 0; w < words; ++w) g += static_cast<std::size_t>(std::popcount(uncovered[w] & balls[s][w]));
      if (g > gain) {
        gain = g;
        best = s;
      }
    }
    for (std::size_t w = 0; w < words; ++w) uncovered[w] &= ~balls[best][w];
    ++greedy;
  }
  out.greedy = greedy;
  out.count = detail::SetCover(std::move(balls), n, node_budget).solve(greedy);
  return out;
}

// ---------------------------------------------------------------------------
// Entropy on finite groups

struct EntropyEstimate {
  GroupDescriptor group;
  double value = 0.0;  // (1/|Γ|)·log |Z Γ / f Z Γ|
  Integer quotient_order;
  Integer determinant;                         // |det f_Γ|, exact
  std::optional<std::size_t> solution_count;   // |X_f| when enumerated
  double logabsdet = 0.0;                      // floating-point log|det f_Γ|
};

/// (1/|Γ|)·log of |Z^Γ / f_Γ Z^Γ| with the |X_f| and |det| cross-checks.
inline EntropyEstimate entropy_finite_group(const IntegerElement& f, const GroupDescriptor& G,
                                            std::size_t max_solutions = kMaxDualSolutions) {
  detail::require_same_group(f.group(), G);
  if (!G.is_finite()) throw DomainError("entropy_finite_group needs a finite group");
  const auto C = compress(f, full_group(G));
  const auto M = C.to_exact();
  const auto order = quotient_order(snf(M));
  if (!order) throw InfiniteSolutionSet("f_G is singular; the entropy is infinite");
  EntropyEstimate out{G, 0.0, *order, boost::multiprecision::abs(bareiss_determinant(M)), std::nullopt, logabsdet(C)};
  if (out.determinant != out.quotient_order) throw std::logic_error("|det f_G| differs from the quotient order");
  if (out.quotient_order <= Integer(max_solutions)) {
    out.solution_count = solve_dual_finite(f, G, max_solutions).size();
    if (Integer(*out.solution_count) != out.quotient_order) throw std::logic_error("|X_f| differs from the quotient order");
  }
  // log of an exact integer: split off a power of two so huge orders stay finite.
  Integer q = out.quotient_order;
  const auto bits = static_cast<long>(boost::multiprecision::msb(q));
  const long drop = std::max(0L, bits - 60);
  const double mant = Integer(q >> drop).convert_to<double>();
  out.value = (std::log(mant) + static_cast<double>(drop) * std::numbers::ln2) / static_cast<double>(G.order());
  return out;
}

// ---------------------------------------------------------------------------
// Lattice balls

/// #{x ∈ Z^k : ‖x‖₂ <= R}; k <= 6, 0 <= R <= 40.
inline std::uint64_t count_lattice_ball(int k, const Rational& R) {
  if (k < 1 || k > 6) throw ScaleExceeded("lattice-ball count supports 1 <= k <= 6");
  if (R < 0) throw DomainError("radius must be >= 0");
  if (R > 40) throw ScaleExceeded("lattice-ball count supports R <= 40");
  const Rational R2 = R * R;
  const auto budget = static_cast<std::int64_t>(boost::multiprecision::numerator(R2) / boost::multiprecision::denominator(R2));
  std::map<std::pair<int, std::int64_t>, std::uint64_t> memo;
  const auto rec = [&](auto&& self, int dim, std::int64_t b) -> std::uint64_t {
    if (dim == 0) return 1;
    auto it = memo.find({dim, b});
    if (it != memo.end()) return it->second;
    std::uint64_t total = 0;
    for (std::int64_t x = 0; x * x <= b; ++x) total += (x == 0 ? 1 : 2) * self(self, dim - 1, b - x * x);
    memo[{dim, b}] = total;
    return total;
  };
  return rec(rec, k, budget);
}

inline std::uint64_t count_lattice_ball(int k, double R) { return count_lattice_ball(k, Rational(R)); }

/// π^{k/2}(R + √k)^k / Γ(k/2 + 1).
inline double lattice_ball_volume_bound(int k, double R) {
  return std::pow(std::numbers::pi, 0.5 * k) * std::pow(R + std::sqrt(static_cast<double>(k)), k) /
         std::tgamma(0.5 * k + 1.0);
}

}  // namespace fkdet
