#pragma once

#include <boost/container/small_vector.hpp>
#include <boost/container_hash/hash.hpp>

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fkdet/errors.hpp"
#include "fkdet/scalar.hpp"

namespace fkdet {

enum class GroupFamily { integer_lattice, heisenberg3, finite_cyclic_product, free_group_rank2 };

/// One of the supported concrete groups. Compares equal iff family and
/// parameters agree.
class GroupDescriptor {
 public:
  static GroupDescriptor lattice(int dim) {
    if (dim < 1) throw DomainError("lattice dimension must be >= 1");
    GroupDescriptor g(GroupFamily::integer_lattice);
    g.dim_ = dim;
    return g;
  }
  static GroupDescriptor heisenberg() { return GroupDescriptor(GroupFamily::heisenberg3); }
  static GroupDescriptor cyclic_product(std::vector<std::int64_t> moduli) {
    if (moduli.empty()) throw DomainError("finite cyclic product needs at least one modulus");
    for (auto m : moduli)
      if (m < 2) throw DomainError("every modulus must be >= 2");
    GroupDescriptor g(GroupFamily::finite_cyclic_product);
    g.moduli_ = std::move(moduli);
    return g;
  }
  static GroupDescriptor free_rank2() { return GroupDescriptor(GroupFamily::free_group_rank2); }

  /// Accepts `Z^d` (and `Z` for d = 1), `H3`, `Zmod:m1xm2x...`, `F2`.
  static GroupDescriptor parse(std::string_view s) {
    const auto to_int = [&](std::string_view t) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw DomainError("unknown group descriptor '" + std::string(s) + "'");
      return v;
    };
    if (s == "H3") return heisenberg();
    if (s == "F2") return free_rank2();
    if (s == "Z") return lattice(1);
    if (s.starts_with("Z^")) {
      const auto d = to_int(s.substr(2));
      if (d < 1 || d > 64) throw DomainError("unsupported lattice dimension in '" + std::string(s) + "'");
      return lattice(static_cast<int>(d));
    }
    if (s.starts_with("Zmod:")) {
      std::vector<std::int64_t> moduli;
      std::string_view rest = s.substr(5);
      while (true) {
        const auto x = rest.find('x');
        moduli.push_back(to_int(rest.substr(0, x)));
        if (x == std::string_view::npos) break;
        rest.remove_prefix(x + 1);
      }
      return cyclic_product(std::move(moduli));
    }
    throw DomainError("unknown group descriptor '" + std::string(s) + "'");
  }

  std::string str() const {
    switch (family_) {
      case GroupFamily::integer_lattice: return "Z^" + std::to_string(dim_);
      case GroupFamily::heisenberg3: return "H3";
      case GroupFamily::free_group_rank2: return "F2";
      case GroupFamily::finite_cyclic_product: {
        std::string out = "Zmod:";
        for (std::size_t i = 0; i < moduli_.size(); ++i) {
          if (i) out += 'x';
          out += std::to_string(moduli_[i]);
        }
        return out;
      }
    }
    return "?";
  }

  GroupFamily family() const noexcept { return family_; }
  int dimension() const noexcept { return dim_; }
  const std::vector<std::int64_t>& moduli() const noexcept { return moduli_; }

  bool is_lattice() const noexcept { return family_ == GroupFamily::integer_lattice; }
  bool is_heisenberg() const noexcept { return family_ == GroupFamily::heisenberg3; }
  bool is_finite() const noexcept { return family_ == GroupFamily::finite_cyclic_product; }
  bool is_free() const noexcept { return family_ == GroupFamily::free_group_rank2; }
  bool is_amenable() const noexcept { return !is_free(); }
  bool is_abelian() const noexcept { return is_lattice() || is_finite(); }

  /// Number of coordinates; 0 for the free group (variable length words).
  std::size_t arity() const noexcept {
    switch (family_) {
      case GroupFamily::integer_lattice: return static_cast<std::size_t>(dim_);
      case GroupFamily::heisenberg3: return 3;
      case GroupFamily::finite_cyclic_product: return moduli_.size();
      case GroupFamily::free_group_rank2: return 0;
    }
    return 0;
  }

  /// |Γ| for finite groups.
  std::int64_t order() const {
    if (!is_finite()) throw DomainError(str() + " is infinite");
    std::int64_t n = 1;
    for (auto m : moduli_) n *= m;
    return n;
  }

  friend bool operator==(const GroupDescriptor&, const GroupDescriptor&) = default;

 private:
  explicit GroupDescriptor(GroupFamily f) : family_(f) {}

  GroupFamily family_;
  int dim_ = 0;
  std::vector<std::int64_t> moduli_;
};

/// Canonical coordinates of a group element. Free-group words are stored as
/// letters ±1 (a^{±1}) and ±2 (b^{±1}).
class GroupElement {
 public:
  using Coords = boost::container::small_vector<std::int64_t, 3>;

  GroupElement() = default;
  explicit GroupElement(Coords c) : coords_(std::move(c)) {}
  GroupElement(std::initializer_list<std::int64_t> c) : coords_(c.begin(), c.end()) {}
  explicit GroupElement(std::span<const std::int64_t> c) : coords_(c.begin(), c.end()) {}

  std::span<const std::int64_t> coords() const noexcept { return {coords_.data(), coords_.size()}; }
  std::size_t size() const noexcept { return coords_.size(); }
  std::int64_t operator[](std::size_t i) const { return coords_[i]; }

  friend bool operator==(const GroupElement& a, const GroupElement& b) { return a.coords_ == b.coords_; }
  friend std::strong_ordering operator<=>(const GroupElement& a, const GroupElement& b) {
    return std::lexicographical_compare_three_way(a.coords_.begin(), a.coords_.end(), b.coords_.begin(),
                                                  b.coords_.end());
  }

  std::size_t hash() const noexcept { return boost::hash_range(coords_.begin(), coords_.end()); }

 private:
  Coords coords_;
};

struct GroupElementHash {
  std::size_t operator()(const GroupElement& g) const noexcept { return g.hash(); }
};

using ElementSet = std::unordered_set<GroupElement, GroupElementHash>;

namespace letters {
inline constexpr std::int64_t a = 1;
inline constexpr std::int64_t b = 2;
}  // namespace letters

inline GroupElement identity(const GroupDescriptor& G) {
  return GroupElement(GroupElement::Coords(G.arity(), 0));
}

inline bool is_identity(const GroupElement& g) {
  return std::all_of(g.coords().begin(), g.coords().end(), [](auto c) { return c == 0; });
}

namespace detail {

inline std::int64_t floor_mod(std::int64_t x, std::int64_t m) {
  const auto r = x % m;
  return r < 0 ? r + m : r;
}

inline void reduce_word(GroupElement::Coords& w) {
  GroupElement::Coords out;
  out.reserve(w.size());
  for (auto l : w) {
    if (!out.empty() && out.back() == -l)
      out.pop_back();
    else
      out.push_back(l);
  }
  w = std::move(out);
}

}  // namespace detail

/// Brings raw coordinates into canonical form (residues reduced, words freely
/// reduced). Throws on wrong arity or invalid letters.
inline GroupElement canonicalize(const GroupDescriptor& G, std::span<const std::int64_t> raw) {
  GroupElement::Coords c(raw.begin(), raw.end());
  if (G.is_free()) {
    for (auto l : c)
      if (l != 1 && l != -1 && l != 2 && l != -2) throw DomainError("invalid free-group letter");
    detail::reduce_word(c);
    return GroupElement(std::move(c));
  }
  if (c.size() != G.arity())
    throw DomainError("element has " + std::to_string(c.size()) + " coordinates, " + G.str() + " needs " +
                      std::to_string(G.arity()));
  if (G.is_finite())
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = detail::floor_mod(c[i], G.moduli()[i]);
  return GroupElement(std::move(c));
}

inline GroupElement canonicalize(const GroupDescriptor& G, std::initializer_list<std::int64_t> raw) {
  return canonicalize(G, std::span<const std::int64_t>(raw.begin(), raw.size()));
}

inline bool is_member(const GroupDescriptor& G, const GroupElement& g) {
  if (G.is_free()) {
    const auto w = g.coords();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto l = w[i];
      if (l != 1 && l != -1 && l != 2 && l != -2) return false;
      if (i && w[i - 1] == -l) return false;
    }
    return true;
  }
  if (g.size() != G.arity()) return false;
  if (G.is_finite())
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g[i] < 0 || g[i] >= G.moduli()[i]) return false;
  return true;
}

inline void require_member(const GroupDescriptor& G, const GroupElement& g) {
  if (!is_member(G, g)) throw DomainError("element is not a canonical member of " + G.str());
}

/// Group law. Heisenberg: (x1,y1,z1)(x2,y2,z2) = (x1+x2, y1+y2, z1+z2+x1*y2).
/// Inputs must already be canonical members; use `multiply_checked` otherwise.
inline GroupElement multiply(const GroupDescriptor& G, const GroupElement& g, const GroupElement& h) {
  switch (G.family()) {
    case GroupFamily::integer_lattice: {
      GroupElement::Coords c(g.size());
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = g[i] + h[i];
      return GroupElement(std::move(c));
    }
    case GroupFamily::heisenberg3:
      return GroupElement{g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[0] * h[1]};
    case GroupFamily::finite_cyclic_product: {
      GroupElement::Coords c(g.size());
      const auto& m = G.moduli();
      for (std::size_t i = 0; i < c.size(); ++i) {
        auto s = g[i] + h[i];
        c[i] = s >= m[i] ? s - m[i] : s;
      }
      return GroupElement(std::move(c));
    }
    case GroupFamily::free_group_rank2: {
      const auto a = g.coords();
      const auto b = h.coords();
      std::size_t cancel = 0;
      while (cancel < a.size() && cancel < b.size() && a[a.size() - 1 - cancel] == -b[cancel]) ++cancel;
      GroupElement::Coords c;
      c.reserve(a.size() + b.size() - 2 * cancel);
      c.insert(c.end(), a.begin(), a.end() - static_cast<std::ptrdiff_t>(cancel));
      c.insert(c.end(), b.begin() + static_cast<std::ptrdiff_t>(cancel), b.end());
      return GroupElement(std::move(c));
    }
  }
  return {};
}

inline GroupElement multiply_checked(const GroupDescriptor& G, const GroupElement& g, const GroupElement& h) {
  require_member(G, g);
  require_member(G, h);
  return multiply(G, g, h);
}

inline GroupElement inverse(const GroupDescriptor& G, const GroupElement& g) {
  switch (G.family()) {
    case GroupFamily::integer_lattice: {
      GroupElement::Coords c(g.size());
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = -g[i];
      return GroupElement(std::move(c));
    }
    case GroupFamily::heisenberg3:
      return GroupElement{-g[0], -g[1], -g[2] + g[0] * g[1]};
    case GroupFamily::finite_cyclic_product: {
      GroupElement::Coords c(g.size());
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = g[i] == 0 ? 0 : G.moduli()[i] - g[i];
      return GroupElement(std::move(c));
    }
    case GroupFamily::free_group_rank2: {
      GroupElement::Coords c(g.coords().rbegin(), g.coords().rend());
      for (auto& l : c) l = -l;
      return GroupElement(std::move(c));
    }
  }
  return {};
}

/// Free-group word text: letters `a`, `b`, `a^-1`, `b^-1` (also `a^k`).
inline std::string format_word(const GroupElement& w) {
  std::string out;
  for (auto l : w.coords()) {
    if (!out.empty()) out += ' ';
    out += (l == 1 || l == -1) ? 'a' : 'b';
    if (l < 0) out += "^-1";
  }
  return out;
}

inline std::string format_element(const GroupDescriptor& G, const GroupElement& g) {
  if (G.is_free()) return format_word(g);
  std::string out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(g[i]);
  }
  return out;
}

/// Finite ordered subset of Γ with a position index.
class FolnerWindow {
 public:
  FolnerWindow(GroupDescriptor G, std::vector<GroupElement> elements, std::optional<std::int64_t> parameter = {})
      : group_(std::move(G)), elements_(std::move(elements)), parameter_(parameter) {
    index_.reserve(elements_.size());
    for (std::size_t i = 0; i < elements_.size(); ++i) {
      require_member(group_, elements_[i]);
      if (!index_.emplace(elements_[i], i).second) throw DomainError("window elements must be distinct");
    }
  }

  const GroupDescriptor& group() const noexcept { return group_; }
  const std::vector<GroupElement>& elements() const noexcept { return elements_; }
  std::size_t size() const noexcept { return elements_.size(); }
  bool empty() const noexcept { return elements_.empty(); }
  const GroupElement& operator[](std::size_t i) const { return elements_[i]; }

  /// Size parameter n for standard windows.
  std::optional<std::int64_t> parameter() const noexcept { return parameter_; }

  std::optional<std::size_t> position(const GroupElement& g) const {
    auto it = index_.find(g);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(const GroupElement& g) const { return index_.contains(g); }

 private:
  GroupDescriptor group_;
  std::vector<GroupElement> elements_;
  std::unordered_map<GroupElement, std::size_t, GroupElementHash> index_;
  std::optional<std::int64_t> parameter_;
};

namespace detail {

/// Lexicographic enumeration of the integer box ∏[lo_i, hi_i].
inline std::vector<GroupElement> box_elements(std::span<const std::int64_t> lo, std::span<const std::int64_t> hi) {
  std::vector<GroupElement> out;
  const std::size_t d = lo.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (hi[i] < lo[i]) return out;
    total *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
  }
  out.reserve(total);
  GroupElement::Coords cur(lo.begin(), lo.end());
  while (true) {
    out.emplace_back(cur);
    std::size_t i = d;
    while (i > 0) {
      --i;
      if (cur[i] < hi[i]) {
        ++cur[i];
        break;
      }
      cur[i] = lo[i];
      if (i == 0) return out;
    }
    if (d == 0) return out;
  }
}

}  // namespace detail

/// Lattice window ∏[lo_i, hi_i] in lexicographic order.
inline FolnerWindow box_window(const GroupDescriptor& G, std::vector<std::int64_t> lo, std::vector<std::int64_t> hi) {
  if (!G.is_lattice() && !G.is_heisenberg()) throw UnsupportedFamily("box windows need Z^d or H3");
  if (lo.size() != G.arity() || hi.size() != G.arity()) throw DomainError("box bounds have wrong arity");
  return FolnerWindow(G, detail::box_elements(lo, hi));
}

/// Standard Følner window: lattice box [-n,n]^d; Heisenberg
/// {|x|<=n, |y|<=n, |z|<=n^2}; finite group: the whole group. Lexicographic order.
inline FolnerWindow folner_window(const GroupDescriptor& G, std::int64_t n) {
  if (n < 1) throw DomainError("window parameter n must be >= 1");
  switch (G.family()) {
    case GroupFamily::integer_lattice: {
      std::vector<std::int64_t> lo(G.arity(), -n), hi(G.arity(), n);
      return FolnerWindow(G, detail::box_elements(lo, hi), n);
    }
    case GroupFamily::heisenberg3: {
      std::vector<std::int64_t> lo{-n, -n, -n * n}, hi{n, n, n * n};
      return FolnerWindow(G, detail::box_elements(lo, hi), n);
    }
    case GroupFamily::finite_cyclic_product: {
      std::vector<std::int64_t> lo(G.arity(), 0), hi;
      for (auto m : G.moduli()) hi.push_back(m - 1);
      return FolnerWindow(G, detail::box_elements(lo, hi), n);
    }
    case GroupFamily::free_group_rank2:
      throw UnsupportedFamily("F2 is not amenable; it has no Følner windows");
  }
  throw UnsupportedFamily("unknown family");
}

/// The whole finite group as a window.
inline FolnerWindow full_group(const GroupDescriptor& G) {
  if (!G.is_finite()) throw DomainError(G.str() + " is not finite");
  return folner_window(G, 1);
}

/// Exact |KF Δ F| / |F|.
inline Rational boundary_ratio(const FolnerWindow& F, std::span<const GroupElement> K) {
  if (K.empty()) throw DomainError("boundary_ratio needs a nonempty K");
  if (F.empty()) throw DomainError("boundary_ratio needs a nonempty window");
  const auto& G = F.group();
  for (const auto& k : K) require_member(G, k);
  ElementSet KF;
  KF.reserve(F.size() * 2);
  for (const auto& k : K)
    for (const auto& g : F.elements()) KF.insert(multiply(G, k, g));
  std::size_t inside = 0;
  for (const auto& x : KF)
    if (F.contains(x)) ++inside;
  const std::size_t sym = (KF.size() - inside) + (F.size() - inside);
  return Rational(Integer(sym), Integer(F.size()));
}

/// Same quantity for the standard window `folner_window(G, n)` without
/// materializing it: the box is a union of columns along the last coordinate
/// and left translation maps columns to shifted columns.
inline Rational boundary_ratio_standard(const GroupDescriptor& G, std::int64_t n, std::span<const GroupElement> K) {
  if (K.empty()) throw DomainError("boundary_ratio needs a nonempty K");
  for (const auto& k : K) require_member(G, k);
  if (G.is_finite()) return Rational(0);
  if (G.is_free()) throw UnsupportedFamily("F2 is not amenable; it has no Følner windows");
  if (n < 1) throw DomainError("window parameter n must be >= 1");

  const std::size_t d = G.arity();
  const std::size_t pd = d - 1;  // prefix dimension
  const std::int64_t L = G.is_heisenberg() ? n * n : n;
  std::int64_t reach = 0;
  for (const auto& k : K)
    for (std::size_t i = 0; i < pd; ++i) reach = std::max<std::int64_t>(reach, std::abs(k[i]));

  const auto in_box = [&](std::span<const std::int64_t> p) {
    return std::all_of(p.begin(), p.end(), [&](auto c) { return c >= -n && c <= n; });
  };

  Integer kf_size = 0, kf_inside = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> spans;
  std::vector<std::int64_t> lo(pd, -n - reach), hi(pd, n + reach);
  std::vector<std::int64_t> src(pd);
  GroupElement::Coords target(lo.begin(), lo.end());
  while (true) {
    spans.clear();
    for (const auto& k : K) {
      for (std::size_t i = 0; i < pd; ++i) src[i] = target[i] - k[i];
      if (!in_box(src)) continue;
      std::int64_t shift = k[pd];
      if (G.is_heisenberg()) shift += k[0] * src[1];
      spans.emplace_back(-L + shift, L + shift);
    }
    if (!spans.empty()) {
      std::sort(spans.begin(), spans.end());
      const bool target_in_box = in_box({target.data(), target.size()});
      std::int64_t cur_lo = spans[0].first, cur_hi = spans[0].second;
      const auto flush = [&] {
        kf_size += cur_hi - cur_lo + 1;
        if (target_in_box) {
          const auto a = std::max(cur_lo, -L), b = std::min(cur_hi, L);
          if (a <= b) kf_inside += b - a + 1;
        }
      };
      for (std::size_t i = 1; i < spans.size(); ++i) {
        if (spans[i].first <= cur_hi + 1) {
          cur_hi = std::max(cur_hi, spans[i].second);
        } else {
          flush();
          cur_lo = spans[i].first;
          cur_hi = spans[i].second;
        }
      }
      flush();
    }
    // advance the prefix odometer
    std::size_t i = pd;
    bool done = true;
    while (i > 0) {
      --i;
      if (target[i] < hi[i]) {
        ++target[i];
        done = false;
        break;
      }
      target[i] = lo[i];
    }
    if (done) break;
  }
  Integer f_size = 2 * L + 1;
  for (std::size_t i = 0; i < pd; ++i) f_size *= 2 * n + 1;
  const Integer sym = kf_size + f_size - 2 * kf_inside;
  return Rational(sym, f_size);
}

}  // namespace fkdet
