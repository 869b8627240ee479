#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "fkdet/errors.hpp"
#include "fkdet/groups.hpp"
#include "fkdet/scalar.hpp"

namespace fkdet {

/// Finitely supported coefficient map Γ → S, kept sorted by element with no
/// stored zeros.
template <RingScalar S>
class RingElement {
 public:
  using Scalar = S;
  using Term = std::pair<GroupElement, S>;

  explicit RingElement(GroupDescriptor G) : group_(std::move(G)) {}

  /// Canonicalizes every element, merges duplicates and drops zeros.
  static RingElement from_terms(GroupDescriptor G, std::vector<Term> terms) {
    for (auto& [g, c] : terms) g = canonicalize(G, g.coords());
    return from_canonical(std::move(G), std::move(terms));
  }

  /// Terms whose elements are already canonical members of G.
  static RingElement from_canonical(GroupDescriptor G, std::vector<Term> terms) {
    RingElement out(std::move(G));
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.first < b.first; });
    for (auto& t : terms) {
      if (!out.terms_.empty() && out.terms_.back().first == t.first)
        out.terms_.back().second += t.second;
      else
        out.terms_.push_back(std::move(t));
    }
    out.prune();
    return out;
  }

  static RingElement identity(GroupDescriptor G, S c = S(1)) {
    auto e = fkdet::identity(G);
    return monomial(std::move(G), std::move(e), std::move(c));
  }

  static RingElement monomial(GroupDescriptor G, GroupElement g, S c = S(1)) {
    std::vector<Term> t;
    t.emplace_back(std::move(g), std::move(c));
    return from_terms(std::move(G), std::move(t));
  }

  const GroupDescriptor& group() const noexcept { return group_; }
  std::span<const Term> terms() const noexcept { return terms_; }
  std::size_t support_size() const noexcept { return terms_.size(); }
  bool is_zero() const noexcept { return terms_.empty(); }
  static constexpr ScalarDomain domain() { return scalar_domain_v<S>; }

  const S* find(const GroupElement& g) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), g,
                               [](const Term& t, const GroupElement& x) { return t.first < x; });
    if (it == terms_.end() || it->first != g) return nullptr;
    return &it->second;
  }

  S coefficient(const GroupElement& g) const {
    const S* c = find(g);
    return c ? *c : S(0);
  }

  friend bool operator==(const RingElement& a, const RingElement& b) {
    return a.group_ == b.group_ && a.terms_ == b.terms_;
  }

 private:
  void prune() {
    std::erase_if(terms_, [](const Term& t) { return ScalarTraits<S>::is_zero(t.second); });
  }

  GroupDescriptor group_;
  std::vector<Term> terms_;
};

using IntegerElement = RingElement<Integer>;
using RationalElement = RingElement<Rational>;
using ComplexElement = RingElement<Complex>;

namespace detail {

inline void require_same_group(const GroupDescriptor& a, const GroupDescriptor& b) {
  if (!(a == b)) throw DomainError("descriptor mismatch: " + a.str() + " vs " + b.str());
}

template <class S>
using Accumulator = std::unordered_map<GroupElement, S, GroupElementHash>;

template <class S>
RingElement<S> from_accumulator(const GroupDescriptor& G, Accumulator<S>&& acc) {
  std::vector<typename RingElement<S>::Term> terms;
  terms.reserve(acc.size());
  for (auto& [g, c] : acc)
    if (!ScalarTraits<S>::is_zero(c)) terms.emplace_back(g, std::move(c));
  return RingElement<S>::from_canonical(G, std::move(terms));
}

}  // namespace detail

template <class S>
RingElement<S> add(const RingElement<S>& f, const RingElement<S>& g) {
  detail::require_same_group(f.group(), g.group());
  std::vector<typename RingElement<S>::Term> terms(f.terms().begin(), f.terms().end());
  terms.insert(terms.end(), g.terms().begin(), g.terms().end());
  return RingElement<S>::from_canonical(f.group(), std::move(terms));
}

template <class S>
RingElement<S> scale(const RingElement<S>& f, const S& c) {
  std::vector<typename RingElement<S>::Term> terms;
  terms.reserve(f.support_size());
  for (const auto& [g, x] : f.terms()) terms.emplace_back(g, x * c);
  return RingElement<S>::from_canonical(f.group(), std::move(terms));
}

template <class S>
RingElement<S> negate(const RingElement<S>& f) {
  return scale(f, S(-1));
}

template <class S>
RingElement<S> subtract(const RingElement<S>& f, const RingElement<S>& g) {
  return add(f, negate(g));
}

/// (fg)_{γ'} = Σ_γ f_γ g_{γ⁻¹γ'}, iterating supp(f) × supp(g).
template <class S>
RingElement<S> convolve(const RingElement<S>& f, const RingElement<S>& g) {
  detail::require_same_group(f.group(), g.group());
  const auto& G = f.group();
  detail::Accumulator<S> acc;
  acc.reserve(f.support_size() * g.support_size());
  for (const auto& [a, x] : f.terms())
    for (const auto& [b, y] : g.terms()) acc[multiply(G, a, b)] += x * y;
  return detail::from_accumulator(G, std::move(acc));
}

template <class S>
RingElement<S> operator+(const RingElement<S>& f, const RingElement<S>& g) {
  return add(f, g);
}
template <class S>
RingElement<S> operator-(const RingElement<S>& f, const RingElement<S>& g) {
  return subtract(f, g);
}
template <class S>
RingElement<S> operator*(const RingElement<S>& f, const RingElement<S>& g) {
  return convolve(f, g);
}

/// (f*)_γ = conj(f_{γ⁻¹}).
template <class S>
RingElement<S> adjoint(const RingElement<S>& f) {
  std::vector<typename RingElement<S>::Term> terms;
  terms.reserve(f.support_size());
  for (const auto& [g, c] : f.terms()) terms.emplace_back(inverse(f.group(), g), ScalarTraits<S>::conj(c));
  return RingElement<S>::from_canonical(f.group(), std::move(terms));
}

template <class S>
bool is_self_adjoint(const RingElement<S>& f) {
  return adjoint(f) == f;
}

template <class S>
typename ScalarTraits<S>::Magnitude l1_norm(const RingElement<S>& f) {
  typename ScalarTraits<S>::Magnitude n(0);
  for (const auto& [g, c] : f.terms()) n += ScalarTraits<S>::abs(c);
  return n;
}

/// K_f = supp(f) ∪ supp(f*) ∪ {e}, sorted.
template <class S>
std::vector<GroupElement> support_kernel(const RingElement<S>& f) {
  const auto& G = f.group();
  std::vector<GroupElement> K;
  K.reserve(2 * f.support_size() + 1);
  K.push_back(identity(G));
  for (const auto& [g, c] : f.terms()) {
    K.push_back(g);
    K.push_back(inverse(G, g));
  }
  std::sort(K.begin(), K.end());
  K.erase(std::unique(K.begin(), K.end()), K.end());
  return K;
}

template <class S>
struct NormAndKernel {
  typename ScalarTraits<S>::Magnitude norm;
  std::vector<GroupElement> kernel;
};

template <class S>
NormAndKernel<S> l1_norm_and_kernel(const RingElement<S>& f) {
  return {l1_norm(f), support_kernel(f)};
}

/// Canonical trace: the coefficient at e_Γ.
template <class S>
S trace_identity(const RingElement<S>& f) {
  return f.coefficient(identity(f.group()));
}

/// tr(ab) = Σ_γ a_γ b_{γ⁻¹}, without forming the product.
template <class S>
S trace_of_product(const RingElement<S>& a, const RingElement<S>& b) {
  detail::require_same_group(a.group(), b.group());
  S sum(0);
  const auto& small = a.support_size() <= b.support_size() ? a : b;
  const auto& large = a.support_size() <= b.support_size() ? b : a;
  for (const auto& [g, x] : small.terms())
    if (const S* y = large.find(inverse(a.group(), g))) sum += x * *y;
  return sum;
}

template <class S>
RingElement<S> power(const RingElement<S>& f, std::int64_t k) {
  if (k < 0) throw DomainError("power exponent must be >= 0");
  auto result = RingElement<S>::identity(f.group());
  auto base = f;
  while (k > 0) {
    if (k & 1) result = convolve(result, base);
    k >>= 1;
    if (k) base = convolve(base, base);
  }
  return result;
}

template <class From, class To, class Fn>
RingElement<To> map_coefficients(const RingElement<From>& f, Fn fn) {
  std::vector<typename RingElement<To>::Term> terms;
  terms.reserve(f.support_size());
  for (const auto& [g, c] : f.terms()) terms.emplace_back(g, fn(c));
  return RingElement<To>::from_canonical(f.group(), std::move(terms));
}

template <class S>
RingElement<Complex> to_complex(const RingElement<S>& f) {
  return map_coefficients<S, Complex>(f, [](const S& c) { return ScalarTraits<S>::to_complex(c); });
}

inline RationalElement to_rational(const IntegerElement& f) {
  return map_coefficients<Integer, Rational>(f, [](const Integer& c) { return Rational(c); });
}

inline std::optional<IntegerElement> to_integer(const RationalElement& f) {
  for (const auto& [g, c] : f.terms())
    if (boost::multiprecision::denominator(c) != 1) return std::nullopt;
  return map_coefficients<Rational, Integer>(f,
                                             [](const Rational& c) { return boost::multiprecision::numerator(c); });
}

/// Image of f ∈ S[Z^d] in S[(Z/N)^d].
template <class S>
RingElement<S> reduce_to_quotient(const RingElement<S>& f, std::int64_t N) {
  if (!f.group().is_lattice()) throw DomainError("finite quotients are taken from Z^d");
  if (N < 2) throw DomainError("quotient modulus must be >= 2");
  auto Q = GroupDescriptor::cyclic_product(std::vector<std::int64_t>(f.group().arity(), N));
  std::vector<typename RingElement<S>::Term> terms;
  for (const auto& [g, c] : f.terms()) terms.emplace_back(canonicalize(Q, g.coords()), c);
  return RingElement<S>::from_canonical(std::move(Q), std::move(terms));
}

/// Runtime-tagged element for parsing and the CLI. Operations on mixed
/// domains are rejected rather than promoted.
using AnyRingElement = std::variant<IntegerElement, RationalElement, ComplexElement>;

inline ScalarDomain domain_of(const AnyRingElement& f) {
  return std::visit([](const auto& x) { return x.domain(); }, f);
}

inline const GroupDescriptor& group_of(const AnyRingElement& f) {
  return std::visit([](const auto& x) -> const GroupDescriptor& { return x.group(); }, f);
}

inline AnyRingElement add(const AnyRingElement& f, const AnyRingElement& g) {
  if (f.index() != g.index())
    throw DomainError(std::string("cannot mix scalar domains ") + std::string(to_string(domain_of(f))) + " and " +
                      std::string(to_string(domain_of(g))));
  return std::visit(
      [&](const auto& a) -> AnyRingElement {
        using T = std::decay_t<decltype(a)>;
        return add(a, std::get<T>(g));
      },
      f);
}

inline AnyRingElement convolve(const AnyRingElement& f, const AnyRingElement& g) {
  if (f.index() != g.index())
    throw DomainError(std::string("cannot mix scalar domains ") + std::string(to_string(domain_of(f))) + " and " +
                      std::string(to_string(domain_of(g))));
  return std::visit(
      [&](const auto& a) -> AnyRingElement {
        using T = std::decay_t<decltype(a)>;
        return convolve(a, std::get<T>(g));
      },
      f);
}

}  // namespace fkdet
