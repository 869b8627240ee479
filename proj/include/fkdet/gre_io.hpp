#pragma once

// `.gre` ring-element text format:
//
//   group <descriptor>
//   <coefficient> <c1> ... <ck>
//   ...
//
// Coefficients are integers or p/q rationals; `#` starts a comment. Free-group
// coordinates are words such as `a b a^-1` (an empty word is the identity).

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fkdet/errors.hpp"
#include "fkdet/groups.hpp"
#include "fkdet/ring.hpp"

namespace fkdet {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool parse_int64(std::string_view t, std::int64_t& v) {
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  return ec == std::errc() && p == t.data() + t.size() && !t.empty();
}

/// Appends the letters of `a`, `b^-1`, `a^3`, ... to `word`.
inline bool parse_letter(std::string_view t, GroupElement::Coords& word) {
  if (t == "e") return true;
  if (t.empty() || (t[0] != 'a' && t[0] != 'b')) return false;
  const std::int64_t base = t[0] == 'a' ? letters::a : letters::b;
  std::int64_t exp = 1;
  if (t.size() > 1) {
    if (t[1] != '^' || !parse_int64(t.substr(2), exp)) return false;
  }
  if (exp > 4096 || exp < -4096) return false;
  for (std::int64_t i = 0; i < std::abs(exp); ++i) word.push_back(exp > 0 ? base : -base);
  return true;
}

}  // namespace detail

/// Parses `.gre` text. The result is exact-integer unless some reduced
/// coefficient has a denominator other than 1.
inline AnyRingElement parse_ring_element(std::string_view text) {
  std::optional<GroupDescriptor> G;
  std::vector<RationalElement::Term> terms;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = detail::split_ws(line);
    if (tok.empty()) {
      if (nl == text.size()) break;
      continue;
    }
    if (!G) {
      if (tok[0] != "group" || tok.size() != 2) throw ParseError(line_no, "expected 'group <descriptor>'");
      try {
        G = GroupDescriptor::parse(tok[1]);
      } catch (const DomainError& e) {
        throw ParseError(line_no, e.what());
      }
      continue;
    }
    Rational c;
    try {
      c = parse_rational(tok[0]);
    } catch (const DomainError& e) {
      throw ParseError(line_no, e.what());
    }
    GroupElement::Coords coords;
    for (std::size_t i = 1; i < tok.size(); ++i) {
      if (G->is_free()) {
        if (!detail::parse_letter(tok[i], coords))
          throw ParseError(line_no, "bad free-group letter '" + std::string(tok[i]) + "'");
      } else {
        std::int64_t v;
        if (!detail::parse_int64(tok[i], v))
          throw ParseError(line_no, "bad coordinate '" + std::string(tok[i]) + "'");
        coords.push_back(v);
      }
    }
    if (!G->is_free() && coords.size() != G->arity())
      throw ParseError(line_no, "expected " + std::to_string(G->arity()) + " coordinates, got " +
                                    std::to_string(coords.size()));
    terms.emplace_back(canonicalize(*G, std::span<const std::int64_t>(coords.data(), coords.size())), std::move(c));
    if (nl == text.size()) break;
  }
  if (!G) throw ParseError(line_no, "missing 'group' line");
  auto f = RationalElement::from_canonical(*G, std::move(terms));
  if (auto fi = to_integer(f)) return *fi;
  return f;
}

inline AnyRingElement read_ring_element_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ring_element(ss.str());
}

template <ExactScalar S>
std::string serialize(const RingElement<S>& f) {
  std::string out = "group " + f.group().str() + "\n";
  for (const auto& [g, c] : f.terms()) {
    out += format_scalar(c);
    const auto coords = format_element(f.group(), g);
    if (!coords.empty()) out += " " + coords;
    out += "\n";
  }
  return out;
}

inline std::string serialize(const AnyRingElement& f) {
  return std::visit(
      [](const auto& x) -> std::string {
        if constexpr (ExactScalar<typename std::decay_t<decltype(x)>::Scalar>)
          return serialize(x);
        else
          throw DomainError("the .gre format carries exact coefficients only");
      },
      f);
}

}  // namespace fkdet
