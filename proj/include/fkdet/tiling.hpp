#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "fkdet/errors.hpp"
#include "fkdet/groups.hpp"

namespace fkdet {

enum class DisjointnessMode { epsilon_disjoint, pairwise_disjoint };

inline std::string to_string(DisjointnessMode m) {
  return m == DisjointnessMode::pairwise_disjoint ? "pairwise" : "epsilon";
}

inline DisjointnessMode parse_disjointness_mode(std::string_view s) {
  if (s == "pairwise" || s == "pairwise-disjoint") return DisjointnessMode::pairwise_disjoint;
  if (s == "epsilon" || s == "epsilon-disjoint") return DisjointnessMode::epsilon_disjoint;
  throw DomainError("unknown tiling mode '" + std::string(s) + "'");
}

struct TilePlacement {
  std::size_t tile;  // index into Tiling::tiles
  GroupElement center;
};

/// Translates W_j·c of finitely many tiles inside a window F.
struct Tiling {
  std::shared_ptr<const FolnerWindow> window;
  std::vector<FolnerWindow> tiles;
  std::vector<std::vector<GroupElement>> centers;  // D_j per tile
  std::vector<TilePlacement> placements;           // acceptance order
  DisjointnessMode mode = DisjointnessMode::pairwise_disjoint;
  double epsilon = 0.0;
  Rational coverage;  // |∪ W_j D_j| / |F|

  bool meets_target() const { return coverage >= Rational(1) - Rational(epsilon); }

  /// Elements W·c of one placement.
  std::vector<GroupElement> translate(const TilePlacement& p) const {
    std::vector<GroupElement> out;
    out.reserve(tiles[p.tile].size());
    for (const auto& w : tiles[p.tile].elements()) out.push_back(multiply(window->group(), w, p.center));
    return out;
  }

  /// `tile_index,center_coordinates`, coordinates space-separated.
  std::string to_csv() const {
    std::string out = "tile_index,center_coordinates\n";
    for (const auto& p : placements)
      out += std::to_string(p.tile) + "," + format_element(window->group(), p.center) + "\n";
    return out;
  }
};

namespace detail {

inline Tiling greedy_quasitile(std::shared_ptr<const FolnerWindow> F, const std::vector<FolnerWindow>& tiles,
                               double eps, DisjointnessMode mode) {
  if (!F || F->empty()) throw DomainError("quasitile needs a nonempty window");
  for (const auto& W : tiles) {
    if (W.empty()) throw DomainError("tiles must be nonempty");
    detail::require_same_group(W.group(), F->group());
  }
  const auto& G = F->group();
  Tiling T;
  T.window = F;
  T.tiles = tiles;
  T.centers.resize(tiles.size());
  T.mode = mode;
  T.epsilon = eps;

  std::vector<std::size_t> order(tiles.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return tiles[a].size() > tiles[b].size(); });

  std::vector<char> covered(F->size(), 0);
  std::size_t n_covered = 0;
  std::vector<std::size_t> pos;
  for (auto j : order) {
    const auto& W = tiles[j];
    const double allowed = eps * static_cast<double>(W.size());
    for (const auto& c : F->elements()) {
      pos.clear();
      bool inside = true;
      std::size_t overlap = 0;
      for (const auto& w : W.elements()) {
        auto p = F->position(multiply(G, w, c));
        if (!p) {
          inside = false;
          break;
        }
        pos.push_back(*p);
        overlap += covered[*p] ? 1 : 0;
      }
      if (!inside) continue;
      const bool ok = mode == DisjointnessMode::pairwise_disjoint ? overlap == 0
                                                                 : static_cast<double>(overlap) < allowed;
      if (!ok) continue;
      for (auto p : pos)
        if (!covered[p]) {
          covered[p] = 1;
          ++n_covered;
        }
      T.centers[j].push_back(c);
      T.placements.push_back({j, c});
    }
  }
  T.coverage = Rational(Integer(n_covered), Integer(F->size()));
  return T;
}

}  // namespace detail

/// Greedy quasitiling: tiles largest first, candidate centers c in window
/// order; c is accepted when W·c ⊆ F and its overlap with covered points is 0
/// (pairwise) or below ε|W| (epsilon). Coverage below 1 − ε is reported in
/// the result, not repaired.
inline Tiling quasitile(std::shared_ptr<const FolnerWindow> F, const std::vector<FolnerWindow>& tiles, double eps,
                        DisjointnessMode mode) {
  if (!(eps > 0.0 && eps < 0.5)) throw DomainError("quasitile needs 0 < epsilon < 1/2");
  if (tiles.empty()) throw DomainError("quasitile needs at least one tile");
  return detail::greedy_quasitile(std::move(F), tiles, eps, mode);
}

inline Tiling quasitile(const FolnerWindow& F, const std::vector<FolnerWindow>& tiles, double eps,
                        DisjointnessMode mode) {
  return quasitile(std::make_shared<const FolnerWindow>(F), tiles, eps, mode);
}

struct TilingCheck {
  bool contained = true;
  bool disjoint_ok = true;
  Rational coverage;
};

/// Recomputes containment, the disjointness mode and coverage from the
/// placements alone.
inline TilingCheck verify_tiling(const Tiling& T) {
  TilingCheck out;
  ElementSet covered;
  std::vector<ElementSet> sets;
  for (const auto& p : T.placements) {
    ElementSet s;
    for (auto& g : T.translate(p)) {
      if (!T.window->contains(g)) out.contained = false;
      s.insert(std::move(g));
    }
    sets.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (T.mode == DisjointnessMode::pairwise_disjoint) {
      for (std::size_t j = 0; j < i; ++j)
        for (const auto& g : sets[i])
          if (sets[j].contains(g)) out.disjoint_ok = false;
    } else {
      std::size_t overlap = 0;
      for (const auto& g : sets[i])
        if (covered.contains(g)) ++overlap;
      if (!(static_cast<double>(overlap) < T.epsilon * static_cast<double>(sets[i].size()))) out.disjoint_ok = false;
    }
    covered.insert(sets[i].begin(), sets[i].end());
  }
  std::size_t inside = 0;
  for (const auto& g : covered)
    if (T.window->contains(g)) ++inside;
  out.coverage = Rational(Integer(inside), Integer(T.window->size()));
  return out;
}

}  // namespace fkdet
