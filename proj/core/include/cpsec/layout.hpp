#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>

#include "cpsec/graph.hpp"

namespace cpsec {

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

using Positions = std::map<std::string, Point>;

enum class Cooling { linear };

/// Force-layout parameters. The layout frame is the unit square, so the
/// initial temperature is 0.1 and k = area_scale * sqrt(1 / |V|).
struct LayoutParams {
  explicit LayoutParams(std::uint64_t seed_value) : seed(seed_value) {}

  int iterations = 500;
  std::uint64_t seed;
  double area_scale = 1.0;
  Cooling cooling = Cooling::linear;

  /// Throws InvalidOperation for non-positive or non-finite parameters.
  void validate() const;
};

/// Fruchterman-Reingold. Vertices start at seeded uniform positions in the
/// unit square; coincident pairs are separated by a seeded 1e-9 jitter.
/// Bit-identical for identical (vertices, edges, params) within one build.
Positions fruchterman_reingold(std::span<const std::string> vertices,
                               std::span<const std::pair<std::string, std::string>> edges,
                               const LayoutParams& params);

/// As above, starting from `initial` for the vertices it covers.
Positions fruchterman_reingold(std::span<const std::string> vertices,
                               std::span<const std::pair<std::string, std::string>> edges,
                               const LayoutParams& params, const Positions& initial);

/// Mission nodes get y in [0,1) (losses, hazards, constraints on separate
/// rows), control actions y = 1, component refs y = 2. Within a row, nodes are
/// ordered by the barycenter of their parents in earlier rows; ties and
/// parentless nodes fall back to id order.
Positions banded_hierarchical(const Specification& spec);

}  // namespace cpsec
