#include "cpsec/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cpsec {

void LayoutParams::validate() const {
  if (iterations < 1) throw InvalidOperation("layout iterations must be at least 1");
  if (!(area_scale > 0.0) || !std::isfinite(area_scale)) throw InvalidOperation("area_scale must be positive");
}

namespace {

constexpr double kMinDistance = 1e-9;

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

Positions fruchterman_reingold(std::span<const std::string> vertices,
                               std::span<const std::pair<std::string, std::string>> edges,
                               const LayoutParams& params) {
  return fruchterman_reingold(vertices, edges, params, Positions{});
}

Positions fruchterman_reingold(std::span<const std::string> vertices,
                               std::span<const std::pair<std::string, std::string>> edges,
                               const LayoutParams& params, const Positions& initial) {
  params.validate();
  std::vector<std::string> ids(vertices.begin(), vertices.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const std::size_t n = ids.size();
  if (n == 0) return {};

  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(ids[i], i);
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (const auto& [a, b] : edges) {
    auto ia = index.find(a);
    auto ib = index.find(b);
    if (ia == index.end()) throw NotFoundError(a);
    if (ib == index.end()) throw NotFoundError(b);
    if (ia->second != ib->second) links.emplace_back(ia->second, ib->second);
  }

  std::mt19937_64 placement(params.seed);
  std::mt19937_64 jitter(params.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = unit_draw(placement);
    y[i] = unit_draw(placement);
    if (auto it = initial.find(ids[i]); it != initial.end() && std::isfinite(it->second.x) &&
                                        std::isfinite(it->second.y)) {
      x[i] = it->second.x;
      y[i] = it->second.y;
    }
  }

  const double side = 1.0;
  const double k = params.area_scale * std::sqrt(side * side / static_cast<double>(n));
  const double k2 = k * k;
  const double t0 = 0.1 * side;
  std::vector<double> dx(n), dy(n);

  for (int iter = 0; iter < params.iterations; ++iter) {
    const double temperature = t0 * (1.0 - static_cast<double>(iter) / params.iterations);
    std::fill(dx.begin(), dx.end(), 0.0);
    std::fill(dy.begin(), dy.end(), 0.0);

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double ddx = x[i] - x[j];
        double ddy = y[i] - y[j];
        double d = std::hypot(ddx, ddy);
        if (d < kMinDistance) {
          const double angle = unit_draw(jitter) * 2.0 * std::numbers::pi;
          ddx = std::cos(angle) * kMinDistance;
          ddy = std::sin(angle) * kMinDistance;
          d = kMinDistance;
        }
        const double f = k2 / d;  // repulsion
        dx[i] += ddx / d * f;
        dy[i] += ddy / d * f;
        dx[j] -= ddx / d * f;
        dy[j] -= ddy / d * f;
      }
    }
    for (const auto& [a, b] : links) {
      const double ddx = x[a] - x[b];
      const double ddy = y[a] - y[b];
      const double d = std::hypot(ddx, ddy);
      if (d < kMinDistance) continue;
      const double f = d * d / k;  // attraction
      dx[a] -= ddx / d * f;
      dy[a] -= ddy / d * f;
      dx[b] += ddx / d * f;
      dy[b] += ddy / d * f;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double len = std::hypot(dx[i], dy[i]);
      if (!(len > 0.0) || !std::isfinite(len)) continue;
      const double step = std::min(len, temperature);
      x[i] += dx[i] / len * step;
      y[i] += dy[i] / len * step;
    }
  }

  Positions out;
  for (std::size_t i = 0; i < n; ++i) out.emplace(ids[i], Point{x[i], y[i]});
  return out;
}

Positions banded_hierarchical(const Specification& spec) {
  constexpr int kRows = 5;
  constexpr double kRowY[kRows] = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 2.0};

  std::vector<std::vector<const SpecNode*>> rows(kRows);
  for (const auto& node : spec.nodes) rows[static_cast<int>(node.level)].push_back(&node);
  std::unordered_map<std::string_view, std::vector<std::string_view>> parents;
  for (const auto& edge : spec.edges) parents[edge.child].push_back(edge.parent);

  Positions out;
  for (int r = 0; r < kRows; ++r) {
    struct Slot {
      const SpecNode* node;
      bool anchored;
      double barycenter;
    };
    std::vector<Slot> slots;
    for (const auto* node : rows[r]) {
      double sum = 0.0;
      int count = 0;
      if (auto it = parents.find(node->id); it != parents.end()) {
        for (auto parent : it->second) {
          auto placed = out.find(std::string(parent));
          if (placed == out.end()) continue;
          sum += placed->second.x;
          ++count;
        }
      }
      slots.push_back({node, count > 0, count > 0 ? sum / count : 0.0});
    }
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
      if (a.anchored != b.anchored) return a.anchored;
      if (a.anchored && a.barycenter != b.barycenter) return a.barycenter < b.barycenter;
      return a.node->id < b.node->id;
    });
    const double offset = (static_cast<double>(slots.size()) - 1.0) / 2.0;
    for (std::size_t i = 0; i < slots.size(); ++i)
      out[slots[i].node->id] = Point{static_cast<double>(i) - offset, kRowY[r]};
  }
  return out;
}

}  // namespace cpsec
