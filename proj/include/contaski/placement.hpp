#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "contaski/rng.hpp"
#include "contaski/scenario.hpp"
#include "contaski/types.hpp"

namespace contaski {

/// Positions for `count` nodes. Explicit coordinates are returned verbatim;
/// uniform draws x then y per node; grid uses a ceil(sqrt(count)) lattice
/// with cells of equal size and nodes at cell centers, filled row by row.
inline std::vector<Position> place_nodes(PlacementStrategy strategy, const Area& area, std::size_t count,
                                         RandomStream& rng, const std::vector<Position>& explicit_positions = {}) {
  if (count == 0) throw std::invalid_argument("cannot place zero nodes");
  std::vector<Position> out;
  out.reserve(count);
  switch (strategy) {
    case PlacementStrategy::kExplicit:
      if (explicit_positions.size() != count) {
        throw std::invalid_argument("explicit placement lists " + std::to_string(explicit_positions.size()) +
                                    " positions for " + std::to_string(count) + " nodes");
      }
      return explicit_positions;
    case PlacementStrategy::kUniformRandom:
      for (std::size_t i = 0; i < count; ++i) {
        const double x = rng.uniform(0.0, area.width);
        const double y = rng.uniform(0.0, area.height);
        out.push_back({x, y});
      }
      return out;
    case PlacementStrategy::kGrid: {
      const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
      const double dx = area.width / static_cast<double>(side);
      const double dy = area.height / static_cast<double>(side);
      for (std::size_t i = 0; i < count; ++i) {
        const auto col = i % side;
        const auto row = i / side;
        out.push_back({(static_cast<double>(col) + 0.5) * dx, (static_cast<double>(row) + 0.5) * dy});
      }
      return out;
    }
  }
  return out;
}

}  // namespace contaski
