#pragma once

#include "effort/dataset.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace effort {

struct Neighbor {
    std::size_t project_index;
    double distance;
    double similarity; // 1 / (1 + distance)

    friend auto operator==(const Neighbor&, const Neighbor&) -> bool = default;
};

using NeighborList = std::vector<Neighbor>;

auto similarity_from_distance(double distance) -> double;

// Squared difference for numeric values, 0/1 mismatch indicator for categories.
auto feature_delta(const FeatureValue& a, const FeatureValue& b, FeatureKind kind) -> double;

// Euclidean distance over all predictor columns.
auto distance(const Project& p, const Project& q, const Schema& schema) -> double;

// The k pool members closest to target, ascending by distance with ties
// broken by ascending pool index. `skip` removes one pool position from
// consideration (the leave-one-out case) without copying the pool.
auto nearest_neighbors(const Project& target, std::span<const Project> pool, const Schema& schema, std::size_t k,
                       std::optional<std::size_t> skip = std::nullopt) -> NeighborList;

} // namespace effort
