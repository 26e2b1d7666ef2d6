#include "effort/neighbors.hpp"

#include "effort/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace effort {

auto similarity_from_distance(double distance) -> double
{
    return 1.0 / (1.0 + distance);
}

auto feature_delta(const FeatureValue& a, const FeatureValue& b, FeatureKind kind) -> double
{
    if (kind == FeatureKind::numeric) {
        const auto* x = std::get_if<double>(&a);
        const auto* y = std::get_if<double>(&b);
        if (x == nullptr || y == nullptr) {
            throw Error("feature kind mismatch: expected numeric values");
        }
        const double d = *x - *y;
        return d * d;
    }
    const auto* x = std::get_if<std::string>(&a);
    const auto* y = std::get_if<std::string>(&b);
    if (x == nullptr || y == nullptr) {
        throw Error("feature kind mismatch: expected categorical values");
    }
    return *x == *y ? 0.0 : 1.0;
}

auto distance(const Project& p, const Project& q, const Schema& schema) -> double
{
    const auto m = schema.predictor_count();
    if (p.features.size() != m || q.features.size() != m) {
        throw Error("project does not conform to schema");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        sum += feature_delta(p.features[k], q.features[k], schema.predictor_kind(k));
    }
    return std::sqrt(sum);
}

auto nearest_neighbors(const Project& target, std::span<const Project> pool, const Schema& schema, std::size_t k,
                       std::optional<std::size_t> skip) -> NeighborList
{
    const std::size_t available = pool.size() - (skip && *skip < pool.size() ? 1 : 0);
    if (available == 0) {
        throw Error("cannot retrieve analogies from an empty pool");
    }
    if (k == 0 || k > available) {
        throw Error(fmt::format("K = {} is out of range for a pool of {} projects", k, available));
    }
    NeighborList all;
    all.reserve(available);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (skip && i == *skip) {
            continue;
        }
        const double d = distance(target, pool[i], schema);
        all.push_back({i, d, similarity_from_distance(d)});
    }
    auto closer = [](const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.project_index < b.project_index;
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);
    all.resize(k);
    return all;
}

} // namespace effort
