#pragma once

#include "effort/dataset.hpp"
#include "effort/modeltree.hpp"
#include "effort/neighbors.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace effort {

enum class Strategy { eba, wmean, l_eba, mendes, s_eba, r_eba, mt_eba };

auto parse_strategy(std::string_view token) -> Strategy;
auto to_token(Strategy s) -> std::string_view;
auto all_strategies() -> std::span<const Strategy>;

// Adapted efforts below this are raised to it.
inline constexpr double effort_floor = 1.0;

// A training fold in both representations. Both datasets hold the same
// projects in the same order; `normalized` drives retrieval and differences,
// `raw` supplies sizes in their original units. Efforts are identical.
struct CaseBase {
    const Dataset& raw;
    const Dataset& normalized;
};

// A project to estimate, in both representations.
struct Target {
    const Project& raw;
    const Project& normalized;
};

auto estimate_eba(const NeighborList& neighbors, std::span<const double> pool_efforts) -> double;
auto estimate_weighted_mean(const NeighborList& neighbors, std::span<const double> pool_efforts) -> double;
auto estimate_similarity(const NeighborList& neighbors, std::span<const double> pool_efforts) -> double;

// Effort(a) / FP(a) * FP(t).
auto linear_size_adjust(double analogy_effort, double analogy_size, double target_size) -> double;

// Size adjustment applied to each neighbor, then averaged.
auto estimate_linear_size(const Target& target, const NeighborList& neighbors, const CaseBase& training) -> double;

// Mean over neighbors of (mean over size-like predictors of f_t / f_i) * Effort(i).
// Predictor positions refer to numeric columns read in raw units; an empty
// list means the schema's size column.
auto estimate_mendes_rules(const Target& target, const NeighborList& neighbors, const CaseBase& training,
                           std::span<const std::size_t> size_predictors = {}) -> double;

struct RtmContext {
    double mean_productivity; // mean effort/size over the training fold
    double correlation;       // leave-one-out analogy vs actual productivity, in [-1, 1]
};

auto pearson_correlation(std::span<const double> x, std::span<const double> y) -> double;

auto build_rtm_context(const CaseBase& training) -> RtmContext;

// Closest analogy only: FP(a) * [PR(a) + (M - PR(a)) * (1 - r)] with
// PR(a) = Effort(a) / FP(a).
auto rtm_adjust(double analogy_size, double analogy_effort, const RtmContext& ctx) -> double;
auto estimate_rtm(const Target& target, const CaseBase& training, const RtmContext& ctx) -> double;

struct DifferenceRecord {
    std::vector<double> deltas; // numeric: p - a on normalized values; categorical: 0/1 changed indicator
    double effort_delta;        // raw effort units
    std::size_t project_index;
    std::size_t analogy_index;
};

struct DifferenceTable {
    std::vector<std::string> input_names;
    std::vector<DifferenceRecord> records;

    auto to_training_matrix() const -> TrainingMatrix;
};

// Attribute-wise difference p - q, categorical columns as a changed indicator.
auto difference_vector(const Project& p, const Project& q, const Schema& schema) -> std::vector<double>;

// Leave-one-out pass pairing every project with its closest analogy among the
// others; expects normalized features.
auto build_difference_table(const Dataset& training) -> DifferenceTable;

struct AdaptedEffort {
    double effort;
    std::size_t floored = 0; // adapted analogy efforts raised to effort_floor
};

// Each of the k closest analogies adapted by the tree-predicted effort
// difference, then averaged. `training` is the normalized fold.
auto estimate_mt(const Project& target, const Dataset& training, const ModelTree& tree, std::size_t k,
                 double smoothing_k) -> AdaptedEffort;

// Fold-level state for one strategy: normalizer fitted on the training fold,
// plus the difference-table tree or the regression-to-the-mean context when
// the strategy needs them. Immutable once built.
class Estimator {
public:
    Estimator(Strategy strategy, Dataset training, TreeParams params = {});

    auto strategy() const -> Strategy { return strategy_; }
    auto normalizer() const -> const Normalizer& { return normalizer_; }
    auto raw_training() const -> const Dataset& { return raw_; }
    auto normalized_training() const -> const Dataset& { return normalized_; }
    auto tree() const -> const std::optional<ModelTree>& { return tree_; }
    auto rtm_context() const -> const std::optional<RtmContext>& { return rtm_; }

    // K is ignored for r-eba, which always uses the closest analogy.
    auto estimate(const Project& raw_target, std::size_t k) const -> AdaptedEffort;

private:
    Strategy strategy_;
    TreeParams params_;
    Dataset raw_;
    Normalizer normalizer_;
    Dataset normalized_;
    std::vector<double> efforts_;
    std::optional<ModelTree> tree_;
    std::optional<RtmContext> rtm_;
};

// Throws if the schema or fold size cannot support the strategy.
void check_strategy_requirements(Strategy s, const Schema& schema);

} // namespace effort
