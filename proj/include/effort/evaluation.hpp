#pragma once

#include "effort/adaptation.hpp"
#include "effort/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace effort {

struct PredictionPair {
    std::string id;
    double actual;
    double predicted;
};

struct MetricsReport {
    double mmre = 0.0;
    double mdmre = 0.0;
    double pred25 = 0.0; // percent
    std::vector<double> residuals; // |actual - predicted|, in pair order
    std::size_t n = 0;
};

auto mre(const PredictionPair& pair) -> double;

// Median with the mean of the middle two for even sizes.
auto median(std::vector<double> values) -> double;

auto summarize(std::span<const PredictionPair> pairs) -> MetricsReport;

class FoldPlan {
public:
    FoldPlan(std::uint64_t seed, std::size_t folds, std::vector<std::size_t> assignment);

    auto seed() const -> std::uint64_t { return seed_; }
    auto folds() const -> std::size_t { return folds_; }
    // Fold index per dataset position.
    auto assignment() const -> const std::vector<std::size_t>& { return assignment_; }

    // Dataset positions, ascending.
    auto test_indices(std::size_t fold) const -> std::vector<std::size_t>;
    auto training_indices(std::size_t fold) const -> std::vector<std::size_t>;

private:
    std::uint64_t seed_;
    std::size_t folds_;
    std::vector<std::size_t> assignment_;
};

// Seeded Fisher-Yates shuffle of the dataset positions, then round-robin
// assignment to folds. Portable: the same seed gives the same plan everywhere.
auto make_folds(const Dataset& d, std::size_t folds, std::uint64_t seed) -> FoldPlan;

struct ExperimentResult {
    Strategy strategy;
    std::size_t k;
    std::uint64_t seed;
    std::vector<PredictionPair> pairs; // dataset order, one per project
    MetricsReport report;
    std::size_t floored = 0;
};

// Cross-validated run of one strategy: for each fold, the estimator is fitted
// on the remaining folds and predicts every held-out project. Pairs from all
// folds are pooled before metrics are computed.
auto run_experiment(const Dataset& d, Strategy strategy, std::size_t k, std::uint64_t seed, std::size_t folds = 3,
                    const TreeParams& params = {}) -> ExperimentResult;

// Effective K: regression to the mean always uses the closest analogy.
auto effective_k(Strategy strategy, std::size_t k) -> std::size_t;

struct WilcoxonResult {
    double z = 0.0;
    double p = 1.0;
    std::size_t n_effective = 0;
    bool small_sample = false; // fewer than 6 non-zero differences; p forced to 1
};

// Paired signed-rank test on a - b with mid-rank ties, tie-corrected variance
// and a 0.5 continuity correction. Negative z: a tends to be smaller.
auto wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) -> WilcoxonResult;

struct BoxplotStats {
    double lower_whisker;
    double q1;
    double median;
    double q3;
    double upper_whisker;
    std::vector<double> outliers; // ascending
};

// Quartiles as medians of the lower and upper halves (the overall median is
// excluded from both halves for odd sizes); whiskers reach the most extreme
// points within 1.5 IQR of the quartiles.
auto boxplot_stats(std::span<const double> residuals) -> BoxplotStats;

} // namespace effort
