#pragma once

#include "effort/adaptation.hpp"
#include "effort/dataset.hpp"
#include "effort/evaluation.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace effort::cli {

struct RunConfig {
    std::filesystem::path dataset;
    std::filesystem::path schema;
    std::vector<Strategy> strategies;
    std::vector<std::size_t> ks{1, 2, 3};
    std::size_t folds = 3;
    std::vector<std::uint64_t> seeds{1};
    std::filesystem::path out{"."};
    TreeParams tree_params{};
};

void validate(const RunConfig& config);

// Schema and dataset from disk, with incomplete records removed.
auto load_data(const RunConfig& config) -> Dataset;

// One (strategy, K) cell of the comparison grid. `runs` are in seed order;
// `summary` is the single run's report for one seed, or the per-metric median
// across seeds.
struct GridRow {
    Strategy strategy;
    std::size_t k;
    std::vector<ExperimentResult> runs;
    MetricsReport summary;
};

// Runs every (strategy, effective K, seed) combination. Independent runs
// execute concurrently; results come back in configuration order.
auto run_grid(const Dataset& data, const RunConfig& config) -> std::vector<GridRow>;

auto format_report(const std::vector<GridRow>& rows) -> std::string;
auto format_residuals(const std::vector<GridRow>& rows) -> std::string;
auto format_boxplots(const std::vector<GridRow>& rows) -> std::string;
auto format_grid(const std::vector<GridRow>& rows) -> std::string;

// Writes report.csv, residuals.csv and boxplot.csv under config.out and the
// grid to `out`. Floor notes go to `log`.
void cmd_run(const RunConfig& config, std::ostream& out, std::ostream& log);

struct Comparison {
    Strategy baseline;
    Strategy other;
    std::size_t k;
    std::uint64_t seed;
    WilcoxonResult test;
};

auto significance_marker(double p) -> std::string_view;

// The baseline's row against itself is emitted only when `include_self` is set,
// which cmd_compare does when the baseline was listed among the strategies.
auto compare_grid(const std::vector<GridRow>& rows, Strategy baseline, bool include_self = true)
    -> std::vector<Comparison>;
auto format_comparisons(const std::vector<Comparison>& rows) -> std::string;

// Wilcoxon signed-rank of the baseline's absolute residuals against every
// configured strategy, on identical fold plans. Writes compare.csv.
void cmd_compare(const RunConfig& config, Strategy baseline, std::ostream& out, std::ostream& log);

// Rebuilds the difference-table model tree of one training fold and writes
// tree_fold<F>_seed<S>.txt. Returns the dump text.
auto inspect_tree(const Dataset& data, const RunConfig& config, std::size_t fold, std::uint64_t seed)
    -> std::string;
void cmd_inspect_tree(const RunConfig& config, std::size_t fold, std::uint64_t seed, std::ostream& out);

} // namespace effort::cli
