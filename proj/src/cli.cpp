#include "effort/cli.hpp"

#include "effort/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <ostream>
#include <thread>

namespace effort::cli {

namespace {

// Runs task(i) for i in [0, count) on a small worker pool. The first failure
// by index is rethrown after all workers finish.
template <typename Task>
void parallel_for(std::size_t count, Task task)
{
    const std::size_t workers = std::min<std::size_t>(count, std::max(1U, std::thread::hardware_concurrency()));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw Error(fmt::format("cannot write file '{}'", path.string()));
    }
    f << text;
    if (!f) {
        throw Error(fmt::format("failed writing file '{}'", path.string()));
    }
}

void prepare_out_dir(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw Error(fmt::format("cannot create output directory '{}'", dir.string()));
    }
}

auto seed_label(const GridRow& row, std::size_t run) -> std::string
{
    return fmt::format("{}", row.runs[run].seed);
}

auto median_summary(const std::vector<ExperimentResult>& runs) -> MetricsReport
{
    if (runs.size() == 1) {
        return runs.front().report;
    }
    std::vector<double> mmre;
    std::vector<double> mdmre;
    std::vector<double> pred;
    for (const auto& r : runs) {
        mmre.push_back(r.report.mmre);
        mdmre.push_back(r.report.mdmre);
        pred.push_back(r.report.pred25);
    }
    MetricsReport m;
    m.mmre = median(std::move(mmre));
    m.mdmre = median(std::move(mdmre));
    m.pred25 = median(std::move(pred));
    m.n = runs.front().report.n;
    return m;
}

auto report_line(std::string_view strategy, std::size_t k, std::string_view seed, const MetricsReport& r)
    -> std::string
{
    return fmt::format("{},{},{},{},{},{},{}\n", strategy, k, seed, r.mmre, r.mdmre, r.pred25, r.n);
}

} // namespace

void validate(const RunConfig& config)
{
    if (config.strategies.empty()) {
        throw Error("at least one --strategy is required");
    }
    if (config.ks.empty()) {
        throw Error("at least one K value is required");
    }
    if (std::find(config.ks.begin(), config.ks.end(), std::size_t{0}) != config.ks.end()) {
        throw Error("K values must be at least 1");
    }
    if (config.folds < 2) {
        throw Error("--folds must be at least 2");
    }
    if (config.seeds.empty()) {
        throw Error("at least one seed is required");
    }
}

auto load_data(const RunConfig& config) -> Dataset
{
    const auto schema = load_schema(config.schema);
    return remove_missing(load_dataset(config.dataset, schema));
}

auto run_grid(const Dataset& data, const RunConfig& config) -> std::vector<GridRow>
{
    validate(config);
    for (auto s : config.strategies) {
        check_strategy_requirements(s, data.schema());
    }
    std::vector<GridRow> rows;
    for (auto s : config.strategies) {
        for (auto k : config.ks) {
            const auto ek = effective_k(s, k);
            const bool seen = std::any_of(rows.begin(), rows.end(),
                                          [&](const GridRow& r) { return r.strategy == s && r.k == ek; });
            if (!seen) {
                rows.push_back(GridRow{s, ek, {}, {}});
            }
        }
    }
    struct Job {
        std::size_t row;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (auto seed : config.seeds) {
            jobs.push_back({r, seed});
        }
    }
    std::vector<std::optional<ExperimentResult>> results(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t j) {
        const auto& row = rows[jobs[j].row];
        results[j] = run_experiment(data, row.strategy, row.k, jobs[j].seed, config.folds, config.tree_params);
    });
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        rows[jobs[j].row].runs.push_back(std::move(*results[j]));
    }
    for (auto& row : rows) {
        row.summary = median_summary(row.runs);
    }
    return rows;
}

auto format_report(const std::vector<GridRow>& rows) -> std::string
{
    std::string out = "strategy,K,seed,mmre,mdmre,pred25,n\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.runs.size(); ++i) {
            out += report_line(to_token(row.strategy), row.k, seed_label(row, i), row.runs[i].report);
        }
        if (row.runs.size() > 1) {
            out += report_line(to_token(row.strategy), row.k, "median", row.summary);
        }
    }
    return out;
}

auto format_residuals(const std::vector<GridRow>& rows) -> std::string
{
    std::string out = "strategy,K,seed,project,residual\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.runs.size(); ++i) {
            const auto& run = row.runs[i];
            for (std::size_t p = 0; p < run.pairs.size(); ++p) {
                out += fmt::format("{},{},{},{},{}\n", to_token(row.strategy), row.k, run.seed, run.pairs[p].id,
                                   run.report.residuals[p]);
            }
        }
    }
    return out;
}

auto format_boxplots(const std::vector<GridRow>& rows) -> std::string
{
    std::string out = "strategy,K,seed,min,q1,median,q3,max_whisker,outliers...\n";
    for (const auto& row : rows) {
        for (const auto& run : row.runs) {
            const auto b = boxplot_stats(run.report.residuals);
            out += fmt::format("{},{},{},{},{},{},{},{}", to_token(row.strategy), row.k, run.seed, b.lower_whisker,
                               b.q1, b.median, b.q3, b.upper_whisker);
            for (double o : b.outliers) {
                out += fmt::format(",{}", o);
            }
            out += '\n';
        }
    }
    return out;
}

auto format_grid(const std::vector<GridRow>& rows) -> std::string
{
    std::string out = fmt::format("{:<8} {:>3} {:>8} {:>8} {:>8}\n", "strategy", "K", "MMRE%", "MdMRE%", "PRED%");
    for (const auto& row : rows) {
        out += fmt::format("{:<8} {:>3} {:>8.1f} {:>8.1f} {:>8.1f}\n", to_token(row.strategy), row.k,
                           100.0 * row.summary.mmre, 100.0 * row.summary.mdmre, row.summary.pred25);
    }
    return out;
}

void cmd_run(const RunConfig& config, std::ostream& out, std::ostream& log)
{
    validate(config);
    const auto data = load_data(config);
    const auto rows = run_grid(data, config);
    prepare_out_dir(config.out);
    write_file(config.out / "report.csv", format_report(rows));
    write_file(config.out / "residuals.csv", format_residuals(rows));
    write_file(config.out / "boxplot.csv", format_boxplots(rows));
    for (const auto& row : rows) {
        for (const auto& run : row.runs) {
            if (run.floored > 0) {
                log << fmt::format("note: {} K={} seed={}: {} adapted efforts raised to {}\n", to_token(row.strategy),
                                   row.k, run.seed, run.floored, effort_floor);
            }
        }
    }
    out << format_grid(rows);
}

auto significance_marker(double p) -> std::string_view
{
    if (p < 0.01) {
        return "a";
    }
    if (p < 0.05) {
        return "b";
    }
    return "";
}

auto compare_grid(const std::vector<GridRow>& rows, Strategy baseline, bool include_self) -> std::vector<Comparison>
{
    std::vector<Comparison> out;
    std::vector<std::size_t> ks;
    for (const auto& row : rows) {
        if (row.strategy == baseline) {
            ks.push_back(row.k);
        }
    }
    if (ks.empty()) {
        throw Error(fmt::format("baseline {} has no results", to_token(baseline)));
    }
    for (const auto& row : rows) {
        if (row.strategy == baseline && !include_self) {
            continue;
        }
        // Each comparison row pairs the baseline at K with the other strategy's
        // row for the same effective K.
        for (auto k : ks) {
            if (row.k != effective_k(row.strategy, k)) {
                continue;
            }
            const auto& base = *std::find_if(rows.begin(), rows.end(),
                                             [&](const GridRow& r) { return r.strategy == baseline && r.k == k; });
            for (std::size_t i = 0; i < row.runs.size(); ++i) {
                const auto& a = base.runs[i];
                const auto& b = row.runs[i];
                if (a.seed != b.seed || a.pairs.size() != b.pairs.size()) {
                    throw Error("residual sets are not paired");
                }
                for (std::size_t p = 0; p < a.pairs.size(); ++p) {
                    if (a.pairs[p].id != b.pairs[p].id) {
                        throw Error("residual sets are not paired");
                    }
                }
                out.push_back({baseline, row.strategy, k, a.seed,
                               wilcoxon_signed_rank(a.report.residuals, b.report.residuals)});
            }
        }
    }
    return out;
}

auto format_comparisons(const std::vector<Comparison>& rows) -> std::string
{
    std::string out = "baseline,strategy,K,seed,n,z,p,significance\n";
    for (const auto& c : rows) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", to_token(c.baseline), to_token(c.other), c.k, c.seed,
                           c.test.n_effective, c.test.z, c.test.p, significance_marker(c.test.p));
    }
    return out;
}

void cmd_compare(const RunConfig& config, Strategy baseline, std::ostream& out, std::ostream& log)
{
    validate(config);
    auto cfg = config;
    const bool listed = std::find(cfg.strategies.begin(), cfg.strategies.end(), baseline) != cfg.strategies.end();
    if (!listed) {
        cfg.strategies.insert(cfg.strategies.begin(), baseline);
    }
    auto distinct = cfg.strategies;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) {
        throw Error("compare needs at least two strategies");
    }
    const auto data = load_data(cfg);
    const auto grid = run_grid(data, cfg);
    const auto comparisons = compare_grid(grid, baseline, listed);
    prepare_out_dir(cfg.out);
    write_file(cfg.out / "compare.csv", format_comparisons(comparisons));
    for (const auto& c : comparisons) {
        if (c.test.small_sample && c.test.n_effective > 0) {
            log << fmt::format("note: {} vs {} K={} seed={}: only {} non-zero differences, p reported as 1\n",
                               to_token(c.baseline), to_token(c.other), c.k, c.seed, c.test.n_effective);
        }
    }
    out << fmt::format("{:<8} {:<8} {:>3} {:>6} {:>8} {:>8} {}\n", "baseline", "vs", "K", "seed", "z", "p", "sig");
    for (const auto& c : comparisons) {
        out << fmt::format("{:<8} {:<8} {:>3} {:>6} {:>8.2f} {:>8.4f} {}\n", to_token(c.baseline), to_token(c.other),
                           c.k, c.seed, c.test.z, c.test.p, significance_marker(c.test.p));
    }
}

auto inspect_tree(const Dataset& data, const RunConfig& config, std::size_t fold, std::uint64_t seed) -> std::string
{
    if (fold >= config.folds) {
        throw Error(fmt::format("invalid fold index {} (folds: {})", fold, config.folds));
    }
    const auto plan = make_folds(data, config.folds, seed);
    const Estimator estimator(Strategy::mt_eba, data.subset(plan.training_indices(fold)), config.tree_params);
    return dump_tree(*estimator.tree());
}

void cmd_inspect_tree(const RunConfig& config, std::size_t fold, std::uint64_t seed, std::ostream& out)
{
    if (fold >= config.folds) {
        throw Error(fmt::format("invalid fold index {} (folds: {})", fold, config.folds));
    }
    const auto data = load_data(config);
    const auto text = inspect_tree(data, config, fold, seed);
    prepare_out_dir(config.out);
    write_file(config.out / fmt::format("tree_fold{}_seed{}.txt", fold, seed), text);
    out << text;
}

} // namespace effort::cli
