#include "effort/evaluation.hpp"

#include "effort/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace effort {

auto mre(const PredictionPair& pair) -> double
{
    if (!(pair.actual > 0.0)) {
        throw Error(fmt::format("project '{}': actual effort must be positive", pair.id));
    }
    return std::abs(pair.actual - pair.predicted) / pair.actual;
}

auto median(std::vector<double> values) -> double
{
    if (values.empty()) {
        throw Error("median of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

auto summarize(std::span<const PredictionPair> pairs) -> MetricsReport
{
    if (pairs.empty()) {
        throw Error("cannot summarize zero predictions");
    }
    MetricsReport r;
    r.n = pairs.size();
    std::vector<double> mres;
    mres.reserve(pairs.size());
    std::size_t within = 0;
    for (const auto& p : pairs) {
        const double e = mre(p);
        mres.push_back(e);
        within += e <= 0.25 ? 1 : 0;
        r.residuals.push_back(std::abs(p.actual - p.predicted));
    }
    r.mmre = std::accumulate(mres.begin(), mres.end(), 0.0) / static_cast<double>(r.n);
    r.mdmre = median(std::move(mres));
    r.pred25 = 100.0 * static_cast<double>(within) / static_cast<double>(r.n);
    return r;
}

FoldPlan::FoldPlan(std::uint64_t seed, std::size_t folds, std::vector<std::size_t> assignment)
    : seed_(seed)
    , folds_(folds)
    , assignment_(std::move(assignment))
{
    if (folds_ == 0) {
        throw Error("fold count must be positive");
    }
    for (auto f : assignment_) {
        if (f >= folds_) {
            throw Error("fold assignment out of range");
        }
    }
}

auto FoldPlan::test_indices(std::size_t fold) const -> std::vector<std::size_t>
{
    if (fold >= folds_) {
        throw Error(fmt::format("fold index {} out of range (folds: {})", fold, folds_));
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
        if (assignment_[i] == fold) {
            out.push_back(i);
        }
    }
    return out;
}

auto FoldPlan::training_indices(std::size_t fold) const -> std::vector<std::size_t>
{
    if (fold >= folds_) {
        throw Error(fmt::format("fold index {} out of range (folds: {})", fold, folds_));
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
        if (assignment_[i] != fold) {
            out.push_back(i);
        }
    }
    return out;
}

namespace {

// Unbiased draw from [0, bound) using raw engine output only, so results do
// not depend on the standard library's distribution implementation.
auto bounded_draw(std::mt19937_64& engine, std::uint64_t bound) -> std::uint64_t
{
    const std::uint64_t reject_below = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = engine();
        if (r >= reject_below) {
            return r % bound;
        }
    }
}

} // namespace

auto make_folds(const Dataset& d, std::size_t folds, std::uint64_t seed) -> FoldPlan
{
    if (folds == 0) {
        throw Error("fold count must be positive");
    }
    if (d.size() < folds) {
        throw Error(fmt::format("dataset has {} projects, fewer than {} folds", d.size(), folds));
    }
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 engine(seed);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(bounded_draw(engine, i + 1));
        std::swap(order[i], order[j]);
    }
    std::vector<std::size_t> assignment(d.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        assignment[order[pos]] = pos % folds;
    }
    return FoldPlan(seed, folds, std::move(assignment));
}

auto effective_k(Strategy strategy, std::size_t k) -> std::size_t
{
    return strategy == Strategy::r_eba ? 1 : k;
}

auto run_experiment(const Dataset& d, Strategy strategy, std::size_t k, std::uint64_t seed, std::size_t folds,
                    const TreeParams& params) -> ExperimentResult
{
    check_strategy_requirements(strategy, d.schema());
    if (k == 0) {
        throw Error("K must be at least 1");
    }
    const auto plan = make_folds(d, folds, seed);
    ExperimentResult result{strategy, effective_k(strategy, k), seed, {}, {}, 0};
    std::vector<std::optional<PredictionPair>> slots(d.size());
    for (std::size_t f = 0; f < folds; ++f) {
        const auto train_idx = plan.training_indices(f);
        if (train_idx.size() < result.k || train_idx.size() < 2) {
            throw Error(fmt::format("fold {} training set has {} projects, too small for {} with K = {}", f,
                                    train_idx.size(), to_token(strategy), result.k));
        }
        const Estimator estimator(strategy, d.subset(train_idx), params);
        for (auto i : plan.test_indices(f)) {
            const auto& target = d[i];
            const auto est = estimator.estimate(target, result.k);
            result.floored += est.floored;
            slots[i] = PredictionPair{target.id, target.effort_value(), est.effort};
        }
    }
    result.pairs.reserve(d.size());
    for (auto& s : slots) {
        result.pairs.push_back(std::move(*s));
    }
    result.report = summarize(result.pairs);
    return result;
}

auto wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) -> WilcoxonResult
{
    if (a.size() != b.size()) {
        throw Error(fmt::format("paired samples differ in length ({} vs {})", a.size(), b.size()));
    }
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) {
            diffs.push_back(d);
        }
    }
    WilcoxonResult r;
    r.n_effective = diffs.size();
    r.small_sample = diffs.size() < 6;
    if (diffs.empty()) {
        return r;
    }
    std::vector<std::size_t> order(diffs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return std::abs(diffs[x]) < std::abs(diffs[y]); });

    double w_plus = 0.0;
    double tie_term = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) {
            ++j;
        }
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t t = i; t <= j; ++t) {
            if (diffs[order[t]] > 0.0) {
                w_plus += mid_rank;
            }
        }
        const double ties = static_cast<double>(j - i + 1);
        tie_term += ties * ties * ties - ties;
        i = j + 1;
    }
    const double n = static_cast<double>(diffs.size());
    const double mean = n * (n + 1.0) / 4.0;
    const double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if (variance > 0.0) {
        const double dev = w_plus - mean;
        const double corrected = std::max(0.0, std::abs(dev) - 0.5);
        r.z = std::copysign(corrected, dev) / std::sqrt(variance);
        if (corrected == 0.0) {
            r.z = 0.0;
        }
        r.p = std::erfc(std::abs(r.z) / std::sqrt(2.0));
    }
    if (r.small_sample) {
        r.p = 1.0;
    }
    return r;
}

auto boxplot_stats(std::span<const double> residuals) -> BoxplotStats
{
    if (residuals.empty()) {
        throw Error("boxplot of an empty sample");
    }
    std::vector<double> v(residuals.begin(), residuals.end());
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    BoxplotStats s{};
    s.median = median(v);
    if (n == 1) {
        s.q1 = s.q3 = s.median;
    } else {
        const auto half = n / 2;
        s.q1 = median({v.begin(), v.begin() + static_cast<std::ptrdiff_t>(half)});
        s.q3 = median({v.end() - static_cast<std::ptrdiff_t>(half), v.end()});
    }
    const double iqr = s.q3 - s.q1;
    const double lo_fence = s.q1 - 1.5 * iqr;
    const double hi_fence = s.q3 + 1.5 * iqr;
    s.lower_whisker = s.q1;
    s.upper_whisker = s.q3;
    for (double x : v) {
        if (x < lo_fence || x > hi_fence) {
            s.outliers.push_back(x);
        } else {
            s.lower_whisker = std::min(s.lower_whisker, x);
            s.upper_whisker = std::max(s.upper_whisker, x);
        }
    }
    return s;
}

} // namespace effort
