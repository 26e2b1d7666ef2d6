#include "effort/adaptation.hpp"

#include "effort/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace effort {

namespace {

constexpr std::array<Strategy, 7> strategies{Strategy::eba,   Strategy::wmean, Strategy::l_eba, Strategy::mendes,
                                             Strategy::s_eba, Strategy::r_eba, Strategy::mt_eba};

void require_neighbors(const NeighborList& neighbors)
{
    if (neighbors.empty()) {
        throw Error("no analogies retrieved");
    }
}

auto size_of(const Project& raw, const Schema& schema) -> double
{
    const auto s = schema.size_predictor();
    if (!s) {
        throw Error("schema has no size column");
    }
    return raw.numeric(*s);
}

auto similarity_weighted(const NeighborList& neighbors, std::span<const double> pool_efforts) -> double
{
    require_neighbors(neighbors);
    double weight_sum = 0.0;
    double weighted = 0.0;
    for (const auto& n : neighbors) {
        weight_sum += n.similarity;
        weighted += n.similarity * pool_efforts[n.project_index];
    }
    if (!(weight_sum > 0.0)) {
        throw Error("similarity weights sum to zero");
    }
    return weighted / weight_sum;
}

} // namespace

auto parse_strategy(std::string_view token) -> Strategy
{
    for (auto s : strategies) {
        if (to_token(s) == token) {
            return s;
        }
    }
    throw Error(fmt::format("unknown strategy '{}'", token));
}

auto to_token(Strategy s) -> std::string_view
{
    switch (s) {
    case Strategy::eba: return "eba";
    case Strategy::wmean: return "wmean";
    case Strategy::l_eba: return "l-eba";
    case Strategy::mendes: return "mendes";
    case Strategy::s_eba: return "s-eba";
    case Strategy::r_eba: return "r-eba";
    case Strategy::mt_eba: return "mt-eba";
    }
    return "?";
}

auto all_strategies() -> std::span<const Strategy>
{
    return strategies;
}

auto estimate_eba(const NeighborList& neighbors, std::span<const double> pool_efforts) -> double
{
    require_neighbors(neighbors);
    double sum = 0.0;
    for (const auto& n : neighbors) {
        sum += pool_efforts[n.project_index];
    }
    return sum / static_cast<double>(neighbors.size());
}

auto estimate_weighted_mean(const NeighborList& neighbors, std::span<const double> pool_efforts) -> double
{
    require_neighbors(neighbors);
    double total = 0.0;
    for (const auto& n : neighbors) {
        total += n.similarity;
    }
    if (!(total > 0.0)) {
        throw Error("similarity weights sum to zero");
    }
    double estimate = 0.0;
    for (const auto& n : neighbors) {
        estimate += (n.similarity / total) * pool_efforts[n.project_index];
    }
    return estimate;
}

auto estimate_similarity(const NeighborList& neighbors, std::span<const double> pool_efforts) -> double
{
    return similarity_weighted(neighbors, pool_efforts);
}

auto linear_size_adjust(double analogy_effort, double analogy_size, double target_size) -> double
{
    if (!(analogy_size > 0.0)) {
        throw Error("degenerate analogy size");
    }
    return analogy_effort / analogy_size * target_size;
}

auto estimate_linear_size(const Target& target, const NeighborList& neighbors, const CaseBase& training) -> double
{
    require_neighbors(neighbors);
    const auto& schema = training.raw.schema();
    const double target_size = size_of(target.raw, schema);
    double sum = 0.0;
    for (const auto& n : neighbors) {
        const auto& analogy = training.raw[n.project_index];
        sum += linear_size_adjust(analogy.effort_value(), size_of(analogy, schema), target_size);
    }
    return sum / static_cast<double>(neighbors.size());
}

auto estimate_mendes_rules(const Target& target, const NeighborList& neighbors, const CaseBase& training,
                           std::span<const std::size_t> size_predictors) -> double
{
    require_neighbors(neighbors);
    const auto& schema = training.raw.schema();
    std::vector<std::size_t> columns(size_predictors.begin(), size_predictors.end());
    if (columns.empty()) {
        const auto s = schema.size_predictor();
        if (!s) {
            throw Error("schema has no size column");
        }
        columns.push_back(*s);
    }
    double sum = 0.0;
    for (const auto& n : neighbors) {
        const auto& analogy = training.raw[n.project_index];
        double ratio = 0.0;
        for (auto c : columns) {
            const double f_a = analogy.numeric(c);
            if (f_a == 0.0) {
                throw Error(fmt::format("analogy '{}' has zero '{}'", analogy.id, schema.predictor_name(c)));
            }
            ratio += target.raw.numeric(c) / f_a;
        }
        sum += ratio / static_cast<double>(columns.size()) * analogy.effort_value();
    }
    return sum / static_cast<double>(neighbors.size());
}

auto pearson_correlation(std::span<const double> x, std::span<const double> y) -> double
{
    if (x.size() != y.size() || x.empty()) {
        throw Error("correlation needs two non-empty samples of equal length");
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        return 0.0;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

auto build_rtm_context(const CaseBase& training) -> RtmContext
{
    const auto& schema = training.raw.schema();
    if (!schema.size_predictor()) {
        throw Error("schema has no size column");
    }
    const auto n = training.raw.size();
    if (n < 3) {
        throw Error(fmt::format("regression to the mean needs at least 3 training projects, got {}", n));
    }
    std::vector<double> productivity(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = training.raw[i];
        const double size = size_of(p, schema);
        if (!(size > 0.0)) {
            throw Error(fmt::format("project '{}' has non-positive size", p.id));
        }
        productivity[i] = p.effort_value() / size;
    }
    std::vector<double> analogy_productivity(n);
    const auto pool = training.normalized.projects();
    for (std::size_t i = 0; i < n; ++i) {
        const auto nn = nearest_neighbors(pool[i], pool, schema, 1, i);
        analogy_productivity[i] = productivity[nn.front().project_index];
    }
    const double mean = std::accumulate(productivity.begin(), productivity.end(), 0.0) / static_cast<double>(n);
    return RtmContext{mean, pearson_correlation(analogy_productivity, productivity)};
}

auto rtm_adjust(double analogy_size, double analogy_effort, const RtmContext& ctx) -> double
{
    if (!(analogy_size > 0.0)) {
        throw Error("degenerate analogy size");
    }
    // Expanded so that r = 1 and r = 0 reproduce their limits without rounding.
    return analogy_effort * ctx.correlation + analogy_size * ctx.mean_productivity * (1.0 - ctx.correlation);
}

auto estimate_rtm(const Target& target, const CaseBase& training, const RtmContext& ctx) -> double
{
    const auto& schema = training.raw.schema();
    const auto nn = nearest_neighbors(target.normalized, training.normalized.projects(), schema, 1);
    const auto& analogy = training.raw[nn.front().project_index];
    const double size = size_of(analogy, schema);
    if (!(size > 0.0)) {
        throw Error("degenerate analogy size");
    }
    return rtm_adjust(size, analogy.effort_value(), ctx);
}

auto DifferenceTable::to_training_matrix() const -> TrainingMatrix
{
    std::vector<std::vector<double>> inputs;
    std::vector<double> outputs;
    inputs.reserve(records.size());
    outputs.reserve(records.size());
    for (const auto& r : records) {
        inputs.push_back(r.deltas);
        outputs.push_back(r.effort_delta);
    }
    return TrainingMatrix(input_names, std::move(inputs), std::move(outputs));
}

auto difference_vector(const Project& p, const Project& q, const Schema& schema) -> std::vector<double>
{
    const auto m = schema.predictor_count();
    if (p.features.size() != m || q.features.size() != m) {
        throw Error("project does not conform to schema");
    }
    std::vector<double> d(m);
    for (std::size_t k = 0; k < m; ++k) {
        d[k] = schema.predictor_kind(k) == FeatureKind::numeric ? p.numeric(k) - q.numeric(k)
                                                                 : feature_delta(p.features[k], q.features[k], FeatureKind::categorical);
    }
    return d;
}

auto build_difference_table(const Dataset& training) -> DifferenceTable
{
    const auto n = training.size();
    if (n < 2) {
        throw Error(fmt::format("difference table needs at least 2 training projects, got {}", n));
    }
    const auto& schema = training.schema();
    DifferenceTable table;
    for (std::size_t k = 0; k < schema.predictor_count(); ++k) {
        table.input_names.push_back("d_" + schema.predictor_name(k));
    }
    const auto pool = training.projects();
    table.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = nearest_neighbors(pool[i], pool, schema, 1, i).front().project_index;
        table.records.push_back({difference_vector(pool[i], pool[a], schema),
                                 pool[i].effort_value() - pool[a].effort_value(), i, a});
    }
    return table;
}

auto estimate_mt(const Project& target, const Dataset& training, const ModelTree& tree, std::size_t k,
                 double smoothing_k) -> AdaptedEffort
{
    const auto& schema = training.schema();
    if (tree.arity() != schema.predictor_count()) {
        throw Error(fmt::format("model tree arity {} does not match {} predictors", tree.arity(),
                                schema.predictor_count()));
    }
    const auto neighbors = nearest_neighbors(target, training.projects(), schema, k);
    AdaptedEffort out{0.0, 0};
    for (const auto& n : neighbors) {
        const auto& analogy = training[n.project_index];
        const auto d = difference_vector(target, analogy, schema);
        double adapted = analogy.effort_value() + predict(tree, d, smoothing_k);
        if (adapted < effort_floor) {
            adapted = effort_floor;
            ++out.floored;
        }
        out.effort += adapted;
    }
    out.effort /= static_cast<double>(neighbors.size());
    return out;
}

void check_strategy_requirements(Strategy s, const Schema& schema)
{
    const bool needs_size = s == Strategy::l_eba || s == Strategy::mendes || s == Strategy::r_eba;
    if (needs_size && !schema.size_predictor()) {
        throw Error(fmt::format("strategy {} needs a size column (kind size_numeric) in the schema", to_token(s)));
    }
}

Estimator::Estimator(Strategy strategy, Dataset training, TreeParams params)
    : strategy_(strategy)
    , params_(params)
    , raw_(std::move(training))
    , normalizer_(fit_normalizer(raw_))
    , normalized_(apply_normalizer(normalizer_, raw_))
    , efforts_(raw_.efforts())
{
    check_strategy_requirements(strategy_, raw_.schema());
    if (strategy_ == Strategy::mt_eba) {
        tree_ = build_tree(build_difference_table(normalized_).to_training_matrix(), params_);
    } else if (strategy_ == Strategy::r_eba) {
        rtm_ = build_rtm_context(CaseBase{raw_, normalized_});
    }
}

auto Estimator::estimate(const Project& raw_target, std::size_t k) const -> AdaptedEffort
{
    const auto target = normalizer_.apply(raw_target);
    const auto& schema = raw_.schema();
    const CaseBase training{raw_, normalized_};
    const Target t{raw_target, target};
    switch (strategy_) {
    case Strategy::r_eba:
        return {estimate_rtm(t, training, *rtm_)};
    case Strategy::mt_eba:
        return estimate_mt(target, normalized_, *tree_, k, params_.smoothing_k);
    default:
        break;
    }
    const auto neighbors = nearest_neighbors(target, normalized_.projects(), schema, k);
    switch (strategy_) {
    case Strategy::eba: return {estimate_eba(neighbors, efforts_)};
    case Strategy::wmean: return {estimate_weighted_mean(neighbors, efforts_)};
    case Strategy::s_eba: return {estimate_similarity(neighbors, efforts_)};
    case Strategy::l_eba: return {estimate_linear_size(t, neighbors, training)};
    case Strategy::mendes: return {estimate_mendes_rules(t, neighbors, training)};
    default: break;
    }
    throw Error("unhandled strategy");
}

} // namespace effort
