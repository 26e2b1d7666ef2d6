#include "effort/modeltree.hpp"

#include "effort/error.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

namespace effort {

TrainingMatrix::TrainingMatrix(std::vector<std::string> names, std::vector<std::vector<double>> inputs,
                               std::vector<double> outputs)
    : names_(std::move(names))
    , inputs_(std::move(inputs))
    , outputs_(std::move(outputs))
{
    if (names_.empty()) {
        throw Error("training matrix needs at least one input column");
    }
    if (outputs_.empty()) {
        throw Error("training matrix is empty");
    }
    if (inputs_.size() != outputs_.size()) {
        throw Error("training matrix input and output row counts differ");
    }
    for (const auto& row : inputs_) {
        if (row.size() != names_.size()) {
            throw Error(fmt::format("training row has {} inputs, expected {}", row.size(), names_.size()));
        }
    }
}

auto LinearModel::predict(std::span<const double> x) const -> double
{
    double y = intercept;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        y += coefficients[t] * x[terms[t]];
    }
    return y;
}

auto ModelTreeNode::clone() const -> ModelTreeNode
{
    ModelTreeNode c;
    c.model = model;
    c.n = n;
    c.sd = sd;
    c.model_error = model_error;
    c.input_index = input_index;
    c.threshold = threshold;
    if (left) {
        c.left = std::make_unique<ModelTreeNode>(left->clone());
        c.right = std::make_unique<ModelTreeNode>(right->clone());
    }
    return c;
}

auto population_sd(std::span<const double> values) -> double
{
    if (values.empty()) {
        return 0.0;
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(values.size()));
}

auto adjusted_error(std::size_t n, std::size_t v, double mean_abs_residual) -> double
{
    // Too few rows for the parameter count: heavy fixed penalty.
    const double factor = n > v ? static_cast<double>(n + v) / static_cast<double>(n - v) : 10.0;
    return factor * mean_abs_residual;
}

namespace {

auto all_rows(const TrainingMatrix& m) -> std::vector<std::size_t>
{
    std::vector<std::size_t> rows(m.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

auto outputs_of(const TrainingMatrix& m, std::span<const std::size_t> rows) -> std::vector<double>
{
    std::vector<double> y;
    y.reserve(rows.size());
    for (auto r : rows) {
        y.push_back(m.output(r));
    }
    return y;
}

auto mean_model(const TrainingMatrix& m, std::span<const std::size_t> rows) -> LinearModel
{
    double sum = 0.0;
    for (auto r : rows) {
        sum += m.output(r);
    }
    return LinearModel{sum / static_cast<double>(rows.size()), {}, {}};
}

auto model_error(const TrainingMatrix& m, std::span<const std::size_t> rows, const LinearModel& model) -> double
{
    double abs_sum = 0.0;
    for (auto r : rows) {
        abs_sum += std::abs(m.output(r) - model.predict(m.input(r)));
    }
    return adjusted_error(rows.size(), model.parameter_count(), abs_sum / static_cast<double>(rows.size()));
}

// Least squares on the given terms plus an intercept; nullopt when the design
// matrix is rank deficient.
auto least_squares(const TrainingMatrix& m, std::span<const std::size_t> rows, const std::vector<std::size_t>& terms)
    -> std::optional<LinearModel>
{
    if (terms.empty()) {
        return mean_model(m, rows);
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto cols = static_cast<Eigen::Index>(terms.size() + 1);
    Eigen::MatrixXd a(n, cols);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = rows[static_cast<std::size_t>(i)];
        a(i, 0) = 1.0;
        for (std::size_t t = 0; t < terms.size(); ++t) {
            a(i, static_cast<Eigen::Index>(t + 1)) = m.value(r, terms[t]);
        }
        b(i) = m.output(r);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < cols) {
        return std::nullopt;
    }
    const Eigen::VectorXd beta = qr.solve(b);
    if (!beta.allFinite()) {
        return std::nullopt;
    }
    LinearModel model{beta(0), terms, {}};
    for (std::size_t t = 0; t < terms.size(); ++t) {
        model.coefficients.push_back(beta(static_cast<Eigen::Index>(t + 1)));
    }
    return model;
}

struct SplitChoice {
    std::size_t input = 0;
    double threshold = 0.0;
    double reduction = 0.0;
};

// Best admissible split by one sorted sweep per input. Both sides keep at
// least min_leaf rows; earlier input and lower threshold win ties.
auto best_split(const TrainingMatrix& m, std::span<const std::size_t> rows, double node_sd, std::size_t min_leaf)
    -> std::optional<SplitChoice>
{
    const std::size_t n = rows.size();
    const auto y = outputs_of(m, rows);
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    std::optional<SplitChoice> best;
    std::vector<std::size_t> order(n);
    for (std::size_t input = 0; input < m.arity(); ++input) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return m.value(rows[a], input) < m.value(rows[b], input);
        });
        double total = 0.0;
        double total_sq = 0.0;
        for (auto i : order) {
            const double c = y[i] - mean;
            total += c;
            total_sq += c * c;
        }
        double left = 0.0;
        double left_sq = 0.0;
        for (std::size_t pos = 0; pos + 1 < n; ++pos) {
            const double c = y[order[pos]] - mean;
            left += c;
            left_sq += c * c;
            const std::size_t nl = pos + 1;
            const std::size_t nr = n - nl;
            const double lo = m.value(rows[order[pos]], input);
            const double hi = m.value(rows[order[pos + 1]], input);
            if (nl < min_leaf || nr < min_leaf || !(lo < hi)) {
                continue;
            }
            const auto side_sd = [](double s, double sq, std::size_t k) {
                const double mu = s / static_cast<double>(k);
                return std::sqrt(std::max(0.0, sq / static_cast<double>(k) - mu * mu));
            };
            const double sdl = side_sd(left, left_sq, nl);
            const double sdr = side_sd(total - left, total_sq - left_sq, nr);
            const double reduction =
                node_sd - (static_cast<double>(nl) * sdl + static_cast<double>(nr) * sdr) / static_cast<double>(n);
            if (!best || reduction > best->reduction) {
                double threshold = 0.5 * (lo + hi);
                if (!(threshold < hi)) {
                    threshold = lo;
                }
                best = SplitChoice{input, threshold, reduction};
            }
        }
    }
    return best;
}

auto build_node(const TrainingMatrix& m, std::vector<std::size_t> rows, const TreeParams& p, double root_sd)
    -> ModelTreeNode
{
    ModelTreeNode node;
    node.n = rows.size();
    const auto y = outputs_of(m, rows);
    node.sd = population_sd(y);
    node.model = fit_leaf_model(m, rows);
    node.model_error = model_error(m, rows, node.model);

    if (rows.size() < 2 * p.min_leaf || node.sd == 0.0 || node.sd < p.sd_stop_fraction * root_sd) {
        return node;
    }
    const auto split = best_split(m, rows, node.sd, p.min_leaf);
    // Reductions at rounding-noise level are not real structure.
    if (!split || !(split->reduction > 1e-12 * node.sd)) {
        return node;
    }
    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (auto r : rows) {
        (m.value(r, split->input) <= split->threshold ? left_rows : right_rows).push_back(r);
    }
    node.input_index = split->input;
    node.threshold = split->threshold;
    node.left = std::make_unique<ModelTreeNode>(build_node(m, std::move(left_rows), p, root_sd));
    node.right = std::make_unique<ModelTreeNode>(build_node(m, std::move(right_rows), p, root_sd));
    return node;
}

// Returns the adjusted error of the (possibly collapsed) subtree.
auto prune_node(ModelTreeNode& node) -> double
{
    if (node.is_leaf()) {
        return node.model_error;
    }
    const double el = prune_node(*node.left);
    const double er = prune_node(*node.right);
    const double subtree =
        (static_cast<double>(node.left->n) * el + static_cast<double>(node.right->n) * er) / static_cast<double>(node.n);
    // Exact fits leave rounding noise in both errors; treat it as a tie.
    if (node.model_error <= subtree + 1e-9 * node.sd) {
        node.left.reset();
        node.right.reset();
        return node.model_error;
    }
    return subtree;
}

auto format_number(double v) -> std::string
{
    return fmt::format("{:.8g}", v);
}

auto format_model(const LinearModel& model, const std::vector<std::string>& names) -> std::string
{
    std::string out = "y = " + format_number(model.intercept);
    for (std::size_t t = 0; t < model.terms.size(); ++t) {
        const double c = model.coefficients[t];
        out += fmt::format(" {} {}*{}", c < 0.0 ? '-' : '+', format_number(std::abs(c)), names[model.terms[t]]);
    }
    return out;
}

void dump_node(const ModelTreeNode& node, const std::vector<std::string>& names, std::size_t indent, std::string& out)
{
    const std::string pad(indent * 2, ' ');
    if (node.is_leaf()) {
        out += fmt::format("{}{} ({})\n", pad, format_model(node.model, names), node.n);
        return;
    }
    out += fmt::format("{}if {} <= {}\n", pad, names[node.input_index], format_number(node.threshold));
    dump_node(*node.left, names, indent + 1, out);
    out += pad + "else\n";
    dump_node(*node.right, names, indent + 1, out);
}

} // namespace

auto sd_reduction(const TrainingMatrix& m, std::span<const std::size_t> rows, std::size_t input_index,
                  double threshold) -> double
{
    if (input_index >= m.arity()) {
        throw Error("split input index out of range");
    }
    std::vector<double> all;
    std::vector<double> left;
    std::vector<double> right;
    for (auto r : rows) {
        all.push_back(m.output(r));
        (m.value(r, input_index) <= threshold ? left : right).push_back(m.output(r));
    }
    if (left.empty() || right.empty()) {
        throw Error("degenerate split: one side is empty");
    }
    const double n = static_cast<double>(all.size());
    return population_sd(all) - (static_cast<double>(left.size()) / n) * population_sd(left)
        - (static_cast<double>(right.size()) / n) * population_sd(right);
}

auto sd_reduction(const TrainingMatrix& m, std::size_t input_index, double threshold) -> double
{
    const auto rows = all_rows(m);
    return sd_reduction(m, rows, input_index, threshold);
}

auto fit_leaf_model(const TrainingMatrix& m, std::span<const std::size_t> rows) -> LinearModel
{
    if (rows.empty()) {
        throw Error("cannot fit a model on zero rows");
    }
    std::vector<std::size_t> terms;
    for (std::size_t j = 0; j < m.arity(); ++j) {
        const double first = m.value(rows.front(), j);
        const bool varies = std::any_of(rows.begin(), rows.end(), [&](auto r) { return m.value(r, j) != first; });
        if (varies) {
            terms.push_back(j);
        }
    }
    if (rows.size() < terms.size() + 2) {
        return mean_model(m, rows);
    }
    auto full = least_squares(m, rows, terms);
    if (!full) {
        return mean_model(m, rows);
    }
    LinearModel current = std::move(*full);
    double current_error = model_error(m, rows, current);
    while (!current.terms.empty()) {
        std::optional<LinearModel> best;
        double best_error = std::numeric_limits<double>::infinity();
        for (std::size_t drop = 0; drop < current.terms.size(); ++drop) {
            auto reduced = current.terms;
            reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(drop));
            auto candidate = least_squares(m, rows, reduced);
            if (!candidate) {
                continue;
            }
            const double e = model_error(m, rows, *candidate);
            if (e < best_error) {
                best_error = e;
                best = std::move(candidate);
            }
        }
        if (!best || best_error > current_error) {
            break;
        }
        current = std::move(*best);
        current_error = best_error;
    }
    return current;
}

auto fit_leaf_model(const TrainingMatrix& m) -> LinearModel
{
    const auto rows = all_rows(m);
    return fit_leaf_model(m, rows);
}

auto build_tree(const TrainingMatrix& m, const TreeParams& p) -> ModelTree
{
    if (p.min_leaf == 0) {
        throw Error("min_leaf must be positive");
    }
    if (!(p.sd_stop_fraction > 0.0 && p.sd_stop_fraction < 1.0)) {
        throw Error("sd_stop_fraction must lie in (0, 1)");
    }
    const double root_sd = population_sd(m.outputs());
    auto root = build_node(m, all_rows(m), p, root_sd);
    if (p.prune) {
        root = prune(std::move(root));
    }
    return ModelTree{m.names(), std::move(root)};
}

auto prune(ModelTreeNode root) -> ModelTreeNode
{
    prune_node(root);
    return root;
}

auto predict(const ModelTree& tree, std::span<const double> x, double smoothing_k) -> double
{
    if (x.size() != tree.arity()) {
        throw Error(fmt::format("model tree expects {} inputs, got {}", tree.arity(), x.size()));
    }
    std::vector<const ModelTreeNode*> path;
    const ModelTreeNode* node = &tree.root;
    while (!node->is_leaf()) {
        path.push_back(node);
        node = x[node->input_index] <= node->threshold ? node->left.get() : node->right.get();
    }
    double value = node->model.predict(x);
    if (smoothing_k == 0.0) {
        return value;
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        const double n = static_cast<double>((*it)->n);
        value = (n * value + smoothing_k * (*it)->model.predict(x)) / (n + smoothing_k);
    }
    return value;
}

auto leaf_count(const ModelTreeNode& root) -> std::size_t
{
    return root.is_leaf() ? 1 : leaf_count(*root.left) + leaf_count(*root.right);
}

auto depth(const ModelTreeNode& root) -> std::size_t
{
    return root.is_leaf() ? 0 : 1 + std::max(depth(*root.left), depth(*root.right));
}

auto dump_tree(const ModelTree& tree) -> std::string
{
    std::string out;
    dump_node(tree.root, tree.input_names, 0, out);
    out += fmt::format("Number of rules in the tree: {}\n", leaf_count(tree.root));
    return out;
}

} // namespace effort
