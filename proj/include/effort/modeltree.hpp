#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace effort {

// Numeric regression data for model-tree induction, stored row-major.
class TrainingMatrix {
public:
    TrainingMatrix(std::vector<std::string> names, std::vector<std::vector<double>> inputs,
                   std::vector<double> outputs);

    auto rows() const -> std::size_t { return outputs_.size(); }
    auto arity() const -> std::size_t { return names_.size(); }
    auto names() const -> const std::vector<std::string>& { return names_; }
    auto input(std::size_t row) const -> std::span<const double> { return inputs_[row]; }
    auto value(std::size_t row, std::size_t col) const -> double { return inputs_[row][col]; }
    auto output(std::size_t row) const -> double { return outputs_[row]; }
    auto outputs() const -> std::span<const double> { return outputs_; }

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> inputs_;
    std::vector<double> outputs_;
};

struct LinearModel {
    double intercept = 0.0;
    std::vector<std::size_t> terms; // retained input indices, ascending
    std::vector<double> coefficients; // aligned with terms

    auto predict(std::span<const double> x) const -> double;
    auto parameter_count() const -> std::size_t { return terms.size() + 1; }
};

struct TreeParams {
    std::size_t min_leaf = 4;
    double sd_stop_fraction = 0.05;
    double smoothing_k = 15.0;
    bool prune = true;
};

struct ModelTreeNode {
    LinearModel model;       // node model; the prediction model when this is a leaf
    std::size_t n = 0;       // training rows reaching the node
    double sd = 0.0;         // population sd of the outputs at the node
    double model_error = 0.0; // adjusted error of `model` on the node's rows

    // Split data, meaningful only when !is_leaf().
    std::size_t input_index = 0;
    double threshold = 0.0;
    std::unique_ptr<ModelTreeNode> left;  // value <= threshold
    std::unique_ptr<ModelTreeNode> right; // value > threshold

    auto is_leaf() const -> bool { return !left; }
    auto clone() const -> ModelTreeNode;
};

struct ModelTree {
    std::vector<std::string> input_names;
    ModelTreeNode root;

    auto arity() const -> std::size_t { return input_names.size(); }
};

// Population standard deviation.
auto population_sd(std::span<const double> values) -> double;

// (n + v) / (n - v) * mean absolute residual, v = fitted parameter count.
auto adjusted_error(std::size_t n, std::size_t v, double mean_abs_residual) -> double;

// sd(T) - sum |T_i|/|T| sd(T_i) for the split of `rows` at input <= threshold.
// Throws if either side would be empty.
auto sd_reduction(const TrainingMatrix& m, std::span<const std::size_t> rows, std::size_t input_index,
                  double threshold) -> double;
auto sd_reduction(const TrainingMatrix& m, std::size_t input_index, double threshold) -> double;

auto fit_leaf_model(const TrainingMatrix& m, std::span<const std::size_t> rows) -> LinearModel;
auto fit_leaf_model(const TrainingMatrix& m) -> LinearModel;

auto build_tree(const TrainingMatrix& m, const TreeParams& p = {}) -> ModelTree;

// Bottom-up collapse of splits whose node model is no worse than the subtree.
auto prune(ModelTreeNode root) -> ModelTreeNode;

auto predict(const ModelTree& tree, std::span<const double> x, double smoothing_k) -> double;

auto leaf_count(const ModelTreeNode& root) -> std::size_t;
auto depth(const ModelTreeNode& root) -> std::size_t;

auto dump_tree(const ModelTree& tree) -> std::string;

} // namespace effort
