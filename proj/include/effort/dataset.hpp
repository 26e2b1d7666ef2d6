#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace effort {

enum class FeatureKind { numeric, categorical };

// Role of one column in a data file. size_numeric is a numeric predictor that
// also serves as the project size (function points) for size-based adaptation.
enum class ColumnRole { numeric, categorical, effort, size_numeric, id, ignore };

auto parse_column_role(std::string_view token) -> ColumnRole;
auto to_string(ColumnRole role) -> std::string_view;

struct Column {
    std::string name;
    ColumnRole role;
};

// Column layout of a dataset file. Predictors are the numeric, categorical and
// size_numeric columns, in file order.
class Schema {
public:
    explicit Schema(std::vector<Column> columns);

    auto columns() const -> const std::vector<Column>& { return columns_; }
    auto predictor_count() const -> std::size_t { return predictors_.size(); }
    auto predictor_name(std::size_t p) const -> const std::string& { return columns_[predictors_[p]].name; }
    auto predictor_kind(std::size_t p) const -> FeatureKind { return kinds_[p]; }
    auto predictor_column(std::size_t p) const -> std::size_t { return predictors_[p]; }
    auto effort_column() const -> std::size_t { return effort_; }
    auto id_column() const -> std::optional<std::size_t> { return id_; }

    // Predictor position of the size attribute, if the schema declares one.
    auto size_predictor() const -> std::optional<std::size_t> { return size_; }

    // Predictor position for a column name, or nullopt if it is not a predictor.
    auto find_predictor(std::string_view name) const -> std::optional<std::size_t>;

    friend auto operator==(const Schema& a, const Schema& b) -> bool;

private:
    std::vector<Column> columns_;
    std::vector<std::size_t> predictors_;
    std::vector<FeatureKind> kinds_;
    std::size_t effort_ = 0;
    std::optional<std::size_t> id_;
    std::optional<std::size_t> size_;
};

// Schema text: one `name:kind` line per column, in file order. Blank lines and
// lines starting with '#' are skipped.
auto parse_schema(std::string_view text) -> Schema;
auto load_schema(const std::filesystem::path& path) -> Schema;

struct Missing {
    friend auto operator==(Missing, Missing) -> bool { return true; }
};

using FeatureValue = std::variant<Missing, double, std::string>;

auto is_missing(const FeatureValue& v) -> bool;

struct Project {
    std::string id;
    std::vector<FeatureValue> features; // aligned to Schema predictors
    std::optional<double> effort;       // nullopt only before remove_missing

    auto numeric(std::size_t p) const -> double;
    auto category(std::size_t p) const -> const std::string&;
    auto effort_value() const -> double;
    auto has_missing() const -> bool;
};

class Dataset {
public:
    Dataset(Schema schema, std::vector<Project> projects);

    auto schema() const -> const Schema& { return schema_; }
    auto projects() const -> std::span<const Project> { return projects_; }
    auto size() const -> std::size_t { return projects_.size(); }
    auto empty() const -> bool { return projects_.empty(); }
    auto operator[](std::size_t i) const -> const Project& { return projects_[i]; }

    auto efforts() const -> std::vector<double>;

    // Projects at the given positions, in the given order.
    auto subset(std::span<const std::size_t> indices) const -> Dataset;

private:
    Schema schema_;
    std::vector<Project> projects_;
};

// Missing cells are empty fields or the literal token "?".
auto is_missing_token(std::string_view token) -> bool;

// Delimited text (comma or tab, detected from the header line) with a header
// row equal to the schema's column names.
auto parse_dataset(std::string_view text, const Schema& schema) -> Dataset;
auto load_dataset(const std::filesystem::path& path, const Schema& schema) -> Dataset;

auto remove_missing(const Dataset& d) -> Dataset;

struct ColumnRange {
    double min;
    double max;
};

class Normalizer {
public:
    Normalizer(Schema schema, std::vector<std::optional<ColumnRange>> ranges);

    // Range for a numeric predictor; nullopt for categorical predictors.
    auto range(std::size_t p) const -> const std::optional<ColumnRange>& { return ranges_[p]; }
    auto schema() const -> const Schema& { return schema_; }

    auto apply(double v, std::size_t p) const -> double;
    auto invert(double v, std::size_t p) const -> double;
    auto apply(const Project& project) const -> Project;

private:
    Schema schema_;
    std::vector<std::optional<ColumnRange>> ranges_;
};

auto fit_normalizer(const Dataset& d) -> Normalizer;

// Min-max scaling of numeric predictors. Constant columns map to 0, values
// outside the fitted range are not clamped, effort is left in raw units.
auto apply_normalizer(const Normalizer& n, const Dataset& d) -> Dataset;

} // namespace effort
