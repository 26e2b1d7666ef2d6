#include "effort/dataset.hpp"

#include "effort/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace effort {

namespace {

auto trim(std::string_view s) -> std::string_view
{
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

auto unquote(std::string_view s) -> std::string_view
{
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = trim(s.substr(1, s.size() - 2));
    }
    return s;
}

auto split_lines(std::string_view text) -> std::vector<std::string_view>
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

auto split_fields(std::string_view line, char delim) -> std::vector<std::string_view>
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(unquote(line.substr(start)));
            break;
        }
        out.push_back(unquote(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

auto parse_real(std::string_view token) -> std::optional<double>
{
    if (!token.empty() && token.front() == '+') {
        token.remove_prefix(1);
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

auto read_file(const std::filesystem::path& path) -> std::string
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(fmt::format("cannot read file '{}'", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

} // namespace

auto parse_column_role(std::string_view token) -> ColumnRole
{
    if (token == "numeric") return ColumnRole::numeric;
    if (token == "categorical") return ColumnRole::categorical;
    if (token == "effort") return ColumnRole::effort;
    if (token == "size_numeric") return ColumnRole::size_numeric;
    if (token == "id") return ColumnRole::id;
    if (token == "ignore") return ColumnRole::ignore;
    throw Error(fmt::format("unknown column kind '{}'", token));
}

auto to_string(ColumnRole role) -> std::string_view
{
    switch (role) {
    case ColumnRole::numeric: return "numeric";
    case ColumnRole::categorical: return "categorical";
    case ColumnRole::effort: return "effort";
    case ColumnRole::size_numeric: return "size_numeric";
    case ColumnRole::id: return "id";
    case ColumnRole::ignore: return "ignore";
    }
    return "?";
}

Schema::Schema(std::vector<Column> columns)
    : columns_(std::move(columns))
{
    std::set<std::string> names;
    std::optional<std::size_t> effort;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        const auto& col = columns_[c];
        if (col.name.empty()) {
            throw Error(fmt::format("schema column {} has an empty name", c + 1));
        }
        if (!names.insert(col.name).second) {
            throw Error(fmt::format("duplicate column name '{}'", col.name));
        }
        switch (col.role) {
        case ColumnRole::numeric:
        case ColumnRole::categorical:
        case ColumnRole::size_numeric:
            if (col.role == ColumnRole::size_numeric) {
                if (size_) {
                    throw Error("schema declares more than one size column");
                }
                size_ = predictors_.size();
            }
            predictors_.push_back(c);
            kinds_.push_back(col.role == ColumnRole::categorical ? FeatureKind::categorical : FeatureKind::numeric);
            break;
        case ColumnRole::effort:
            if (effort) {
                throw Error("schema declares more than one effort column");
            }
            effort = c;
            break;
        case ColumnRole::id:
            if (id_) {
                throw Error("schema declares more than one id column");
            }
            id_ = c;
            break;
        case ColumnRole::ignore:
            break;
        }
    }
    if (!effort) {
        throw Error("missing effort column");
    }
    effort_ = *effort;
}

auto Schema::find_predictor(std::string_view name) const -> std::optional<std::size_t>
{
    for (std::size_t p = 0; p < predictors_.size(); ++p) {
        if (columns_[predictors_[p]].name == name) {
            return p;
        }
    }
    return std::nullopt;
}

auto operator==(const Schema& a, const Schema& b) -> bool
{
    if (a.columns_.size() != b.columns_.size()) {
        return false;
    }
    for (std::size_t c = 0; c < a.columns_.size(); ++c) {
        if (a.columns_[c].name != b.columns_[c].name || a.columns_[c].role != b.columns_[c].role) {
            return false;
        }
    }
    return true;
}

auto parse_schema(std::string_view text) -> Schema
{
    std::vector<Column> columns;
    std::size_t lineno = 0;
    for (auto raw : split_lines(text)) {
        ++lineno;
        auto line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        auto colon = line.rfind(':');
        if (colon == std::string_view::npos) {
            throw Error(fmt::format("schema line {}: expected 'name:kind'", lineno));
        }
        columns.push_back({std::string(trim(line.substr(0, colon))), parse_column_role(trim(line.substr(colon + 1)))});
    }
    return Schema(std::move(columns));
}

auto load_schema(const std::filesystem::path& path) -> Schema
{
    return parse_schema(read_file(path));
}

auto is_missing(const FeatureValue& v) -> bool
{
    return std::holds_alternative<Missing>(v);
}

auto Project::numeric(std::size_t p) const -> double
{
    const auto* v = std::get_if<double>(&features.at(p));
    if (v == nullptr) {
        throw Error(fmt::format("project '{}': feature {} is not numeric", id, p));
    }
    return *v;
}

auto Project::category(std::size_t p) const -> const std::string&
{
    const auto* v = std::get_if<std::string>(&features.at(p));
    if (v == nullptr) {
        throw Error(fmt::format("project '{}': feature {} is not categorical", id, p));
    }
    return *v;
}

auto Project::effort_value() const -> double
{
    if (!effort) {
        throw Error(fmt::format("project '{}' has no effort value", id));
    }
    return *effort;
}

auto Project::has_missing() const -> bool
{
    return !effort || std::any_of(features.begin(), features.end(), [](const auto& v) { return is_missing(v); });
}

Dataset::Dataset(Schema schema, std::vector<Project> projects)
    : schema_(std::move(schema))
    , projects_(std::move(projects))
{
    std::set<std::string_view> ids;
    for (const auto& p : projects_) {
        if (p.features.size() != schema_.predictor_count()) {
            throw Error(fmt::format("project '{}' has {} features, schema has {} predictors", p.id,
                                    p.features.size(), schema_.predictor_count()));
        }
        for (std::size_t k = 0; k < p.features.size(); ++k) {
            const auto& v = p.features[k];
            if (is_missing(v)) {
                continue;
            }
            const bool numeric = std::holds_alternative<double>(v);
            if (numeric != (schema_.predictor_kind(k) == FeatureKind::numeric)) {
                throw Error(fmt::format("project '{}': feature '{}' has the wrong kind", p.id,
                                        schema_.predictor_name(k)));
            }
        }
        if (p.effort && !(*p.effort > 0.0)) {
            throw Error(fmt::format("project '{}': effort must be positive", p.id));
        }
        if (!ids.insert(p.id).second) {
            throw Error(fmt::format("duplicate project id '{}'", p.id));
        }
    }
}

auto Dataset::efforts() const -> std::vector<double>
{
    std::vector<double> out;
    out.reserve(projects_.size());
    for (const auto& p : projects_) {
        out.push_back(p.effort_value());
    }
    return out;
}

auto Dataset::subset(std::span<const std::size_t> indices) const -> Dataset
{
    std::vector<Project> out;
    out.reserve(indices.size());
    for (auto i : indices) {
        out.push_back(projects_.at(i));
    }
    return Dataset(schema_, std::move(out));
}

auto is_missing_token(std::string_view token) -> bool
{
    return token.empty() || token == "?";
}

auto parse_dataset(std::string_view text, const Schema& schema) -> Dataset
{
    auto lines = split_lines(text);
    std::size_t first = 0;
    while (first < lines.size() && trim(lines[first]).empty()) {
        ++first;
    }
    if (first == lines.size()) {
        throw Error("missing header row");
    }
    const auto header_line = lines[first];
    const char delim = header_line.find('\t') != std::string_view::npos ? '\t' : ',';
    const auto header = split_fields(header_line, delim);

    const auto& cols = schema.columns();
    const auto& effort_name = cols[schema.effort_column()].name;
    if (std::find(header.begin(), header.end(), effort_name) == header.end()) {
        throw Error("missing effort column");
    }
    bool match = header.size() == cols.size();
    for (std::size_t c = 0; match && c < cols.size(); ++c) {
        match = header[c] == cols[c].name;
    }
    if (!match) {
        throw Error("header does not match schema column names");
    }

    std::vector<Project> projects;
    for (std::size_t li = first + 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) {
            continue;
        }
        const auto fields = split_fields(lines[li], delim);
        if (fields.size() != cols.size()) {
            throw Error(fmt::format("line {}: expected {} fields, found {}", li + 1, cols.size(), fields.size()));
        }
        Project p;
        p.id = schema.id_column() && !is_missing_token(fields[*schema.id_column()])
            ? std::string(fields[*schema.id_column()])
            : fmt::format("row{}", projects.size() + 1);
        p.features.reserve(schema.predictor_count());
        for (std::size_t k = 0; k < schema.predictor_count(); ++k) {
            const auto c = schema.predictor_column(k);
            const auto token = fields[c];
            if (is_missing_token(token)) {
                p.features.emplace_back(Missing{});
            } else if (schema.predictor_kind(k) == FeatureKind::categorical) {
                p.features.emplace_back(std::string(token));
            } else if (auto v = parse_real(token)) {
                p.features.emplace_back(*v);
            } else {
                throw Error(fmt::format("line {}: non-numeric value '{}' in column '{}'", li + 1, token, cols[c].name));
            }
        }
        const auto effort_token = fields[schema.effort_column()];
        if (!is_missing_token(effort_token)) {
            auto v = parse_real(effort_token);
            if (!v) {
                throw Error(fmt::format("line {}: non-numeric value '{}' in column '{}'", li + 1, effort_token, effort_name));
            }
            p.effort = *v;
        }
        projects.push_back(std::move(p));
    }
    return Dataset(schema, std::move(projects));
}

auto load_dataset(const std::filesystem::path& path, const Schema& schema) -> Dataset
{
    return parse_dataset(read_file(path), schema);
}

auto remove_missing(const Dataset& d) -> Dataset
{
    std::vector<Project> kept;
    for (const auto& p : d.projects()) {
        if (!p.has_missing()) {
            kept.push_back(p);
        }
    }
    return Dataset(d.schema(), std::move(kept));
}

Normalizer::Normalizer(Schema schema, std::vector<std::optional<ColumnRange>> ranges)
    : schema_(std::move(schema))
    , ranges_(std::move(ranges))
{
    if (ranges_.size() != schema_.predictor_count()) {
        throw Error("normalizer range count does not match schema");
    }
    for (const auto& r : ranges_) {
        if (r && !(r->min <= r->max)) {
            throw Error("normalizer range has min > max");
        }
    }
}

auto Normalizer::apply(double v, std::size_t p) const -> double
{
    const auto& r = ranges_.at(p);
    if (!r) {
        throw Error(fmt::format("predictor '{}' is not numeric", schema_.predictor_name(p)));
    }
    if (r->max == r->min) {
        return 0.0;
    }
    return (v - r->min) / (r->max - r->min);
}

auto Normalizer::invert(double v, std::size_t p) const -> double
{
    const auto& r = ranges_.at(p);
    if (!r) {
        throw Error(fmt::format("predictor '{}' is not numeric", schema_.predictor_name(p)));
    }
    return v * (r->max - r->min) + r->min;
}

auto Normalizer::apply(const Project& project) const -> Project
{
    if (project.features.size() != ranges_.size()) {
        throw Error(fmt::format("project '{}' does not match the normalizer schema", project.id));
    }
    Project out = project;
    for (std::size_t k = 0; k < out.features.size(); ++k) {
        if (auto* v = std::get_if<double>(&out.features[k])) {
            *v = apply(*v, k);
        }
    }
    return out;
}

auto fit_normalizer(const Dataset& d) -> Normalizer
{
    if (d.empty()) {
        throw Error("cannot fit a normalizer on an empty dataset");
    }
    const auto& schema = d.schema();
    std::vector<std::optional<ColumnRange>> ranges(schema.predictor_count());
    for (std::size_t k = 0; k < schema.predictor_count(); ++k) {
        if (schema.predictor_kind(k) != FeatureKind::numeric) {
            continue;
        }
        ColumnRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (const auto& p : d.projects()) {
            if (const auto* v = std::get_if<double>(&p.features[k])) {
                r.min = std::min(r.min, *v);
                r.max = std::max(r.max, *v);
            }
        }
        if (r.min > r.max) {
            throw Error(fmt::format("column '{}' has no values to fit", schema.predictor_name(k)));
        }
        ranges[k] = r;
    }
    return Normalizer(schema, std::move(ranges));
}

auto apply_normalizer(const Normalizer& n, const Dataset& d) -> Dataset
{
    if (!(n.schema() == d.schema())) {
        throw Error("dataset schema does not match the normalizer");
    }
    std::vector<Project> out;
    out.reserve(d.size());
    for (const auto& p : d.projects()) {
        out.push_back(n.apply(p));
    }
    return Dataset(d.schema(), std::move(out));
}

} // namespace effort
