#include "aurlab/dataio.hpp"

#include "aurlab/rng.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

namespace aurlab::dataio {

namespace {

// RFC-4180 field splitting: quoted fields may contain commas, newlines and
// doubled quotes.
std::vector<std::vector<std::string>> split_records(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    std::size_t i = 0;
    const std::size_t size = text.size();
    auto end_field = [&]() {
        record.push_back(field);
        field.clear();
    };
    auto end_record = [&]() {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };
    while (i < size) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < size && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_record();
        } else {
            field.push_back(c);
        }
        ++i;
    }
    if (!field.empty() || !record.empty()) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        end_record();
    }
    return records;
}

std::optional<double> parse_cell(const std::string& token) {
    std::size_t begin = token.find_first_not_of(" \t");
    if (begin == std::string::npos) return std::nullopt;
    std::size_t end = token.find_last_not_of(" \t");
    const std::string trimmed = token.substr(begin, end - begin + 1);
    errno = 0;
    char* parse_end = nullptr;
    const double value = std::strtod(trimmed.c_str(), &parse_end);
    if (parse_end != trimmed.c_str() + trimmed.size() || errno == ERANGE || !std::isfinite(value))
        return std::nullopt;  // non-numeric token -> missing cell
    return value;
}

ScalingBounds bounds_of(const std::vector<double>& values) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    ScalingBounds bounds{*lo, *hi, *hi == *lo};
    return bounds;
}

CleanDataset scale_dataset(const Matrix& X, const Vector& y,
                           std::vector<std::string> feature_names, std::string target_name,
                           Provenance provenance) {
    CleanDataset out;
    out.X.resize(X.rows(), X.cols());
    out.y.resize(y.size());
    provenance.feature_names = std::move(feature_names);
    provenance.feature_bounds.clear();
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        std::vector<double> column(X.col(j).data(), X.col(j).data() + X.rows());
        const ScalingBounds bounds = bounds_of(column);
        for (Eigen::Index i = 0; i < X.rows(); ++i) out.X(i, j) = bounds.scale(X(i, j));
        provenance.feature_bounds.push_back(bounds);
    }
    std::vector<double> target(y.data(), y.data() + y.size());
    provenance.target_bounds = bounds_of(target);
    for (Eigen::Index i = 0; i < y.size(); ++i) out.y[i] = provenance.target_bounds.scale(y[i]);
    out.target_name = std::move(target_name);
    out.provenance = std::move(provenance);
    return out;
}

CleanDataset take_rows(const CleanDataset& dataset, const std::vector<Eigen::Index>& rows) {
    CleanDataset out;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), dataset.X.cols());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<Eigen::Index>(i)) = dataset.X.row(rows[i]);
        out.y[static_cast<Eigen::Index>(i)] = dataset.y[rows[i]];
    }
    out.target_name = dataset.target_name;
    out.provenance = dataset.provenance;
    return out;
}

}  // namespace

std::size_t RawTable::column_index(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw DataError("column '" + name + "' not found");
    return static_cast<std::size_t>(it - columns.begin());
}

void SyntheticSpec::validate() const {
    if (n_samples < 1 || n_features < 1 || n_informative < 0)
        throw ConfigError("synthetic spec: sizes must be positive");
    if (n_informative > n_features)
        throw ConfigError("synthetic spec: n_informative exceeds n_features");
    if (noise_sd < 0.0) throw ConfigError("synthetic spec: noise_sd must be nonnegative");
}

RawTable parse_csv_text(const std::string& text, const std::string& target_name) {
    const auto records = split_records(text);
    if (records.empty()) throw DataError("csv: empty file");
    RawTable table;
    table.columns = records[0];
    if (table.columns.size() < 2) throw DataError("csv: need at least 2 columns");
    if (std::find(table.columns.begin(), table.columns.end(), target_name) ==
        table.columns.end())
        throw DataError("csv: target column '" + target_name + "' not present");
    table.target = target_name;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& record = records[r];
        if (record.size() == 1 && record[0].empty()) continue;  // trailing blank line
        if (record.size() != table.columns.size())
            throw DataError("csv: row " + std::to_string(r) + " has " +
                            std::to_string(record.size()) + " fields, header has " +
                            std::to_string(table.columns.size()));
        std::vector<std::optional<double>> row;
        row.reserve(record.size());
        for (const std::string& token : record) row.push_back(parse_cell(token));
        table.cells.push_back(std::move(row));
    }
    if (table.cells.empty()) throw DataError("csv: zero data rows");
    return table;
}

RawTable ingest_csv(const std::string& path, const std::string& target_name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv_text(buffer.str(), target_name);
}

CleanDataset preprocess(const RawTable& table, const std::vector<std::string>& drop_columns) {
    const std::size_t n_rows = table.cells.size();
    const std::size_t target_idx = table.column_index(table.target);

    Provenance provenance;

    // Pass 1: drop requested columns and feature columns with >20% missing.
    std::vector<std::size_t> kept_features;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        if (j == target_idx) continue;
        if (std::find(drop_columns.begin(), drop_columns.end(), table.columns[j]) !=
            drop_columns.end()) {
            provenance.dropped_columns.push_back(table.columns[j]);
            continue;
        }
        std::size_t missing = 0;
        for (const auto& row : table.cells)
            if (!row[j]) ++missing;
        if (static_cast<double>(missing) > 0.2 * static_cast<double>(n_rows)) {
            provenance.dropped_columns.push_back(table.columns[j]);
            continue;
        }
        kept_features.push_back(j);
    }
    if (kept_features.empty()) throw DataError("preprocess: no feature columns survive");

    // Pass 2: drop rows with any remaining missing cell (target included).
    std::vector<std::size_t> kept_rows;
    for (std::size_t r = 0; r < n_rows; ++r) {
        bool complete = table.cells[r][target_idx].has_value();
        for (std::size_t j : kept_features) complete = complete && table.cells[r][j].has_value();
        if (complete) kept_rows.push_back(r);
    }
    provenance.dropped_rows = static_cast<std::int64_t>(n_rows - kept_rows.size());
    if (kept_rows.empty()) throw DataError("preprocess: every row was dropped");

    Matrix X(static_cast<Eigen::Index>(kept_rows.size()),
             static_cast<Eigen::Index>(kept_features.size()));
    Vector y(static_cast<Eigen::Index>(kept_rows.size()));
    std::vector<std::string> feature_names;
    for (std::size_t j : kept_features) feature_names.push_back(table.columns[j]);
    for (std::size_t i = 0; i < kept_rows.size(); ++i) {
        for (std::size_t j = 0; j < kept_features.size(); ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                *table.cells[kept_rows[i]][kept_features[j]];
        y[static_cast<Eigen::Index>(i)] = *table.cells[kept_rows[i]][target_idx];
    }

    return scale_dataset(X, y, std::move(feature_names), table.target, std::move(provenance));
}

SyntheticRaw make_synthetic_raw(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    SyntheticRaw raw;
    raw.X.resize(spec.n_samples, spec.n_features);
    for (int i = 0; i < spec.n_samples; ++i)
        for (int j = 0; j < spec.n_features; ++j) raw.X(i, j) = rng.normal();
    raw.weights = Vector::Zero(spec.n_features);
    for (int j = 0; j < spec.n_informative; ++j) raw.weights[j] = rng.normal();
    raw.y = raw.X * raw.weights;
    for (int i = 0; i < spec.n_samples; ++i) raw.y[i] += spec.noise_sd * rng.normal();
    return raw;
}

CleanDataset make_synthetic(const SyntheticSpec& spec) {
    const SyntheticRaw raw = make_synthetic_raw(spec);
    std::vector<std::string> names;
    for (int j = 0; j < spec.n_features; ++j) names.push_back("x" + std::to_string(j + 1));
    return scale_dataset(raw.X, raw.y, std::move(names), "y", Provenance{});
}

TrainTestSplit split_80_20(const CleanDataset& dataset, std::uint64_t seed) {
    const Eigen::Index n = dataset.X.rows();
    if (n < 5) throw ConfigError("split_80_20: need at least 5 rows");
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Rng rng(seed);
    for (std::size_t i = perm.size() - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.below(i + 1)]);
    const auto train_count = static_cast<std::size_t>((n * 8) / 10);
    std::vector<Eigen::Index> train_rows(perm.begin(),
                                         perm.begin() + static_cast<std::ptrdiff_t>(train_count));
    std::vector<Eigen::Index> test_rows(perm.begin() + static_cast<std::ptrdiff_t>(train_count),
                                        perm.end());
    return {take_rows(dataset, train_rows), take_rows(dataset, test_rows)};
}

nlohmann::json provenance_to_json(const Provenance& provenance) {
    nlohmann::json bounds = nlohmann::json::array();
    for (std::size_t j = 0; j < provenance.feature_bounds.size(); ++j) {
        const ScalingBounds& b = provenance.feature_bounds[j];
        bounds.push_back({{"column", provenance.feature_names[j]},
                          {"low", b.low},
                          {"high", b.high},
                          {"constant", b.constant}});
    }
    return nlohmann::json{
        {"dropped_columns", provenance.dropped_columns},
        {"dropped_rows", provenance.dropped_rows},
        {"feature_bounds", bounds},
        {"target_bounds",
         {{"low", provenance.target_bounds.low},
          {"high", provenance.target_bounds.high},
          {"constant", provenance.target_bounds.constant}}}};
}

void write_dataset_csv(const CleanDataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.precision(17);
    for (std::size_t j = 0; j < dataset.provenance.feature_names.size(); ++j)
        out << dataset.provenance.feature_names[j] << ",";
    out << dataset.target_name << "\n";
    for (Eigen::Index i = 0; i < dataset.X.rows(); ++i) {
        for (Eigen::Index j = 0; j < dataset.X.cols(); ++j) out << dataset.X(i, j) << ",";
        out << dataset.y[i] << "\n";
    }
    std::ofstream sidecar(path + ".provenance.json", std::ios::binary);
    if (!sidecar) throw DataError("cannot write '" + path + ".provenance.json'");
    sidecar << provenance_to_json(dataset.provenance).dump(2) << "\n";
}

}  // namespace aurlab::dataio
