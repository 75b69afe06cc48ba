#pragma once

#include "aurlab/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aurlab::dataio {

// Parsed CSV: header names plus optionally-missing numeric cells.
// Non-numeric tokens are treated as missing, not as parse failures.
struct RawTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> cells;  // row major
    std::string target;

    std::size_t column_index(const std::string& name) const;
};

struct ScalingBounds {
    double low = 0.0;
    double high = 1.0;
    bool constant = false;  // degenerate column, mapped to all 0.5

    double scale(double x) const { return constant ? 0.5 : (x - low) / (high - low); }
    double unscale(double s) const { return constant ? low : low + s * (high - low); }
};

struct Provenance {
    std::vector<std::string> dropped_columns;
    std::int64_t dropped_rows = 0;
    std::vector<std::string> feature_names;
    std::vector<ScalingBounds> feature_bounds;
    ScalingBounds target_bounds;
};

// Fully numeric dataset, min-max scaled to [0,1] per column (target
// included); provenance holds everything needed to invert the scaling.
struct CleanDataset {
    Matrix X;
    Vector y;
    std::string target_name;
    Provenance provenance;
};

struct SyntheticSpec {
    int n_samples = 300;
    int n_informative = 5;
    int n_features = 5;
    double noise_sd = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

// RFC-4180 CSV with a header row; throws DataError for unreadable files,
// a missing target column, or zero data rows.
RawTable ingest_csv(const std::string& path, const std::string& target_name);
RawTable parse_csv_text(const std::string& text, const std::string& target_name);

// Pipeline order is fixed: drop feature columns with >20% missing cells,
// then drop rows with any remaining missing cell, then min-max scale every
// column and the target on the full data. `drop_columns` lists features to
// remove up front (dataset-specific curation knob).
CleanDataset preprocess(const RawTable& table, const std::vector<std::string>& drop_columns = {});

// Standard-normal features, standard-normal weights on the first
// n_informative coordinates, y = Xw + noise; then min-max scaled like real
// data. Fully seed-deterministic.
CleanDataset make_synthetic(const SyntheticSpec& spec);

// Pre-scaling internals of make_synthetic, for oracle checks.
struct SyntheticRaw {
    Matrix X;
    Vector y;
    Vector weights;
};
SyntheticRaw make_synthetic_raw(const SyntheticSpec& spec);

// Seeded permutation split; first floor(0.8 n) rows train, rest test.
// Requires n >= 5.
struct TrainTestSplit {
    CleanDataset train;
    CleanDataset test;
};
TrainTestSplit split_80_20(const CleanDataset& dataset, std::uint64_t seed);

// CSV out (features then target column) plus a JSON provenance sidecar.
void write_dataset_csv(const CleanDataset& dataset, const std::string& path);
nlohmann::json provenance_to_json(const Provenance& provenance);

}  // namespace aurlab::dataio
