#pragma once

#include "aurlab/dataio.hpp"
#include "aurlab/geometry.hpp"
#include "aurlab/regression.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace aurlab::harness {

using geometry::SetKind;
using regression::CvSpec;
using regression::FitMethod;

enum class LambdaPolicy { TheoremPaper, TheoremDerived, CV };

std::string policy_name(LambdaPolicy policy);
LambdaPolicy policy_from_name(const std::string& name);

struct DatasetSource {
    std::string id;
    std::optional<std::string> csv_path;  // exactly one of csv_path/synthetic
    std::string target = "y";
    std::vector<std::string> drop_columns;
    std::optional<dataio::SyntheticSpec> synthetic;

    dataio::CleanDataset load() const;
};

struct ExperimentConfig {
    DatasetSource dataset;
    std::vector<SetKind> sets{SetKind::Ellipsoidal, SetKind::Box, SetKind::Diamond,
                              SetKind::Budget};
    std::vector<double> rho_list{0.001, 0.01, 0.05, 0.1, 0.2, 0.3};
    double gamma_ratio = 0.8;              // budget cap as a fraction of rho
    std::vector<std::uint64_t> seeds;      // default 1..10 csv, 1..20 synthetic
    LambdaPolicy lambda_policy = LambdaPolicy::TheoremDerived;  // AUR; WUR always uses CV
    CvSpec cv;
    bool nesting = true;  // each rho level sampled outside the previous level
    bool perturb_before_split = false;
    // false: one split per dataset per master seed, reused across perturbation
    // seeds (the real-data protocol). true: re-split per perturbation seed
    // (the synthetic repetition protocol).
    bool resplit_per_seed = false;
    std::uint64_t master_seed = 0;
    int workers = 1;

    void validate() const;
    std::vector<std::uint64_t> effective_seeds() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct ExperimentRecord {
    std::string dataset_id;
    SetKind set;
    double rho = 0.0;
    std::uint64_t seed = 0;
    FitMethod method = FitMethod::AUR;
    LambdaPolicy lambda_policy = LambdaPolicy::CV;
    double lambda_used = 0.0;
    double train_mse = 0.0;
    double test_mse = 0.0;
    double runtime_ms = 0.0;  // in-memory diagnostic; not serialized
};

// Runs the (set x rho x seed) matrix: perturb the training design with one
// uniform draw from the set (nested across consecutive rho levels when
// configured), fit AUR under the configured lambda policy and WUR under CV,
// and score test MSE on the untouched test split. One 80/20 split per
// dataset per master seed, reused across perturbation seeds. A failing cell
// is logged to `log` and skipped; the run continues. Records come back
// sorted by (dataset, set, rho, seed, method, policy) regardless of worker
// count.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config, std::ostream& log);

struct SummaryRow {
    SetKind set;
    double rho = 0.0;
    double mean_improvement_pct = 0.0;  // 100 (wur - aur)/wur, averaged over pairs
    double std_error = 0.0;
    int count = 0;
    int lambda_distinct_count = 0;  // distinct AUR lambdas per dataset (max across datasets)
};

// Pairs AUR/WUR records on (dataset, set, rho, seed); throws DataError
// listing the missing keys when a pair is incomplete.
std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records);

// Tidy CSV (set, rho, mean_improvement, stderr, n) with bit-stable ordering
// and full-precision values.
void emit_plot_data(const std::vector<SummaryRow>& summary, const std::string& path);

// Summary table including the lambda-stability column.
void write_summary_csv(const std::vector<SummaryRow>& summary, const std::string& path);
std::vector<SummaryRow> read_plot_data(const std::string& path);

// JSONL results file: one header object followed by one object per record.
void write_records_jsonl(const std::vector<ExperimentRecord>& records,
                         const ExperimentConfig& config, const std::string& path);
std::vector<ExperimentRecord> read_records_jsonl(const std::string& path);

// FNV-1a digest of the canonical config serialization, hex encoded; printed
// in the reproducibility stanza and the results header.
std::string config_digest(const nlohmann::json& canonical);

}  // namespace aurlab::harness
