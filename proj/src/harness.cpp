#include "aurlab/harness.hpp"

#include "aurlab/audit.hpp"
#include "aurlab/rng.hpp"
#include "aurlab/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace aurlab::harness {

namespace {

using geometry::UncertaintySet;
using regression::FitResult;
using regression::RegressionProblem;

UncertaintySet make_set(SetKind kind, double rho, double gamma_ratio, int rows, int cols) {
    switch (kind) {
        case SetKind::Ellipsoidal: return UncertaintySet::ellipsoidal(rho, rows, cols);
        case SetKind::Box: return UncertaintySet::box(rho, rows, cols);
        case SetKind::Diamond: return UncertaintySet::diamond(rho, rows, cols);
        case SetKind::Budget: return UncertaintySet::budget(rho, gamma_ratio * rho, rows, cols);
    }
    throw ConfigError("make_set: unknown kind");
}

struct Cell {
    SetKind set;
    int rho_index;
    std::uint64_t seed;
};

Matrix draw_perturbation(const ExperimentConfig& config, const Cell& cell, int rows, int cols,
                         std::uint64_t stream_seed) {
    const double rho = config.rho_list[static_cast<std::size_t>(cell.rho_index)];
    if (rho == 0.0) return Matrix::Zero(rows, cols);

    sampling::SamplerConfig sampler;
    sampler.seed = stream_seed;
    const UncertaintySet level = make_set(cell.set, rho, config.gamma_ratio, rows, cols);
    const double prev_rho =
        cell.rho_index > 0 ? config.rho_list[static_cast<std::size_t>(cell.rho_index - 1)] : 0.0;
    if (config.nesting && prev_rho > 0.0) {
        const UncertaintySet inner = make_set(cell.set, prev_rho, config.gamma_ratio, rows, cols);
        return sampling::nested_level_sample(inner, level, sampler, 1).samples.front();
    }
    return sampling::hit_and_run(level, sampler, 1).samples.front();
}

double theorem_lambda(const ExperimentConfig& config, SetKind kind, double rho, int rows,
                      int cols, geometry::PenaltyMode mode) {
    if (rho == 0.0) return 0.0;
    return geometry::ridge_lambda(make_set(kind, rho, config.gamma_ratio, rows, cols), mode);
}

std::string cell_key(const DatasetSource& dataset, const Cell& cell) {
    std::ostringstream key;
    key << dataset.id << '/' << geometry::kind_name(cell.set) << "/rho" << cell.rho_index
        << "/seed" << cell.seed;
    return key.str();
}

std::tuple<std::string, std::string, double, std::uint64_t, int, int> sort_key(
    const ExperimentRecord& r) {
    return {r.dataset_id,
            geometry::kind_name(r.set),
            r.rho,
            r.seed,
            static_cast<int>(r.method),
            static_cast<int>(r.lambda_policy)};
}

std::string format_double(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

}  // namespace

std::string policy_name(LambdaPolicy policy) {
    switch (policy) {
        case LambdaPolicy::TheoremPaper: return "theorem_paper";
        case LambdaPolicy::TheoremDerived: return "theorem_derived";
        case LambdaPolicy::CV: return "cv";
    }
    return "?";
}

LambdaPolicy policy_from_name(const std::string& name) {
    if (name == "theorem_paper") return LambdaPolicy::TheoremPaper;
    if (name == "theorem_derived") return LambdaPolicy::TheoremDerived;
    if (name == "cv") return LambdaPolicy::CV;
    throw ConfigError("unknown lambda policy: '" + name + "'");
}

dataio::CleanDataset DatasetSource::load() const {
    if (csv_path && synthetic)
        throw ConfigError("dataset source: give either csv or synthetic, not both");
    if (csv_path) return dataio::preprocess(dataio::ingest_csv(*csv_path, target), drop_columns);
    if (synthetic) return dataio::make_synthetic(*synthetic);
    throw ConfigError("dataset source: needs csv path or synthetic spec");
}

void ExperimentConfig::validate() const {
    if (rho_list.empty()) throw ConfigError("experiment: empty rho_list");
    for (std::size_t i = 0; i + 1 < rho_list.size(); ++i)
        if (!(rho_list[i] < rho_list[i + 1]))
            throw ConfigError("experiment: rho_list must be strictly increasing");
    if (rho_list.front() < 0.0) throw ConfigError("experiment: rho must be nonnegative");
    if (!(gamma_ratio > 0.5) || gamma_ratio > 1.0)
        throw ConfigError("experiment: gamma_ratio must lie in (0.5, 1]");
    if (sets.empty()) throw ConfigError("experiment: no uncertainty sets selected");
    if (workers < 1) throw ConfigError("experiment: workers must be >= 1");
}

std::vector<std::uint64_t> ExperimentConfig::effective_seeds() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out;
    const std::uint64_t count = dataset.synthetic ? 20 : 10;
    for (std::uint64_t s = 1; s <= count; ++s) out.push_back(s);
    return out;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    ExperimentConfig config;
    if (!j.contains("dataset")) throw ConfigError("experiment config: missing dataset");
    const auto& ds = j.at("dataset");
    config.dataset.id = ds.value("id", std::string{});
    if (ds.contains("csv")) config.dataset.csv_path = ds.at("csv").get<std::string>();
    if (ds.contains("target")) config.dataset.target = ds.at("target").get<std::string>();
    if (ds.contains("drop_columns"))
        config.dataset.drop_columns = ds.at("drop_columns").get<std::vector<std::string>>();
    if (ds.contains("synthetic")) {
        const auto& syn = ds.at("synthetic");
        dataio::SyntheticSpec spec;
        spec.n_samples = syn.value("n_samples", spec.n_samples);
        spec.n_informative = syn.value("n_informative", spec.n_informative);
        spec.n_features = syn.value("n_features", spec.n_features);
        spec.noise_sd = syn.value("noise_sd", spec.noise_sd);
        spec.seed = syn.value("seed", spec.seed);
        config.dataset.synthetic = spec;
    }
    if (config.dataset.id.empty())
        config.dataset.id = config.dataset.csv_path ? *config.dataset.csv_path : "synthetic";

    if (j.contains("sets")) {
        config.sets.clear();
        for (const auto& name : j.at("sets"))
            config.sets.push_back(geometry::kind_from_name(name.get<std::string>()));
    }
    if (j.contains("rho_list")) config.rho_list = j.at("rho_list").get<std::vector<double>>();
    config.gamma_ratio = j.value("gamma_ratio", config.gamma_ratio);
    if (j.contains("seeds")) config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("lambda_policy"))
        config.lambda_policy = policy_from_name(j.at("lambda_policy").get<std::string>());
    if (j.contains("cv")) {
        const auto& cv = j.at("cv");
        if (cv.contains("grid")) config.cv.grid = cv.at("grid").get<std::vector<double>>();
        config.cv.folds = cv.value("folds", config.cv.folds);
        config.cv.seed = cv.value("seed", config.cv.seed);
    }
    config.nesting = j.value("nesting", config.nesting);
    config.perturb_before_split = j.value("perturb_before_split", config.perturb_before_split);
    config.resplit_per_seed = j.value("resplit_per_seed", config.resplit_per_seed);
    config.master_seed = j.value("master_seed", config.master_seed);
    config.workers = j.value("workers", config.workers);
    if (config.cv.grid.empty()) config.cv.grid = CvSpec::default_grid();
    config.validate();
    return config;
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
    nlohmann::json ds{{"id", config.dataset.id}, {"target", config.dataset.target}};
    if (config.dataset.csv_path) ds["csv"] = *config.dataset.csv_path;
    if (!config.dataset.drop_columns.empty()) ds["drop_columns"] = config.dataset.drop_columns;
    if (config.dataset.synthetic) {
        const auto& spec = *config.dataset.synthetic;
        ds["synthetic"] = {{"n_samples", spec.n_samples},
                           {"n_informative", spec.n_informative},
                           {"n_features", spec.n_features},
                           {"noise_sd", spec.noise_sd},
                           {"seed", spec.seed}};
    }
    nlohmann::json sets = nlohmann::json::array();
    for (SetKind kind : config.sets) sets.push_back(geometry::kind_name(kind));
    return nlohmann::json{{"dataset", ds},
                          {"sets", sets},
                          {"rho_list", config.rho_list},
                          {"gamma_ratio", config.gamma_ratio},
                          {"seeds", config.effective_seeds()},
                          {"lambda_policy", policy_name(config.lambda_policy)},
                          {"cv",
                           {{"grid", config.cv.grid.empty() ? CvSpec::default_grid()
                                                            : config.cv.grid},
                            {"folds", config.cv.folds},
                            {"seed", config.cv.seed}}},
                          {"nesting", config.nesting},
                          {"perturb_before_split", config.perturb_before_split},
                          {"resplit_per_seed", config.resplit_per_seed},
                          {"master_seed", config.master_seed}};
}

std::string config_digest(const nlohmann::json& canonical) {
    const std::string text = canonical.dump();
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    char buffer[20];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
    return buffer;
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config, std::ostream& log) {
    config.validate();
    const dataio::CleanDataset dataset = config.dataset.load();

    CvSpec cv = config.cv;
    if (cv.grid.empty()) cv.grid = CvSpec::default_grid();

    const std::uint64_t base_split_seed =
        derive_seed(config.master_seed, "split/" + config.dataset.id);

    std::vector<Cell> cells;
    for (SetKind kind : config.sets)
        for (int rho_index = 0; rho_index < static_cast<int>(config.rho_list.size()); ++rho_index)
            for (std::uint64_t seed : config.effective_seeds())
                cells.push_back({kind, rho_index, seed});

    std::vector<std::vector<ExperimentRecord>> per_cell(cells.size());
    std::vector<std::string> failures(cells.size());

    auto run_cell = [&](std::size_t index) {
        const Cell& cell = cells[index];
        const double rho = config.rho_list[static_cast<std::size_t>(cell.rho_index)];
        const std::string key = cell_key(config.dataset, cell);
        try {
            const std::uint64_t stream =
                derive_seed(config.master_seed, key + "/seed" + std::to_string(cell.seed));
            const std::uint64_t split_seed =
                config.resplit_per_seed
                    ? derive_seed(base_split_seed, "resplit/" + std::to_string(cell.seed))
                    : base_split_seed;

            dataio::TrainTestSplit split;
            Matrix train_design;
            if (config.perturb_before_split) {
                // Fidelity mode: perturb the full design, then split; the
                // test rows carry perturbation too.
                dataio::CleanDataset perturbed = dataset;
                perturbed.X += draw_perturbation(config, cell, static_cast<int>(dataset.X.rows()),
                                                 static_cast<int>(dataset.X.cols()), stream);
                split = dataio::split_80_20(perturbed, split_seed);
                train_design = split.train.X;
            } else {
                split = dataio::split_80_20(dataset, split_seed);
                train_design =
                    split.train.X + draw_perturbation(config, cell,
                                                      static_cast<int>(split.train.X.rows()),
                                                      static_cast<int>(split.train.X.cols()),
                                                      stream);
            }

            const RegressionProblem train_problem{train_design, split.train.y};
            const int n_train = static_cast<int>(train_design.rows());
            const int k = static_cast<int>(train_design.cols());

            auto push = [&](FitMethod method, LambdaPolicy policy, double lambda) {
                const auto start = std::chrono::steady_clock::now();
                const FitResult fit = method == FitMethod::AUR
                                          ? regression::fit_aur(train_problem, lambda)
                                          : regression::fit_wur(train_problem, lambda);
                const auto stop = std::chrono::steady_clock::now();
                ExperimentRecord record;
                record.dataset_id = config.dataset.id;
                record.set = cell.set;
                record.rho = rho;
                record.seed = cell.seed;
                record.method = method;
                record.lambda_policy = policy;
                record.lambda_used = lambda;
                record.train_mse =
                    regression::mean_squared_error(train_design, split.train.y, fit.beta);
                record.test_mse =
                    regression::mean_squared_error(split.test.X, split.test.y, fit.beta);
                record.runtime_ms =
                    std::chrono::duration<double, std::milli>(stop - start).count();
                per_cell[index].push_back(std::move(record));
            };

            double aur_lambda = 0.0;
            switch (config.lambda_policy) {
                case LambdaPolicy::TheoremPaper:
                    aur_lambda = theorem_lambda(config, cell.set, rho, n_train, k,
                                                geometry::PenaltyMode::PaperFormula);
                    break;
                case LambdaPolicy::TheoremDerived:
                    aur_lambda = theorem_lambda(config, cell.set, rho, n_train, k,
                                                geometry::PenaltyMode::DerivedFormula);
                    break;
                case LambdaPolicy::CV:
                    aur_lambda =
                        regression::select_lambda_cv(train_problem, FitMethod::AUR, cv).lambda;
                    break;
            }
            push(FitMethod::AUR, config.lambda_policy, aur_lambda);

            const double wur_lambda =
                regression::select_lambda_cv(train_problem, FitMethod::WUR, cv).lambda;
            push(FitMethod::WUR, LambdaPolicy::CV, wur_lambda);
        } catch (const std::exception& error) {
            failures[index] = key + ": " + error.what();
            per_cell[index].clear();
        }
    };

    const int workers = std::max(1, std::min<int>(config.workers,
                                                  static_cast<int>(cells.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
                    run_cell(i);
            });
        for (std::thread& t : pool) t.join();
    }

    std::vector<ExperimentRecord> records;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        for (ExperimentRecord& record : per_cell[i]) records.push_back(std::move(record));
        if (!failures[i].empty()) log << "cell failed: " << failures[i] << "\n";
    }
    std::sort(records.begin(), records.end(),
              [](const ExperimentRecord& a, const ExperimentRecord& b) {
                  return sort_key(a) < sort_key(b);
              });
    return records;
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
    if (records.empty()) throw DataError("summarize: no records");

    using PairKey = std::tuple<std::string, std::string, double, std::uint64_t>;
    std::map<PairKey, const ExperimentRecord*> wur;
    for (const ExperimentRecord& r : records)
        if (r.method == FitMethod::WUR)
            wur[{r.dataset_id, geometry::kind_name(r.set), r.rho, r.seed}] = &r;

    struct Group {
        SetKind set;
        double rho;
        std::vector<double> improvements;
        // per-dataset distinct AUR lambdas
        std::map<std::string, std::set<double>> lambdas;
    };
    std::map<std::pair<std::string, double>, Group> groups;
    std::vector<std::string> missing;

    for (const ExperimentRecord& r : records) {
        if (r.method != FitMethod::AUR) continue;
        const PairKey key{r.dataset_id, geometry::kind_name(r.set), r.rho, r.seed};
        const auto partner = wur.find(key);
        if (partner == wur.end()) {
            std::ostringstream text;
            text << r.dataset_id << '/' << geometry::kind_name(r.set) << "/rho=" << r.rho
                 << "/seed=" << r.seed;
            missing.push_back(text.str());
            continue;
        }
        Group& group = groups[{geometry::kind_name(r.set), r.rho}];
        group.set = r.set;
        group.rho = r.rho;
        const double wur_mse = partner->second->test_mse;
        group.improvements.push_back(wur_mse > 0.0
                                         ? 100.0 * (wur_mse - r.test_mse) / wur_mse
                                         : 0.0);
        group.lambdas[r.dataset_id].insert(r.lambda_used);
    }

    if (!missing.empty()) {
        std::ostringstream text;
        text << "summarize: missing WUR partner for:";
        for (const std::string& m : missing) text << ' ' << m;
        throw DataError(text.str());
    }
    if (groups.empty()) throw DataError("summarize: no AUR/WUR pairs found");

    std::vector<SummaryRow> rows;
    for (auto& [key, group] : groups) {
        SummaryRow row;
        row.set = group.set;
        row.rho = group.rho;
        row.count = static_cast<int>(group.improvements.size());
        double sum = 0.0;
        for (double v : group.improvements) sum += v;
        row.mean_improvement_pct = sum / row.count;
        double ss = 0.0;
        for (double v : group.improvements) {
            const double d = v - row.mean_improvement_pct;
            ss += d * d;
        }
        row.std_error =
            row.count > 1 ? std::sqrt(ss / (row.count - 1) / row.count) : 0.0;
        int distinct = 0;
        for (const auto& [dataset, lambdas] : group.lambdas)
            distinct = std::max(distinct, static_cast<int>(lambdas.size()));
        row.lambda_distinct_count = distinct;
        rows.push_back(row);
    }
    return rows;
}

void emit_plot_data(const std::vector<SummaryRow>& summary, const std::string& path) {
    std::vector<SummaryRow> rows = summary;
    std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
        return std::make_pair(geometry::kind_name(a.set), a.rho) <
               std::make_pair(geometry::kind_name(b.set), b.rho);
    });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "set,rho,mean_improvement,stderr,n\n";
    for (const SummaryRow& row : rows)
        out << geometry::kind_name(row.set) << ',' << format_double(row.rho) << ','
            << format_double(row.mean_improvement_pct) << ',' << format_double(row.std_error)
            << ',' << row.count << '\n';
}

void write_summary_csv(const std::vector<SummaryRow>& summary, const std::string& path) {
    std::vector<SummaryRow> rows = summary;
    std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
        return std::make_pair(geometry::kind_name(a.set), a.rho) <
               std::make_pair(geometry::kind_name(b.set), b.rho);
    });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "set,rho,mean_improvement,stderr,n,lambda_distinct_count\n";
    for (const SummaryRow& row : rows)
        out << geometry::kind_name(row.set) << ',' << format_double(row.rho) << ','
            << format_double(row.mean_improvement_pct) << ',' << format_double(row.std_error)
            << ',' << row.count << ',' << row.lambda_distinct_count << '\n';
}

std::vector<SummaryRow> read_plot_data(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("plot data: empty file");
    std::vector<SummaryRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string kind, token;
        SummaryRow row;
        std::getline(fields, kind, ',');
        row.set = geometry::kind_from_name(kind);
        std::getline(fields, token, ',');
        row.rho = std::strtod(token.c_str(), nullptr);
        std::getline(fields, token, ',');
        row.mean_improvement_pct = std::strtod(token.c_str(), nullptr);
        std::getline(fields, token, ',');
        row.std_error = std::strtod(token.c_str(), nullptr);
        std::getline(fields, token, ',');
        row.count = std::atoi(token.c_str());
        rows.push_back(row);
    }
    return rows;
}

void write_records_jsonl(const std::vector<ExperimentRecord>& records,
                         const ExperimentConfig& config, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write '" + tmp + "'");
        const nlohmann::json canonical = config_to_json(config);
        const nlohmann::json header{
            {"type", "header"},
            {"master_seed", config.master_seed},
            {"config_digest", config_digest(canonical)},
            {"split_policy",
             config.resplit_per_seed
                 ? "one 80/20 split per perturbation seed"
                 : "one 80/20 split per dataset per master seed, reused across perturbation "
                   "seeds"}};
        out << header.dump() << "\n";
        for (const ExperimentRecord& r : records) {
            const nlohmann::json j{{"type", "record"},
                                   {"dataset", r.dataset_id},
                                   {"set", geometry::kind_name(r.set)},
                                   {"rho", r.rho},
                                   {"seed", r.seed},
                                   {"method", regression::method_name(r.method)},
                                   {"lambda_policy", policy_name(r.lambda_policy)},
                                   {"lambda_used", r.lambda_used},
                                   {"train_mse", r.train_mse},
                                   {"test_mse", r.test_mse}};
            out << j.dump() << "\n";
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw DataError("cannot move results into '" + path + "'");
}

std::vector<ExperimentRecord> read_records_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    std::vector<ExperimentRecord> records;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& error) {
            throw DataError("results line " + std::to_string(line_number) + ": " + error.what());
        }
        if (j.value("type", "") != "record") continue;
        ExperimentRecord r;
        r.dataset_id = j.at("dataset").get<std::string>();
        r.set = geometry::kind_from_name(j.at("set").get<std::string>());
        r.rho = j.at("rho").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.method = regression::method_from_name(j.at("method").get<std::string>());
        r.lambda_policy = policy_from_name(j.at("lambda_policy").get<std::string>());
        r.lambda_used = j.at("lambda_used").get<double>();
        r.train_mse = j.at("train_mse").get<double>();
        r.test_mse = j.at("test_mse").get<double>();
        records.push_back(std::move(r));
    }
    if (records.empty()) throw DataError("results file '" + path + "' holds no records");
    return records;
}

}  // namespace aurlab::harness
