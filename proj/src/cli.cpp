#include "aurlab/cli.hpp"

#include "aurlab/audit.hpp"
#include "aurlab/dataio.hpp"
#include "aurlab/geometry.hpp"
#include "aurlab/harness.hpp"
#include "aurlab/regression.hpp"
#include "aurlab/rng.hpp"
#include "aurlab/sampling.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace aurlab::cli {

namespace {

using nlohmann::json;

struct GlobalFlags {
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = 1;
    bool quiet = false;
};

// AURLAB_SEED beats --seed beats config/defaults.
std::optional<std::uint64_t> env_seed() {
    const char* raw = std::getenv("AURLAB_SEED");
    if (!raw || !*raw) return std::nullopt;
    return std::strtoull(raw, nullptr, 10);
}

void print_stanza(std::ostream& err, const GlobalFlags& flags, const std::string& verb,
                  std::uint64_t seed, const json& effective) {
    if (flags.quiet) return;
    err << "# aurlab " << kVersion << " | " << verb << " | seed=" << seed
        << " | config=" << harness::config_digest(effective) << "\n";
}

geometry::UncertaintySet parse_set_flag(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& error) {
        throw ConfigError(std::string("--set is not valid JSON: ") + error.what());
    }
    return geometry::set_from_json(j);
}

std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

json fit_result_to_json(const regression::FitResult& fit) {
    json beta = json::array();
    for (Eigen::Index i = 0; i < fit.beta.size(); ++i) beta.push_back(fit.beta[i]);
    return json{{"method", regression::method_name(fit.method)},
                {"beta", beta},
                {"objective", fit.objective},
                {"optimality_residual", fit.optimality_residual},
                {"lambda_used", fit.lambda_used}};
}

json ledger_to_json(const std::vector<audit::LedgerRow>& rows) {
    json out = json::array();
    for (const audit::LedgerRow& row : rows) {
        json j{{"set", geometry::to_json(row.set)},
               {"quantity", audit::quantity_name(row.quantity)},
               {"mc_std_error", row.mc_std_error},
               {"verdict", audit::verdict_name(row.verdict)}};
        j["paper_value"] = row.paper_value ? json(*row.paper_value) : json(nullptr);
        j["derived_value"] = row.derived_value ? json(*row.derived_value) : json(nullptr);
        j["mc_value"] = row.mc_value ? json(*row.mc_value) : json(nullptr);
        out.push_back(std::move(j));
    }
    return out;
}

void print_ledger_table(std::ostream& out, const std::vector<audit::LedgerRow>& rows) {
    auto shortnum = [](double v) {
        std::ostringstream text;
        text << std::setprecision(6) << v;
        return text.str();
    };
    auto cell = [&](const std::optional<double>& v) {
        return v ? shortnum(*v) : std::string("-");
    };
    out << std::left << std::setw(10) << "quantity" << std::setw(14) << "paper" << std::setw(14)
        << "derived" << std::setw(14) << "mc" << std::setw(13) << "mc_se"
        << "verdict\n";
    for (const audit::LedgerRow& row : rows)
        out << std::left << std::setw(10) << audit::quantity_name(row.quantity) << std::setw(14)
            << cell(row.paper_value) << std::setw(14) << cell(row.derived_value) << std::setw(14)
            << cell(row.mc_value) << std::setw(13) << shortnum(row.mc_std_error)
            << audit::verdict_name(row.verdict) << "\n";
}

dataio::CleanDataset load_csv_dataset(const std::string& path, std::string target) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    if (target.empty()) {
        // Default target: last header column.
        const std::size_t end = text.find('\n');
        std::istringstream header(text.substr(0, end == std::string::npos ? text.size() : end));
        std::string field, last;
        while (std::getline(header, field, ',')) last = field;
        if (!last.empty() && last.back() == '\r') last.pop_back();
        if (last.empty()) throw DataError("csv '" + path + "': cannot infer target column");
        target = last;
    }
    return dataio::preprocess(dataio::parse_csv_text(text, target));
}

int run_sample(const GlobalFlags& flags, const std::string& set_text, int count,
               std::uint64_t seed, const std::string& method, int burn_in, int thinning,
               const std::string& out_path, std::ostream& out, std::ostream& err) {
    const geometry::UncertaintySet set = parse_set_flag(set_text);
    print_stanza(err, flags, "sample",
                 seed,
                 json{{"verb", "sample"},
                      {"set", geometry::to_json(set)},
                      {"count", count},
                      {"seed", seed},
                      {"method", method},
                      {"burn_in", burn_in},
                      {"thinning", thinning}});

    sampling::PerturbationBatch batch;
    if (method == "har") {
        sampling::SamplerConfig config;
        config.seed = seed;
        config.burn_in = burn_in;
        config.thinning = thinning;
        batch = sampling::hit_and_run(set, config, count);
    } else if (method == "rej") {
        batch = sampling::rejection_sample(set, seed, count);
    } else {
        throw ConfigError("--method must be har or rej");
    }

    std::ofstream file;
    std::ostream* sink = &out;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw DataError("cannot write '" + out_path + "'");
        sink = &file;
    }
    // One flattened sample per row, row-major over the n x k matrix.
    for (const Matrix& sample : batch.samples) {
        for (Eigen::Index i = 0; i < sample.rows(); ++i)
            for (Eigen::Index j = 0; j < sample.cols(); ++j) {
                if (i != 0 || j != 0) *sink << ',';
                *sink << format_double(sample(i, j));
            }
        *sink << '\n';
    }
    if (batch.method == sampling::SampleMethod::Rejection && !flags.quiet)
        err << "# acceptance_rate=" << format_double(batch.acceptance_rate()) << " ("
            << batch.samples.size() << "/" << batch.proposals << ")\n";
    return kExitOk;
}

int run_fit(const GlobalFlags& flags, const std::string& data_path, const std::string& target,
            const std::string& method_name, std::optional<double> lambda_flag, bool use_cv,
            const std::string& set_text, const std::string& mode_name, std::ostream& out,
            std::ostream& err) {
    const dataio::CleanDataset dataset = load_csv_dataset(data_path, target);
    const regression::RegressionProblem problem{dataset.X, dataset.y};
    const regression::FitMethod method = regression::method_from_name(method_name);

    double lambda = 0.0;
    if (lambda_flag) {
        lambda = *lambda_flag;
    } else if (use_cv) {
        if (method == regression::FitMethod::OLS)
            throw ConfigError("--cv needs --method aur or wur");
        regression::CvSpec spec;
        spec.grid = regression::CvSpec::default_grid();
        spec.seed = flags.seed;
        lambda = regression::select_lambda_cv(problem, method, spec).lambda;
    } else if (!set_text.empty()) {
        geometry::UncertaintySet set = parse_set_flag(set_text);
        if (set.rows != problem.X.rows() || set.cols != problem.X.cols())
            throw ConfigError("--set descriptor shape (" + std::to_string(set.rows) + "x" +
                              std::to_string(set.cols) + ") must match the data (" +
                              std::to_string(problem.X.rows()) + "x" +
                              std::to_string(problem.X.cols()) + ")");
        const geometry::PenaltyMode mode = mode_name == "paper"
                                               ? geometry::PenaltyMode::PaperFormula
                                               : geometry::PenaltyMode::DerivedFormula;
        lambda = geometry::ridge_lambda(set, mode);
    } else if (method != regression::FitMethod::OLS) {
        throw ConfigError("choose a penalty: --lambda, --cv, or --set with --mode");
    }

    print_stanza(err, flags, "fit", flags.seed,
                 json{{"verb", "fit"},
                      {"data", data_path},
                      {"method", method_name},
                      {"lambda", lambda},
                      {"cv", use_cv}});

    regression::FitResult fit;
    switch (method) {
        case regression::FitMethod::OLS: fit = regression::fit_ols(problem); break;
        case regression::FitMethod::AUR: fit = regression::fit_aur(problem, lambda); break;
        case regression::FitMethod::WUR: fit = regression::fit_wur(problem, lambda); break;
    }
    out << fit_result_to_json(fit).dump(2) << "\n";
    return kExitOk;
}

int run_audit(const GlobalFlags& flags, const std::string& set_text, std::int64_t samples,
              std::uint64_t seed, const std::string& problem_path, const std::string& target,
              const std::string& out_path, std::ostream& out, std::ostream& err) {
    const geometry::UncertaintySet set = parse_set_flag(set_text);
    print_stanza(err, flags, "audit", seed,
                 json{{"verb", "audit"},
                      {"set", geometry::to_json(set)},
                      {"samples", samples},
                      {"seed", seed},
                      {"problem", problem_path}});

    const std::vector<audit::LedgerRow> rows = audit::audit_moments(set, samples, seed);
    print_ledger_table(out, rows);

    bool failed = false;
    for (const audit::LedgerRow& row : rows) failed = failed || audit::derived_failure(row);

    json payload{{"set", geometry::to_json(set)},
                 {"samples", samples},
                 {"seed", seed},
                 {"ledger", ledger_to_json(rows)}};

    if (!problem_path.empty()) {
        const dataio::CleanDataset dataset = load_csv_dataset(problem_path, target);
        const regression::RegressionProblem problem{dataset.X, dataset.y};
        json equivalence = json::array();
        for (geometry::PenaltyMode mode :
             {geometry::PenaltyMode::DerivedFormula, geometry::PenaltyMode::PaperFormula}) {
            const auto reports = audit::verify_equivalence(problem, set, mode, samples, seed);
            for (const audit::EquivalenceReport& report : reports) {
                const char* mode_name =
                    mode == geometry::PenaltyMode::DerivedFormula ? "derived" : "paper";
                out << "equivalence " << mode_name << " probe=" << report.probe
                    << " mc=" << format_double(report.mc_mean_loss)
                    << " closed=" << format_double(report.closed_form_loss)
                    << " gap=" << format_double(report.relative_gap)
                    << (report.agree ? " Agree" : " Disagree") << "\n";
                equivalence.push_back(json{{"mode", mode_name},
                                           {"probe", report.probe},
                                           {"mc_mean_loss", report.mc_mean_loss},
                                           {"mc_std_error", report.mc_std_error},
                                           {"closed_form_loss", report.closed_form_loss},
                                           {"relative_gap", report.relative_gap},
                                           {"agree", report.agree}});
                if (mode == geometry::PenaltyMode::DerivedFormula && !report.agree) failed = true;
            }
        }
        payload["equivalence"] = equivalence;
    }

    if (!out_path.empty()) {
        std::ofstream file(out_path, std::ios::binary);
        if (!file) throw DataError("cannot write '" + out_path + "'");
        file << payload.dump(2) << "\n";
    } else {
        out << payload.dump(2) << "\n";
    }
    return failed ? kExitAuditFailure : kExitOk;
}

int run_experiment_cmd(const GlobalFlags& flags, const std::string& config_path,
                       const std::string& out_path, std::ostream& out, std::ostream& err) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + config_path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& error) {
        throw ConfigError("config '" + config_path + "': " + error.what());
    }
    harness::ExperimentConfig config = harness::config_from_json(j);
    if (flags.seed_given) config.master_seed = flags.seed;
    if (const auto env = env_seed()) config.master_seed = *env;
    config.workers = flags.workers;

    print_stanza(err, flags, "experiment", config.master_seed,
                 harness::config_to_json(config));

    const auto records = harness::run_experiment(config, err);
    harness::write_records_jsonl(records, config, out_path);
    out << "wrote " << records.size() << " records to " << out_path << "\n";
    return kExitOk;
}

int run_report(const GlobalFlags& flags, const std::string& in_path, const std::string& out_path,
               const std::string& plot_path, std::ostream& out, std::ostream& err) {
    print_stanza(err, flags, "report", flags.seed,
                 json{{"verb", "report"}, {"in", in_path}, {"out", out_path}});
    const auto records = harness::read_records_jsonl(in_path);
    const auto summary = harness::summarize(records);
    harness::write_summary_csv(summary, out_path);
    if (!plot_path.empty()) harness::emit_plot_data(summary, plot_path);
    out << "wrote " << summary.size() << " summary rows to " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"robust regression over averaged uncertainty sets", "aurlab"};
    app.set_version_flag("--version", std::string("aurlab ") + kVersion);
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--seed", flags.seed, "master seed (env AURLAB_SEED overrides)")
        ->capture_default_str();
    app.add_option("--workers", flags.workers, "worker threads for experiment cells")
        ->capture_default_str();
    app.add_flag("--quiet", flags.quiet, "suppress the reproducibility stanza");

    // sample
    auto* sample = app.add_subcommand("sample", "draw uniform samples from an uncertainty set");
    std::string sample_set;
    int sample_count = 100;
    std::uint64_t sample_seed = 0;
    std::string sample_method = "har";
    int sample_burn_in = 1000;
    int sample_thinning = 10;
    std::string sample_out;
    sample->add_option("--set", sample_set, "set descriptor JSON")->required();
    sample->add_option("--count", sample_count, "samples to draw")->capture_default_str();
    sample->add_option("--seed", sample_seed, "sampler seed")->capture_default_str();
    sample->add_option("--method", sample_method, "har (hit-and-run) or rej (rejection)")
        ->capture_default_str();
    sample->add_option("--burn-in", sample_burn_in, "hit-and-run burn-in steps")
        ->capture_default_str();
    sample->add_option("--thinning", sample_thinning, "hit-and-run steps between samples")
        ->capture_default_str();
    sample->add_option("--out", sample_out, "output CSV path (default: stdout)")
        ->capture_default_str();

    // fit
    auto* fit = app.add_subcommand("fit", "fit OLS / AUR / WUR on a CSV dataset");
    std::string fit_data, fit_target, fit_method = "aur", fit_set, fit_mode = "derived";
    double fit_lambda = 0.0;
    bool fit_cv = false;
    fit->add_option("--data", fit_data, "input CSV (preprocessed with the standard pipeline)")
        ->required();
    fit->add_option("--target", fit_target, "target column (default: last column)")
        ->capture_default_str();
    fit->add_option("--method", fit_method, "aur | wur | ols")->capture_default_str();
    auto* lambda_opt =
        fit->add_option("--lambda", fit_lambda, "explicit penalty value");
    fit->add_flag("--cv", fit_cv, "pick lambda by 5-fold cross validation");
    fit->add_option("--set", fit_set, "set descriptor JSON for the closed-form lambda")
        ->capture_default_str();
    fit->add_option("--mode", fit_mode, "paper | derived (with --set)")->capture_default_str();

    // audit
    auto* audit_cmd =
        app.add_subcommand("audit", "Monte Carlo adjudication of the closed-form constants");
    std::string audit_set, audit_problem, audit_target, audit_out;
    std::int64_t audit_samples = 100000;
    std::uint64_t audit_seed = 0;
    audit_cmd->add_option("--set", audit_set, "set descriptor JSON")->required();
    audit_cmd->add_option("--samples", audit_samples, "Monte Carlo sample count")
        ->capture_default_str();
    audit_cmd->add_option("--seed", audit_seed, "audit seed")->capture_default_str();
    audit_cmd->add_option("--problem", audit_problem,
                          "CSV problem for the ridge-equivalence probes")
        ->capture_default_str();
    audit_cmd->add_option("--target", audit_target, "target column for --problem")
        ->capture_default_str();
    audit_cmd->add_option("--out", audit_out, "write the JSON ledger here instead of stdout")
        ->capture_default_str();

    // experiment
    auto* experiment = app.add_subcommand("experiment", "run the AUR-vs-WUR experiment matrix");
    std::string experiment_config, experiment_out = "results.jsonl";
    experiment->add_option("--config", experiment_config, "experiment config JSON")->required();
    experiment->add_option("--out", experiment_out, "results JSONL path")->capture_default_str();

    // report
    auto* report = app.add_subcommand("report", "summarize a results file");
    std::string report_in, report_out = "summary.csv", report_plot;
    report->add_option("--in", report_in, "results JSONL path")->required();
    report->add_option("--out", report_out, "summary CSV path")->capture_default_str();
    report->add_option("--plot", report_plot, "also write tidy plot data CSV here")
        ->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());  // CLI11 order
        app.parse(std::move(reversed));
        flags.seed_given = app.count("--seed") > 0;
        if (const auto env = env_seed()) {
            flags.seed = *env;
            flags.seed_given = true;
        }

        if (sample->parsed())
            return run_sample(flags, sample_set, sample_count,
                              flags.seed_given ? flags.seed : sample_seed, sample_method,
                              sample_burn_in, sample_thinning, sample_out, out, err);
        if (fit->parsed())
            return run_fit(flags, fit_data, fit_target, fit_method,
                           lambda_opt->count() ? std::optional<double>(fit_lambda)
                                               : std::nullopt,
                           fit_cv, fit_set, fit_mode, out, err);
        if (audit_cmd->parsed())
            return run_audit(flags, audit_set, audit_samples,
                             flags.seed_given ? flags.seed : audit_seed, audit_problem,
                             audit_target, audit_out, out, err);
        if (experiment->parsed())
            return run_experiment_cmd(flags, experiment_config, experiment_out, out, err);
        if (report->parsed())
            return run_report(flags, report_in, report_out, report_plot, out, err);
        err << app.help();
        return kExitUsage;
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << "aurlab " << kVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& error) {
        err << "error: " << error.what() << "\n" << app.help();
        return kExitUsage;
    } catch (const DataError& error) {
        err << "data error: " << error.what() << "\n";
        return kExitData;
    } catch (const RankDeficiencyError& error) {
        err << "data error: " << error.what() << "\n";
        return kExitData;
    } catch (const ConfigError& error) {
        err << "error: " << error.what() << "\n";
        return kExitUsage;
    } catch (const FormulaInvalidError& error) {
        err << "error: " << error.what() << "\n";
        return kExitUsage;
    } catch (const DimensionError& error) {
        err << "error: " << error.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& error) {
        err << "error: " << error.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace aurlab::cli
