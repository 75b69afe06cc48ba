#include "aurlab/audit.hpp"

#include "aurlab/rng.hpp"

#include <algorithm>
#include <cmath>

namespace aurlab::audit {

namespace {

// Chains are restarted in bounded chunks with seeds derived from
// (seed, chunk index): memory stays flat for large sample counts and the
// result is independent of any execution schedule.
constexpr std::int64_t kChunkSize = 50000;

constexpr double kRelativeGapFloor = 0.01;
constexpr double kSigmaGate = 3.0;

void check_problem_set(const RegressionProblem& problem, const UncertaintySet& set) {
    if (problem.X.rows() != set.rows || problem.X.cols() != set.cols)
        throw DimensionError("audit: problem is " + std::to_string(problem.X.rows()) + "x" +
                             std::to_string(problem.X.cols()) + ", set describes " +
                             std::to_string(set.rows) + "x" + std::to_string(set.cols) +
                             " perturbations");
}

template <typename PerSample>
void stream_hit_and_run(const UncertaintySet& set, std::int64_t sample_count, std::uint64_t seed,
                        PerSample&& per_sample) {
    std::int64_t remaining = sample_count;
    std::int64_t chunk_index = 0;
    while (remaining > 0) {
        const std::int64_t take = std::min(remaining, kChunkSize);
        sampling::SamplerConfig config;
        config.seed = derive_seed(seed, "chunk/" + std::to_string(chunk_index));
        const PerturbationBatch batch =
            sampling::hit_and_run(set, config, static_cast<int>(take));
        for (const Matrix& sample : batch.samples) per_sample(sample);
        remaining -= take;
        ++chunk_index;
    }
}

bool within_gate(double value, double mc, double std_error) {
    return std::abs(value - mc) <= kSigmaGate * std_error;
}

Verdict adjudicate(const LedgerRow& row) {
    if (!row.mc_value || !row.derived_value) return Verdict::Inconclusive;
    const bool derived_ok = within_gate(*row.derived_value, *row.mc_value, row.mc_std_error);
    if (!derived_ok) return Verdict::Inconclusive;
    if (row.paper_value && !within_gate(*row.paper_value, *row.mc_value, row.mc_std_error))
        return Verdict::PaperDisagrees;
    return Verdict::Agree;
}

}  // namespace

std::string quantity_name(Quantity q) {
    switch (q) {
        case Quantity::Volume: return "volume";
        case Quantity::Mean: return "mean";
        case Quantity::SecondMoment: return "m2";
        case Quantity::Cross: return "cross";
        case Quantity::Lambda: return "lambda";
    }
    return "?";
}

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Agree: return "Agree";
        case Verdict::PaperDisagrees: return "PaperDisagrees";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

bool derived_failure(const LedgerRow& row) {
    if (!row.mc_value || !row.derived_value) return false;
    return !within_gate(*row.derived_value, *row.mc_value, row.mc_std_error);
}

LossEstimate mc_average_loss(const RegressionProblem& problem, const Vector& beta,
                             const UncertaintySet& set, const PerturbationBatch& batch) {
    problem.validate();
    check_problem_set(problem, set);
    if (beta.size() != problem.X.cols())
        throw DimensionError("mc_average_loss: beta has " + std::to_string(beta.size()) +
                             " entries, problem has " + std::to_string(problem.X.cols()) +
                             " features");
    if (batch.samples.empty()) throw ConfigError("mc_average_loss: empty batch");

    const Vector base_residual = problem.y - problem.X * beta;
    StreamingMoments acc;
    for (const Matrix& delta : batch.samples) {
        if (delta.rows() != set.rows || delta.cols() != set.cols)
            throw DimensionError("mc_average_loss: batch sample shape mismatch");
        acc.add((base_residual - delta * beta).squaredNorm());
    }
    return {acc.mean(), acc.std_error(), acc.count()};
}

std::vector<EquivalenceReport> verify_equivalence(const RegressionProblem& problem,
                                                  const UncertaintySet& set, PenaltyMode mode,
                                                  std::int64_t sample_count, std::uint64_t seed) {
    problem.validate();
    check_problem_set(problem, set);
    if (sample_count < 10000)
        throw ConfigError("verify_equivalence: need sample_count >= 10000");

    const double lambda = geometry::ridge_lambda(set, mode);

    struct Probe {
        std::string name;
        Vector beta;
    };
    std::vector<Probe> probes;
    probes.push_back({"ols", regression::fit_ols(problem).beta});
    probes.push_back({"aur", regression::fit_aur(problem, lambda).beta});
    Rng probe_rng(derive_seed(seed, "probe"));
    probes.push_back({"random", probe_rng.normal_vector(static_cast<int>(problem.X.cols()))});

    std::vector<Vector> base_residuals;
    std::vector<StreamingMoments> accs(probes.size());
    for (const Probe& probe : probes)
        base_residuals.push_back(problem.y - problem.X * probe.beta);

    stream_hit_and_run(set, sample_count, derive_seed(seed, "equivalence"),
                       [&](const Matrix& delta) {
                           for (std::size_t p = 0; p < probes.size(); ++p)
                               accs[p].add(
                                   (base_residuals[p] - delta * probes[p].beta).squaredNorm());
                       });

    std::vector<EquivalenceReport> reports;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        EquivalenceReport report;
        report.set = set;
        report.probe = probes[p].name;
        report.beta_probe = probes[p].beta;
        report.mc_mean_loss = accs[p].mean();
        report.mc_std_error = accs[p].std_error();
        report.closed_form_loss = regression::aur_objective(problem, probes[p].beta, lambda);
        const double scale = std::max(1e-12, std::abs(report.closed_form_loss));
        report.relative_gap = std::abs(report.mc_mean_loss - report.closed_form_loss) / scale;
        report.mode = mode;
        report.sample_count = accs[p].count();
        report.agree = report.relative_gap <=
                       std::max(kRelativeGapFloor, kSigmaGate * report.mc_std_error / scale);
        reports.push_back(std::move(report));
    }
    return reports;
}

std::vector<LedgerRow> audit_moments(const UncertaintySet& set, std::int64_t sample_count,
                                     std::uint64_t seed) {
    if (sample_count < 1) throw ConfigError("audit_moments: sample_count must be positive");
    const auto d = set.dim();

    StreamingMoments mean_acc, m2_acc, cross_acc;
    stream_hit_and_run(set, sample_count, derive_seed(seed, "moments"), [&](const Matrix& delta) {
        const auto flat = Eigen::Map<const Vector>(delta.data(), delta.size());
        mean_acc.add(flat.mean());
        m2_acc.add(flat.squaredNorm() / static_cast<double>(d));
        if (d >= 2) cross_acc.add(flat[0] * flat[1]);
    });

    // Closed forms; budget sets outside the proven window only get MC values.
    std::optional<double> m2_paper, m2_derived, lambda_paper, lambda_derived, vol_closed;
    try {
        m2_paper = geometry::per_entry_second_moment(set, PenaltyMode::PaperFormula);
        m2_derived = geometry::per_entry_second_moment(set, PenaltyMode::DerivedFormula);
        lambda_paper = geometry::ridge_lambda(set, PenaltyMode::PaperFormula);
        lambda_derived = geometry::ridge_lambda(set, PenaltyMode::DerivedFormula);
        vol_closed = geometry::volume(set);
    } catch (const FormulaInvalidError&) {
    }

    std::vector<LedgerRow> rows;

    {
        LedgerRow row{set, Quantity::Volume, vol_closed, vol_closed, std::nullopt, 0.0,
                      Verdict::Inconclusive};
        if (d <= 12) {
            // Bounding-box proposals; volume = box volume * acceptance rate.
            Rng rng(derive_seed(seed, "volume"));
            std::int64_t accepted = 0;
            Vector proposal(d);
            for (std::int64_t i = 0; i < sample_count; ++i) {
                for (Eigen::Index j = 0; j < d; ++j)
                    proposal[j] = rng.uniform(-set.rho, set.rho);
                if (geometry::contains_flat(set, proposal)) ++accepted;
            }
            // Fewer than 10 acceptances cannot support a 3-sigma gate.
            if (accepted >= 10) {
                const double box_volume = std::pow(2.0 * set.rho, static_cast<double>(d));
                const double rate =
                    static_cast<double>(accepted) / static_cast<double>(sample_count);
                row.mc_value = box_volume * rate;
                row.mc_std_error = box_volume * std::sqrt(rate * (1.0 - rate) /
                                                          static_cast<double>(sample_count));
            }
        }
        row.verdict = adjudicate(row);
        rows.push_back(std::move(row));
    }

    {
        LedgerRow row{set,
                      Quantity::Mean,
                      0.0,
                      0.0,
                      mean_acc.mean(),
                      mean_acc.std_error(),
                      Verdict::Inconclusive};
        row.verdict = adjudicate(row);
        rows.push_back(std::move(row));
    }
    {
        LedgerRow row{set,       Quantity::SecondMoment, m2_paper,
                      m2_derived, m2_acc.mean(),          m2_acc.std_error(),
                      Verdict::Inconclusive};
        row.verdict = adjudicate(row);
        rows.push_back(std::move(row));
    }
    if (d >= 2) {
        LedgerRow row{set,
                      Quantity::Cross,
                      0.0,
                      0.0,
                      cross_acc.mean(),
                      cross_acc.std_error(),
                      Verdict::Inconclusive};
        row.verdict = adjudicate(row);
        rows.push_back(std::move(row));
    }
    {
        const double n = static_cast<double>(set.rows);
        LedgerRow row{set,
                      Quantity::Lambda,
                      lambda_paper,
                      lambda_derived,
                      n * m2_acc.mean(),
                      n * m2_acc.std_error(),
                      Verdict::Inconclusive};
        row.verdict = adjudicate(row);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace aurlab::audit
