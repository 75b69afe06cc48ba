#pragma once

#include "aurlab/geometry.hpp"
#include "aurlab/regression.hpp"
#include "aurlab/sampling.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aurlab::audit {

using geometry::PenaltyMode;
using geometry::UncertaintySet;
using regression::RegressionProblem;
using sampling::PerturbationBatch;

// Single-pass Welford accumulator; no catastrophic cancellation over 1e7
// updates.
class StreamingMoments {
public:
    void add(double value) {
        ++count_;
        const double delta = value - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (value - mean_);
    }
    std::int64_t count() const { return count_; }
    double mean() const { return mean_; }
    double variance() const {
        return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
    }
    double std_error() const {
        return count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
    }

private:
    std::int64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct LossEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t sample_count = 0;
};

// Streaming mean and standard error of ||y - (X + Delta) beta||^2 over the
// batch. Throws ConfigError on an empty batch, DimensionError on shape
// mismatches.
LossEstimate mc_average_loss(const RegressionProblem& problem, const Vector& beta,
                             const UncertaintySet& set, const PerturbationBatch& batch);

struct EquivalenceReport {
    UncertaintySet set;
    std::string probe;  // "ols" | "aur" | "random"
    Vector beta_probe;
    double mc_mean_loss = 0.0;
    double mc_std_error = 0.0;
    double closed_form_loss = 0.0;  // ||y - X b||^2 + lambda ||b||^2, lambda per mode
    double relative_gap = 0.0;
    PenaltyMode mode = PenaltyMode::DerivedFormula;
    std::int64_t sample_count = 0;
    bool agree = false;  // relative_gap <= max(1%, 3 se / |closed form|)
};

// Monte Carlo check of the averaged-loss/ridge equivalence at three probe
// coefficient vectors: the OLS solution, the AUR solution under `mode`, and
// a seeded random vector. Requires sample_count >= 1e4.
std::vector<EquivalenceReport> verify_equivalence(const RegressionProblem& problem,
                                                  const UncertaintySet& set, PenaltyMode mode,
                                                  std::int64_t sample_count, std::uint64_t seed);

enum class Quantity { Volume, Mean, SecondMoment, Cross, Lambda };
enum class Verdict { Agree, PaperDisagrees, Inconclusive };

std::string quantity_name(Quantity q);
std::string verdict_name(Verdict v);

struct LedgerRow {
    UncertaintySet set;
    Quantity quantity;
    std::optional<double> paper_value;    // unset where no closed form exists
    std::optional<double> derived_value;
    std::optional<double> mc_value;
    double mc_std_error = 0.0;
    Verdict verdict = Verdict::Inconclusive;
};

// True when the row has a Monte Carlo estimate and the derived closed form
// fails its 3-sigma gate; this is what drives the audit exit code.
bool derived_failure(const LedgerRow& row);

// Monte Carlo adjudication of the closed forms for one set: per-entry mean,
// per-entry second moment, one representative cross moment (coordinates 0,1),
// lambda = n * m2, and, for d <= 12, the volume via rejection acceptance.
// Moment rows come from hit-and-run; d > 12 leaves the volume row
// Inconclusive with no estimate.
std::vector<LedgerRow> audit_moments(const UncertaintySet& set, std::int64_t sample_count,
                                     std::uint64_t seed);

}  // namespace aurlab::audit
