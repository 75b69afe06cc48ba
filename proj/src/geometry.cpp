#include "aurlab/geometry.hpp"

#include <cmath>
#include <limits>

namespace aurlab::geometry {

namespace {

constexpr double kMembershipTol = 1e-12;  // relative
constexpr double kPi = 3.14159265358979323846264338327950288;

void validate_shape(double rho, int rows, int cols) {
    if (!(rho > 0.0) || !std::isfinite(rho))
        throw ConfigError("uncertainty set: rho must be positive and finite");
    if (rows < 1 || cols < 1)
        throw ConfigError("uncertainty set: n and k must be positive");
}

// ((rho - gamma)/rho)^d, the corner decay ratio of the budget formulas.
// Stays scale-free; underflows gracefully to 0 as gamma -> rho or d grows.
double corner_ratio(const UncertaintySet& set) {
    if (set.gamma >= set.rho) return 0.0;
    return std::pow((set.rho - set.gamma) / set.rho, static_cast<double>(set.dim()));
}

void require_budget_window(const UncertaintySet& set, const char* what) {
    if (set.kind == SetKind::Budget && !set.closed_forms_valid())
        throw FormulaInvalidError(std::string(what) +
                                  ": budget closed form unproven for gamma < rho/2 "
                                  "(truncated corners overlap); use the Monte Carlo audit instead");
}

// (2 rho)^d / d! as a cancellation-free running product; exact for small d
// and free of intermediate overflow for the sizes where a double can hold
// the result at all.
double cross_polytope_volume(double rho, std::int64_t d) {
    if (d <= 64) {
        double vol = 1.0;
        for (std::int64_t i = 1; i <= d; ++i) vol *= (2.0 * rho) / static_cast<double>(i);
        return vol;
    }
    double dd = static_cast<double>(d);
    return std::exp(dd * std::log(2.0 * rho) - std::lgamma(dd + 1.0));
}

double budget_m2_derived(const UncertaintySet& set) {
    const double d = static_cast<double>(set.dim());
    const double rho = set.rho, gamma = set.gamma;
    const double q = corner_ratio(set);
    const double poly = (d * d + 3.0 * d - 2.0) * gamma * gamma + (4.0 - 2.0 * d) * rho * gamma;
    const double lead = 2.0 * rho * rho / ((d + 1.0) * (d + 2.0));
    return lead - q * poly / ((d + 1.0) * (d + 2.0) * (1.0 - d * q));
}

// The published two-term expression: identical to the derived value except the
// second-term denominator carries (rho^d - (rho-gamma)^d) without the factor
// d on the corner term.
double budget_m2_paper(const UncertaintySet& set) {
    const double d = static_cast<double>(set.dim());
    const double rho = set.rho, gamma = set.gamma;
    const double q = corner_ratio(set);
    const double poly = (d * d + 3.0 * d - 2.0) * gamma * gamma + (4.0 - 2.0 * d) * rho * gamma;
    const double lead = 2.0 * rho * rho / ((d + 1.0) * (d + 2.0));
    return lead - q * poly / ((d + 1.0) * (d + 2.0) * (1.0 - q));
}

}  // namespace

bool UncertaintySet::closed_forms_valid() const {
    if (kind != SetKind::Budget) return true;
    return gamma >= 0.5 * rho;
}

UncertaintySet UncertaintySet::ellipsoidal(double rho, int rows, int cols) {
    validate_shape(rho, rows, cols);
    return {SetKind::Ellipsoidal, rho, rho, rows, cols};
}

UncertaintySet UncertaintySet::box(double rho, int rows, int cols) {
    validate_shape(rho, rows, cols);
    return {SetKind::Box, rho, rho, rows, cols};
}

UncertaintySet UncertaintySet::diamond(double rho, int rows, int cols) {
    validate_shape(rho, rows, cols);
    return {SetKind::Diamond, rho, rho, rows, cols};
}

UncertaintySet UncertaintySet::budget(double rho, double gamma, int rows, int cols) {
    validate_shape(rho, rows, cols);
    if (!(gamma > 0.0) || gamma > rho)
        throw ConfigError("budget set: need 0 < gamma <= rho");
    return {SetKind::Budget, rho, gamma, rows, cols};
}

std::string kind_name(SetKind kind) {
    switch (kind) {
        case SetKind::Ellipsoidal: return "ellipsoidal";
        case SetKind::Box: return "box";
        case SetKind::Diamond: return "diamond";
        case SetKind::Budget: return "budget";
    }
    return "?";
}

SetKind kind_from_name(const std::string& name) {
    if (name == "ellipsoidal") return SetKind::Ellipsoidal;
    if (name == "box") return SetKind::Box;
    if (name == "diamond") return SetKind::Diamond;
    if (name == "budget") return SetKind::Budget;
    throw ConfigError("unknown uncertainty set kind: '" + name + "'");
}

nlohmann::json to_json(const UncertaintySet& set) {
    nlohmann::json j{{"kind", kind_name(set.kind)},
                     {"rho", set.rho},
                     {"n", set.rows},
                     {"k", set.cols}};
    if (set.kind == SetKind::Budget) j["gamma"] = set.gamma;
    return j;
}

UncertaintySet set_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.contains("rho") || !j.contains("n") ||
        !j.contains("k"))
        throw ConfigError("set descriptor needs fields kind, rho, n, k");
    SetKind kind = kind_from_name(j.at("kind").get<std::string>());
    double rho = j.at("rho").get<double>();
    int rows = j.at("n").get<int>();
    int cols = j.at("k").get<int>();
    if (kind == SetKind::Budget) {
        if (!j.contains("gamma")) throw ConfigError("budget set descriptor needs gamma");
        return UncertaintySet::budget(rho, j.at("gamma").get<double>(), rows, cols);
    }
    switch (kind) {
        case SetKind::Ellipsoidal: return UncertaintySet::ellipsoidal(rho, rows, cols);
        case SetKind::Box: return UncertaintySet::box(rho, rows, cols);
        default: return UncertaintySet::diamond(rho, rows, cols);
    }
}

bool contains_flat(const UncertaintySet& set, const Vector& flat) {
    if (flat.size() != set.dim())
        throw DimensionError("contains: flattened perturbation has dimension " +
                             std::to_string(flat.size()) + ", set expects " +
                             std::to_string(set.dim()));
    const double rho_tol = set.rho * (1.0 + kMembershipTol);
    switch (set.kind) {
        case SetKind::Ellipsoidal:
            return flat.norm() <= rho_tol;
        case SetKind::Box:
            return flat.lpNorm<Eigen::Infinity>() <= rho_tol;
        case SetKind::Diamond:
            return flat.lpNorm<1>() <= rho_tol;
        case SetKind::Budget:
            return flat.lpNorm<1>() <= rho_tol &&
                   flat.lpNorm<Eigen::Infinity>() <= set.gamma * (1.0 + kMembershipTol);
    }
    return false;
}

bool contains(const UncertaintySet& set, const Matrix& delta) {
    if (delta.rows() != set.rows || delta.cols() != set.cols)
        throw DimensionError("contains: perturbation is " + std::to_string(delta.rows()) + "x" +
                             std::to_string(delta.cols()) + ", set expects " +
                             std::to_string(set.rows) + "x" + std::to_string(set.cols));
    return contains_flat(set, Eigen::Map<const Vector>(delta.data(), delta.size()));
}

double log_volume(const UncertaintySet& set) {
    const double d = static_cast<double>(set.dim());
    switch (set.kind) {
        case SetKind::Ellipsoidal:
            // Unit d-ball volume pi^{d/2}/Gamma(d/2+1), scaled by rho^d.
            return 0.5 * d * std::log(kPi) - std::lgamma(0.5 * d + 1.0) + d * std::log(set.rho);
        case SetKind::Box:
            return d * std::log(2.0 * set.rho);
        case SetKind::Diamond:
            return d * std::log(2.0 * set.rho) - std::lgamma(d + 1.0);
        case SetKind::Budget: {
            require_budget_window(set, "log_volume");
            const double q = corner_ratio(set);
            // log of (2rho)^d (1 - d q) / d!; 1 - d q >= 1/2 inside the window.
            return d * std::log(2.0 * set.rho) - std::lgamma(d + 1.0) + std::log1p(-d * q);
        }
    }
    return -std::numeric_limits<double>::infinity();
}

double volume(const UncertaintySet& set) {
    const std::int64_t d = set.dim();
    switch (set.kind) {
        case SetKind::Ellipsoidal:
            return std::exp(log_volume(set));
        case SetKind::Box:
            return std::pow(2.0 * set.rho, static_cast<double>(d));
        case SetKind::Diamond:
            return cross_polytope_volume(set.rho, d);
        case SetKind::Budget: {
            require_budget_window(set, "volume");
            const double q = corner_ratio(set);
            return cross_polytope_volume(set.rho, d) * (1.0 - static_cast<double>(d) * q);
        }
    }
    return 0.0;
}

double per_entry_second_moment(const UncertaintySet& set, PenaltyMode mode) {
    const double d = static_cast<double>(set.dim());
    const double rho2 = set.rho * set.rho;
    if (mode == PenaltyMode::DerivedFormula) {
        switch (set.kind) {
            case SetKind::Ellipsoidal: return rho2 / (d + 2.0);
            case SetKind::Box: return rho2 / 3.0;
            case SetKind::Diamond: return 2.0 * rho2 / ((d + 1.0) * (d + 2.0));
            case SetKind::Budget:
                require_budget_window(set, "per_entry_second_moment");
                return budget_m2_derived(set);
        }
    } else {
        // published constants divided by n
        switch (set.kind) {
            case SetKind::Ellipsoidal: return rho2 / d;  // (rho^2/k)/n
            case SetKind::Box: return rho2 / 3.0;
            case SetKind::Diamond: return 2.0 * rho2 / ((d + 1.0) * (d + 2.0));
            case SetKind::Budget:
                require_budget_window(set, "per_entry_second_moment");
                return budget_m2_paper(set);
        }
    }
    return 0.0;
}

double ridge_lambda(const UncertaintySet& set, PenaltyMode mode) {
    const double n = static_cast<double>(set.rows);
    if (mode == PenaltyMode::DerivedFormula)
        return n * per_entry_second_moment(set, PenaltyMode::DerivedFormula);
    const double d = static_cast<double>(set.dim());
    const double rho2 = set.rho * set.rho;
    switch (set.kind) {
        case SetKind::Ellipsoidal: return rho2 / static_cast<double>(set.cols);
        case SetKind::Box: return n * rho2 / 3.0;
        case SetKind::Diamond: return 2.0 * n * rho2 / ((d + 2.0) * (d + 1.0));
        case SetKind::Budget:
            require_budget_window(set, "ridge_lambda");
            return n * budget_m2_paper(set);
    }
    return 0.0;
}

MomentReport closed_form_moments(const UncertaintySet& set, PenaltyMode mode) {
    MomentReport report;
    report.per_entry_mean = 0.0;
    report.cross_moment = 0.0;
    report.per_entry_second_moment = per_entry_second_moment(set, mode);
    report.volume = volume(set);
    report.source = MomentSource::ClosedForm;
    return report;
}

}  // namespace aurlab::geometry
