#include "aurlab/regression.hpp"

#include "aurlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace aurlab::regression {

namespace {

constexpr double kAurResidualTol = 1e-10;
constexpr double kGramSingularRatio = 1e-12;

struct NormalEquations {
    Matrix gram;  // X^T X
    Vector rhs;   // X^T y
};

NormalEquations form_normal_equations(const RegressionProblem& problem) {
    return {problem.X.transpose() * problem.X, problem.X.transpose() * problem.y};
}

// Solve (gram + lambda I) beta = rhs by LLT with iterative refinement; the
// refinement buys back the last digits on ill-conditioned systems so the
// 1e-10 residual contract holds.
Vector solve_shifted(const NormalEquations& eq, double lambda, double* residual_out) {
    Matrix system = eq.gram;
    system.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) {
        // lambda = 0 with a semidefinite Gram can upset LLT; LDLT is slower
        // but handles the near-singular case the condition gate lets through.
        Eigen::LDLT<Matrix> ldlt(system);
        Vector beta = ldlt.solve(eq.rhs);
        for (int it = 0; it < 4; ++it) beta += ldlt.solve(eq.rhs - system * beta);
        if (residual_out)
            *residual_out = (system * beta - eq.rhs).norm() / std::max(1.0, eq.rhs.norm());
        return beta;
    }
    Vector beta = llt.solve(eq.rhs);
    double scale = std::max(1.0, eq.rhs.norm());
    double residual = (system * beta - eq.rhs).norm() / scale;
    for (int it = 0; it < 4 && residual > 0.25 * kAurResidualTol; ++it) {
        beta += llt.solve(eq.rhs - system * beta);
        residual = (system * beta - eq.rhs).norm() / scale;
    }
    if (residual_out) *residual_out = residual;
    return beta;
}

// Largest/smallest eigenvalue ratio of the (symmetric) Gram matrix; the
// rank gate for lambda = 0.
double gram_condition(const Matrix& gram) {
    Eigen::SelfAdjointEigenSolver<Matrix> eigs(gram, Eigen::EigenvaluesOnly);
    const double max_eig = eigs.eigenvalues().maxCoeff();
    const double min_eig = eigs.eigenvalues().minCoeff();
    if (min_eig <= 0.0) return std::numeric_limits<double>::infinity();
    return max_eig / min_eig;
}

// Minimal-norm element of the WUR subdifferential at beta. Both norm terms
// are smooth away from zero; at beta = 0 the penalty contributes the full
// lambda-ball, and at an exact fit the residual term contributes
// {-X^T v : ||v|| <= 1}.
double wur_subgradient_norm(const RegressionProblem& problem, const Vector& beta, double lambda) {
    const Vector residual = problem.y - problem.X * beta;
    const double res_norm = residual.norm();
    const double beta_norm = beta.norm();
    if (res_norm > 0.0 && beta_norm > 0.0)
        return (-problem.X.transpose() * residual / res_norm + lambda * beta / beta_norm).norm();
    if (beta_norm == 0.0) {
        if (res_norm == 0.0) return 0.0;  // y = 0: zero vector is optimal
        const Vector grad = problem.X.transpose() * residual / res_norm;
        return std::max(0.0, grad.norm() - lambda);
    }
    // Exact fit with beta != 0: residual term contributes {-X^T v: ||v|| <= 1},
    // so the minimal subgradient norm is min_{||v||<=1} ||target - X^T v|| with
    // target = lambda beta/||beta||. The min-norm preimage is v* = X (X^T X)^+ target;
    // if it escapes the unit ball, rescaling it onto the boundary gives a
    // conservative (never understated) residual.
    const Vector target = lambda * beta / beta_norm;
    Eigen::LDLT<Matrix> ldlt(problem.X.transpose() * problem.X);
    const Vector preimage = problem.X * ldlt.solve(target);
    if ((problem.X.transpose() * preimage - target).norm() <= 1e-9 * (1.0 + target.norm())) {
        if (preimage.norm() <= 1.0 + 1e-12) return 0.0;
        return (target - problem.X.transpose() * (preimage / preimage.norm())).norm();
    }
    return target.norm();
}

// Projected-subgradient polish used if bisection leaves a residual; small
// diminishing steps from the current iterate.
Vector wur_polish(const RegressionProblem& problem, Vector beta, double lambda) {
    double best_obj = wur_objective(problem, beta, lambda);
    Vector best = beta;
    double step = 0.1 * std::max(1.0, beta.norm());
    for (int it = 1; it <= 2000; ++it) {
        const Vector residual = problem.y - problem.X * beta;
        const double res_norm = residual.norm();
        const double beta_norm = beta.norm();
        Vector g = Vector::Zero(beta.size());
        if (res_norm > 0.0) g -= problem.X.transpose() * residual / res_norm;
        if (beta_norm > 0.0) g += lambda * beta / beta_norm;
        if (g.norm() == 0.0) break;
        beta -= (step / it) * g / g.norm();
        const double obj = wur_objective(problem, beta, lambda);
        if (obj < best_obj) {
            best_obj = obj;
            best = beta;
        }
    }
    return best;
}

}  // namespace

void RegressionProblem::validate() const {
    if (X.rows() < 1 || X.cols() < 1) throw DimensionError("regression problem: empty design");
    if (y.size() != X.rows())
        throw DimensionError("regression problem: y has " + std::to_string(y.size()) +
                             " entries, X has " + std::to_string(X.rows()) + " rows");
    if (!X.allFinite() || !y.allFinite())
        throw DataError("regression problem: non-finite entries");
}

std::string method_name(FitMethod method) {
    switch (method) {
        case FitMethod::OLS: return "ols";
        case FitMethod::AUR: return "aur";
        case FitMethod::WUR: return "wur";
    }
    return "?";
}

FitMethod method_from_name(const std::string& name) {
    if (name == "ols") return FitMethod::OLS;
    if (name == "aur") return FitMethod::AUR;
    if (name == "wur") return FitMethod::WUR;
    throw ConfigError("unknown fit method: '" + name + "'");
}

double mean_squared_error(const Matrix& X, const Vector& y, const Vector& beta) {
    return (y - X * beta).squaredNorm() / static_cast<double>(y.size());
}

double aur_objective(const RegressionProblem& problem, const Vector& beta, double lambda) {
    return (problem.y - problem.X * beta).squaredNorm() + lambda * beta.squaredNorm();
}

double wur_objective(const RegressionProblem& problem, const Vector& beta, double lambda) {
    return (problem.y - problem.X * beta).norm() + lambda * beta.norm();
}

FitResult fit_aur(const RegressionProblem& problem, double lambda) {
    problem.validate();
    if (lambda < 0.0) throw ConfigError("fit_aur: lambda must be nonnegative");
    const NormalEquations eq = form_normal_equations(problem);
    if (lambda == 0.0) {
        const double condition = gram_condition(eq.gram);
        if (!(condition < 1.0 / kGramSingularRatio))
            throw RankDeficiencyError(
                "fit_aur: X^T X numerically singular at lambda = 0 (condition estimate " +
                    std::to_string(condition) + ")",
                condition);
    }
    FitResult result;
    result.method = FitMethod::AUR;
    result.lambda_used = lambda;
    result.beta = solve_shifted(eq, lambda, &result.optimality_residual);
    result.objective = aur_objective(problem, result.beta, lambda);
    return result;
}

FitResult fit_ols(const RegressionProblem& problem) {
    FitResult result = fit_aur(problem, 0.0);
    result.method = FitMethod::OLS;
    return result;
}

FitResult fit_wur(const RegressionProblem& problem, double lambda) {
    problem.validate();
    if (lambda < 0.0) throw ConfigError("fit_wur: lambda must be nonnegative");

    FitResult result;
    result.method = FitMethod::WUR;
    result.lambda_used = lambda;

    const double y_norm = problem.y.norm();
    const NormalEquations eq = form_normal_equations(problem);
    const double rhs_norm = eq.rhs.norm();
    const double tol = 1e-8 * (1.0 + rhs_norm);

    // Zero-point subgradient condition: ||X^T y|| / ||y|| <= lambda.
    if (y_norm == 0.0 || lambda * y_norm >= rhs_norm) {
        result.beta = Vector::Zero(problem.feature_count());
        result.objective = y_norm;
        result.optimality_residual = wur_subgradient_norm(problem, result.beta, lambda);
        return result;
    }

    if (lambda == 0.0) {
        FitResult ols = fit_ols(problem);
        result.beta = std::move(ols.beta);
        result.objective = wur_objective(problem, result.beta, lambda);
        result.optimality_residual = wur_subgradient_norm(problem, result.beta, lambda);
        return result;
    }

    // phi(t) = lambda ||y - X b(t)|| - t ||b(t)||; a sign change brackets the
    // interior fixed point. With ||X^T y|| > lambda ||y||, phi is eventually
    // negative; phi near 0+ is positive unless y is (numerically) an exact
    // fit, in which case the exact-fit point itself is the optimum.
    auto ridge_point = [&](double t) { return solve_shifted(eq, t, nullptr); };
    auto phi = [&](double t, const Vector& beta) {
        return lambda * (problem.y - problem.X * beta).norm() - t * beta.norm();
    };

    const double scale = eq.gram.trace() / static_cast<double>(problem.feature_count());
    double t_lo = std::max(1e-14 * scale, std::numeric_limits<double>::min());
    Vector beta_lo = ridge_point(t_lo);
    if (phi(t_lo, beta_lo) <= 0.0) {
        // Exact-fit branch: compare the (near-)interpolating point against
        // beta = 0; the zero candidate already lost the subgradient test.
        result.beta = std::move(beta_lo);
        result.objective = wur_objective(problem, result.beta, lambda);
        result.optimality_residual = wur_subgradient_norm(problem, result.beta, lambda);
        if (result.optimality_residual > tol) {
            result.beta = wur_polish(problem, result.beta, lambda);
            result.objective = wur_objective(problem, result.beta, lambda);
            result.optimality_residual = wur_subgradient_norm(problem, result.beta, lambda);
        }
        return result;
    }

    double t_hi = std::max(1.0, t_lo * 2.0);
    Vector beta_hi = ridge_point(t_hi);
    int doublings = 0;
    while (phi(t_hi, beta_hi) > 0.0 && doublings++ < 400) {
        t_hi *= 2.0;
        beta_hi = ridge_point(t_hi);
    }

    Vector beta_mid = beta_hi;
    for (int it = 0; it < 200 && (t_hi - t_lo) > 1e-15 * t_hi; ++it) {
        const double t_mid = 0.5 * (t_lo + t_hi);
        beta_mid = ridge_point(t_mid);
        if (phi(t_mid, beta_mid) > 0.0)
            t_lo = t_mid;
        else
            t_hi = t_mid;
    }

    result.beta = std::move(beta_mid);
    result.objective = wur_objective(problem, result.beta, lambda);
    result.optimality_residual = wur_subgradient_norm(problem, result.beta, lambda);
    if (result.optimality_residual > tol) {
        result.beta = wur_polish(problem, result.beta, lambda);
        result.objective = wur_objective(problem, result.beta, lambda);
        result.optimality_residual = wur_subgradient_norm(problem, result.beta, lambda);
    }
    return result;
}

std::vector<double> CvSpec::default_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.05 * i);
    return grid;
}

CvResult select_lambda_cv(const RegressionProblem& problem, FitMethod method, const CvSpec& spec) {
    problem.validate();
    if (method == FitMethod::OLS) throw ConfigError("select_lambda_cv: method must be AUR or WUR");
    if (spec.grid.empty()) throw ConfigError("select_lambda_cv: empty lambda grid");
    if (!std::is_sorted(spec.grid.begin(), spec.grid.end()) || spec.grid.front() < 0.0)
        throw ConfigError("select_lambda_cv: grid must be nondecreasing and nonnegative");
    const Eigen::Index n = problem.sample_count();
    if (spec.folds < 2 || n < spec.folds)
        throw ConfigError("select_lambda_cv: need n >= folds >= 2");

    // Seeded permutation; row perm[i] lands in fold i mod folds.
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Rng rng(spec.seed);
    for (std::size_t i = perm.size() - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.below(i + 1)]);

    const int folds = spec.folds;
    std::vector<std::vector<Eigen::Index>> fold_rows(static_cast<std::size_t>(folds));
    for (std::size_t i = 0; i < perm.size(); ++i)
        fold_rows[i % static_cast<std::size_t>(folds)].push_back(perm[i]);

    struct FoldSplit {
        Matrix X_train, X_val;
        Vector y_train, y_val;
    };
    std::vector<FoldSplit> splits;
    splits.reserve(static_cast<std::size_t>(folds));
    for (int f = 0; f < folds; ++f) {
        const auto& val_rows = fold_rows[static_cast<std::size_t>(f)];
        const Eigen::Index n_val = static_cast<Eigen::Index>(val_rows.size());
        const Eigen::Index n_train = n - n_val;
        if (n_train == 0) throw ConfigError("select_lambda_cv: fold with zero training rows");
        FoldSplit split;
        split.X_train.resize(n_train, problem.feature_count());
        split.y_train.resize(n_train);
        split.X_val.resize(n_val, problem.feature_count());
        split.y_val.resize(n_val);
        std::vector<bool> in_val(static_cast<std::size_t>(n), false);
        for (Eigen::Index r : val_rows) in_val[static_cast<std::size_t>(r)] = true;
        Eigen::Index it = 0, iv = 0;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (in_val[static_cast<std::size_t>(r)]) {
                split.X_val.row(iv) = problem.X.row(r);
                split.y_val[iv++] = problem.y[r];
            } else {
                split.X_train.row(it) = problem.X.row(r);
                split.y_train[it++] = problem.y[r];
            }
        }
        splits.push_back(std::move(split));
    }

    CvResult result;
    double best_mse = std::numeric_limits<double>::infinity();
    for (double lambda : spec.grid) {
        double sum = 0.0, sum_sq = 0.0;
        for (const FoldSplit& split : splits) {
            RegressionProblem sub{split.X_train, split.y_train};
            const FitResult fit =
                method == FitMethod::AUR ? fit_aur(sub, lambda) : fit_wur(sub, lambda);
            const double mse = mean_squared_error(split.X_val, split.y_val, fit.beta);
            sum += mse;
            sum_sq += mse * mse;
        }
        const double mean = sum / folds;
        const double var = std::max(0.0, sum_sq / folds - mean * mean);
        result.curve.push_back({lambda, mean, std::sqrt(var)});
        if (mean < best_mse) {  // strict: ties stay with the smaller lambda
            best_mse = mean;
            result.lambda = lambda;
        }
    }
    return result;
}

}  // namespace aurlab::regression
