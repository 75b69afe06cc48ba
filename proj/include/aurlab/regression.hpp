#pragma once

#include "aurlab/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace aurlab::regression {

struct RegressionProblem {
    Matrix X;  // n x k design
    Vector y;  // n targets

    void validate() const;
    Eigen::Index sample_count() const { return X.rows(); }
    Eigen::Index feature_count() const { return X.cols(); }
};

enum class FitMethod { OLS, AUR, WUR };

std::string method_name(FitMethod method);
FitMethod method_from_name(const std::string& name);

struct FitResult {
    Vector beta;
    double objective = 0.0;
    double optimality_residual = 0.0;
    double lambda_used = 0.0;
    FitMethod method = FitMethod::OLS;
};

// Averaged-uncertainty robust regression: the squared-loss ridge problem
//   min ||y - X b||_2^2 + lambda ||b||_2^2
// solved through an SPD factorization of the k x k normal equations, with
// iterative refinement until the relative normal-equation residual is
// <= 1e-10. lambda = 0 requires a numerically nonsingular Gram matrix and
// otherwise throws RankDeficiencyError carrying a condition estimate.
FitResult fit_aur(const RegressionProblem& problem, double lambda);

// Worst-case robust regression: the unsquared objective
//   min ||y - X b||_2 + lambda ||b||_2.
// beta = 0 is returned exactly when lambda ||y|| >= ||X^T y|| (the zero
// subgradient condition); otherwise any interior optimum is the ridge point
// b(t) = (X^T X + t I)^{-1} X^T y at the t solving
// t = lambda ||y - X b(t)|| / ||b(t)||, found by bracketing + bisection,
// with a subgradient polish pass as a fallback. The optimality residual is
// the norm of the minimal-norm subgradient at the returned point.
FitResult fit_wur(const RegressionProblem& problem, double lambda);

// fit_aur at lambda = 0.
FitResult fit_ols(const RegressionProblem& problem);

struct CvSpec {
    std::vector<double> grid;  // nonempty, nondecreasing, nonnegative
    int folds = 5;
    std::uint64_t seed = 0;

    static std::vector<double> default_grid();  // 0.00, 0.05, ..., 1.00
};

struct CvPoint {
    double lambda;
    double mean_mse;
    double std_mse;
};

struct CvResult {
    double lambda = 0.0;
    std::vector<CvPoint> curve;
};

// Seeded k-fold cross validation over spec.grid; minimizes mean validation
// MSE, ties broken toward the smaller lambda. Fold assignment is a seeded
// deterministic permutation, so identical inputs give identical results.
CvResult select_lambda_cv(const RegressionProblem& problem, FitMethod method, const CvSpec& spec);

double mean_squared_error(const Matrix& X, const Vector& y, const Vector& beta);

// Objective values used across the audit/harness modules.
double aur_objective(const RegressionProblem& problem, const Vector& beta, double lambda);
double wur_objective(const RegressionProblem& problem, const Vector& beta, double lambda);

}  // namespace aurlab::regression
