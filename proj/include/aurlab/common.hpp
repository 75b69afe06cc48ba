#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace aurlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error taxonomy. The CLI maps these onto its exit codes: usage/config
// problems exit 1, data problems exit 2 (audit failures exit 3 but are
// signalled by ledger verdicts, not exceptions).

// Shapes do not line up (matrix vs. set descriptor, beta vs. feature count).
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// A closed form was requested outside its proven validity window
// (budget sets with gamma < rho/2).
class FormulaInvalidError : public std::domain_error {
public:
    explicit FormulaInvalidError(const std::string& what) : std::domain_error(what) {}
};

// Invalid configuration: bad sampler start, nonsense nesting, bad CV folds,
// degenerate splits.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Input data problems: unreadable files, missing columns, empty datasets.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Normal equations are numerically singular at lambda = 0.
class RankDeficiencyError : public std::runtime_error {
public:
    RankDeficiencyError(const std::string& what, double condition_estimate)
        : std::runtime_error(what), condition_estimate(condition_estimate) {}
    double condition_estimate;
};

}  // namespace aurlab
