#pragma once

#include "aurlab/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace aurlab::geometry {

enum class SetKind { Ellipsoidal, Box, Diamond, Budget };

// Which constants to use for the ridge penalty: the ones as originally
// published, or the ones re-derived by direct integration over the solid
// set. The two disagree for the ellipsoidal and budget sets; the
// audit module adjudicates the disagreement against Monte Carlo.
enum class PenaltyMode { PaperFormula, DerivedFormula };

// Descriptor of one uncertainty set over n x k perturbation matrices,
// treated as a convex body in dimension d = n*k:
//   Ellipsoidal: ||delta||_F2   <= rho
//   Box:         max |delta_ij| <= rho
//   Diamond:     sum|delta_ij|  <= rho
//   Budget:      sum|delta_ij|  <= rho  and  max |delta_ij| <= gamma
struct UncertaintySet {
    SetKind kind;
    double rho;
    double gamma;  // budget cap; equal to rho for the other kinds
    int rows;      // n
    int cols;      // k

    std::int64_t dim() const { return std::int64_t{1} * rows * cols; }

    // True when the budget closed forms (volume, moments, lambda) are proven:
    // the 2d truncated corners are pairwise disjoint iff gamma >= rho/2.
    bool closed_forms_valid() const;

    static UncertaintySet ellipsoidal(double rho, int rows, int cols);
    static UncertaintySet box(double rho, int rows, int cols);
    static UncertaintySet diamond(double rho, int rows, int cols);
    static UncertaintySet budget(double rho, double gamma, int rows, int cols);
};

std::string kind_name(SetKind kind);
SetKind kind_from_name(const std::string& name);

// JSON wire format: {"kind": "box"|..., "rho": r, "gamma": g?, "n": n, "k": k}
nlohmann::json to_json(const UncertaintySet& set);
UncertaintySet set_from_json(const nlohmann::json& j);

// Membership with a relative boundary tolerance of 1e-12 (keeps sampler
// round-trips off the knife edge). Throws DimensionError on shape mismatch.
bool contains(const UncertaintySet& set, const Matrix& delta);
bool contains_flat(const UncertaintySet& set, const Vector& flat);

// d-dimensional hypervolume. Exact cancellation-free product for small d,
// log-space otherwise; never materializes d!. Budget requires
// closed_forms_valid() and throws FormulaInvalidError outside the window.
double volume(const UncertaintySet& set);
// log(volume); finite for d up to at least 1e4 even where volume()
// under/overflows a double.
double log_volume(const UncertaintySet& set);

// Mean of one squared coordinate under the uniform distribution on the set,
// m2 = (1/Vol) * integral of x_i^2.
//   DerivedFormula: ellipsoidal rho^2/(d+2); box rho^2/3;
//                   diamond 2 rho^2/((d+1)(d+2)); budget per the truncated
//                   corner integral.
//   PaperFormula:   published lambda / n.
double per_entry_second_moment(const UncertaintySet& set, PenaltyMode mode);

// Ridge penalty. DerivedFormula = n * m2(derived). PaperFormula returns the
// published constants exactly as printed: rho^2/k, n rho^2/3,
// 2 n rho^2/((nk+2)(nk+1)), and the two-term budget expression.
double ridge_lambda(const UncertaintySet& set, PenaltyMode mode);

enum class MomentSource { ClosedForm, MonteCarlo };

struct MomentReport {
    double per_entry_mean = 0.0;
    double per_entry_second_moment = 0.0;
    double cross_moment = 0.0;
    double volume = 0.0;
    MomentSource source = MomentSource::ClosedForm;
};

// Closed-form moment summary (mean and cross moment are 0 by symmetry for
// all four sets).
MomentReport closed_form_moments(const UncertaintySet& set, PenaltyMode mode);

}  // namespace aurlab::geometry
