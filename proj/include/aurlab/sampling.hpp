#pragma once

#include "aurlab/geometry.hpp"
#include "aurlab/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace aurlab::sampling {

using geometry::UncertaintySet;

struct SamplerConfig {
    std::uint64_t seed = 0;
    int burn_in = 1000;
    int thinning = 10;
    std::optional<Vector> start;  // flattened, dimension d; default: origin
};

enum class SampleMethod { HitAndRun, Rejection };

struct PerturbationBatch {
    UncertaintySet set;
    std::vector<Matrix> samples;  // each n x k
    std::uint64_t seed = 0;
    SampleMethod method = SampleMethod::HitAndRun;
    // Rejection only: proposals drawn to produce samples.size() acceptances.
    std::int64_t proposals = 0;

    double acceptance_rate() const {
        return proposals > 0 ? static_cast<double>(samples.size()) / static_cast<double>(proposals)
                             : 1.0;
    }
};

// Approximately-uniform samples via hit-and-run. Chord endpoints are exact
// for box (coordinate clipping) and ellipsoidal (quadratic roots) sets, and
// come from 50-step bisection on the convex l1 profile for diamond/budget
// (budget chords additionally clipped by the gamma cap).
PerturbationBatch hit_and_run(const UncertaintySet& set, const SamplerConfig& config, int count);

// Exact uniform sampling by proposal on the bounding box [-rho, rho]^d.
// Refuses d > 12, where box acceptance becomes impractical.
PerturbationBatch rejection_sample(const UncertaintySet& set, std::uint64_t seed, int count);

// Uniform on set_large conditioned on NOT lying in set_small (rejection
// post-filter on hit-and-run output). Sets must share kind and shape with
// set_small strictly inside set_large.
PerturbationBatch nested_level_sample(const UncertaintySet& set_small,
                                      const UncertaintySet& set_large,
                                      const SamplerConfig& config, int count);

// One hit-and-run chord: the interval [lo, hi] of step sizes s for which
// point + s*direction stays inside the set. Exposed for tests.
struct Chord {
    double lo;
    double hi;
};
Chord chord_through(const UncertaintySet& set, const Vector& point, const Vector& direction);

}  // namespace aurlab::sampling
