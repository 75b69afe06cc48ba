#include "aurlab/sampling.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace aurlab::sampling {

namespace {

constexpr int kBisectionSteps = 50;

double l1_norm(const Vector& v) { return v.lpNorm<1>(); }

// Chord of the box {max|x_i| <= cap} along direction u: intersection of the
// per-coordinate step intervals.
Chord box_chord(const Vector& point, const Vector& direction, double cap) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < point.size(); ++i) {
        const double u = direction[i];
        if (u == 0.0) continue;
        double a = (-cap - point[i]) / u;
        double b = (cap - point[i]) / u;
        if (a > b) std::swap(a, b);
        lo = std::max(lo, a);
        hi = std::min(hi, b);
    }
    if (!(lo <= hi)) return {0.0, 0.0};
    return {lo, hi};
}

Chord ellipsoid_chord(const Vector& point, const Vector& direction, double rho) {
    const double a = direction.squaredNorm();
    const double b = point.dot(direction);
    const double c = point.squaredNorm() - rho * rho;
    const double disc = b * b - a * c;
    if (disc <= 0.0 || a == 0.0) return {0.0, 0.0};
    const double root = std::sqrt(disc);
    return {(-b - root) / a, (-b + root) / a};
}

// Root of the convex piecewise-linear profile f(s) = ||point + s u||_1 - rho
// on one side of 0, by fixed-count bisection. Returns the inner bracket
// endpoint so membership is never overshot; after 50 halvings the residual
// sits far below the 1e-10 endpoint tolerance.
double l1_root(const Vector& point, const Vector& direction, double rho, bool positive_side) {
    const double sign = positive_side ? 1.0 : -1.0;
    auto profile = [&](double s) { return l1_norm(point + (sign * s) * direction) - rho; };
    if (profile(0.0) >= 0.0) return 0.0;  // already on the boundary
    double lo = 0.0;
    double hi = (rho + l1_norm(point)) / l1_norm(direction);
    if (profile(hi) < 0.0) return sign * hi;  // cannot happen for a true l1 ball; belt only
    for (int it = 0; it < kBisectionSteps; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (profile(mid) <= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return sign * lo;
}

Chord diamond_chord(const Vector& point, const Vector& direction, double rho) {
    return {l1_root(point, direction, rho, false), l1_root(point, direction, rho, true)};
}

Chord intersect(Chord a, Chord b) {
    Chord out{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
    if (!(out.lo <= out.hi)) return {0.0, 0.0};
    return out;
}

Matrix unflatten(const UncertaintySet& set, const Vector& flat) {
    return Eigen::Map<const Matrix>(flat.data(), set.rows, set.cols);
}

Vector starting_point(const UncertaintySet& set, const SamplerConfig& config) {
    const auto d = set.dim();
    Vector start = config.start.value_or(Vector::Zero(d));
    if (start.size() != d)
        throw ConfigError("sampler start has dimension " + std::to_string(start.size()) +
                          ", set expects " + std::to_string(d));
    if (!geometry::contains_flat(set, start))
        throw ConfigError("sampler start lies outside the uncertainty set");
    return start;
}

class HitAndRunWalk {
public:
    HitAndRunWalk(const UncertaintySet& set, const SamplerConfig& config)
        : set_(set), rng_(config.seed), point_(starting_point(set, config)) {}

    void step() {
        Vector direction = rng_.normal_vector(static_cast<int>(set_.dim()));
        double norm = direction.norm();
        while (norm == 0.0) {  // probability zero; re-draw
            direction = rng_.normal_vector(static_cast<int>(set_.dim()));
            norm = direction.norm();
        }
        direction /= norm;
        const Chord chord = chord_through(set_, point_, direction);
        const double s = rng_.uniform(chord.lo, chord.hi);
        point_ += s * direction;
    }

    void advance(int steps) {
        for (int i = 0; i < steps; ++i) step();
    }

    const Vector& point() const { return point_; }

private:
    UncertaintySet set_;
    Rng rng_;
    Vector point_;
};

}  // namespace

Chord chord_through(const UncertaintySet& set, const Vector& point, const Vector& direction) {
    if (point.size() != set.dim() || direction.size() != set.dim())
        throw DimensionError("chord_through: point/direction dimension mismatch");
    switch (set.kind) {
        case geometry::SetKind::Box:
            return box_chord(point, direction, set.rho);
        case geometry::SetKind::Ellipsoidal:
            return ellipsoid_chord(point, direction, set.rho);
        case geometry::SetKind::Diamond:
            return diamond_chord(point, direction, set.rho);
        case geometry::SetKind::Budget:
            return intersect(diamond_chord(point, direction, set.rho),
                             box_chord(point, direction, set.gamma));
    }
    return {0.0, 0.0};
}

PerturbationBatch hit_and_run(const UncertaintySet& set, const SamplerConfig& config, int count) {
    if (count < 1) throw ConfigError("hit_and_run: count must be positive");
    if (config.thinning < 1) throw ConfigError("hit_and_run: thinning must be >= 1");
    if (config.burn_in < 0) throw ConfigError("hit_and_run: burn_in must be >= 0");

    HitAndRunWalk walk(set, config);
    walk.advance(config.burn_in);

    PerturbationBatch batch{set, {}, config.seed, SampleMethod::HitAndRun, 0};
    batch.samples.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        walk.advance(config.thinning);
        batch.samples.push_back(unflatten(set, walk.point()));
    }
    return batch;
}

PerturbationBatch rejection_sample(const UncertaintySet& set, std::uint64_t seed, int count) {
    if (count < 1) throw ConfigError("rejection_sample: count must be positive");
    if (set.dim() > 12)
        throw ConfigError("rejection_sample: d = " + std::to_string(set.dim()) +
                          " > 12; bounding-box acceptance is impractical, use hit_and_run");
    const auto d = set.dim();
    Rng rng(seed);
    PerturbationBatch batch{set, {}, seed, SampleMethod::Rejection, 0};
    batch.samples.reserve(static_cast<std::size_t>(count));
    Vector proposal(d);
    while (batch.samples.size() < static_cast<std::size_t>(count)) {
        for (Eigen::Index i = 0; i < d; ++i) proposal[i] = rng.uniform(-set.rho, set.rho);
        ++batch.proposals;
        if (geometry::contains_flat(set, proposal)) batch.samples.push_back(unflatten(set, proposal));
    }
    return batch;
}

PerturbationBatch nested_level_sample(const UncertaintySet& set_small,
                                      const UncertaintySet& set_large,
                                      const SamplerConfig& config, int count) {
    if (set_small.kind != set_large.kind || set_small.rows != set_large.rows ||
        set_small.cols != set_large.cols)
        throw ConfigError("nested_level_sample: sets must share kind and shape");
    if (!(set_small.rho < set_large.rho) ||
        (set_small.kind == geometry::SetKind::Budget && set_small.gamma > set_large.gamma))
        throw ConfigError("nested_level_sample: inner set is not strictly nested in the outer set");
    if (count < 1) throw ConfigError("nested_level_sample: count must be positive");

    HitAndRunWalk walk(set_large, config);
    walk.advance(config.burn_in);

    PerturbationBatch batch{set_large, {}, config.seed, SampleMethod::HitAndRun, 0};
    batch.samples.reserve(static_cast<std::size_t>(count));
    while (batch.samples.size() < static_cast<std::size_t>(count)) {
        walk.advance(config.thinning);
        ++batch.proposals;
        if (!geometry::contains_flat(set_small, walk.point()))
            batch.samples.push_back(unflatten(set_large, walk.point()));
    }
    return batch;
}

}  // namespace aurlab::sampling
