#pragma once

#include <memory>
#include <vector>

#include "lorenz_shadow/pseudo_orbit.hpp"
#include "lorenz_shadow/reparam.hpp"

namespace lorenz_shadow {

// phi(h(t), y) with the orbit of y cached once and reused across evaluations.
class CandidatePath {
public:
    CandidatePath(const HybridState& y, Reparam h, const ModelParams& p)
        : traj_(std::make_shared<Trajectory>(y, p)), h_(std::move(h)), y_(y) {}

    Vec3 at(double t) const { return traj_->position(h_(t)); }
    const Reparam& reparam() const { return h_; }
    const HybridState& start() const { return y_; }
    const Trajectory& trajectory() const { return *traj_; }

private:
    std::shared_ptr<Trajectory> traj_;
    Reparam h_;
    HybridState y_;
};

struct QuadratureOptions {
    double coarse_step = 0.01;
    double fine_step = 1e-5;            // callers set this to beta/4
    double lipschitz = 0.0;             // 2 * Vmax * (1 + Delta); set by caller
    double refine_factor = 2.0;         // refine when value < factor * L * width
};

struct SegmentIntegral {
    double value = 0.0;
    double error_bound = 0.0; // from the integrand's Lipschitz constant
};

// Integral over [s_i, s_{i+1}) of d(phi(h(t), y), phi(t - s_i, x_i)) dt.
// Panels are aligned to the region-change events of both paths and to the
// reparametrization knots; panels whose value could change a near-zero verdict
// are refined down to fine_step.
SegmentIntegral segment_integral(const CandidatePath& cand, const SegmentedOrbit& orbit,
                                 long i, const QuadratureOptions& opt);

struct ShadowFunctionalResult {
    double value = 0.0;
    long horizon = 0;
    std::vector<SegmentIntegral> per_segment; // indexed from the first summed segment
    long first_index = 0;
    double error_bound = 0.0;          // same averaging as value
    std::vector<double> running_average; // after 1, 2, ... summed segments
    double sup_running_average = 0.0;
};

// (1/n) sum_{i=1..n} of the segment integrals (the averaged shadowing quantity).
ShadowFunctionalResult avg_shadow_functional(const CandidatePath& cand,
                                             const SegmentedOrbit& orbit, long n,
                                             const QuadratureOptions& opt);

// (1/n) sum_{i=0..n} (the asymptotic-average variant).
ShadowFunctionalResult asymp_avg_functional(const CandidatePath& cand,
                                            const SegmentedOrbit& orbit, long n,
                                            const QuadratureOptions& opt);

// Per-segment integrals over [i_lo, i_hi]; the limit-shadowing verdict needs
// these to tend to zero.
std::vector<SegmentIntegral> limit_shadow_gaps(const CandidatePath& cand,
                                               const SegmentedOrbit& orbit, long i_lo,
                                               long i_hi, const QuadratureOptions& opt);

std::string functional_csv(const ShadowFunctionalResult& r);
std::string segments_csv(const ShadowFunctionalResult& r);

} // namespace lorenz_shadow
