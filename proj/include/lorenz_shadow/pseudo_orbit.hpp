#pragma once

#include <string>
#include <vector>

#include "lorenz_shadow/model.hpp"

namespace lorenz_shadow {

// Gamma = (smallest leaf-band / separation headroom) / 10, rounded down to one
// significant digit. Throws NoValidGamma when a band is empty.
double choose_gamma(const ModelParams& p);

// Common shape consumed by the shadowing functionals: an indexed family of
// flow segments (x_i, t_i) with partial sums s_i, evaluable inside a segment.
class SegmentedOrbit {
public:
    virtual ~SegmentedOrbit() = default;
    virtual long seg_min() const = 0;
    virtual long seg_max() const = 0;           // last index with a leg built
    virtual double seg_time(long n) const = 0;  // t_n
    virtual double seg_start(long n) const = 0; // s_n (s_0 = 0)
    virtual HybridState point(long n) const = 0;
    virtual Vec3 segment_position(long n, double u) const = 0; // phi(u, x_n), u in [0, t_n]
    virtual std::vector<double> segment_events(long n) const = 0; // leg-local region changes
    const ModelParams& params() const { return params_; }

protected:
    explicit SegmentedOrbit(const ModelParams& p) : params_(p) {}
    ModelParams params_;
};

// One flow segment stored as closed-form arcs between region changes; the
// junctions demanded to lie on the singular leaf are pinned there exactly.
struct Leg {
    struct Arc { double t0; HybridState state; };
    std::vector<Arc> arcs;
    double duration = 0.0;
    HybridState end_state; // the exact event-stepped endpoint at t = duration
    HybridState at(double u, const ModelParams& p) const;
};

struct ClassReport {
    // limit-pseudo orbit: A_m <= Gamma / 2^(floor(|m|/4) - 1)
    bool limit_ok = false;
    double limit_worst_ratio = 0.0; // max A_m / bound_m

    // asymptotic average: S_n = sum_{|i|<=n} A_i; paper-chain constant 8*Gamma
    // does not hold for this construction (tight constant is 12*Gamma).
    double max_two_sided_sum = 0.0; // max over n <= n_max of S_n
    bool cesaro_8gamma_ok = false;  // S_n <= 8*Gamma for all n <= n_max (paper chain)
    bool cesaro_12gamma_ok = false; // S_n <= 12*Gamma for all n <= n_max (tight)

    // delta-average: smallest N with every window average of length >= N below delta
    struct DeltaCert {
        double delta = 0.0;
        long n_measured = 0;     // 0 when not certifiable within the horizon
        double bound_8gamma = 0.0;
        double bound_12gamma = 0.0;
        bool ok_8gamma = false;
        bool ok_12gamma = false;
    };
    std::vector<DeltaCert> delta_certs;

    bool classes_certified() const; // the three memberships at the tight constants
};

// The paper's explicit pseudo-orbit: blocks k in [-K-1, K], four indices per
// block, the negative side mirroring positive blocks of the same scale.
class PseudoOrbit : public SegmentedOrbit {
public:
    static PseudoOrbit build(const ModelParams& p, int K, int max_preimage_depth = 40);

    int K() const { return K_; }
    long n_min() const { return -4L * K_ - 4; }     // first point index
    long n_max() const { return 4L * (K_ + 1); }    // last point index
    long gap_min() const { return n_min(); }
    long gap_max() const { return 4L * K_ + 3; }

    long seg_min() const override { return 0; }
    long seg_max() const override { return 4L * K_ + 3; }
    double seg_time(long n) const override;
    double seg_start(long n) const override;
    HybridState point(long n) const override;
    Vec3 segment_position(long n, double u) const override;
    std::vector<double> segment_events(long n) const override;

    // A_m = d(phi(t_m, x_m), x_{m+1}); must match gap_target(m) to ~1e-12.
    double gap(long m) const;
    double gap_target(long m) const; // Gamma / 2^{|floor((m+1)/4)|}
    static long gap_scale_index(long m) { return floor_div(m + 1, 4); }

    HybridState pseudo_state_at(double t) const; // t in [0, s(seg_max()+1))

    ClassReport verify_classes(long n_max, const std::vector<double>& deltas, double tol) const;

    // aux per-block records
    struct BlockAux {
        double s1, s1_tilde, s3, s3_tilde, t3_alt;
        int depth1, depth3;
    };
    const BlockAux& aux(int scale) const { return blocks_[scale].aux; }

    std::string gaps_csv() const;
    std::string orbit_csv() const;
    std::string gaps_plot() const; // two-column whitespace: m A_m

    static long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

private:
    explicit PseudoOrbit(const ModelParams& p) : SegmentedOrbit(p) {}

    struct Block {
        std::array<HybridState, 4> x;
        std::array<double, 4> t;
        std::array<Leg, 4> legs;
        Leg leg3_alt;   // descent re-solved for the mirrored (negative) side
        BlockAux aux{};
    };
    std::vector<Block> blocks_; // scales 0 .. K+1
    int K_ = 0;
    std::vector<double> s_; // partial sums over [n_min(), n_max()+1], s_[idx(0)] = 0

    const Leg& leg(long n) const;
    long idx(long n) const { return n - n_min(); }
};

// A genuine orbit cut at its section returns: the zero-gap control pseudo-orbit
// for the self-shadowing experiment.
class TrueOrbitSegments : public SegmentedOrbit {
public:
    static TrueOrbitSegments build(const ModelParams& p, const HybridState& start, long n_segments);
    // Picks a section start whose first n+2 returns stay clear of the singular leaf.
    static HybridState pick_generic_start(const ModelParams& p, long n_segments);

    long seg_min() const override { return 0; }
    long seg_max() const override { return long(legs_.size()) - 1; }
    double seg_time(long n) const override { return legs_[n].duration; }
    double seg_start(long n) const override { return s_[n]; }
    HybridState point(long n) const override { return legs_[n].arcs.front().state; }
    Vec3 segment_position(long n, double u) const override { return legs_[n].at(u, params_).pos; }
    std::vector<double> segment_events(long n) const override;

    double gap(long m) const; // 0 by construction
    HybridState start() const { return legs_.front().arcs.front().state; }

private:
    explicit TrueOrbitSegments(const ModelParams& p) : SegmentedOrbit(p) {}
    std::vector<Leg> legs_;
    std::vector<double> s_;
};

} // namespace lorenz_shadow
