#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "lorenz_shadow/geometry.hpp"
#include "lorenz_shadow/params.hpp"

namespace lorenz_shadow {

// The flow is a hybrid system: a linear cube [-1,1]x[-1,1]x[0,1] around the
// singularity, and two constant-time return tubes carrying the exit faces
// x = +-1 back to the cross-section S = {z=1, |x|<=1/2, |y|<=1/2}.
enum class Region : std::uint8_t { Cube, TubePlus, TubeMinus };

struct HybridState {
    Region region = Region::Cube;
    Vec3 pos;              // ambient position (always valid, used for all metrics)
    Vec3 tube_entry;       // tube states: the exit point on Sigma+- that seeded the leg
    double tube_progress = 0.0; // tube states: fraction of tube_time elapsed, in [0,1]
};

HybridState cube_state(const Vec3& pos);
HybridState tube_state(const ModelParams& p, const Vec3& entry, double progress);

// Classification tags for ambient points (S split by sign of x, the exit faces,
// the stable curtain V, the tube sets U+-).
enum class RegionTag {
    S, SPlus, SMinus, L0, SigmaPlus, SigmaMinus, V, UPlus, UMinus, CubeInterior, Outside
};
const char* to_string(RegionTag t);

// Constant-speed piecewise-linear tube path from an exit face back to z = 1.
// Waypoints: exit -> |x|=3 -> z=3 -> above the landing point -> landing.
struct TubePath {
    std::array<Vec3, 5> waypoints;
    std::array<double, 5> cumulative; // arc length up to each waypoint
    double total_length = 0.0;

    TubePath(const ModelParams& p, const Vec3& entry);
    Vec3 at(double progress) const;    // progress in [0,1], constant speed
    Vec3 landing() const { return waypoints[4]; }
};

// --- one-dimensional dynamics on the leaf space ------------------------------

// f(x) = c+ x^r - 1/2 on (0,1/2],  f(x) = 1/2 - c- |x|^r on [-1/2,0).
double one_d_map(double x, const ModelParams& p); // throws SingularLeaf at x = 0
double one_d_map_derivative(double x, const ModelParams& p);

// P(x,y) = (f(x), g(x,y)) with g(x,y) = kappa |x|^s y.
struct LeafPoint { double x, y; };
LeafPoint poincare(double x, double y, const ModelParams& p);

// Branch inverses, pruned to the valid ranges.
std::optional<double> inverse_right_branch(double w, const ModelParams& p); // image in (0,1/2]
std::optional<double> inverse_left_branch(double w, const ModelParams& p);  // image in [-1/2,0)

// All x with f^i(x) = target for some i <= depth (full preimage tree).
std::vector<double> one_d_preimages(double target, int depth, const ModelParams& p);

// Smallest-depth preimage of 0 inside [lo,hi], nearest to `anchor`; returns
// (x, depth). Works by tracking the monotone branches of f^m over the band.
struct BandPreimage { double x; int depth; };
std::optional<BandPreimage> preimage_of_zero_in_band(double lo, double hi, double anchor,
                                                     int max_depth, const ModelParams& p);

// --- flow and return map ------------------------------------------------------

// Forward semiflow for t >= 0; exact exponentials in the cube, linear clock in
// the tubes, closed-form event times (no ODE stepping).
HybridState flow(double t, const HybridState& state, const ModelParams& p);

// Cube evolution by dt (exact exponentials), no event handling.
Vec3 cube_advance(const Vec3& q, double dt, const ModelParams& p);

// First positive time at which the orbit meets S; throws NeverReturns on the
// stable curtain (x = 0).
double time_to_section(const HybridState& state, const ModelParams& p);

// n-th return to S. Throws NeverReturns if an intermediate return lands on the
// singular leaf and the iteration must continue.
HybridState first_return(const HybridState& state, const ModelParams& p, int n = 1);

RegionTag classify_region(const Vec3& pos, const ModelParams& p);

// Lower bounds on the four separations that the falsifier leans on; each must
// exceed 3*Gamma.
struct SeparationTable {
    struct Row { const char* name; double certified; double sampled_min; };
    std::array<Row, 4> rows; // d(V,Sigma+), d(V,Sigma-), d(Sigma+,U-), d(Sigma-,U+)
    double min_certified() const;
};
SeparationTable region_separations(const ModelParams& p); // throws SeparationViolated

// Certified upper bound on the metric speed of the flow (cube corner speed vs
// longest tube path per tube_time).
double speed_bound(const ModelParams& p);
double cube_speed_bound(const ModelParams& p);
double max_tube_path_length(const ModelParams& p);

// --- cached trajectories -------------------------------------------------------

// Event-indexed forward trajectory of one state: arcs between region changes,
// each advanced in closed form. position(t) costs one binary search.
class Trajectory {
public:
    Trajectory(const HybridState& start, const ModelParams& p);

    Vec3 position(double t) const;       // t >= 0, lazily extends the event list
    HybridState state_at(double t) const;

    // Times in (t0, t1] at which the orbit lands on S, with the landing x.
    struct SectionHit { double t; double x; };
    std::vector<SectionHit> section_hits(double t0, double t1) const;

    // Region-change times in (t0, t1).
    std::vector<double> event_times(double t0, double t1) const;

    void extend_to(double t) const;

private:
    struct Arc {
        double t_start;
        HybridState state;
        std::optional<TubePath> path; // cached for tube arcs
    };
    mutable std::vector<Arc> arcs_;
    mutable std::vector<SectionHit> hits_;
    mutable double horizon_ = 0.0;
    mutable bool absorbed_ = false; // reached the stable curtain: no more events
    ModelParams params_;
    const Arc& arc_for(double t) const;
};

} // namespace lorenz_shadow
