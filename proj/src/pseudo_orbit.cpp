#include "lorenz_shadow/pseudo_orbit.hpp"

#include <algorithm>
#include <cstdlib>
#include <cmath>
#include <sstream>

#include "lorenz_shadow/errors.hpp"
#include "lorenz_shadow/io.hpp"

namespace lorenz_shadow {

namespace {

double round_down_one_sig(double x) {
    const double p10 = std::pow(10.0, std::floor(std::log10(x)));
    return std::floor(x / p10) * p10;
}

// Cumulative check helper for construction invariants.
void require(bool ok, const std::string& what) {
    if (!ok) throw std::logic_error("pseudo-orbit construction invariant failed: " + what);
}

} // namespace

double choose_gamma(const ModelParams& p) {
    const double two_mr = std::pow(2.0, -p.r());
    const double leaf_gap = 1.0;                       // d(L-, L+)
    const double w_plus = 1.0 - p.c_plus * two_mr;     // |L+ - f(L+)|
    const double w_minus = 1.0 - p.c_minus * two_mr;   // |f(L-) - L-|
    const double sep_room = region_separations(p).min_certified() / 3.0;

    std::vector<double> limits{leaf_gap, sep_room};
    switch (p.flow_case) {
        case Case::A: limits.push_back(w_minus); break;          // band of Step 4
        case Case::B: limits.push_back(w_plus); break;           // band of Step 2
        case Case::C: limits.push_back(w_plus); limits.push_back(w_minus); break;
    }
    double m = limits[0];
    for (double v : limits) m = std::min(m, v);
    if (!(m > 1e-12)) throw NoValidGamma("a leaf band is empty; check the branch coefficients");
    return round_down_one_sig(m / 10.0);
}

// --- Leg -----------------------------------------------------------------------

HybridState Leg::at(double u, const ModelParams& p) const {
    if (u < 0.0 || u > duration * (1.0 + 1e-12) + 1e-12)
        throw OutOfDomain("leg time outside [0, duration]");
    auto it = std::upper_bound(arcs.begin(), arcs.end(), u,
                               [](double v, const Arc& a) { return v < a.t0; });
    const Arc& a = *(it - 1);
    return flow(u - a.t0, a.state, p);
}

namespace {

// Chain of n section returns as event-aligned arcs. When the final landing is
// known by construction to lie on the singular leaf, pin its x to 0 exactly:
// double precision cannot carry a ~30-deep expanding itinerary onto the leaf,
// and the descent would otherwise drift off the stable curtain.
struct Chain {
    Leg leg;                 // arcs over [0, duration); duration = total return time
    HybridState end;         // the landing state (possibly pinned)
    std::vector<double> return_times; // cumulative, one per landing
};

Chain make_return_chain(const ModelParams& p, const HybridState& start, int n_returns,
                        bool pin_last_to_singular_leaf) {
    Chain c;
    double tloc = 0.0;
    HybridState st = start;
    for (int i = 0; i < n_returns; ++i) {
        require(st.region == Region::Cube, "chain states must start cube legs on/inside the cube");
        c.leg.arcs.push_back({tloc, st});
        const double ax = std::abs(st.pos.x);
        require(ax > 0.0, "chain hit the singular leaf before its recorded depth");
        const double t_exit = ax >= 1.0 ? 0.0 : std::log(1.0 / ax) / p.lambda1;
        HybridState tube = flow(t_exit, st, p);
        require(tube.region != Region::Cube, "expected a tube entry at |x| = 1");
        c.leg.arcs.push_back({tloc + t_exit, tube});
        tloc += t_exit + p.tube_time;
        st = flow(p.tube_time, tube, p);
        c.return_times.push_back(tloc);
        if (i + 1 == n_returns && pin_last_to_singular_leaf) st.pos.x = 0.0;
    }
    c.leg.duration = tloc;
    c.leg.end_state = st;
    c.end = st;
    return c;
}

// Time for the curtain descent from (0, y0, 1) to reach distance rho from the
// singularity; the distance is strictly decreasing, bisected to ~1e-15.
double solve_descent_time(const ModelParams& p, double y0, double rho) {
    const double d0 = std::hypot(y0, 1.0);
    if (!(rho < d0)) throw BisectionFailed("descent target not below the starting distance");
    auto dist = [&](double u) {
        return std::hypot(y0 * std::exp(p.lambda2 * u), std::exp(p.lambda3 * u));
    };
    double lo = 0.0;
    double hi = std::log(d0 / rho) / (-p.lambda3) + 1.0;
    require(dist(hi) < rho, "descent bracket too short");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (dist(mid) > rho ? lo : hi) = mid;
    }
    const double u = 0.5 * (lo + hi);
    require(std::abs(dist(u) - rho) <= 1e-12, "descent bisection did not meet tolerance");
    return u;
}

struct PlacedPoint { HybridState state; int depth; };

// A section point at exact distance D from the anchor, on a leaf whose forward
// itinerary reaches the singular leaf: the leaf comes from the preimage tree,
// the y-coordinate spends the rest of the distance budget.
PlacedPoint place_section_point(const ModelParams& p, const Vec3& anchor, double D,
                                bool band_left_of_anchor, int max_depth, int block_for_error) {
    double lo = band_left_of_anchor ? anchor.x - D : anchor.x;
    double hi = band_left_of_anchor ? anchor.x : anchor.x + D;
    lo = std::max(lo, -0.5);
    hi = std::min(hi, 0.5);
    const auto bp = preimage_of_zero_in_band(lo, hi, anchor.x, max_depth, p);
    if (!bp) throw BandEmpty(block_for_error);
    const double dx = bp->x - anchor.x;
    require(std::abs(dx) <= D * (1.0 + 1e-12), "selected leaf left the distance budget");
    const double y = anchor.y + std::sqrt(std::max(0.0, D * D - dx * dx));
    require(std::abs(y) <= 0.5, "placed point left the section");
    PlacedPoint out{cube_state({bp->x, y, 1.0}), bp->depth};
    require(std::abs(distance(out.state.pos, anchor) - D) <= 1e-12, "placement distance not exact");
    double w = bp->x;
    for (int d = 0; d < bp->depth; ++d) w = one_d_map(w, p);
    require(std::abs(w) <= 1e-10, "selected leaf does not reach the singular leaf");
    return out;
}

} // namespace

// --- build ------------------------------------------------------------------------

PseudoOrbit PseudoOrbit::build(const ModelParams& p, int K, int max_preimage_depth) {
    p.require_valid();
    if (K < 1) throw ConfigError("K must be >= 1");
    region_separations(p); // throws if any separation fails its 3*Gamma bound

    PseudoOrbit orbit(p);
    orbit.K_ = K;
    const double sqrt2 = std::sqrt(2.0);
    const double f_at_plus = one_d_map(0.5, p);
    const double f_at_minus = one_d_map(-0.5, p);

    for (int j = 0; j <= K + 1; ++j) {
        Block b;
        const double scale = std::ldexp(1.0, -j);      // 2^-j
        const double a = p.gamma * scale / sqrt2;      // distance to sigma on W^u
        const double D = p.gamma * scale;              // anchor distance for odd indices

        // Step 1: x_{4k} on W^{u,-}; its first return lands on L+ independent of j.
        b.x[0] = cube_state({-a, 0.0, 0.0});
        Chain c0 = make_return_chain(p, b.x[0], 1, false);
        b.legs[0] = c0.leg;
        b.t[0] = c0.leg.duration;
        const Vec3 anchor1 = c0.end.pos;
        require(anchor1.x == 0.5 && anchor1.y == 0.0 && anchor1.z == 1.0,
                "W^{u,-} must return exactly to L+");

        // Step 2: x_{4k+1} in S+ at distance Gamma/2^k from pi(x_0), forward
        // itinerary reaching L0. Case A allows the band up against L+; cases
        // B/C must stay above f(L+), which Gamma <= width/10 guarantees.
        PlacedPoint p1 = place_section_point(p, anchor1, D, /*left*/ true, max_preimage_depth, j);
        if (p.flow_case != Case::A)
            require(p1.state.pos.x > f_at_plus, "Step 2 leaf below f(L+)");
        require(p1.state.pos.x > 0.0 && p1.state.pos.x < 0.5, "Step 2 leaf outside S+");
        b.x[1] = p1.state;
        b.aux.depth1 = p1.depth;
        Chain c1 = make_return_chain(p, b.x[1], p1.depth, true);
        b.aux.s1 = c1.leg.duration;
        require(b.aux.s1 > 1.0, "s^1 must exceed 1");
        const double rho1 = a; // same-scale descent target
        b.aux.s1_tilde = solve_descent_time(p, c1.end.pos.y, rho1);
        b.legs[1] = c1.leg;
        b.legs[1].arcs.push_back({b.aux.s1, c1.end});
        b.legs[1].duration = b.aux.s1 + b.aux.s1_tilde;
        b.legs[1].end_state = flow(b.aux.s1_tilde, c1.end, p);
        b.t[1] = b.legs[1].duration;

        // Step 3: x_{4k+2} on W^{u,+}; two returns land on f(L-)'s leaf.
        b.x[2] = cube_state({+a, 0.0, 0.0});
        Chain c2 = make_return_chain(p, b.x[2], 2, false);
        b.legs[2] = c2.leg;
        b.t[2] = c2.leg.duration;
        const Vec3 anchor3 = c2.end.pos;
        require(std::abs(anchor3.x - f_at_minus) <= 1e-9 && anchor3.z == 1.0,
                "pi^2(x_2) must land on the f(L-) leaf");

        // Step 4: x_{4k+3} in S-, ordered per the hypothesis case: below f(L-)
        // when f(L-) > L- (cases A, C), above L- when it is fixed (case B).
        const bool left_band = p.flow_case != Case::B;
        PlacedPoint p3 = place_section_point(p, anchor3, D, left_band, max_preimage_depth, j);
        require(p3.state.pos.x > -0.5 && p3.state.pos.x < 0.0, "Step 4 leaf outside S-");
        if (left_band) require(p3.state.pos.x < anchor3.x, "Step 4 leaf not below f(L-)");
        b.x[3] = p3.state;
        b.aux.depth3 = p3.depth;
        Chain c3 = make_return_chain(p, b.x[3], p3.depth, true);
        b.aux.s3 = c3.leg.duration;
        require(b.aux.s3 > 1.0, "s^3 must exceed 1");

        // The descent for t_{4k+3} targets the *next* block's scale so that the
        // block-junction gap comes out at the next scale exactly.
        const double rho3 = p.gamma * std::ldexp(1.0, -(j + 1)) / sqrt2;
        b.aux.s3_tilde = solve_descent_time(p, c3.end.pos.y, rho3);
        b.legs[3] = c3.leg;
        b.legs[3].arcs.push_back({b.aux.s3, c3.end});
        b.legs[3].duration = b.aux.s3 + b.aux.s3_tilde;
        b.legs[3].end_state = flow(b.aux.s3_tilde, c3.end, p);
        b.t[3] = b.legs[3].duration;

        // Mirrored (negative-side) use of this block follows scale j-1 on its
        // outgoing junction instead.
        if (j >= 1) {
            const double rho3_alt = p.gamma * std::ldexp(1.0, -(j - 1)) / sqrt2;
            const double s3t_alt = solve_descent_time(p, c3.end.pos.y, rho3_alt);
            b.leg3_alt = b.legs[3];
            b.leg3_alt.duration = b.aux.s3 + s3t_alt;
            b.leg3_alt.end_state = flow(s3t_alt, c3.end, p);
            b.aux.t3_alt = b.leg3_alt.duration;
        } else {
            b.leg3_alt = b.legs[3];
            b.aux.t3_alt = b.t[3];
        }

        for (double t : b.t) require(t > 1.0, "every t_n must exceed 1");
        orbit.blocks_.push_back(std::move(b));
    }

    // partial sums over the whole window, anchored at s_0 = 0
    const long lo = orbit.n_min(), hi = orbit.n_max();
    orbit.s_.assign(std::size_t(hi - lo + 1), 0.0);
    for (long n = 0; n < hi; ++n)
        orbit.s_[orbit.idx(n + 1)] = orbit.s_[orbit.idx(n)] + orbit.seg_time(n);
    for (long n = -1; n >= lo; --n)
        orbit.s_[orbit.idx(n)] = orbit.s_[orbit.idx(n + 1)] - orbit.seg_time(n);
    return orbit;
}

// --- accessors ----------------------------------------------------------------------

const Leg& PseudoOrbit::leg(long n) const {
    const long k = floor_div(n, 4);
    const long i = n - 4 * k;
    if (k >= 0) return blocks_.at(std::size_t(k)).legs[std::size_t(i)];
    const auto& b = blocks_.at(std::size_t(-k));
    return i == 3 ? b.leg3_alt : b.legs[std::size_t(i)];
}

double PseudoOrbit::seg_time(long n) const { return leg(n).duration; }

double PseudoOrbit::seg_start(long n) const {
    if (n < n_min() || n > n_max()) throw HorizonExceeded();
    return s_[idx(n)];
}

HybridState PseudoOrbit::point(long n) const {
    const long k = floor_div(n, 4);
    const long i = n - 4 * k;
    const auto& b = blocks_.at(std::size_t(k >= 0 ? k : -k));
    return b.x[std::size_t(i)];
}

Vec3 PseudoOrbit::segment_position(long n, double u) const { return leg(n).at(u, params_).pos; }

std::vector<double> PseudoOrbit::segment_events(long n) const {
    std::vector<double> out;
    for (const auto& a : leg(n).arcs)
        if (a.t0 > 0.0) out.push_back(a.t0);
    return out;
}

double PseudoOrbit::gap(long m) const {
    if (m < gap_min() || m > gap_max()) throw HorizonExceeded();
    return distance(leg(m).end_state.pos, point(m + 1).pos);
}

double PseudoOrbit::gap_target(long m) const {
    return params_.gamma * std::ldexp(1.0, -int(std::labs(gap_scale_index(m))));
}

HybridState PseudoOrbit::pseudo_state_at(double t) const {
    if (t < 0.0) throw OutOfDomain("pseudo-orbit time must be >= 0");
    if (t >= seg_start(seg_max() + 1)) throw HorizonExceeded();
    long lo = 0, hi = seg_max();
    while (lo < hi) { // find n with s_n <= t < s_{n+1}
        const long mid = (lo + hi + 1) / 2;
        if (seg_start(mid) <= t) lo = mid; else hi = mid - 1;
    }
    return leg(lo).at(t - seg_start(lo), params_);
}

// --- class verification ----------------------------------------------------------------

bool ClassReport::classes_certified() const {
    if (!limit_ok || !cesaro_12gamma_ok) return false;
    for (const auto& c : delta_certs)
        if (c.n_measured <= 0) return false;
    return true;
}

ClassReport PseudoOrbit::verify_classes(long n_max, const std::vector<double>& deltas,
                                        double tol) const {
    ClassReport rep;
    const double g = params_.gamma;

    std::vector<double> A;
    const long m_lo = gap_min(), m_hi = gap_max();
    A.reserve(std::size_t(m_hi - m_lo + 1));
    for (long m = m_lo; m <= m_hi; ++m) A.push_back(gap(m));
    auto gapv = [&](long m) { return A[std::size_t(m - m_lo)]; };

    // limit class: A_m <= Gamma / 2^(floor(|m|/4) - 1)
    rep.limit_ok = true;
    for (long m = m_lo; m <= m_hi; ++m) {
        const double bound = g * std::ldexp(1.0, 1 - int(std::labs(m) / 4));
        const double ratio = gapv(m) / bound;
        rep.limit_worst_ratio = std::max(rep.limit_worst_ratio, ratio);
        if (ratio > 1.0 + tol) {
            rep.limit_ok = false;
            throw ClassViolated("limit decay", m);
        }
    }

    // asymptotic average: track S_n = sum_{|i| <= n} A_i
    if (n_max > std::min(-m_lo, m_hi)) n_max = std::min(-m_lo, m_hi);
    double sum = gapv(0);
    rep.max_two_sided_sum = sum;
    for (long n = 1; n <= n_max; ++n) {
        sum += gapv(n) + gapv(-n);
        rep.max_two_sided_sum = std::max(rep.max_two_sided_sum, sum);
    }
    rep.cesaro_8gamma_ok = rep.max_two_sided_sum <= 8.0 * g * (1.0 + tol);
    rep.cesaro_12gamma_ok = rep.max_two_sided_sum <= 12.0 * g * (1.0 + tol);
    if (!rep.cesaro_12gamma_ok) throw ClassViolated("two-sided sum above 12*Gamma", n_max);

    // delta-average: smallest N with every window average of length >= N below delta
    const long total = long(A.size());
    for (double delta : deltas) {
        ClassReport::DeltaCert cert;
        cert.delta = delta;
        cert.bound_8gamma = 8.0 * g / delta;
        cert.bound_12gamma = 12.0 * g / delta;
        long worst = 0;
        for (long len = 1; len <= total; ++len) {
            double run = 0.0;
            for (long i = 0; i < len; ++i) run += A[std::size_t(i)];
            double best = run;
            for (long i = len; i < total; ++i) {
                run += A[std::size_t(i)] - A[std::size_t(i - len)];
                best = std::max(best, run);
            }
            if (best / double(len) >= delta) worst = len;
        }
        const bool tail_ok = worst < total; // longer windows only dilute further
        cert.n_measured = tail_ok ? worst + 1 : 0;
        cert.ok_8gamma = tail_ok && double(cert.n_measured) <= cert.bound_8gamma;
        cert.ok_12gamma = tail_ok && double(cert.n_measured) <= cert.bound_12gamma;
        rep.delta_certs.push_back(cert);
    }
    return rep;
}

// --- export -------------------------------------------------------------------------------

std::string PseudoOrbit::gaps_csv() const {
    std::ostringstream out;
    out << "m,k,i,A_m,Gamma_over_2k,abs_err\n";
    for (long m = gap_min(); m <= gap_max(); ++m) {
        const double a = gap(m), tgt = gap_target(m);
        out << m << "," << gap_scale_index(m) << "," << (m - 4 * floor_div(m, 4)) << ","
            << format_double(a) << "," << format_double(tgt) << ","
            << format_double(std::abs(a - tgt)) << "\n";
    }
    return out.str();
}

std::string PseudoOrbit::orbit_csv() const {
    std::ostringstream out;
    out << "n,region,x,y,z,t_n,s_n\n";
    for (long n = n_min(); n <= n_max(); ++n) {
        const Vec3 q = point(n).pos;
        out << n << "," << to_string(classify_region(q, params_)) << "," << format_double(q.x)
            << "," << format_double(q.y) << "," << format_double(q.z) << ","
            << format_double(seg_time(n)) << "," << format_double(seg_start(n)) << "\n";
    }
    return out.str();
}

std::string PseudoOrbit::gaps_plot() const {
    std::ostringstream out;
    for (long m = gap_min(); m <= gap_max(); ++m)
        out << m << " " << format_double(gap(m)) << "\n";
    return out.str();
}

// --- true-orbit control ----------------------------------------------------------------------

TrueOrbitSegments TrueOrbitSegments::build(const ModelParams& p, const HybridState& start,
                                           long n_segments) {
    TrueOrbitSegments o(p);
    HybridState st = start;
    double s = 0.0;
    o.s_.push_back(0.0);
    for (long n = 0; n < n_segments; ++n) {
        Chain c = make_return_chain(p, st, 1, false);
        st = c.end;
        s += c.leg.duration;
        o.legs_.push_back(std::move(c.leg));
        o.s_.push_back(s);
        if (st.pos.x == 0.0) throw OutOfDomain("control orbit hit the singular leaf");
    }
    return o;
}

HybridState TrueOrbitSegments::pick_generic_start(const ModelParams& p, long n_segments) {
    for (double x0 : {0.34, 0.37, 0.41, 0.29, 0.43, 0.23, 0.31, 0.47}) {
        double x = x0;
        double min_ax = std::abs(x);
        bool ok = true;
        for (long i = 0; i < n_segments + 2; ++i) {
            x = one_d_map(x, p);
            min_ax = std::min(min_ax, std::abs(x));
            if (min_ax < 1e-4) { ok = false; break; }
        }
        if (ok) return cube_state({x0, 0.11, 1.0});
    }
    throw OutOfDomain("no generic control start found");
}

std::vector<double> TrueOrbitSegments::segment_events(long n) const {
    std::vector<double> out;
    for (const auto& a : legs_[std::size_t(n)].arcs)
        if (a.t0 > 0.0) out.push_back(a.t0);
    return out;
}

double TrueOrbitSegments::gap(long m) const {
    const HybridState& end = legs_[std::size_t(m)].end_state;
    const HybridState next = m + 1 <= seg_max() ? point(m + 1) : end;
    return distance(end.pos, next.pos);
}

} // namespace lorenz_shadow
