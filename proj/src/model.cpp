#include "lorenz_shadow/model.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "lorenz_shadow/errors.hpp"

namespace lorenz_shadow {

namespace {
constexpr double kBoundaryTol = 1e-12;
}

HybridState cube_state(const Vec3& pos) {
    if (std::abs(pos.x) > 1.0 + kBoundaryTol || std::abs(pos.y) > 1.0 + kBoundaryTol ||
        pos.z < -kBoundaryTol || pos.z > 1.0 + kBoundaryTol) {
        throw OutOfDomain("cube state outside [-1,1]x[-1,1]x[0,1]");
    }
    HybridState s;
    s.region = Region::Cube;
    s.pos = pos;
    return s;
}

HybridState tube_state(const ModelParams& p, const Vec3& entry, double progress) {
    if (std::abs(std::abs(entry.x) - 1.0) > kBoundaryTol || progress < 0.0 || progress > 1.0) {
        throw OutOfDomain("tube state needs |entry.x| = 1 and progress in [0,1]");
    }
    HybridState s;
    s.region = entry.x > 0.0 ? Region::TubePlus : Region::TubeMinus;
    s.tube_entry = entry;
    s.tube_progress = progress;
    s.pos = TubePath(p, entry).at(progress);
    return s;
}

// --- tube geometry ---------------------------------------------------------------

TubePath::TubePath(const ModelParams& p, const Vec3& entry) {
    const double sigma = entry.x > 0.0 ? 1.0 : -1.0;
    const double c = sigma > 0.0 ? p.c_plus : p.c_minus;
    const double x_land = sigma * (c * entry.z - 0.5);
    const double y_land = p.kappa * entry.y;
    waypoints = {entry,
                 Vec3{sigma * 3.0, entry.y, entry.z},
                 Vec3{sigma * 3.0, entry.y, 3.0},
                 Vec3{x_land, y_land, 3.0},
                 Vec3{x_land, y_land, 1.0}};
    cumulative[0] = 0.0;
    for (int i = 1; i < 5; ++i)
        cumulative[i] = cumulative[i - 1] + distance(waypoints[i - 1], waypoints[i]);
    total_length = cumulative[4];
}

Vec3 TubePath::at(double progress) const {
    if (progress <= 0.0) return waypoints[0];
    if (progress >= 1.0) return waypoints[4];
    const double s = progress * total_length;
    int leg = 0;
    while (leg < 3 && s > cumulative[leg + 1]) ++leg;
    const double len = cumulative[leg + 1] - cumulative[leg];
    const double f = len > 0.0 ? (s - cumulative[leg]) / len : 0.0;
    return lerp(waypoints[leg], waypoints[leg + 1], f);
}

// --- one-dimensional dynamics ------------------------------------------------------

double one_d_map(double x, const ModelParams& p) {
    if (x == 0.0) throw SingularLeaf();
    if (x > 0.0) return p.c_plus * std::pow(x, p.r()) - 0.5;
    return 0.5 - p.c_minus * std::pow(-x, p.r());
}

double one_d_map_derivative(double x, const ModelParams& p) {
    if (x == 0.0) throw SingularLeaf();
    const double c = x > 0.0 ? p.c_plus : p.c_minus;
    return c * p.r() * std::pow(std::abs(x), p.r() - 1.0);
}

LeafPoint poincare(double x, double y, const ModelParams& p) {
    if (x == 0.0) throw SingularLeaf();
    return {one_d_map(x, p), p.kappa * std::pow(std::abs(x), p.s_exp()) * y};
}

std::optional<double> inverse_right_branch(double w, const ModelParams& p) {
    const double u = (w + 0.5) / p.c_plus;
    if (u <= 0.0) return std::nullopt;
    const double x = std::pow(u, 1.0 / p.r());
    if (x > 0.5) return std::nullopt;
    return x;
}

std::optional<double> inverse_left_branch(double w, const ModelParams& p) {
    const double u = (0.5 - w) / p.c_minus;
    if (u <= 0.0) return std::nullopt;
    const double x = -std::pow(u, 1.0 / p.r());
    if (x < -0.5) return std::nullopt;
    return x;
}

std::vector<double> one_d_preimages(double target, int depth, const ModelParams& p) {
    std::vector<double> all;
    std::vector<double> frontier{target};
    for (int d = 0; d < depth; ++d) {
        std::vector<double> next;
        next.reserve(frontier.size() * 2);
        for (double w : frontier) {
            if (auto xr = inverse_right_branch(w, p)) next.push_back(*xr);
            if (auto xl = inverse_left_branch(w, p)) next.push_back(*xl);
        }
        all.insert(all.end(), next.begin(), next.end());
        frontier = std::move(next);
        if (frontier.empty()) break;
    }
    return all;
}

std::optional<BandPreimage> preimage_of_zero_in_band(double lo, double hi, double anchor,
                                                     int max_depth, const ModelParams& p) {
    if (!(lo < hi) || lo < -0.5 || hi > 0.5 || (lo <= 0.0 && 0.0 <= hi)) return std::nullopt;

    auto iterate = [&](double x, int m) {
        for (int j = 0; j < m; ++j) x = one_d_map(x, p);
        return x;
    };

    // The band never contains a branch point before the first root appears, so
    // f^m is monotone on it; its image expands by >= lambda_exp per depth until
    // it covers 0, at which point one bisection pins the preimage.
    for (int m = 1; m <= max_depth; ++m) {
        const double va = iterate(lo, m);
        const double vb = iterate(hi, m);
        if (std::min(va, vb) <= 0.0 && 0.0 <= std::max(va, vb)) {
            double a = lo, b = hi, fa = va;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (a + b);
                if (mid == a || mid == b) break;
                const double fm = iterate(mid, m);
                if ((fa <= 0.0) == (fm <= 0.0)) { a = mid; fa = fm; } else { b = mid; }
            }
            // Pick whichever bracket end iterates closest to 0.
            double x = std::abs(iterate(a, m)) <= std::abs(iterate(b, m)) ? a : b;
            (void)anchor; // single monotone piece: at most one root at this depth
            return BandPreimage{x, m};
        }
    }
    return std::nullopt;
}

// --- flow ---------------------------------------------------------------------------

Vec3 cube_advance(const Vec3& q, double dt, const ModelParams& p) {
    return {q.x * std::exp(p.lambda1 * dt), q.y * std::exp(p.lambda2 * dt),
            q.z * std::exp(p.lambda3 * dt)};
}

namespace {

// Time for a cube state to reach |x| = 1; infinite on the curtain x = 0.
double cube_exit_time(const Vec3& q, const ModelParams& p) {
    const double ax = std::abs(q.x);
    if (ax == 0.0) return std::numeric_limits<double>::infinity();
    if (ax >= 1.0) return 0.0;
    return std::log(1.0 / ax) / p.lambda1;
}

HybridState enter_tube(const Vec3& q, double t_exit, const ModelParams& p) {
    const double sigma = q.x > 0.0 ? 1.0 : -1.0;
    const Vec3 entry{sigma, q.y * std::exp(p.lambda2 * t_exit), q.z * std::exp(p.lambda3 * t_exit)};
    HybridState s;
    s.region = sigma > 0.0 ? Region::TubePlus : Region::TubeMinus;
    s.tube_entry = entry;
    s.tube_progress = 0.0;
    s.pos = entry;
    return s;
}

HybridState land_from_tube(const HybridState& tube, const ModelParams& p) {
    const Vec3 land = TubePath(p, tube.tube_entry).landing();
    if (std::abs(land.x) > 1.0 + kBoundaryTol)
        throw OutOfDomain("tube landed outside the cube top face (state was not in the trapping set)");
    HybridState s;
    s.region = Region::Cube;
    s.pos = land; // z = 1 exactly by construction
    return s;
}

bool on_section(const Vec3& q) {
    // landings on the boundary leaves can sit an ulp past +-1/2
    return q.z == 1.0 && std::abs(q.x) <= 0.5 + 1e-11 && std::abs(q.y) <= 0.5 + 1e-11;
}

} // namespace

HybridState flow(double t, const HybridState& state, const ModelParams& p) {
    if (t < 0.0) throw OutOfDomain("forward semiflow requires t >= 0");
    HybridState st = state;
    double rem = t;
    while (true) {
        if (st.region == Region::Cube) {
            const double t_exit = cube_exit_time(st.pos, p);
            if (rem < t_exit) {
                st.pos = cube_advance(st.pos, rem, p);
                return st;
            }
            st = enter_tube(st.pos, t_exit, p);
            rem -= t_exit;
        } else {
            const double t_left = (1.0 - st.tube_progress) * p.tube_time;
            if (rem < t_left) {
                st.tube_progress += rem / p.tube_time;
                st.pos = TubePath(p, st.tube_entry).at(st.tube_progress);
                return st;
            }
            st = land_from_tube(st, p);
            rem -= t_left;
        }
    }
}

double time_to_section(const HybridState& state, const ModelParams& p) {
    HybridState st = state;
    double tau = 0.0;
    for (int leg = 0; leg < 100; ++leg) {
        if (st.region == Region::Cube) {
            const double t_exit = cube_exit_time(st.pos, p);
            if (!std::isfinite(t_exit)) throw NeverReturns();
            tau += t_exit;
            st = enter_tube(st.pos, t_exit, p);
        } else {
            tau += (1.0 - st.tube_progress) * p.tube_time;
            st = land_from_tube(st, p);
            if (on_section(st.pos)) return tau;
        }
    }
    throw OutOfDomain("no section hit within 100 legs");
}

HybridState first_return(const HybridState& state, const ModelParams& p, int n) {
    // Step through the events so that landings carry exact coordinates.
    HybridState st = state;
    for (int i = 0; i < n; ++i) {
        if (i > 0 && st.region == Region::Cube && st.pos.x == 0.0) throw NeverReturns();
        for (int leg = 0;; ++leg) {
            if (leg >= 100) throw OutOfDomain("no section hit within 100 legs");
            if (st.region == Region::Cube) {
                const double t_exit = cube_exit_time(st.pos, p);
                if (!std::isfinite(t_exit)) throw NeverReturns();
                st = enter_tube(st.pos, t_exit, p);
            } else {
                st = land_from_tube(st, p);
                if (on_section(st.pos)) break;
            }
        }
    }
    return st;
}

// --- region classification ------------------------------------------------------------

const char* to_string(Case c) {
    switch (c) {
        case Case::A: return "A";
        case Case::B: return "B";
        case Case::C: return "C";
    }
    return "?";
}

Case case_from_string(const std::string& s) {
    if (s == "A" || s == "a") return Case::A;
    if (s == "B" || s == "b") return Case::B;
    if (s == "C" || s == "c") return Case::C;
    throw ConfigError("unknown case '" + s + "' (expected A, B or C)");
}

const char* to_string(RegionTag t) {
    switch (t) {
        case RegionTag::S: return "S";
        case RegionTag::SPlus: return "S+";
        case RegionTag::SMinus: return "S-";
        case RegionTag::L0: return "L0";
        case RegionTag::SigmaPlus: return "Sigma+";
        case RegionTag::SigmaMinus: return "Sigma-";
        case RegionTag::V: return "V";
        case RegionTag::UPlus: return "U+";
        case RegionTag::UMinus: return "U-";
        case RegionTag::CubeInterior: return "cube";
        case RegionTag::Outside: return "outside";
    }
    return "?";
}

namespace {

// The entry face of a tube, as cut out by the trapping set:
// z in [0, (1/2)^r], |y| <= (1/2) z^(s/r).
bool in_entry_box(double y, double z, const ModelParams& p, double tol) {
    if (z < -tol || z > p.tube_entry_z_cap() + tol) return false;
    return std::abs(y) <= 0.5 * std::pow(std::max(z, 0.0), p.s_exp() / p.r()) + tol;
}

bool on_tube(double sigma, const Vec3& q, const ModelParams& p) {
    const double tol = 1e-9;
    const double c = sigma > 0.0 ? p.c_plus : p.c_minus;
    const double zcap = p.tube_entry_z_cap();
    const double ycap = 0.5 * std::pow(zcap, p.s_exp() / p.r());
    const double land_lo = sigma > 0.0 ? -0.5 : 0.5 - c * zcap;
    const double land_hi = sigma > 0.0 ? c * zcap - 0.5 : 0.5;
    // leg 1: outward at the entry height
    if (sigma * q.x >= 1.0 - tol && sigma * q.x <= 3.0 + tol && in_entry_box(q.y, q.z, p, tol))
        return true;
    // leg 2: rise at |x| = 3
    if (std::abs(q.x - sigma * 3.0) <= tol && q.z >= -tol && q.z <= 3.0 + tol &&
        std::abs(q.y) <= ycap + tol)
        return true;
    // leg 3: crossing at z = 3 toward the landing column
    if (std::abs(q.z - 3.0) <= tol && std::abs(q.y) <= ycap + tol &&
        q.x >= std::min(land_lo, sigma * 3.0) - tol && q.x <= std::max(land_hi, sigma * 3.0) + tol)
        return true;
    // leg 4: descent onto S
    if (q.z >= 1.0 - tol && q.z <= 3.0 + tol && std::abs(q.y) <= p.kappa * ycap + tol &&
        q.x >= land_lo - tol && q.x <= land_hi + tol)
        return true;
    return false;
}

} // namespace

RegionTag classify_region(const Vec3& q, const ModelParams& p) {
    const double tol = 1e-12;
    const bool in_cube_box =
        std::abs(q.x) <= 1.0 + tol && std::abs(q.y) <= 1.0 + tol && q.z >= -tol && q.z <= 1.0 + tol;
    if (in_cube_box) {
        if (std::abs(std::abs(q.x) - 1.0) <= tol)
            return q.x > 0.0 ? RegionTag::SigmaPlus : RegionTag::SigmaMinus;
        if (std::abs(q.z - 1.0) <= tol && std::abs(q.x) <= 0.5 && std::abs(q.y) <= 0.5) {
            if (q.x == 0.0) return RegionTag::L0;
            return q.x > 0.0 ? RegionTag::SPlus : RegionTag::SMinus;
        }
        if (q.x == 0.0 &&
            std::abs(q.y) <= 0.5 * std::pow(std::max(q.z, 0.0), p.s_exp() / p.r()) + tol)
            return RegionTag::V;
        return RegionTag::CubeInterior;
    }
    if (on_tube(+1.0, q, p)) return RegionTag::UPlus;
    if (on_tube(-1.0, q, p)) return RegionTag::UMinus;
    return RegionTag::Outside;
}

// --- separations and speed --------------------------------------------------------------

double SeparationTable::min_certified() const {
    double m = rows[0].certified;
    for (const auto& r : rows) m = std::min(m, r.certified);
    return m;
}

namespace {

std::vector<Vec3> sample_tube_points(double sigma, const ModelParams& p, int n_entries, int n_along) {
    std::vector<Vec3> pts;
    const double zcap = p.tube_entry_z_cap();
    for (int i = 0; i <= n_entries; ++i) {
        const double z = zcap * i / n_entries;
        const double ycap = 0.5 * std::pow(z, p.s_exp() / p.r());
        for (int j = -2; j <= 2; ++j) {
            TubePath path(p, Vec3{sigma, ycap * j / 2.0, z});
            for (int a = 0; a <= n_along; ++a) pts.push_back(path.at(double(a) / n_along));
        }
    }
    return pts;
}

std::vector<Vec3> sample_face(double sigma, int n) {
    std::vector<Vec3> pts;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            pts.push_back(Vec3{sigma, -1.0 + 2.0 * i / n, double(j) / n});
    return pts;
}

double sampled_min_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& u : a)
        for (const auto& v : b) best = std::min(best, distance(u, v));
    return best;
}

} // namespace

SeparationTable region_separations(const ModelParams& p) {
    // Certified bounds come from the x-coordinate gaps alone: V lies in {x=0}
    // and the exit faces at |x|=1; the tube carried away from a face never
    // crosses x = +-1/2 on the far side (the landing coordinate is extremal at
    // entry z = 0, where it equals +-1/2).
    SeparationTable t;
    t.rows[0] = {"d(V,Sigma+)", 1.0, 0.0};
    t.rows[1] = {"d(V,Sigma-)", 1.0, 0.0};
    t.rows[2] = {"d(Sigma+,U-)", 0.5, 0.0};
    t.rows[3] = {"d(Sigma-,U+)", 0.5, 0.0};

    std::vector<Vec3> v_pts;
    for (int i = 0; i <= 60; ++i) {
        const double z = double(i) / 60.0;
        const double ycap = 0.5 * std::pow(z, p.s_exp() / p.r());
        for (int j = -3; j <= 3; ++j) v_pts.push_back(Vec3{0.0, ycap * j / 3.0, z});
    }
    const auto sig_plus = sample_face(+1.0, 24);
    const auto sig_minus = sample_face(-1.0, 24);
    const auto u_plus = sample_tube_points(+1.0, p, 12, 40);
    const auto u_minus = sample_tube_points(-1.0, p, 12, 40);
    t.rows[0].sampled_min = sampled_min_distance(v_pts, sig_plus);
    t.rows[1].sampled_min = sampled_min_distance(v_pts, sig_minus);
    t.rows[2].sampled_min = sampled_min_distance(sig_plus, u_minus);
    t.rows[3].sampled_min = sampled_min_distance(sig_minus, u_plus);

    std::string bad;
    for (const auto& row : t.rows) {
        if (!(row.certified > 3.0 * p.gamma) || row.sampled_min < row.certified - 1e-9)
            bad += std::string(bad.empty() ? "" : ", ") + row.name;
    }
    if (!bad.empty()) throw SeparationViolated(bad);
    return t;
}

double cube_speed_bound(const ModelParams& p) {
    return std::sqrt(p.lambda1 * p.lambda1 + p.lambda2 * p.lambda2 + p.lambda3 * p.lambda3);
}

double max_tube_path_length(const ModelParams& p) {
    // Length shrinks as the entry rises (shorter climb, shorter crossing), so a
    // grid max plus a Lipschitz margin in the entry coordinates certifies it.
    double best = 0.0;
    const double zcap = p.tube_entry_z_cap();
    const int nz = 200, ny = 8;
    for (double sigma : {-1.0, 1.0}) {
        for (int i = 0; i <= nz; ++i) {
            const double z = zcap * i / nz;
            const double ycap = 0.5 * std::pow(z, p.s_exp() / p.r());
            for (int j = -ny; j <= ny; ++j) {
                TubePath path(p, Vec3{sigma, ycap * j / ny, z});
                best = std::max(best, path.total_length);
            }
        }
    }
    // |d len / d z_e| <= 1 + c (climb plus landing shift), |d len / d y_e| <= 1 - kappa
    const double lip_z = 1.0 + std::max(p.c_plus, p.c_minus);
    const double lip_y = 1.0 - p.kappa;
    const double ycap_max = 0.5 * std::pow(zcap, p.s_exp() / p.r());
    return best + 0.5 * (lip_z * zcap / nz + lip_y * ycap_max / ny);
}

double speed_bound(const ModelParams& p) {
    return std::max(cube_speed_bound(p), max_tube_path_length(p) / p.tube_time);
}

// --- trajectories ---------------------------------------------------------------------

Trajectory::Trajectory(const HybridState& start, const ModelParams& p) : params_(p) {
    std::optional<TubePath> path;
    if (start.region != Region::Cube) path.emplace(p, start.tube_entry);
    arcs_.push_back({0.0, start, std::move(path)});
    horizon_ = 0.0;
    absorbed_ = start.region == Region::Cube && start.pos.x == 0.0;
    if (absorbed_) horizon_ = std::numeric_limits<double>::infinity();
}

void Trajectory::extend_to(double t) const {
    while (horizon_ < t && !absorbed_) {
        const Arc last = arcs_.back();
        if (last.state.region == Region::Cube) {
            const double t_exit = cube_exit_time(last.state.pos, params_);
            if (!std::isfinite(t_exit)) {
                absorbed_ = true;
                horizon_ = std::numeric_limits<double>::infinity();
                return;
            }
            HybridState tube = enter_tube(last.state.pos, t_exit, params_);
            TubePath path(params_, tube.tube_entry);
            arcs_.push_back({last.t_start + t_exit, tube, std::move(path)});
            horizon_ = arcs_.back().t_start;
        } else {
            const double t_left = (1.0 - last.state.tube_progress) * params_.tube_time;
            HybridState landed = land_from_tube(last.state, params_);
            const double t_land = last.t_start + t_left;
            arcs_.push_back({t_land, landed, std::nullopt});
            if (on_section(landed.pos)) hits_.push_back({t_land, landed.pos.x});
            if (landed.pos.x == 0.0) {
                absorbed_ = true;
                horizon_ = std::numeric_limits<double>::infinity();
                return;
            }
            horizon_ = t_land;
        }
    }
}

const Trajectory::Arc& Trajectory::arc_for(double t) const {
    if (t < 0.0) throw OutOfDomain("trajectory time must be >= 0");
    extend_to(t);
    auto it = std::upper_bound(arcs_.begin(), arcs_.end(), t,
                               [](double v, const Arc& a) { return v < a.t_start; });
    return *(it - 1);
}

Vec3 Trajectory::position(double t) const {
    const Arc& a = arc_for(t);
    const double dt = t - a.t_start;
    if (a.state.region == Region::Cube) return cube_advance(a.state.pos, dt, params_);
    const double prog = a.state.tube_progress + dt / params_.tube_time;
    return a.path->at(prog);
}

HybridState Trajectory::state_at(double t) const {
    const Arc& a = arc_for(t);
    return flow(t - a.t_start, a.state, params_);
}

std::vector<double> Trajectory::event_times(double t0, double t1) const {
    extend_to(t1);
    std::vector<double> out;
    for (const auto& a : arcs_)
        if (a.t_start > t0 && a.t_start < t1) out.push_back(a.t_start);
    return out;
}

std::vector<Trajectory::SectionHit> Trajectory::section_hits(double t0, double t1) const {
    extend_to(t1);
    std::vector<SectionHit> out;
    for (const auto& h : hits_)
        if (h.t > t0 && h.t <= t1) out.push_back(h);
    return out;
}

} // namespace lorenz_shadow
