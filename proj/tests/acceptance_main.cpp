// Acceptance suite: one line per criterion, exit code = number of failures.
// Criterion 2 asserts the literal class-rate constants; the construction's
// exact gap staircase sums past them (see the build-pseudo report for the
// measured constants), so that criterion is expected red and says why.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lorenz_shadow/errors.hpp"
#include "lorenz_shadow/falsifier.hpp"
#include "lorenz_shadow/functionals.hpp"
#include "lorenz_shadow/io.hpp"
#include "lorenz_shadow/pseudo_orbit.hpp"
#include "lorenz_shadow/reparam.hpp"

using namespace lorenz_shadow;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

struct Outcome {
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

int g_failures = 0;

void print_line(const std::string& label, const Outcome& o) {
    std::string dots(label.size() < 58 ? 58 - label.size() : 2, '.');
    std::printf("%s %s %s (%.2f s) %s\n", label.c_str(), dots.c_str(),
                o.pass ? "PASS" : "FAIL", o.seconds, o.detail.c_str());
    if (!o.pass) ++g_failures;
}

struct CaseContext {
    ModelParams p;
    PseudoOrbit orbit;
    double v_max = 0.0;
    double beta = 0.0; // at Delta = 0.1
    QuadratureOptions qopt;
    ShadowReport search; // Delta = 0.1, budget 200

    static CaseContext make(Case c) {
        ModelParams p = ModelParams::defaults_for_case(c);
        p.gamma = choose_gamma(p);
        p.delta_rep = 0.1;
        auto orbit = PseudoOrbit::build(p, 8);
        CaseContext ctx{p, std::move(orbit)};
        ctx.v_max = speed_bound(p);
        ctx.beta = beta_for(p, ctx.v_max);
        ctx.qopt.fine_step = ctx.beta / 4.0;
        ctx.qopt.lipschitz = 2.0 * ctx.v_max * (1.0 + p.delta_rep);
        return ctx;
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// [1] gap identity: A_m = Gamma/2^|k(m)| within 1e-9 for every m in [-32, 35]
Outcome criterion_gap_identity(const CaseContext& ctx) {
    Timer timer;
    double worst = 0.0;
    for (long m = -32; m <= 35; ++m)
        worst = std::max(worst, std::abs(ctx.orbit.gap(m) - ctx.orbit.gap_target(m)));
    Outcome o;
    o.seconds = timer.seconds();
    o.pass = worst <= 1e-9 && o.seconds < 5.0;
    o.detail = "max |A_m - target| = " + fmt(worst);
    return o;
}

// [2] pseudo-orbit classes at the literal rate constants
Outcome criterion_classes(const CaseContext& ctx) {
    Timer timer;
    const double g = ctx.p.gamma;
    const auto rep = ctx.orbit.verify_classes(32, {1e-2, 1e-3}, 1e-9);

    // (a) (1/n) sum_{-n..n} A_i <= 8*Gamma/n for all n <= 32
    double cesaro_sum = ctx.orbit.gap(0);
    long first_bad_n = cesaro_sum > 8.0 * g ? 1 : 0;
    for (long n = 1; n <= 32; ++n) {
        cesaro_sum += ctx.orbit.gap(n) + ctx.orbit.gap(-n);
        if (cesaro_sum > 8.0 * g && first_bad_n == 0) first_bad_n = n;
    }
    const bool cesaro_ok = first_bad_n == 0;

    // (b) limit decay A_m <= 2*Gamma*2^(-|m|/4)
    bool decay_ok = true;
    for (long m = ctx.orbit.gap_min(); m <= ctx.orbit.gap_max(); ++m)
        if (ctx.orbit.gap(m) > 2.0 * g * std::pow(2.0, -double(std::labs(m)) / 4.0) + 1e-12)
            decay_ok = false;

    // (c) N(delta) <= 8*Gamma/delta for delta in {1e-2, 1e-3}
    bool ndelta_ok = true;
    std::string ndetail;
    for (const auto& cert : rep.delta_certs) {
        const bool ok = cert.n_measured > 0 && double(cert.n_measured) <= cert.bound_8gamma;
        ndelta_ok = ndelta_ok && ok;
        ndetail += " N(" + fmt(cert.delta) + ")=" + std::to_string(cert.n_measured) +
                   (ok ? "<=" : ">") + fmt(cert.bound_8gamma);
    }

    Outcome o;
    o.seconds = timer.seconds();
    o.pass = cesaro_ok && decay_ok && ndelta_ok && o.seconds < 5.0;
    o.detail = std::string("Cesaro<=8G/n: ") +
               (cesaro_ok ? "ok"
                          : "exceeded from n=" + std::to_string(first_bad_n) + ", max sum " +
                                fmt(rep.max_two_sided_sum / g) + "G (tight 12G bound holds)") +
               "; decay: " + (decay_ok ? "ok" : "violated") + ";" + ndetail;
    return o;
}

// [3] model axioms
Outcome criterion_model(const CaseContext& ctx) {
    Timer timer;
    const ModelParams& p = ctx.p;
    std::string bad;

    double min_slope = 1e300;
    for (int i = 0; i < 10000; ++i) {
        const double x = -0.5 + (i + 0.5) / 10000.0;
        if (std::abs(x) < 1e-4) continue;
        const double h = 1e-7 * std::max(std::abs(x), 1e-2);
        min_slope = std::min(min_slope, (one_d_map(x + h, p) - one_d_map(x - h, p)) / (2 * h));
    }
    if (!(min_slope > std::sqrt(2.0))) bad += " P3";

    bool p4 = p.contraction_bound() < 1.0;
    for (int i = 1; i <= 1000 && p4; ++i) {
        const double x = 0.5 * i / 1000.0;
        const double dg = (poincare(x, 1e-3, p).y - poincare(x, 0.0, p).y) / 1e-3;
        if (!(dg > 0.0 && dg <= p.contraction_bound() * (1 + 1e-9))) p4 = false;
    }
    if (!p4) bad += " P4";

    if (!(0 < -p.lambda3 && -p.lambda3 < p.lambda1 && p.lambda1 < -p.lambda2)) bad += " h1";

    if (p.flow_case == Case::C) {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> ux(1e-6, 0.5), uy(-0.5, 0.5);
        for (int i = 0; i < 1000; ++i) {
            const double x = ux(rng), y = uy(rng);
            const auto a = poincare(x, y, p);
            const auto b = poincare(-x, -y, p);
            if (a.x != -b.x || a.y != -b.y) { bad += " h4"; break; }
        }
    }

    double worst_semi = 0.0;
    {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> ux(-0.5, 0.5), ut(0.0, 15.0), u01(0.0, 1.0);
        for (int i = 0; i < 10000; ++i) {
            double x = ux(rng);
            if (std::abs(x) < 1e-6) x = 0.1;
            HybridState s0 = flow(u01(rng) * 2.0, cube_state({x, ux(rng), 1.0}), p);
            const double t1 = ut(rng), t2 = ut(rng);
            worst_semi = std::max(worst_semi, distance(flow(t1 + t2, s0, p).pos,
                                                       flow(t2, flow(t1, s0, p), p).pos));
        }
    }
    if (!(worst_semi <= 1e-10)) bad += " semigroup";

    try {
        region_separations(p);
    } catch (const SeparationViolated&) {
        bad += " separations";
    }

    Outcome o;
    o.seconds = timer.seconds();
    o.pass = bad.empty() && o.seconds < 30.0;
    o.detail = bad.empty() ? "min f' = " + fmt(min_slope) + ", semigroup dev " + fmt(worst_semi)
                           : "violated:" + bad;
    return o;
}

// [4] the beta*Gamma/5 floor at Delta in {0, 0.1} plus the positive control
Outcome criterion_floor(CaseContext& ctx) {
    Timer timer;
    std::string bad;
    long total_evals = 0;
    for (double delta : {0.0, 0.1}) {
        ModelParams p = ctx.p;
        p.delta_rep = delta;
        const double beta = beta_for(p, ctx.v_max);
        QuadratureOptions q = ctx.qopt;
        q.fine_step = beta / 4.0;
        q.lipschitz = 2.0 * ctx.v_max * (1.0 + delta);
        auto rep = minimize_functional(ctx.orbit, delta, 200, 42, 32, q, beta, ctx.v_max);
        total_evals += rep.evaluations;
        const double needed = rep.floor_value * (1.0 - 1e-6);
        for (const auto& r : rep.log) {
            if (r.avg_value < needed - r.avg_err || r.asymp_value < needed - r.asymp_err) {
                bad += " floor(delta=" + fmt(delta) + ",eval=" + std::to_string(r.eval_id) + ")";
                break;
            }
        }
        if (delta == 0.1) ctx.search = std::move(rep);
    }

    const auto start = TrueOrbitSegments::pick_generic_start(ctx.p, 34);
    const auto control = TrueOrbitSegments::build(ctx.p, start, 34);
    CandidatePath self(control.start(), Reparam::identity(), ctx.p);
    const auto control_avg = avg_shadow_functional(self, control, 32, ctx.qopt);
    if (!(control_avg.value < 1e-9)) bad += " control";

    Outcome o;
    o.seconds = timer.seconds();
    o.pass = bad.empty() && o.seconds < 600.0;
    o.detail = bad.empty()
                   ? std::to_string(total_evals) + " evals, min avg " + fmt(ctx.search.best_avg) +
                         " >> floor " + fmt(ctx.search.floor_value) + ", control " +
                         fmt(control_avg.value)
                   : "violated:" + bad;
    return o;
}

// [5] witnesses with persistence for the best and 100 random candidates
Outcome criterion_witnesses(const CaseContext& ctx) {
    Timer timer;
    std::string bad;
    const double g = ctx.p.gamma;

    std::vector<CandidatePath> paths;
    {
        std::vector<double> knots;
        for (long n = 0; n <= 33; ++n) knots.push_back(ctx.orbit.seg_start(n));
        Reparam h_best(knots, ctx.search.best_slopes.empty()
                                  ? std::vector<double>(knots.size(), 1.0)
                                  : ctx.search.best_slopes);
        paths.emplace_back(realize_candidate(ctx.search.best_spec, ctx.p), h_best, ctx.p);
        std::mt19937_64 rng(2024);
        for (int i = 0; i < 100; ++i) {
            const auto spec = random_candidate(rng, i);
            Reparam h = (i % 3 == 0) ? Reparam::identity()
                                     : Reparam::random(rng, ctx.p.delta_rep, knots);
            paths.emplace_back(realize_candidate(spec, ctx.p), h, ctx.p);
        }
    }

    long checked = 0;
    for (std::size_t c = 0; c < paths.size() && bad.empty(); ++c) {
        for (int k = 0; k <= 6; ++k) {
            try {
                const auto w = find_witness(paths[c], ctx.orbit, k, ctx.beta);
                if (w.distance < 2.0 * g) bad += " distance(c=" + std::to_string(c) + ")";
                const double persist = witness_persistence_min(paths[c], ctx.orbit, w, ctx.beta);
                if (persist < g * (1.0 - 1e-9))
                    bad += " persistence(c=" + std::to_string(c) + ",k=" + std::to_string(k) + ")";
                ++checked;
            } catch (const NoWitnessFound& e) {
                bad += std::string(" ") + e.what();
                break;
            }
        }
    }

    Outcome o;
    o.seconds = timer.seconds();
    o.pass = bad.empty() && checked == long(paths.size()) * 7 && o.seconds < 300.0;
    o.detail = bad.empty()
                   ? std::to_string(checked) + " witnesses, all >= 2*Gamma, persistence >= Gamma"
                   : "violated:" + bad;
    return o;
}

// [6] escape dichotomy across 1000 candidate/block pairs
Outcome criterion_dichotomy(const CaseContext& ctx) {
    Timer timer;
    std::string bad;
    long pairs = 0, nonvacuous = 0;

    std::vector<CandidatePath> paths;
    paths.emplace_back(ctx.orbit.point(0), Reparam::identity(), ctx.p); // tracking start
    paths.emplace_back(ctx.orbit.point(4), Reparam::identity(), ctx.p);
    {
        // near-identity reparametrizations of the tracking start keep the
        // first-interval hypothesis alive, exercising the non-vacuous branch
        std::vector<double> knots;
        for (long n = 0; n <= 33; ++n) knots.push_back(ctx.orbit.seg_start(n));
        for (double eps : {1e-5, -2e-5}) {
            std::vector<double> slopes(knots.size(), 1.0 + eps);
            paths.emplace_back(ctx.orbit.point(0), Reparam(knots, slopes), ctx.p);
        }
    }
    std::mt19937_64 rng(515);
    while (paths.size() < 125) {
        const auto spec = random_candidate(rng, int(paths.size()));
        paths.emplace_back(realize_candidate(spec, ctx.p), Reparam::identity(), ctx.p);
    }

    try {
        for (std::size_t c = 0; c < paths.size(); ++c) {
            for (int k = 0; k < 8; ++k) {
                const auto rep =
                    check_escape_dichotomy(paths[c], ctx.orbit, k, ctx.beta, ctx.qopt.lipschitz);
                nonvacuous += rep.checked;
                ++pairs;
            }
        }
    } catch (const DichotomyViolated& e) {
        bad = e.what();
    }

    Outcome o;
    o.seconds = timer.seconds();
    o.pass = bad.empty() && pairs == 1000 && o.seconds < 300.0;
    o.detail = bad.empty() ? std::to_string(pairs) + " pairs, 0 violations, " +
                                 std::to_string(nonvacuous) + " non-vacuous interval checks"
                           : bad;
    return o;
}

struct CaseResults {
    std::array<Outcome, 6> criteria;
};

CaseResults run_case(CaseContext& ctx) {
    CaseResults res;
    res.criteria[0] = criterion_gap_identity(ctx);
    res.criteria[1] = criterion_classes(ctx);
    res.criteria[2] = criterion_model(ctx);
    res.criteria[3] = criterion_floor(ctx);
    res.criteria[4] = criterion_witnesses(ctx);
    res.criteria[5] = criterion_dichotomy(ctx);
    return res;
}

// [8] two falsify runs with the same config and seed: byte-identical outputs
Outcome criterion_determinism() {
    Timer timer;
    Outcome o;
    const char* cli = std::getenv("LORENZ_SHADOW_CLI");
    std::string cli_path = cli ? cli : "";
    if (cli_path.empty()) {
        // sibling of this binary's directory when run outside ctest
        std::error_code ec;
        const auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
        if (!ec) cli_path = (self.parent_path().parent_path() / "lorenz-shadow").string();
    }
    if (cli_path.empty() || !std::filesystem::exists(cli_path)) {
        o.detail = "CLI binary not found at " + cli_path;
        o.seconds = timer.seconds();
        return o;
    }
    const std::string base =
        (std::filesystem::temp_directory_path() / "lorenz_shadow_det").string();
    std::filesystem::remove_all(base + "1");
    std::filesystem::remove_all(base + "2");
    const std::string cfg_path = base + ".cfg";
    write_file(cfg_path, "case = C\nK = 6\nn_max = 24\nbudget = 48\nseed = 123\n");
    for (int i = 1; i <= 2; ++i) {
        const std::string cmd = cli_path + " falsify --config " + cfg_path + " --out " + base +
                                std::to_string(i) + " > /dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) {
            o.detail = "falsify run " + std::to_string(i) + " exited nonzero";
            o.seconds = timer.seconds();
            return o;
        }
    }
    std::string diff;
    for (const char* name : {"gaps.csv", "orbit.csv", "witnesses.csv", "search.csv",
                             "functional.csv", "segments.csv", "summary.txt", "gaps.dat",
                             "averages.dat"}) {
        if (read_file(base + "1/" + name) != read_file(base + "2/" + name))
            diff += std::string(" ") + name;
    }
    o.pass = diff.empty();
    o.detail = diff.empty() ? "9 output files byte-identical" : "differ:" + diff;
    o.seconds = timer.seconds();
    return o;
}

const char* kCriterionNames[6] = {
    "gap identity (K=8, m in [-32,35], 1e-9)",
    "pseudo-orbit classes (literal rate constants)",
    "model axioms (P3, P4, h1, h4, semigroup, separations)",
    "floor beta*Gamma/5 (Delta in {0,0.1}, budget 200) + control",
    "witnesses (best + 100 random, blocks 0..6)",
    "escape dichotomy (1000 candidate/block pairs)",
};

} // namespace

int main() {
    std::printf("acceptance: geometric Lorenz shadowing falsification harness\n\n");

    auto ctx_c = CaseContext::make(Case::C);
    const auto res_c = run_case(ctx_c);
    for (int i = 0; i < 6; ++i)
        print_line("[" + std::to_string(i + 1) + "][case C] " + kCriterionNames[i],
                   res_c.criteria[i]);

    // [7] the same six criteria in cases A and B
    {
        Timer timer;
        auto ctx_a = CaseContext::make(Case::A);
        const auto res_a = run_case(ctx_a);
        auto ctx_b = CaseContext::make(Case::B);
        const auto res_b = run_case(ctx_b);
        std::string detail;
        for (int i = 0; i < 6; ++i) {
            if (!res_a.criteria[i].pass) detail += " A:" + std::to_string(i + 1);
            if (!res_b.criteria[i].pass) detail += " B:" + std::to_string(i + 1);
            if (!res_c.criteria[i].pass) detail += " C:" + std::to_string(i + 1);
        }
        Outcome o;
        o.pass = detail.empty();
        o.seconds = timer.seconds();
        o.detail = detail.empty() ? "criteria 1-6 pass in A, B and C"
                                  : "failing (case:criterion):" + detail;
        print_line("[7] case coverage (A, B, C)", o);
    }

    print_line("[8] determinism (byte-identical falsify outputs)", criterion_determinism());

    std::printf("\n%d criterion(s) failed\n", g_failures);
    return g_failures;
}
