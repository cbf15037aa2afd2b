#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lorenz_shadow/functionals.hpp"

namespace lorenz_shadow {

// Candidate starting points, parametrized by (region, local coordinates) so the
// search stays inside the trapping set.
struct CandidateSpec {
    enum class Stratum { Section, CubeLeg, Tube, UnstableAxis, Curtain };
    Stratum stratum = Stratum::Section;
    double a = 0.25, b = 0.0, c = 0.0;

    std::string describe() const;
};

HybridState realize_candidate(const CandidateSpec& spec, const ModelParams& p);
CandidateSpec random_candidate(std::mt19937_64& rng, int stratum_cycle);

struct Witness {
    int k = 0;
    int u = 0;          // in {0,...,4}; u = 4 is the first interval of block k+1
    double t = 0.0;     // in [s_{4k+u}, s_{4k+u+1} - beta)
    double distance = 0.0; // >= 2*Gamma
};

struct CrossingSignature {
    bool agree = true;
    long first_disagreement = -1;
    bool early_separation = false;
    double early_separation_time = 0.0;
    std::vector<int> pseudo_pieces;    // +1 = S+, -1 = S-, 0 = singular leaf
    std::vector<int> candidate_pieces;
};

// Which piece of S each path hits, crossing by crossing, over block k.
CrossingSignature crossing_signature(const CandidatePath& cand, const PseudoOrbit& orbit,
                                     int k, double beta);

// First time in block k's five intervals at which the candidate sits >= 2*Gamma
// from the pseudo-orbit's segment point; guaranteed to exist, so a miss throws.
Witness find_witness(const CandidatePath& cand, const PseudoOrbit& orbit, int k, double beta);

// Minimum distance over the persistence window [t-beta, t+beta], clamped to the
// segment and to the forward flow domain; stays above Gamma.
double witness_persistence_min(const CandidatePath& cand, const PseudoOrbit& orbit,
                               const Witness& w, double beta);

struct DichotomyReport {
    std::array<bool, 4> hypothesis_held{};  // d < 2*Gamma sampled on the truncated interval
    std::array<double, 4> max_truncated{};
    std::array<double, 4> max_full{};       // only where the hypothesis held
    int checked = 0;
};

// Samples the two-bound implication on block k: hypothesis < 2*Gamma on the
// truncated intervals forces < 3*Gamma on the full ones (up to sampling slack).
DichotomyReport check_escape_dichotomy(const CandidatePath& cand, const PseudoOrbit& orbit,
                                       int k, double beta, double lipschitz);

enum class Verdict { Falsified, Undetermined };
const char* to_string(Verdict v);

struct EvalRecord {
    long eval_id = 0;
    long start_id = 0;
    double avg_value = 0.0, avg_err = 0.0;
    double asymp_value = 0.0, asymp_err = 0.0;
    CandidateSpec spec;
    std::string h_descr;
};

struct ShadowReport {
    double floor_value = 0.0; // beta * Gamma / 5
    double beta = 0.0;
    double v_max = 0.0;
    double gamma = 0.0;
    long evaluations = 0;
    double best_avg = 0.0, best_avg_err = 0.0;
    double best_asymp = 0.0, best_asymp_err = 0.0;
    long best_eval_id = -1;
    CandidateSpec best_spec;
    std::vector<double> best_slopes;
    ShadowFunctionalResult best_avg_result;
    std::vector<EvalRecord> log;
    std::vector<Witness> witnesses; // best candidate, blocks 0..K-2
    std::vector<double> witness_persistence;
    bool witnesses_complete = false;
    Verdict asp = Verdict::Undetermined;
    Verdict lsp = Verdict::Undetermined;
    Verdict aasp = Verdict::Undetermined;

    std::string witnesses_csv() const;
    std::string search_csv() const;
    std::string summary_text(const ClassReport& classes) const;
};

// Multi-start derivative-free minimization of the averaged functional over
// (y, h). Deterministic for a given seed; the evaluation stream is a prefix of
// the same infinite schedule for every budget, so enlarging the budget can only
// lower the best value.
ShadowReport minimize_functional(const PseudoOrbit& orbit, double delta_rep, long budget,
                                 std::uint64_t seed, long n_max, const QuadratureOptions& opt,
                                 double beta, double v_max);

// Floor comparison per the acceptance rule; fills the three verdicts.
// Throws FloorBreached when a candidate undercuts beta*Gamma/5 beyond tolerance.
void verify_floor(ShadowReport* report, const ClassReport& classes, double tol);

int thread_cap(); // LORENZ_SHADOW_THREADS, default: hardware concurrency

} // namespace lorenz_shadow
