#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lorenz_shadow/model.hpp"

namespace lorenz_shadow {

// Piecewise-linear monotone reparametrization h with h(0) = 0. Every chord
// slope is a convex combination of segment slopes, so keeping the segment
// slopes inside [1-Delta, 1+Delta] gives the global difference-quotient bound.
class Reparam {
public:
    Reparam(); // identity
    Reparam(std::vector<double> knots, std::vector<double> slopes);

    static Reparam identity() { return Reparam(); }
    static Reparam random(std::mt19937_64& rng, double delta, const std::vector<double>& knots);

    double operator()(double t) const;
    double inverse(double v) const;
    bool is_identity() const;

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& slopes() const { return slopes_; }
    void set_slope(std::size_t i, double s);

    struct Violation { std::string what; double where; };
    // Structural checks plus randomized chord probes of the quotient bound.
    std::optional<Violation> validate(double delta, int chord_pairs = 10000,
                                      std::uint64_t seed = 1234) const;

    std::string describe() const;

private:
    std::vector<double> knots_;  // knots_[0] = 0
    std::vector<double> slopes_; // slopes_[i] on [knots_[i], knots_[i+1]); last extends
    std::vector<double> values_; // h at knots
    void rebuild_values();
};

// beta = Gamma / (2 Vmax (1+Delta)) with an extra factor-2 margin: every
// reparametrized displacement over [-beta, beta] moves a point less than Gamma/2.
double beta_for(const ModelParams& p, double v_max);

struct BetaCertificate {
    double beta = 0.0;
    double max_forward_displacement = 0.0;  // over sampled (y, h, t in [0, beta])
    double max_backward_displacement = 0.0; // cube states, t in [-beta, 0]
    bool ok = false;                        // both maxima < Gamma/2
};
BetaCertificate certify_beta(const ModelParams& p, double beta, int samples,
                             std::uint64_t seed);

} // namespace lorenz_shadow
