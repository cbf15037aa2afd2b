#pragma once

#include <stdexcept>
#include <string>

namespace lorenz_shadow {

struct OutOfDomain : std::runtime_error {
    explicit OutOfDomain(const std::string& what) : std::runtime_error("out of domain: " + what) {}
};

// Forward orbit converges to the singularity and never crosses the section.
struct NeverReturns : std::runtime_error {
    NeverReturns() : std::runtime_error("state never returns to the section") {}
};

struct SingularLeaf : std::runtime_error {
    SingularLeaf() : std::runtime_error("one-dimensional map is undefined on the singular leaf x = 0") {}
};

struct SeparationViolated : std::runtime_error {
    explicit SeparationViolated(const std::string& names)
        : std::runtime_error("region separation below 3*Gamma: " + names) {}
};

struct NoValidGamma : std::runtime_error {
    explicit NoValidGamma(const std::string& why) : std::runtime_error("no valid Gamma: " + why) {}
};

struct BandEmpty : std::runtime_error {
    explicit BandEmpty(int block) : std::runtime_error("no preimage of the singular leaf found in the leaf band of block " + std::to_string(block) + " (increase max preimage depth)"), k(block) {}
    int k;
};

struct BisectionFailed : std::runtime_error {
    explicit BisectionFailed(const std::string& what) : std::runtime_error("bisection failed: " + what) {}
};

struct HorizonExceeded : std::runtime_error {
    HorizonExceeded() : std::runtime_error("requested time lies beyond the built horizon") {}
};

struct ClassViolated : std::runtime_error {
    ClassViolated(const std::string& which, long index)
        : std::runtime_error("pseudo-orbit class check violated (" + which + ") at index " + std::to_string(index)) {}
};

struct NoWitnessFound : std::runtime_error {
    explicit NoWitnessFound(int block) : std::runtime_error("no separation witness found in block " + std::to_string(block) + " (contradicts the separation lemma; investigate)"), k(block) {}
    int k;
};

struct DichotomyViolated : std::runtime_error {
    explicit DichotomyViolated(double time) : std::runtime_error("escape dichotomy violated at t = " + std::to_string(time)), t(time) {}
    double t;
};

struct FloorBreached : std::runtime_error {
    FloorBreached(double value, double floor)
        : std::runtime_error("functional value " + std::to_string(value) + " breaches the theoretical floor " + std::to_string(floor) + "; critical inconsistency, investigate") {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error("config error: " + what) {}
};

} // namespace lorenz_shadow
