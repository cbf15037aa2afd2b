#pragma once

#include <string>

#include "lorenz_shadow/params.hpp"

namespace lorenz_shadow {

// Shortest round-trippable decimal form; identical across runs.
std::string format_double(double v);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// One experiment: model parameters plus harness knobs, parseable from the flat
// key = value config. Unknown keys are rejected with an explicit message.
struct ExperimentConfig {
    ModelParams model;
    int K = 8;
    long n_max = 32;
    double delta = 1e-3;      // delta-average certification level
    long budget = 200;        // optimizer evaluation budget
    unsigned long long seed = 42;
    std::string out_dir = "out";
    int max_preimage_depth = 40;
    double tol_gap = 1e-9;
    double tol_floor = 1e-6;
    double tol_witness = 1e-9;
    bool gamma_defaulted = false; // gamma key absent, filled by choose_gamma

    static ExperimentConfig from_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    std::string to_text() const;
};

} // namespace lorenz_shadow
