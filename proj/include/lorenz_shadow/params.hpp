#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lorenz_shadow {

// Hypothesis case for the boundary leaves: A fixes L+, B fixes L-, C fixes neither.
enum class Case { A, B, C };

const char* to_string(Case c);
Case case_from_string(const std::string& s);

// Everything that pins down one concrete geometric Lorenz flow: the linear
// eigenvalues, the branch coefficients of the one-dimensional map, the
// y-contraction of the return map, and the experiment constants Gamma/Delta.
struct ModelParams {
    double lambda1 = 1.0;    // expanding eigenvalue (x-axis), > 0
    double lambda2 = -2.0;   // strong contraction (y-axis), < 0
    double lambda3 = -0.75;  // weak contraction (z-axis), < 0
    double c_plus = 1.63;    // right-branch coefficient of f
    double c_minus = 1.63;   // left-branch coefficient of f
    double kappa = 0.5;      // y-contraction coefficient of g
    double gamma = 0.003;    // the constant Gamma
    double delta_rep = 0.1;  // the reparametrization bound Delta
    Case flow_case = Case::C;

    double tube_time = 1.0;

    // Derived exponents and the P3/P4 constants.
    double r() const { return -lambda3 / lambda1; }
    double s_exp() const { return -lambda2 / lambda1; }
    double lambda_exp() const;        // min f' = min(c+,c-) * r * 2^(1-r)
    double contraction_bound() const; // kappa * 2^(-s_exp)

    // Largest tube-entry z for states flowing out of the trapping set.
    double tube_entry_z_cap() const;

    // Configuration-level problems: case/coefficient mismatch, sign and range
    // errors. These are usage mistakes, not scientific findings.
    std::vector<std::string> config_violations() const;
    // Everything: config problems plus the structural hypotheses (h1 chain,
    // P3, P4, branch ranges). Empty means a valid flow of the declared case.
    std::vector<std::string> validate() const;
    void require_valid() const; // throws ConfigError listing the violations

    static ModelParams defaults_for_case(Case c);
};

// Flat key = value config I/O. Keys: lambda1 lambda2 lambda3 c_plus c_minus
// kappa gamma delta_rep case. Unknown keys are rejected by the parser.
std::map<std::string, std::string> parse_key_value_text(const std::string& text);
ModelParams model_params_from_kv(const std::map<std::string, std::string>& kv,
                                 bool* gamma_was_defaulted = nullptr);
std::string model_params_to_kv(const ModelParams& p);

} // namespace lorenz_shadow
