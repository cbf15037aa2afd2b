#include "lorenz_shadow/params.hpp"

#include <cmath>
#include <sstream>

#include "lorenz_shadow/errors.hpp"

namespace lorenz_shadow {

double ModelParams::lambda_exp() const {
    const double rr = r();
    return std::min(c_plus, c_minus) * rr * std::pow(2.0, 1.0 - rr);
}

double ModelParams::contraction_bound() const { return kappa * std::pow(2.0, -s_exp()); }

double ModelParams::tube_entry_z_cap() const { return std::pow(0.5, r()); }

std::vector<std::string> ModelParams::config_violations() const {
    std::vector<std::string> bad;
    const double two_r = std::pow(2.0, r());
    if (!(lambda1 > 0.0 && lambda2 < 0.0 && lambda3 < 0.0))
        bad.push_back("eigenvalue signs: lambda1 > 0, lambda2 < 0, lambda3 < 0");
    if (!(c_plus > 0.0 && c_minus > 0.0)) bad.push_back("branch coefficients must be positive");
    if (!(kappa > 0.0 && kappa < 1.0)) bad.push_back("kappa must lie in (0,1)");
    if (!(gamma > 0.0)) bad.push_back("Gamma must be positive");
    if (!(delta_rep >= 0.0 && delta_rep < 1.0)) bad.push_back("Delta must lie in [0,1)");
    if (!(tube_time == 1.0)) bad.push_back("tube traversal time is fixed at 1");

    const bool plus_fixed = std::abs(c_plus - two_r) <= 1e-12;
    const bool minus_fixed = std::abs(c_minus - two_r) <= 1e-12;
    switch (flow_case) {
        case Case::A:
            if (!plus_fixed || minus_fixed)
                bad.push_back("case A requires c+ = 2^r (f(L+)=L+) and c- < 2^r (f(L-)>L-)");
            break;
        case Case::B:
            if (plus_fixed || !minus_fixed)
                bad.push_back("case B requires c- = 2^r (f(L-)=L-) and c+ < 2^r (f(L+)<L+)");
            break;
        case Case::C:
            if (plus_fixed || minus_fixed)
                bad.push_back("case C requires both c+ < 2^r and c- < 2^r");
            break;
    }
    return bad;
}

std::vector<std::string> ModelParams::validate() const {
    std::vector<std::string> bad = config_violations();
    const double two_r = std::pow(2.0, r());
    if (!(-lambda3 < lambda1 && lambda1 < -lambda2)) {
        bad.push_back("h1: eigenvalue chain 0 < -lambda3 < lambda1 < -lambda2 fails");
    }
    if (!(lambda_exp() > std::sqrt(2.0))) {
        bad.push_back("P3: min f' = min(c+,c-)*r*2^(1-r) = " + std::to_string(lambda_exp()) +
                      " is not > sqrt(2)");
    }
    if (!(contraction_bound() > 0.0 && contraction_bound() < 1.0)) {
        bad.push_back("P4: contraction bound kappa*2^(-s) must lie in (0,1)");
    }
    if (!(c_plus <= two_r * (1.0 + 1e-12)) || !(c_minus <= two_r * (1.0 + 1e-12))) {
        bad.push_back("branch range: c+ and c- must lie in (0, 2^r] so f maps into [-1/2,1/2]");
    }
    return bad;
}

void ModelParams::require_valid() const {
    const auto bad = validate();
    if (bad.empty()) return;
    std::string msg = "invalid model parameters:";
    for (const auto& b : bad) msg += "\n  - " + b;
    throw ConfigError(msg);
}

ModelParams ModelParams::defaults_for_case(Case c) {
    ModelParams p;
    p.flow_case = c;
    const double two_r = std::pow(2.0, p.r());
    switch (c) {
        case Case::A: p.c_plus = two_r; p.c_minus = 1.63; break;
        case Case::B: p.c_plus = 1.63; p.c_minus = two_r; break;
        case Case::C: p.c_plus = 1.63; p.c_minus = 1.63; break;
    }
    return p;
}

std::map<std::string, std::string> parse_key_value_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        if (kv.count(key))
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv[key] = val;
    }
    return kv;
}

namespace {
double parse_double(const std::string& key, const std::string& val) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + val + "' as a number");
    }
}
} // namespace

ModelParams model_params_from_kv(const std::map<std::string, std::string>& kv,
                                 bool* gamma_was_defaulted) {
    Case c = Case::C;
    if (auto it = kv.find("case"); it != kv.end()) c = case_from_string(it->second);
    ModelParams p = ModelParams::defaults_for_case(c);
    auto take = [&](const char* key, double* field) {
        if (auto it = kv.find(key); it != kv.end()) *field = parse_double(key, it->second);
    };
    take("lambda1", &p.lambda1);
    take("lambda2", &p.lambda2);
    take("lambda3", &p.lambda3);
    take("c_plus", &p.c_plus);
    take("c_minus", &p.c_minus);
    take("kappa", &p.kappa);
    take("delta_rep", &p.delta_rep);
    const bool have_gamma = kv.count("gamma") > 0;
    if (have_gamma) take("gamma", &p.gamma);
    if (gamma_was_defaulted) *gamma_was_defaulted = !have_gamma;
    return p;
}

std::string model_params_to_kv(const ModelParams& p) {
    std::ostringstream out;
    out.precision(17);
    out << "lambda1 = " << p.lambda1 << "\n"
        << "lambda2 = " << p.lambda2 << "\n"
        << "lambda3 = " << p.lambda3 << "\n"
        << "c_plus = " << p.c_plus << "\n"
        << "c_minus = " << p.c_minus << "\n"
        << "kappa = " << p.kappa << "\n"
        << "gamma = " << p.gamma << "\n"
        << "delta_rep = " << p.delta_rep << "\n"
        << "case = " << to_string(p.flow_case) << "\n";
    return out.str();
}

} // namespace lorenz_shadow
