#include "lorenz_shadow/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lorenz_shadow/errors.hpp"
#include "lorenz_shadow/pseudo_orbit.hpp"

namespace lorenz_shadow {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {
const std::set<std::string> kModelKeys = {"lambda1", "lambda2", "lambda3", "c_plus",
                                          "c_minus", "kappa", "gamma", "delta_rep", "case"};
const std::set<std::string> kHarnessKeys = {"K", "n_max", "delta", "budget", "seed", "out",
                                            "max_preimage_depth", "tol_gap", "tol_floor",
                                            "tol_witness"};

double want_double(const std::map<std::string, std::string>& kv, const char* key, double dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("key '") + key + "': cannot parse '" + it->second + "'");
    }
}

long long want_int(const std::map<std::string, std::string>& kv, const char* key, long long dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("key '") + key + "': cannot parse '" + it->second +
                          "' as an integer");
    }
}
} // namespace

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
    const auto kv = parse_key_value_text(text);
    for (const auto& [key, value] : kv) {
        (void)value;
        if (!kModelKeys.count(key) && !kHarnessKeys.count(key))
            throw ConfigError("unknown key '" + key + "'");
    }
    ExperimentConfig cfg;
    cfg.model = model_params_from_kv(kv, &cfg.gamma_defaulted);
    if (cfg.gamma_defaulted) cfg.model.gamma = choose_gamma(cfg.model);
    cfg.K = int(want_int(kv, "K", cfg.K));
    cfg.n_max = long(want_int(kv, "n_max", std::min<long>(32, 4L * cfg.K)));
    cfg.delta = want_double(kv, "delta", cfg.delta);
    cfg.budget = long(want_int(kv, "budget", cfg.budget));
    cfg.seed = (unsigned long long)want_int(kv, "seed", (long long)cfg.seed);
    cfg.max_preimage_depth = int(want_int(kv, "max_preimage_depth", cfg.max_preimage_depth));
    cfg.tol_gap = want_double(kv, "tol_gap", cfg.tol_gap);
    cfg.tol_floor = want_double(kv, "tol_floor", cfg.tol_floor);
    cfg.tol_witness = want_double(kv, "tol_witness", cfg.tol_witness);
    if (auto it = kv.find("out"); it != kv.end()) cfg.out_dir = it->second;
    if (cfg.K < 1) throw ConfigError("K must be >= 1");
    if (cfg.n_max < 1 || cfg.n_max > 4L * cfg.K + 3)
        throw ConfigError("n_max must lie in [1, 4K+3]");
    if (cfg.budget < 0) throw ConfigError("budget must be >= 0");
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_text(read_file(path));
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream out;
    out << model_params_to_kv(model);
    out << "K = " << K << "\n"
        << "n_max = " << n_max << "\n"
        << "delta = " << format_double(delta) << "\n"
        << "budget = " << budget << "\n"
        << "seed = " << seed << "\n"
        << "out = " << out_dir << "\n"
        << "max_preimage_depth = " << max_preimage_depth << "\n"
        << "tol_gap = " << format_double(tol_gap) << "\n"
        << "tol_floor = " << format_double(tol_floor) << "\n"
        << "tol_witness = " << format_double(tol_witness) << "\n";
    return out.str();
}

} // namespace lorenz_shadow
