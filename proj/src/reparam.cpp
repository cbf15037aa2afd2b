#include "lorenz_shadow/reparam.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lorenz_shadow/errors.hpp"
#include "lorenz_shadow/io.hpp"

namespace lorenz_shadow {

Reparam::Reparam() : knots_{0.0}, slopes_{1.0} { rebuild_values(); }

Reparam::Reparam(std::vector<double> knots, std::vector<double> slopes)
    : knots_(std::move(knots)), slopes_(std::move(slopes)) {
    if (knots_.empty() || knots_.front() != 0.0)
        throw ConfigError("reparametrization knots must start at 0");
    if (slopes_.size() != knots_.size())
        throw ConfigError("need one slope per knot (last slope extends to infinity)");
    for (std::size_t i = 1; i < knots_.size(); ++i)
        if (!(knots_[i] > knots_[i - 1])) throw ConfigError("knots must be strictly increasing");
    for (double s : slopes_)
        if (!(s > 0.0)) throw ConfigError("slopes must be positive");
    rebuild_values();
}

void Reparam::rebuild_values() {
    values_.assign(knots_.size(), 0.0);
    for (std::size_t i = 1; i < knots_.size(); ++i)
        values_[i] = values_[i - 1] + slopes_[i - 1] * (knots_[i] - knots_[i - 1]);
}

Reparam Reparam::random(std::mt19937_64& rng, double delta, const std::vector<double>& knots) {
    std::uniform_real_distribution<double> u(1.0 - delta, 1.0 + delta);
    std::vector<double> slopes(knots.size());
    for (auto& s : slopes) s = delta == 0.0 ? 1.0 : u(rng);
    return Reparam(knots, slopes);
}

double Reparam::operator()(double t) const {
    if (t <= knots_.front()) return slopes_.front() * t; // knots_[0] = 0, h(0) = 0
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    const std::size_t i = std::size_t(it - knots_.begin()) - 1;
    return values_[i] + slopes_[i] * (t - knots_[i]);
}

double Reparam::inverse(double v) const {
    if (v <= 0.0) return v / slopes_.front();
    auto it = std::upper_bound(values_.begin(), values_.end(), v);
    const std::size_t i = std::size_t(it - values_.begin()) - 1;
    return knots_[i] + (v - values_[i]) / slopes_[i];
}

bool Reparam::is_identity() const {
    return std::all_of(slopes_.begin(), slopes_.end(), [](double s) { return s == 1.0; });
}

void Reparam::set_slope(std::size_t i, double s) {
    slopes_.at(i) = s;
    rebuild_values();
}

std::optional<Reparam::Violation> Reparam::validate(double delta, int chord_pairs,
                                                    std::uint64_t seed) const {
    if (knots_.front() != 0.0 || values_.front() != 0.0)
        return Violation{"h(0) != 0", 0.0};
    for (std::size_t i = 0; i < slopes_.size(); ++i) {
        if (!(slopes_[i] > 0.0)) return Violation{"non-increasing segment", knots_[i]};
        if (std::abs(slopes_[i] - 1.0) > delta + 1e-12)
            return Violation{"segment slope outside [1-Delta, 1+Delta]", knots_[i]};
    }
    const double span = (knots_.back() > 0.0 ? knots_.back() : 1.0) * 1.5 + 1.0;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-span, span);
    for (int i = 0; i < chord_pairs; ++i) {
        const double s = u(rng), t = u(rng);
        if (std::abs(s - t) < 1e-9) continue;
        const double q = ((*this)(s) - (*this)(t)) / (s - t);
        if (std::abs(q - 1.0) > delta + 1e-9) return Violation{"chord quotient out of bound", s};
    }
    return std::nullopt;
}

std::string Reparam::describe() const {
    if (is_identity()) return "id";
    std::ostringstream out;
    out << "slopes[";
    for (std::size_t i = 0; i < slopes_.size(); ++i)
        out << (i ? ";" : "") << format_double(slopes_[i]);
    out << "]";
    return out.str();
}

double beta_for(const ModelParams& p, double v_max) {
    return p.gamma / (2.0 * v_max * (1.0 + p.delta_rep)) * 0.5;
}

BetaCertificate certify_beta(const ModelParams& p, double beta, int samples,
                             std::uint64_t seed) {
    BetaCertificate cert;
    cert.beta = beta;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-0.5, 0.5), u01(0.0, 1.0), um(-1.0, 1.0);

    for (int i = 0; i < samples; ++i) {
        // forward: any trapping-set state, reparametrized time in [0, beta]
        const double x0 = ux(rng), y0 = ux(rng);
        HybridState y;
        switch (i % 3) {
            case 0: y = cube_state({x0, y0, 1.0}); break;
            case 1: {
                const double te = x0 == 0.0 ? 0.0 : std::log(1.0 / std::abs(x0)) / p.lambda1;
                y = flow(u01(rng) * te, cube_state({x0 == 0.0 ? 0.25 : x0, y0, 1.0}), p);
                break;
            }
            default: {
                const double xs = x0 == 0.0 ? 0.25 : x0;
                const double te = std::log(1.0 / std::abs(xs)) / p.lambda1;
                y = flow(te + u01(rng) * p.tube_time, cube_state({xs, y0, 1.0}), p);
                break;
            }
        }
        std::vector<double> knots{0.0, beta * 0.5};
        Reparam h = Reparam::random(rng, p.delta_rep, knots);
        const double t = u01(rng) * beta;
        const double d = distance(flow(h(t), y, p).pos, y.pos);
        cert.max_forward_displacement = std::max(cert.max_forward_displacement, d);

        // backward: cube interior states evolved by exact exponentials
        const Vec3 q{0.5 * um(rng), 0.5 * um(rng), u01(rng)};
        const double tb = u01(rng) * beta * (1.0 + p.delta_rep);
        const double db = distance(cube_advance(q, -tb, p), q);
        cert.max_backward_displacement = std::max(cert.max_backward_displacement, db);
    }
    cert.ok = cert.max_forward_displacement < 0.5 * p.gamma &&
              cert.max_backward_displacement < 0.5 * p.gamma;
    return cert;
}

} // namespace lorenz_shadow
