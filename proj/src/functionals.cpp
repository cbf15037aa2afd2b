#include "lorenz_shadow/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lorenz_shadow/errors.hpp"
#include "lorenz_shadow/io.hpp"

namespace lorenz_shadow {

namespace {

// Panel boundaries inside [a, b): the reparametrization knots, the pseudo-orbit
// leg's region changes, and the candidate's region changes pulled back through h.
std::vector<double> collect_breakpoints(const CandidatePath& cand, const SegmentedOrbit& orbit,
                                        long i, double a, double b) {
    std::vector<double> cuts{a, b};
    for (double k : cand.reparam().knots())
        if (k > a && k < b) cuts.push_back(k);
    for (double u : orbit.segment_events(i))
        if (a + u < b) cuts.push_back(a + u);
    for (double v : cand.trajectory().event_times(cand.reparam()(a), cand.reparam()(b))) {
        const double t = cand.reparam().inverse(v);
        if (t > a && t < b) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    return cuts;
}

} // namespace

SegmentIntegral segment_integral(const CandidatePath& cand, const SegmentedOrbit& orbit,
                                 long i, const QuadratureOptions& opt) {
    if (i < orbit.seg_min() || i > orbit.seg_max()) throw HorizonExceeded();
    if (!(opt.lipschitz > 0.0) || !(opt.fine_step > 0.0))
        throw std::logic_error("quadrature options need a Lipschitz constant and a fine step");
    const double s_i = orbit.seg_start(i);
    const double t_i = orbit.seg_time(i);
    const double L = opt.lipschitz;

    auto integrand = [&](double t) {
        return distance(cand.at(t), orbit.segment_position(i, t - s_i));
    };

    const std::vector<double> cuts = collect_breakpoints(cand, orbit, i, s_i, s_i + t_i);

    SegmentIntegral total;
    // Midpoint panels; a panel whose value could hide a near-zero verdict is
    // split down to fine_step before being trusted.
    const auto panel = [&](auto&& self, double a, double b) -> void {
        const double w = b - a;
        const double fm = integrand(0.5 * (a + b));
        if (w <= opt.fine_step || fm >= opt.refine_factor * L * w) {
            total.value += fm * w;
            total.error_bound += 0.25 * L * w * w;
            return;
        }
        const double sub = w / 8.0;
        for (int j = 0; j < 8; ++j) self(self, a + j * sub, a + (j + 1) * sub);
    };

    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double a = cuts[c], b = cuts[c + 1];
        const long n_panels = std::max(1L, long(std::ceil((b - a) / opt.coarse_step)));
        const double w = (b - a) / double(n_panels);
        for (long j = 0; j < n_panels; ++j) panel(panel, a + j * w, a + (j + 1) * w);
    }
    return total;
}

namespace {

ShadowFunctionalResult averaged(const CandidatePath& cand, const SegmentedOrbit& orbit,
                                long first, long n, const QuadratureOptions& opt) {
    if (n < 1 || n > orbit.seg_max()) throw HorizonExceeded();
    ShadowFunctionalResult r;
    r.horizon = n;
    r.first_index = first;
    double sum = 0.0, err = 0.0;
    for (long i = first; i <= n; ++i) {
        const SegmentIntegral seg = segment_integral(cand, orbit, i, opt);
        r.per_segment.push_back(seg);
        sum += seg.value;
        err += seg.error_bound;
        r.running_average.push_back(sum / double(std::max(1L, i)));
        r.sup_running_average = std::max(r.sup_running_average, r.running_average.back());
    }
    r.value = sum / double(n);
    r.error_bound = err / double(n);
    return r;
}

} // namespace

ShadowFunctionalResult avg_shadow_functional(const CandidatePath& cand,
                                             const SegmentedOrbit& orbit, long n,
                                             const QuadratureOptions& opt) {
    return averaged(cand, orbit, 1, n, opt);
}

ShadowFunctionalResult asymp_avg_functional(const CandidatePath& cand,
                                            const SegmentedOrbit& orbit, long n,
                                            const QuadratureOptions& opt) {
    return averaged(cand, orbit, 0, n, opt);
}

std::vector<SegmentIntegral> limit_shadow_gaps(const CandidatePath& cand,
                                               const SegmentedOrbit& orbit, long i_lo,
                                               long i_hi, const QuadratureOptions& opt) {
    std::vector<SegmentIntegral> out;
    for (long i = i_lo; i <= i_hi; ++i) out.push_back(segment_integral(cand, orbit, i, opt));
    return out;
}

std::string functional_csv(const ShadowFunctionalResult& r) {
    std::ostringstream out;
    out << "n,running_average,error_bound\n";
    double err = 0.0;
    for (std::size_t j = 0; j < r.running_average.size(); ++j) {
        const long n = r.first_index + long(j);
        err += r.per_segment[j].error_bound;
        out << n << "," << format_double(r.running_average[j]) << ","
            << format_double(err / double(std::max(1L, n))) << "\n";
    }
    return out.str();
}

std::string segments_csv(const ShadowFunctionalResult& r) {
    std::ostringstream out;
    out << "i,integral,error_bound\n";
    for (std::size_t j = 0; j < r.per_segment.size(); ++j)
        out << (r.first_index + long(j)) << "," << format_double(r.per_segment[j].value) << ","
            << format_double(r.per_segment[j].error_bound) << "\n";
    return out.str();
}

} // namespace lorenz_shadow
