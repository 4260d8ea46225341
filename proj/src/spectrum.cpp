#include "fbl/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbl/errors.hpp"
#include "fbl/prob.hpp"

namespace fbl {

namespace {

using Cell = std::array<std::int64_t, 3>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// One convolution step: out = cur (*) letters, both sorted lexicographically.
// Shifting a sorted list by a constant cell preserves order, so the result is
// a v-way merge of the shifted copies with equal cells accumulated.
void conv_step(const std::vector<Cell>& ck, const std::vector<double>& cm,
               const std::vector<Cell>& lk, const std::vector<double>& lp,
               std::vector<Cell>& ok, std::vector<double>& om, std::size_t cap) {
    const std::size_t v = lk.size();
    std::vector<std::size_t> pos(v, 0);
    ok.clear();
    om.clear();
    std::vector<Cell> head(v);
    auto refresh = [&](std::size_t t) {
        if (pos[t] < ck.size()) {
            head[t] = {ck[pos[t]][0] + lk[t][0], ck[pos[t]][1] + lk[t][1],
                       ck[pos[t]][2] + lk[t][2]};
        }
    };
    for (std::size_t t = 0; t < v; ++t) refresh(t);
    for (;;) {
        bool any = false;
        Cell best{};
        for (std::size_t t = 0; t < v; ++t) {
            if (pos[t] >= ck.size()) continue;
            if (!any || head[t] < best) {
                best = head[t];
                any = true;
            }
        }
        if (!any) break;
        double m = 0.0;
        for (std::size_t t = 0; t < v; ++t) {
            while (pos[t] < ck.size() && head[t] == best) {
                m += cm[pos[t]] * lp[t];
                ++pos[t];
                refresh(t);
            }
        }
        ok.push_back(best);
        om.push_back(m);
        if (ok.size() > cap)
            throw resource_error("spectrum cell cap exceeded while convolving; "
                                 "coarsen the grid or lower the blocklength");
    }
}

struct LetterLattice {
    std::vector<Cell> cells;    // deduplicated, sorted
    std::vector<double> probs;  // aligned
    std::array<double, 3> offset{{0.0, 0.0, 0.0}};
    std::array<double, 3> letter_slack{{0.0, 0.0, 0.0}}; // worst rounding error per axis
};

LetterLattice quantize_letters(const std::vector<std::vector<double>>& axis_values,
                               const std::vector<double>& probs, double eta) {
    const std::size_t dims = axis_values.size();
    const std::size_t nl = probs.size();
    LetterLattice out;
    for (std::size_t j = 0; j < dims; ++j) {
        double mn = kInf;
        for (std::size_t x = 0; x < nl; ++x) {
            if (probs[x] <= 0.0) continue;
            if (!std::isfinite(axis_values[j][x]))
                throw config_error("iid_spectrum: statistic values must be finite");
            mn = std::min(mn, axis_values[j][x]);
        }
        out.offset[j] = std::isfinite(mn) ? mn : 0.0;
    }
    std::vector<std::pair<Cell, double>> pts;
    for (std::size_t x = 0; x < nl; ++x) {
        if (probs[x] <= 0.0) continue;
        Cell c{0, 0, 0};
        for (std::size_t j = 0; j < dims; ++j) {
            c[j] = std::llround((axis_values[j][x] - out.offset[j]) / eta);
            double err = std::fabs(axis_values[j][x] - (out.offset[j] + c[j] * eta));
            out.letter_slack[j] = std::max(out.letter_slack[j], err);
        }
        pts.emplace_back(c, probs[x]);
    }
    if (pts.empty()) throw config_error("iid_spectrum: statistic has no probability mass");
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [c, p] : pts) {
        if (!out.cells.empty() && out.cells.back() == c)
            out.probs.back() += p;
        else {
            out.cells.push_back(c);
            out.probs.push_back(p);
        }
    }
    return out;
}

// log C(n+v-1, v-1): upper bound on the number of distinct n-letter sums of v
// lattice points.
double log_composition_bound(std::size_t n, std::size_t v) {
    return std::lgamma(static_cast<double>(n + v)) -
           std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(v));
}

double auto_eta(const std::vector<std::vector<double>>& axis_values,
                const std::vector<double>& probs) {
    double maxrange = 0.0;
    for (const auto& axis : axis_values) {
        double mn = kInf, mx = -kInf;
        for (std::size_t x = 0; x < probs.size(); ++x) {
            if (probs[x] <= 0.0) continue;
            mn = std::min(mn, axis[x]);
            mx = std::max(mx, axis[x]);
        }
        if (std::isfinite(mn)) maxrange = std::max(maxrange, mx - mn);
    }
    if (maxrange <= 0.0) return 1.0;
    return axis_values.size() == 1 ? maxrange / 65536.0 : maxrange / 1024.0;
}

// Estimated worst-case occupied cells of the n-fold spectrum: the smaller of
// the per-axis span product and the composition count of distinct sums.
double estimate_cells(const LetterLattice& lat, std::size_t dims, std::size_t n) {
    double span = 1.0;
    for (std::size_t j = 0; j < dims; ++j) {
        std::int64_t mn = lat.cells.front()[j], mx = mn;
        for (const Cell& c : lat.cells) {
            mn = std::min(mn, c[j]);
            mx = std::max(mx, c[j]);
        }
        span *= static_cast<double>(n) * static_cast<double>(mx - mn) + 1.0;
        if (span > 1e18) return 1e18;
    }
    double lc = log_composition_bound(n, lat.cells.size());
    double comp = lc > 60.0 ? 1e18 : std::exp(lc);
    return std::min(span, comp);
}

void validate_statistic(const std::vector<std::vector<double>>& axis_values,
                        const std::vector<double>& probs) {
    if (axis_values.empty() || axis_values.size() > 3)
        throw config_error("statistic must have between one and three axes");
    for (const auto& axis : axis_values)
        if (axis.size() != probs.size())
            throw config_error("statistic axes must align with the probability vector");
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw config_error("statistic probabilities must be non-negative");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw config_error("statistic probabilities must sum to one");
}

TailBracket clamp_bracket(double lo, double hi) {
    TailBracket b;
    b.lower = std::max(0.0, std::min(1.0, lo));
    b.upper = std::max(0.0, std::min(1.0, hi));
    if (b.lower > b.upper) b.lower = b.upper;
    return b;
}

} // namespace

double SpectrumPmf::total_mass() const {
    double s = 0.0;
    for (double m : masses) s += m;
    return s;
}

double SpectrumPmf::axis_value(std::size_t idx, int axis) const {
    return static_cast<double>(n) * offset[static_cast<std::size_t>(axis)] +
           static_cast<double>(cells[idx][static_cast<std::size_t>(axis)]) * grid_width;
}

SpectrumPmf iid_spectrum(const std::vector<std::vector<double>>& axis_values,
                         const std::vector<double>& probs, std::size_t n, double eta,
                         std::size_t cell_cap) {
    validate_statistic(axis_values, probs);
    if (n < 1) throw config_error("iid_spectrum: blocklength must be at least one");
    if (!(eta > 0.0)) throw config_error("iid_spectrum: grid width must be positive");

    LetterLattice lat = quantize_letters(axis_values, probs, eta);

    SpectrumPmf sp;
    sp.grid_width = eta;
    sp.dims = static_cast<int>(axis_values.size());
    sp.n = n;
    sp.offset = lat.offset;
    for (std::size_t j = 0; j < 3; ++j)
        sp.slack[j] = static_cast<double>(n) * lat.letter_slack[j];
    sp.cells = lat.cells;
    sp.masses = lat.probs;

    std::vector<Cell> next_cells;
    std::vector<double> next_masses;
    for (std::size_t i = 1; i < n; ++i) {
        conv_step(sp.cells, sp.masses, lat.cells, lat.probs, next_cells, next_masses,
                  cell_cap);
        sp.cells.swap(next_cells);
        sp.masses.swap(next_masses);
    }
    return sp;
}

TailBracket spectrum_tail(const SpectrumPmf& sp, double threshold) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < sp.cells.size(); ++i) {
        double v = sp.axis_value(i, 0);
        if (v - sp.slack[0] >= threshold) lo += sp.masses[i];
        if (v + sp.slack[0] >= threshold) hi += sp.masses[i];
    }
    return clamp_bracket(lo, hi);
}

TailBracket spectrum_union_tail(const SpectrumPmf& sp,
                                const std::vector<double>& thresholds) {
    if (thresholds.size() != static_cast<std::size_t>(sp.dims))
        throw config_error("union tail: one threshold per axis is required");
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < sp.cells.size(); ++i) {
        bool definite = false, possible = false;
        for (int j = 0; j < sp.dims; ++j) {
            double v = sp.axis_value(i, j);
            double s = sp.slack[static_cast<std::size_t>(j)];
            if (v - s >= thresholds[static_cast<std::size_t>(j)]) definite = true;
            if (v + s >= thresholds[static_cast<std::size_t>(j)]) possible = true;
        }
        if (definite) lo += sp.masses[i];
        if (possible) hi += sp.masses[i];
    }
    return clamp_bracket(lo, hi);
}

BerryEsseenTail berry_esseen_tail(double mean, double var, double third_abs,
                                  std::size_t n, double threshold) {
    if (!(var > 0.0))
        throw config_error("berry_esseen_tail: variance must be positive; a "
                           "degenerate statistic needs the exact point-mass formula");
    BerryEsseenTail out;
    double z = (threshold - static_cast<double>(n) * mean) /
               std::sqrt(static_cast<double>(n) * var);
    out.gauss_tail = gaussian_sf(z);
    out.be_radius = 6.0 * third_abs / (std::sqrt(static_cast<double>(n)) *
                                       std::pow(var, 1.5));
    return out;
}

McTail monte_carlo_tail(const std::vector<std::vector<double>>& axis_values,
                        const std::vector<double>& probs, std::size_t n,
                        const std::vector<double>& thresholds, std::size_t samples,
                        std::uint64_t seed) {
    validate_statistic(axis_values, probs);
    if (thresholds.size() != axis_values.size())
        throw config_error("monte_carlo_tail: one threshold per axis is required");
    if (samples < 1) throw config_error("monte_carlo_tail: need at least one sample");

    // Letters with zero mass are excluded from the sampling table.
    std::vector<std::size_t> support;
    std::vector<double> cum;
    double acc = 0.0;
    for (std::size_t x = 0; x < probs.size(); ++x) {
        if (probs[x] <= 0.0) continue;
        acc += probs[x];
        support.push_back(x);
        cum.push_back(acc);
    }
    cum.back() = 1.0;

    const std::size_t dims = axis_values.size();
    Rng rng(seed);
    std::size_t hits = 0;
    std::array<double, 3> sums{};
    for (std::size_t s = 0; s < samples; ++s) {
        sums = {0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            double u = rng.next_u01();
            std::size_t idx = static_cast<std::size_t>(
                std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
            if (idx >= support.size()) idx = support.size() - 1;
            const std::size_t x = support[idx];
            for (std::size_t j = 0; j < dims; ++j) sums[j] += axis_values[j][x];
        }
        for (std::size_t j = 0; j < dims; ++j)
            if (sums[j] >= thresholds[j]) {
                ++hits;
                break;
            }
    }
    McTail out;
    out.estimate = static_cast<double>(hits) / static_cast<double>(samples);
    out.radius = 3.0 * std::sqrt(out.estimate * (1.0 - out.estimate) /
                                 static_cast<double>(samples));
    return out;
}

namespace {

// Shared evaluation core: bracket the (union) tail of the summed statistic by
// the requested method, recording what was actually used.
void evaluate_tail(const std::vector<std::vector<double>>& axes,
                   const std::vector<double>& probs,
                   const std::vector<double>& thresholds, std::size_t n,
                   const ConverseOptions& opts, BoundReport& rep) {
    double eta = opts.eta > 0.0 ? opts.eta : auto_eta(axes, probs);
    std::string method = opts.method;
    if (method == "auto") {
        LetterLattice lat = quantize_letters(axes, probs, eta);
        method = estimate_cells(lat, axes.size(), n) <=
                         static_cast<double>(opts.cell_cap)
                     ? "exact-dp"
                     : "monte-carlo";
    }
    if (method == "exact-dp") {
        SpectrumPmf sp = iid_spectrum(axes, probs, n, eta, opts.cell_cap);
        rep.tail = axes.size() == 1 ? spectrum_tail(sp, thresholds[0])
                                    : spectrum_union_tail(sp, thresholds);
        rep.eta = eta;
    } else if (method == "monte-carlo") {
        McTail mc = monte_carlo_tail(axes, probs, n, thresholds, opts.samples,
                                     opts.seed);
        rep.tail = clamp_bracket(mc.estimate - mc.radius, mc.estimate + mc.radius);
        rep.eta = 0.0;
    } else {
        throw config_error("unknown tail-evaluation method: " + method);
    }
    rep.method = method;
}

} // namespace

BoundReport kaspi_converse(const TiltedTable& tilted, std::size_t n, double logM,
                           double gamma, const ConverseOptions& opts) {
    if (gamma < 0.0) throw config_error("kaspi_converse: gamma must be non-negative");
    if (n < 1) throw config_error("kaspi_converse: blocklength must be at least one");

    BoundReport rep;
    rep.n = n;
    rep.logM = logM;
    rep.gamma = gamma;
    rep.penalty = std::exp(-static_cast<double>(n) * gamma);
    const double threshold = logM + static_cast<double>(n) * gamma;

    if (opts.method == "berry-esseen") {
        BerryEsseenTail be = berry_esseen_tail(tilted.mean, tilted.variance,
                                               tilted.third_abs_moment, n, threshold);
        rep.tail = clamp_bracket(be.gauss_tail - be.be_radius,
                                 be.gauss_tail + be.be_radius);
        rep.method = "berry-esseen";
    } else {
        evaluate_tail({tilted.values}, tilted.probs, {threshold}, n, opts, rep);
    }
    rep.lower_bound_on_excess_prob = std::max(0.0, rep.tail.lower - rep.penalty);
    return rep;
}

BoundReport fy_converse(const FyTiltedBundle& bundle, double s_star, std::size_t n,
                        double logM1, double logM2, double gamma,
                        const ConverseOptions& opts) {
    if (gamma < 0.0) throw config_error("fy_converse: gamma must be non-negative");
    if (n < 1) throw config_error("fy_converse: blocklength must be at least one");
    if (opts.method == "berry-esseen")
        throw config_error("fy_converse: the gaussian method applies to the "
                           "single-statistic bound only");

    BoundReport rep;
    rep.n = n;
    rep.logM1 = logM1;
    rep.logM2 = logM2;
    rep.gamma = gamma;
    const double ng = static_cast<double>(n) * gamma;
    rep.penalty = 4.0 * std::exp(-ng);
    const std::vector<double> thresholds = {
        logM1 + ng,
        logM2 + ng,
        logM1 + logM2 + s_star * logM1 + (1.0 + s_star) * ng,
    };
    evaluate_tail({bundle.j_d1, bundle.neglog_py, bundle.j_fy}, bundle.probs,
                  thresholds, n, opts, rep);
    rep.lower_bound_on_excess_prob = std::max(0.0, rep.tail.lower - rep.penalty);
    return rep;
}

} // namespace fbl
