#include "fbl/rd_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fbl/errors.hpp"

namespace fbl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Mass floor injected when re-entering the inner loop with a warm state, so
// that support pruned at one multiplier can be rediscovered at another.
constexpr double kWarmFloor = 1e-12;
// Multipliers below this are reported as exactly zero (inactive constraint).
constexpr double kZeroSnap = 1e-9;
// When a multiplier bisection keeps its lower end pinned at 0 and the upper
// end falls below this, the constraint is almost surely inactive; probing
// exactly 0 with the warm state avoids the ever-slower drift along the
// value-flat manifold that small positive multipliers induce.
constexpr double kInactiveJump = 1e-3;
// Reproduction letters below this mass perturb every reported quantity by
// less than the solver tolerances, so their growth factors are not allowed to
// hold up the search loop: a support-critical letter (growth exactly 1 at
// zero mass) otherwise drags the iteration into sublinear convergence.
constexpr double kGrowthMassFloor = 1e-9;
// In the strict (polish) mode, overshoot on sub-floor letters is still
// flagged beyond this, so genuine support discovery is not abandoned.
constexpr double kTinyMassOvershoot = 1e-7;
// Residual scale for complementary slackness: bisections continue until
// multiplier * |distortion residual| falls below this.
constexpr double kSlackTol = 1e-9;
double safe_log(double v) { return v > 0.0 ? std::log(v) : -kInf; }

void add_floor_normalize(std::vector<double>& v, double floor) {
    double sum = 0.0;
    for (double& e : v) {
        e += floor;
        sum += e;
    }
    for (double& e : v) e /= sum;
}

void add_floor_normalize_rows(std::vector<double>& v, std::size_t rows,
                              std::size_t cols, double floor) {
    for (std::size_t r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            v[r * cols + c] += floor;
            sum += v[r * cols + c];
        }
        for (std::size_t c = 0; c < cols; ++c) v[r * cols + c] /= sum;
    }
}

void prune_normalize(std::vector<double>& v, double tol) {
    double sum = 0.0;
    for (double& e : v) {
        if (e < tol) e = 0.0;
        sum += e;
    }
    if (sum > 0.0)
        for (double& e : v) e /= sum;
}

} // namespace

// ===========================================================================
// Classical rate-distortion
// ===========================================================================

namespace {

struct RdInner {
    const Pmf& px;
    const DistortionMatrix& dm;
    std::size_t nx, m;
    std::vector<double> q, ch, log_alpha;

    RdInner(const Pmf& p, const DistortionMatrix& d)
        : px(p), dm(d), nx(p.size()), m(d.nxhat()),
          q(m, 1.0 / static_cast<double>(m)), ch(nx * m, 0.0), log_alpha(nx, 0.0) {}

    // Channel update from the current marginal; returns the Lagrangian
    // min over channels of [I + t E d] at the current reference marginal.
    double update_channels(double t) {
        double value = 0.0;
        for (std::size_t x = 0; x < nx; ++x) {
            double mx = -kInf;
            for (std::size_t a = 0; a < m; ++a) {
                double e = safe_log(q[a]) - t * dm.at(x, a);
                if (e > mx) mx = e;
            }
            double sum = 0.0;
            for (std::size_t a = 0; a < m; ++a)
                sum += std::exp(safe_log(q[a]) - t * dm.at(x, a) - mx);
            double lse = mx + std::log(sum);
            log_alpha[x] = -lse;
            for (std::size_t a = 0; a < m; ++a)
                ch[x * m + a] = std::exp(safe_log(q[a]) - t * dm.at(x, a) - lse);
            value += px[x] * (-lse);
        }
        return value;
    }

    // Growth factor of reproduction letter a under the current channels:
    // equals 1 on the support at a fixed point.
    double growth(std::size_t a, double t) const {
        double g = 0.0;
        for (std::size_t x = 0; x < nx; ++x)
            g += px[x] * std::exp(log_alpha[x] - t * dm.at(x, a));
        return g;
    }

    void refresh_marginal(double prune_tol) {
        std::vector<double> nq(m, 0.0);
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t a = 0; a < m; ++a) nq[a] += px[x] * ch[x * m + a];
        prune_normalize(nq, prune_tol);
        q = std::move(nq);
    }

    double achieved() const {
        double d = 0.0;
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t a = 0; a < m; ++a) d += px[x] * ch[x * m + a] * dm.at(x, a);
        return d;
    }

    double objective() const {
        std::vector<double> ind(m, 0.0);
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t a = 0; a < m; ++a) ind[a] += px[x] * ch[x * m + a];
        double mi = 0.0;
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t a = 0; a < m; ++a) {
                double c = ch[x * m + a];
                if (c > 0.0 && px[x] > 0.0) mi += px[x] * c * std::log(c / ind[a]);
            }
        return std::max(mi, 0.0);
    }

    std::size_t converge(double t, const SolverOptions& o, double tol, bool two_sided = false,
                         bool allow_partial = false) {
        double prev = kInf;
        for (std::size_t it = 0; it < o.max_iters; ++it) {
            double L = update_channels(t);
            double ratio_res = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                double g = growth(a, t);
                double over = g - 1.0;
                if (q[a] > kGrowthMassFloor)
                    ratio_res = std::max(ratio_res, two_sided ? std::fabs(over)
                                                              : std::max(over, 0.0));
                else if (two_sided && over > kTinyMassOvershoot)
                    ratio_res = std::max(ratio_res, over);
            }
            refresh_marginal(o.prune_tol);
            bool value_ok = std::fabs(prev - L) <= tol * (1.0 + std::fabs(L));
            prev = L;
            if (value_ok && ratio_res <= tol) return it + 1;
        }
        if (allow_partial) return o.max_iters;
        throw convergence_error("rate-distortion inner loop exhausted its iteration budget");
    }
};

} // namespace

RdSolution solve_rd(const Pmf& px, const DistortionMatrix& d, double D,
                    const SolverOptions& opts) {
    if (px.size() != d.nx()) throw config_error("solve_rd: alphabet size mismatch");
    const std::size_t nx = px.size(), m = d.nxhat();

    double dmin = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
        double best = kInf;
        for (std::size_t a = 0; a < m; ++a) best = std::min(best, d.at(x, a));
        dmin += px[x] * best;
    }
    if (D < dmin - 1e-12)
        throw infeasible_error("solve_rd: distortion target below the minimum achievable");

    RdSolution sol;
    sol.iterations = 0;

    // Free reproduction: the best single letter costs no rate.
    std::size_t bstar = 0;
    double dfree = kInf;
    for (std::size_t a = 0; a < m; ++a) {
        double e = 0.0;
        for (std::size_t x = 0; x < nx; ++x) e += px[x] * d.at(x, a);
        if (e < dfree) {
            dfree = e;
            bstar = a;
        }
    }
    if (dfree <= D + 1e-15) {
        std::vector<double> q(m, 0.0), ch(nx * m, 0.0);
        q[bstar] = 1.0;
        for (std::size_t x = 0; x < nx; ++x) ch[x * m + bstar] = 1.0;
        sol.rate = 0.0;
        sol.t = 0.0;
        sol.marginal = Pmf(q);
        sol.channel = CondPmf(ch, nx, m);
        sol.achieved_d = dfree;
        sol.kkt_residual = 0.0;
        return sol;
    }

    RdInner inner(px, d);
    std::size_t iters = 0;
    auto eval = [&](double t) {
        add_floor_normalize(inner.q, kWarmFloor);
        iters += inner.converge(t, opts, opts.tol);
        return inner.achieved() - D;
    };

    double lo = 0.0, hi = opts.multiplier_hi;
    int doublings = 0;
    bool asymptote = false;
    for (;;) {
        double f = eval(hi);
        if (f <= 0.0) break;
        if (f <= opts.bisect_tol) { // boundary target: residual never flips sign
            asymptote = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
        if (++doublings > 40)
            throw convergence_error("solve_rd: multiplier bracket exhausted");
    }
    double t = hi;
    for (int k = 0; !asymptote && k < 90; ++k) {
        double mid = 0.5 * (lo + hi);
        double f = eval(mid);
        if (std::fabs(f) <= opts.bisect_tol && mid * std::fabs(f) <= kSlackTol) {
            t = mid;
            break;
        }
        if (f > 0.0)
            lo = mid;
        else
            hi = mid;
        t = hi;
        if (hi - lo <= 1e-13 * std::max(1.0, hi)) break;
    }
    // Final polish at the accepted multiplier, then one channel-only update so
    // the packaged tables are exactly consistent with the packaged marginal.
    add_floor_normalize(inner.q, kWarmFloor);
    iters += inner.converge(t, opts, std::min(opts.tol, 1e-12), /*two_sided=*/true,
                            /*allow_partial=*/true);
    inner.update_channels(t);

    sol.rate = inner.objective();
    sol.t = t < kZeroSnap ? 0.0 : t;
    sol.marginal = Pmf(inner.q);
    sol.channel = CondPmf(inner.ch, nx, m);
    sol.achieved_d = inner.achieved();
    sol.iterations = iters;

    // Stationarity + slackness residual.
    double res = std::fabs(sol.t * (sol.achieved_d - D));
    res = std::max(res, std::max(0.0, sol.achieved_d - D - 1e-9));
    for (std::size_t a = 0; a < m; ++a)
        res = std::max(res, std::max(0.0, inner.growth(a, t) - 1.0));
    sol.kkt_residual = res;
    return sol;
}

std::vector<double> rd_tilted(const Pmf& px, const DistortionMatrix& d, double D,
                              const RdSolution& sol) {
    if (px.size() != d.nx()) throw config_error("rd_tilted: alphabet size mismatch");
    std::vector<double> j(px.size(), 0.0);
    for (std::size_t x = 0; x < px.size(); ++x) {
        double sum = 0.0;
        for (std::size_t a = 0; a < sol.marginal.size(); ++a)
            sum += sol.marginal[a] * std::exp(-sol.t * (d.at(x, a) - D));
        j[x] = -std::log(sum);
    }
    return j;
}

// ===========================================================================
// Two decoders with encoder side information
// ===========================================================================

KaspiProblem::KaspiProblem(JointPmf joint, DistortionMatrix dd1, DistortionMatrix dd2,
                           double Dt1, double Dt2)
    : pxy(std::move(joint)), d1(std::move(dd1)), d2(std::move(dd2)), D1(Dt1), D2(Dt2) {
    if (d1.nx() != pxy.nx() || d2.nx() != pxy.nx())
        throw config_error("KaspiProblem: distortion matrices must match the source alphabet");
    if (!std::isfinite(D1) || !std::isfinite(D2) || D1 < 0.0 || D2 < 0.0)
        throw config_error("KaspiProblem: distortion targets must be finite and >= 0");
}

KaspiState kaspi_init(const KaspiProblem& prob) {
    KaspiState st;
    st.nx = prob.pxy.nx();
    st.ny = prob.pxy.ny();
    st.m1 = prob.d1.nxhat();
    st.m2 = prob.d2.nxhat();
    st.q1.assign(st.m1, 1.0 / static_cast<double>(st.m1));
    st.q2.assign(st.ny * st.m1 * st.m2, 1.0 / static_cast<double>(st.m2));
    st.ch1.assign(st.nx * st.ny * st.m1, 1.0 / static_cast<double>(st.m1));
    st.ch2.assign(st.nx * st.ny * st.m1 * st.m2, 1.0 / static_cast<double>(st.m2));
    st.alpha.assign(st.nx * st.ny, 1.0);
    st.alpha2.assign(st.nx * st.ny * st.m1, 1.0);
    st.log_alpha.assign(st.nx * st.ny, 0.0);
    st.lagrangian = kInf;
    return st;
}

namespace {

// Channel/table update at fixed multipliers (no marginal refresh). Returns the
// Lagrangian value at the current reference marginals.
double kaspi_update_channels(const KaspiProblem& prob, KaspiState& st,
                             double l1, double l2, std::vector<double>& la2buf) {
    const std::size_t nx = st.nx, ny = st.ny, m1 = st.m1, m2 = st.m2;
    la2buf.resize(nx * ny * m1);
    st.log_alpha.resize(nx * ny);
    double value = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
        for (std::size_t y = 0; y < ny; ++y) {
            const std::size_t xy = x * ny + y;
            // log alpha2(x,y,a) = -log sum_b q2(b|y,a) exp(-l2 d2(x,b))
            for (std::size_t a = 0; a < m1; ++a) {
                double mx = -kInf;
                for (std::size_t b = 0; b < m2; ++b) {
                    double e = safe_log(st.q2[(y * m1 + a) * m2 + b]) - l2 * prob.d2.at(x, b);
                    if (e > mx) mx = e;
                }
                double sum = 0.0;
                for (std::size_t b = 0; b < m2; ++b)
                    sum += std::exp(safe_log(st.q2[(y * m1 + a) * m2 + b]) -
                                    l2 * prob.d2.at(x, b) - mx);
                double la2 = -(mx + std::log(sum));
                la2buf[xy * m1 + a] = la2;
                st.alpha2[xy * m1 + a] = std::exp(la2);
            }
            // log alpha(x,y) = -log sum_a q1(a) exp(-l1 d1(x,a) - log alpha2)
            double mx = -kInf;
            for (std::size_t a = 0; a < m1; ++a) {
                double e = safe_log(st.q1[a]) - l1 * prob.d1.at(x, a) - la2buf[xy * m1 + a];
                if (e > mx) mx = e;
            }
            double sum = 0.0;
            for (std::size_t a = 0; a < m1; ++a)
                sum += std::exp(safe_log(st.q1[a]) - l1 * prob.d1.at(x, a) -
                                la2buf[xy * m1 + a] - mx);
            double lse = mx + std::log(sum);
            double la = -lse;
            st.alpha[xy] = std::exp(la);
            st.log_alpha[xy] = la;
            value += prob.pxy.at(x, y) * la;
            for (std::size_t a = 0; a < m1; ++a) {
                st.ch1[xy * m1 + a] = std::exp(safe_log(st.q1[a]) - l1 * prob.d1.at(x, a) -
                                               la2buf[xy * m1 + a] - lse);
                for (std::size_t b = 0; b < m2; ++b)
                    st.ch2[(xy * m1 + a) * m2 + b] =
                        std::exp(la2buf[xy * m1 + a] +
                                 safe_log(st.q2[(y * m1 + a) * m2 + b]) -
                                 l2 * prob.d2.at(x, b));
            }
        }
    }
    return value;
}

// Residual of the reproduction growth factors, which equal 1 on the support
// at a fixed point. In one-sided mode only overshoot (factor above 1) counts:
// letters may still be slowly dying, which harms nothing downstream. The
// two-sided mode is used by the final polish pass.
double kaspi_growth_residual(const KaspiProblem& prob, const KaspiState& st,
                             double l1, double l2, const std::vector<double>& la2buf,
                             bool two_sided) {
    const std::size_t nx = st.nx, ny = st.ny, m1 = st.m1, m2 = st.m2;
    double res = 0.0;
    auto score = [&](double g, double mass) {
        double over = g - 1.0;
        if (mass > kGrowthMassFloor)
            res = std::max(res, two_sided ? std::fabs(over) : std::max(over, 0.0));
        else if (two_sided && over > kTinyMassOvershoot)
            res = std::max(res, over);
    };
    for (std::size_t a = 0; a < m1; ++a) {
        double g = 0.0;
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < ny; ++y) {
                const std::size_t xy = x * ny + y;
                g += prob.pxy.at(x, y) *
                     std::exp(st.log_alpha[xy] - l1 * prob.d1.at(x, a) -
                              la2buf[xy * m1 + a]);
            }
        score(g, st.q1[a]);
    }
    // Conditional second-stage rows.
    for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t a = 0; a < m1; ++a) {
            double w = 0.0;
            for (std::size_t x = 0; x < nx; ++x)
                w += prob.pxy.at(x, y) * st.ch1[(x * ny + y) * m1 + a];
            if (w <= 1e-10) continue;
            for (std::size_t b = 0; b < m2; ++b) {
                double g = 0.0;
                for (std::size_t x = 0; x < nx; ++x) {
                    const std::size_t xy = x * ny + y;
                    g += prob.pxy.at(x, y) * st.ch1[xy * m1 + a] *
                         std::exp(la2buf[xy * m1 + a] - l2 * prob.d2.at(x, b));
                }
                score(g / w, st.q2[(y * m1 + a) * m2 + b]);
            }
        }
    return res;
}

void kaspi_refresh_marginals(const KaspiProblem& prob, KaspiState& st, double prune_tol) {
    const std::size_t nx = st.nx, ny = st.ny, m1 = st.m1, m2 = st.m2;
    std::vector<double> nq1(m1, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t a = 0; a < m1; ++a)
                nq1[a] += prob.pxy.at(x, y) * st.ch1[(x * ny + y) * m1 + a];
    prune_normalize(nq1, prune_tol);
    st.q1 = std::move(nq1);

    for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t a = 0; a < m1; ++a) {
            double w = 0.0;
            std::vector<double> row(m2, 0.0);
            for (std::size_t x = 0; x < nx; ++x) {
                const std::size_t xy = x * ny + y;
                double wx = prob.pxy.at(x, y) * st.ch1[xy * m1 + a];
                w += wx;
                for (std::size_t b = 0; b < m2; ++b)
                    row[b] += wx * st.ch2[(xy * m1 + a) * m2 + b];
            }
            if (w <= 0.0) continue; // unreachable cell: keep the previous reference
            for (double& e : row) e /= w;
            prune_normalize(row, prune_tol);
            for (std::size_t b = 0; b < m2; ++b) st.q2[(y * m1 + a) * m2 + b] = row[b];
        }
}

} // namespace

double kaspi_fixed_point_step(const KaspiProblem& prob, KaspiState& st,
                              double l1, double l2) {
    std::vector<double> la2buf;
    double L = kaspi_update_channels(prob, st, l1, l2, la2buf);
    kaspi_refresh_marginals(prob, st, 1e-15);
    st.lagrangian = L;
    return L;
}

void kaspi_distortions(const KaspiProblem& prob, const KaspiState& st,
                       double& ed1, double& ed2) {
    const std::size_t nx = st.nx, ny = st.ny, m1 = st.m1, m2 = st.m2;
    ed1 = 0.0;
    ed2 = 0.0;
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t a = 0; a < m1; ++a) {
                const std::size_t xy = x * ny + y;
                double w = prob.pxy.at(x, y) * st.ch1[xy * m1 + a];
                if (w <= 0.0) continue;
                ed1 += w * prob.d1.at(x, a);
                for (std::size_t b = 0; b < m2; ++b)
                    ed2 += w * st.ch2[(xy * m1 + a) * m2 + b] * prob.d2.at(x, b);
            }
}

double kaspi_objective(const KaspiProblem& prob, const KaspiState& st) {
    const std::size_t nx = st.nx, ny = st.ny, m1 = st.m1, m2 = st.m2;
    // I(XY; X1hat) with the induced reproduction marginal.
    std::vector<double> ind1(m1, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t a = 0; a < m1; ++a)
                ind1[a] += prob.pxy.at(x, y) * st.ch1[(x * ny + y) * m1 + a];
    double i1 = 0.0;
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t a = 0; a < m1; ++a) {
                double w = prob.pxy.at(x, y) * st.ch1[(x * ny + y) * m1 + a];
                if (w > 0.0) i1 += w * std::log(st.ch1[(x * ny + y) * m1 + a] / ind1[a]);
            }
    // I(X; X2hat | Y, X1hat) with the induced conditional marginal.
    double i2 = 0.0;
    for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t a = 0; a < m1; ++a) {
            double w = 0.0;
            std::vector<double> ind2(m2, 0.0);
            for (std::size_t x = 0; x < nx; ++x) {
                const std::size_t xy = x * ny + y;
                double wx = prob.pxy.at(x, y) * st.ch1[xy * m1 + a];
                w += wx;
                for (std::size_t b = 0; b < m2; ++b)
                    ind2[b] += wx * st.ch2[(xy * m1 + a) * m2 + b];
            }
            if (w <= 0.0) continue;
            for (double& e : ind2) e /= w;
            for (std::size_t x = 0; x < nx; ++x) {
                const std::size_t xy = x * ny + y;
                double wx = prob.pxy.at(x, y) * st.ch1[xy * m1 + a];
                if (wx <= 0.0) continue;
                for (std::size_t b = 0; b < m2; ++b) {
                    double c = st.ch2[(xy * m1 + a) * m2 + b];
                    if (c > 0.0) i2 += wx * c * std::log(c / ind2[b]);
                }
            }
        }
    return std::max(i1, 0.0) + std::max(i2, 0.0);
}

namespace {

std::size_t kaspi_converge(const KaspiProblem& prob, KaspiState& st, double l1,
                           double l2, const SolverOptions& o, double tol,
                           bool allow_partial = false, bool two_sided = false) {
    std::vector<double> la2buf;
    double prev = kInf;
    for (std::size_t it = 0; it < o.max_iters; ++it) {
        double L = kaspi_update_channels(prob, st, l1, l2, la2buf);
        double ratio_res = kaspi_growth_residual(prob, st, l1, l2, la2buf, two_sided);
        kaspi_refresh_marginals(prob, st, o.prune_tol);
        bool value_ok = std::fabs(prev - L) <= tol * (1.0 + std::fabs(L));
        prev = L;
        st.lagrangian = L;
        if (value_ok && ratio_res <= tol) return it + 1;
    }
    if (allow_partial) return o.max_iters;
    throw convergence_error("two-decoder inner loop exhausted its iteration budget");
}

// With the second-stage multiplier at zero, alpha2 is identically 1 and the
// second stage is rate-free; give it the deterministic per-(y, x1hat)
// reproduction minimizing E d2, which is the infimum over Lagrangian
// minimizers. Returns the resulting E d2.
double kaspi_complete_free_d2(const KaspiProblem& prob, KaspiState& st) {
    const std::size_t nx = st.nx, ny = st.ny, m1 = st.m1, m2 = st.m2;
    double ed2 = 0.0;
    for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t a = 0; a < m1; ++a) {
            double best = kInf;
            std::size_t bstar = 0;
            for (std::size_t b = 0; b < m2; ++b) {
                double cost = 0.0;
                for (std::size_t x = 0; x < nx; ++x)
                    cost += prob.pxy.at(x, y) * st.ch1[(x * ny + y) * m1 + a] *
                            prob.d2.at(x, b);
                if (cost < best - 1e-18) {
                    best = cost;
                    bstar = b;
                }
            }
            ed2 += best;
            for (std::size_t b = 0; b < m2; ++b)
                st.q2[(y * m1 + a) * m2 + b] = (b == bstar) ? 1.0 : 0.0;
            for (std::size_t x = 0; x < nx; ++x) {
                const std::size_t xy = x * ny + y;
                st.alpha2[xy * m1 + a] = 1.0;
                for (std::size_t b = 0; b < m2; ++b)
                    st.ch2[(xy * m1 + a) * m2 + b] = (b == bstar) ? 1.0 : 0.0;
            }
        }
    return ed2;
}

} // namespace

KaspiSearchResult multiplier_search_kaspi(const KaspiProblem& prob,
                                          const SolverOptions& o) {
    const std::size_t nx = prob.pxy.nx(), ny = prob.pxy.ny();
    const std::size_t m1 = prob.d1.nxhat(), m2 = prob.d2.nxhat();
    (void)ny;

    double dmin1 = 0.0, dmin2 = 0.0;
    Pmf px = prob.pxy.marginal_x();
    for (std::size_t x = 0; x < nx; ++x) {
        double b1 = kInf, b2 = kInf;
        for (std::size_t a = 0; a < m1; ++a) b1 = std::min(b1, prob.d1.at(x, a));
        for (std::size_t b = 0; b < m2; ++b) b2 = std::min(b2, prob.d2.at(x, b));
        dmin1 += px[x] * b1;
        dmin2 += px[x] * b2;
    }
    if (prob.D1 < dmin1 - 1e-12 || prob.D2 < dmin2 - 1e-12)
        throw infeasible_error("two-decoder problem: distortion target below minimum achievable");

    KaspiSearchResult out;
    out.state = kaspi_init(prob);
    KaspiState& cur = out.state;
    std::size_t iters = 0;

    auto inner = [&](double l1, double l2) {
        add_floor_normalize(cur.q1, kWarmFloor);
        add_floor_normalize_rows(cur.q2, cur.ny * cur.m1, cur.m2, kWarmFloor);
        iters += kaspi_converge(prob, cur, l1, l2, o, o.tol);
    };

    // Solve the second-stage multiplier for a fixed l1; leaves cur at the
    // returned multiplier pair. The upfront zero probe is skipped when called
    // with a warm state that must not be disturbed: converging at a zero
    // multiplier pair collapses the channels onto the marginals and forgets
    // which optimizer the warm path had selected.
    auto solve_l2 = [&](double l1, bool probe_free = true) -> double {
        if (probe_free) {
            inner(l1, 0.0);
            double free_d2 = kaspi_complete_free_d2(prob, cur);
            if (free_d2 <= prob.D2 + o.bisect_tol) return 0.0;
        }
        double ed1 = 0.0, ed2 = 0.0;
        double lo = 0.0, hi = o.multiplier_hi;
        int doublings = 0;
        for (;;) {
            inner(l1, hi);
            kaspi_distortions(prob, cur, ed1, ed2);
            double f = ed2 - prob.D2;
            if (f <= 0.0) break;
            // When the target sits exactly on the achievable-region boundary
            // the residual stays positive for every finite multiplier; stop
            // chasing the asymptote once the violation is within tolerance.
            if (f <= o.bisect_tol) return hi;
            lo = hi;
            hi *= 2.0;
            if (++doublings > 40)
                throw convergence_error("second-stage multiplier bracket exhausted");
        }
        bool tried_zero = false;
        for (int k = 0; k < 90; ++k) {
            if (lo == 0.0 && hi <= kInactiveJump && !tried_zero) {
                tried_zero = true;
                inner(l1, 0.0);
                if (kaspi_complete_free_d2(prob, cur) <= prob.D2 + o.bisect_tol) return 0.0;
            }
            double mid = 0.5 * (lo + hi);
            inner(l1, mid);
            kaspi_distortions(prob, cur, ed1, ed2);
            double f = ed2 - prob.D2;
            if (std::fabs(f) <= o.bisect_tol && mid * std::fabs(f) <= kSlackTol)
                return mid;
            if (f > 0.0)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 1e-13 * std::max(1.0, hi)) break;
        }
        inner(l1, hi); // settle on the feasible side of the bracket
        return hi;
    };

    double ed1 = 0.0, ed2 = 0.0;
    double l2 = solve_l2(0.0);
    kaspi_distortions(prob, cur, ed1, ed2);
    double l1 = 0.0;
    if (ed1 - prob.D1 > o.bisect_tol) {
        double lo = 0.0, hi = o.multiplier_hi;
        int doublings = 0;
        bool asymptote = false;
        for (;;) {
            l2 = solve_l2(hi);
            kaspi_distortions(prob, cur, ed1, ed2);
            double f = ed1 - prob.D1;
            if (f <= 0.0) break;
            if (f <= o.bisect_tol) { // boundary target: residual never flips sign
                asymptote = true;
                break;
            }
            lo = hi;
            hi *= 2.0;
            if (++doublings > 40)
                throw convergence_error("first-stage multiplier bracket exhausted");
        }
        l1 = hi;
        bool settled = asymptote;
        bool tried_zero = false;
        for (int k = 0; !settled && k < 90; ++k) {
            if (lo == 0.0 && hi <= kInactiveJump && !tried_zero) {
                tried_zero = true;
                l2 = solve_l2(0.0, /*probe_free=*/false);
                kaspi_distortions(prob, cur, ed1, ed2);
                if (ed1 - prob.D1 <= o.bisect_tol) {
                    l1 = 0.0;
                    settled = true;
                    break;
                }
            }
            double mid = 0.5 * (lo + hi);
            l2 = solve_l2(mid);
            kaspi_distortions(prob, cur, ed1, ed2);
            double f = ed1 - prob.D1;
            if (std::fabs(f) <= o.bisect_tol && mid * std::fabs(f) <= kSlackTol) {
                l1 = mid;
                settled = true;
                break;
            }
            if (f > 0.0)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 1e-13 * std::max(1.0, hi)) break;
        }
        if (!settled) {
            l1 = hi;
            l2 = solve_l2(l1);
        }
    }

    out.lambda1 = l1 < kZeroSnap ? 0.0 : l1;
    out.lambda2 = l2 < kZeroSnap ? 0.0 : l2;
    out.iterations = iters;
    return out;
}

KaspiSolution solve_kaspi(const KaspiProblem& prob, const SolverOptions& o) {
    KaspiSearchResult sr = multiplier_search_kaspi(prob, o);
    KaspiState& st = sr.state;

    // Polish at the final multipliers, then one channel-only update so the
    // packaged channels are the exact tilts of the packaged marginals.
    SolverOptions po = o;
    po.max_iters = 200000;
    sr.iterations += kaspi_converge(prob, st, sr.lambda1, sr.lambda2, po,
                                    std::min(o.tol, 1e-12), /*allow_partial=*/true,
                                    /*two_sided=*/true);
    std::vector<double> la2buf;
    kaspi_update_channels(prob, st, sr.lambda1, sr.lambda2, la2buf);

    // A distortion target on the boundary of the achievable region drives a
    // multiplier to infinity; the search then stops at a large finite value
    // whose linear-domain tables may not be representable.
    for (double v : st.alpha)
        if (!std::isfinite(v))
            throw convergence_error(
                "two-decoder solution tables overflow: a distortion target lies on the "
                "achievable-region boundary and its multiplier diverges");
    for (double v : st.alpha2)
        if (!std::isfinite(v))
            throw convergence_error(
                "two-decoder solution tables overflow: a distortion target lies on the "
                "achievable-region boundary and its multiplier diverges");

    KaspiSolution sol;
    sol.lambda1 = sr.lambda1;
    sol.lambda2 = sr.lambda2;
    sol.rate = kaspi_objective(prob, st);
    sol.ch1 = CondPmf(st.ch1, st.nx * st.ny, st.m1);
    sol.ch2 = CondPmf(st.ch2, st.nx * st.ny * st.m1, st.m2);
    sol.marg1 = Pmf(st.q1);
    sol.ch2cond = CondPmf(st.q2, st.ny * st.m1, st.m2);
    sol.alpha_table = st.alpha;
    sol.alpha2_table = st.alpha2;
    kaspi_distortions(prob, st, sol.achieved_d1, sol.achieved_d2);
    sol.iterations = sr.iterations;
    sol.kkt_residual = verify_kkt_kaspi(prob, sol);
    return sol;
}

double verify_kkt_kaspi(const KaspiProblem& prob, const KaspiSolution& sol) {
    const std::size_t nx = prob.pxy.nx(), ny = prob.pxy.ny();
    const std::size_t m1 = prob.d1.nxhat(), m2 = prob.d2.nxhat();
    double res = 0.0;

    // Stationarity of both channels against the packaged tables.
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) {
            if (prob.pxy.at(x, y) <= kSupportTol) continue;
            const std::size_t xy = x * ny + y;
            for (std::size_t a = 0; a < m1; ++a) {
                double rhs = sol.alpha_table[xy] * sol.marg1[a] *
                             std::exp(-sol.lambda1 * prob.d1.at(x, a)) /
                             sol.alpha2_table[xy * m1 + a];
                res = std::max(res, std::fabs(sol.ch1.at(xy, a) - rhs));
                if (sol.marg1[a] <= 0.0) continue;
                for (std::size_t b = 0; b < m2; ++b) {
                    double rhs2 = sol.alpha2_table[xy * m1 + a] *
                                  sol.ch2cond.at(y * m1 + a, b) *
                                  std::exp(-sol.lambda2 * prob.d2.at(x, b));
                    res = std::max(res, std::fabs(sol.ch2.at(xy * m1 + a, b) - rhs2));
                }
            }
        }

    // Normalization of the alpha tables against the packaged marginals.
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) {
            if (prob.pxy.at(x, y) <= kSupportTol) continue;
            const std::size_t xy = x * ny + y;
            double s1 = 0.0;
            for (std::size_t a = 0; a < m1; ++a) {
                double s2 = 0.0;
                for (std::size_t b = 0; b < m2; ++b)
                    s2 += sol.ch2cond.at(y * m1 + a, b) *
                          std::exp(-sol.lambda2 * prob.d2.at(x, b));
                res = std::max(res, std::fabs(sol.alpha2_table[xy * m1 + a] * s2 - 1.0));
                s1 += sol.marg1[a] * std::exp(-sol.lambda1 * prob.d1.at(x, a)) /
                      sol.alpha2_table[xy * m1 + a];
            }
            res = std::max(res, std::fabs(sol.alpha_table[xy] * s1 - 1.0));
        }

    // Marginal consistency.
    for (std::size_t a = 0; a < m1; ++a) {
        double ind = 0.0;
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < ny; ++y)
                ind += prob.pxy.at(x, y) * sol.ch1.at(x * ny + y, a);
        res = std::max(res, std::fabs(ind - sol.marg1[a]));
    }

    // Primal feasibility and complementary slackness.
    res = std::max(res, std::max(0.0, sol.achieved_d1 - prob.D1 - 1e-9));
    res = std::max(res, std::max(0.0, sol.achieved_d2 - prob.D2 - 1e-9));
    res = std::max(res, std::fabs(sol.lambda1 * (sol.achieved_d1 - prob.D1)));
    res = std::max(res, std::fabs(sol.lambda2 * (sol.achieved_d2 - prob.D2)));
    return res;
}

// ===========================================================================
// Function-reconstruction sum-rate problem
// ===========================================================================

FuYeungProblem::FuYeungProblem(Pmf source, DetMap gmap, DistortionMatrix dd1,
                               DistortionMatrix dd2, double R1_budget, double Dt1,
                               double Dt2)
    : px(std::move(source)), g(std::move(gmap)), d1(std::move(dd1)),
      d2(std::move(dd2)), R1(R1_budget), D1(Dt1), D2(Dt2) {
    if (g.nx() != px.size())
        throw config_error("FuYeungProblem: letter map must cover the source alphabet");
    if (d1.nx() != px.size() || d2.nx() != px.size())
        throw config_error("FuYeungProblem: distortion matrices must match the source alphabet");
    if (!std::isfinite(D1) || !std::isfinite(D2) || D1 < 0.0 || D2 < 0.0)
        throw config_error("FuYeungProblem: distortion targets must be finite and >= 0");
    if (!std::isfinite(R1)) throw config_error("FuYeungProblem: R1 must be finite");
    std::vector<double> py(g.ny, 0.0);
    for (std::size_t x = 0; x < px.size(); ++x) py[g(x)] += px[x];
    for (std::size_t y = 0; y < g.ny; ++y)
        if (py[y] <= kSupportTol)
            throw config_error("FuYeungProblem: induced P_Y must be strictly positive");
}

FyState fy_init(const FuYeungProblem& prob) {
    FyState st;
    st.nx = prob.px.size();
    st.ny = prob.g.ny;
    st.m1 = prob.d1.nxhat();
    st.m2 = prob.d2.nxhat();
    st.q1.assign(st.m1, 1.0 / static_cast<double>(st.m1));
    st.q2.assign(st.ny * st.m1 * st.m2, 1.0 / static_cast<double>(st.m2));
    st.ch1.assign(st.nx * st.m1, 1.0 / static_cast<double>(st.m1));
    st.ch2.assign(st.nx * st.m1 * st.m2, 1.0 / static_cast<double>(st.m2));
    st.beta.assign(st.nx, 1.0);
    st.beta2.assign(st.nx * st.m1, 1.0);
    st.log_beta.assign(st.nx, 0.0);
    st.lagrangian = kInf;
    return st;
}

namespace {

double fy_update_channels(const FuYeungProblem& prob, FyState& st, double s,
                          double t1, double t2, std::vector<double>& lb2buf) {
    const std::size_t nx = st.nx, m1 = st.m1, m2 = st.m2;
    lb2buf.resize(nx * m1);
    st.log_beta.resize(nx);
    const double w = 1.0 / (1.0 + s);
    double value = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
        const std::size_t y = prob.g(x);
        for (std::size_t a = 0; a < m1; ++a) {
            double mx = -kInf;
            for (std::size_t b = 0; b < m2; ++b) {
                double e = safe_log(st.q2[(y * m1 + a) * m2 + b]) - t2 * prob.d2.at(x, b);
                if (e > mx) mx = e;
            }
            double sum = 0.0;
            for (std::size_t b = 0; b < m2; ++b)
                sum += std::exp(safe_log(st.q2[(y * m1 + a) * m2 + b]) -
                                t2 * prob.d2.at(x, b) - mx);
            double lb2 = -(mx + std::log(sum));
            lb2buf[x * m1 + a] = lb2;
            st.beta2[x * m1 + a] = std::exp(lb2);
        }
        double mx = -kInf;
        for (std::size_t a = 0; a < m1; ++a) {
            double e = safe_log(st.q1[a]) -
                       w * (t1 * prob.d1.at(x, a) + lb2buf[x * m1 + a]);
            if (e > mx) mx = e;
        }
        double sum = 0.0;
        for (std::size_t a = 0; a < m1; ++a)
            sum += std::exp(safe_log(st.q1[a]) -
                            w * (t1 * prob.d1.at(x, a) + lb2buf[x * m1 + a]) - mx);
        double lse = mx + std::log(sum);
        double lb = -lse;
        st.beta[x] = std::exp(lb);
        st.log_beta[x] = lb;
        value += prob.px[x] * (1.0 + s) * lb;
        for (std::size_t a = 0; a < m1; ++a) {
            st.ch1[x * m1 + a] =
                std::exp(safe_log(st.q1[a]) -
                         w * (t1 * prob.d1.at(x, a) + lb2buf[x * m1 + a]) - lse);
            for (std::size_t b = 0; b < m2; ++b)
                st.ch2[(x * m1 + a) * m2 + b] =
                    std::exp(lb2buf[x * m1 + a] + safe_log(st.q2[(y * m1 + a) * m2 + b]) -
                             t2 * prob.d2.at(x, b));
        }
    }
    return value;
}

double fy_growth_residual(const FuYeungProblem& prob, const FyState& st, double s,
                          double t1, double t2, const std::vector<double>& lb2buf,
                          bool two_sided) {
    const std::size_t nx = st.nx, m1 = st.m1, m2 = st.m2;
    const double w = 1.0 / (1.0 + s);
    double res = 0.0;
    auto score = [&](double g, double mass) {
        double over = g - 1.0;
        if (mass > kGrowthMassFloor)
            res = std::max(res, two_sided ? std::fabs(over) : std::max(over, 0.0));
        else if (two_sided && over > kTinyMassOvershoot)
            res = std::max(res, over);
    };
    for (std::size_t a = 0; a < m1; ++a) {
        double g = 0.0;
        for (std::size_t x = 0; x < nx; ++x)
            g += prob.px[x] * std::exp(st.log_beta[x] -
                                       w * (t1 * prob.d1.at(x, a) + lb2buf[x * m1 + a]));
        score(g, st.q1[a]);
    }
    for (std::size_t y = 0; y < st.ny; ++y)
        for (std::size_t a = 0; a < m1; ++a) {
            double wt = 0.0;
            for (std::size_t x = 0; x < nx; ++x)
                if (prob.g(x) == y) wt += prob.px[x] * st.ch1[x * m1 + a];
            if (wt <= 1e-10) continue;
            for (std::size_t b = 0; b < m2; ++b) {
                double g = 0.0;
                for (std::size_t x = 0; x < nx; ++x) {
                    if (prob.g(x) != y) continue;
                    g += prob.px[x] * st.ch1[x * m1 + a] *
                         std::exp(lb2buf[x * m1 + a] - t2 * prob.d2.at(x, b));
                }
                score(g / wt, st.q2[(y * m1 + a) * m2 + b]);
            }
        }
    return res;
}

void fy_refresh_marginals(const FuYeungProblem& prob, FyState& st, double prune_tol) {
    const std::size_t nx = st.nx, m1 = st.m1, m2 = st.m2;
    std::vector<double> nq1(m1, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t a = 0; a < m1; ++a) nq1[a] += prob.px[x] * st.ch1[x * m1 + a];
    prune_normalize(nq1, prune_tol);
    st.q1 = std::move(nq1);

    for (std::size_t y = 0; y < st.ny; ++y)
        for (std::size_t a = 0; a < m1; ++a) {
            double w = 0.0;
            std::vector<double> row(m2, 0.0);
            for (std::size_t x = 0; x < nx; ++x) {
                if (prob.g(x) != y) continue;
                double wx = prob.px[x] * st.ch1[x * m1 + a];
                w += wx;
                for (std::size_t b = 0; b < m2; ++b)
                    row[b] += wx * st.ch2[(x * m1 + a) * m2 + b];
            }
            if (w <= 0.0) continue;
            for (double& e : row) e /= w;
            prune_normalize(row, prune_tol);
            for (std::size_t b = 0; b < m2; ++b) st.q2[(y * m1 + a) * m2 + b] = row[b];
        }
}

std::size_t fy_converge(const FuYeungProblem& prob, FyState& st, double s, double t1,
                        double t2, const SolverOptions& o, double tol,
                        bool allow_partial = false, bool two_sided = false) {
    std::vector<double> lb2buf;
    double prev = kInf;
    for (std::size_t it = 0; it < o.max_iters; ++it) {
        double L = fy_update_channels(prob, st, s, t1, t2, lb2buf);
        double ratio_res = fy_growth_residual(prob, st, s, t1, t2, lb2buf, two_sided);
        fy_refresh_marginals(prob, st, o.prune_tol);
        bool value_ok = std::fabs(prev - L) <= tol * (1.0 + std::fabs(L));
        prev = L;
        st.lagrangian = L;
        if (value_ok && ratio_res <= tol) return it + 1;
    }
    if (allow_partial) return o.max_iters;
    throw convergence_error("sum-rate inner loop exhausted its iteration budget");
}

double fy_complete_free_d2(const FuYeungProblem& prob, FyState& st) {
    const std::size_t nx = st.nx, m1 = st.m1, m2 = st.m2;
    double ed2 = 0.0;
    for (std::size_t y = 0; y < st.ny; ++y)
        for (std::size_t a = 0; a < m1; ++a) {
            double best = kInf;
            std::size_t bstar = 0;
            for (std::size_t b = 0; b < m2; ++b) {
                double cost = 0.0;
                for (std::size_t x = 0; x < nx; ++x)
                    if (prob.g(x) == y)
                        cost += prob.px[x] * st.ch1[x * m1 + a] * prob.d2.at(x, b);
                if (cost < best - 1e-18) {
                    best = cost;
                    bstar = b;
                }
            }
            ed2 += best;
            for (std::size_t b = 0; b < m2; ++b)
                st.q2[(y * m1 + a) * m2 + b] = (b == bstar) ? 1.0 : 0.0;
            for (std::size_t x = 0; x < nx; ++x) {
                if (prob.g(x) != y) continue;
                st.beta2[x * m1 + a] = 1.0;
                for (std::size_t b = 0; b < m2; ++b)
                    st.ch2[(x * m1 + a) * m2 + b] = (b == bstar) ? 1.0 : 0.0;
            }
        }
    return ed2;
}

} // namespace

double fy_fixed_point_step(const FuYeungProblem& prob, FyState& st, double s,
                           double t1, double t2) {
    std::vector<double> lb2buf;
    double L = fy_update_channels(prob, st, s, t1, t2, lb2buf);
    fy_refresh_marginals(prob, st, 1e-15);
    st.lagrangian = L;
    return L;
}

void fy_stats(const FuYeungProblem& prob, const FyState& st, double& i1,
              double& ed1, double& ed2) {
    const std::size_t nx = st.nx, m1 = st.m1, m2 = st.m2;
    std::vector<double> ind(m1, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t a = 0; a < m1; ++a) ind[a] += prob.px[x] * st.ch1[x * m1 + a];
    i1 = 0.0;
    ed1 = 0.0;
    ed2 = 0.0;
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t a = 0; a < m1; ++a) {
            double w = prob.px[x] * st.ch1[x * m1 + a];
            if (w <= 0.0) continue;
            i1 += w * std::log(st.ch1[x * m1 + a] / ind[a]);
            ed1 += w * prob.d1.at(x, a);
            for (std::size_t b = 0; b < m2; ++b)
                ed2 += w * st.ch2[(x * m1 + a) * m2 + b] * prob.d2.at(x, b);
        }
    i1 = std::max(i1, 0.0);
}

double fy_objective(const FuYeungProblem& prob, const FyState& st) {
    const std::size_t nx = st.nx, m1 = st.m1, m2 = st.m2;
    double i1, ed1, ed2;
    fy_stats(prob, st, i1, ed1, ed2);
    double i2 = 0.0;
    for (std::size_t y = 0; y < st.ny; ++y)
        for (std::size_t a = 0; a < m1; ++a) {
            double w = 0.0;
            std::vector<double> ind2(m2, 0.0);
            for (std::size_t x = 0; x < nx; ++x) {
                if (prob.g(x) != y) continue;
                double wx = prob.px[x] * st.ch1[x * m1 + a];
                w += wx;
                for (std::size_t b = 0; b < m2; ++b)
                    ind2[b] += wx * st.ch2[(x * m1 + a) * m2 + b];
            }
            if (w <= 0.0) continue;
            for (double& e : ind2) e /= w;
            for (std::size_t x = 0; x < nx; ++x) {
                if (prob.g(x) != y) continue;
                double wx = prob.px[x] * st.ch1[x * m1 + a];
                if (wx <= 0.0) continue;
                for (std::size_t b = 0; b < m2; ++b) {
                    double c = st.ch2[(x * m1 + a) * m2 + b];
                    if (c > 0.0) i2 += wx * c * std::log(c / ind2[b]);
                }
            }
        }
    return i1 + std::max(i2, 0.0);
}

FySearchResult multiplier_search_fy(const FuYeungProblem& prob, const SolverOptions& o) {
    const std::size_t nx = prob.px.size();
    const std::size_t m1 = prob.d1.nxhat(), m2 = prob.d2.nxhat();

    double dmin1 = 0.0, dmin2 = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
        double b1 = kInf, b2 = kInf;
        for (std::size_t a = 0; a < m1; ++a) b1 = std::min(b1, prob.d1.at(x, a));
        for (std::size_t b = 0; b < m2; ++b) b2 = std::min(b2, prob.d2.at(x, b));
        dmin1 += prob.px[x] * b1;
        dmin2 += prob.px[x] * b2;
    }
    if (prob.D1 < dmin1 - 1e-12 || prob.D2 < dmin2 - 1e-12)
        throw infeasible_error("sum-rate problem: distortion target below minimum achievable");

    // The first-stage rate budget must cover the rate-distortion function.
    RdSolution rd = solve_rd(prob.px, prob.d1, prob.D1, o);
    if (prob.R1 < rd.rate - 1e-9)
        throw infeasible_error("sum-rate problem: R1 below the first-stage rate-distortion function");

    FySearchResult out;
    out.state = fy_init(prob);
    FyState& cur = out.state;
    std::size_t iters = 0;

    auto inner = [&](double s, double t1, double t2) {
        add_floor_normalize(cur.q1, kWarmFloor);
        add_floor_normalize_rows(cur.q2, cur.ny * cur.m1, cur.m2, kWarmFloor);
        iters += fy_converge(prob, cur, s, t1, t2, o, o.tol);
    };

    // As with the two-decoder search, the upfront zero probe is skipped for
    // warm re-solves: a zero multiplier pair collapses the channels onto the
    // marginals and forgets the warm path's selected optimizer.
    auto solve_t2 = [&](double s, double t1, bool probe_free = true) -> double {
        if (probe_free) {
            inner(s, t1, 0.0);
            double free_d2 = fy_complete_free_d2(prob, cur);
            if (free_d2 <= prob.D2 + o.bisect_tol) return 0.0;
        }
        double i1, ed1, ed2;
        double lo = 0.0, hi = o.multiplier_hi;
        int doublings = 0;
        for (;;) {
            inner(s, t1, hi);
            fy_stats(prob, cur, i1, ed1, ed2);
            double f = ed2 - prob.D2;
            if (f <= 0.0) break;
            // Boundary target: the residual never flips sign, so accept the
            // current point once the violation is within tolerance.
            if (f <= o.bisect_tol) return hi;
            lo = hi;
            hi *= 2.0;
            if (++doublings > 40)
                throw convergence_error("second-stage multiplier bracket exhausted");
        }
        bool tried_zero = false;
        for (int k = 0; k < 90; ++k) {
            if (lo == 0.0 && hi <= kInactiveJump && !tried_zero) {
                tried_zero = true;
                inner(s, t1, 0.0);
                if (fy_complete_free_d2(prob, cur) <= prob.D2 + o.bisect_tol) return 0.0;
            }
            double mid = 0.5 * (lo + hi);
            inner(s, t1, mid);
            fy_stats(prob, cur, i1, ed1, ed2);
            double f = ed2 - prob.D2;
            if (std::fabs(f) <= o.bisect_tol && mid * std::fabs(f) <= kSlackTol)
                return mid;
            if (f > 0.0)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 1e-13 * std::max(1.0, hi)) break;
        }
        inner(s, t1, hi);
        return hi;
    };

    auto solve_t1 = [&](double s, double& t2_out, bool probe_free = true) -> double {
        double i1, ed1, ed2;
        double t2 = 0.0;
        if (probe_free) {
            t2 = solve_t2(s, 0.0);
            fy_stats(prob, cur, i1, ed1, ed2);
            if (ed1 - prob.D1 <= o.bisect_tol) {
                t2_out = t2;
                return 0.0;
            }
        }
        double lo = 0.0, hi = o.multiplier_hi;
        int doublings = 0;
        bool asymptote = false;
        for (;;) {
            t2 = solve_t2(s, hi);
            fy_stats(prob, cur, i1, ed1, ed2);
            double f = ed1 - prob.D1;
            if (f <= 0.0) break;
            if (f <= o.bisect_tol) { // boundary target: residual never flips sign
                asymptote = true;
                break;
            }
            lo = hi;
            hi *= 2.0;
            if (++doublings > 40)
                throw convergence_error("first-stage multiplier bracket exhausted");
        }
        double t1 = hi;
        bool settled = asymptote;
        bool tried_zero = false;
        for (int k = 0; !settled && k < 90; ++k) {
            if (lo == 0.0 && hi <= kInactiveJump && !tried_zero) {
                tried_zero = true;
                t2 = solve_t2(s, 0.0, /*probe_free=*/false);
                fy_stats(prob, cur, i1, ed1, ed2);
                if (ed1 - prob.D1 <= o.bisect_tol) {
                    t2_out = t2;
                    return 0.0;
                }
            }
            double mid = 0.5 * (lo + hi);
            t2 = solve_t2(s, mid);
            fy_stats(prob, cur, i1, ed1, ed2);
            double f = ed1 - prob.D1;
            if (std::fabs(f) <= o.bisect_tol && mid * std::fabs(f) <= kSlackTol) {
                t1 = mid;
                settled = true;
                break;
            }
            if (f > 0.0)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 1e-13 * std::max(1.0, hi)) break;
        }
        if (!settled) {
            t1 = hi;
            t2 = solve_t2(s, t1);
        }
        t2_out = t2;
        return t1;
    };

    double i1, ed1, ed2;
    double t2 = 0.0;
    double t1 = solve_t1(0.0, t2);
    fy_stats(prob, cur, i1, ed1, ed2);
    double s = 0.0;
    if (i1 - prob.R1 > o.bisect_tol) {
        // Bisect in u = 1/(1+s): the rate residual increases with u.
        double u_hi = 1.0, u_lo = 1.0;
        const double u_min = 1.0 / (1.0 + o.s_hi);
        bool asymptote = false;
        for (;;) {
            u_lo *= 0.5;
            if (u_lo < u_min)
                throw convergence_error("rate-constraint dual exceeded its cap");
            t1 = solve_t1(1.0 / u_lo - 1.0, t2);
            fy_stats(prob, cur, i1, ed1, ed2);
            double f = i1 - prob.R1;
            if (f <= 0.0) break;
            if (f <= o.bisect_tol) { // boundary budget: residual never flips sign
                asymptote = true;
                break;
            }
        }
        u_hi = std::min(1.0, 2.0 * u_lo);
        double u = u_lo;
        bool settled = asymptote;
        bool tried_zero = false;
        for (int k = 0; !settled && k < 90; ++k) {
            if (u_hi == 1.0 && u_lo >= 1.0 - kInactiveJump && !tried_zero) {
                tried_zero = true;
                t1 = solve_t1(0.0, t2, /*probe_free=*/false);
                fy_stats(prob, cur, i1, ed1, ed2);
                if (i1 - prob.R1 <= o.bisect_tol) {
                    u = 1.0;
                    settled = true;
                    break;
                }
            }
            double mid = 0.5 * (u_lo + u_hi);
            double smid = 1.0 / mid - 1.0;
            t1 = solve_t1(smid, t2);
            fy_stats(prob, cur, i1, ed1, ed2);
            double f = i1 - prob.R1;
            if (std::fabs(f) <= o.bisect_tol && smid * std::fabs(f) <= kSlackTol) {
                u = mid;
                settled = true;
                break;
            }
            if (f > 0.0)
                u_hi = mid;
            else
                u_lo = mid;
            if (u_hi - u_lo <= 1e-15) break;
        }
        if (!settled) {
            u = u_lo;
            t1 = solve_t1(1.0 / u - 1.0, t2);
        }
        s = 1.0 / u - 1.0;
    }

    out.s = s < kZeroSnap ? 0.0 : s;
    out.t1 = t1 < kZeroSnap ? 0.0 : t1;
    out.t2 = t2 < kZeroSnap ? 0.0 : t2;
    out.iterations = iters;
    return out;
}

FuYeungSolution solve_fy(const FuYeungProblem& prob, const SolverOptions& o) {
    FySearchResult sr = multiplier_search_fy(prob, o);
    FyState& st = sr.state;

    SolverOptions po = o;
    po.max_iters = 200000;
    sr.iterations += fy_converge(prob, st, sr.s, sr.t1, sr.t2, po,
                                 std::min(o.tol, 1e-12), /*allow_partial=*/true,
                                 /*two_sided=*/true);
    std::vector<double> lb2buf;
    fy_update_channels(prob, st, sr.s, sr.t1, sr.t2, lb2buf);

    // See the matching guard in the two-decoder packager: boundary targets
    // drive a multiplier to infinity and the linear tables out of range.
    for (double v : st.beta)
        if (!std::isfinite(v))
            throw convergence_error(
                "sum-rate solution tables overflow: a constraint target lies on the "
                "achievable-region boundary and its multiplier diverges");
    for (double v : st.beta2)
        if (!std::isfinite(v))
            throw convergence_error(
                "sum-rate solution tables overflow: a constraint target lies on the "
                "achievable-region boundary and its multiplier diverges");

    FuYeungSolution sol;
    sol.s = sr.s;
    sol.t1 = sr.t1;
    sol.t2 = sr.t2;
    sol.sum_rate_excess = fy_objective(prob, st);
    sol.ch1 = CondPmf(st.ch1, st.nx, st.m1);
    sol.ch2 = CondPmf(st.ch2, st.nx * st.m1, st.m2);
    sol.marg1 = Pmf(st.q1);
    sol.ch2cond = CondPmf(st.q2, st.ny * st.m1, st.m2);
    sol.beta_table = st.beta;
    sol.beta2_table = st.beta2;
    fy_stats(prob, st, sol.achieved_i1, sol.achieved_d1, sol.achieved_d2);
    sol.iterations = sr.iterations;
    sol.kkt_residual = verify_kkt_fy(prob, sol);
    return sol;
}

double verify_kkt_fy(const FuYeungProblem& prob, const FuYeungSolution& sol) {
    const std::size_t nx = prob.px.size();
    const std::size_t m1 = prob.d1.nxhat(), m2 = prob.d2.nxhat();
    const double w = 1.0 / (1.0 + sol.s);
    double res = 0.0;

    for (std::size_t x = 0; x < nx; ++x) {
        if (prob.px[x] <= kSupportTol) continue;
        const std::size_t y = prob.g(x);
        for (std::size_t a = 0; a < m1; ++a) {
            double rhs = sol.beta_table[x] * sol.marg1[a] *
                         std::exp(-w * (sol.t1 * prob.d1.at(x, a) +
                                        std::log(sol.beta2_table[x * m1 + a])));
            res = std::max(res, std::fabs(sol.ch1.at(x, a) - rhs));
            if (sol.marg1[a] <= 0.0) continue;
            for (std::size_t b = 0; b < m2; ++b) {
                double rhs2 = sol.beta2_table[x * m1 + a] * sol.ch2cond.at(y * m1 + a, b) *
                              std::exp(-sol.t2 * prob.d2.at(x, b));
                res = std::max(res, std::fabs(sol.ch2.at(x * m1 + a, b) - rhs2));
            }
        }
        double s1 = 0.0;
        for (std::size_t a = 0; a < m1; ++a) {
            double s2 = 0.0;
            for (std::size_t b = 0; b < m2; ++b)
                s2 += sol.ch2cond.at(y * m1 + a, b) * std::exp(-sol.t2 * prob.d2.at(x, b));
            res = std::max(res, std::fabs(sol.beta2_table[x * m1 + a] * s2 - 1.0));
            s1 += sol.marg1[a] * std::exp(-w * (sol.t1 * prob.d1.at(x, a) +
                                                std::log(sol.beta2_table[x * m1 + a])));
        }
        res = std::max(res, std::fabs(sol.beta_table[x] * s1 - 1.0));
    }

    for (std::size_t a = 0; a < m1; ++a) {
        double ind = 0.0;
        for (std::size_t x = 0; x < nx; ++x) ind += prob.px[x] * sol.ch1.at(x, a);
        res = std::max(res, std::fabs(ind - sol.marg1[a]));
    }

    res = std::max(res, std::max(0.0, sol.achieved_i1 - prob.R1 - 1e-9));
    res = std::max(res, std::max(0.0, sol.achieved_d1 - prob.D1 - 1e-9));
    res = std::max(res, std::max(0.0, sol.achieved_d2 - prob.D2 - 1e-9));
    res = std::max(res, std::fabs(sol.s * (sol.achieved_i1 - prob.R1)));
    res = std::max(res, std::fabs(sol.t1 * (sol.achieved_d1 - prob.D1)));
    res = std::max(res, std::fabs(sol.t2 * (sol.achieved_d2 - prob.D2)));
    return res;
}

} // namespace fbl
