#include "fbl/tilted.hpp"

#include <cmath>

namespace fbl {

void fill_moments(TiltedTable& table) {
    double mean = 0.0;
    for (std::size_t i = 0; i < table.values.size(); ++i)
        mean += table.probs[i] * table.values[i];
    double var = 0.0, third = 0.0;
    for (std::size_t i = 0; i < table.values.size(); ++i) {
        double dev = std::fabs(table.values[i] - mean);
        var += table.probs[i] * dev * dev;
        third += table.probs[i] * dev * dev * dev;
    }
    table.mean = mean;
    table.variance = var;
    table.third_abs_moment = third;
}

TiltedTable kaspi_tilted(const KaspiProblem& prob, const KaspiSolution& sol) {
    const std::size_t nx = prob.pxy.nx(), ny = prob.pxy.ny();
    TiltedTable t;
    t.values.assign(nx * ny, 0.0);
    t.probs = prob.pxy.data();
    const double shift = sol.lambda1 * prob.D1 + sol.lambda2 * prob.D2;
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) {
            if (prob.pxy.at(x, y) <= 0.0) continue;
            t.values[x * ny + y] = std::log(sol.alpha_table[x * ny + y]) - shift;
        }
    fill_moments(t);
    return t;
}

FyTiltedBundle fy_tilted(const FuYeungProblem& prob, const FuYeungSolution& sol,
                         const RdSolution& rd1) {
    const std::size_t nx = prob.px.size();
    FyTiltedBundle b;
    b.probs = prob.px.data();
    b.j_fy.assign(nx, 0.0);
    b.neglog_py.assign(nx, 0.0);
    b.j_d1 = rd_tilted(prob.px, prob.d1, prob.D1, rd1);

    std::vector<double> py(prob.g.ny, 0.0);
    for (std::size_t x = 0; x < nx; ++x) py[prob.g(x)] += prob.px[x];

    const double shift =
        sol.s * prob.R1 + sol.t1 * prob.D1 + sol.t2 * prob.D2;
    for (std::size_t x = 0; x < nx; ++x) {
        if (prob.px[x] <= 0.0) {
            b.j_d1[x] = 0.0;
            continue;
        }
        b.j_fy[x] = (1.0 + sol.s) * std::log(sol.beta_table[x]) - shift;
        b.neglog_py[x] = -std::log(py[prob.g(x)]);
    }

    auto mean_of = [&](const std::vector<double>& v) {
        double m = 0.0;
        for (std::size_t x = 0; x < nx; ++x) m += b.probs[x] * v[x];
        return m;
    };
    auto cov_of = [&](const std::vector<double>& u, double mu,
                      const std::vector<double>& v, double mv) {
        double c = 0.0;
        for (std::size_t x = 0; x < nx; ++x)
            c += b.probs[x] * (u[x] - mu) * (v[x] - mv);
        return c;
    };

    std::vector<double> j_sum(nx);
    for (std::size_t x = 0; x < nx; ++x) j_sum[x] = b.j_fy[x] + b.neglog_py[x];

    b.mean_j_fy = mean_of(b.j_fy);
    b.rate_r1 = mean_of(b.j_d1);
    b.entropy_y = mean_of(b.neglog_py);
    double mean_sum = b.mean_j_fy + b.entropy_y;

    b.v_d1 = cov_of(b.j_d1, b.rate_r1, b.j_d1, b.rate_r1);
    b.v_y = cov_of(b.neglog_py, b.entropy_y, b.neglog_py, b.entropy_y);
    b.v_fy = cov_of(j_sum, mean_sum, j_sum, mean_sum);

    b.V1.v11 = b.v_d1;
    b.V1.v12 = cov_of(b.j_d1, b.rate_r1, j_sum, mean_sum);
    b.V1.v22 = b.v_fy;

    b.V2.v11 = b.v_fy;
    b.V2.v12 = cov_of(j_sum, mean_sum, b.neglog_py, b.entropy_y);
    b.V2.v22 = b.v_y;

    b.psd_ok = b.V1.is_psd() && b.V2.is_psd();
    return b;
}

// ---------------------------------------------------------------------------

double nu1(const KaspiProblem& prob, const KaspiSolution& sol, std::size_t x1hat) {
    const std::size_t nx = prob.pxy.nx(), ny = prob.pxy.ny();
    const std::size_t m1 = sol.marg1.size();
    double acc = 0.0;
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) {
            double p = prob.pxy.at(x, y);
            if (p <= 0.0) continue;
            acc += p * sol.alpha_table[x * ny + y] /
                   sol.alpha2_table[(x * ny + y) * m1 + x1hat] *
                   std::exp(-sol.lambda1 * prob.d1.at(x, x1hat));
        }
    return acc;
}

double nu2(const KaspiProblem& prob, const KaspiSolution& sol, std::size_t x1hat,
           const CondPmf& q) {
    const std::size_t nx = prob.pxy.nx(), ny = prob.pxy.ny();
    const std::size_t m1 = sol.marg1.size(), m2 = q.cols();
    double acc = 0.0;
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) {
            double p = prob.pxy.at(x, y);
            if (p <= 0.0) continue;
            double inner = 0.0;
            for (std::size_t b = 0; b < m2; ++b)
                inner += q.at(y * m1 + x1hat, b) *
                         std::exp(-sol.lambda2 * prob.d2.at(x, b));
            acc += p * sol.alpha_table[x * ny + y] * inner *
                   std::exp(-sol.lambda1 * prob.d1.at(x, x1hat));
        }
    return acc;
}

double w1(const FuYeungProblem& prob, const FuYeungSolution& sol, std::size_t x1hat) {
    const std::size_t nx = prob.px.size(), m1 = sol.marg1.size();
    const double inv = 1.0 / (1.0 + sol.s);
    double acc = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
        if (prob.px[x] <= 0.0) continue;
        double i1 = std::log(sol.beta_table[x]) -
                    inv * std::log(sol.beta2_table[x * m1 + x1hat]);
        acc += prob.px[x] *
               std::exp(i1 - inv * sol.t1 * prob.d1.at(x, x1hat));
    }
    return acc;
}

double w2(const FuYeungProblem& prob, const FuYeungSolution& sol, std::size_t x1hat,
          const CondPmf& q) {
    const std::size_t nx = prob.px.size(), m1 = sol.marg1.size();
    const std::size_t m2 = q.cols();
    const double inv = 1.0 / (1.0 + sol.s);
    double acc = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
        if (prob.px[x] <= 0.0) continue;
        double i2 = std::log(sol.beta_table[x]) +
                    sol.s * inv * std::log(sol.beta2_table[x * m1 + x1hat]);
        double inner = 0.0;
        for (std::size_t b = 0; b < m2; ++b)
            inner += q.at(prob.g(x) * m1 + x1hat, b) *
                     std::exp(-sol.t2 * prob.d2.at(x, b));
        acc += prob.px[x] * inner *
               std::exp(i2 - inv * sol.t1 * prob.d1.at(x, x1hat));
    }
    return acc;
}

} // namespace fbl
