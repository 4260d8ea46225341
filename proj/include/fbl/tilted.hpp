#pragma once

// Tilted information densities at solved two-decoder operating points, their
// moments (mean, dispersion, third absolute central moment), the covariance
// matrices that drive the two-dimensional regions, and the auxiliary
// expectation functionals (nu / w) whose boundedness by 1 underlies the
// non-asymptotic converse bounds.

#include <cstddef>
#include <vector>

#include "fbl/prob.hpp"
#include "fbl/rd_solvers.hpp"

namespace fbl {

// A per-cell table of an information density with its source-weighted first
// three moments. `values` and `probs` align index-by-index; cells with zero
// source mass carry value 0 so they never perturb the moments.
struct TiltedTable {
    std::vector<double> values; // density values (nats)
    std::vector<double> probs;  // matching source masses (sum to 1)
    double mean = 0.0;
    double variance = 0.0;
    double third_abs_moment = 0.0; // E|value - mean|^3
};

// Populate mean/variance/third_abs_moment from values/probs by exact summation.
void fill_moments(TiltedTable& table);

// Two-decoder density: value(x,y) = log alpha(x,y) - lambda1 D1 - lambda2 D2,
// laid out row-major over (x, y). Its mean reproduces the solved rate, its
// variance is the dispersion, and its third absolute moment feeds the
// Berry-Esseen radius.
TiltedTable kaspi_tilted(const KaspiProblem& prob, const KaspiSolution& sol);

// Per-letter densities and moments for the sum-rate problem with a lossless
// function stage. Indexed by the source letter x (y = g(x) throughout).
struct FyTiltedBundle {
    std::vector<double> j_fy;      // (1+s) log beta(x) - s R1 - t1 D1 - t2 D2
    std::vector<double> j_d1;      // plain first-stage tilted density at D1
    std::vector<double> neglog_py; // -log P_Y(g(x))
    std::vector<double> probs;     // source masses

    double mean_j_fy = 0.0;  // equals the sum-rate excess of the solution
    double rate_r1 = 0.0;    // E[j_d1] = first-stage rate-distortion value
    double entropy_y = 0.0;  // E[neglog_py] = H(P_Y)
    double v_d1 = 0.0;       // Var[j_d1]
    double v_y = 0.0;        // Var[neglog_py]
    double v_fy = 0.0;       // Var[j_fy + neglog_py]

    CovMatrix2 V1; // Cov of (j_d1, j_fy + neglog_py)
    CovMatrix2 V2; // Cov of (j_fy + neglog_py, neglog_py)
    bool psd_ok = true; // both V1 and V2 passed the PSD check
};

// Builds the bundle from a converged sum-rate solution and a plain
// rate-distortion solve of (px, d1, D1) supplying the first-stage density.
FyTiltedBundle fy_tilted(const FuYeungProblem& prob, const FuYeungSolution& sol,
                         const RdSolution& rd1);

// ---------------------------------------------------------------------------
// Auxiliary expectation functionals. At an optimal point each is at most 1
// (up to solver tolerance); nu2/w2 stay below nu1/w1 for every conditional
// reference channel q, which is what turns them into converse devices.

// nu1(a) = E_{P_XY}[ (alpha(X,Y) / alpha2(X,Y,a)) exp(-lambda1 d1(X,a)) ].
double nu1(const KaspiProblem& prob, const KaspiSolution& sol, std::size_t x1hat);

// nu2(a,q) = E[ alpha(X,Y) exp(-lambda1 d1(X,a) - lambda2 d2(X,X2)) ] with
// X2 drawn from q's row (y, a); q has rows indexed y*m1 + x1hat, cols m2.
double nu2(const KaspiProblem& prob, const KaspiSolution& sol, std::size_t x1hat,
           const CondPmf& q);

// w1(a) = E_{P_X}[ exp(i1(X,a) - t1 d1(X,a)/(1+s)) ] where
// i1(x,a) = log beta(x) - log beta2(x,a)/(1+s).
double w1(const FuYeungProblem& prob, const FuYeungSolution& sol, std::size_t x1hat);

// w2(a,q) = E[ exp(i2(X,a) - t1 d1(X,a)/(1+s) - t2 d2(X,X2)) ] with X2 drawn
// from q's row (g(x), a); i2(x,a) = log beta(x) + s log beta2(x,a)/(1+s).
double w2(const FuYeungProblem& prob, const FuYeungSolution& sol, std::size_t x1hat,
          const CondPmf& q);

} // namespace fbl
