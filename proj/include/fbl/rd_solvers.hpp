#pragma once

// Convex solvers for single- and two-decoder rate-distortion problems over
// finite alphabets:
//  * solve_rd      — classical rate-distortion function R(P_X, D)
//  * solve_kaspi   — two decoders, encoder side information Y, decoder 2 also
//                    sees Y: min I(XY;X̂1) + I(X;X̂2|Y,X̂1) over test channels
//                    meeting E[d1] <= D1, E[d2] <= D2
//  * solve_fy      — source X with a deterministic function Y = g(X) that one
//                    decoder must recover losslessly; computes the minimum sum
//                    rate in excess of H(P_Y) subject to a first-stage rate
//                    budget R1 and distortion targets D1, D2
//
// All solvers run alternating-minimization inner loops (exponential-tilt
// channel updates against reproduction marginals) inside nested bisections on
// the dual multipliers. Inactive constraints are pinned at multiplier zero.

#include <cstddef>
#include <vector>

#include "fbl/prob.hpp"

namespace fbl {

struct SolverOptions {
    double tol = 1e-10;            // inner fixed-point stopping tolerance
    // Inner iteration budget per solve. Near-critical multipliers can hold the
    // alternating iteration on a long metastable plateau before the geometric
    // tail kicks in, so the budget carries generous headroom.
    std::size_t max_iters = 400000;
    double multiplier_hi = 64.0;   // initial bracket end for distortion duals (doubled as needed)
    double s_hi = 1e4;             // cap for the rate-constraint dual
    double bisect_tol = 1e-9;      // residual tolerance for multiplier bisection
    double prune_tol = 1e-15;      // reproduction letters below this mass are dropped
};

// ---------------------------------------------------------------------------
// Classical rate-distortion.

struct RdSolution {
    double rate = 0.0;        // R(P_X, D) in nats
    double t = 0.0;           // dual multiplier, t = -dR/dD >= 0
    Pmf marginal;             // optimal reproduction marginal
    CondPmf channel;          // P*(xhat | x)
    double achieved_d = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;

    RdSolution() : marginal(std::vector<double>{1.0}), channel({1.0}, 1, 1) {}
};

RdSolution solve_rd(const Pmf& px, const DistortionMatrix& d, double D,
                    const SolverOptions& opts = {});

// Per-letter tilted value at the solved point:
//   j(x) = -log sum_xhat q(xhat) exp(-t (d(x,xhat) - D)).
std::vector<double> rd_tilted(const Pmf& px, const DistortionMatrix& d, double D,
                              const RdSolution& sol);

// ---------------------------------------------------------------------------
// Two decoders with encoder side information.

struct KaspiProblem {
    JointPmf pxy;         // source-side-information joint
    DistortionMatrix d1;  // nx x m1
    DistortionMatrix d2;  // nx x m2
    double D1 = 0.0;
    double D2 = 0.0;

    KaspiProblem(JointPmf joint, DistortionMatrix dd1, DistortionMatrix dd2,
                 double Dt1, double Dt2);
};

// Mutable inner-loop state: channels plus reference reproduction marginals.
struct KaspiState {
    std::size_t nx = 0, ny = 0, m1 = 0, m2 = 0;
    std::vector<double> q1;     // reproduction marginal for X̂1, size m1
    std::vector<double> q2;     // reference P(x̂2 | y, x̂1), size ny*m1*m2
    std::vector<double> ch1;    // P(x̂1 | x, y), size nx*ny*m1
    std::vector<double> ch2;    // P(x̂2 | x, y, x̂1), size nx*ny*m1*m2
    std::vector<double> alpha;  // size nx*ny
    std::vector<double> alpha2; // size nx*ny*m1
    // Log-domain copy of alpha; the optimality-gap checks work with it so
    // that large multipliers cannot overflow the linear tables mid-search.
    std::vector<double> log_alpha; // size nx*ny
    double lagrangian = 0.0;       // value after the latest step
};

KaspiState kaspi_init(const KaspiProblem& prob);

// One alternating-minimization pass at multipliers (l1, l2): refresh the
// alpha tables and both channels from the current reference marginals, then
// refresh the marginals from the new channels. Returns the Lagrangian value
// min over channels of [I-objective + l1 E d1 + l2 E d2] at the pre-update
// marginals (never increases across iterations).
double kaspi_fixed_point_step(const KaspiProblem& prob, KaspiState& st,
                              double l1, double l2);

struct KaspiSolution {
    double rate = 0.0;    // R_K(P_XY, D1, D2) in nats
    double lambda1 = 0.0; // -dR/dD1 >= 0
    double lambda2 = 0.0; // -dR/dD2 >= 0
    CondPmf ch1;          // P*(x̂1 | x,y), rows indexed x*ny + y
    CondPmf ch2;          // P*(x̂2 | x,y,x̂1), rows indexed (x*ny + y)*m1 + x̂1
    Pmf marg1;            // P*_{X̂1}
    CondPmf ch2cond;      // P*(x̂2 | y,x̂1), rows indexed y*m1 + x̂1
    std::vector<double> alpha_table;  // per (x,y), row-major
    std::vector<double> alpha2_table; // per (x,y,x̂1)
    double achieved_d1 = 0.0;
    double achieved_d2 = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0; // total inner iterations across the search

    KaspiSolution()
        : ch1({1.0}, 1, 1), ch2({1.0}, 1, 1), marg1(std::vector<double>{1.0}),
          ch2cond({1.0}, 1, 1) {}
};

struct KaspiSearchResult {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    KaspiState state;
    std::size_t iterations = 0;
};

// Nested bisection on (lambda1, lambda2) driving achieved distortions to the
// targets; constraints inactive at multiplier zero are pinned there.
KaspiSearchResult multiplier_search_kaspi(const KaspiProblem& prob,
                                          const SolverOptions& opts = {});

KaspiSolution solve_kaspi(const KaspiProblem& prob, const SolverOptions& opts = {});

// Max-norm residual of the stationarity conditions (channel tilt formulas),
// primal feasibility and complementary slackness at the solved point.
double verify_kkt_kaspi(const KaspiProblem& prob, const KaspiSolution& sol);

// ---------------------------------------------------------------------------
// Function-reconstruction sum-rate problem.

struct FuYeungProblem {
    Pmf px;
    DetMap g;             // y = g(x); induced P_Y must be strictly positive
    DistortionMatrix d1;  // nx x m1
    DistortionMatrix d2;  // nx x m2
    double R1 = 0.0;      // first-stage rate budget
    double D1 = 0.0;
    double D2 = 0.0;

    FuYeungProblem(Pmf source, DetMap gmap, DistortionMatrix dd1,
                   DistortionMatrix dd2, double R1_budget, double Dt1, double Dt2);
};

struct FyState {
    std::size_t nx = 0, ny = 0, m1 = 0, m2 = 0;
    std::vector<double> q1;    // P(x̂1), size m1
    std::vector<double> q2;    // reference P(x̂2 | y, x̂1), size ny*m1*m2
    std::vector<double> ch1;   // P(x̂1 | x), size nx*m1
    std::vector<double> ch2;   // P(x̂2 | x, x̂1), size nx*m1*m2
    std::vector<double> beta;  // per x (at y = g(x)), size nx
    std::vector<double> beta2; // per (x, x̂1), size nx*m1
    // Log-domain copy of beta, used by the optimality-gap checks (see the
    // matching field in the two-decoder state).
    std::vector<double> log_beta; // size nx
    double lagrangian = 0.0;
};

FyState fy_init(const FuYeungProblem& prob);

// One alternating pass at multipliers (s, t1, t2); Lagrangian is
// min over channels of [(1+s) I(X;X̂1) + I(X;X̂2|Y,X̂1) + t1 E d1 + t2 E d2].
double fy_fixed_point_step(const FuYeungProblem& prob, FyState& st,
                           double s, double t1, double t2);

struct FuYeungSolution {
    double sum_rate_excess = 0.0; // R_FY: minimum sum rate minus H(P_Y)
    double s = 0.0;               // -dR_FY/dR1 >= 0
    double t1 = 0.0;              // -dR_FY/dD1 >= 0
    double t2 = 0.0;              // -dR_FY/dD2 >= 0
    CondPmf ch1;                  // P*(x̂1 | x)
    CondPmf ch2;                  // P*(x̂2 | x, x̂1), rows indexed x*m1 + x̂1
    Pmf marg1;                    // P*_{X̂1}
    CondPmf ch2cond;              // P*(x̂2 | y, x̂1), rows indexed y*m1 + x̂1
    std::vector<double> beta_table;  // per x (y = g(x))
    std::vector<double> beta2_table; // per (x, x̂1)
    double achieved_i1 = 0.0;
    double achieved_d1 = 0.0;
    double achieved_d2 = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;

    FuYeungSolution()
        : ch1({1.0}, 1, 1), ch2({1.0}, 1, 1), marg1(std::vector<double>{1.0}),
          ch2cond({1.0}, 1, 1) {}
};

struct FySearchResult {
    double s = 0.0, t1 = 0.0, t2 = 0.0;
    FyState state;
    std::size_t iterations = 0;
};

// Tri-level nested bisection: outermost on the rate residual I(X;X̂1) - R1,
// inner levels on the distortion residuals.
FySearchResult multiplier_search_fy(const FuYeungProblem& prob,
                                    const SolverOptions& opts = {});

FuYeungSolution solve_fy(const FuYeungProblem& prob, const SolverOptions& opts = {});

double verify_kkt_fy(const FuYeungProblem& prob, const FuYeungSolution& sol);

// ---------------------------------------------------------------------------
// Shared helpers (used by solvers and tests).

// Objective value I(XY;X̂1) + I(X;X̂2|Y,X̂1) evaluated directly on channels.
double kaspi_objective(const KaspiProblem& prob, const KaspiState& st);
// Pair (E d1, E d2) on the current channels.
void kaspi_distortions(const KaspiProblem& prob, const KaspiState& st,
                       double& ed1, double& ed2);
// Objective I(X;X̂1) + I(X;X̂2|Y,X̂1) for the function-reconstruction problem.
double fy_objective(const FuYeungProblem& prob, const FyState& st);
void fy_stats(const FuYeungProblem& prob, const FyState& st,
              double& i1, double& ed1, double& ed2);

} // namespace fbl
