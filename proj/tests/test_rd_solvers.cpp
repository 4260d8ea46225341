#include <doctest.h>

#include <cmath>
#include <vector>

#include "fbl/errors.hpp"
#include "fbl/oracles.hpp"
#include "fbl/prob.hpp"
#include "fbl/rd_solvers.hpp"

using namespace fbl;

namespace {

// Random strictly-positive pmf vector of the given size.
std::vector<double> random_masses(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    double sum = 0.0;
    for (double& e : v) {
        e = 0.05 + rng.next_u01();
        sum += e;
    }
    for (double& e : v) e /= sum;
    return v;
}

std::vector<double> random_distortions(Rng& rng, std::size_t nx, std::size_t m) {
    std::vector<double> d(nx * m);
    for (double& e : d) e = 2.0 * rng.next_u01();
    return d;
}

double free_reproduction_cost(const Pmf& px, const DistortionMatrix& d) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < d.nxhat(); ++a) {
        double e = 0.0;
        for (std::size_t x = 0; x < px.size(); ++x) e += px[x] * d.at(x, a);
        best = std::min(best, e);
    }
    return best;
}

double min_distortion(const Pmf& px, const DistortionMatrix& d) {
    double out = 0.0;
    for (std::size_t x = 0; x < px.size(); ++x) {
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < d.nxhat(); ++a) b = std::min(b, d.at(x, a));
        out += px[x] * b;
    }
    return out;
}

// I(X; X1hat X2hat | Y) + I(X1hat; Y) evaluated on the solution channels;
// equals the objective for any test channel by the chain rule.
double kaspi_alternate_objective(const KaspiProblem& prob, const KaspiSolution& sol) {
    const std::size_t nx = prob.pxy.nx(), ny = prob.pxy.ny();
    const std::size_t m1 = prob.d1.nxhat(), m2 = prob.d2.nxhat();
    std::vector<double> pabc(nx * m1 * m2 * ny, 0.0);
    std::vector<double> pay(m1 * ny, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t a = 0; a < m1; ++a) {
                double w = prob.pxy.at(x, y) * sol.ch1.at(x * ny + y, a);
                pay[a * ny + y] += w;
                for (std::size_t b = 0; b < m2; ++b)
                    pabc[(x * (m1 * m2) + a * m2 + b) * ny + y] +=
                        w * sol.ch2.at((x * ny + y) * m1 + a, b);
            }
    double cmi = conditional_mutual_information(pabc, nx, m1 * m2, ny);
    double mi = mutual_information(JointPmf(pay, m1, ny));
    return cmi + mi;
}

} // namespace

TEST_CASE("classical rate-distortion: binary hamming") {
    Pmf px({0.5, 0.5});
    DistortionMatrix d({0.0, 1.0, 1.0, 0.0}, 2, 2);
    RdSolution sol = solve_rd(px, d, 0.11);
    CHECK(sol.rate == doctest::Approx(std::log(2.0) - binary_entropy(0.11)).epsilon(1e-7));
    CHECK(sol.t == doctest::Approx(std::log(0.89 / 0.11)).epsilon(1e-6));
    CHECK(sol.achieved_d == doctest::Approx(0.11).epsilon(1e-7));
    CHECK(sol.marginal[0] == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(sol.kkt_residual < 1e-8);

    // D-tilted values average to the rate.
    std::vector<double> j = rd_tilted(px, d, 0.11, sol);
    double mean = 0.5 * (j[0] + j[1]);
    CHECK(mean == doctest::Approx(sol.rate).epsilon(1e-8));
    // Symmetric source: the tilted value is constant.
    CHECK(j[0] == doctest::Approx(j[1]).epsilon(1e-9));
}

TEST_CASE("classical rate-distortion: zero rate and infeasible") {
    Pmf px({0.5, 0.5});
    DistortionMatrix d({0.0, 1.0, 1.0, 0.0}, 2, 2);
    RdSolution z = solve_rd(px, d, 0.6);
    CHECK(z.rate == doctest::Approx(0.0));
    CHECK(z.t == doctest::Approx(0.0));
    CHECK(z.achieved_d <= 0.6 + 1e-12);

    DistortionMatrix dpos({1.0, 2.0, 3.0, 1.0}, 2, 2);
    CHECK_THROWS_AS(solve_rd(px, dpos, 0.5), infeasible_error);
    CHECK_NOTHROW(solve_rd(px, dpos, 1.4));
}

TEST_CASE("classical rate-distortion: skewed source") {
    Pmf px({0.8, 0.2});
    DistortionMatrix d({0.0, 1.0, 1.0, 0.0}, 2, 2);
    double D = 0.05;
    RdSolution sol = solve_rd(px, d, D);
    // R(D) = Hb(p) - Hb(D) for Hamming with D <= min(p, 1-p).
    CHECK(sol.rate == doctest::Approx(binary_entropy(0.2) - binary_entropy(0.05))
                          .epsilon(1e-7));
    CHECK(sol.achieved_d <= D + 1e-8);
    CHECK(sol.kkt_residual < 1e-8);
}

TEST_CASE("two-decoder solver reproduces the erased-side-information closed forms") {
    const double p = 0.3, D1 = 0.2, D2 = 0.05;
    BecInstance inst{p, D1, D2};
    KaspiProblem prob = make_bec_problem(p, D1, D2);
    KaspiSolution sol = solve_kaspi(prob);

    CHECK(sol.rate == doctest::Approx(bec_rate(inst)).epsilon(1e-6));
    BecMultipliers m = bec_multipliers(inst);
    CHECK(sol.lambda1 == doctest::Approx(m.lambda1).epsilon(1e-5));
    CHECK(sol.lambda2 == doctest::Approx(m.lambda2).epsilon(1e-5));
    CHECK(sol.achieved_d1 == doctest::Approx(D1).epsilon(1e-7));
    CHECK(sol.achieved_d2 == doctest::Approx(D2).epsilon(1e-7));
    CHECK(sol.achieved_d1 <= D1 + 1e-8);
    CHECK(sol.achieved_d2 <= D2 + 1e-8);
    CHECK(sol.kkt_residual < 1e-8);

    // Optimal reproduction marginal is uniform.
    CHECK(sol.marg1[0] == doctest::Approx(0.5).epsilon(1e-6));

    // Alpha tables match the closed forms on supported cells.
    for (std::size_t x = 0; x < 2; ++x) {
        CHECK(sol.alpha_table[x * 3 + x] ==
              doctest::Approx(bec_alpha(inst, x, x)).epsilon(1e-5));
        CHECK(sol.alpha_table[x * 3 + kBecErasure] ==
              doctest::Approx(bec_alpha(inst, x, kBecErasure)).epsilon(1e-5));
        for (std::size_t a = 0; a < 2; ++a) {
            CHECK(sol.alpha2_table[(x * 3 + x) * 2 + a] ==
                  doctest::Approx(bec_alpha2(inst, x, x, a)).epsilon(1e-5));
            CHECK(sol.alpha2_table[(x * 3 + kBecErasure) * 2 + a] ==
                  doctest::Approx(bec_alpha2(inst, x, kBecErasure, a)).epsilon(1e-5));
        }
    }

    // Second-stage conditional: copy y when observed, copy x1hat when erased.
    for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t y = 0; y < 2; ++y)
            CHECK(sol.ch2cond.at(y * 2 + a, y) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(sol.ch2cond.at(kBecErasure * 2 + a, a) == doctest::Approx(1.0).epsilon(1e-6));
    }

    // Parametric identity: rate = E[log alpha] - l1 D1 - l2 D2.
    double elog = 0.0;
    for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t y = 0; y < 3; ++y)
            if (prob.pxy.at(x, y) > 0)
                elog += prob.pxy.at(x, y) * std::log(sol.alpha_table[x * 3 + y]);
    CHECK(sol.rate ==
          doctest::Approx(elog - sol.lambda1 * D1 - sol.lambda2 * D2).epsilon(1e-8));

    // Chain-rule identity for the objective.
    CHECK(kaspi_alternate_objective(prob, sol) == doctest::Approx(sol.rate).epsilon(1e-7));
}

TEST_CASE("two-decoder fixed point: closed-form state is stationary") {
    const double p = 0.3, D1 = 0.2, D2 = 0.05;
    BecInstance inst{p, D1, D2};
    KaspiProblem prob = make_bec_problem(p, D1, D2);
    BecMultipliers m = bec_multipliers(inst);

    KaspiState st = kaspi_init(prob);
    auto d1 = [](std::size_t x, std::size_t a) { return x == a ? 0.0 : 1.0; };
    st.q1 = {0.5, 0.5};
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b) {
                std::size_t target = (y == kBecErasure) ? a : y;
                st.q2[(y * 2 + a) * 2 + b] = (b == target) ? 1.0 : 0.0;
            }
    for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t y = 0; y < 3; ++y) {
            st.alpha[x * 3 + y] = bec_alpha(inst, x, y);
            for (std::size_t a = 0; a < 2; ++a) {
                st.alpha2[(x * 3 + y) * 2 + a] = bec_alpha2(inst, x, y, a);
                st.ch1[(x * 3 + y) * 2 + a] = bec_alpha(inst, x, y) * 0.5 *
                                              std::exp(-m.lambda1 * d1(x, a)) /
                                              bec_alpha2(inst, x, y, a);
                for (std::size_t b = 0; b < 2; ++b)
                    st.ch2[((x * 3 + y) * 2 + a) * 2 + b] =
                        bec_alpha2(inst, x, y, a) * st.q2[(y * 2 + a) * 2 + b] *
                        std::exp(-m.lambda2 * d1(x, b));
            }
        }
    KaspiState before = st;
    double L = kaspi_fixed_point_step(prob, st, m.lambda1, m.lambda2);

    CHECK(L == doctest::Approx(bec_rate(inst) + m.lambda1 * D1 + m.lambda2 * D2)
                   .epsilon(1e-12));
    for (std::size_t i = 0; i < st.q1.size(); ++i)
        CHECK(st.q1[i] == doctest::Approx(before.q1[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < st.q2.size(); ++i)
        CHECK(st.q2[i] == doctest::Approx(before.q2[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < st.ch1.size(); ++i)
        CHECK(st.ch1[i] == doctest::Approx(before.ch1[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < st.ch2.size(); ++i)
        CHECK(st.ch2[i] == doctest::Approx(before.ch2[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < st.alpha.size(); ++i)
        CHECK(st.alpha[i] == doctest::Approx(before.alpha[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < st.alpha2.size(); ++i)
        CHECK(st.alpha2[i] == doctest::Approx(before.alpha2[i]).epsilon(1e-12));
}

TEST_CASE("two-decoder fixed-point iteration decreases the Lagrangian") {
    Rng rng(2024);
    JointPmf joint(random_masses(rng, 4), 2, 2);
    DistortionMatrix d1(random_distortions(rng, 2, 2), 2, 2);
    DistortionMatrix d2(random_distortions(rng, 2, 3), 2, 3);
    KaspiProblem prob(joint, d1, d2, 0.2, 0.2);
    KaspiState st = kaspi_init(prob);
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 40; ++i) {
        double L = kaspi_fixed_point_step(prob, st, 0.7, 1.3);
        CHECK(L <= prev + 1e-12);
        prev = L;
    }
}

TEST_CASE("two-decoder solver on the doubly symmetric binary source") {
    SUBCASE("plain rate-distortion regime") {
        KaspiProblem prob = make_dsbs_problem(0.3, 0.11, 0.4);
        KaspiSolution sol = solve_kaspi(prob);
        CHECK(sol.rate == doctest::Approx(dsbs_rate(0.3, 0.11, 0.4).rate).epsilon(1e-6));
        CHECK(sol.lambda2 == doctest::Approx(0.0));
        CHECK(sol.achieved_d1 <= 0.11 + 1e-8);
        CHECK(sol.achieved_d2 <= 0.4 + 1e-8);
        CHECK(sol.kkt_residual < 1e-8);
    }
    SUBCASE("conditional rate-distortion regime") {
        KaspiProblem prob = make_dsbs_problem(0.3, 0.35, 0.1);
        KaspiSolution sol = solve_kaspi(prob);
        CHECK(sol.rate == doctest::Approx(dsbs_rate(0.3, 0.35, 0.1).rate).epsilon(1e-6));
        CHECK(sol.lambda1 == doctest::Approx(0.0));
        CHECK(sol.achieved_d1 <= 0.35 + 1e-8);
        CHECK(sol.achieved_d2 <= 0.1 + 1e-8);
        CHECK(sol.kkt_residual < 1e-8);
    }
    SUBCASE("zero-rate regime") {
        KaspiProblem prob = make_dsbs_problem(0.3, 0.55, 0.35);
        KaspiSolution sol = solve_kaspi(prob);
        CHECK(sol.rate == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(sol.lambda1 == doctest::Approx(0.0));
        CHECK(sol.lambda2 == doctest::Approx(0.0));
    }
    SUBCASE("uncovered regime still satisfies lower bounds") {
        KaspiProblem prob = make_dsbs_problem(0.3, 0.05, 0.02);
        KaspiSolution sol = solve_kaspi(prob);
        CHECK(sol.rate >= binary_entropy(0.3) - binary_entropy(0.02) - 1e-6);
        CHECK(sol.rate >= std::log(2.0) - binary_entropy(0.05) - 1e-6);
        CHECK(sol.achieved_d1 <= 0.05 + 1e-8);
        CHECK(sol.achieved_d2 <= 0.02 + 1e-8);
        CHECK(sol.kkt_residual < 1e-8);
    }
}

TEST_CASE("two-decoder solver: random instances satisfy the optimality identities") {
    Rng rng(7);
    for (int inst = 0; inst < 3; ++inst) {
        CAPTURE(inst);
        std::size_t nx = 3, ny = 2, m1 = 3, m2 = 3;
        JointPmf joint(random_masses(rng, nx * ny), nx, ny);
        DistortionMatrix d1(random_distortions(rng, nx, m1), nx, m1);
        DistortionMatrix d2(random_distortions(rng, nx, m2), nx, m2);
        Pmf px = joint.marginal_x();
        double lo1 = min_distortion(px, d1), hi1 = free_reproduction_cost(px, d1);
        double lo2 = min_distortion(px, d2), hi2 = free_reproduction_cost(px, d2);
        double D1 = lo1 + 0.3 * (hi1 - lo1);
        double D2 = lo2 + 0.25 * (hi2 - lo2);
        KaspiProblem prob(joint, d1, d2, D1, D2);
        KaspiSolution sol = solve_kaspi(prob);

        CHECK(sol.rate >= -1e-10);
        CHECK(sol.achieved_d1 <= D1 + 1e-8);
        CHECK(sol.achieved_d2 <= D2 + 1e-8);
        CHECK(sol.kkt_residual < 1e-8);
        CHECK(sol.lambda1 >= 0.0);
        CHECK(sol.lambda2 >= 0.0);

        // Chain-rule identity.
        CHECK(kaspi_alternate_objective(prob, sol) ==
              doctest::Approx(sol.rate).epsilon(1e-7));

        // Parametric identity.
        double elog = 0.0;
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < ny; ++y)
                if (joint.at(x, y) > 0)
                    elog += joint.at(x, y) * std::log(sol.alpha_table[x * ny + y]);
        CHECK(sol.rate == doctest::Approx(elog - sol.lambda1 * D1 - sol.lambda2 * D2)
                              .epsilon(1e-8));

        // Monotonicity in the distortion targets.
        KaspiSolution looser = solve_kaspi(KaspiProblem(joint, d1, d2, D1 * 1.3, D2 * 1.3));
        CHECK(looser.rate <= sol.rate + 1e-8);
    }
}

TEST_CASE("two-decoder solver: infeasible targets and iteration budget") {
    Pmf px({0.5, 0.5});
    JointPmf joint({0.25, 0.25, 0.25, 0.25}, 2, 2);
    DistortionMatrix dpos({1.0, 2.0, 3.0, 1.0}, 2, 2);
    DistortionMatrix dham({0.0, 1.0, 1.0, 0.0}, 2, 2);
    CHECK_THROWS_AS(solve_kaspi(KaspiProblem(joint, dpos, dham, 0.5, 0.2)),
                    infeasible_error);
    CHECK_THROWS_AS(solve_kaspi(KaspiProblem(joint, dham, dpos, 0.2, 0.5)),
                    infeasible_error);

    SolverOptions tiny;
    tiny.max_iters = 2;
    CHECK_THROWS_AS(solve_kaspi(make_bec_problem(0.3, 0.2, 0.05), tiny),
                    convergence_error);
}

TEST_CASE("sum-rate solver reproduces the erasure closed forms") {
    const double p = 0.3, D1 = 0.2, D2 = 0.05;
    FyErasureValues v = fy_erasure_example(p, D1, D2);
    FuYeungProblem prob = make_fy_erasure_problem(p, D1, D2, 1.0);
    FuYeungSolution sol = solve_fy(prob);

    CHECK(sol.sum_rate_excess == doctest::Approx(v.rate).epsilon(1e-6));
    CHECK(sol.s == doctest::Approx(0.0));
    CHECK(sol.t1 == doctest::Approx(v.t1).epsilon(1e-5));
    CHECK(sol.t2 == doctest::Approx(v.t2).epsilon(1e-5));
    CHECK(sol.achieved_d1 <= D1 + 1e-8);
    CHECK(sol.achieved_d2 <= D2 + 1e-8);
    CHECK(sol.achieved_i1 <= 1.0 + 1e-8);
    CHECK(sol.kkt_residual < 1e-8);

    // Beta table: unerased letters carry the unerased tilt, erased the other.
    double bu = 2.0 / (1.0 + std::exp(-v.t1));
    double be = 2.0 / (1.0 + std::exp(-v.t1 - v.t2));
    CHECK(sol.beta_table[0] == doctest::Approx(bu).epsilon(1e-5));
    CHECK(sol.beta_table[1] == doctest::Approx(bu).epsilon(1e-5));
    CHECK(sol.beta_table[2] == doctest::Approx(be).epsilon(1e-5));
    CHECK(sol.beta_table[3] == doctest::Approx(be).epsilon(1e-5));

    // Parametric identity: excess = (1+s) E[log beta] - s R1 - t1 D1 - t2 D2.
    double elb = 0.0;
    for (std::size_t x = 0; x < 4; ++x)
        elb += prob.px[x] * std::log(sol.beta_table[x]);
    CHECK(sol.sum_rate_excess ==
          doctest::Approx((1.0 + sol.s) * elb - sol.s * prob.R1 - sol.t1 * D1 -
                          sol.t2 * D2)
              .epsilon(1e-8));
}

TEST_CASE("sum-rate solver: lossless-function stage with trivial y") {
    // |Y| = 1 reduces to successive refinement; binary Hamming is successively
    // refinable, so the excess equals the rate-distortion function at D2.
    Pmf px({0.5, 0.5});
    DetMap g({0, 0}, 1);
    DistortionMatrix d({0.0, 1.0, 1.0, 0.0}, 2, 2);
    FuYeungProblem prob(px, g, d, d, 0.5, 0.3, 0.1);
    FuYeungSolution sol = solve_fy(prob);
    CHECK(sol.sum_rate_excess ==
          doctest::Approx(std::log(2.0) - binary_entropy(0.1)).epsilon(1e-6));
    CHECK(sol.t1 == doctest::Approx(0.0));
    CHECK(sol.achieved_d1 <= 0.3 + 1e-8);
    CHECK(sol.achieved_d2 <= 0.1 + 1e-8);
    CHECK(sol.kkt_residual < 1e-8);
}

TEST_CASE("sum-rate solver: first-stage budget at the boundary") {
    // The objective charges the first-stage rate in full, so the free optimum
    // drives I(X;Xh1) down to the plain rate-distortion value at D1; budgets
    // below that are infeasible and budgets at or above it leave the solution
    // unchanged.  This probes the boundary budget and checks continuity,
    // monotonicity, dual signs, and the parametric identity there.
    Rng rng(11);
    Pmf px(random_masses(rng, 4));
    DetMap g({0, 1, 0, 1}, 2);
    DistortionMatrix d1(random_distortions(rng, 4, 2), 4, 2);
    DistortionMatrix d2(random_distortions(rng, 4, 3), 4, 3);
    double lo1 = min_distortion(px, d1), hi1 = free_reproduction_cost(px, d1);
    double lo2 = min_distortion(px, d2), hi2 = free_reproduction_cost(px, d2);
    double D1 = lo1 + 0.3 * (hi1 - lo1);
    double D2 = lo2 + 0.25 * (hi2 - lo2);

    FuYeungSolution free_sol = solve_fy(FuYeungProblem(px, g, d1, d2, 1e3, D1, D2));
    CHECK(free_sol.s == doctest::Approx(0.0));
    CHECK(free_sol.kkt_residual < 1e-8);
    REQUIRE(free_sol.achieved_i1 > 0.02);

    RdSolution rd = solve_rd(px, d1, D1);
    CHECK(free_sol.achieved_i1 >= rd.rate - 1e-7);

    // Smallest feasible budget: exactly the first-stage rate the free solver
    // already uses.  The constraint is tight yet inactive, so the solution,
    // excess, and s = 0 must all carry over.
    double R1 = free_sol.achieved_i1;
    FuYeungSolution tight = solve_fy(FuYeungProblem(px, g, d1, d2, R1, D1, D2));

    CHECK(tight.s >= 0.0);
    CHECK(tight.s == doctest::Approx(0.0));
    CHECK(tight.t1 >= 0.0);
    CHECK(tight.t2 >= 0.0);
    CHECK(tight.achieved_i1 <= R1 + 1e-8);
    CHECK(tight.achieved_d1 <= D1 + 1e-8);
    CHECK(tight.achieved_d2 <= D2 + 1e-8);
    CHECK(tight.sum_rate_excess >= free_sol.sum_rate_excess - 1e-9);
    CHECK(tight.sum_rate_excess ==
          doctest::Approx(free_sol.sum_rate_excess).epsilon(1e-7));
    CHECK(tight.kkt_residual < 1e-8);

    // If this instance had left slack between the plain rate-distortion value
    // and the free first-stage rate, a budget strictly inside that gap must
    // bind and can only raise the excess.
    if (free_sol.achieved_i1 > rd.rate + 1e-6) {
        double mid = 0.5 * (rd.rate + free_sol.achieved_i1);
        FuYeungSolution bound = solve_fy(FuYeungProblem(px, g, d1, d2, mid, D1, D2));
        CHECK(bound.s >= 0.0);
        CHECK(bound.achieved_i1 <= mid + 1e-8);
        CHECK(bound.sum_rate_excess >= free_sol.sum_rate_excess - 1e-9);
        CHECK(bound.kkt_residual < 1e-8);
    }

    double elb = 0.0;
    for (std::size_t x = 0; x < 4; ++x)
        elb += px[x] * std::log(tight.beta_table[x]);
    CHECK(tight.sum_rate_excess ==
          doctest::Approx((1.0 + tight.s) * elb - tight.s * R1 - tight.t1 * D1 -
                          tight.t2 * D2)
              .epsilon(1e-8));

    // Objective recomputed from the channels via mutual informations.
    std::vector<double> pxa(4 * 2, 0.0);
    std::vector<double> pabc(4 * 3 * (2 * 2), 0.0);
    for (std::size_t x = 0; x < 4; ++x)
        for (std::size_t a = 0; a < 2; ++a) {
            double w = px[x] * tight.ch1.at(x, a);
            pxa[x * 2 + a] += w;
            for (std::size_t b = 0; b < 3; ++b)
                pabc[(x * 3 + b) * 4 + (g(x) * 2 + a)] += w * tight.ch2.at(x * 2 + a, b);
        }
    double direct = mutual_information(JointPmf(pxa, 4, 2)) +
                    conditional_mutual_information(pabc, 4, 3, 4);
    CHECK(tight.sum_rate_excess == doctest::Approx(direct).epsilon(1e-7));
}

TEST_CASE("sum-rate solver: infeasible first-stage budget") {
    Pmf px({0.5, 0.5});
    DetMap g({0, 0}, 1);
    DistortionMatrix d({0.0, 1.0, 1.0, 0.0}, 2, 2);
    // R(P_X, 0.1) = log2 - Hb(0.1) ~ 0.368 nats > 0.2.
    CHECK_THROWS_AS(solve_fy(FuYeungProblem(px, g, d, d, 0.2, 0.1, 0.1)),
                    infeasible_error);
    CHECK_THROWS_AS(solve_fy(FuYeungProblem(px, g, d, d, 1.0, -0.1, 0.1)), config_error);
}

TEST_CASE("two-decoder solver settles a boundary first-stage target") {
    // A dominated first-stage column pins the minimum achievable first-stage
    // distortion; targeting that minimum exactly puts the dual multiplier on
    // an asymptote (the distortion residual never changes sign). The search
    // must settle at a finite multiplier with the constraint met to tolerance
    // and finite packaged tables.
    JointPmf pxy({0.25, 0.25, 0.3, 0.2}, 2, 2);
    DistortionMatrix d1({1.0, 1.4, 0.5, 0.9}, 2, 2); // column 0 dominates
    DistortionMatrix d2({0.0, 1.0, 1.0, 0.0}, 2, 2);
    const double D1 = 0.5 * 1.0 + 0.5 * 0.5; // minimum achievable
    KaspiProblem prob(pxy, d1, d2, D1, 0.25);
    KaspiSolution sol = solve_kaspi(prob);
    CHECK(sol.achieved_d1 <= D1 + 1e-8);
    CHECK(sol.achieved_d1 == doctest::Approx(D1).epsilon(1e-6));
    CHECK(sol.achieved_d2 <= 0.25 + 1e-8);
    CHECK(sol.kkt_residual < 1e-6);
    CHECK(sol.marg1[0] == doctest::Approx(1.0));
    for (double v : sol.alpha_table) CHECK(std::isfinite(v));
    for (double v : sol.alpha2_table) CHECK(std::isfinite(v));
}
