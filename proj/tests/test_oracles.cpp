#include <doctest.h>

#include <cmath>

#include "fbl/errors.hpp"
#include "fbl/oracles.hpp"
#include "fbl/prob.hpp"

using namespace fbl;

namespace {
const BecInstance kBec{0.3, 0.2, 0.05};
}

TEST_CASE("bec closed-form region") {
    CHECK(bec_in_region(kBec));
    CHECK(!bec_in_region({0.3, 0.2, 0.07}));  // D2 > p*D1
    CHECK(!bec_in_region({0.3, 0.5, 0.05}));  // D1 - D2 > (1-p)/2
    CHECK(!bec_in_region({0.3, 0.2, 0.31}));  // D2 >= p
    CHECK(!bec_in_region({0.3, 0.6, 0.05}));  // D1 > 1/2
    CHECK(!bec_in_region({0.3, 0.2, 0.0}));   // D2 must be positive
    CHECK_THROWS_AS(bec_rate({0.3, 0.2, 0.07}), config_error);
}

TEST_CASE("bec rate and multipliers") {
    const double p = kBec.p, D1 = kBec.d1, D2 = kBec.d2;
    double rate_ref = std::log(2.0) - (1.0 - p) * binary_entropy((D1 - D2) / (1.0 - p)) -
                      p * binary_entropy(D2 / p);
    CHECK(bec_rate(kBec) == doctest::Approx(rate_ref).epsilon(1e-14));
    CHECK(bec_rate(kBec) == doctest::Approx(0.194273).epsilon(2e-5));

    BecMultipliers m = bec_multipliers(kBec);
    CHECK(m.lambda1 == doctest::Approx(std::log(0.55 / 0.15)).epsilon(1e-14));
    CHECK(m.lambda1 == doctest::Approx(1.299283).epsilon(1e-5));
    CHECK(m.lambda2 == doctest::Approx(-m.lambda1 + std::log(0.25 / 0.05)).epsilon(1e-12));
    CHECK(m.lambda2 == doctest::Approx(0.310155).epsilon(1e-4));
    CHECK(m.lambda1 > 0.0);
    CHECK(m.lambda2 > 0.0);
}

TEST_CASE("bec alpha tables") {
    BecMultipliers m = bec_multipliers(kBec);
    CHECK(bec_alpha2(kBec, 0, 0, 0) == doctest::Approx(1.0));
    CHECK(bec_alpha2(kBec, 0, 0, 1) == doctest::Approx(1.0));
    CHECK(bec_alpha2(kBec, 0, 1, 0) == doctest::Approx(std::exp(m.lambda2)));
    CHECK(bec_alpha2(kBec, 0, kBecErasure, 0) == doctest::Approx(1.0));
    CHECK(bec_alpha2(kBec, 0, kBecErasure, 1) == doctest::Approx(std::exp(m.lambda2)));
    CHECK(bec_alpha(kBec, 0, 0) ==
          doctest::Approx(2.0 / (1.0 + std::exp(-m.lambda1))).epsilon(1e-14));
    CHECK(bec_alpha(kBec, 1, kBecErasure) ==
          doctest::Approx(2.0 / (1.0 + std::exp(-m.lambda1 - m.lambda2))).epsilon(1e-14));
}

TEST_CASE("bec parametric identity and tilted moments") {
    const double p = kBec.p;
    BecMultipliers m = bec_multipliers(kBec);
    // E[log alpha] - l1 D1 - l2 D2 equals the rate.
    double elog = (1.0 - p) * std::log(bec_alpha(kBec, 0, 0)) +
                  p * std::log(bec_alpha(kBec, 0, kBecErasure));
    CHECK(elog - m.lambda1 * kBec.d1 - m.lambda2 * kBec.d2 ==
          doctest::Approx(bec_rate(kBec)).epsilon(1e-12));

    double ju = bec_tilted(kBec, 0, 0);
    double je = bec_tilted(kBec, 1, kBecErasure);
    double mean = (1.0 - p) * ju + p * je;
    double var = (1.0 - p) * (ju - mean) * (ju - mean) + p * (je - mean) * (je - mean);
    CHECK(mean == doctest::Approx(bec_rate(kBec)).epsilon(1e-12));
    CHECK(var == doctest::Approx(bec_dispersion(kBec)).epsilon(1e-12));
    CHECK(bec_dispersion(kBec) == doctest::Approx(7.27063e-4).epsilon(1e-4));
    // Exact third absolute central moment for a two-atom distribution.
    double t3 = (1.0 - p) * std::pow(std::fabs(ju - mean), 3.0) +
                p * std::pow(std::fabs(je - mean), 3.0);
    CHECK(bec_third_abs_moment(kBec) == doctest::Approx(t3).epsilon(1e-12));
    CHECK(bec_third_abs_moment(kBec) > 0.0);
}

TEST_CASE("bec problem construction") {
    KaspiProblem prob = make_bec_problem(0.3, 0.2, 0.05);
    CHECK(prob.pxy.nx() == 2);
    CHECK(prob.pxy.ny() == 3);
    CHECK(prob.pxy.at(0, 0) == doctest::Approx(0.35));
    CHECK(prob.pxy.at(0, 1) == doctest::Approx(0.0));
    CHECK(prob.pxy.at(1, kBecErasure) == doctest::Approx(0.15));
    CHECK(prob.d1.at(0, 0) == doctest::Approx(0.0));
    CHECK(prob.d1.at(0, 1) == doctest::Approx(1.0));
    CHECK(prob.D1 == doctest::Approx(0.2));
}

TEST_CASE("dsbs closed-form regimes") {
    // Zero-rate regime.
    DsbsResult z = dsbs_rate(0.3, 0.6, 0.5);
    CHECK(z.regime == DsbsRegime::Zero);
    CHECK(z.rate == doctest::Approx(0.0));

    // Plain rate-distortion regime (second constraint slack).
    DsbsResult pl = dsbs_rate(0.3, 0.11, 0.4);
    CHECK(pl.regime == DsbsRegime::PlainRd);
    CHECK(pl.rate == doctest::Approx(std::log(2.0) - binary_entropy(0.11)).epsilon(1e-14));
    CHECK(pl.rate == doctest::Approx(0.346632).epsilon(1e-5));
    CHECK(pl.dispersion == doctest::Approx(0.0));

    // Conditional rate-distortion regime.
    DsbsResult cr = dsbs_rate(0.3, 0.35, 0.1);
    CHECK(cr.regime == DsbsRegime::ConditionalRd);
    CHECK(cr.rate ==
          doctest::Approx(binary_entropy(0.3) - binary_entropy(0.1)).epsilon(1e-14));
    CHECK(cr.rate == doctest::Approx(0.285781).epsilon(1e-5));
    double hp = binary_entropy(0.3);
    double va = -std::log(0.7) - hp, vb = -std::log(0.3) - hp;
    CHECK(cr.dispersion == doctest::Approx(0.7 * va * va + 0.3 * vb * vb).epsilon(1e-12));

    // Outside the closed forms.
    CHECK(dsbs_rate(0.3, 0.05, 0.02).regime == DsbsRegime::Uncovered);

    KaspiProblem prob = make_dsbs_problem(0.3, 0.35, 0.1);
    CHECK(prob.pxy.at(0, 0) == doctest::Approx(0.35));
    CHECK(prob.pxy.at(0, 1) == doctest::Approx(0.15));
}

TEST_CASE("erasure example for the sum-rate problem") {
    const double p = 0.3, D1 = 0.2, D2 = 0.05;
    FyErasureValues v = fy_erasure_example(p, D1, D2);
    CHECK(v.s == doctest::Approx(0.0));
    CHECK(v.t1 == doctest::Approx(1.299283).epsilon(1e-5));
    CHECK(v.t2 == doctest::Approx(0.310155).epsilon(1e-4));
    // Same closed form as the BEC instance.
    CHECK(v.rate == doctest::Approx(bec_rate(kBec)).epsilon(1e-14));
    CHECK(v.var_j == doctest::Approx(bec_dispersion(kBec)).epsilon(1e-12));

    // The tilted value averages to the rate.
    CHECK((1.0 - p) * v.j_unerased + p * v.j_erased ==
          doctest::Approx(v.rate).epsilon(1e-12));

    // H(P_Y) and Var[-log P_Y] recomputed from the induced P_Y directly.
    Pmf py({(1.0 - p) / 2.0, (1.0 - p) / 2.0, p});
    CHECK(v.h_py == doctest::Approx(entropy(py)).epsilon(1e-12));
    CHECK(v.h_py == doctest::Approx(1.096067).epsilon(1e-5));
    double lu = std::log(2.0 / (1.0 - p)), le = std::log(1.0 / p);
    double m1 = (1.0 - p) * lu + p * le;
    double vpy = (1.0 - p) * (lu - m1) * (lu - m1) + p * (le - m1) * (le - m1);
    CHECK(v.v_py == doctest::Approx(vpy).epsilon(1e-12));
    CHECK(v.v_py == doctest::Approx(0.0049901).epsilon(1e-3));

    // Var[j - log P_Y(Y)] recomputed from the two-atom joint directly.
    double su = v.j_unerased + lu, se = v.j_erased + le;
    double ms = (1.0 - p) * su + p * se;
    double vfy = (1.0 - p) * (su - ms) * (su - ms) + p * (se - ms) * (se - ms);
    CHECK(v.v_fy == doctest::Approx(vfy).epsilon(1e-10));

    FuYeungProblem prob = make_fy_erasure_problem(p, D1, D2, 1.0);
    CHECK(prob.px.size() == 4);
    CHECK(prob.g.ny == 3);
    CHECK(prob.g(2) == 2);
    CHECK(prob.d1.at(2, 0) == doctest::Approx(0.0)); // letter (0,e) vs reproduction 0
    CHECK(prob.d1.at(3, 0) == doctest::Approx(1.0)); // letter (1,e) vs reproduction 0
}
