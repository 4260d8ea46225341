#pragma once

// Closed-form reference values for three families of two-decoder instances:
//  * a uniform binary source observed through a binary erasure channel
//    ("BEC instance": side information Y in {0, 1, erased}),
//  * the doubly symmetric binary source (DSBS),
//  * the erased-side-information variant where Y = g(X) is the erased
//    observation bundled into the source ("FY erasure example").
// These are used as independent oracles for the iterative solvers.

#include <cstddef>

#include "fbl/rd_solvers.hpp"

namespace fbl {

// Erasure letter index used for the BEC side-information alphabet {0, 1, e}.
inline constexpr std::size_t kBecErasure = 2;

struct BecInstance {
    double p;  // erasure probability, in (0,1)
    double d1; // distortion target for the decoder without side information
    double d2; // distortion target for the decoder with side information
};

// Distortion region where the closed forms below are valid:
// 0 < D1 <= 1/2, max(0, D1 - (1-p)/2) <= D2 <= p*D1, 0 < D2.
bool bec_in_region(const BecInstance& inst);

struct BecMultipliers {
    double lambda1;
    double lambda2;
};

double bec_rate(const BecInstance& inst);
BecMultipliers bec_multipliers(const BecInstance& inst);
// alpha(x, y) for x in {0,1}, y in {0,1,erased}.
double bec_alpha(const BecInstance& inst, std::size_t x, std::size_t y);
// alpha2(x, y, xhat1).
double bec_alpha2(const BecInstance& inst, std::size_t x, std::size_t y, std::size_t xhat1);
double bec_dispersion(const BecInstance& inst);
// Tilted information value at (x,y); depends only on whether y is erased.
double bec_tilted(const BecInstance& inst, std::size_t x, std::size_t y);
// Exact third absolute central moment of the tilted value.
double bec_third_abs_moment(const BecInstance& inst);

// Two-decoder problem instance realizing the BEC closed forms.
KaspiProblem make_bec_problem(double p, double D1, double D2);

// ---------------------------------------------------------------------------
// DSBS: P(0,0)=P(1,1)=(1-p)/2, P(0,1)=P(1,0)=p/2, Hamming distortions.

enum class DsbsRegime {
    Zero,          // D1 >= 1/2 and D2 >= p: no rate needed
    PlainRd,       // D1 < 1/2 and D2 >= min(p, D1): rate log2 - Hb(D1), lambda2 = 0
    ConditionalRd, // D1 >= D2 + (1-2p)/2 and D2 < p: rate Hb(p) - Hb(D2)
    Uncovered,     // outside the closed-form regimes
};

struct DsbsResult {
    DsbsRegime regime;
    double rate;       // valid unless regime == Uncovered
    double dispersion; // exact in the covered regimes (0 where the tilted value is constant)
};

DsbsResult dsbs_rate(double p, double D1, double D2);
KaspiProblem make_dsbs_problem(double p, double D1, double D2);

// ---------------------------------------------------------------------------
// Erasure example for the function-reconstruction (sum-rate) problem:
// X = (S1, S2) with S1 uniform binary, S2 = S1 with prob 1-p and erased with
// prob p, Y = g(X) = S2, both decoders reconstruct S1 under Hamming
// distortion. Valid in the same distortion region as the BEC instance.

struct FyErasureValues {
    double s;       // rate-constraint dual (0: the R1 constraint is slack)
    double t1, t2;  // distortion duals
    double j_unerased; // tilted value on letters with S2 != erased
    double j_erased;   // tilted value on letters with S2 = erased
    double rate;       // sum-rate excess R_FY
    double var_j;      // variance of the tilted value
    double cross;      // E[j * (-log P_Y(Y))]
    double h_py;       // H(P_Y)
    double v_py;       // Var[-log P_Y(Y)]
    double v_fy;       // Var[j - log P_Y(Y)]
};

FyErasureValues fy_erasure_example(double p, double D1, double D2);
FuYeungProblem make_fy_erasure_problem(double p, double D1, double D2, double R1);

} // namespace fbl
