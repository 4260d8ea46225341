#include "fbl/oracles.hpp"

#include <cmath>
#include <vector>

#include "fbl/errors.hpp"
#include "fbl/prob.hpp"

namespace fbl {

namespace {

void check_bec(const BecInstance& inst) {
    if (!(inst.p > 0.0 && inst.p < 1.0))
        throw config_error("BEC instance: p must lie in (0,1)");
    if (!bec_in_region(inst))
        throw config_error("BEC instance: (D1,D2) outside the closed-form region");
}

// Hamming distortion on a binary reproduction alphabet.
DistortionMatrix hamming2(const std::vector<std::size_t>& source_bits) {
    std::vector<double> d;
    d.reserve(source_bits.size() * 2);
    for (std::size_t bit : source_bits) {
        d.push_back(bit == 0 ? 0.0 : 1.0);
        d.push_back(bit == 1 ? 0.0 : 1.0);
    }
    return DistortionMatrix(std::move(d), source_bits.size(), 2);
}

} // namespace

bool bec_in_region(const BecInstance& inst) {
    const double p = inst.p, D1 = inst.d1, D2 = inst.d2;
    if (!(D1 > 0.0 && D1 <= 0.5)) return false;
    if (!(D2 > 0.0 && D2 < p)) return false;
    if (!(D2 <= p * D1 + 1e-15)) return false;
    if (!(D1 - D2 >= -1e-15 && D1 - (1.0 - p) / 2.0 <= D2 + 1e-15)) return false;
    return true;
}

double bec_rate(const BecInstance& inst) {
    check_bec(inst);
    const double p = inst.p;
    return std::log(2.0) - (1.0 - p) * binary_entropy((inst.d1 - inst.d2) / (1.0 - p)) -
           p * binary_entropy(inst.d2 / p);
}

BecMultipliers bec_multipliers(const BecInstance& inst) {
    check_bec(inst);
    const double p = inst.p, D1 = inst.d1, D2 = inst.d2;
    double l1 = std::log(((1.0 - p) - (D1 - D2)) / (D1 - D2));
    double l2 = -l1 + std::log((p - D2) / D2);
    return {l1, l2};
}

double bec_alpha2(const BecInstance& inst, std::size_t x, std::size_t y,
                  std::size_t xhat1) {
    BecMultipliers m = bec_multipliers(inst);
    if (y != kBecErasure) {
        // Side information reveals the source letter; alpha2 penalizes the
        // impossible (zero-probability) mismatched cells.
        return (x == y) ? 1.0 : std::exp(m.lambda2);
    }
    return (x == xhat1) ? 1.0 : std::exp(m.lambda2);
}

double bec_alpha(const BecInstance& inst, std::size_t x, std::size_t y) {
    BecMultipliers m = bec_multipliers(inst);
    if (y == kBecErasure) return 2.0 / (1.0 + std::exp(-m.lambda1 - m.lambda2));
    if (x == y) return 2.0 / (1.0 + std::exp(-m.lambda1));
    // Unsupported cell (x != y observed without erasure); value follows from
    // the same marginal/alpha2 tables.
    return 2.0 * std::exp(m.lambda2) / (1.0 + std::exp(-m.lambda1));
}

double bec_tilted(const BecInstance& inst, std::size_t x, std::size_t y) {
    BecMultipliers m = bec_multipliers(inst);
    return std::log(bec_alpha(inst, x, y)) - m.lambda1 * inst.d1 - m.lambda2 * inst.d2;
}

double bec_dispersion(const BecInstance& inst) {
    check_bec(inst);
    const double p = inst.p, D1 = inst.d1, D2 = inst.d2;
    double diff = std::log((p - D2) / p) - std::log(((1.0 - p) - (D1 - D2)) / (1.0 - p));
    return p * (1.0 - p) * diff * diff;
}

double bec_third_abs_moment(const BecInstance& inst) {
    const double p = inst.p;
    double ju = bec_tilted(inst, 0, 0);
    double je = bec_tilted(inst, 0, kBecErasure);
    double mean = (1.0 - p) * ju + p * je;
    return (1.0 - p) * std::pow(std::fabs(ju - mean), 3) +
           p * std::pow(std::fabs(je - mean), 3);
}

KaspiProblem make_bec_problem(double p, double D1, double D2) {
    if (!(p > 0.0 && p < 1.0)) throw config_error("make_bec_problem: p outside (0,1)");
    const double h = (1.0 - p) / 2.0;
    JointPmf joint({h, 0.0, p / 2.0, 0.0, h, p / 2.0}, 2, 3);
    return KaspiProblem(joint, hamming2({0, 1}), hamming2({0, 1}), D1, D2);
}

// ---------------------------------------------------------------------------
// DSBS

DsbsResult dsbs_rate(double p, double D1, double D2) {
    if (!(p >= 0.0 && p <= 0.5)) throw config_error("dsbs_rate: p outside [0, 1/2]");
    if (!(D1 >= 0.0 && D2 >= 0.0)) throw config_error("dsbs_rate: negative distortion");
    if (D1 >= 0.5 && D2 >= p) return {DsbsRegime::Zero, 0.0, 0.0};
    if (D1 < 0.5 && D2 >= std::min(p, D1)) {
        // The second decoder's constraint is slack: rate log2 - Hb(D1) with a
        // constant tilted value, hence zero dispersion.
        return {DsbsRegime::PlainRd, std::log(2.0) - binary_entropy(D1), 0.0};
    }
    if (D1 >= D2 + (1.0 - 2.0 * p) / 2.0 && D2 < p) {
        double rate = binary_entropy(p) - binary_entropy(D2);
        // Tilted value -log P_{X|Y}(x|y) - Hb(D2): Var over the symmetric pair.
        double hp = binary_entropy(p);
        double a = -std::log(1.0 - p) - hp;
        double b = -std::log(p) - hp;
        double disp = (1.0 - p) * a * a + p * b * b;
        return {DsbsRegime::ConditionalRd, rate, disp};
    }
    return {DsbsRegime::Uncovered, 0.0, 0.0};
}

KaspiProblem make_dsbs_problem(double p, double D1, double D2) {
    if (!(p >= 0.0 && p <= 0.5)) throw config_error("make_dsbs_problem: p outside [0, 1/2]");
    const double same = (1.0 - p) / 2.0, diff = p / 2.0;
    JointPmf joint({same, diff, diff, same}, 2, 2);
    return KaspiProblem(joint, hamming2({0, 1}), hamming2({0, 1}), D1, D2);
}

// ---------------------------------------------------------------------------
// Erasure example for the function-reconstruction problem.

FyErasureValues fy_erasure_example(double p, double D1, double D2) {
    BecInstance inst{p, D1, D2};
    check_bec(inst);
    FyErasureValues v{};
    v.s = 0.0;
    v.t1 = std::log((1.0 - p) / (D1 - D2) - 1.0);
    v.t2 = -v.t1 + std::log(p / D2 - 1.0);
    const double base = -v.t1 * D1 - v.t2 * D2;
    v.j_unerased = std::log(2.0 / (1.0 + std::exp(-v.t1))) + base;
    v.j_erased = std::log(2.0 / (1.0 + std::exp(-v.t1 - v.t2))) + base;
    v.rate = std::log(2.0) - (1.0 - p) * binary_entropy((D1 - D2) / (1.0 - p)) -
             p * binary_entropy(D2 / p);
    double diff = std::log(1.0 - D2 / p) - std::log(1.0 - (D1 - D2) / (1.0 - p));
    v.var_j = p * (1.0 - p) * diff * diff;
    v.h_py = (1.0 - p) * std::log(2.0) + binary_entropy(p);
    v.cross = (1.0 - p) * v.j_unerased * std::log(2.0 / (1.0 - p)) +
              p * v.j_erased * std::log(1.0 / p);
    double ly = std::log(2.0 * p / (1.0 - p));
    v.v_py = p * (1.0 - p) * ly * ly;
    v.v_fy = v.var_j + v.v_py + 2.0 * (v.cross - v.h_py * v.rate);
    return v;
}

FuYeungProblem make_fy_erasure_problem(double p, double D1, double D2, double R1) {
    if (!(p > 0.0 && p < 1.0))
        throw config_error("make_fy_erasure_problem: p outside (0,1)");
    // Letters (s1, s2): 0=(0,0), 1=(1,1), 2=(0,e), 3=(1,e); y = s2 in {0,1,e}.
    Pmf px({(1.0 - p) / 2.0, (1.0 - p) / 2.0, p / 2.0, p / 2.0});
    DetMap g({0, 1, 2, 2}, 3);
    DistortionMatrix d = hamming2({0, 1, 0, 1}); // Hamming on s1 for both decoders
    return FuYeungProblem(px, g, d, d, R1, D1, D2);
}

} // namespace fbl
