#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fbl/tilted.hpp"

namespace fbl {

// Guard against runaway grids: operations fail with a diagnostic rather than
// exhaust memory once a spectrum would occupy more than this many cells.
inline constexpr std::size_t kDefaultCellCap = 100000000;

// A closed interval [lower, upper] certain to contain an exact probability.
struct TailBracket {
    double lower = 0.0;
    double upper = 0.0;
};

// Exact lattice law of the n-fold i.i.d. sum of a 1-, 2-, or 3-axis per-letter
// statistic. Per-letter values are rounded once onto a shared grid, so the
// integer-lattice convolution itself is exact; the only approximation is the
// per-letter rounding, whose worst case is tracked per axis (`slack`) and
// widened into every tail bracket. Unused axes hold coordinate 0.
struct SpectrumPmf {
    double grid_width = 1.0;                      // lattice step (nats)
    int dims = 1;                                 // number of live axes (1..3)
    std::size_t n = 1;                            // letters folded into the sum
    std::array<double, 3> offset{{0.0, 0.0, 0.0}}; // per-letter value of lattice 0
    std::array<double, 3> slack{{0.0, 0.0, 0.0}};  // accumulated rounding slack
    std::vector<std::array<std::int64_t, 3>> cells; // sorted lexicographically
    std::vector<double> masses;                     // aligned with cells

    double total_mass() const;
    // Real value represented by cell `idx` on `axis`: n*offset + k*grid_width.
    double axis_value(std::size_t idx, int axis) const;
};

// Exact n-fold convolution of the per-letter statistic. `axis_values` holds
// one vector per axis (1 to 3), each aligned with `probs`; letters with zero
// probability are dropped, letters landing on the same lattice point merge.
SpectrumPmf iid_spectrum(const std::vector<std::vector<double>>& axis_values,
                         const std::vector<double>& probs, std::size_t n, double eta,
                         std::size_t cell_cap = kDefaultCellCap);

// Bracket on Pr[axis-0 sum >= threshold].
TailBracket spectrum_tail(const SpectrumPmf& sp, double threshold);

// Bracket on Pr[union over axes j of {axis-j sum >= thresholds[j]}].
// thresholds.size() must equal dims; -inf makes an event certain, +inf ignores it.
TailBracket spectrum_union_tail(const SpectrumPmf& sp,
                                const std::vector<double>& thresholds);

// Gaussian tail Q((threshold - n*mean)/sqrt(n*var)) together with the
// third-moment normal-approximation radius 6*third_abs/(sqrt(n)*var^{3/2}).
struct BerryEsseenTail {
    double gauss_tail = 0.0;
    double be_radius = 0.0;
};
BerryEsseenTail berry_esseen_tail(double mean, double var, double third_abs,
                                  std::size_t n, double threshold);

// Seeded sampling estimate of the union-tail probability with a binomial
// three-sigma confidence radius. Deterministic for a fixed seed.
struct McTail {
    double estimate = 0.0;
    double radius = 0.0;
};
McTail monte_carlo_tail(const std::vector<std::vector<double>>& axis_values,
                        const std::vector<double>& probs, std::size_t n,
                        const std::vector<double>& thresholds, std::size_t samples,
                        std::uint64_t seed);

// Evaluation controls for the converse bounds.
struct ConverseOptions {
    double eta = 0.0;            // 0 = automatic: value range / 2^16 (1 axis) or / 2^10
    std::size_t cell_cap = kDefaultCellCap;
    std::string method = "auto"; // auto | exact-dp | monte-carlo | berry-esseen
    std::uint64_t seed = 1;      // sampling fallback seed
    std::size_t samples = 1000000;
};

// Result of a converse-bound evaluation. `tail` brackets the spectrum tail (or
// union) probability; the reported lower bound on the excess probability is
// max(0, tail.lower - penalty).
struct BoundReport {
    std::size_t n = 0;
    double logM = 0.0;  // two-decoder code size (nats)
    double logM1 = 0.0; // stage code sizes for the sum-rate bound (nats)
    double logM2 = 0.0;
    double gamma = 0.0;
    double penalty = 0.0;
    TailBracket tail;
    double lower_bound_on_excess_prob = 0.0;
    std::string method;
    double eta = 0.0; // grid actually used (0 for sampling/gaussian methods)
};

// Two-decoder converse: any block code of size M obeys
//   excess_prob >= Pr[sum of per-letter densities >= logM + n*gamma] - exp(-n*gamma).
BoundReport kaspi_converse(const TiltedTable& tilted, std::size_t n, double logM,
                           double gamma, const ConverseOptions& opts = {});

// Sum-rate converse: any pair of stage codes (M1, M2) obeys
//   excess_prob >= Pr[T1 or T2 or T3] - 4*exp(-n*gamma)
// with per-letter statistics (first-stage density, function-stage information,
// sum-rate density) summed over the block and thresholds
//   T1: sum >= logM1 + n*gamma
//   T2: sum >= logM2 + n*gamma
//   T3: sum >= logM1 + logM2 + s*logM1 + (1+s)*n*gamma.
BoundReport fy_converse(const FyTiltedBundle& bundle, double s_star, std::size_t n,
                        double logM1, double logM2, double gamma,
                        const ConverseOptions& opts = {});

} // namespace fbl
