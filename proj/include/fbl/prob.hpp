#pragma once

// Core probability types and information measures over finite alphabets.
// All information quantities are in nats; 0*log(0) is treated as 0 and
// q*log(q/0) as +infinity.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fbl {

// Mass below this threshold counts as "outside the support".
inline constexpr double kSupportTol = 1e-12;
// Probability vectors must sum to 1 within this tolerance.
inline constexpr double kPmfSumTol = 1e-12;

// A probability mass function over a finite alphabet {0, ..., size()-1}.
class Pmf {
public:
    explicit Pmf(std::vector<double> p);

    std::size_t size() const { return p_.size(); }
    double operator[](std::size_t i) const { return p_[i]; }
    const std::vector<double>& data() const { return p_; }

    // Indices with mass above `tol`.
    std::vector<std::size_t> support(double tol = kSupportTol) const;

private:
    std::vector<double> p_;
};

// A joint distribution over a pair of finite alphabets, stored row-major
// (x index slow, y index fast).
class JointPmf {
public:
    JointPmf(std::vector<double> p, std::size_t nx, std::size_t ny);

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    double at(std::size_t x, std::size_t y) const { return p_[x * ny_ + y]; }
    const std::vector<double>& data() const { return p_; }

    Pmf marginal_x() const;
    Pmf marginal_y() const;

private:
    std::vector<double> p_;
    std::size_t nx_, ny_;
};

// A row-stochastic kernel: `rows` conditioning cells, `cols` output letters.
class CondPmf {
public:
    CondPmf(std::vector<double> p, std::size_t rows, std::size_t cols);
    static CondPmf uniform(std::size_t rows, std::size_t cols);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double at(std::size_t r, std::size_t c) const { return p_[r * cols_ + c]; }
    const std::vector<double>& data() const { return p_; }

private:
    std::vector<double> p_;
    std::size_t rows_, cols_;
};

// A per-letter distortion matrix d(x, xhat) with finite non-negative entries.
class DistortionMatrix {
public:
    DistortionMatrix(std::vector<double> d, std::size_t nx, std::size_t nxhat);

    std::size_t nx() const { return nx_; }
    std::size_t nxhat() const { return nxhat_; }
    double at(std::size_t x, std::size_t xhat) const { return d_[x * nxhat_ + xhat]; }
    const std::vector<double>& data() const { return d_; }
    double max_value() const;
    double min_value() const;

private:
    std::vector<double> d_;
    std::size_t nx_, nxhat_;
};

// A deterministic letter map g: {0..nx-1} -> {0..ny-1}.
struct DetMap {
    std::vector<std::size_t> map;
    std::size_t ny = 0;

    DetMap() = default;
    DetMap(std::vector<std::size_t> m, std::size_t ny_letters);
    std::size_t operator()(std::size_t x) const { return map[x]; }
    std::size_t nx() const { return map.size(); }
};

// A 2x2 covariance matrix.
struct CovMatrix2 {
    double v11 = 0.0;
    double v12 = 0.0;
    double v22 = 0.0;

    double det() const { return v11 * v22 - v12 * v12; }
    // Fails when an eigenvalue is materially negative.
    bool is_psd(double tol = 1e-9) const;
};

// ---------------------------------------------------------------------------
// Information measures (nats).

double entropy(const Pmf& p);
double binary_entropy(double q); // throws std::domain_error outside [0,1]
double kl_divergence(const Pmf& p, const Pmf& q); // +inf on support violation
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);
double mutual_information(const JointPmf& pxy);

// I(A;B|C) for a joint over (a,b,c) flattened with c fastest:
// p[(a*nb + b)*nc + c].
double conditional_mutual_information(const std::vector<double>& pabc,
                                      std::size_t na, std::size_t nb, std::size_t nc);

// ---------------------------------------------------------------------------
// Gaussian utilities.

double gaussian_pdf(double z);
double gaussian_cdf(double z); // Phi
double gaussian_sf(double z);  // Q(z) = 1 - Phi(z)

// Inverse of the Gaussian complementary CDF: Q(q_inv(eps)) = eps, 0 < eps < 1.
double q_inv(double eps);

// P(U <= x, V <= y) for (U,V) ~ N(mu, sigma). Degenerate covariances
// (det below 1e-12 relative) are handled by projecting onto the principal
// axis; a fully-degenerate sigma reduces to indicators.
double bivariate_gaussian_cdf(double x, double y, double mu1, double mu2,
                              const CovMatrix2& sigma);

// ---------------------------------------------------------------------------
// Deterministic sampling helpers (identical output for identical seeds on any
// platform; no std::distribution types involved).

class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next_u64();
    double next_u01();            // uniform on [0,1) with 53 random bits
    double next_gaussian();       // standard normal via Box-Muller
    // Index sampled from a cumulative mass vector (last entry ~ 1).
    std::size_t next_index(const std::vector<double>& cumulative);

private:
    std::uint64_t s_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace fbl
