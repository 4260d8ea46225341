#include "fbl/prob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fbl/errors.hpp"

namespace fbl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_mass_vector(const std::vector<double>& p, const char* what) {
    if (p.empty()) throw config_error(std::string(what) + ": empty");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw config_error(std::string(what) + ": negative or non-finite entry");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw config_error(std::string(what) + ": entries sum to " + std::to_string(sum));
}

} // namespace

// ---------------------------------------------------------------------------
// Types

Pmf::Pmf(std::vector<double> p) : p_(std::move(p)) {
    check_mass_vector(p_, "Pmf");
}

std::vector<std::size_t> Pmf::support(double tol) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < p_.size(); ++i)
        if (p_[i] > tol) idx.push_back(i);
    return idx;
}

JointPmf::JointPmf(std::vector<double> p, std::size_t nx, std::size_t ny)
    : p_(std::move(p)), nx_(nx), ny_(ny) {
    if (nx_ == 0 || ny_ == 0 || p_.size() != nx_ * ny_)
        throw config_error("JointPmf: dimension mismatch");
    check_mass_vector(p_, "JointPmf");
}

Pmf JointPmf::marginal_x() const {
    std::vector<double> m(nx_, 0.0);
    for (std::size_t x = 0; x < nx_; ++x)
        for (std::size_t y = 0; y < ny_; ++y) m[x] += at(x, y);
    return Pmf(std::move(m));
}

Pmf JointPmf::marginal_y() const {
    std::vector<double> m(ny_, 0.0);
    for (std::size_t x = 0; x < nx_; ++x)
        for (std::size_t y = 0; y < ny_; ++y) m[y] += at(x, y);
    return Pmf(std::move(m));
}

CondPmf::CondPmf(std::vector<double> p, std::size_t rows, std::size_t cols)
    : p_(std::move(p)), rows_(rows), cols_(cols) {
    if (rows_ == 0 || cols_ == 0 || p_.size() != rows_ * cols_)
        throw config_error("CondPmf: dimension mismatch");
    for (std::size_t r = 0; r < rows_; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < cols_; ++c) {
            double v = p_[r * cols_ + c];
            if (!(v >= 0.0) || !std::isfinite(v))
                throw config_error("CondPmf: negative or non-finite entry");
            sum += v;
        }
        if (std::fabs(sum - 1.0) > 1e-12)
            throw config_error("CondPmf: row " + std::to_string(r) + " sums to " +
                               std::to_string(sum));
    }
}

CondPmf CondPmf::uniform(std::size_t rows, std::size_t cols) {
    return CondPmf(std::vector<double>(rows * cols, 1.0 / static_cast<double>(cols)),
                   rows, cols);
}

DistortionMatrix::DistortionMatrix(std::vector<double> d, std::size_t nx, std::size_t nxhat)
    : d_(std::move(d)), nx_(nx), nxhat_(nxhat) {
    if (nx_ == 0 || nxhat_ == 0 || d_.size() != nx_ * nxhat_)
        throw config_error("DistortionMatrix: dimension mismatch");
    for (double v : d_)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw config_error("DistortionMatrix: entries must be finite and >= 0");
}

double DistortionMatrix::max_value() const {
    return *std::max_element(d_.begin(), d_.end());
}

double DistortionMatrix::min_value() const {
    return *std::min_element(d_.begin(), d_.end());
}

DetMap::DetMap(std::vector<std::size_t> m, std::size_t ny_letters)
    : map(std::move(m)), ny(ny_letters) {
    if (map.empty() || ny == 0) throw config_error("DetMap: empty");
    for (std::size_t y : map)
        if (y >= ny) throw config_error("DetMap: image out of range");
}

bool CovMatrix2::is_psd(double tol) const {
    double scale = std::max({1.0, std::fabs(v11), std::fabs(v22)});
    if (v11 < -tol * scale || v22 < -tol * scale) return false;
    return det() >= -tol * scale * scale;
}

// ---------------------------------------------------------------------------
// Information measures

double entropy(const Pmf& p) {
    double h = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
    return h;
}

double binary_entropy(double q) {
    if (!(q >= 0.0 && q <= 1.0))
        throw std::domain_error("binary_entropy: argument outside [0,1]");
    double h = 0.0;
    if (q > 0.0) h -= q * std::log(q);
    if (q < 1.0) h -= (1.0 - q) * std::log(1.0 - q);
    return h;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw config_error("kl_divergence: size mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return kInf;
        d += p[i] * std::log(p[i] / q[i]);
    }
    return d;
}

double kl_divergence(const Pmf& p, const Pmf& q) {
    return kl_divergence(p.data(), q.data());
}

double mutual_information(const JointPmf& pxy) {
    Pmf px = pxy.marginal_x();
    Pmf py = pxy.marginal_y();
    double mi = 0.0;
    for (std::size_t x = 0; x < pxy.nx(); ++x)
        for (std::size_t y = 0; y < pxy.ny(); ++y) {
            double p = pxy.at(x, y);
            if (p > 0.0) mi += p * std::log(p / (px[x] * py[y]));
        }
    return std::max(mi, 0.0);
}

double conditional_mutual_information(const std::vector<double>& pabc,
                                      std::size_t na, std::size_t nb, std::size_t nc) {
    if (pabc.size() != na * nb * nc)
        throw config_error("conditional_mutual_information: dimension mismatch");
    std::vector<double> pac(na * nc, 0.0), pbc(nb * nc, 0.0), pc(nc, 0.0);
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t b = 0; b < nb; ++b)
            for (std::size_t c = 0; c < nc; ++c) {
                double v = pabc[(a * nb + b) * nc + c];
                pac[a * nc + c] += v;
                pbc[b * nc + c] += v;
                pc[c] += v;
            }
    double mi = 0.0;
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t b = 0; b < nb; ++b)
            for (std::size_t c = 0; c < nc; ++c) {
                double v = pabc[(a * nb + b) * nc + c];
                if (v > 0.0)
                    mi += v * std::log(v * pc[c] / (pac[a * nc + c] * pbc[b * nc + c]));
            }
    return std::max(mi, 0.0);
}

// ---------------------------------------------------------------------------
// Gaussian utilities

double gaussian_pdf(double z) {
    static const double kInvSqrt2Pi = 0.3989422804014326779;
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double gaussian_cdf(double z) {
    if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
    return 0.5 * std::erfc(-z * 0.7071067811865475244);
}

double gaussian_sf(double z) {
    if (std::isinf(z)) return z > 0 ? 0.0 : 1.0;
    return 0.5 * std::erfc(z * 0.7071067811865475244);
}

namespace {

// Rational approximation of the inverse standard-normal CDF (relative error
// below 1.15e-9 everywhere), then polished with Newton steps against erfc.
double inverse_normal_cdf_approx(double p) {
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - plow) {
        q = p - 0.5;
        r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

} // namespace

double q_inv(double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::domain_error("q_inv: eps must lie strictly inside (0,1)");
    if (eps == 0.5) return 0.0;
    // Q^{-1}(eps) = Phi^{-1}(1-eps) = -Phi^{-1}(eps)
    double x = -inverse_normal_cdf_approx(eps);
    for (int it = 0; it < 3; ++it) {
        double f = gaussian_sf(x) - eps;
        double d = gaussian_pdf(x);
        if (d < 1e-300) break;
        x += f / d;
    }
    return x;
}

namespace {

// Adaptive Simpson quadrature with absolute tolerance.
template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm,
                            double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
    if (!(a < b)) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

} // namespace

double bivariate_gaussian_cdf(double x, double y, double mu1, double mu2,
                              const CovMatrix2& sigma) {
    if (std::isnan(x) || std::isnan(y))
        throw std::domain_error("bivariate_gaussian_cdf: NaN argument");
    if (!sigma.is_psd())
        throw config_error("bivariate_gaussian_cdf: covariance not PSD");

    const double a = x - mu1;
    const double b = y - mu2;
    const double scale = std::max(1.0, sigma.v11 * sigma.v22);
    const bool deg1 = sigma.v11 <= 1e-14;
    const bool deg2 = sigma.v22 <= 1e-14;

    if (deg1 && deg2) return (a >= 0.0 && b >= 0.0) ? 1.0 : 0.0;
    if (deg1) return (a >= 0.0) ? gaussian_cdf(b / std::sqrt(sigma.v22)) : 0.0;
    if (deg2) return (b >= 0.0) ? gaussian_cdf(a / std::sqrt(sigma.v11)) : 0.0;

    const double s1 = std::sqrt(sigma.v11);
    const double s2 = std::sqrt(sigma.v22);
    double rho = sigma.v12 / (s1 * s2);
    rho = std::clamp(rho, -1.0, 1.0);
    const double ap = a / s1;
    const double bp = b / s2;

    if (sigma.det() <= 1e-12 * scale) {
        // Rank-one covariance: both coordinates are deterministic multiples of
        // a single standard normal Z.
        if (rho >= 0.0) return gaussian_cdf(std::min(ap, bp));
        // U = s1*Z <= a and V = -s2*Z <= b  <=>  -b/s2 <= Z <= a/s1
        double lo = -bp, hi = ap;
        if (hi <= lo) return 0.0;
        return std::max(0.0, gaussian_cdf(hi) - gaussian_cdf(lo));
    }

    if (std::isinf(ap) && ap > 0) return gaussian_cdf(bp);
    if (std::isinf(bp) && bp > 0) return gaussian_cdf(ap);
    if (ap <= -8.5 || bp <= -8.5) return 0.0; // below 1e-16 mass

    // P(S <= ap, T <= bp), (S,T) standard bivariate normal with correlation rho:
    // integrate phi(s) * Phi((bp - rho s)/sqrt(1-rho^2)) over s <= ap.
    const double rbar = std::sqrt(1.0 - rho * rho);
    auto integrand = [&](double s) {
        return gaussian_pdf(s) * gaussian_cdf((bp - rho * s) / rbar);
    };
    const double lo = -8.5;
    const double hi = std::min(ap, 8.5);
    double v = adaptive_simpson(integrand, lo, hi, 1e-12);
    if (ap > 8.5) v += gaussian_sf(8.5) * 1.0; // negligible completion term
    return std::clamp(v, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Deterministic RNG: xoshiro256** seeded via splitmix64.

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
}

} // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (int i = 0; i < 4; ++i) s_[i] = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::next_u01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = next_u01();
    } while (u1 <= 0.0);
    double u2 = next_u01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586477 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

std::size_t Rng::next_index(const std::vector<double>& cumulative) {
    double u = next_u01();
    std::size_t lo = 0, hi = cumulative.size() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (u < cumulative[mid])
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

} // namespace fbl
