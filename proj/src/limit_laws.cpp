#include "gwlab/limit_laws.hpp"

#include <cmath>
#include <complex>
#include <ostream>
#include <numbers>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "gwlab/series_engine.hpp"

namespace gwlab {

namespace {

using mp50 = boost::multiprecision::cpp_bin_float_50;

// Gaver-Stehfest weights zeta_k, k = 1..2M, exact combinatorics in mp50
std::vector<mp50> gs_weights(int two_m) {
    const int M = two_m / 2;
    auto binom = [](int n, int k) {
        mp50 v = 1;
        for (int i = 0; i < k; ++i) {
            v *= n - i;
            v /= i + 1;
        }
        return v;
    };
    mp50 mfact = 1;
    for (int i = 2; i <= M; ++i) mfact *= i;
    std::vector<mp50> zeta(static_cast<std::size_t>(two_m) + 1);
    for (int k = 1; k <= two_m; ++k) {
        mp50 acc = 0;
        for (int j = (k + 1) / 2; j <= std::min(k, M); ++j) {
            mp50 term = boost::multiprecision::pow(mp50(j), M + 1) / mfact;
            term *= binom(M, j) * binom(2 * j, j) * binom(j, k - j);
            acc += term;
        }
        zeta[static_cast<std::size_t>(k)] = ((M + k) % 2 == 0) ? acc : -acc;
    }
    return zeta;
}

// Phi(lambda) = 1 - (1+lambda^{-alpha})^{-1/alpha} = -expm1(-log1p(lambda^{-alpha})/alpha)
mp50 phi_mp(mp50 lambda, mp50 alpha) {
    const mp50 w = exp(-alpha * log(lambda));
    return -expm1(-log1p(w) / alpha);
}

std::complex<double> phi_complex(std::complex<double> z, double alpha) {
    // 1 - z (1+z^alpha)^{-1/alpha}, principal branches; valid off the negative
    // real axis, which the Talbot contour avoids
    const std::complex<double> za = std::exp(alpha * std::log(z));
    return 1.0 - z * std::exp(-std::log(1.0 + za) / alpha);
}

} // namespace

YaglomLaw::YaglomLaw(double alpha, YaglomConfig cfg) : alpha_(alpha), cfg_(cfg) {
    if (!(alpha > 0.0) || alpha > 1.0) throw ParameterOutOfRange("YaglomLaw: alpha must lie in (0,1]");
    if (cfg_.gs_terms % 2 != 0 || cfg_.gs_terms < 4 || cfg_.gs_terms > 40)
        throw ParameterOutOfRange("YaglomLaw: gs_terms must be even, in [4,40]");
}

double YaglomLaw::transform(int j, double lambda) const {
    if (!(lambda > 0.0)) throw DomainError("yaglom_transform: lambda must be positive");
    if (j < 1) throw DomainError("yaglom_transform: j must be >= 1");
    const double w = std::exp(-alpha_ * std::log(lambda));
    const double phi = -std::expm1(-std::log1p(w) / alpha_);
    return std::pow(phi, static_cast<double>(j));
}

double YaglomLaw::cdf_gs(int j, double x) const {
    static std::mutex wmu;
    static std::map<int, std::vector<mp50>> wcache;
    const std::vector<mp50>* zeta;
    {
        std::lock_guard<std::mutex> lock(wmu);
        auto it = wcache.find(cfg_.gs_terms);
        if (it == wcache.end()) it = wcache.emplace(cfg_.gs_terms, gs_weights(cfg_.gs_terms)).first;
        zeta = &it->second;
    }
    const mp50 alpha = alpha_;
    const mp50 ln2 = log(mp50(2));
    const mp50 xm = x;
    mp50 acc = 0;
    for (int k = 1; k <= cfg_.gs_terms; ++k) {
        const mp50 lambda = k * ln2 / xm;
        const mp50 F = pow(phi_mp(lambda, alpha), j) / lambda;
        acc += (*zeta)[static_cast<std::size_t>(k)] * F;
    }
    acc *= ln2 / xm;
    double v = static_cast<double>(acc);
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    return v;
}

double YaglomLaw::cdf_talbot(int j, double x) const {
    // fixed-Talbot rule (Abate & Valko): r = 2N/(5x), s(theta) = r theta (cot theta + i),
    //   f(x) ~ (r/N) [ e^{rx} F(r)/2 + sum_{k=1}^{N-1} Re( e^{x s_k} (1 + i sigma_k) F(s_k) ) ]
    const int N = cfg_.talbot_terms;
    const double pi = std::numbers::pi;
    const double r = 2.0 * N / (5.0 * x);
    double acc;
    {
        const std::complex<double> s(r, 0.0);
        const std::complex<double> F = std::pow(phi_complex(s, alpha_), j) / s;
        acc = 0.5 * std::exp(r * x) * F.real();
    }
    for (int k = 1; k < N; ++k) {
        const double theta = k * pi / N;
        const double cot = std::cos(theta) / std::sin(theta);
        const std::complex<double> s = r * std::complex<double>(theta * cot, theta);
        const double sigma = theta + (theta * cot - 1.0) * cot;
        const std::complex<double> F = std::pow(phi_complex(s, alpha_), j) / s;
        acc += (std::exp(s * x) * std::complex<double>(1.0, sigma) * F).real();
    }
    double v = (r / N) * acc;
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    return v;
}

double YaglomLaw::cdf_series(int j, double x, int terms) const {
    // Phi(lambda)^j = sum_{k>=j} d_k lambda^{-alpha k}  with
    //   c_k = (-1)^{k+1} Gamma(1/alpha + k) / (Gamma(1/alpha) k!)
    // and d = j-fold convolution of c; termwise inversion gives the globally
    // convergent expansion M^{*j}(x) = sum_k d_k x^{alpha k} / Gamma(1+alpha k).
    const double ia = 1.0 / alpha_;
    std::vector<double> c(static_cast<std::size_t>(terms) + 1, 0.0);
    double log_abs = 0.0; // log |c_k| accumulated
    for (int k = 1; k <= terms; ++k) {
        log_abs += std::log((ia + k - 1) / k);
        c[static_cast<std::size_t>(k)] = ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(log_abs);
    }
    std::vector<double> d = c;
    for (int rep = 1; rep < j; ++rep) {
        std::vector<double> next(c.size(), 0.0);
        for (std::size_t a = 1; a < c.size(); ++a) {
            if (d[a] == 0.0) continue;
            for (std::size_t b = 1; a + b <= static_cast<std::size_t>(terms); ++b) next[a + b] += d[a] * c[b];
        }
        d = next;
    }
    const double logx = std::log(x);
    double acc = 0.0;
    for (int k = j; k <= terms; ++k) {
        const double term = d[static_cast<std::size_t>(k)] *
                            std::exp(alpha_ * k * logx - std::lgamma(1.0 + alpha_ * k));
        acc += term;
    }
    return acc;
}

double YaglomLaw::smallx_asymptotic(int j, double x) const {
    if (!(x > 0.0)) throw DomainError("smallx_asymptotic: x must be positive");
    const double aj = alpha_ * j;
    return std::exp(aj * std::log(x) - j * std::log(alpha_) - std::lgamma(1.0 + aj));
}

void YaglomLaw::validate_methods(int j) const {
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = validated_.find(j);
        if (it != validated_.end()) return;
    }
    // 10 sample points spanning the useful range
    const double xs[10] = {0.05, 0.1, 0.2, 0.5, 1.0, 1.5, 2.0, 4.0, 8.0, 16.0};
    for (double x : xs) {
        const double a = cdf_gs(j, x);
        const double b = cdf_talbot(j, x);
        if (std::fabs(a - b) > cfg_.method_tol)
            throw InversionUnstable("yaglom_cdf: GS and Talbot disagree by " + std::to_string(std::fabs(a - b)) +
                                    " at x=" + std::to_string(x) + ", j=" + std::to_string(j));
    }
    std::lock_guard<std::mutex> lock(mu_);
    validated_[j] = true;
}

double YaglomLaw::cdf(int j, double x) const {
    if (!(x > 0.0)) throw DomainError("yaglom_cdf: x must be positive");
    if (j < 1) throw DomainError("yaglom_cdf: j must be >= 1");
    validate_methods(j);
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find({j, x});
        if (it != cache_.end()) return it->second;
    }
    const double v = cdf_gs(j, x);
    std::lock_guard<std::mutex> lock(mu_);
    cache_[{j, x}] = v;
    return v;
}

void write_limit_curve_csv(const YaglomLaw& law, int j, const std::vector<double>& x_grid,
                           std::ostream& os) {
    os << "alpha,j,x,value,method_disagreement\n";
    char buf[64];
    for (double x : x_grid) {
        const double gs = law.cdf(j, x);
        const double tb = law.cdf_talbot(j, x);
        os << law.alpha() << ',' << j << ',';
        std::snprintf(buf, sizeof buf, "%.17g", x);
        os << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", gs);
        os << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", std::fabs(gs - tb));
        os << buf << '\n';
    }
}

Thm1Prediction thm1_prediction(double alpha, long double survival_n, std::int64_t n, std::int64_t phi) {
    Thm1Prediction p;
    p.regime_warning = static_cast<double>(phi) / static_cast<double>(n) > 0.1;
    const long double v = survival_n / (static_cast<long double>(alpha) * static_cast<long double>(n)) *
                          static_cast<long double>(phi) /
                          static_cast<long double>(std::tgamma(1.0 + alpha));
    p.value = static_cast<double>(v);
    return p;
}

Thm1Prediction thm1_prediction(const OffspringLaw& law, std::int64_t n, std::int64_t phi) {
    return thm1_prediction(law.alpha(), survival_at(law, n), n, phi);
}

double thm2_limit_pmf(const YaglomLaw& law, int j, double x) {
    if (!(x > 0.0)) throw DomainError("thm2_limit_pmf: x must be positive");
    if (j < 1) throw DomainError("thm2_limit_pmf: j must be >= 1");
    const double alpha = law.alpha();
    const double coeff = alpha * std::exp(std::lgamma(static_cast<double>(j) + alpha) -
                                          std::lgamma(static_cast<double>(j) + 1.0));
    const double logy = -std::log(x) / alpha;
    double m;
    if (logy > 690.0)
        m = 1.0; // x^{-1/alpha} overflows: saturate at the CDF limit
    else if (logy < -690.0)
        m = 0.0;
    else
        m = law.cdf(j, std::exp(logy));
    return coeff * x * m;
}

double mrca_limit_cdf(const YaglomLaw& law, double x) {
    if (!(x > 0.0)) throw DomainError("mrca_limit_cdf: x must be positive");
    const double alpha = law.alpha();
    const double coeff = alpha * std::tgamma(1.0 + alpha);
    const double logy = -std::log(x) / alpha;
    double m;
    if (logy > 690.0)
        m = 1.0;
    else if (logy < -690.0)
        m = 0.0;
    else
        m = law.cdf(1, std::exp(logy));
    return coeff * x * m;
}

} // namespace gwlab
