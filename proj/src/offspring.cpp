#include "gwlab/offspring.hpp"

#include <cmath>
#include <numeric>

namespace gwlab {

namespace {

// |binom(beta, m)| for non-integer beta, running product (m small).
// binom(beta, m) = beta (beta-1) ... (beta-m+1) / m!
double abs_binom_real(double beta, std::int64_t m) {
    double v = 1.0;
    for (std::int64_t i = 0; i < m; ++i)
        v *= std::fabs(beta - static_cast<double>(i)) / static_cast<double>(i + 1);
    return v;
}

// log of |binom(beta,m)| without the product loop, usable for very large m.
// Requires beta in (0,2) non-integer so that the falling factorial is
// Gamma-representable: |binom(beta,m)| = Gamma(beta+1) Gamma(m-beta) /
//                                        (Gamma(1-beta)Gamma(beta) ... )
// For our two uses (beta = 1+alpha and beta = alpha with alpha in (0,1)) the
// closed forms below are exact.
double stable_pmf_large_j(double alpha, double c, std::int64_t j) {
    // p_j = c (1+alpha) alpha Gamma(j-1-alpha) / (Gamma(1-alpha) Gamma(j+1)), j >= 2
    const double lg = std::lgamma(static_cast<double>(j) - 1.0 - alpha) - std::lgamma(1.0 - alpha) -
                      std::lgamma(static_cast<double>(j) + 1.0);
    return c * (1.0 + alpha) * alpha * std::exp(lg);
}

double stable_tail_large_j(double alpha, double c, std::int64_t j) {
    // P(xi >= j) = c alpha Gamma(j-1-alpha) / (Gamma(1-alpha) Gamma(j)), j >= 2
    const double lg = std::lgamma(static_cast<double>(j) - 1.0 - alpha) - std::lgamma(1.0 - alpha) -
                      std::lgamma(static_cast<double>(j));
    return c * alpha * std::exp(lg);
}

} // namespace

OffspringLaw OffspringLaw::stable_frac(double alpha, double c) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw ParameterOutOfRange("StableFrac: alpha must lie in (0,1], got " + std::to_string(alpha));
    if (!(c > 0.0) || c > 1.0 / (1.0 + alpha) + 1e-15)
        throw ParameterOutOfRange("StableFrac: c must lie in (0, 1/(1+alpha)], got c=" + std::to_string(c) +
                                  " with bound " + std::to_string(1.0 / (1.0 + alpha)));
    OffspringLaw law;
    law.family_ = Family::StableFrac;
    law.alpha_ = alpha;
    law.c_ = c;
    law.sigma2_ = (alpha == 1.0) ? 2.0 * c : std::numeric_limits<double>::infinity();
    law.validate_and_finish();
    return law;
}

OffspringLaw OffspringLaw::stable_frac(Rational alpha, Rational c) {
    return stable_frac(alpha.value(), c.value(), alpha, c);
}

OffspringLaw OffspringLaw::stable_frac(double alpha, double c, std::optional<Rational> alpha_rat,
                                       std::optional<Rational> c_rat) {
    OffspringLaw law = stable_frac(alpha, c);
    law.alpha_rat_ = alpha_rat;
    law.c_rat_ = c_rat;
    return law;
}

OffspringLaw OffspringLaw::geometric() {
    OffspringLaw law;
    law.family_ = Family::Geometric;
    law.alpha_ = 1.0;
    law.sigma2_ = 2.0;
    law.validate_and_finish();
    return law;
}

OffspringLaw OffspringLaw::custom(std::vector<double> probabilities, double tail_exponent) {
    if (probabilities.empty()) throw ParameterOutOfRange("CustomPmf: empty probability list");
    double sum = 0.0, mean = 0.0;
    for (std::size_t j = 0; j < probabilities.size(); ++j) {
        if (probabilities[j] < 0.0) throw ParameterOutOfRange("CustomPmf: negative probability at j=" + std::to_string(j));
        sum += probabilities[j];
        mean += static_cast<double>(j) * probabilities[j];
    }
    if (std::fabs(sum - 1.0) > 1e-10) throw ParameterOutOfRange("CustomPmf: probabilities sum to " + std::to_string(sum));
    if (std::fabs(mean - 1.0) > 1e-10)
        throw NotCritical("CustomPmf: mean is " + std::to_string(mean) + ", expected 1");
    if (!(tail_exponent > 0.0) || tail_exponent > 1.0)
        throw ParameterOutOfRange("CustomPmf: declared tail exponent must lie in (0,1]");
    OffspringLaw law;
    law.family_ = Family::CustomPmf;
    law.alpha_ = tail_exponent;
    law.custom_p_ = std::move(probabilities);
    double m2 = 0.0;
    for (std::size_t j = 0; j < law.custom_p_.size(); ++j) m2 += static_cast<double>(j) * static_cast<double>(j) * law.custom_p_[j];
    law.sigma2_ = m2 - 1.0;
    law.validate_and_finish();
    return law;
}

void OffspringLaw::validate_and_finish() {
    j0_ = 1;
    while (pmf(j0_) == 0.0) {
        ++j0_;
        if (j0_ > kTableMax) throw ParameterOutOfRange("law has no support on 1..64");
    }
    build_sampler_table();
}

double OffspringLaw::pmf(std::int64_t j) const {
    if (j < 0) return 0.0;
    switch (family_) {
        case Family::StableFrac: {
            if (j == 0) return c_;
            if (j == 1) {
                // p1 >= 0 enforced at construction; snap roundoff-scale values
                // to an exact 0 so that j0 detection is stable for c=1/(1+alpha)
                const double p1 = 1.0 - c_ * (1.0 + alpha_);
                return std::fabs(p1) <= 1e-14 ? 0.0 : p1;
            }
            if (alpha_ == 1.0) return j == 2 ? c_ : 0.0;
            if (j <= 256) return c_ * abs_binom_real(1.0 + alpha_, j);
            return stable_pmf_large_j(alpha_, c_, j);
        }
        case Family::Geometric:
            return std::exp2(-static_cast<double>(j + 1));
        case Family::CustomPmf:
            return j < static_cast<std::int64_t>(custom_p_.size()) ? custom_p_[static_cast<std::size_t>(j)] : 0.0;
    }
    return 0.0;
}

double OffspringLaw::tail(std::int64_t j) const {
    if (j <= 0) return 1.0;
    switch (family_) {
        case Family::StableFrac: {
            if (j == 1) return 1.0 - c_;
            // P(xi >= j) = c |binom(alpha, j-1)| for j >= 2 (binomial identity,
            // verified against cumulative pmf sums in the test suite)
            if (alpha_ == 1.0) return j == 2 ? c_ : 0.0;
            if (j <= 256) return c_ * abs_binom_real(alpha_, j - 1);
            return stable_tail_large_j(alpha_, c_, j);
        }
        case Family::Geometric:
            return std::exp2(-static_cast<double>(j));
        case Family::CustomPmf: {
            if (j >= static_cast<std::int64_t>(custom_p_.size())) return 0.0;
            double t = 0.0;
            for (std::size_t i = custom_p_.size(); i-- > static_cast<std::size_t>(j);) t += custom_p_[i];
            return t;
        }
    }
    return 0.0;
}

double OffspringLaw::pgf(double s) const {
    if (s < 0.0 || s > 1.0) throw DomainError("pgf: s must lie in [0,1]");
    switch (family_) {
        case Family::StableFrac:
            return s + c_ * std::pow(1.0 - s, 1.0 + alpha_);
        case Family::Geometric:
            return 1.0 / (2.0 - s);
        case Family::CustomPmf: {
            double acc = 0.0;
            for (std::size_t j = custom_p_.size(); j-- > 0;) acc = acc * s + custom_p_[j];
            return acc;
        }
    }
    return 0.0;
}

double OffspringLaw::pgf_derivative(int k, double s) const {
    if (s < 0.0 || s > 1.0) throw DomainError("pgf_derivative: s must lie in [0,1]");
    return pgf_derivative_u(k, 1.0L - static_cast<long double>(s));
}

double OffspringLaw::pgf_derivative_u(int k, long double u) const {
    if (k < 1) throw DomainError("pgf_derivative: k must be >= 1");
    const double ud = static_cast<double>(u);
    switch (family_) {
        case Family::StableFrac: {
            if (k == 1) return 1.0 - c_ * (1.0 + alpha_) * std::pow(ud, alpha_);
            if (alpha_ == 1.0) return k == 2 ? 2.0 * c_ : 0.0;
            if (u <= 0.0L) throw DomainError("pgf_derivative: diverges at s=1 for k >= 2 with alpha < 1");
            // f^(k)(s) = c alpha (1+alpha) Gamma(k-1-alpha)/Gamma(1-alpha) * u^{1+alpha-k}
            const double lg = std::lgamma(static_cast<double>(k) - 1.0 - alpha_) - std::lgamma(1.0 - alpha_);
            const double logu = static_cast<double>(std::log(u));
            return c_ * alpha_ * (1.0 + alpha_) * std::exp(lg + (1.0 + alpha_ - static_cast<double>(k)) * logu);
        }
        case Family::Geometric: {
            // f^(k)(s) = k! / (2-s)^{k+1} = k! / (1+u)^{k+1}
            const double log1pu = static_cast<double>(std::log(1.0L + u));
            return std::exp(std::lgamma(static_cast<double>(k) + 1.0) - (static_cast<double>(k) + 1.0) * log1pu);
        }
        case Family::CustomPmf: {
            const double s = static_cast<double>(1.0L - u);
            const auto d = static_cast<std::int64_t>(custom_p_.size()) - 1;
            double acc = 0.0;
            for (std::int64_t j = d; j >= k; --j) {
                double ff = 1.0;
                for (int i = 0; i < k; ++i) ff *= static_cast<double>(j - i);
                acc = acc * s + ff * custom_p_[static_cast<std::size_t>(j)];
            }
            return acc;
        }
    }
    return 0.0;
}

long double OffspringLaw::survival_step(long double u) const {
    switch (family_) {
        case Family::StableFrac:
            // u' = u - c u^{1+alpha}; exact and cancellation-free in u
            return u - static_cast<long double>(c_) * powl(u, 1.0L + static_cast<long double>(alpha_));
        case Family::Geometric:
            return u / (1.0L + u);
        case Family::CustomPmf: {
            // u' = 1 - f(1-u) = -sum_j p_j expm1(j log1p(-u)); the j=0 term is 0
            long double acc = 0.0L;
            for (std::size_t j = 1; j < custom_p_.size(); ++j) {
                if (custom_p_[j] == 0.0) continue;
                acc -= static_cast<long double>(custom_p_[j]) *
                       expm1l(static_cast<long double>(j) * log1pl(-u));
            }
            return acc;
        }
    }
    return u;
}

void OffspringLaw::build_sampler_table() {
    cdf_.resize(kTableMax + 1);
    long double acc = 0.0L;
    for (int j = 0; j <= kTableMax; ++j) {
        acc += static_cast<long double>(pmf(j));
        cdf_[j] = static_cast<double>(acc);
    }
}

std::uint64_t OffspringLaw::sample_tail(double u) const {
    // smallest j > 64 with P(xi >= j+1) <= 1-u, via the closed-form tail and
    // bisection on a geometrically expanded bracket
    const double target = 1.0 - u; // we need tail(j) > target >= tail(j+1)
    std::int64_t lo = kTableMax + 1; // tail(lo) > target holds (u >= cdf_[64])
    std::int64_t hi = lo;
    while (tail(hi + 1) > target) {
        hi = hi * 2;
        if (hi > (std::int64_t{1} << 62)) break;
    }
    while (lo < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (tail(mid + 1) > target)
            lo = mid + 1;
        else
            hi = mid;
    }
    return static_cast<std::uint64_t>(lo);
}

} // namespace gwlab
