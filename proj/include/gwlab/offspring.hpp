#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "gwlab/errors.hpp"
#include "gwlab/rng.hpp"

namespace gwlab {

// Optional exact rational parameter. Laws built from rationals reproduce the
// same numerator/denominator pair on serialization.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

enum class Family { StableFrac, Geometric, CustomPmf };

// Critical offspring distribution: mean exactly 1, pgf
//   StableFrac:  f(s) = s + c (1-s)^{1+alpha},  alpha in (0,1], c in (0, 1/(1+alpha)]
//   Geometric:   f(s) = 1/(2-s)
//   CustomPmf:   finite support, declared tail exponent
// Immutable after construction; safe to share across threads. Sampler state
// lives in the caller's RngStream.
class OffspringLaw {
public:
    static OffspringLaw stable_frac(double alpha, double c);
    static OffspringLaw stable_frac(Rational alpha, Rational c);
    static OffspringLaw stable_frac(double alpha, double c, std::optional<Rational> alpha_rat,
                                    std::optional<Rational> c_rat);
    static OffspringLaw geometric();
    static OffspringLaw custom(std::vector<double> probabilities, double tail_exponent);

    Family family() const { return family_; }
    double alpha() const { return alpha_; }
    double c() const { return c_; }
    double sigma2() const { return sigma2_; }
    bool finite_variance() const { return sigma2_ != std::numeric_limits<double>::infinity(); }
    int j0() const { return j0_; }
    const std::optional<Rational>& alpha_rational() const { return alpha_rat_; }
    const std::optional<Rational>& c_rational() const { return c_rat_; }
    const std::vector<double>& custom_probabilities() const { return custom_p_; }

    // P(xi = j), exact closed form
    double pmf(std::int64_t j) const;
    // P(xi >= j), exact closed form; tail(j) - tail(j+1) == pmf(j)
    double tail(std::int64_t j) const;

    // f(s) on [0,1]
    double pgf(double s) const;
    // k-th derivative of f at s; diverges at s=1 for k >= 2, alpha < 1
    double pgf_derivative(int k, double s) const;
    // same, parameterized by u = 1-s to keep precision when s is close to 1
    double pgf_derivative_u(int k, long double u) const;

    // one step of the survival iteration: u_{k+1} = 1 - f(1 - u_k)
    long double survival_step(long double u) const;

    // hybrid sampler: inverse-CDF table for j <= 64, closed-form tail
    // bisection beyond
    std::uint64_t sample(RngStream& rng) const {
        const double u = rng.next_double();
        if (u < cdf_[kTableMax]) {
            int j = 0;
            while (u >= cdf_[static_cast<std::size_t>(j)]) ++j;
            return static_cast<std::uint64_t>(j);
        }
        return sample_tail(u);
    }

private:
    OffspringLaw() = default;
    void build_sampler_table();
    void validate_and_finish();
    std::uint64_t sample_tail(double u) const;

    Family family_ = Family::Geometric;
    double alpha_ = 1.0;
    double c_ = 0.0;
    double sigma2_ = 0.0;
    int j0_ = 1;
    std::optional<Rational> alpha_rat_;
    std::optional<Rational> c_rat_;
    std::vector<double> custom_p_;

    static constexpr int kTableMax = 64;
    std::vector<double> cdf_; // cdf_[j] = P(xi <= j), j = 0..kTableMax
};

} // namespace gwlab
