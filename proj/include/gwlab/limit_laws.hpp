#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "gwlab/errors.hpp"
#include "gwlab/offspring.hpp"

namespace gwlab {

struct YaglomConfig {
    int gs_terms = 28;        // Gaver-Stehfest terms (2M), evaluated in 50-digit arithmetic
    int talbot_terms = 32;    // fixed-Talbot contour nodes (the disagreement detector)
    double method_tol = 1e-4; // max |GS - Talbot| before InversionUnstable
};

// Evaluates the Yaglom limit law M and its convolution powers M^{*j} from the
// Laplace-Stieltjes transform Phi(lambda) = 1 - (1 + lambda^{-alpha})^{-1/alpha}.
// cdf() inverts Phi^j / lambda by Gaver-Stehfest; each (alpha, j) pair is
// validated once against a fixed-Talbot contour evaluation at sample points.
// Immutable after construction; the value cache is mutex-guarded.
class YaglomLaw {
public:
    explicit YaglomLaw(double alpha, YaglomConfig cfg = {});

    double alpha() const { return alpha_; }

    // Phi(lambda)^j, stable for lambda from 1e-300 to 1e300
    double transform(int j, double lambda) const;

    // M^{*j}(x), via Gaver-Stehfest with Talbot cross-validation
    double cdf(int j, double x) const;

    double cdf_gs(int j, double x) const;
    double cdf_talbot(int j, double x) const;
    // globally convergent series sum_{k>=j} d_k x^{alpha k}/Gamma(1+alpha k);
    // practical for x up to a few units (alternating, so large x loses digits)
    double cdf_series(int j, double x, int terms = 400) const;

    // x^{alpha j} / (alpha^j Gamma(1 + alpha j))
    double smallx_asymptotic(int j, double x) const;

private:
    void validate_methods(int j) const;

    double alpha_;
    YaglomConfig cfg_;
    mutable std::mutex mu_;
    mutable std::map<std::pair<int, double>, double> cache_;
    mutable std::map<int, bool> validated_;
};

// header `alpha,j,x,value,method_disagreement`; value is the GS inversion,
// disagreement is |GS - Talbot| at that point
void write_limit_curve_csv(const YaglomLaw& law, int j, const std::vector<double>& x_grid,
                           std::ostream& os);

struct Thm1Prediction {
    double value = 0.0;
    bool regime_warning = false; // phi/n > 0.1
};

// ((1-f_n(0)) / (alpha n)) * phi / Gamma(1+alpha), survival passed in exactly
Thm1Prediction thm1_prediction(double alpha, long double survival_n, std::int64_t n, std::int64_t phi);
Thm1Prediction thm1_prediction(const OffspringLaw& law, std::int64_t n, std::int64_t phi);

// (alpha Gamma(j+alpha) / j!) x M^{*j}(x^{-1/alpha})
double thm2_limit_pmf(const YaglomLaw& law, int j, double x);

// alpha Gamma(1+alpha) x M(x^{-1/alpha})
double mrca_limit_cdf(const YaglomLaw& law, double x);

} // namespace gwlab
