#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "gwlab/limit_laws.hpp"
#include "gwlab/series_engine.hpp"

using namespace gwlab;

TEST_CASE("transform closed forms and limits") {
    const YaglomLaw y1(1.0);
    for (double lam : {0.1, 0.5, 1.0, 2.0, 10.0})
        CHECK(y1.transform(1, lam) == doctest::Approx(1.0 / (1.0 + lam)).epsilon(1e-14));

    const YaglomLaw y05(0.5);
    CHECK(y05.transform(1, 1e-12) == doctest::Approx(1.0).epsilon(1e-5)); // total mass as lambda -> 0

    // large-lambda rate from the transform expansion: ratio to alpha^{-j} lambda^{-alpha j}
    // approaches 1 like 1 - O(lambda^{-alpha}); at lambda = 1e3 the exact value
    // is 0.911051, reaching the 1% band near lambda = 1e5
    CHECK(y05.transform(2, 1e3) / (1e-3 / 0.25) == doctest::Approx(0.91105053).epsilon(1e-6));
    CHECK(std::fabs(y05.transform(2, 1e5) / (1e-5 / 0.25) - 1.0) < 0.01);
    CHECK(std::fabs(y05.transform(2, 1e6) / (1e-6 / 0.25) - 1.0) < 0.005);

    CHECK_THROWS_AS(y05.transform(1, 0.0), DomainError);
    CHECK_THROWS_AS(y05.transform(1, -1.0), DomainError);
}

TEST_CASE("alpha=1 inversion reproduces the exponential family to 1e-6") {
    const YaglomLaw y1(1.0);
    CHECK(y1.cdf(1, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-8));
    CHECK(y1.cdf(2, 1.0) == doctest::Approx(1.0 - 2.0 * std::exp(-1.0)).epsilon(1e-7));
    for (double x = 0.1; x <= 10.0; x += 0.3) {
        CHECK(std::fabs(y1.cdf(1, x) - (1.0 - std::exp(-x))) < 1e-6);
        CHECK(std::fabs(y1.cdf(2, x) - (1.0 - std::exp(-x) * (1.0 + x))) < 1e-6);
        CHECK(std::fabs(y1.cdf(3, x) - (1.0 - std::exp(-x) * (1.0 + x + x * x / 2.0))) < 1e-6);
    }
}

TEST_CASE("GS, Talbot and the series expansion agree") {
    for (double alpha : {0.5, 0.8}) {
        const YaglomLaw y(alpha);
        for (int j : {1, 2, 3}) {
            for (double x : {0.01, 0.1, 0.5, 1.0, 2.0}) {
                const double gs = y.cdf_gs(j, x);
                const double tb = y.cdf_talbot(j, x);
                const double se = y.cdf_series(j, x);
                CHECK(std::fabs(gs - tb) < 1e-7);
                CHECK(std::fabs(gs - se) < 1e-6);
            }
        }
    }
    // frozen value, triple-checked by all three methods
    const YaglomLaw y05(0.5);
    CHECK(y05.cdf(1, 0.001) == doctest::Approx(0.0684576739).epsilon(1e-7));
}

TEST_CASE("method disagreement raises InversionUnstable") {
    YaglomConfig weak;
    weak.gs_terms = 4; // far too few terms: the detector must fire
    weak.method_tol = 1e-6;
    const YaglomLaw y(0.5, weak);
    CHECK_THROWS_AS(y.cdf(1, 1.0), InversionUnstable);
}

TEST_CASE("small-x asymptotic formula") {
    const YaglomLaw y1(1.0);
    CHECK(y1.smallx_asymptotic(1, 0.25) == doctest::Approx(0.25).epsilon(1e-14));
    const YaglomLaw y05(0.5);
    CHECK(y05.smallx_asymptotic(2, 1e-2) == doctest::Approx(0.04).epsilon(1e-13));
    double prev = 0.0;
    for (double x : {0.1, 0.2, 0.5, 1.0, 2.0}) {
        const double v = y05.smallx_asymptotic(2, x);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("small-x ratio of the inverted CDF to the asymptotic") {
    // The correction term is O(x^alpha): at alpha=0.5 the exact ratio at
    // x=1e-3 is 0.95926 (deviation 4.07%), reaching a 2% band only near
    // x = 2e-4. At alpha=0.8 the deviation at 1e-3 is already below 1%.
    const YaglomLaw y05(0.5);
    CHECK(y05.cdf(1, 1e-3) / y05.smallx_asymptotic(1, 1e-3) == doctest::Approx(0.959262).epsilon(1e-4));
    CHECK(y05.cdf(2, 1e-3) / y05.smallx_asymptotic(2, 1e-3) == doctest::Approx(0.931658).epsilon(1e-4));
    CHECK(std::fabs(y05.cdf(1, 1e-4) / y05.smallx_asymptotic(1, 1e-4) - 1.0) < 0.02);
    const YaglomLaw y08(0.8);
    CHECK(std::fabs(y08.cdf(1, 1e-3) / y08.smallx_asymptotic(1, 1e-3) - 1.0) < 0.01);
    CHECK(std::fabs(y08.cdf(2, 1e-3) / y08.smallx_asymptotic(2, 1e-3) - 1.0) < 0.01);
}

TEST_CASE("thm1 prediction") {
    const OffspringLaw law = OffspringLaw::stable_frac(0.8, 1.0 / 1.8);
    const Thm1Prediction p = thm1_prediction(law, 4096, 13);
    CHECK_FALSE(p.regime_warning);
    CHECK(p.value > 0.0);
    CHECK(p.value < static_cast<double>(survival_at(law, 4096))); // below survival

    const Thm1Prediction warn = thm1_prediction(law, 100, 20);
    CHECK(warn.regime_warning);

    // alpha = 1 (Geometric): reduces to ((1-f_n(0))/n) phi
    const OffspringLaw geo = OffspringLaw::geometric();
    const Thm1Prediction g = thm1_prediction(geo, 1000, 50);
    CHECK(g.value == doctest::Approx((1.0 / 1001.0) / 1000.0 * 50.0).epsilon(1e-12));
}

TEST_CASE("thm2 limit pmf properties") {
    const YaglomLaw y08(0.8);
    // j=1 coincides with the corollary CDF
    for (double x : {0.5, 1.0, 2.0})
        CHECK(thm2_limit_pmf(y08, 1, x) == doctest::Approx(mrca_limit_cdf(y08, x)).epsilon(1e-12));
    // delta_{1j} limit at large x
    CHECK(std::fabs(thm2_limit_pmf(y08, 1, 1e6) - 1.0) < 1e-2);
    CHECK(thm2_limit_pmf(y08, 2, 1e6) < 1e-2);

    // alpha=1: x M^{*j}(1/x) with Erlang CDFs
    const YaglomLaw y1(1.0);
    for (double x : {0.5, 1.0, 2.0}) {
        const double yv = 1.0 / x;
        const double erl2 = 1.0 - std::exp(-yv) * (1.0 + yv);
        // alpha Gamma(j+alpha)/j! = Gamma(j+1)/j! = 1 at alpha=1
        CHECK(thm2_limit_pmf(y1, 2, x) == doctest::Approx(x * erl2).epsilon(1e-6));
    }
}

TEST_CASE("mrca limit cdf") {
    const YaglomLaw y1(1.0);
    CHECK(mrca_limit_cdf(y1, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-7));
    const YaglomLaw y08(0.8);
    CHECK(std::fabs(mrca_limit_cdf(y08, 1e6) - 1.0) < 1e-2);
    double prev = -1.0;
    for (double x = 0.1; x <= 10.0; x += 0.2441) {
        const double v = mrca_limit_cdf(y08, x);
        CHECK(v >= prev - 1e-12);
        CHECK(v <= 1.0 + 1e-6);
        prev = v;
    }
}

TEST_CASE("convolution consistency of the inverted law") {
    const YaglomLaw y(0.5);
    for (double x : {0.5, 1.0, 2.0}) {
        // (M*M)(x) = int_0^x M(x-t) dM(t), midpoint Stieltjes sum on 512 cells
        const int N = 512;
        double acc = 0.0;
        double prev_cdf = 0.0; // M(0+) = 0
        for (int i = 0; i < N; ++i) {
            const double t1 = x * (i + 1) / N;
            const double tm = x * (i + 0.5) / N;
            const double c1 = y.cdf(1, t1);
            acc += y.cdf(1, x - tm + 1e-300) * (c1 - prev_cdf);
            prev_cdf = c1;
        }
        CHECK(std::fabs(acc - y.cdf(2, x)) < 1e-3);
    }
}

TEST_CASE("transform round trip within 1e-4") {
    boost::math::quadrature::exp_sinh<double> integrator;
    for (double alpha : {0.5, 1.0}) {
        const YaglomLaw y(alpha);
        for (int j : {1, 2}) {
            for (double lam : {0.5, 1.0, 2.0}) {
                auto f = [&](double x) { return std::exp(-lam * x) * y.cdf(j, x); };
                const double I = lam * integrator.integrate(f, 1e-9);
                CHECK(std::fabs(I - y.transform(j, lam)) < 1e-4);
            }
        }
    }
}

TEST_CASE("limit curve CSV export") {
    const YaglomLaw y(1.0);
    std::ostringstream os;
    write_limit_curve_csv(y, 1, {0.5, 1.0}, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "alpha,j,x,value,method_disagreement");
    std::getline(is, line);
    CHECK(line.substr(0, 4) == "1,1,");
    // value column reproduces 1-e^{-1/2}; disagreement column tiny
    const auto c3 = line.find(',', 4);
    const auto c4 = line.find(',', c3 + 1);
    CHECK(std::stod(line.substr(c3 + 1, c4 - c3 - 1)) ==
          doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-7));
    CHECK(std::stod(line.substr(c4 + 1)) < 1e-6);
}

TEST_CASE("thm2 limit pmf sums to at most 1") {
    for (double alpha : {0.5, 0.8}) {
        const YaglomLaw y(alpha);
        for (double x : {0.25, 0.5, 1.0, 2.0, 4.0}) {
            double s = 0.0;
            for (int j = 1; j <= 50; ++j) s += thm2_limit_pmf(y, j, x);
            CHECK(s <= 1.0 + 1e-3);
        }
    }
}
