#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "gwlab/bell.hpp"
#include "gwlab/power_series.hpp"
#include "gwlab/series_engine.hpp"

using namespace gwlab;

namespace {

// partition-set definition of B_{J,k}: sum over i_1..i_{J-k+1} >= 0 with
// sum i_r = k and sum r i_r = J of J!/(prod i_r!) prod (x_r/r!)^{i_r}
double bell_enumerated(const std::vector<double>& x, int J, int k) {
    double total = 0.0;
    const int R = J - k + 1;
    std::vector<int> idx(static_cast<std::size_t>(R) + 1, 0);
    std::function<void(int, int, int)> rec = [&](int r, int blocks, int weight) {
        if (r > R) {
            if (blocks == k && weight == J) {
                long double term = 1.0L;
                for (int i = 2; i <= J; ++i) term *= i; // J!
                for (int rr = 1; rr <= R; ++rr) {
                    long double rfact = 1.0L;
                    for (int i = 2; i <= rr; ++i) rfact *= i;
                    for (int rep = 0; rep < idx[static_cast<std::size_t>(rr)]; ++rep)
                        term *= static_cast<long double>(x[static_cast<std::size_t>(rr - 1)]) / rfact;
                    long double ifact = 1.0L;
                    for (int i = 2; i <= idx[static_cast<std::size_t>(rr)]; ++i) ifact *= i;
                    term /= ifact;
                }
                total += static_cast<double>(term);
            }
            return;
        }
        for (int i = 0; blocks + i <= k && weight + r * i <= J; ++i) {
            idx[static_cast<std::size_t>(r)] = i;
            rec(r + 1, blocks + i, weight + r * i);
        }
        idx[static_cast<std::size_t>(r)] = 0;
    };
    rec(1, 0, 0);
    return total;
}

} // namespace

TEST_CASE("stirling2 values and boundaries") {
    CHECK(stirling2(4, 2) == 7);
    CHECK(stirling2(5, 3) == 25);
    CHECK(stirling2(6, 3) == 90);
    for (int J : {1, 2, 7, 40}) {
        CHECK(stirling2(J, 1) == 1);
        CHECK(stirling2(J, J) == 1);
    }
    CHECK_THROWS_AS(stirling2(301, 4), RangeError);
    CHECK_THROWS_AS(stirling2(4, 5), RangeError);
    CHECK_THROWS_AS(stirling2(0, 0), RangeError);
    // the two routes agree internally for the full 1 <= k <= J <= 60 triangle
    for (int J = 1; J <= 60; ++J)
        for (int k = 1; k <= J; ++k) CHECK_NOTHROW(stirling2(J, k));
    // a couple of large exact values against the triangle route only
    CHECK(stirling2(300, 1) == 1);
    CHECK(stirling2(300, 299) == BigInt(300) * 299 / 2);
}

TEST_CASE("bell table closed forms") {
    const std::vector<double> x = {2.0, 3.0, 5.0, 7.0, 11.0, 13.0};
    const BellTable bt = bell_table(x, 6);
    CHECK(bt.value(3, 2) == doctest::Approx(3.0 * x[0] * x[1]).epsilon(1e-15)); // 3 x1 x2
    for (int J = 1; J <= 6; ++J) {
        CHECK(bt.value(J, 1) == doctest::Approx(x[static_cast<std::size_t>(J - 1)]).epsilon(1e-15));
        CHECK(bt.value(J, J) == doctest::Approx(std::pow(x[0], J)).epsilon(1e-14));
    }
}

TEST_CASE("bell table with all-ones inputs gives Stirling numbers") {
    const std::vector<double> ones(16, 1.0);
    const BellTable bt = bell_table(ones, 16);
    for (int J = 1; J <= 16; ++J)
        for (int k = 1; k <= J; ++k)
            CHECK(bt.value(J, k) ==
                  doctest::Approx(static_cast<double>(stirling2(J, k))).epsilon(1e-12));
}

TEST_CASE("bell recurrence matches the partition-sum definition for J <= 12") {
    const std::vector<double> x = {0.5, 1.25, 0.75, 2.0, 1.0 / 3.0, 1.5, 0.25, 4.0, 1.0 / 7.0, 2.5, 0.125, 3.0};
    const BellTable bt = bell_table(x, 12);
    for (int J = 1; J <= 12; ++J)
        for (int k = 1; k <= J; ++k)
            CHECK(bt.value(J, k) == doctest::Approx(bell_enumerated(x, J, k)).epsilon(1e-11));
}

TEST_CASE("bell_weighted_sum single-term edge and generating identity") {
    std::vector<double> mu(9, 0.0);
    for (int j = 1; j <= 8; ++j) mu[static_cast<std::size_t>(j)] = 0.3 + 0.1 * j;
    // k = T: only the J = T = k term survives, B_{T,T}/T! = mu_1^T / T!
    const int T = 8;
    long double tfact = 1.0L;
    for (int i = 2; i <= T; ++i) tfact *= i;
    CHECK(bell_weighted_sum(mu, T, T) ==
          doctest::Approx(static_cast<double>(powl(0.4L, T) / tfact)).epsilon(1e-12));

    // generating identity: b_{J,k} equals the coefficients of (sum mu_j s^j)^k / k!
    // computed by direct truncated multiplication
    std::vector<double> mu2(41, 0.0);
    for (int j = 1; j <= 40; ++j) mu2[static_cast<std::size_t>(j)] = 1.0 / (1.0 + 0.37 * j);
    for (int k : {2, 3, 5}) {
        const auto b = bell_normalized_row(mu2, k, 40);
        Coeffs<double> p(41, 0.0), acc(41, 0.0), tmp;
        for (int j = 1; j <= 40; ++j) p[static_cast<std::size_t>(j)] = mu2[static_cast<std::size_t>(j)];
        acc = p;
        for (int rep = 1; rep < k; ++rep) {
            mul_series(acc, p, tmp);
            acc = tmp;
        }
        long double kfact = 1.0L;
        for (int i = 2; i <= k; ++i) kfact *= i;
        for (int J = k; J <= 40; ++J)
            CHECK(b[static_cast<std::size_t>(J)] ==
                  doctest::Approx(static_cast<double>(acc[static_cast<std::size_t>(J)] / kfact)).epsilon(1e-10));
    }
}

TEST_CASE("bell table CSV export") {
    const BellTable bt = bell_table({1.0, 2.0, 3.0}, 3);
    std::ostringstream os;
    write_bell_csv(bt, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "J,k,value");
    std::vector<std::string> rows;
    while (std::getline(is, line)) rows.push_back(line);
    CHECK(rows.size() == 6); // (1,1),(2,1),(2,2),(3,1),(3,2),(3,3)
    CHECK(rows[0] == "1,1,1");
    CHECK(rows[4].substr(0, 4) == "3,2,");
    CHECK(std::stod(rows[4].substr(4)) == bt.value(3, 2));
}

TEST_CASE("faa di bruno derivative recursion") {
    const OffspringLaw law = OffspringLaw::stable_frac(0.5, 2.0 / 3.0);
    // n = 1: k! pmf(k)
    const auto d1 = faa_di_bruno_check(law, 1, 12);
    long double fact = 1.0L;
    for (int k = 1; k <= 12; ++k) {
        fact *= k;
        CHECK(d1[static_cast<std::size_t>(k)] ==
              doctest::Approx(static_cast<double>(fact) * law.pmf(k)).epsilon(1e-12));
    }
    // j < j0 stays zero for all n
    for (std::int64_t n : {1, 2, 5, 20}) {
        const auto d = faa_di_bruno_check(law, n, 6);
        CHECK(d[1] == 0.0);
    }
}

TEST_CASE("faa di bruno equals the series engine (dual-path overlap)") {
    for (const OffspringLaw& law :
         {OffspringLaw::stable_frac(0.5, 2.0 / 3.0), OffspringLaw::geometric(),
          OffspringLaw::custom({0.45, 0.2, 0.25, 0.1}, 1.0)}) {
        for (std::int64_t n : {2, 7, 20}) {
            const int J = 32;
            const auto d = faa_di_bruno_check(law, n, J);
            const GenerationTable t = generation_table(law, n, J);
            long double fct = 1.0L;
            for (int k = 1; k <= J; ++k) {
                fct *= k;
                const double series_deriv = static_cast<double>(fct) * t.p[static_cast<std::size_t>(k)];
                if (series_deriv == 0.0)
                    CHECK(d[static_cast<std::size_t>(k)] == 0.0);
                else
                    CHECK(d[static_cast<std::size_t>(k)] / series_deriv == doctest::Approx(1.0).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("J0-chain product identity") {
    const OffspringLaw law = OffspringLaw::stable_frac(0.5, 2.0 / 3.0);
    const int j0 = law.j0();
    long double fact = 1.0L;
    for (int i = 2; i <= j0; ++i) fact *= i;
    // f_n^{(J0)}(0) = J0! p_{J0} prod_{i=1}^{n-1} f'(f_i(0))
    long double produ = fact * static_cast<long double>(law.pmf(j0));
    long double u = 1.0L;
    for (std::int64_t n = 1; n <= 24; ++n) {
        if (n > 1) {
            // u currently = 1 - f_{n-1}(0)
            produ *= static_cast<long double>(law.pgf_derivative_u(1, u));
        }
        const auto d = faa_di_bruno_check(law, n, j0);
        CHECK(d[static_cast<std::size_t>(j0)] ==
              doctest::Approx(static_cast<double>(produ)).epsilon(1e-12));
        u = law.survival_step(u);
    }
}
