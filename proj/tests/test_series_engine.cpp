#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "gwlab/power_series.hpp"
#include "gwlab/series_engine.hpp"

using namespace gwlab;

namespace {

// exhaustive genealogy enumeration: accumulates P(genealogy) for every
// realization with total population <= budget, reporting the reduced count
// Z(m,n) distribution and the leftover (pruned) mass
struct Enumerated {
    std::map<std::int64_t, double> reduced_pmf; // Z(m,n)=j -> probability
    double covered = 0.0;                       // probability mass enumerated
};

Enumerated enumerate_reduced(const OffspringLaw& law, std::int64_t n, std::int64_t m, int budget) {
    Enumerated out;
    // state: per-generation offspring vectors; recurse generation by
    // generation over compositions of offspring counts
    std::vector<std::vector<int>> offspring(static_cast<std::size_t>(n));
    std::function<void(std::int64_t, int, double)> gen_done;
    std::function<void(std::int64_t, std::size_t, int, int, double)> fill_gen;

    auto finish = [&](double prob) {
        // count Z(m,n): generation-m particles with descendants at n
        std::vector<std::uint8_t> alive; // marks for current generation, backwards
        const std::size_t zn = offspring[static_cast<std::size_t>(n - 1)].empty() && n >= 1
                                   ? 0
                                   : [&] {
                                         std::size_t s = 0;
                                         for (int k : offspring[static_cast<std::size_t>(n - 1)]) s += static_cast<std::size_t>(k);
                                         return s;
                                     }();
        alive.assign(zn, 1);
        for (std::int64_t g = n - 1; g >= m; --g) {
            const auto& row = offspring[static_cast<std::size_t>(g)];
            std::vector<std::uint8_t> up(row.size(), 0);
            std::size_t base = 0;
            for (std::size_t i = 0; i < row.size(); ++i) {
                for (int cidx = 0; cidx < row[i]; ++cidx)
                    if (alive[base + static_cast<std::size_t>(cidx)]) up[i] = 1;
                base += static_cast<std::size_t>(row[i]);
            }
            alive = std::move(up);
        }
        std::int64_t zmn = 0;
        for (auto v : alive) zmn += v;
        out.reduced_pmf[zmn] += prob;
        out.covered += prob;
    };

    gen_done = [&](std::int64_t g, int total, double prob) {
        const auto& row = offspring[static_cast<std::size_t>(g)];
        int next = 0;
        for (int k : row) next += k;
        if (g + 1 == n || next == 0) {
            if (g + 1 < n)
                for (std::int64_t gg = g + 1; gg < n; ++gg) offspring[static_cast<std::size_t>(gg)].clear();
            finish(prob);
            return;
        }
        offspring[static_cast<std::size_t>(g + 1)].assign(static_cast<std::size_t>(next), 0);
        fill_gen(g + 1, 0, next, total, prob);
    };

    fill_gen = [&](std::int64_t g, std::size_t idx, int zsize, int total, double prob) {
        if (idx == static_cast<std::size_t>(zsize)) {
            gen_done(g, total, prob);
            return;
        }
        for (int k = 0; total + k <= budget; ++k) {
            const double pk = law.pmf(k);
            if (pk == 0.0) continue;
            offspring[static_cast<std::size_t>(g)][idx] = k;
            fill_gen(g, idx + 1, zsize, total + k, prob * pk);
        }
    };

    offspring[0].assign(1, 0);
    fill_gen(0, 0, 1, 1, 1.0);
    return out;
}

} // namespace

TEST_CASE("extinction sequence closed values and asymptotics") {
    const OffspringLaw law = OffspringLaw::stable_frac(0.5, 2.0 / 3.0);
    const auto f = extinction_sequence(law, 64);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(f[2] == doctest::Approx(0.7949667264865835).epsilon(1e-15));
    for (std::size_t k = 0; k + 1 < f.size(); ++k) CHECK(f[k + 1] > f[k]); // strictly increasing

    // survival scaling with constant L: n^2 (1 - f_n(0)) -> 9 within 2% at n = 1e6
    const long double u = survival_at(law, 1'000'000);
    const double scaled = static_cast<double>(u * 1e12);
    CHECK(scaled == doctest::Approx(8.999591562083806).epsilon(1e-9));
    CHECK(scaled > 8.82);
    CHECK(scaled < 9.18);
}

TEST_CASE("geometric survival is exactly 1/(n+1)") {
    const OffspringLaw law = OffspringLaw::geometric();
    const auto u = survival_sequence(law, 1000);
    for (std::int64_t k : {1, 2, 10, 100, 1000})
        CHECK(static_cast<double>(u[static_cast<std::size_t>(k)]) ==
              doctest::Approx(1.0 / (static_cast<double>(k) + 1.0)).epsilon(1e-15));
}

TEST_CASE("generation table basics") {
    const OffspringLaw law = OffspringLaw::stable_frac(0.5, 2.0 / 3.0);
    const GenerationTable t0 = generation_table(law, 0, 8);
    CHECK(t0.p[1] == 1.0);
    CHECK(t0.p[0] == 0.0);
    CHECK(t0.tail_mass == doctest::Approx(0.0).epsilon(1e-15));

    const GenerationTable t1 = generation_table(law, 1, 16);
    for (int j = 0; j <= 16; ++j) CHECK(t1.p[static_cast<std::size_t>(j)] == doctest::Approx(law.pmf(j)).epsilon(1e-13));

    const GenerationTable g2 = generation_table(OffspringLaw::geometric(), 2, 8);
    CHECK(g2.p[1] == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
    CHECK(g2.p[2] == doctest::Approx(2.0 / 27.0).epsilon(1e-14));
}

TEST_CASE("geometric closed-form iterate matches the series to 1e-12") {
    const OffspringLaw law = OffspringLaw::geometric();
    const std::vector<std::int64_t> schedule = {1, 2, 5, 10, 25, 50};
    const auto tables = generation_tables(law, schedule, 64);
    for (const auto& t : tables) {
        for (std::int64_t j = 1; j <= 64; ++j)
            CHECK(t.p[static_cast<std::size_t>(j)] ==
                  doctest::Approx(geometric_pz(t.n, j)).epsilon(1e-12));
        // evaluate the truncated series at s and compare with the Mobius form
        for (double s : {0.0, 0.25, 0.5}) {
            const double direct = geometric_iterate(t.n, s);
            const double viaseries = eval_series(t.p, s) + t.tail_mass * 0.0; // tail excluded
            // the truncated series is missing sum_{j>64} p_j s^j <= tail * s^65
            const double missing_bound = t.tail_mass * std::pow(s, 65);
            CHECK(std::fabs(direct - viaseries) <= 1e-12 + missing_bound);
        }
        CHECK(static_cast<double>(t.survival) ==
              doctest::Approx(1.0 / (static_cast<double>(t.n) + 1.0)).epsilon(1e-14));
    }
}

TEST_CASE("truncation is lower-triangular (coefficients independent of T)") {
    const OffspringLaw law = OffspringLaw::stable_frac(0.8, 1.0 / 1.8);
    const GenerationTable small = generation_table(law, 20, 32);
    const GenerationTable big = generation_table(law, 20, 64);
    for (int j = 0; j <= 32; ++j)
        CHECK(small.p[static_cast<std::size_t>(j)] == big.p[static_cast<std::size_t>(j)]); // bitwise
}

TEST_CASE("conservation and q-monotonicity across a schedule") {
    for (const OffspringLaw& law :
         {OffspringLaw::stable_frac(0.5, 2.0 / 3.0), OffspringLaw::geometric()}) {
        std::vector<std::int64_t> schedule;
        for (std::int64_t n = 1; n <= 50; ++n) schedule.push_back(n);
        const auto tables = generation_tables(law, schedule, 48);
        for (const auto& t : tables) {
            CompensatedSum<double> s;
            for (double v : t.p) s.add(v);
            CHECK(s.value() + t.tail_mass == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(t.tail_mass >= 0.0);
        }
        // q_n(J) = P(Z(n)=J)/P(Z(n)=j0) nondecreasing in n for each J
        for (int J = law.j0(); J <= 48; ++J) {
            for (std::size_t i = 0; i + 1 < tables.size(); ++i) {
                const double qa = tables[i].q(J);
                const double qb = tables[i + 1].q(J);
                CHECK(qb >= qa * (1.0 - 1e-12));
            }
        }
    }
}

TEST_CASE("tail mass is nonincreasing in T") {
    const OffspringLaw law = OffspringLaw::stable_frac(0.8, 1.0 / 1.8);
    double prev = 1.0;
    for (int T : {4, 8, 16, 32, 64}) {
        const GenerationTable t = generation_table(law, 12, T);
        CHECK(t.tail_mass <= prev + 1e-15);
        prev = t.tail_mass;
    }
}

TEST_CASE("taylor_at_point") {
    const OffspringLaw law = OffspringLaw::stable_frac(0.5, 2.0 / 3.0);
    const auto id = taylor_at_point(law, 0, 0.3, 5);
    CHECK(id[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(id[1] == doctest::Approx(1.0).epsilon(1e-15));
    for (int k = 2; k <= 5; ++k) CHECK(id[static_cast<std::size_t>(k)] == 0.0);

    const auto one = taylor_at_point(law, 1, 0.3, 8);
    CHECK(one[0] == doctest::Approx(law.pgf(0.3)).epsilon(1e-14));
    for (int k = 1; k <= 8; ++k)
        CHECK(one[static_cast<std::size_t>(k)] ==
              doctest::Approx(law.pgf_derivative(k, 0.3)).epsilon(1e-11));

    // s0 = 0: k! times the generation-table coefficients
    const auto at0 = taylor_at_point(law, 7, 0.0, 10);
    const GenerationTable t = generation_table(law, 7, 10);
    long double fact = 1.0L;
    for (int k = 1; k <= 10; ++k) {
        fact *= k;
        CHECK(at0[static_cast<std::size_t>(k)] ==
              doctest::Approx(static_cast<double>(fact) * t.p[static_cast<std::size_t>(k)]).epsilon(1e-11));
    }
    CHECK_THROWS_AS(taylor_at_point(law, 3, 1.0, 4), DomainError);
}

TEST_CASE("small deviation probability") {
    const OffspringLaw geo = OffspringLaw::geometric();
    const SmallDeviation sd = small_deviation_prob(geo, 2, 1);
    CHECK(sd.T == 2);
    CHECK(sd.prob == doctest::Approx(5.0 / 27.0).epsilon(1e-13));
    CHECK(sd.prob == doctest::Approx(geometric_small_deviation(2, 2)).epsilon(1e-13));

    // phi = n: subset of survival
    const OffspringLaw sf = OffspringLaw::stable_frac(0.8, 1.0 / 1.8);
    const SmallDeviation sd2 = small_deviation_prob(sf, 64, 64);
    CHECK(sd2.prob <= static_cast<double>(survival_at(sf, 64)));
    CHECK(sd2.prob > 0.0);
    CHECK_THROWS_AS(small_deviation_prob(sf, 8, 9), DomainError);

    // geometric threshold is exactly phi + 1
    for (std::int64_t phi : {1, 2, 3, 10, 100, 1000})
        CHECK(small_deviation_threshold(geo, phi) == phi + 1);
}

TEST_CASE("mu sequence zeros, positivity, diagnostics") {
    const OffspringLaw law = OffspringLaw::stable_frac(0.5, 2.0 / 3.0);
    const MuEstimates me = mu_sequence(law, 16, {64, 128, 256, 512, 1024}, 0.2);
    CHECK(me.mu[1] == 0.0); // j < j0
    CHECK(me.mu[2] > 0.0);
    // mu_hat_{j0}(n) is positive and nondecreasing along the schedule
    double prev = 0.0;
    for (const auto& st : me.stages) {
        CHECK(st[2] > 0.0);
        CHECK(st[2] >= prev * (1.0 - 1e-12));
        prev = st[2];
    }
    CHECK(me.rel_change[2] < 0.2);

    CHECK_THROWS_AS(mu_sequence(law, 4, {100, 200}, 0.05), ConfigInvalid);
}

TEST_CASE("reduced_joint total probability and root case") {
    const OffspringLaw law = OffspringLaw::geometric();
    const std::int64_t n = 12;
    const std::int64_t T = 6;
    // m = n-1: sum_j P(Z(m,n)=j) P(H|j) = P(H(n)) exactly
    const ReducedJoint rj = reduced_joint(law, n, n - 1, static_cast<int>(T), T);
    CompensatedSum<double> s;
    for (int j = 1; j <= static_cast<int>(T); ++j)
        s.add(rj.pmf_reduced[static_cast<std::size_t>(j)] * rj.cond_H_given_j[static_cast<std::size_t>(j)]);
    CHECK(s.value() == doctest::Approx(rj.p_H).epsilon(1e-10));

    // j=1, m=0: the root is the only reduced particle iff the process survives
    const ReducedJoint rj0 = reduced_joint(law, n, 0, 2, T);
    CHECK(rj0.pmf_reduced[1] == doctest::Approx(static_cast<double>(survival_at(law, n))).epsilon(1e-12));

    CHECK_THROWS_AS(reduced_joint(law, n, n, 2, T), DomainError);
}

TEST_CASE("reduced pmf matches exhaustive enumeration (geometric, small n)") {
    const OffspringLaw law = OffspringLaw::geometric();
    for (const auto& [n, m] : std::vector<std::pair<std::int64_t, std::int64_t>>{{2, 1}, {3, 1}, {3, 2}}) {
        const Enumerated en = enumerate_reduced(law, n, m, 14);
        const double leftover = 1.0 - en.covered;
        CHECK(leftover < 0.25);
        const auto pr = reduced_pmf(law, m, survival_at(law, n - m), 8);
        for (std::int64_t j = 0; j <= 8; ++j) {
            const auto it = en.reduced_pmf.find(j);
            const double enum_p = it == en.reduced_pmf.end() ? 0.0 : it->second;
            // enumeration undercounts by at most the pruned mass
            CHECK(pr[static_cast<std::size_t>(j)] >= enum_p - 1e-12);
            CHECK(pr[static_cast<std::size_t>(j)] <= enum_p + leftover + 1e-12);
        }
    }
}

TEST_CASE("generation table CSV export") {
    const OffspringLaw law = OffspringLaw::geometric();
    const GenerationTable t = generation_table(law, 3, 4);
    std::ostringstream os;
    write_generation_csv(t, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "n,j,prob,tail_mass");
    int j = 0;
    while (std::getline(is, line)) {
        // row order deterministic by j; full 17-significant-digit round trip
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1), c3 = line.find(',', c2 + 1);
        CHECK(line.substr(0, c1) == "3");
        CHECK(std::stoi(line.substr(c1 + 1, c2 - c1 - 1)) == j);
        CHECK(std::stod(line.substr(c2 + 1, c3 - c2 - 1)) == t.p[static_cast<std::size_t>(j)]);
        CHECK(std::stod(line.substr(c3 + 1)) == t.tail_mass);
        ++j;
    }
    CHECK(j == 5);
}

TEST_CASE("truncation budget raises") {
    const OffspringLaw law = OffspringLaw::geometric();
    const std::int64_t old_budget = series_truncation_budget();
    set_series_truncation_budget(128);
    CHECK_THROWS_AS(generation_table(law, 4, 1024), TruncationOverflow);
    set_series_truncation_budget(old_budget);
}
