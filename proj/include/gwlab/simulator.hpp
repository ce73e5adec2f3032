#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "gwlab/offspring.hpp"
#include "gwlab/rng.hpp"

namespace gwlab {

enum class SimStatus { Ok, Extinct, Overflow };

// One simulated genealogy with per-generation offspring lists, survivor
// marks, reduced counts Z(m,n) and the MRCA distance d(n).
struct TreeRun {
    std::int64_t n = 0;
    std::vector<std::vector<std::uint32_t>> offspring; // offspring[m][i], m = 0..n-1
    std::vector<std::uint64_t> z;                      // Z(m), m = 0..n
    std::vector<std::vector<std::uint8_t>> survivor_marks; // per particle, m = 0..n
    std::vector<std::uint64_t> reduced;                // Z(m,n), m = 0..n (survived runs)
    std::uint64_t z_final = 0;
    std::int64_t mrca_distance = -1;                   // d(n) = n - max{m<n : Z(m,n)=1}
    bool survived = false;
};

// Forward pass + survivor back-marking. Deterministic given the stream.
// population_cap bounds the total number of particles over all generations.
SimStatus simulate_tree(const OffspringLaw& law, std::int64_t n, RngStream rng,
                        std::uint64_t population_cap, TreeRun& out);

// Counts-only fast path (no genealogy retained).
SimStatus simulate_count(const OffspringLaw& law, std::int64_t n, RngStream rng,
                         std::uint64_t population_cap, std::uint64_t& z_final);

struct EstimatorResult {
    double estimate = 0.0;
    double stderr_est = 0.0;
    std::uint64_t replicates = 0;
    std::uint64_t accepted = 0;     // replicates contributing to the estimate
    std::uint64_t hits = 0;
    std::uint64_t indeterminate = 0; // overflowed after retries; excluded and reported
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
};

// frequency of H(n) = {0 < Z(n) <= T}, T = floor(1/(1-f_phi(0)))
EstimatorResult mc_small_dev(const OffspringLaw& law, std::int64_t n, std::int64_t phi,
                             std::uint64_t replicates, std::uint64_t seed, int jobs = 0,
                             std::uint64_t population_cap = 10'000'000);

struct CondReducedResult {
    std::vector<double> p;  // estimates of P(Z(m,n)=j | H(n)), j = 0..j_max
    std::vector<double> se;
    std::uint64_t accepted = 0;
    std::uint64_t overflow_j = 0; // accepted runs with Z(m,n) > j_max
    std::uint64_t indeterminate = 0;
    std::uint64_t replicates = 0;
    double acceptance_rate = 0.0;
    bool too_few_accepted = false; // accepted < 100; result still returned
    std::int64_t span = 0;         // n - m = ceil(x phi)
    std::int64_t T = 0;
};

// rejection conditioning on H(n); estimates P(Z(n - ceil(x phi), n) = j | H(n))
CondReducedResult mc_conditional_reduced(const OffspringLaw& law, std::int64_t n, std::int64_t phi,
                                         double x, int j_max, std::uint64_t replicates,
                                         std::uint64_t seed, int jobs = 0,
                                         std::uint64_t population_cap = 10'000'000);

struct ZubkovResult {
    std::vector<double> grid;      // y values
    std::vector<double> cdf;       // empirical P(d(n)/n <= y | Z(n)>0)
    std::vector<std::uint64_t> d_histogram; // histogram of d(n), 0..n
    std::uint64_t accepted = 0;
    std::uint64_t replicates = 0;
    std::uint64_t indeterminate = 0;
    double sup_dev_uniform = 0.0;  // max_y |cdf(y) - y| over the grid
};

ZubkovResult mc_zubkov(const OffspringLaw& law, std::int64_t n, std::uint64_t replicates,
                       std::uint64_t seed, int jobs = 0, std::uint64_t population_cap = 10'000'000);

// optional replicate-level diagnostic log: `replicate,z_final,d_n,accepted`
// (z_final/d_n are -1 for indeterminate and d_n is -1 for extinct runs)
void write_replicate_log(const OffspringLaw& law, std::int64_t n, std::int64_t phi,
                         std::uint64_t replicates, std::uint64_t seed, std::ostream& os,
                         std::uint64_t population_cap = 10'000'000);

} // namespace gwlab
