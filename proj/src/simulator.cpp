#include "gwlab/simulator.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <ostream>
#include <thread>

#include "gwlab/series_engine.hpp"

namespace gwlab {

namespace {

int resolve_jobs(int jobs) {
    if (jobs > 0) return jobs;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Partition replicate indices into chunks and run fn(first, last) on each.
// All aggregation is integer-valued, so results do not depend on the split.
template <class Fn>
void parallel_replicates(std::uint64_t replicates, int jobs, Fn&& fn) {
    jobs = resolve_jobs(jobs);
    if (jobs <= 1 || replicates < 1024) {
        fn(std::uint64_t{0}, replicates);
        return;
    }
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (replicates + static_cast<std::uint64_t>(jobs) - 1) / static_cast<std::uint64_t>(jobs);
    for (int t = 0; t < jobs; ++t) {
        const std::uint64_t first = chunk * static_cast<std::uint64_t>(t);
        const std::uint64_t last = std::min(replicates, first + chunk);
        if (first >= last) break;
        pool.emplace_back([&fn, first, last] { fn(first, last); });
    }
    for (auto& th : pool) th.join();
}

// Simulates one replicate with the doubled-cap retry policy. Returns Ok or
// Extinct with z set, or Overflow after 2 doubled retries (Indeterminate).
SimStatus count_with_retries(const OffspringLaw& law, std::int64_t n, std::uint64_t seed,
                             std::uint64_t rep, std::uint64_t cap, std::uint64_t& z) {
    for (int attempt = 0; attempt < 3; ++attempt) {
        SimStatus st = simulate_count(law, n, RngStream(seed, rep), cap << attempt, z);
        if (st != SimStatus::Overflow) return st;
    }
    return SimStatus::Overflow;
}

} // namespace

SimStatus simulate_count(const OffspringLaw& law, std::int64_t n, RngStream rng,
                         std::uint64_t population_cap, std::uint64_t& z_final) {
    std::uint64_t z = 1;
    std::uint64_t total = 1;
    for (std::int64_t m = 0; m < n && z > 0; ++m) {
        std::uint64_t next = 0;
        for (std::uint64_t i = 0; i < z; ++i) next += law.sample(rng);
        total += next;
        if (total > population_cap) return SimStatus::Overflow;
        z = next;
    }
    z_final = z;
    return z == 0 ? SimStatus::Extinct : SimStatus::Ok;
}

SimStatus simulate_tree(const OffspringLaw& law, std::int64_t n, RngStream rng,
                        std::uint64_t population_cap, TreeRun& out) {
    out = TreeRun{};
    out.n = n;
    out.z.assign(static_cast<std::size_t>(n) + 1, 0);
    out.offspring.assign(static_cast<std::size_t>(n), {});
    out.z[0] = 1;
    std::uint64_t total = 1;
    for (std::int64_t m = 0; m < n; ++m) {
        const std::uint64_t z = out.z[static_cast<std::size_t>(m)];
        if (z == 0) break;
        auto& row = out.offspring[static_cast<std::size_t>(m)];
        row.resize(z);
        std::uint64_t next = 0;
        for (std::uint64_t i = 0; i < z; ++i) {
            const std::uint64_t k = law.sample(rng);
            row[i] = static_cast<std::uint32_t>(k);
            next += k;
        }
        total += next;
        if (total > population_cap) return SimStatus::Overflow;
        out.z[static_cast<std::size_t>(m + 1)] = next;
    }
    out.z_final = out.z[static_cast<std::size_t>(n)];
    out.survived = out.z_final > 0;
    if (!out.survived) return SimStatus::Extinct;

    // backward survivor marking
    out.survivor_marks.assign(static_cast<std::size_t>(n) + 1, {});
    out.reduced.assign(static_cast<std::size_t>(n) + 1, 0);
    out.survivor_marks[static_cast<std::size_t>(n)].assign(out.z_final, 1);
    out.reduced[static_cast<std::size_t>(n)] = out.z_final;
    for (std::int64_t m = n - 1; m >= 0; --m) {
        const auto& row = out.offspring[static_cast<std::size_t>(m)];
        const auto& child = out.survivor_marks[static_cast<std::size_t>(m + 1)];
        auto& marks = out.survivor_marks[static_cast<std::size_t>(m)];
        marks.assign(row.size(), 0);
        std::uint64_t base = 0, count = 0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::uint8_t mk = 0;
            for (std::uint32_t cchild = 0; cchild < row[i]; ++cchild)
                if (child[base + cchild] != 0) {
                    mk = 1;
                    break;
                }
            base += row[i];
            marks[i] = mk;
            count += mk;
        }
        out.reduced[static_cast<std::size_t>(m)] = count;
    }
    std::int64_t b = -1;
    for (std::int64_t m = n - 1; m >= 0; --m)
        if (out.reduced[static_cast<std::size_t>(m)] == 1) {
            b = m;
            break;
        }
    out.mrca_distance = n - b; // b >= 0 always: Z(0,n)=1 on survival
    return SimStatus::Ok;
}

EstimatorResult mc_small_dev(const OffspringLaw& law, std::int64_t n, std::int64_t phi,
                             std::uint64_t replicates, std::uint64_t seed, int jobs,
                             std::uint64_t population_cap) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::int64_t T = small_deviation_threshold(law, phi);
    std::mutex merge_mu;
    std::uint64_t hits = 0, indeterminate = 0;
    parallel_replicates(replicates, jobs, [&](std::uint64_t first, std::uint64_t last) {
        std::uint64_t local_hits = 0, local_ind = 0;
        for (std::uint64_t rep = first; rep < last; ++rep) {
            std::uint64_t z = 0;
            const SimStatus st = count_with_retries(law, n, seed, rep, population_cap, z);
            if (st == SimStatus::Overflow) {
                ++local_ind;
                continue;
            }
            if (z > 0 && z <= static_cast<std::uint64_t>(T)) ++local_hits;
        }
        std::lock_guard<std::mutex> lock(merge_mu);
        hits += local_hits;
        indeterminate += local_ind;
    });
    EstimatorResult r;
    r.replicates = replicates;
    r.indeterminate = indeterminate;
    r.accepted = replicates - indeterminate;
    r.hits = hits;
    r.seed = seed;
    const double p = r.accepted == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(r.accepted);
    r.estimate = p;
    r.stderr_est = r.accepted == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(r.accepted));
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

CondReducedResult mc_conditional_reduced(const OffspringLaw& law, std::int64_t n, std::int64_t phi,
                                         double x, int j_max, std::uint64_t replicates,
                                         std::uint64_t seed, int jobs,
                                         std::uint64_t population_cap) {
    const std::int64_t span = static_cast<std::int64_t>(std::ceil(x * static_cast<double>(phi)));
    if (span >= n) throw DomainError("mc_conditional_reduced: ceil(x phi) must be < n");
    const std::int64_t m = n - span;
    const std::int64_t T = small_deviation_threshold(law, phi);

    std::mutex merge_mu;
    std::vector<std::uint64_t> accepted_reps;
    std::uint64_t indeterminate = 0;
    parallel_replicates(replicates, jobs, [&](std::uint64_t first, std::uint64_t last) {
        std::vector<std::uint64_t> local_acc;
        std::uint64_t local_ind = 0;
        for (std::uint64_t rep = first; rep < last; ++rep) {
            std::uint64_t z = 0;
            const SimStatus st = count_with_retries(law, n, seed, rep, population_cap, z);
            if (st == SimStatus::Overflow) {
                ++local_ind;
                continue;
            }
            if (z > 0 && z <= static_cast<std::uint64_t>(T)) local_acc.push_back(rep);
        }
        std::lock_guard<std::mutex> lock(merge_mu);
        indeterminate += local_ind;
        accepted_reps.insert(accepted_reps.end(), local_acc.begin(), local_acc.end());
    });

    // resimulate accepted replicates with genealogy to read off Z(m,n);
    // identical streams reproduce identical draws
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(j_max) + 1, 0);
    std::uint64_t overflow_j = 0;
    for (std::uint64_t rep : accepted_reps) {
        TreeRun tree;
        std::uint64_t cap = population_cap;
        SimStatus st = simulate_tree(law, n, RngStream(seed, rep), cap, tree);
        for (int attempt = 1; attempt < 3 && st == SimStatus::Overflow; ++attempt)
            st = simulate_tree(law, n, RngStream(seed, rep), cap << attempt, tree);
        if (st != SimStatus::Ok) throw std::runtime_error("mc_conditional_reduced: resimulation diverged");
        const std::uint64_t zm = tree.reduced[static_cast<std::size_t>(m)];
        if (zm <= static_cast<std::uint64_t>(j_max))
            ++counts[static_cast<std::size_t>(zm)];
        else
            ++overflow_j;
    }

    CondReducedResult r;
    r.replicates = replicates;
    r.indeterminate = indeterminate;
    r.accepted = accepted_reps.size();
    r.overflow_j = overflow_j;
    r.span = span;
    r.T = T;
    r.acceptance_rate = static_cast<double>(r.accepted) / static_cast<double>(replicates);
    r.too_few_accepted = r.accepted < 100;
    r.p.assign(static_cast<std::size_t>(j_max) + 1, 0.0);
    r.se.assign(static_cast<std::size_t>(j_max) + 1, 0.0);
    if (r.accepted > 0) {
        for (int j = 0; j <= j_max; ++j) {
            const double p = static_cast<double>(counts[static_cast<std::size_t>(j)]) / static_cast<double>(r.accepted);
            r.p[static_cast<std::size_t>(j)] = p;
            r.se[static_cast<std::size_t>(j)] = std::sqrt(p * (1.0 - p) / static_cast<double>(r.accepted));
        }
    }
    return r;
}

void write_replicate_log(const OffspringLaw& law, std::int64_t n, std::int64_t phi,
                         std::uint64_t replicates, std::uint64_t seed, std::ostream& os,
                         std::uint64_t population_cap) {
    const std::int64_t T = small_deviation_threshold(law, phi);
    os << "replicate,z_final,d_n,accepted\n";
    for (std::uint64_t rep = 0; rep < replicates; ++rep) {
        std::uint64_t z = 0;
        const SimStatus st = count_with_retries(law, n, seed, rep, population_cap, z);
        if (st == SimStatus::Overflow) {
            os << rep << ",-1,-1,0\n";
            continue;
        }
        std::int64_t d = -1;
        if (st == SimStatus::Ok) {
            TreeRun tree;
            SimStatus ts = simulate_tree(law, n, RngStream(seed, rep), population_cap, tree);
            for (int attempt = 1; attempt < 3 && ts == SimStatus::Overflow; ++attempt)
                ts = simulate_tree(law, n, RngStream(seed, rep), population_cap << attempt, tree);
            if (ts == SimStatus::Ok) d = tree.mrca_distance;
        }
        const bool accepted = z > 0 && z <= static_cast<std::uint64_t>(T);
        os << rep << ',' << z << ',' << d << ',' << (accepted ? 1 : 0) << '\n';
    }
}

ZubkovResult mc_zubkov(const OffspringLaw& law, std::int64_t n, std::uint64_t replicates,
                       std::uint64_t seed, int jobs, std::uint64_t population_cap) {
    if (replicates < 10'000) throw DomainError("mc_zubkov: need at least 1e4 replicates");
    ZubkovResult r;
    r.replicates = replicates;
    r.d_histogram.assign(static_cast<std::size_t>(n) + 1, 0);

    std::mutex merge_mu;
    parallel_replicates(replicates, jobs, [&](std::uint64_t first, std::uint64_t last) {
        std::vector<std::uint64_t> local_hist(static_cast<std::size_t>(n) + 1, 0);
        std::uint64_t local_ind = 0, local_acc = 0;
        for (std::uint64_t rep = first; rep < last; ++rep) {
            std::uint64_t z = 0;
            SimStatus st = count_with_retries(law, n, seed, rep, population_cap, z);
            if (st == SimStatus::Overflow) {
                ++local_ind;
                continue;
            }
            if (st != SimStatus::Ok) continue; // extinct
            TreeRun tree;
            st = simulate_tree(law, n, RngStream(seed, rep), population_cap, tree);
            for (int attempt = 1; attempt < 3 && st == SimStatus::Overflow; ++attempt)
                st = simulate_tree(law, n, RngStream(seed, rep), population_cap << attempt, tree);
            if (st != SimStatus::Ok) throw std::runtime_error("mc_zubkov: resimulation diverged");
            ++local_acc;
            ++local_hist[static_cast<std::size_t>(tree.mrca_distance)];
        }
        std::lock_guard<std::mutex> lock(merge_mu);
        r.indeterminate += local_ind;
        r.accepted += local_acc;
        for (std::size_t i = 0; i < local_hist.size(); ++i) r.d_histogram[i] += local_hist[i];
    });

    for (int g = 1; g <= 9; ++g) r.grid.push_back(0.1 * g);
    std::vector<std::uint64_t> cum(r.d_histogram.size() + 1, 0);
    for (std::size_t i = 0; i < r.d_histogram.size(); ++i) cum[i + 1] = cum[i] + r.d_histogram[i];
    for (double y : r.grid) {
        const auto dmax = static_cast<std::size_t>(std::floor(y * static_cast<double>(n) + 1e-9));
        const double F = r.accepted == 0 ? 0.0 : static_cast<double>(cum[dmax + 1]) / static_cast<double>(r.accepted);
        r.cdf.push_back(F);
    }
    r.sup_dev_uniform = 0.0;
    for (std::size_t i = 0; i < r.grid.size(); ++i)
        r.sup_dev_uniform = std::max(r.sup_dev_uniform, std::fabs(r.cdf[i] - r.grid[i]));
    return r;
}

} // namespace gwlab
