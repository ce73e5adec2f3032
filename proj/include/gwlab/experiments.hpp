#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwlab/offspring.hpp"
#include "gwlab/series_engine.hpp"

namespace gwlab {

// phi(n) = ceil(n^exponent), or an explicit per-n table
struct PhiRule {
    double exponent = 0.0;
    std::map<std::int64_t, std::int64_t> table;
    bool use_table = false;

    std::int64_t operator()(std::int64_t n) const;
};

struct ExperimentConfig {
    std::string id;
    nlohmann::json law_json;
    std::vector<std::int64_t> schedule;
    PhiRule phi;
    std::vector<double> x_grid;
    int j_min = 1;
    int j_max = 3;
    std::map<std::string, double> tolerances;
    std::uint64_t seed = 1;
    std::uint64_t replicates = 0;
    int jobs = 0;
    std::string out_dir;

    double tol(const std::string& key, double fallback) const {
        auto it = tolerances.find(key);
        return it == tolerances.end() ? fallback : it->second;
    }
};

struct ReportRow {
    std::string name;
    double predicted = 0.0;
    double observed = 0.0;
    double ratio = 0.0;
    double err = 0.0; // error bar (MC) or 0 for exact rows
    bool pass = true;
    bool checked = true; // informational rows carry pass=true, checked=false
    std::string source;  // module that produced the observed value
};

struct Report {
    std::string id;
    std::vector<ReportRow> rows;
    bool pass = true;
    std::string config_hash;
    nlohmann::json summary;

    void add(ReportRow row) {
        pass = pass && row.pass;
        rows.push_back(std::move(row));
    }
};

// canonical-dump FNV-1a hash, recorded in every output header
std::string config_hash(const nlohmann::json& canonical);

ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json default_config(const std::string& experiment_id);

Report run_experiment(const ExperimentConfig& cfg);

void write_csv(const Report& report, const std::string& path);
void write_summary(const Report& report, const std::string& path);

// Shared exact-engine data for the theorem experiments: one series pass over
// the schedule with T sized for the largest phi.
struct StableRunData {
    std::vector<std::int64_t> schedule;
    std::vector<std::int64_t> phi;
    std::vector<std::int64_t> T;
    std::vector<GenerationTable> tables;
    std::vector<double> p_H;
};
StableRunData compute_run_data(const OffspringLaw& law, const std::vector<std::int64_t>& schedule,
                               const PhiRule& phi);

Report exp_thm1(const ExperimentConfig& cfg);
Report exp_thm2(const ExperimentConfig& cfg);
Report exp_corollary(const ExperimentConfig& cfg);
Report exp_stationarity(const ExperimentConfig& cfg);
Report exp_tauberian(const ExperimentConfig& cfg);
Report exp_bell_bound(const ExperimentConfig& cfg);
Report exp_integral_lemmas(const ExperimentConfig& cfg);
Report exp_derivative_lemmas(const ExperimentConfig& cfg);
Report exp_zubkov(const ExperimentConfig& cfg);
Report exp_finite_variance(const ExperimentConfig& cfg);

} // namespace gwlab
