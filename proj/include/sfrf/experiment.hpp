#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sfrf/strategy.hpp"

namespace sfrf {

struct Rates {
    double fpr = 0.0;            // |selected \ truth| / (F - |truth|)
    std::optional<double> fnr;   // |truth \ selected| / |truth|; absent if truth empty
    std::optional<double> tpr;   // 1 - fnr
};

Rates compute_rates(const std::vector<int>& selected,
                    const std::vector<int>& truth, int feature_count);

// Grid of data-generation settings; the cartesian product with the forest
// grid defines the sweep's parameter points.
struct GeneratorGrid {
    enum class Kind { Independent, Correlated };
    Kind kind = Kind::Independent;

    std::vector<int> samples;   // S values
    std::vector<int> features;  // F values (independent kind only)
    std::vector<int> relevant;  // N values
    std::vector<double> rho;
    double sigma = 5.0;

    // correlated kind: source model settings (F = grid_size^2)
    int grid_size = 32;
    double smoothness = 1.5;
    int source_columns = 315;
};

struct ExperimentSpec {
    GeneratorGrid generator;
    std::vector<int> trees;        // T values
    std::vector<int> subset_size;  // F_n values
    Strategy strategy = Strategy::PerNode;
    double bagging_ratio = 0.5;
    int min_samples_to_split = 5;
    int max_depth = 0;  // 0 = unlimited
    std::vector<double> alphas;
    int repetitions = 1;
    std::uint64_t seed = 0;
    std::string output_path;
    bool shuffle_columns = true;

    void validate() const;
};

// Flat key = value format with [generator], [forest], [experiment] sections;
// '#' starts a comment, lists are comma-separated. Unknown keys are errors.
ExperimentSpec parse_experiment_spec(std::istream& in);
ExperimentSpec load_experiment_spec(const std::string& path);

struct ParameterPoint {
    int samples = 0;
    int features = 0;
    int relevant = 0;
    double rho = 0.0;
    int trees = 0;
    int subset_size = 0;
};

// Seed streams for repetition r of parameter point pi; exposed so a single
// sweep repetition can be reproduced in isolation.
struct RepSeeds {
    std::uint64_t data;
    std::uint64_t shuffle;
    std::uint64_t forest;
};
RepSeeds sweep_rep_seeds(std::uint64_t master, int point_index, int rep);

struct RateRow {
    ParameterPoint point;
    double alpha = 0.0;
    double mean_kappa_star = 0.0;
    double mean_predicted_tail = 0.0;
    double mean_internal_nodes = 0.0;  // measured K, averaged over reps
    double fpr = 0.0;
    std::optional<double> fnr;
    std::optional<double> tpr;
    int repetitions = 0;
};

struct RateReport {
    std::string preamble;  // '#' comment line recording the spec
    std::vector<RateRow> rows;
};

// Per repetition: generate data, optionally shuffle columns, train one
// forest, then solve the threshold for each alpha using the forest's own
// measured K. Rows are grouped by parameter point, one row per alpha.
RateReport run_sweep(const ExperimentSpec& spec, int num_threads = 1);

void write_rate_report_csv(const RateReport& report, std::ostream& out);
std::string rate_report_csv(const RateReport& report);

struct CalibrationRow {
    ParameterPoint point;
    int kappa = 0;
    double predicted_tail = 0.0;  // averaged over reps (K varies per forest)
    double observed_exceed = 0.0; // fraction of features with count > kappa
    int repetitions = 0;
};

struct CalibrationReport {
    std::string preamble;
    std::vector<CalibrationRow> rows;
};

// Null-model calibration curve: for each kappa up to the largest observed
// count, predicted tail probability vs. the observed exceedance fraction.
CalibrationReport run_null_calibration(const ExperimentSpec& spec,
                                       int num_threads = 1);

void write_calibration_csv(const CalibrationReport& report, std::ostream& out);
std::string calibration_csv(const CalibrationReport& report);

}  // namespace sfrf
