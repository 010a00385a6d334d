#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sfrf/datagen.hpp"
#include "sfrf/dataset.hpp"
#include "sfrf/experiment.hpp"
#include "sfrf/forest.hpp"
#include "sfrf/null_model.hpp"
#include "sfrf/permtest.hpp"
#include "sfrf/rng.hpp"

namespace {

std::string fmt(const char* spec, double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// stdout unless a path is given
class OutputTarget {
  public:
    explicit OutputTarget(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw std::runtime_error("cannot open " + path + " for writing");
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

  private:
    std::ofstream file_;
};

void write_truth(const std::string& path, const std::vector<int>& relevant) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (int f : relevant) out << f << '\n';
}

struct GenArgs {
    std::string kind = "independent";
    int samples = 0, features = 0, relevant = 0;
    double rho = 0.0, sigma = 5.0;
    int grid_size = 32, source_columns = 315;
    double smoothness = 1.5;
    std::uint64_t seed = 0;
    std::string out, truth_out;
    bool header = false;
};

void run_gen(const GenArgs& a) {
    sfrf::GeneratedData gd;
    if (a.kind == "independent") {
        sfrf::IndepGenConfig cfg;
        cfg.sample_count = a.samples;
        cfg.feature_count = a.features;
        cfg.relevant_count = a.relevant;
        cfg.rho = a.rho;
        cfg.sigma = a.sigma;
        cfg.rng_seed = a.seed;
        gd = sfrf::gen_independent(cfg);
    } else {
        Eigen::MatrixXd source = sfrf::make_synthetic_source(
            a.grid_size, a.smoothness, a.source_columns,
            sfrf::derive_seed(a.seed, 0xDA7Au));
        sfrf::LatentModel model = sfrf::fit_latent_model(source);
        sfrf::Region region = sfrf::contiguous_patch_region(a.grid_size, a.relevant);
        gd = sfrf::gen_correlated(model, region, a.rho, a.samples, a.seed);
    }
    sfrf::write_dataset_csv(gd.data, a.out, a.header);
    write_truth(a.truth_out.empty() ? a.out + ".truth" : a.truth_out, gd.relevant);
}

struct ForestArgs {
    std::string data;
    bool header = false;
    int trees = 100, subset_size = 0;
    std::string strategy = "per-node";
    double bagging_ratio = 0.5;
    int min_split = 5, max_depth = 0;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out;

    sfrf::ForestConfig config() const {
        sfrf::ForestConfig fc;
        fc.num_trees = trees;
        fc.subset_size = subset_size;
        fc.strategy = sfrf::parse_strategy(strategy);
        fc.bagging_ratio = bagging_ratio;
        fc.min_samples_to_split = min_split;
        fc.max_depth = max_depth;
        fc.rng_seed = seed;
        return fc;
    }
};

void add_forest_options(CLI::App* cmd, ForestArgs& a) {
    cmd->add_option("--data", a.data, "dataset CSV (label first, features after)")->required();
    cmd->add_flag("--header", a.header, "dataset CSV has a header row");
    cmd->add_option("--trees", a.trees, "number of trees");
    cmd->add_option("--subset-size", a.subset_size, "candidate features per draw")->required();
    cmd->add_option("--strategy", a.strategy, "per-node or per-tree");
    cmd->add_option("--bagging-ratio", a.bagging_ratio, "fraction of samples per tree");
    cmd->add_option("--min-split", a.min_split, "minimum samples to split a node");
    cmd->add_option("--max-depth", a.max_depth, "depth limit (0 = unlimited)");
    cmd->add_option("--seed", a.seed, "RNG seed");
    cmd->add_option("--threads", a.threads, "worker threads");
    cmd->add_option("--out", a.out, "output CSV (default: stdout)");
}

void run_train(const ForestArgs& a) {
    sfrf::Dataset data = sfrf::read_dataset_csv(a.data, a.header);
    sfrf::TrainedForest forest = sfrf::train_forest(a.config(), data, a.threads);
    OutputTarget target(a.out);
    auto& out = target.stream();
    out << "# train trees=" << a.trees << " subset_size=" << a.subset_size
        << " strategy=" << a.strategy << " bagging_ratio=" << fmt("%.6g", a.bagging_ratio)
        << " seed=" << a.seed
        << " avg_internal_nodes=" << fmt("%.17g", forest.avg_internal_nodes) << '\n';
    out << "feature,count\n";
    for (int f = 0; f < forest.feature_count; ++f)
        out << f << ',' << forest.selection_counts[f] << '\n';
}

struct ThresholdArgs {
    int features = 0, subset_size = 0, trees = 0;
    double avg_nodes = 0.0;
    std::string strategy = "per-node";
    std::vector<double> alphas{0.05};
};

void run_threshold(const ThresholdArgs& a) {
    sfrf::NullModelParams np;
    np.total_features = a.features;
    np.subset_size = a.subset_size;
    np.num_trees = a.trees;
    np.avg_internal_nodes = a.avg_nodes;
    np.strategy = sfrf::parse_strategy(a.strategy);
    std::cout << "alpha,kappa_star,tail_prob,expected_fp\n";
    for (double alpha : a.alphas) {
        sfrf::ThresholdDecision td = sfrf::solve_threshold(np, alpha);
        std::cout << fmt("%.6g", alpha) << ',' << td.kappa_star << ','
                  << fmt("%.10g", td.tail_prob) << ',' << fmt("%.10g", td.expected_fp)
                  << '\n';
    }
}

void run_permtest(const ForestArgs& a, int permutations, double alpha) {
    sfrf::Dataset data = sfrf::read_dataset_csv(a.data, a.header);
    sfrf::PermTestResult result =
        sfrf::permutation_pvalues(data, a.config(), permutations, alpha, a.threads);
    for (const std::string& w : result.warnings) std::cerr << "warning: " << w << '\n';
    OutputTarget target(a.out);
    auto& out = target.stream();
    out << "# permtest permutations=" << result.num_permutations << " trees=" << a.trees
        << " subset_size=" << a.subset_size << " strategy=" << a.strategy
        << " seed=" << a.seed << '\n';
    out << "feature,observed_count,p_value\n";
    for (std::size_t f = 0; f < result.p_values.size(); ++f)
        out << f << ',' << result.observed_counts[f] << ','
            << fmt("%.10g", result.p_values[f]) << '\n';
}

struct SweepArgs {
    std::string spec_path, out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
};

sfrf::ExperimentSpec load_sweep_spec(const SweepArgs& a) {
    sfrf::ExperimentSpec spec = sfrf::load_experiment_spec(a.spec_path);
    if (a.seed_set) spec.seed = a.seed;
    if (!a.out.empty()) spec.output_path = a.out;
    if (spec.output_path.empty())
        throw std::runtime_error("no output path: set --out or the spec's output key");
    return spec;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"selection-frequency feature relevance for random forests"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cmd_gen = app.add_subcommand("gen", "generate a labelled dataset");
    cmd_gen->add_option("--kind", gen.kind, "independent or correlated")
        ->check(CLI::IsMember({"independent", "correlated"}));
    cmd_gen->add_option("--samples", gen.samples, "sample count")->required();
    cmd_gen->add_option("--features", gen.features, "feature count (independent kind)");
    cmd_gen->add_option("--relevant", gen.relevant, "relevant feature count");
    cmd_gen->add_option("--rho", gen.rho, "feature-label correlation in [0,1)");
    cmd_gen->add_option("--sigma", gen.sigma, "noise scale (independent kind)");
    cmd_gen->add_option("--grid-size", gen.grid_size, "lattice side (correlated kind)");
    cmd_gen->add_option("--smoothness", gen.smoothness, "kernel width (correlated kind)");
    cmd_gen->add_option("--source-columns", gen.source_columns, "source observations (correlated kind)");
    cmd_gen->add_option("--seed", gen.seed, "RNG seed");
    cmd_gen->add_option("--out", gen.out, "dataset CSV path")->required();
    cmd_gen->add_option("--truth-out", gen.truth_out, "relevant-index sidecar path (default: <out>.truth)");
    cmd_gen->add_flag("--header", gen.header, "write a header row");

    ForestArgs train;
    CLI::App* cmd_train = app.add_subcommand("train", "train a forest, report selection counts");
    add_forest_options(cmd_train, train);

    ThresholdArgs thr;
    CLI::App* cmd_thr = app.add_subcommand("threshold", "solve the selection-count threshold");
    cmd_thr->add_option("--features", thr.features, "total feature count")->required();
    cmd_thr->add_option("--subset-size", thr.subset_size, "candidate features per draw")->required();
    cmd_thr->add_option("--trees", thr.trees, "number of trees")->required();
    cmd_thr->add_option("--avg-nodes", thr.avg_nodes, "average internal nodes per tree")->required();
    cmd_thr->add_option("--strategy", thr.strategy, "per-node or per-tree");
    cmd_thr->add_option("--alpha", thr.alphas, "rate bound(s)");

    ForestArgs pt;
    int permutations = 250;
    double pt_alpha = 0.0;
    CLI::App* cmd_pt = app.add_subcommand("permtest", "permutation p-values for selection counts");
    add_forest_options(cmd_pt, pt);
    cmd_pt->add_option("--permutations", permutations, "number of label permutations");
    cmd_pt->add_option("--alpha", pt_alpha, "intended rate bound (for the resolution warning)");

    SweepArgs sweep, calib;
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "rate sweep over a parameter grid");
    cmd_sweep->add_option("--spec", sweep.spec_path, "experiment spec file")->required();
    cmd_sweep->add_option("--out", sweep.out, "output CSV (overrides the spec)");
    cmd_sweep->add_option("--seed", sweep.seed, "seed override")
        ->each([&](const std::string&) { sweep.seed_set = true; });
    cmd_sweep->add_option("--threads", sweep.threads, "worker threads");

    CLI::App* cmd_cal = app.add_subcommand("calibrate", "null-model calibration curve");
    cmd_cal->add_option("--spec", calib.spec_path, "experiment spec file")->required();
    cmd_cal->add_option("--out", calib.out, "output CSV (overrides the spec)");
    cmd_cal->add_option("--seed", calib.seed, "seed override")
        ->each([&](const std::string&) { calib.seed_set = true; });
    cmd_cal->add_option("--threads", calib.threads, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_gen->parsed()) {
            if (gen.kind == "independent" && gen.features <= 0)
                throw std::runtime_error("--features is required for the independent kind");
            run_gen(gen);
        } else if (cmd_train->parsed()) {
            run_train(train);
        } else if (cmd_thr->parsed()) {
            run_threshold(thr);
        } else if (cmd_pt->parsed()) {
            run_permtest(pt, permutations, pt_alpha);
        } else if (cmd_sweep->parsed()) {
            sfrf::ExperimentSpec spec = load_sweep_spec(sweep);
            write_text(spec.output_path, sfrf::rate_report_csv(sfrf::run_sweep(spec, sweep.threads)));
        } else if (cmd_cal->parsed()) {
            sfrf::ExperimentSpec spec = load_sweep_spec(calib);
            write_text(spec.output_path,
                       sfrf::calibration_csv(sfrf::run_null_calibration(spec, calib.threads)));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
