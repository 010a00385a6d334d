#include "sfrf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sfrf/datagen.hpp"
#include "sfrf/forest.hpp"
#include "sfrf/null_model.hpp"
#include "sfrf/parallel.hpp"
#include "sfrf/rng.hpp"

namespace sfrf {

Rates compute_rates(const std::vector<int>& selected,
                    const std::vector<int>& truth, int feature_count) {
    if (feature_count < 1)
        throw std::invalid_argument("rates: need at least one feature");
    std::set<int> truth_set(truth.begin(), truth.end());
    std::set<int> selected_set(selected.begin(), selected.end());
    for (int f : selected_set)
        if (f < 0 || f >= feature_count)
            throw std::invalid_argument("rates: selected index out of range");
    for (int f : truth_set)
        if (f < 0 || f >= feature_count)
            throw std::invalid_argument("rates: truth index out of range");

    int false_pos = 0;
    for (int f : selected_set) false_pos += truth_set.count(f) ? 0 : 1;
    int missed = 0;
    for (int f : truth_set) missed += selected_set.count(f) ? 0 : 1;

    Rates r;
    int null_features = feature_count - static_cast<int>(truth_set.size());
    r.fpr = null_features > 0 ? static_cast<double>(false_pos) / null_features : 0.0;
    if (!truth_set.empty()) {
        r.fnr = static_cast<double>(missed) / static_cast<double>(truth_set.size());
        r.tpr = 1.0 - *r.fnr;
    }
    return r;
}

void ExperimentSpec::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("experiment spec: ") + what);
    };
    require(!generator.samples.empty(), "samples list is empty");
    for (int s : generator.samples) require(s >= 2, "samples must be >= 2");
    if (generator.kind == GeneratorGrid::Kind::Independent) {
        require(!generator.features.empty(), "features list is empty");
        for (int f : generator.features) require(f >= 1, "features must be >= 1");
    } else {
        require(generator.features.empty(),
                "features is derived from grid_size for the correlated generator");
        require(generator.grid_size >= 2, "grid_size must be >= 2");
        require(generator.smoothness > 0.0, "smoothness must be positive");
        require(generator.source_columns >= 2, "source_columns must be >= 2");
    }
    require(!generator.relevant.empty(), "relevant list is empty");
    for (int n : generator.relevant) require(n >= 0, "relevant must be >= 0");
    require(!generator.rho.empty(), "rho list is empty");
    for (double r : generator.rho) require(r >= 0.0 && r < 1.0, "rho must be in [0, 1)");
    require(generator.sigma > 0.0, "sigma must be positive");
    require(!trees.empty(), "trees list is empty");
    for (int t : trees) require(t >= 0, "trees must be >= 0");
    require(!subset_size.empty(), "subset_size list is empty");
    for (int f : subset_size) require(f >= 1, "subset_size must be >= 1");
    require(bagging_ratio > 0.0 && bagging_ratio <= 1.0, "bagging_ratio must be in (0, 1]");
    require(min_samples_to_split >= 2, "min_samples_to_split must be >= 2");
    require(max_depth >= 0, "max_depth must be >= 0");
    require(!alphas.empty(), "alphas list is empty");
    for (double a : alphas) require(a > 0.0 && a <= 1.0, "alphas must be in (0, 1]");
    require(repetitions >= 1, "repetitions must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void spec_fail(int line, const std::string& what) {
    throw std::runtime_error("experiment spec line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_list(const std::string& v, int line) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) spec_fail(line, "empty list element");
        out.push_back(item);
    }
    if (out.empty()) spec_fail(line, "empty value");
    return out;
}

long long to_ll(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        spec_fail(line, "cannot parse integer '" + s + "'");
    }
}

double to_dbl(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        spec_fail(line, "cannot parse number '" + s + "'");
    }
}

std::vector<int> int_list(const std::string& v, int line) {
    std::vector<int> out;
    for (const auto& item : split_list(v, line))
        out.push_back(static_cast<int>(to_ll(item, line)));
    return out;
}

std::vector<double> dbl_list(const std::string& v, int line) {
    std::vector<double> out;
    for (const auto& item : split_list(v, line)) out.push_back(to_dbl(item, line));
    return out;
}

bool to_bool(const std::string& s, int line) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    spec_fail(line, "cannot parse boolean '" + s + "'");
}

std::string fmt_g(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

ExperimentSpec parse_experiment_spec(std::istream& in) {
    ExperimentSpec spec;
    bool have_relevant = false, have_rho = false;

    std::string section, line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') spec_fail(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "generator" && section != "forest" && section != "experiment")
                spec_fail(line_no, "unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) spec_fail(line_no, "expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) spec_fail(line_no, "expected key = value");

        if (section == "generator") {
            if (key == "kind") {
                if (value == "independent")
                    spec.generator.kind = GeneratorGrid::Kind::Independent;
                else if (value == "correlated")
                    spec.generator.kind = GeneratorGrid::Kind::Correlated;
                else
                    spec_fail(line_no, "unknown generator kind '" + value + "'");
            } else if (key == "samples") {
                spec.generator.samples = int_list(value, line_no);
            } else if (key == "features") {
                spec.generator.features = int_list(value, line_no);
            } else if (key == "relevant") {
                spec.generator.relevant = int_list(value, line_no);
                have_relevant = true;
            } else if (key == "rho") {
                spec.generator.rho = dbl_list(value, line_no);
                have_rho = true;
            } else if (key == "sigma") {
                spec.generator.sigma = to_dbl(value, line_no);
            } else if (key == "grid_size") {
                spec.generator.grid_size = static_cast<int>(to_ll(value, line_no));
            } else if (key == "smoothness") {
                spec.generator.smoothness = to_dbl(value, line_no);
            } else if (key == "source_columns") {
                spec.generator.source_columns = static_cast<int>(to_ll(value, line_no));
            } else {
                spec_fail(line_no, "unknown generator key '" + key + "'");
            }
        } else if (section == "forest") {
            if (key == "trees") {
                spec.trees = int_list(value, line_no);
            } else if (key == "subset_size") {
                spec.subset_size = int_list(value, line_no);
            } else if (key == "strategy") {
                spec.strategy = parse_strategy(value);
            } else if (key == "bagging_ratio") {
                spec.bagging_ratio = to_dbl(value, line_no);
            } else if (key == "min_samples_to_split") {
                spec.min_samples_to_split = static_cast<int>(to_ll(value, line_no));
            } else if (key == "max_depth") {
                spec.max_depth = static_cast<int>(to_ll(value, line_no));
            } else {
                spec_fail(line_no, "unknown forest key '" + key + "'");
            }
        } else if (section == "experiment") {
            if (key == "alphas") {
                spec.alphas = dbl_list(value, line_no);
            } else if (key == "repetitions") {
                spec.repetitions = static_cast<int>(to_ll(value, line_no));
            } else if (key == "seed") {
                spec.seed = static_cast<std::uint64_t>(to_ll(value, line_no));
            } else if (key == "output") {
                spec.output_path = value;
            } else if (key == "shuffle_columns") {
                spec.shuffle_columns = to_bool(value, line_no);
            } else {
                spec_fail(line_no, "unknown experiment key '" + key + "'");
            }
        } else {
            spec_fail(line_no, "key outside of any section");
        }
    }
    if (!have_relevant) spec.generator.relevant = {0};
    if (!have_rho) spec.generator.rho = {0.0};
    spec.validate();
    return spec;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_experiment_spec(in);
}

RepSeeds sweep_rep_seeds(std::uint64_t master, int point_index, int rep) {
    std::uint64_t point_seed =
        derive_seed(master, 0x9001u + static_cast<std::uint64_t>(point_index));
    std::uint64_t rep_seed = derive_seed(point_seed, static_cast<std::uint64_t>(rep));
    return RepSeeds{derive_seed(rep_seed, 1), derive_seed(rep_seed, 2),
                    derive_seed(rep_seed, 3)};
}

namespace {

std::vector<ParameterPoint> grid_points(const ExperimentSpec& spec) {
    std::vector<int> features = spec.generator.features;
    if (spec.generator.kind == GeneratorGrid::Kind::Correlated)
        features = {spec.generator.grid_size * spec.generator.grid_size};
    std::vector<ParameterPoint> points;
    for (int s : spec.generator.samples)
        for (int f : features)
            for (int n : spec.generator.relevant)
                for (double rho : spec.generator.rho)
                    for (int t : spec.trees)
                        for (int fn : spec.subset_size)
                            points.push_back({s, f, n, rho, t, fn});
    return points;
}

// Source model shared by all correlated points; fitted lazily, once.
struct CorrelatedContext {
    LatentModel model;
    bool ready = false;
};

GeneratedData generate_point(const ExperimentSpec& spec, const ParameterPoint& pt,
                             const CorrelatedContext& ctx, std::uint64_t data_seed) {
    if (spec.generator.kind == GeneratorGrid::Kind::Independent) {
        IndepGenConfig cfg;
        cfg.sample_count = pt.samples;
        cfg.feature_count = pt.features;
        cfg.relevant_count = pt.relevant;
        cfg.rho = pt.rho;
        cfg.sigma = spec.generator.sigma;
        cfg.rng_seed = data_seed;
        return gen_independent(cfg);
    }
    Region region = contiguous_patch_region(spec.generator.grid_size, pt.relevant);
    return gen_correlated(ctx.model, region, pt.rho, pt.samples, data_seed);
}

void prepare_context(const ExperimentSpec& spec, CorrelatedContext& ctx) {
    if (spec.generator.kind != GeneratorGrid::Kind::Correlated || ctx.ready) return;
    Eigen::MatrixXd source = make_synthetic_source(
        spec.generator.grid_size, spec.generator.smoothness,
        spec.generator.source_columns, derive_seed(spec.seed, 0xDA7Au));
    ctx.model = fit_latent_model(source);
    ctx.ready = true;
}

ForestConfig forest_config(const ExperimentSpec& spec, const ParameterPoint& pt,
                           std::uint64_t seed) {
    ForestConfig fc;
    fc.num_trees = pt.trees;
    fc.subset_size = pt.subset_size;
    fc.strategy = spec.strategy;
    fc.bagging_ratio = spec.bagging_ratio;
    fc.min_samples_to_split = spec.min_samples_to_split;
    fc.max_depth = spec.max_depth;
    fc.rng_seed = seed;
    return fc;
}

std::string preamble_for(const ExperimentSpec& spec, const char* what) {
    std::ostringstream out;
    out << "# " << what
        << " kind=" << (spec.generator.kind == GeneratorGrid::Kind::Independent
                            ? "independent"
                            : "correlated")
        << " strategy=" << to_string(spec.strategy)
        << " bagging_ratio=" << fmt_g(spec.bagging_ratio)
        << " min_samples_to_split=" << spec.min_samples_to_split
        << " max_depth=" << spec.max_depth
        << " sigma=" << fmt_g(spec.generator.sigma);
    if (spec.generator.kind == GeneratorGrid::Kind::Correlated)
        out << " grid_size=" << spec.generator.grid_size
            << " smoothness=" << fmt_g(spec.generator.smoothness)
            << " source_columns=" << spec.generator.source_columns;
    out << " shuffle_columns=" << (spec.shuffle_columns ? 1 : 0)
        << " repetitions=" << spec.repetitions << " seed=" << spec.seed;
    return out.str();
}

void write_point_fields(std::ostream& out, const ParameterPoint& pt) {
    out << pt.samples << ',' << pt.features << ',' << pt.relevant << ','
        << fmt_g(pt.rho) << ',' << pt.trees << ',' << pt.subset_size;
}

}  // namespace

RateReport run_sweep(const ExperimentSpec& spec, int num_threads) {
    spec.validate();
    CorrelatedContext ctx;
    prepare_context(spec, ctx);

    RateReport report;
    report.preamble = preamble_for(spec, "sweep");

    const auto points = grid_points(spec);
    const int R = spec.repetitions;
    struct PerAlpha {
        long long kappa = 0;
        double tail = 0.0;
        Rates rates;
    };
    struct RepOut {
        double k_measured = 0.0;
        std::vector<PerAlpha> per_alpha;
    };

    for (int pi = 0; pi < static_cast<int>(points.size()); ++pi) {
        const ParameterPoint& pt = points[pi];
        std::vector<RepOut> reps(R);
        parallel_for(R, num_threads, [&](int r) {
            RepSeeds seeds = sweep_rep_seeds(spec.seed, pi, r);
            GeneratedData gd = generate_point(spec, pt, ctx, seeds.data);
            if (spec.shuffle_columns)
                shuffle_dataset_columns(gd.data, gd.relevant, seeds.shuffle);
            TrainedForest forest =
                train_forest(forest_config(spec, pt, seeds.forest), gd.data, 1);

            NullModelParams np;
            np.total_features = pt.features;
            np.subset_size = pt.subset_size;
            np.num_trees = pt.trees;
            np.avg_internal_nodes = forest.avg_internal_nodes;
            np.strategy = spec.strategy;

            RepOut& out = reps[r];
            out.k_measured = forest.avg_internal_nodes;
            out.per_alpha.resize(spec.alphas.size());
            for (std::size_t ai = 0; ai < spec.alphas.size(); ++ai) {
                ThresholdDecision td = solve_threshold(np, spec.alphas[ai]);
                std::vector<int> selected;
                for (int f = 0; f < pt.features; ++f)
                    if (forest.selection_counts[f] > td.kappa_star) selected.push_back(f);
                out.per_alpha[ai] = {td.kappa_star, td.tail_prob,
                                     compute_rates(selected, gd.relevant, pt.features)};
            }
        });

        for (std::size_t ai = 0; ai < spec.alphas.size(); ++ai) {
            RateRow row;
            row.point = pt;
            row.alpha = spec.alphas[ai];
            row.repetitions = R;
            double fnr_sum = 0.0;
            bool have_fnr = pt.relevant > 0;
            for (const RepOut& rep : reps) {
                const PerAlpha& pa = rep.per_alpha[ai];
                row.mean_kappa_star += static_cast<double>(pa.kappa) / R;
                row.mean_predicted_tail += pa.tail / R;
                row.mean_internal_nodes += rep.k_measured / R;
                row.fpr += pa.rates.fpr / R;
                if (have_fnr) fnr_sum += *pa.rates.fnr / R;
            }
            if (have_fnr) {
                row.fnr = fnr_sum;
                row.tpr = 1.0 - fnr_sum;
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

void write_rate_report_csv(const RateReport& report, std::ostream& out) {
    out << report.preamble << '\n'
        << "samples,features,relevant,rho,trees,subset_size,alpha,"
           "mean_kappa_star,mean_predicted_tail,mean_internal_nodes,"
           "fpr,fnr,tpr,repetitions\n";
    for (const RateRow& row : report.rows) {
        write_point_fields(out, row.point);
        out << ',' << fmt_g(row.alpha) << ',' << fmt_g(row.mean_kappa_star) << ','
            << fmt_g(row.mean_predicted_tail) << ','
            << fmt_g(row.mean_internal_nodes) << ',' << fmt_g(row.fpr) << ',';
        if (row.fnr) out << fmt_g(*row.fnr);
        out << ',';
        if (row.tpr) out << fmt_g(*row.tpr);
        out << ',' << row.repetitions << '\n';
    }
}

std::string rate_report_csv(const RateReport& report) {
    std::ostringstream out;
    write_rate_report_csv(report, out);
    return out.str();
}

CalibrationReport run_null_calibration(const ExperimentSpec& spec, int num_threads) {
    spec.validate();
    CorrelatedContext ctx;
    prepare_context(spec, ctx);

    CalibrationReport report;
    report.preamble = preamble_for(spec, "calibration");

    const auto points = grid_points(spec);
    const int R = spec.repetitions;
    struct RepOut {
        std::vector<int> counts;
        double k_measured = 0.0;
    };

    for (int pi = 0; pi < static_cast<int>(points.size()); ++pi) {
        const ParameterPoint& pt = points[pi];
        std::vector<RepOut> reps(R);
        parallel_for(R, num_threads, [&](int r) {
            RepSeeds seeds = sweep_rep_seeds(spec.seed, pi, r);
            GeneratedData gd = generate_point(spec, pt, ctx, seeds.data);
            if (spec.shuffle_columns)
                shuffle_dataset_columns(gd.data, gd.relevant, seeds.shuffle);
            TrainedForest forest =
                train_forest(forest_config(spec, pt, seeds.forest), gd.data, 1);
            reps[r] = {forest.selection_counts, forest.avg_internal_nodes};
        });

        int kappa_max = 0;
        for (const RepOut& rep : reps)
            for (int c : rep.counts) kappa_max = std::max(kappa_max, c);

        std::vector<double> pred(kappa_max + 1, 0.0), obs(kappa_max + 1, 0.0);
        for (const RepOut& rep : reps) {
            NullModelParams np;
            np.total_features = pt.features;
            np.subset_size = pt.subset_size;
            np.num_trees = pt.trees;
            np.avg_internal_nodes = rep.k_measured;
            np.strategy = spec.strategy;
            for (int kappa = 0; kappa <= kappa_max; ++kappa)
                pred[kappa] += tail_prob(np, kappa) / R;
            for (int kappa = 0; kappa <= kappa_max; ++kappa) {
                int over = 0;
                for (int c : rep.counts) over += c > kappa ? 1 : 0;
                obs[kappa] += static_cast<double>(over) / pt.features / R;
            }
        }
        for (int kappa = 0; kappa <= kappa_max; ++kappa)
            report.rows.push_back({pt, kappa, pred[kappa], obs[kappa], R});
    }
    return report;
}

void write_calibration_csv(const CalibrationReport& report, std::ostream& out) {
    out << report.preamble << '\n'
        << "samples,features,relevant,rho,trees,subset_size,kappa,"
           "predicted_tail,observed_exceed,repetitions\n";
    for (const CalibrationRow& row : report.rows) {
        write_point_fields(out, row.point);
        out << ',' << row.kappa << ',' << fmt_g(row.predicted_tail) << ','
            << fmt_g(row.observed_exceed) << ',' << row.repetitions << '\n';
    }
}

std::string calibration_csv(const CalibrationReport& report) {
    std::ostringstream out;
    write_calibration_csv(report, out);
    return out.str();
}

}  // namespace sfrf
