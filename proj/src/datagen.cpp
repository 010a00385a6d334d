#include "sfrf/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/SVD>

#include "sfrf/rng.hpp"

namespace sfrf {

namespace {

// floor(S/2) ones, placement shuffled.
std::vector<int> balanced_labels(int sample_count, std::mt19937_64& rng) {
    std::vector<int> labels(sample_count, 0);
    std::fill(labels.begin(), labels.begin() + sample_count / 2, 1);
    std::shuffle(labels.begin(), labels.end(), rng);
    return labels;
}

double effect_scale(double rho) { return 2.0 * rho / std::sqrt(1.0 - rho * rho); }

}  // namespace

void IndepGenConfig::validate() const {
    if (sample_count < 1) throw std::invalid_argument("gen: need at least one sample");
    if (feature_count < 1) throw std::invalid_argument("gen: need at least one feature");
    if (relevant_count < 0 || relevant_count > feature_count)
        throw std::invalid_argument("gen: relevant count must be in [0, F]");
    if (!(rho >= 0.0) || rho >= 1.0)
        throw std::invalid_argument("gen: rho must be in [0, 1)");
    if (!(sigma > 0.0)) throw std::invalid_argument("gen: sigma must be positive");
}

GeneratedData gen_independent(const IndepGenConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    GeneratedData out;
    out.data = make_dataset(config.sample_count, config.feature_count);
    out.data.labels = balanced_labels(config.sample_count, rng);

    const int first_relevant = config.feature_count - config.relevant_count;
    const double shift = config.sigma * effect_scale(config.rho);
    for (int s = 0; s < config.sample_count; ++s) {
        for (int f = 0; f < config.feature_count; ++f) {
            double v = config.sigma * gauss(rng);
            if (f >= first_relevant && out.data.labels[s] == 1) v += shift;
            out.data.at(s, f) = v;
        }
    }
    for (int f = first_relevant; f < config.feature_count; ++f)
        out.relevant.push_back(f);
    return out;
}

LatentModel fit_latent_model(const Eigen::MatrixXd& source) {
    const auto rows = source.rows();
    const auto cols = source.cols();
    if (rows < 1) throw std::invalid_argument("latent model: source has no features");
    if (cols < 2)
        throw std::invalid_argument("latent model: need at least two source columns");
    if (!source.allFinite())
        throw std::invalid_argument("latent model: non-finite source entries");

    LatentModel model;
    model.source_columns = static_cast<int>(cols);
    model.mean = source.rowwise().mean();
    Eigen::MatrixXd centered = source.colwise() - model.mean;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
    model.factor = svd.matrixU() * svd.singularValues().asDiagonal();
    model.diag_cov = centered.rowwise().squaredNorm() / static_cast<double>(cols);
    return model;
}

int Region::popcount() const {
    int n = 0;
    for (auto b : mask) n += b ? 1 : 0;
    return n;
}

std::vector<int> Region::indices() const {
    std::vector<int> out;
    for (int f = 0; f < static_cast<int>(mask.size()); ++f)
        if (mask[f]) out.push_back(f);
    return out;
}

GeneratedData gen_correlated(const LatentModel& model, const Region& region,
                             double rho, int sample_count,
                             std::uint64_t rng_seed) {
    const int F = static_cast<int>(model.mean.size());
    if (model.factor.rows() != F || model.diag_cov.size() != F)
        throw std::invalid_argument("gen: latent model shapes disagree");
    if (static_cast<int>(region.mask.size()) != F)
        throw std::invalid_argument("gen: region mask does not match model");
    if (!(rho >= 0.0) || rho >= 1.0)
        throw std::invalid_argument("gen: rho must be in [0, 1)");
    if (sample_count < 1) throw std::invalid_argument("gen: need at least one sample");
    if (model.source_columns < 2)
        throw std::invalid_argument("gen: latent model missing source column count");

    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    GeneratedData out;
    out.data = make_dataset(sample_count, F);
    out.data.labels = balanced_labels(sample_count, rng);
    out.relevant = region.indices();

    const auto rank = model.factor.cols();
    const double latent_sd = 1.0 / std::sqrt(static_cast<double>(model.source_columns));
    Eigen::MatrixXd latent(rank, sample_count);
    for (int s = 0; s < sample_count; ++s)
        for (Eigen::Index r = 0; r < rank; ++r) latent(r, s) = latent_sd * gauss(rng);
    Eigen::MatrixXd samples = model.factor * latent;  // F x S, zero-mean

    // Class-1 samples move against the region's own scale; the sign makes the
    // in-region feature-label correlation -rho, leaving |corr| = rho.
    Eigen::VectorXd effect = Eigen::VectorXd::Zero(F);
    const double scale = effect_scale(rho);
    for (int f = 0; f < F; ++f)
        if (region.mask[f]) effect[f] = scale * std::sqrt(std::max(0.0, model.diag_cov[f]));

    for (int s = 0; s < sample_count; ++s) {
        const double y = out.data.labels[s];
        for (int f = 0; f < F; ++f)
            out.data.at(s, f) = samples(f, s) + model.mean[f] - y * effect[f];
    }
    return out;
}

Eigen::MatrixXd make_synthetic_source(int grid_size, double smoothness,
                                      int columns, std::uint64_t rng_seed) {
    if (grid_size < 2) throw std::invalid_argument("source: grid size must be >= 2");
    if (!(smoothness > 0.0)) throw std::invalid_argument("source: smoothness must be positive");
    if (columns < 2) throw std::invalid_argument("source: need at least two columns");

    const int g = grid_size;
    // Separable Gaussian kernel, truncated at 3 sigma (and at the grid size,
    // so circular wrap-around stays single-lap), unit L2 norm so smoothing
    // preserves the noise variance.
    int radius = std::min(g - 1, std::max(1, static_cast<int>(std::ceil(3.0 * smoothness))));
    std::vector<double> kernel(2 * radius + 1);
    double sq = 0.0;
    for (int d = -radius; d <= radius; ++d) {
        double w = std::exp(-0.5 * d * d / (smoothness * smoothness));
        kernel[d + radius] = w;
        sq += w * w;
    }
    for (double& w : kernel) w /= std::sqrt(sq);

    Eigen::VectorXd surface(g * g);
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j)
            surface[i * g + j] = 2.5 + 0.5 * std::sin(2.0 * M_PI * i / g) *
                                           std::cos(2.0 * M_PI * j / g);

    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd source(g * g, columns);
    std::vector<double> noise(g * g), pass(g * g);
    for (int m = 0; m < columns; ++m) {
        for (double& v : noise) v = gauss(rng);
        // rows then columns, circular
        for (int i = 0; i < g; ++i)
            for (int j = 0; j < g; ++j) {
                double acc = 0.0;
                for (int d = -radius; d <= radius; ++d)
                    acc += kernel[d + radius] * noise[i * g + (j + d + g) % g];
                pass[i * g + j] = acc;
            }
        for (int j = 0; j < g; ++j)
            for (int i = 0; i < g; ++i) {
                double acc = 0.0;
                for (int d = -radius; d <= radius; ++d)
                    acc += kernel[d + radius] * pass[((i + d + g) % g) * g + j];
                source(i * g + j, m) = surface[i * g + j] + 0.4 * acc;
            }
    }
    return source;
}

Region contiguous_patch_region(int grid_size, int n) {
    if (grid_size < 1) throw std::invalid_argument("region: grid size must be >= 1");
    if (n < 0 || n > grid_size * grid_size)
        throw std::invalid_argument("region: cell count must be in [0, grid^2]");
    Region region;
    region.mask.assign(static_cast<std::size_t>(grid_size) * grid_size, 0);
    if (n == 0) return region;
    int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    int row0 = (grid_size - side) / 2;
    int col0 = (grid_size - side) / 2;
    int placed = 0;
    for (int i = 0; i < side && placed < n; ++i)
        for (int j = 0; j < side && placed < n; ++j) {
            region.mask[(row0 + i) * grid_size + (col0 + j)] = 1;
            ++placed;
        }
    return region;
}

std::vector<int> shuffle_dataset_columns(Dataset& data,
                                         std::vector<int>& relevant,
                                         std::uint64_t rng_seed) {
    const int F = data.feature_count;
    std::vector<int> perm(F);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(rng_seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<double> shuffled(data.values.size());
    const std::size_t S = data.sample_count;
    for (int j = 0; j < F; ++j)
        std::copy_n(data.values.begin() + static_cast<std::size_t>(perm[j]) * S, S,
                    shuffled.begin() + static_cast<std::size_t>(j) * S);
    data.values = std::move(shuffled);

    std::vector<int> inverse(F);
    for (int j = 0; j < F; ++j) inverse[perm[j]] = j;
    for (int& f : relevant) f = inverse[f];
    std::sort(relevant.begin(), relevant.end());
    return perm;
}

}  // namespace sfrf
