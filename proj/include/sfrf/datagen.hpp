#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sfrf/dataset.hpp"

namespace sfrf {

struct GeneratedData {
    Dataset data;
    std::vector<int> relevant;  // ground-truth relevant feature indices, sorted
};

// Independent-feature generator. Labels are balanced (floor(S/2) ones);
// irrelevant features are N(0, sigma^2) regardless of the label, relevant
// ones get a class-1 mean shift of 2*rho*sigma/sqrt(1-rho^2), which makes the
// feature-label Pearson correlation equal rho.
struct IndepGenConfig {
    int sample_count = 0;   // S
    int feature_count = 0;  // F
    int relevant_count = 0; // N, placed at the highest feature indices
    double rho = 0.0;       // in [0, 1)
    double sigma = 5.0;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

GeneratedData gen_independent(const IndepGenConfig& config);

// Low-rank Gaussian summary of a source matrix (features x observations):
// x ~ mean + factor * v with v ~ N(0, I/M) reproduces the empirical feature
// covariance of the source exactly.
struct LatentModel {
    Eigen::VectorXd mean;      // per-feature mean of the source columns
    Eigen::MatrixXd factor;    // U * diag(singular values) of the demeaned source
    Eigen::VectorXd diag_cov;  // empirical per-feature variance
    int source_columns = 0;    // M
};

// Thin SVD fit. Requires at least two source columns and finite entries.
LatentModel fit_latent_model(const Eigen::MatrixXd& source);

// Subset of features forming the signal region, as a binary mask.
struct Region {
    std::vector<std::uint8_t> mask;  // one flag per feature

    int popcount() const;
    std::vector<int> indices() const;  // sorted indices of set bits
};

// Samples from the latent model, then shifts class-1 samples inside the
// region by -2*rho*sqrt(diag_cov)/sqrt(1-rho^2) so the in-region feature-label
// correlation has magnitude rho while the between-feature correlation of the
// source is preserved.
GeneratedData gen_correlated(const LatentModel& model, const Region& region,
                             double rho, int sample_count,
                             std::uint64_t rng_seed);

// Spatially smooth stand-in source: each column is white noise on a
// grid_size^2 lattice, circularly convolved with a separable Gaussian kernel
// (unit-L2 so the smoothed field keeps unit variance), scaled by 0.4 and added
// to a fixed smooth mean surface. Features are the lattice cells, row-major.
Eigen::MatrixXd make_synthetic_source(int grid_size, double smoothness,
                                      int columns, std::uint64_t rng_seed);

// Roughly square block of n cells at the center of the lattice.
Region contiguous_patch_region(int grid_size, int n);

// Applies a seeded random permutation to the feature columns in place,
// remapping the relevant indices to match. Returns the permutation
// (new column j held old column perm[j]).
std::vector<int> shuffle_dataset_columns(Dataset& data,
                                         std::vector<int>& relevant,
                                         std::uint64_t rng_seed);

}  // namespace sfrf
