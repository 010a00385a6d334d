#pragma once

#include <string>
#include <vector>

namespace sfrf {

// Binary-labelled tabular data. Feature values are stored column-major
// (values[f * sample_count + s]) since tree growth scans one feature at a
// time over many samples.
struct Dataset {
    int sample_count = 0;
    int feature_count = 0;
    std::vector<double> values;
    std::vector<int> labels;  // one 0/1 label per sample

    double at(int sample, int feature) const {
        return values[static_cast<std::size_t>(feature) * sample_count + sample];
    }
    double& at(int sample, int feature) {
        return values[static_cast<std::size_t>(feature) * sample_count + sample];
    }

    // Throws std::invalid_argument on shape mismatch, non-binary labels, or
    // non-finite values.
    void validate() const;
};

Dataset make_dataset(int sample_count, int feature_count);

// CSV layout: one row per sample, label in the first column, features after.
Dataset read_dataset_csv(const std::string& path, bool has_header);
void write_dataset_csv(const Dataset& data, const std::string& path,
                       bool with_header);

}  // namespace sfrf
