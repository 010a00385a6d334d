#include "sfrf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sfrf {

void Dataset::validate() const {
    if (sample_count < 0 || feature_count < 0)
        throw std::invalid_argument("dataset: negative shape");
    if (labels.size() != static_cast<std::size_t>(sample_count))
        throw std::invalid_argument("dataset: label count does not match sample count");
    if (values.size() != static_cast<std::size_t>(sample_count) * feature_count)
        throw std::invalid_argument("dataset: value buffer does not match shape");
    for (int y : labels)
        if (y != 0 && y != 1)
            throw std::invalid_argument("dataset: labels must be 0 or 1");
    for (double v : values)
        if (!std::isfinite(v))
            throw std::invalid_argument("dataset: non-finite feature value");
}

Dataset make_dataset(int sample_count, int feature_count) {
    if (sample_count < 0 || feature_count < 0)
        throw std::invalid_argument("dataset: negative shape");
    Dataset d;
    d.sample_count = sample_count;
    d.feature_count = feature_count;
    d.values.assign(static_cast<std::size_t>(sample_count) * feature_count, 0.0);
    d.labels.assign(sample_count, 0);
    return d;
}

namespace {

[[noreturn]] void fail_at(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

double parse_field(const std::string& field, const std::string& path, int line) {
    const char* begin = field.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    while (end && *end == ' ') ++end;
    if (end == begin || (end && *end != '\0'))
        fail_at(path, line, "cannot parse number '" + field + "'");
    return v;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    int width = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (has_header && rows.empty() && width < 0) {
            width = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.push_back(parse_field(field, path, line_no));
        if (line.back() == ',') row.push_back(parse_field("", path, line_no));
        if (row.size() < 2) fail_at(path, line_no, "need a label and at least one feature");
        if (width < 0) width = static_cast<int>(row.size());
        if (static_cast<int>(row.size()) != width)
            fail_at(path, line_no, "row has " + std::to_string(row.size()) +
                                       " fields, expected " + std::to_string(width));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");

    Dataset d = make_dataset(static_cast<int>(rows.size()), width - 1);
    for (int s = 0; s < d.sample_count; ++s) {
        double label = rows[s][0];
        if (label != 0.0 && label != 1.0)
            fail_at(path, s + 1, "label must be 0 or 1");
        d.labels[s] = static_cast<int>(label);
        for (int f = 0; f < d.feature_count; ++f) d.at(s, f) = rows[s][f + 1];
    }
    d.validate();
    return d;
}

void write_dataset_csv(const Dataset& data, const std::string& path,
                       bool with_header) {
    data.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    if (with_header) {
        out << "label";
        for (int f = 0; f < data.feature_count; ++f) out << ",f" << f;
        out << '\n';
    }
    char buf[32];
    for (int s = 0; s < data.sample_count; ++s) {
        out << data.labels[s];
        for (int f = 0; f < data.feature_count; ++f) {
            std::snprintf(buf, sizeof buf, "%.17g", data.at(s, f));
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace sfrf
