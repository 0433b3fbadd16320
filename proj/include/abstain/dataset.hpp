#pragma once

#include <string>
#include <vector>

namespace abstain {

/// Labeled tabular sample. Features are row-major m×d; labels are in
/// 1..n. Optional per-example weights let a finite problem be trained
/// on exactly (atom × label expansion) instead of by sampling.
struct TabularDataset {
    std::vector<double> features;  // m * d, row-major
    std::vector<int> labels;       // m entries in 1..n
    std::vector<double> weights;   // empty = uniform
    int m = 0;
    int d = 0;
    int n = 0;
    std::vector<std::string> label_names;  // original label of class i+1, when loaded

    const double* row(int i) const { return features.data() + static_cast<std::size_t>(i) * d; }
    double weight(int i) const {
        return weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
    }
    double total_weight() const;
    void validate() const;  // throws on inconsistent shape, bad labels, non-finite values
};

}  // namespace abstain
