#pragma once

#include <map>
#include <optional>
#include <string>

#include "abstain/dataset.hpp"

namespace abstain {

/// Labels are remapped to 1..n in sorted order of the distinct original
/// strings; the mapping is recorded in TabularDataset::label_names.
/// When an expected mapping is supplied (evaluating against a trained
/// model), an unseen label is an error rather than a new class.
TabularDataset load_csv(const std::string& path, const std::string& label_column,
                        const std::optional<std::vector<std::string>>& expected_labels = {});

void save_csv(const std::string& path, const TabularDataset& data,
              const std::string& label_column = "y");

}  // namespace abstain
