#include "abstain/io/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace abstain {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& cell, int row, const std::string& column) {
    char* end = nullptr;
    const std::string trimmed = strip(cell);
    const double v = std::strtod(trimmed.c_str(), &end);
    if (trimmed.empty() || end != trimmed.c_str() + trimmed.size())
        throw std::runtime_error("load_csv: non-numeric value '" + cell + "' in column '" +
                                 column + "' at data row " + std::to_string(row));
    if (std::isnan(v))
        throw std::runtime_error("load_csv: NaN value in column '" + column + "' at data row " +
                                 std::to_string(row));
    return v;
}

}  // namespace

TabularDataset load_csv(const std::string& path, const std::string& label_column,
                        const std::optional<std::vector<std::string>>& expected_labels) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: missing header row");
    const auto header = split_line(line);
    int label_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (strip(header[i]) == label_column) label_idx = static_cast<int>(i);
    if (label_idx < 0)
        throw std::runtime_error("load_csv: label column '" + label_column + "' not found");

    std::vector<std::vector<double>> rows;
    std::vector<std::string> raw_labels;
    int rownum = 0;
    while (std::getline(in, line)) {
        ++rownum;
        if (strip(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("load_csv: row " + std::to_string(rownum) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        std::vector<double> feats;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (static_cast<int>(i) == label_idx) {
                raw_labels.push_back(strip(cells[i]));
            } else {
                feats.push_back(parse_number(cells[i], rownum, strip(header[i])));
            }
        }
        rows.push_back(std::move(feats));
    }
    if (rows.empty()) throw std::runtime_error("load_csv: no data rows");

    std::map<std::string, int> mapping;  // sorted order gives stable class ids
    if (expected_labels) {
        for (std::size_t i = 0; i < expected_labels->size(); ++i)
            mapping[(*expected_labels)[i]] = static_cast<int>(i) + 1;
        for (std::size_t i = 0; i < raw_labels.size(); ++i)
            if (!mapping.count(raw_labels[i]))
                throw std::runtime_error("load_csv: label '" + raw_labels[i] +
                                         "' at data row " + std::to_string(i + 1) +
                                         " is not in the recorded mapping");
    } else {
        for (const auto& l : raw_labels) mapping.emplace(l, 0);
        int next = 1;
        for (auto& [name, id] : mapping) id = next++;
        if (mapping.size() < 2) throw std::runtime_error("load_csv: need at least 2 classes");
    }

    TabularDataset data;
    data.m = static_cast<int>(rows.size());
    data.d = static_cast<int>(rows.front().size());
    if (data.d < 1) throw std::runtime_error("load_csv: no feature columns");
    data.n = static_cast<int>(mapping.size());
    data.label_names.resize(mapping.size());
    for (const auto& [name, id] : mapping)
        data.label_names[static_cast<std::size_t>(id - 1)] = name;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<int>(rows[r].size()) != data.d)
            throw std::runtime_error("load_csv: inconsistent column count at data row " +
                                     std::to_string(r + 1));
        data.features.insert(data.features.end(), rows[r].begin(), rows[r].end());
        data.labels.push_back(mapping.at(raw_labels[r]));
    }
    data.validate();
    return data;
}

void save_csv(const std::string& path, const TabularDataset& data,
              const std::string& label_column) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot open " + path);
    for (int j = 0; j < data.d; ++j) out << "f" << j + 1 << ",";
    out << label_column << "\n";
    out.precision(17);
    for (int i = 0; i < data.m; ++i) {
        for (int j = 0; j < data.d; ++j) out << data.row(i)[j] << ",";
        const int y = data.labels[static_cast<std::size_t>(i)];
        if (!data.label_names.empty())
            out << data.label_names[static_cast<std::size_t>(y - 1)] << "\n";
        else
            out << y << "\n";
    }
    if (!out) throw std::runtime_error("save_csv: write failed for " + path);
}

}  // namespace abstain
