#include "abstain/io/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace abstain {

namespace {
constexpr int kReportSchemaVersion = 1;
}

nlohmann::json to_json(const BoundCheckReport& r) {
    nlohmann::json violations = nlohmann::json::array();
    for (const auto& v : r.violations)
        violations.push_back({{"context", v.context}, {"lhs", v.lhs}, {"rhs", v.rhs}});
    return {{"name", r.name},
            {"trials", r.trials},
            {"violation_count", r.violation_count},
            {"violations", violations},
            {"max_slack", r.max_slack},
            {"min_slack", r.min_slack},
            {"oracle_failures", r.oracle_failures},
            {"passed", r.passed}};
}

nlohmann::json to_json(const GapReport& r) {
    return {{"mu", r.mu},
            {"c", r.c},
            {"closed_form_V", r.closed_form_v},
            {"numeric_V", r.numeric_v},
            {"gap_estimate", r.gap_estimate},
            {"optimal_softmax", {r.optimal_softmax.first, r.optimal_softmax.second}},
            {"oracle_residual", r.oracle_residual},
            {"converged", r.converged}};
}

nlohmann::json to_json(const Metrics& m) {
    nlohmann::json j = {{"abstention_loss", m.abstention_loss},
                        {"rejection_rate", m.rejection_rate},
                        {"mean_surrogate", m.mean_surrogate},
                        {"count", m.count}};
    if (m.accepted_accuracy)
        j["accepted_accuracy"] = *m.accepted_accuracy;
    else
        j["accepted_accuracy"] = nullptr;
    return j;
}

nlohmann::json to_json(const CoverageRecord& r) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : r.per_trial)
        trials.push_back({{"excess", t.excess},
                          {"bound", t.bound},
                          {"covered", t.covered},
                          {"erm_flagged", t.erm_flagged}});
    return {{"trials", r.trials},
            {"coverage", r.coverage},
            {"threshold", r.threshold},
            {"passed", r.passed},
            {"m", r.m},
            {"delta", r.delta},
            {"best_in_class_abstention", r.best_in_class_abstention},
            {"best_in_class_surrogate", r.best_in_class_surrogate},
            {"M_surrogate", r.m_surrogate},
            {"M_abstention", r.m_abstention},
            {"B", r.B},
            {"per_trial", trials},
            {"reference_seeds", r.reference_seeds}};
}

nlohmann::json to_json(const CalibrationCurve& c) {
    nlohmann::json bins = nlohmann::json::array();
    for (std::size_t i = 0; i < c.max_target.size(); ++i) {
        nlohmann::json bin = {{"left", c.bin_edges[i]}, {"right", c.bin_edges[i + 1]}};
        if (c.max_target[i])
            bin["max_target_gap"] = *c.max_target[i];
        else
            bin["max_target_gap"] = nullptr;
        bins.push_back(bin);
    }
    return {{"bins", bins}, {"fitted_sqrt_k", c.fitted_sqrt_k}, {"samples", c.samples}};
}

void CsvTable::add_row(const std::vector<std::string>& row) {
    if (row.size() != header.size())
        throw std::invalid_argument("CsvTable: row width does not match header");
    rows.push_back(row);
}

std::string CsvTable::num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string csv_sidecar_path(const std::string& json_path) {
    const auto slash = json_path.find_last_of('/');
    const auto dot = json_path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return json_path + ".csv";
    return json_path.substr(0, dot) + ".csv";
}

void write_report(const std::string& path, const std::string& kind, nlohmann::json body,
                  const CsvTable& table) {
    body["schema_version"] = kReportSchemaVersion;
    body["kind"] = kind;
    {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("write_report: cannot open " + path);
        out << body.dump(2) << "\n";
        if (!out) throw std::runtime_error("write_report: write failed for " + path);
    }
    CsvTable flat = table;
    if (flat.header.empty()) {
        std::vector<std::string> row;
        for (const auto& [key, value] : body.items()) {
            if (value.is_number() || value.is_boolean() || value.is_string()) {
                flat.header.push_back(key);
                row.push_back(value.is_string() ? value.get<std::string>() : value.dump());
            }
        }
        flat.rows.push_back(row);
    }
    std::ofstream csv(csv_sidecar_path(path));
    if (!csv) throw std::runtime_error("write_report: cannot open " + csv_sidecar_path(path));
    for (std::size_t i = 0; i < flat.header.size(); ++i)
        csv << (i ? "," : "") << flat.header[i];
    csv << "\n";
    for (const auto& row : flat.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) csv << (i ? "," : "") << row[i];
        csv << "\n";
    }
    if (!csv)
        throw std::runtime_error("write_report: write failed for " + csv_sidecar_path(path));
}

nlohmann::json read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_report: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("read_report: malformed file " + path + ": " + e.what());
    }
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != kReportSchemaVersion)
        throw std::runtime_error("read_report: unsupported schema version in " + path);
    return j;
}

}  // namespace abstain
