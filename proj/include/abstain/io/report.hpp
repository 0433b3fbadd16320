#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "abstain/bound_checks.hpp"
#include "abstain/oracles.hpp"
#include "abstain/rademacher.hpp"
#include "abstain/train.hpp"

namespace abstain {

nlohmann::json to_json(const BoundCheckReport& r);
nlohmann::json to_json(const GapReport& r);
nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const CoverageRecord& r);
nlohmann::json to_json(const CalibrationCurve& c);

/// Plot-ready sidecar table: one metric per column, rows aligned.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(const std::vector<std::string>& row);
    static std::string num(double v);
};

/// Writes `body` as JSON (a schema_version and kind field are added)
/// plus a CSV sidecar next to it (same stem, .csv). When no table is
/// given, the top-level scalar fields become a single CSV row.
void write_report(const std::string& path, const std::string& kind, nlohmann::json body,
                  const CsvTable& table = {});

/// Reads a report back and validates its schema version.
nlohmann::json read_report(const std::string& path);

std::string csv_sidecar_path(const std::string& json_path);

}  // namespace abstain
