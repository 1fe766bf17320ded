#pragma once

// Scenario artifacts: CSV tables (17 significant digits), gnuplot .dat twins, summary.json and a
// manifest written last through a rename.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "curvlab/config.hpp"
#include "json.hpp"

namespace curvlab {

inline constexpr const char* kVersion = "curvlab 1.0.0";
inline constexpr int kArtifactSchema = 1;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    Table() = default;
    Table(std::string n, std::vector<std::string> c) : name(std::move(n)), columns(std::move(c)) {}

    void add(std::vector<double> row) {
        if (row.size() != columns.size())
            throw std::logic_error("table " + name + ": row has " + std::to_string(row.size()) + " values for " +
                                   std::to_string(columns.size()) + " columns");
        rows.push_back(std::move(row));
    }

    std::string csv() const {
        std::string s;
        for (std::size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
        s += "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + format_number(r[i]);
            s += "\n";
        }
        return s;
    }

    std::string dat() const {
        std::string s = "#";
        for (const auto& c : columns) s += " " + c;
        s += "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) s += (i ? " " : "") + format_number(r[i]);
            s += "\n";
        }
        return s;
    }
};

struct Criterion {
    std::string id;
    std::string what;
    bool pass = false;
    std::string detail;
    double time_limit = 0.0;  // seconds; 0 means none
};

struct ScenarioResult {
    std::vector<Table> tables;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<Criterion> criteria;
    std::string error;  // set when the run aborted

    bool passed() const {
        if (!error.empty()) return false;
        for (const auto& c : criteria)
            if (!c.pass) return false;
        return true;
    }
};

struct RunManifest {
    std::string scenario;
    std::string config_hash;
    std::vector<std::string> artifacts;
    std::vector<Criterion> criteria;
    double run_seconds = 0.0;
    double write_seconds = 0.0;
    bool passed = false;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["version"] = kVersion;
        j["schema"] = kArtifactSchema;
        j["scenario"] = scenario;
        j["config_hash"] = config_hash;
        j["artifacts"] = artifacts;
        j["criteria"] = nlohmann::json::array();
        for (const auto& c : criteria)
            j["criteria"].push_back({{"id", c.id}, {"what", c.what}, {"pass", c.pass}, {"detail", c.detail}});
        j["wall_seconds"] = {{"run", run_seconds}, {"write", write_seconds}};
        j["passed"] = passed;
        return j;
    }
};

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace detail

/// Writes every table and the summary, then the manifest via a temporary file and rename.
inline void write_artifacts(const std::filesystem::path& dir, const ScenarioResult& r, RunManifest& m) {
    auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(dir);
    for (const auto& t : r.tables) {
        detail::write_file(dir / (t.name + ".csv"), t.csv());
        detail::write_file(dir / (t.name + ".dat"), t.dat());
        m.artifacts.push_back(t.name + ".csv");
        m.artifacts.push_back(t.name + ".dat");
    }
    nlohmann::json s = r.summary;
    s["scenario"] = m.scenario;
    s["schema"] = kArtifactSchema;
    if (!r.error.empty()) s["error"] = r.error;
    detail::write_file(dir / "summary.json", s.dump(2) + "\n");
    m.artifacts.push_back("summary.json");
    m.write_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto tmp = dir / "manifest.json.tmp";
    detail::write_file(tmp, m.to_json().dump(2) + "\n");
    std::filesystem::rename(tmp, dir / "manifest.json");
}

}  // namespace curvlab
