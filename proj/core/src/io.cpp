#include "mfcavi/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mfcavi {

using nlohmann::json;

std::string format_double(double value) {
    std::array<char, 64> buffer;
    const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
    if (result.ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buffer.data(), result.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = UINT64_C(1469598103934665603);
    for (const char c : bytes) {
        hash ^= static_cast<unsigned char>(c);
        hash *= UINT64_C(1099511628211);
    }
    return hash;
}

std::string fnv1a_hex(std::string_view bytes) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(bytes);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

std::string trajectory_csv(const std::vector<Trajectory>& trajectories) {
    std::string out(kTrajectoryHeader);
    out += "\n";
    for (std::size_t trial = 0; trial < trajectories.size(); ++trial) {
        for (const TrajectoryRecord& r : trajectories[trial].records) {
            out += std::to_string(trial);
            out += ",";
            out += std::to_string(r.n);
            out += ",";
            out += std::to_string(r.k_n);
            out += ",";
            out += format_double(r.gap);
            out += ",";
            out += format_double(r.w2l_to_ref);
            out += ",";
            out += format_double(r.second_moment);
            out += ",";
            out += format_double(r.running_radius);
            out += "\n";
        }
    }
    return out;
}

std::optional<int> CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return std::nullopt;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw std::runtime_error("parse_csv: missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream header(line);
    std::string field;
    while (std::getline(header, field, ',')) table.columns.push_back(field);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(table.columns.size());
        std::istringstream cells(line);
        while (std::getline(cells, field, ',')) {
            double value = 0.0;
            const auto result =
                std::from_chars(field.data(), field.data() + field.size(), value);
            if (result.ec != std::errc() || result.ptr != field.data() + field.size())
                throw std::runtime_error("parse_csv: non-numeric cell '" + field + "' at line " +
                                         std::to_string(line_no));
            row.push_back(value);
        }
        if (row.size() != table.columns.size())
            throw std::runtime_error("parse_csv: line " + std::to_string(line_no) + " has " +
                                     std::to_string(row.size()) + " cells, expected " +
                                     std::to_string(table.columns.size()));
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

json analysis_to_json(const ConvexityReport& report) {
    json a;
    a["L"] = report.smoothness;
    a["lambda_star"] = report.lambda_star;
    a["lambda_star_certified"] = report.lambda_star_certified;
    a["exact"] = report.exact;
    if (report.lambda_classical) a["lambda_classical"] = *report.lambda_classical;
    if (report.smoothness_classical) a["L_classical"] = *report.smoothness_classical;
    if (report.lambda_dq) a["lambda_dq"] = *report.lambda_dq;
    return a;
}

ConvexityReport analysis_from_json(const json& a) {
    ConvexityReport report;
    report.smoothness = a.at("L").get<std::vector<double>>();
    report.lambda_star = a.at("lambda_star").get<double>();
    report.lambda_star_certified = a.at("lambda_star_certified").get<bool>();
    report.exact = a.at("exact").get<bool>();
    if (a.contains("lambda_classical")) report.lambda_classical = a["lambda_classical"].get<double>();
    if (a.contains("L_classical")) report.smoothness_classical = a["L_classical"].get<double>();
    if (a.contains("lambda_dq")) report.lambda_dq = a["lambda_dq"].get<double>();
    return report;
}

}  // namespace

std::string summary_to_json(const RunSummary& summary) {
    json j;
    j["engine"] = summary.engine;
    j["block_count"] = summary.block_count;
    j["trials"] = summary.trials;
    j["updates"] = summary.updates;
    j["gap0"] = summary.gap0;
    j["lambda_star"] = summary.lambda_star;
    j["lambda_star_certified"] = summary.lambda_star_certified;
    j["lambda_star_source"] = summary.lambda_star_source;
    j["envelope_mode"] = summary.envelope_mode;
    j["envelope_violations"] = summary.envelope_violations;
    j["analysis"] = analysis_to_json(summary.analysis);
    json rows = json::array();
    for (std::size_t i = 0; i < summary.ensemble.rows.size(); ++i) {
        const SummaryRow& row = summary.ensemble.rows[i];
        json r;
        r["n"] = row.n;
        r["mean_gap"] = row.mean_gap;
        r["stderr"] = row.stderr_gap;
        if (i < summary.envelope.size()) r["envelope"] = summary.envelope[i];
        rows.push_back(std::move(r));
    }
    j["per_update"] = std::move(rows);
    return j.dump(2);
}

RunSummary summary_from_json(const std::string& text) {
    const json j = json::parse(text);
    RunSummary s;
    s.engine = j.at("engine").get<std::string>();
    s.block_count = j.at("block_count").get<int>();
    s.trials = j.at("trials").get<int>();
    s.updates = j.at("updates").get<int>();
    s.gap0 = j.at("gap0").get<double>();
    s.lambda_star = j.at("lambda_star").get<double>();
    s.lambda_star_certified = j.at("lambda_star_certified").get<bool>();
    s.lambda_star_source = j.at("lambda_star_source").get<std::string>();
    s.envelope_mode = j.at("envelope_mode").get<std::string>();
    s.envelope_violations = j.at("envelope_violations").get<long>();
    s.analysis = analysis_from_json(j.at("analysis"));
    s.ensemble.trials = s.trials;
    s.ensemble.gap0 = s.gap0;
    for (const json& r : j.at("per_update")) {
        s.ensemble.rows.push_back(SummaryRow{r.at("n").get<int>(), r.at("mean_gap").get<double>(),
                                             r.at("stderr").get<double>()});
        if (r.contains("envelope")) s.envelope.push_back(r["envelope"].get<double>());
    }
    return s;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace mfcavi
