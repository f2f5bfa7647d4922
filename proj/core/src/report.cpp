#include "ncz/report.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ncz {

const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::measured: return "measured";
    }
    return "?";
}

int ExperimentResult::failures() const {
    int n = 0;
    for (const auto& c : checks)
        if (c.status == CheckStatus::fail) ++n;
    return n;
}

std::string report_json(const ExperimentResult& r) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["version"] = r.version;
    j["experiment"] = r.config.experiment;
    j["config"] = emit_config(r.config);
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const auto& c : r.checks) {
        nlohmann::ordered_json jc;
        jc["name"] = c.name;
        jc["anchor"] = c.anchor;
        jc["value"] = c.value;
        jc["bound"] = c.bound;
        jc["status"] = to_string(c.status);
        if (!c.note.empty()) jc["note"] = c.note;
        checks.push_back(std::move(jc));
    }
    j["checks"] = std::move(checks);
    j["failures"] = r.failures();
    return j.dump(2) + "\n";
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

std::string report_csv(const ExperimentResult& r) {
    std::string out = "name,anchor,value,bound,status,note\n";
    for (const auto& c : r.checks) {
        out += csv_escape(c.name) + "," + csv_escape(c.anchor) + "," + num(c.value) + "," +
               num(c.bound) + "," + to_string(c.status) + "," + csv_escape(c.note) + "\n";
    }
    return out;
}

std::string report_summary(const ExperimentResult& r) {
    std::ostringstream os;
    os << "experiment " << r.config.experiment << "  (" << r.version << ", seed " << r.config.seed
       << ", samples " << r.config.samples << ")\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-44s %-10s %14s %14s\n", "check", "status", "value",
                  "bound");
    os << line;
    for (const auto& c : r.checks) {
        std::snprintf(line, sizeof line, "%-44s %-10s %14.6g %14.6g\n", c.name.c_str(),
                      to_string(c.status), c.value, c.bound);
        os << line;
    }
    std::snprintf(line, sizeof line, "%d checks, %d failures, %.0f ms\n",
                  static_cast<int>(r.checks.size()), r.failures(), r.elapsed_ms);
    os << line;
    return os.str();
}

void emit_report(const ExperimentResult& r, const std::string& format, const std::string& path) {
    std::string body;
    if (format == "json") body = report_json(r);
    else if (format == "csv") body = report_csv(r);
    else if (format == "summary") body = report_summary(r);
    else throw std::invalid_argument("emit_report: unknown format " + format);

    if (path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("emit_report: cannot write " + path);
    os << body;
}

}  // namespace ncz
