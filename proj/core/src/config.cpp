#include "ncz/config.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace ncz {

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "cuculescu_bounds",        "cz_identities",
        "lacunary_identities",     "perfect_dyadic_annihilation",
        "haar_shift_annihilation", "shift_l2",
        "dilation_lemma",          "atom_bounds",
        "transform_paraproduct",   "bmo_estimates",
        "gundy",                   "leftright_cz",
        "truncation_probe",        "weak_type_scan",
    };
    return names;
}

namespace {

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "experiment",     "grid.n",          "grid.K",          "grid.d",
        "grid.pad",       "lacunary.s_min",  "lacunary.s_max",  "lambda.ell_min",
        "lambda.ell_max", "ensemble.samples", "ensemble.seed",  "ensemble.spikes",
        "ensemble.spike_scale", "operator.kind", "operator.side", "operator.file",
        "operator.r",     "operator.s",      "probe.ceiling",   "probe.ledger",
        "out",            "format",          "jobs",
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw std::invalid_argument("config: value for " + key + " is not an integer: " + v);
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw std::invalid_argument("config: value for " + key + " is not a number: " + v);
    }
}

}  // namespace

Config parse_config(const std::string& text) {
    Config cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not key=value: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end()) {
            std::string msg = "config: unknown key '" + key + "'; known keys:";
            for (const auto& k : known_keys()) msg += " " + k;
            throw std::invalid_argument(msg);
        }

        if (key == "experiment") cfg.experiment = val;
        else if (key == "grid.n") cfg.n = to_int(key, val);
        else if (key == "grid.K") cfg.depth = to_int(key, val);
        else if (key == "grid.d") cfg.d = to_int(key, val);
        else if (key == "grid.pad") cfg.pad = to_int(key, val);
        else if (key == "lacunary.s_min") cfg.s_min = to_int(key, val);
        else if (key == "lacunary.s_max") {
            if (val == "auto") {
                cfg.s_max_auto = true;
                cfg.s_max = 0;
            } else {
                cfg.s_max_auto = false;
                cfg.s_max = to_int(key, val);
            }
        } else if (key == "lambda.ell_min") cfg.ell_min = to_int(key, val);
        else if (key == "lambda.ell_max") cfg.ell_max = to_int(key, val);
        else if (key == "ensemble.samples") cfg.samples = to_int(key, val);
        else if (key == "ensemble.seed") cfg.seed = static_cast<uint64_t>(std::stoull(val));
        else if (key == "ensemble.spikes") cfg.spikes = to_int(key, val);
        else if (key == "ensemble.spike_scale") cfg.spike_scale = to_double(key, val);
        else if (key == "operator.kind") cfg.op_kind = val;
        else if (key == "operator.side") cfg.op_side = val;
        else if (key == "operator.file") cfg.op_file = val;
        else if (key == "operator.r") cfg.shift_r = to_int(key, val);
        else if (key == "operator.s") cfg.shift_s = to_int(key, val);
        else if (key == "probe.ceiling") cfg.ceiling = to_double(key, val);
        else if (key == "probe.ledger") cfg.ledger_path = val;
        else if (key == "out") cfg.out = val;
        else if (key == "format") cfg.format = val;
        else if (key == "jobs") cfg.jobs = to_int(key, val);
    }
    validate_config(cfg);
    return cfg;
}

void validate_config(const Config& cfg) {
    const auto& names = experiment_names();
    if (!cfg.experiment.empty() &&
        std::find(names.begin(), names.end(), cfg.experiment) == names.end()) {
        std::string msg = "config: unknown experiment '" + cfg.experiment + "'; valid names:";
        for (const auto& n : names) msg += " " + n;
        throw std::invalid_argument(msg);
    }
    if (cfg.n != 1 && cfg.n != 2) throw std::invalid_argument("config: grid.n must be 1 or 2");
    if (cfg.depth < 1 || cfg.depth > 20 / cfg.n)
        throw std::invalid_argument("config: grid.K out of range");
    if (cfg.d < 1 || cfg.d > 16) throw std::invalid_argument("config: grid.d must be in [1,16]");
    if (cfg.pad < 0 || cfg.pad > cfg.depth)
        throw std::invalid_argument("config: grid.pad must be in [0, grid.K]");
    if (!cfg.s_max_auto && cfg.s_min >= cfg.s_max)
        throw std::invalid_argument("config: need lacunary.s_min < lacunary.s_max");
    if (cfg.ell_min > cfg.ell_max)
        throw std::invalid_argument("config: need lambda.ell_min <= lambda.ell_max");
    if (cfg.samples < 1) throw std::invalid_argument("config: ensemble.samples must be >= 1");
    if (cfg.jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
    if (cfg.format != "json" && cfg.format != "csv" && cfg.format != "summary")
        throw std::invalid_argument("config: format must be json, csv or summary");
    if (cfg.ceiling <= 0.0) throw std::invalid_argument("config: probe.ceiling must be positive");
}

std::string emit_config(const Config& cfg) {
    std::ostringstream os;
    os << "experiment = " << cfg.experiment << "\n";
    os << "grid.n = " << cfg.n << "\n";
    os << "grid.K = " << cfg.depth << "\n";
    os << "grid.d = " << cfg.d << "\n";
    os << "grid.pad = " << cfg.pad << "\n";
    os << "lacunary.s_min = " << cfg.s_min << "\n";
    if (cfg.s_max_auto)
        os << "lacunary.s_max = auto\n";
    else
        os << "lacunary.s_max = " << cfg.s_max << "\n";
    os << "lambda.ell_min = " << cfg.ell_min << "\n";
    os << "lambda.ell_max = " << cfg.ell_max << "\n";
    os << "ensemble.samples = " << cfg.samples << "\n";
    os << "ensemble.seed = " << cfg.seed << "\n";
    os << "ensemble.spikes = " << cfg.spikes << "\n";
    os << "ensemble.spike_scale = " << cfg.spike_scale << "\n";
    os << "operator.kind = " << cfg.op_kind << "\n";
    os << "operator.side = " << cfg.op_side << "\n";
    if (!cfg.op_file.empty()) os << "operator.file = " << cfg.op_file << "\n";
    os << "operator.r = " << cfg.shift_r << "\n";
    os << "operator.s = " << cfg.shift_s << "\n";
    os << "probe.ceiling = " << cfg.ceiling << "\n";
    if (!cfg.ledger_path.empty()) os << "probe.ledger = " << cfg.ledger_path << "\n";
    if (!cfg.out.empty()) os << "out = " << cfg.out << "\n";
    os << "format = " << cfg.format << "\n";
    os << "jobs = " << cfg.jobs << "\n";
    return os.str();
}

}  // namespace ncz
