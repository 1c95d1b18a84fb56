#pragma once
// Study CSV ingestion, simulation config parsing, and CSV table emission.
//
// Study CSV schema: header `id,z,w,y,x1,...,xp`; z in {0,1}; w and y empty on z = 0
// rows; comma-delimited, '.' decimal point, no quoting.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "genbound/analysis.hpp"
#include "genbound/core.hpp"
#include "genbound/error.hpp"
#include "genbound/simulation.hpp"

namespace genbound::io {

inline constexpr std::string_view kVersion = "0.1.0";

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

// Shortest round-trip is not required; 17 significant digits always round-trip.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

[[noreturn]] inline void schema_error(std::size_t line, const std::string& column, const std::string& msg) {
    throw Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ", column '" + column + "': " + msg);
}

}  // namespace detail

inline StudyData read_study_csv(std::istream& in, const OutcomeRange& range) {
    if (!(range.lo < range.hi)) throw Error(ErrorCode::InvalidData, "outcome range requires lo < hi");
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, "empty input: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);

    const auto header = split(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "z" || header[2] != "w" || header[3] != "y")
        throw Error(ErrorCode::SchemaError, "line 1: header must start with id,z,w,y");
    for (std::size_t j = 4; j < header.size(); ++j)
        if (header[j] != "x" + std::to_string(j - 3))
            detail::schema_error(1, std::string(header[j]), "expected x" + std::to_string(j - 3));
    const std::size_t p = header.size() - 4;

    std::vector<UnitRecord> units;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != header.size())
            detail::schema_error(lineno, "*", "expected " + std::to_string(header.size()) + " fields, found " +
                                                  std::to_string(f.size()));
        UnitRecord u;
        u.id = std::string(f[0]);
        if (u.id.empty()) detail::schema_error(lineno, "id", "empty id");
        if (f[1] != "0" && f[1] != "1") detail::schema_error(lineno, "z", "must be 0 or 1 (unit " + u.id + ")");
        u.z = f[1] == "1";
        if (u.z) {
            if (f[2] != "0" && f[2] != "1") detail::schema_error(lineno, "w", "must be 0 or 1 (unit " + u.id + ")");
            u.w = f[2] == "1";
            double y = 0.0;
            if (!parse_double(f[3], y)) detail::schema_error(lineno, "y", "not a number (unit " + u.id + ")");
            if (!range.contains(y))
                detail::schema_error(lineno, "y", "outside the declared outcome range (unit " + u.id + ")");
            u.y = y;
        } else {
            if (!f[2].empty()) detail::schema_error(lineno, "w", "must be empty when z = 0 (unit " + u.id + ")");
            if (!f[3].empty()) detail::schema_error(lineno, "y", "must be empty when z = 0 (unit " + u.id + ")");
        }
        u.x.resize(p);
        for (std::size_t j = 0; j < p; ++j)
            if (!parse_double(f[4 + j], u.x[j]))
                detail::schema_error(lineno, std::string(header[4 + j]), "not a number (unit " + u.id + ")");
        units.push_back(std::move(u));
    }
    if (units.empty()) throw Error(ErrorCode::SchemaError, "no data rows");
    try {
        return StudyData(std::move(units), range);
    } catch (const Error& e) {
        throw Error(ErrorCode::SchemaError, e.what());
    }
}

inline StudyData read_study_csv(const std::string& path, const OutcomeRange& range) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::SchemaError, "cannot open " + path);
    return read_study_csv(in, range);
}

inline void write_study_csv(std::ostream& out, const StudyData& data) {
    out << "id,z,w,y";
    for (std::size_t j = 0; j < data.covariate_count(); ++j) out << ",x" << j + 1;
    out << '\n';
    for (const auto& u : data.units()) {
        out << u.id << ',' << (u.z ? 1 : 0) << ',';
        if (u.z) out << (*u.w ? 1 : 0) << ',' << format_double(*u.y);
        else out << ',';
        for (double x : u.x) out << ',' << format_double(x);
        out << '\n';
    }
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct Metadata {
    std::string command;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<std::pair<std::string, std::string>> extra;
};

inline void write_metadata(std::ostream& out, const Metadata& m) {
    out << "# genbound " << kVersion << '\n';
    out << "# command: " << m.command << '\n';
    out << "# seed: " << m.seed << '\n';
    out << "# config_hash: " << m.config_hash << '\n';
    for (const auto& [k, v] : m.extra) out << "# " << k << ": " << v << '\n';
}

// A parsed CSV table with `#` metadata lines split off.
struct Table {
    std::vector<std::string> metadata;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw Error(ErrorCode::SchemaError, "no column " + std::string(name));
    }
};

inline Table read_table(std::istream& in) {
    Table t;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            t.metadata.push_back(line);
            continue;
        }
        std::vector<std::string> fields;
        for (auto f : split(line)) fields.emplace_back(f);
        if (t.header.empty()) t.header = std::move(fields);
        else t.rows.push_back(std::move(fields));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Simulation config

inline std::vector<std::vector<std::size_t>> standard_combos() { return {{0, 1}, {2, 3}, {0, 2}, {1, 3}, {0, 1, 2, 3}}; }

namespace detail {

using nlohmann::json;

[[noreturn]] inline void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

template <class T>
std::vector<T> scalar_or_list(const json& j, const char* key) {
    try {
        if (j.is_array()) return j.get<std::vector<T>>();
        return {j.get<T>()};
    } catch (const json::exception&) {
        config_error(std::string("bad value for '") + key + "'");
    }
}

inline sim::Alignment parse_alignment(const std::string& s) {
    if (s == "positive") return sim::Alignment::Positive;
    if (s == "negative") return sim::Alignment::Negative;
    config_error("alignment must be 'positive' or 'negative'");
}

inline std::vector<std::size_t> parse_combo(const json& j) {
    std::vector<std::size_t> out;
    if (!j.is_array() || j.empty()) config_error("covariate_combo entries must be non-empty arrays of 1..4");
    for (const auto& v : j) {
        if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > 4)
            config_error("covariate_combo entries must be integers in 1..4");
        out.push_back(static_cast<std::size_t>(v.get<int>() - 1));
    }
    return out;
}

}  // namespace detail

// JSON document whose keys mirror SimConfig. study, rho, delta, alignment and
// covariate_combo take a scalar or a list; lists expand into a grid. Unknown keys
// are rejected.
inline sim::SimGrid parse_sim_grid(const nlohmann::json& j) {
    using detail::config_error;
    if (!j.is_object()) config_error("config must be a JSON object");
    sim::SimGrid g;
    auto& c = g.base;
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "study") g.studies = detail::scalar_or_list<int>(v, "study");
            else if (key == "N") c.N = v.get<std::size_t>();
            else if (key == "n") c.n = v.get<std::size_t>();
            else if (key == "rho") g.rhos = detail::scalar_or_list<double>(v, "rho");
            else if (key == "delta") g.deltas = detail::scalar_or_list<double>(v, "delta");
            else if (key == "alignment") {
                g.alignments.clear();
                for (const auto& s : detail::scalar_or_list<std::string>(v, "alignment"))
                    g.alignments.push_back(detail::parse_alignment(s));
            } else if (key == "beta") c.beta = v.get<std::array<double, 3>>();
            else if (key == "gamma") c.gamma = v.get<std::array<double, 2>>();
            else if (key == "k") c.k = v.get<int>();
            else if (key == "covariate_combo") {
                g.combos.clear();
                if (v.is_string() && v.get<std::string>() == "all") g.combos = standard_combos();
                else if (v.is_array() && !v.empty() && v.front().is_array())
                    for (const auto& e : v) g.combos.push_back(detail::parse_combo(e));
                else g.combos.push_back(detail::parse_combo(v));
            } else if (key == "reps") c.reps = v.get<std::size_t>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "range_source") {
                const auto s = v.get<std::string>();
                if (s == "observed") c.range_source = RangeSource::ObservedSample;
                else if (s == "declared") c.range_source = RangeSource::Declared;
                else config_error("range_source must be 'observed' or 'declared'");
            } else if (key == "y_range") {
                const auto r = v.get<std::array<double, 2>>();
                c.declared_range = {r[0], r[1]};
            } else if (key == "add_squares") c.add_squares = v.get<bool>();
            else if (key == "sd_levels") c.sd_levels = v.get<std::vector<double>>();
            else if (key == "threads") c.threads = v.get<std::size_t>();
            else config_error("unknown key '" + key + "'");
        } catch (const nlohmann::json::exception&) {
            config_error("bad value for '" + key + "'");
        }
    }
    if (g.studies.empty() || g.rhos.empty() || g.deltas.empty() || g.alignments.empty() || g.combos.empty())
        config_error("grid axes must not be empty");
    for (const auto& cell : g.cells()) cell.validate();
    return g;
}

inline sim::SimGrid read_sim_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("invalid JSON: ") + e.what());
    }
    return parse_sim_grid(j);
}

inline std::string combo_label(const std::vector<std::size_t>& combo) {
    std::string s;
    for (std::size_t c : combo) s += (s.empty() ? "x" : "+x") + std::to_string(c + 1);
    return s;
}

// ---------------------------------------------------------------------------
// Simulation results

inline std::vector<std::pair<std::string, std::string>> result_columns(const sim::ExperimentResult& r,
                                                                       const sim::PopulationMetrics& m) {
    std::vector<std::pair<std::string, std::string>> c;
    const auto& cfg = r.config;
    auto num = [&](const std::string& k, double v) { c.emplace_back(k, format_double(v)); };
    auto summ = [&](const std::string& k, const sim::MetricSummary& s) {
        num(k + "_mean", s.mean);
        num(k + "_mcse", s.mcse);
    };
    c.emplace_back("study", std::to_string(cfg.study));
    c.emplace_back("alignment", std::string(sim::to_string(cfg.alignment)));
    num("rho", cfg.rho);
    num("delta", cfg.delta);
    c.emplace_back("covariate_combo", combo_label(cfg.covariate_combo));
    c.emplace_back("population", m.population);
    c.emplace_back("k", std::to_string(cfg.k));
    c.emplace_back("reps", std::to_string(cfg.reps));
    c.emplace_back("seed", std::to_string(cfg.seed));
    c.emplace_back("status", m.ok ? "ok" : "failed");
    c.emplace_back("replicates_ok", std::to_string(m.replicates_ok));
    c.emplace_back("replicates_failed", std::to_string(m.replicates_failed));
    summ("N", m.N);
    summ("p_sel", m.p_sel);
    summ("pate", m.pate);
    summ("sate", m.sate);
    summ("se", m.se);
    summ("ci_lo", m.ci_lo);
    summ("ci_hi", m.ci_hi);
    summ("sate_bias", m.bias);
    num("ci_coverage", m.ci_coverage);
    summ("wc_lo", m.wc_lo);
    summ("wc_hi", m.wc_hi);
    summ("wc_width", m.wc_width);
    num("wc_coverage", m.wc_coverage);
    summ("mss_lo", m.mss_lo);
    summ("mss_hi", m.mss_hi);
    summ("mss_width", m.mss_width);
    num("mss_coverage", m.mss_coverage);
    summ("wc_strat_lo", m.wcs_lo);
    summ("wc_strat_hi", m.wcs_hi);
    summ("wc_strat_width", m.wcs_width);
    num("wc_strat_coverage", m.wcs_coverage);
    summ("mss_strat_lo", m.msss_lo);
    summ("mss_strat_hi", m.msss_hi);
    summ("mss_strat_width", m.msss_width);
    num("mss_strat_coverage", m.msss_coverage);
    summ("strata_used", m.strata);
    summ("strat_sate", m.strat_sate);
    summ("strat_sate_bias", m.strat_bias);
    summ("gain_mss_vs_wc", m.gain_mss_vs_wc);
    summ("gain_wc_strat_vs_wc", m.gain_wcs_vs_wc);
    summ("gain_mss_strat_vs_mss", m.gain_msss_vs_mss);
    summ("gain_mss_strat_vs_wc", m.gain_msss_vs_wc);
    summ("gain_wc_vs_P_wc", m.gain_wc_vs_p);
    summ("gain_mss_vs_P_wc", m.gain_mss_vs_p_wc);
    summ("mss_hold_fraction", r.diagnostics.mss_hold_fraction);
    summ("violated_fraction", r.diagnostics.violated_fraction);
    std::string err = m.first_error;
    for (char& ch : err)
        if (ch == ',' || ch == '\n') ch = ';';
    c.emplace_back("first_error", err);
    return c;
}

inline void write_results_header(std::ostream& out, const sim::ExperimentResult& r) {
    bool first = true;
    for (const auto& [k, v] : result_columns(r, r.populations.front())) {
        out << (first ? "" : ",") << k;
        first = false;
    }
    out << '\n';
}

inline void write_result_rows(std::ostream& out, const sim::ExperimentResult& r) {
    for (const auto& m : r.populations) {
        bool first = true;
        for (const auto& [k, v] : result_columns(r, m)) {
            out << (first ? "" : ",") << v;
            first = false;
        }
        out << '\n';
    }
}

}  // namespace genbound::io
