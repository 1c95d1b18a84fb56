#pragma once
// The bounds / bootstrap / simulate commands behind the genbound CLI. Each returns
// the process exit code: 0 success, 1 validation error, 2 computation failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "genbound/analysis.hpp"
#include "genbound/error.hpp"
#include "genbound/io.hpp"
#include "genbound/resampling.hpp"
#include "genbound/simulation.hpp"

namespace genbound::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitComputation = 2;

// "LO,HI"
inline OutcomeRange parse_range(const std::string& s) {
    const auto f = io::split(s);
    double lo = 0.0, hi = 0.0;
    if (f.size() != 2 || !io::parse_double(f[0], lo) || !io::parse_double(f[1], hi) || !(lo < hi))
        throw Error(ErrorCode::InvalidData, "--y-range expects LO,HI with LO < HI, got '" + s + "'");
    return {lo, hi};
}

// "1,3,4" (1-based) -> {0, 2, 3}
inline std::vector<std::size_t> parse_covariates(const std::string& s) {
    std::vector<std::size_t> out;
    if (s.empty()) return out;
    for (auto f : io::split(s)) {
        double v = 0.0;
        if (!io::parse_double(f, v) || v < 1.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
            throw Error(ErrorCode::InvalidData, "--covariates expects 1-based column numbers, got '" + s + "'");
        out.push_back(static_cast<std::size_t>(v) - 1);
    }
    return out;
}

// "sd:S" or "pscore-range"
inline Redefinition parse_redefinition(const std::string& s) {
    if (s == "pscore-range") return Redefinition::pscore_range();
    if (s.rfind("sd:", 0) == 0) {
        double v = 0.0;
        if (io::parse_double(std::string_view(s).substr(3), v) && v > 0.0) return Redefinition::sd(v);
    }
    throw Error(ErrorCode::InvalidData, "--redefine expects sd:S or pscore-range, got '" + s + "'");
}

struct AnalysisOptions {
    std::string input;
    OutcomeRange range;
    int strata = 0;
    std::vector<std::size_t> covariates;
    std::vector<Redefinition> redefinitions;
    bool add_squares = false;
    StratumRangePolicy stratum_range = StratumRangePolicy::Observed;
    std::string out;  // empty: stdout

    AnalysisSpec spec(const Redefinition& def) const {
        AnalysisSpec s;
        s.strata = strata;
        s.covariates = covariates;
        s.add_squares = add_squares;
        s.stratum_range = stratum_range;
        s.redefinition = def;
        return s;
    }

    std::vector<Redefinition> populations() const {
        std::vector<Redefinition> p{Redefinition::none()};
        p.insert(p.end(), redefinitions.begin(), redefinitions.end());
        return p;
    }

    std::string canonical() const {
        std::ostringstream o;
        o << "range=" << io::format_double(range.lo) << ',' << io::format_double(range.hi) << ";strata=" << strata
          << ";covariates=";
        for (auto c : covariates) o << c + 1 << ' ';
        o << ";redefine=";
        for (const auto& r : redefinitions) o << r.label() << ' ';
        o << ";squares=" << add_squares << ";stratum_range=" << (stratum_range == StratumRangePolicy::Observed);
        return o.str();
    }
};

struct BootstrapCliOptions {
    AnalysisOptions analysis;
    std::size_t reps = 1000;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct SimulateOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::optional<std::size_t> threads;
    std::string out;
};

namespace detail {

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        fn();
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return is_validation_error(e.code()) ? kExitValidation : kExitComputation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitComputation;
    }
}

template <class Fn>
void with_output(const std::string& path, std::ostream& fallback, Fn&& fn) {
    if (path.empty()) {
        fn(fallback);
        return;
    }
    std::ofstream f(path);
    if (!f) throw Error(ErrorCode::InvalidData, "cannot write " + path);
    fn(f);
}

inline std::vector<Framework> frameworks_for(int strata) {
    std::vector<Framework> f{Framework::WorstCase, Framework::Mss};
    if (strata > 0) f.insert(f.end(), {Framework::WorstCaseStratified, Framework::MssStratified});
    return f;
}

}  // namespace detail

// SATE and bound table, one block of rows per population.
inline int cmd_bounds(const AnalysisOptions& opts, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const auto data = io::read_study_csv(opts.input, opts.range);
        std::vector<std::pair<std::string, Analysis>> results;
        for (const auto& def : opts.populations()) results.emplace_back(def.label(), analyze(data, opts.spec(def)));

        detail::with_output(opts.out, out, [&](std::ostream& o) {
            io::write_metadata(o, {"bounds", 0, io::hex64(io::fnv1a64(opts.canonical())),
                                   {{"input", opts.input}, {"se", "unpooled two-sample, z = 1.959964"}}});
            o << "population,N,n,p_sel,quantity,estimate,se,lower,upper,width,strata\n";
            const auto f = io::format_double;
            for (const auto& [label, a] : results) {
                const std::string head = label + ',' + std::to_string(a.population_size) + ',' +
                                         std::to_string(a.sample_size) + ',' + f(a.p_sel) + ',';
                o << head << "sate," << f(a.sate) << ',';
                if (a.inference)
                    o << f(a.inference->se) << ',' << f(a.inference->ci_lo) << ',' << f(a.inference->ci_hi) << ','
                      << f(a.inference->ci_hi - a.inference->ci_lo);
                else
                    o << "NA,NA,NA,NA";
                o << ",NA\n";
                for (Framework fw : detail::frameworks_for(opts.strata)) {
                    const auto& b = a.bound(fw);
                    o << head << to_string(fw) << ",NA,NA," << f(b.lo) << ',' << f(b.hi) << ',' << f(b.width())
                      << ',' << (is_stratified(fw) ? std::to_string(a.strata_used) : std::string("NA")) << '\n';
                }
            }
        });
    });
}

// Point bounds next to the percentile-bootstrap interval [LB_0.05, UB_0.95].
inline int cmd_bootstrap(const BootstrapCliOptions& opts, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const auto& ao = opts.analysis;
        const auto data = io::read_study_csv(ao.input, ao.range);
        const auto frameworks = detail::frameworks_for(ao.strata);
        BootstrapOptions bo;
        bo.reps = opts.reps;
        bo.seed = opts.seed;
        bo.threads = opts.threads;

        struct Row {
            std::string population;
            Analysis point;
            std::vector<BootstrapBounds> boot;
        };
        std::vector<Row> rows;
        for (const auto& def : ao.populations()) {
            const auto spec = ao.spec(def);
            rows.push_back({def.label(), analyze(data, spec), bootstrap_bounds(data, spec, frameworks, bo)});
        }

        detail::with_output(ao.out, out, [&](std::ostream& o) {
            io::write_metadata(o, {"bootstrap", opts.seed,
                                   io::hex64(io::fnv1a64(ao.canonical() + ";reps=" + std::to_string(opts.reps))),
                                   {{"input", ao.input}, {"quantiles", "type 7; lower 0.05, upper 0.95"}}});
            o << "population,framework,lower,upper,lb_q05,ub_q95,replicates,redraws\n";
            const auto f = io::format_double;
            for (const auto& r : rows)
                for (const auto& b : r.boot) {
                    const auto& p = r.point.bound(b.framework);
                    o << r.population << ',' << to_string(b.framework) << ',' << f(p.lo) << ',' << f(p.hi) << ','
                      << f(b.lb_q05) << ',' << f(b.ub_q95) << ',' << b.replicates << ',' << b.failures << '\n';
                }
        });
    });
}

// Runs every cell of the configured grid; one row per (cell, population).
inline int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        auto grid = io::read_sim_grid(opts.config);
        if (opts.seed) grid.base.seed = *opts.seed;
        if (opts.reps) grid.base.reps = *opts.reps;
        if (opts.threads) grid.base.threads = *opts.threads;
        const auto cells = grid.cells();
        for (const auto& c : cells) c.validate();

        std::ifstream in(opts.config);
        std::stringstream raw;
        raw << in.rdbuf();
        const std::string hash = io::hex64(io::fnv1a64(nlohmann::json::parse(raw.str()).dump() + ";seed=" +
                                                       std::to_string(grid.base.seed) + ";reps=" +
                                                       std::to_string(grid.base.reps)));

        detail::with_output(opts.out, out, [&](std::ostream& o) {
            io::write_metadata(o, {"simulate", grid.base.seed, hash,
                                   {{"cells", std::to_string(cells.size())},
                                    {"se", "unpooled two-sample, z = 1.959964"}}});
            bool header = false;
            for (const auto& cell : cells) {
                const auto result = sim::run_cell(cell);
                if (!header) io::write_results_header(o, result), header = true;
                io::write_result_rows(o, result);
                o.flush();
            }
        });
    });
}

}  // namespace genbound::cli
