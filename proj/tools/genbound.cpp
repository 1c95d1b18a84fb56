#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "genbound/commands.hpp"

namespace {

using namespace genbound;

struct CommonFlags {
    std::string input;
    std::string y_range;
    int strata = 0;
    std::string covariates;
    std::vector<std::string> redefine;
    bool squares = false;
    std::string stratum_range = "observed";
    std::string out;

    void attach(CLI::App* cmd) {
        cmd->add_option("csv", input, "Study CSV (id,z,w,y,x1,...,xp)")->required();
        cmd->add_option("--y-range", y_range, "Declared outcome range LO,HI")->required();
        cmd->add_option("--strata", strata, "Propensity strata K (0 disables stratified bounds)");
        cmd->add_option("--covariates", covariates, "Propensity covariates, 1-based, e.g. 1,2 (default: all)");
        cmd->add_option("--redefine", redefine, "Extra population: sd:S or pscore-range (repeatable)");
        cmd->add_flag("--squares", squares, "Add squared covariate terms to the propensity model");
        cmd->add_option("--stratum-range", stratum_range, "Stratum outcome range: observed or global")
            ->check(CLI::IsMember({"observed", "global"}));
        cmd->add_option("--out", out, "Write the table to PATH instead of stdout");
    }

    cli::AnalysisOptions resolve() const {
        cli::AnalysisOptions o;
        o.input = input;
        o.range = cli::parse_range(y_range);
        o.strata = strata;
        o.covariates = cli::parse_covariates(covariates);
        for (const auto& r : redefine) o.redefinitions.push_back(cli::parse_redefinition(r));
        o.add_squares = squares;
        o.stratum_range = stratum_range == "global" ? StratumRangePolicy::Global : StratumRangePolicy::Observed;
        o.out = out;
        return o;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonparametric bounds on the population average treatment effect"};
    app.require_subcommand(1);

    CommonFlags bounds_flags;
    auto* bounds = app.add_subcommand("bounds", "SATE plus worst-case, MSS and stratified PATE bounds");
    bounds_flags.attach(bounds);

    CommonFlags boot_flags;
    std::size_t boot_reps = 1000;
    std::uint64_t boot_seed = 1;
    std::size_t boot_threads = 1;
    auto* boot = app.add_subcommand("bootstrap", "Percentile-bootstrap intervals for the bounds");
    boot_flags.attach(boot);
    boot->add_option("--reps", boot_reps, "Bootstrap replicates")->check(CLI::PositiveNumber);
    boot->add_option("--seed", boot_seed, "RNG seed");
    boot->add_option("--threads", boot_threads, "Worker threads (0 = hardware)");

    cli::SimulateOptions sim_opts;
    auto* simulate = app.add_subcommand("simulate", "Run a simulation grid from a JSON config");
    simulate->add_option("config", sim_opts.config, "Simulation config (JSON)")->required();
    simulate->add_option("--seed", sim_opts.seed, "Override the config seed");
    simulate->add_option("--reps", sim_opts.reps, "Override the replicate count");
    simulate->add_option("--threads", sim_opts.threads, "Worker threads (0 = hardware)");
    simulate->add_option("--out", sim_opts.out, "Write the results CSV to PATH instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::kExitValidation;
    }

    try {
        if (*bounds) return cli::cmd_bounds(bounds_flags.resolve(), std::cout, std::cerr);
        if (*boot) {
            cli::BootstrapCliOptions o{boot_flags.resolve(), boot_reps, boot_seed, boot_threads};
            return cli::cmd_bootstrap(o, std::cout, std::cerr);
        }
        if (*simulate) return cli::cmd_simulate(sim_opts, std::cout, std::cerr);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kExitValidation;
    }
    return cli::kExitValidation;
}
