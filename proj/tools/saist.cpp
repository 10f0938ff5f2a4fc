// Command-line front end: analyze a PETC configuration, or simulate it.
//
// Exit status: 0 verified, 2 bounds only, 1 error.

#include "saist/saist.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct AnalyzeArgs {
    std::string config;
    std::optional<int> l_max;
    std::string mode;
    std::string oracle;
    std::string solver_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string dot;
    std::string report;
    std::vector<int> crosscheck;
    bool timing = false;
};

struct SimulateArgs {
    std::string config;
    std::vector<double> x0;
    int steps = 100;
};

int analyze(const AnalyzeArgs& a) {
    saist::AnalysisConfig cfg = saist::load_config(a.config);
    if (a.l_max) cfg.l_max = *a.l_max;
    if (!a.mode.empty()) cfg.mode = saist::parse_refinement_mode(a.mode);
    if (!a.oracle.empty()) cfg.oracle.mode = saist::parse_oracle_mode(a.oracle);
    if (!a.solver_path.empty()) cfg.oracle.solver.path = a.solver_path;
    if (a.seed) {
        cfg.seed = *a.seed;
        cfg.oracle.budget.seed = *a.seed;
        cfg.verify.seed = *a.seed;
    }
    if (a.workers) cfg.oracle.workers = std::max(1, *a.workers);

    const saist::SaistReport r = saist::compute_saist(cfg);
    saist::json j = saist::report_json(r, a.timing);
    j["name"] = cfg.name;

    if (a.crosscheck.size() == 2) {
        const auto cc = saist::crosscheck_simulation(saist::discretize(cfg.system), r, a.crosscheck[0],
                                                     a.crosscheck[1], cfg.seed);
        j["crosscheck"] = {{"tail_averages", cc.tail_averages}, {"min_tail", cc.min_tail}, {"slack", cc.lower_slack}};
        if (cc.witness_average) j["crosscheck"]["witness_average"] = *cc.witness_average;
    }
    if (!a.dot.empty()) {
        std::ofstream out(a.dot);
        if (!out) throw saist::ConfigError("cannot write '" + a.dot + "'");
        saist::write_dot(out, r.final_abstraction, r.final_sac_states);
    }
    if (!a.report.empty()) {
        std::ofstream out(a.report);
        if (!out) throw saist::ConfigError("cannot write '" + a.report + "'");
        out << j.dump(2) << '\n';
    }

    std::cout << (cfg.name.empty() ? a.config : cfg.name) << '\n';
    if (r.verified()) {
        std::cout << "  SAIST      " << saist::to_string(r.saist_lower) << " steps = "
                  << saist::to_double(r.saist_lower) * cfg.system.h << " s\n"
                  << "  cycle      " << saist::to_string(r.sac_word) << '\n';
    } else {
        std::cout << "  bounds     [" << saist::to_string(r.saist_lower) << ", "
                  << (r.saist_upper ? saist::to_string(*r.saist_upper) : std::string("?")) << "] steps\n"
                  << "  best cycle " << saist::to_string(r.sac_word) << " (not verified)\n";
    }
    if (r.saist_upper) std::cout << "  upper      " << saist::to_double(*r.saist_upper) << '\n';
    std::cout << "  l          " << r.l_reached << '\n'
              << "  states     " << r.final_abstraction.states.size() << '\n'
              << "  queries    " << r.oracle.queries << '\n';
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    return r.verified() ? 0 : 2;
}

int simulate(const SimulateArgs& a) {
    const saist::AnalysisConfig cfg = saist::load_config(a.config);
    const auto disc = saist::discretize(cfg.system);
    if (static_cast<int>(a.x0.size()) != disc.n())
        throw saist::ConfigError("x0 needs " + std::to_string(disc.n()) + " entries");
    const saist::Vector x0 = Eigen::Map<const saist::Vector>(a.x0.data(), disc.n());
    const auto ists = saist::simulate_ists(disc, x0, a.steps);
    const auto avg = saist::running_average(ists);
    for (std::size_t i = 0; i < ists.size(); ++i) std::cout << i << ' ' << ists[i] << ' ' << avg[i] << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Smallest average inter-sample time of PETC systems"};
    app.require_subcommand(1);

    AnalyzeArgs an;
    auto* cmd = app.add_subcommand("analyze", "compute the SAIST or bounds on it");
    cmd->add_option("config", an.config, "JSON configuration")->required()->check(CLI::ExistingFile);
    cmd->add_option("--l-max", an.l_max, "maximum abstraction depth")->check(CLI::PositiveNumber);
    cmd->add_option("--mode", an.mode, "refinement mode")->check(CLI::IsMember({"full", "targeted"}));
    cmd->add_option("--oracle", an.oracle, "cone feasibility oracle")
        ->check(CLI::IsMember({"sampling", "exact", "hybrid"}));
    cmd->add_option("--solver-path", an.solver_path, "SMT solver executable (z3 compatible)");
    cmd->add_option("--seed", an.seed, "random seed");
    cmd->add_option("--workers", an.workers, "oracle threads");
    cmd->add_option("--dot", an.dot, "write the final abstraction as Graphviz");
    cmd->add_option("--report", an.report, "write the JSON report");
    cmd->add_option("--crosscheck", an.crosscheck, "simulate TRIALS random states for STEPS samples")
        ->expected(2)
        ->type_name("TRIALS STEPS");
    cmd->add_flag("--timing", an.timing, "include timings in the JSON report");

    SimulateArgs sim;
    auto* scmd = app.add_subcommand("simulate", "print the inter-sample times of one trajectory");
    scmd->add_option("config", sim.config, "JSON configuration")->required()->check(CLI::ExistingFile);
    scmd->add_option("--x0", sim.x0, "initial state")->required();
    scmd->add_option("--steps", sim.steps, "number of samples")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    try {
        if (cmd->parsed()) return analyze(an);
        return simulate(sim);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
