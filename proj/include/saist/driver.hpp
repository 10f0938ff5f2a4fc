#pragma once

// Top-level analysis: refine an abstraction until one of its smallest-average
// cycles is verified on the concrete system, or report bounds. Also hosts the
// generic engine for symbolic fixtures, configuration and reports.

#include "saist/abstraction.hpp"
#include "saist/cycle_verify.hpp"
#include "saist/fixtures.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <set>

namespace saist {

using json = nlohmann::json;

enum class RefinementMode { Full, Targeted };

inline const char* to_string(RefinementMode m) { return m == RefinementMode::Full ? "full" : "targeted"; }

struct AnalysisConfig {
    std::string name;
    PetcSystem system;
    int l_max = 50;
    RefinementMode mode = RefinementMode::Full;
    OracleOptions oracle;
    VerifyOptions verify;
    std::uint64_t seed = 1;
    int max_iterations = 2000;      ///< targeted mode refinement rounds
    double wall_budget_s = 0.0;     ///< 0: unlimited
};

// ---------------------------------------------------------------------------
// Configuration.

namespace config_detail {

inline Matrix matrix(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + " must be a nonempty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j[0].is_array() || j[0].empty()) throw ConfigError(std::string(what) + " rows must be nonempty arrays");
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix M(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ConfigError(std::string(what) + " is ragged");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw ConfigError(std::string(what) + " has a non-numeric entry");
            M(r, c) = v.get<double>();
        }
    }
    return M;
}

inline OracleMode oracle_mode(const std::string& s) {
    if (s == "sampling") return OracleMode::Sampling;
    if (s == "exact") return OracleMode::Exact;
    if (s == "hybrid") return OracleMode::Hybrid;
    throw ConfigError("oracle must be sampling, exact or hybrid, got '" + s + "'");
}

inline RefinementMode refinement_mode(const std::string& s) {
    if (s == "full") return RefinementMode::Full;
    if (s == "targeted") return RefinementMode::Targeted;
    throw ConfigError("mode must be full or targeted, got '" + s + "'");
}

}  // namespace config_detail

inline OracleMode parse_oracle_mode(const std::string& s) { return config_detail::oracle_mode(s); }
inline RefinementMode parse_refinement_mode(const std::string& s) { return config_detail::refinement_mode(s); }

/// Reads the system block (A, B, K, trigger, h, kbar) plus optional run settings.
inline AnalysisConfig parse_config(const json& j) {
    using namespace config_detail;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const char* key : {"A", "B", "K", "trigger", "h", "kbar"})
        if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
    AnalysisConfig cfg;
    cfg.name = j.value("name", std::string{});
    const Matrix A = matrix(j["A"], "A"), B = matrix(j["B"], "B"), K = matrix(j["K"], "K");
    if (A.rows() != A.cols()) throw ConfigError("A must be square");
    if (B.rows() != A.rows() || K.cols() != A.rows() || K.rows() != B.cols())
        throw ConfigError("B must be n x m and K m x n");
    cfg.system.A = A;
    cfg.system.BK = B * K;
    const auto& trig = j["trigger"];
    const std::string type = trig.value("type", std::string{});
    if (type == "relative_error") {
        if (!trig.contains("sigma") || !trig["sigma"].is_number()) throw ConfigError("relative_error trigger needs sigma");
        try {
            cfg.system.Qtrig = relative_error_trigger(trig["sigma"].get<double>(), static_cast<int>(A.rows()));
        } catch (const InvalidSystem& e) {
            throw ConfigError(e.what());
        }
    } else if (type == "quadratic") {
        if (!trig.contains("Q")) throw ConfigError("quadratic trigger needs Q");
        cfg.system.Qtrig = matrix(trig["Q"], "Q");
    } else {
        throw ConfigError("trigger type must be relative_error or quadratic");
    }
    if (!j["h"].is_number() || !j["kbar"].is_number_integer()) throw ConfigError("h must be a number and kbar an integer");
    cfg.system.h = j["h"].get<double>();
    cfg.system.kbar = j["kbar"].get<int>();
    try {
        cfg.system.validate();
    } catch (const InvalidSystem& e) {
        throw ConfigError(e.what());
    }

    if (j.contains("l_max")) cfg.l_max = j["l_max"].get<int>();
    if (cfg.l_max < 1) throw ConfigError("l_max must be at least 1");
    if (j.contains("mode")) cfg.mode = refinement_mode(j["mode"].get<std::string>());
    if (j.contains("oracle")) cfg.oracle.mode = oracle_mode(j["oracle"].get<std::string>());
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) cfg.oracle.workers = std::max(1, j["workers"].get<int>());
    if (j.contains("budget")) cfg.oracle.budget.evaluations = j["budget"].get<int>();
    if (j.contains("max_iterations")) cfg.max_iterations = j["max_iterations"].get<int>();
    if (j.contains("wall_budget_s")) cfg.wall_budget_s = j["wall_budget_s"].get<double>();
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        cfg.oracle.solver.path = s.value("path", std::string{});
        cfg.oracle.solver.timeout_s = s.value("timeout_s", cfg.oracle.solver.timeout_s);
        cfg.oracle.solver.digits = s.value("digits", cfg.oracle.solver.digits);
    }
    cfg.oracle.budget.seed = cfg.seed;
    cfg.verify.seed = cfg.seed;
    return cfg;
}

inline AnalysisConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Reports.

struct SacCheck {
    Word word;                  ///< canonical primitive cycle word
    bool verified = false;
    std::string note;
};

struct IterationLog {
    int l = 0;
    std::size_t states = 0;
    std::size_t transitions = 0;
    Rational value;
    std::vector<SacCheck> sacs;
    long oracle_queries = 0;
    double seconds = 0.0;
};

enum class ReportStatus { Verified, BoundsOnly };

struct SaistReport {
    ReportStatus status = ReportStatus::BoundsOnly;
    Rational saist_lower;
    std::optional<Rational> saist_upper;
    Word sac_word;
    int l_reached = 0;
    Matrix witness;             ///< empty unless Verified on a PETC system
    int witness_power = 1;
    double h = 1.0;
    std::vector<IterationLog> iterations;
    std::vector<std::string> warnings;
    OracleStats oracle;
    TrafficAbstraction final_abstraction;
    std::vector<int> final_sac_states;
    std::vector<SccSummary> scc;    ///< final abstraction, diagnostics only
    std::optional<Rational> max_mean;

    bool verified() const { return status == ReportStatus::Verified; }
};

inline json rational_json(const Rational& r) { return {{"num", r.numerator()}, {"den", r.denominator()}}; }

/// Report JSON. Pass include_timing = false for byte-stable output.
inline json report_json(const SaistReport& r, bool include_timing = true) {
    json j;
    j["status"] = r.verified() ? "verified" : "bounds_only";
    j["saist_lower"] = rational_json(r.saist_lower);
    j["saist_upper"] = r.saist_upper ? rational_json(*r.saist_upper) : json(nullptr);
    j["sac"] = r.sac_word;
    j["l"] = r.l_reached;
    if (r.witness.size()) {
        json basis = json::array();
        for (Eigen::Index i = 0; i < r.witness.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index c = 0; c < r.witness.cols(); ++c) row.push_back(r.witness(i, c));
            basis.push_back(row);
        }
        j["witness_basis"] = basis;
        j["witness_power"] = r.witness_power;
    } else {
        j["witness_basis"] = nullptr;
    }
    json its = json::array();
    for (const auto& it : r.iterations) {
        json e{{"l", it.l},
               {"states", it.states},
               {"transitions", it.transitions},
               {"value", rational_json(it.value)},
               {"oracle_queries", it.oracle_queries}};
        json sacs = json::array();
        for (const auto& s : it.sacs) sacs.push_back({{"word", s.word}, {"verified", s.verified}, {"note", s.note}});
        e["sacs"] = sacs;
        if (include_timing) e["seconds"] = it.seconds;
        its.push_back(e);
    }
    j["iterations"] = its;
    json steps{{"lower", rational_json(r.saist_lower)}}, time{{"lower", to_double(r.saist_lower) * r.h}};
    if (r.saist_upper) {
        steps["upper"] = rational_json(*r.saist_upper);
        time["upper"] = to_double(*r.saist_upper) * r.h;
    }
    j["units"] = {{"steps", steps}, {"time", time}, {"h", r.h}};
    j["warnings"] = r.warnings;
    json sccs = json::array();
    for (const auto& c : r.scc)
        sccs.push_back({{"states", c.vertices.size()},
                        {"attracting", c.attracting},
                        {"min_mean", rational_json(c.min_mean)},
                        {"max_mean", rational_json(c.max_mean)}});
    j["diagnostics"] = {{"max_mean", r.max_mean ? rational_json(*r.max_mean) : json(nullptr)}, {"scc", sccs}};
    j["oracle"] = {{"queries", r.oracle.queries},     {"feasible", r.oracle.feasible},
                   {"infeasible", r.oracle.infeasible}, {"unknown", r.oracle.unknown},
                   {"by_sampling", r.oracle.by_sampling}, {"by_planar", r.oracle.by_planar}, {"by_spatial", r.oracle.by_spatial},
                   {"by_external", r.oracle.by_external}};
    if (include_timing) j["oracle"]["seconds"] = r.oracle.seconds;
    return j;
}

// ---------------------------------------------------------------------------
// Engine shared by PETC systems and fixtures.

/// Supplies successive abstractions and decides whether a periodic word is a
/// behavior of the underlying system.
class AbstractionProvider {
public:
    virtual ~AbstractionProvider() = default;
    /// First abstraction (depth 1).
    virtual TrafficAbstraction initial() = 0;
    /// Next abstraction given the current one and the states of its smallest cycles.
    virtual TrafficAbstraction refine(const TrafficAbstraction& current, const std::vector<int>& sac_states) = 0;
    /// Verifies the periodic behavior word^ω; may fill a witness.
    virtual SacCheck verify(const Word& word, SaistReport& report) = 0;
    virtual long queries() const = 0;
};

namespace driver_detail {

inline Word cycle_key(const Word& w) { return canonical_rotation(primitive_root(w)); }

}  // namespace driver_detail

/// Refine-and-verify loop. Stops at the first verified smallest cycle, at
/// depth l_max, or when the wall budget runs out.
inline SaistReport run_engine(AbstractionProvider& provider, int l_max, int max_iterations = 2000,
                              double wall_budget_s = 0.0, double h = 1.0) {
    if (l_max < 1) throw InvalidSystem("l_max must be at least 1");
    SaistReport report;
    report.h = h;
    const auto start = std::chrono::steady_clock::now();
    std::map<Word, SacCheck> checked;
    TrafficAbstraction abs = provider.initial();
    for (int iter = 0; iter < max_iterations; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();
        const long q0 = provider.queries();
        const std::size_t pruned = prune_blocking(abs);
        if (pruned) report.warnings.push_back(std::to_string(pruned) + " blocking states pruned at l=" + std::to_string(abs.depth));
        const WeightedGraph g = to_graph(abs);
        const auto sacs = min_mean_cycles(g);
        IterationLog log;
        log.l = abs.depth;
        log.states = abs.states.size();
        log.transitions = abs.transitions.size();
        log.value = sacs.front().value;

        std::vector<int> sac_states;
        std::set<Word> seen;
        const SacCheck* hit = nullptr;
        for (const auto& c : sacs) {
            sac_states.insert(sac_states.end(), c.cycle.begin(), c.cycle.end());
            const Word key = driver_detail::cycle_key(cycle_word(abs, c.cycle));
            if (!seen.insert(key).second) continue;
            auto it = checked.find(key);
            if (it == checked.end()) it = checked.emplace(key, provider.verify(key, report)).first;
            log.sacs.push_back(it->second);
            if (it->second.verified && !hit) {
                hit = &it->second;
                report.final_sac_states = c.cycle;
            }
        }
        log.oracle_queries = provider.queries() - q0;
        log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.iterations.push_back(log);
        report.saist_lower = log.value;
        report.l_reached = abs.depth;
        if (hit) {
            report.status = ReportStatus::Verified;
            report.sac_word = hit->word;
            report.saist_upper = attracting_scc_bound(g);
            report.max_mean = max_mean_cycle(g).value;
            report.scc = scc_summaries(g);
            report.final_abstraction = std::move(abs);
            return report;
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool out_of_time = wall_budget_s > 0.0 && elapsed > wall_budget_s;
        bool too_deep = abs.depth >= l_max;
        if (!too_deep) {
            // Targeted rounds stop once a cycle state can no longer grow.
            for (int s : sac_states)
                if (static_cast<int>(abs.states[static_cast<std::size_t>(s)].size()) >= l_max) too_deep = true;
        }
        if (too_deep || out_of_time || iter + 1 == max_iterations) {
            if (out_of_time) report.warnings.push_back("wall-clock budget exhausted");
            if (iter + 1 == max_iterations && !too_deep) report.warnings.push_back("iteration budget exhausted");
            report.status = ReportStatus::BoundsOnly;
            report.sac_word = driver_detail::cycle_key(cycle_word(abs, sacs.front().cycle));
            report.final_sac_states = sacs.front().cycle;
            report.saist_upper = attracting_scc_bound(g);
            report.max_mean = max_mean_cycle(g).value;
            report.scc = scc_summaries(g);
            report.final_abstraction = std::move(abs);
            return report;
        }
        abs = provider.refine(abs, sac_states);
    }
    throw InvalidSystem("max_iterations must be at least 1");
}

/// Full l-complete rebuilds at every depth.
class LanguageProvider : public AbstractionProvider {
public:
    LanguageProvider(WordOracle& oracle, std::function<bool(const Word&)> behavior,
                     RefinementMode mode = RefinementMode::Full)
        : oracle_(oracle), behavior_(std::move(behavior)), mode_(mode) {}

    TrafficAbstraction initial() override {
        queries_ += static_cast<long>(oracle_.alphabet().size());
        return build_l_complete(oracle_, 1);
    }

    TrafficAbstraction refine(const TrafficAbstraction& current, const std::vector<int>& sac) override {
        if (mode_ == RefinementMode::Targeted) {
            queries_ += static_cast<long>(sac.size() * oracle_.alphabet().size());
            return refine_sac(current, sac, oracle_);
        }
        return extend(current);
    }

    SacCheck verify(const Word& word, SaistReport&) override {
        SacCheck c;
        c.word = word;
        c.verified = behavior_(word);
        c.note = c.verified ? "periodic behavior" : "not a behavior";
        return c;
    }

    long queries() const override { return queries_; }

protected:
    /// Next full level from the admitted words of the current one.
    TrafficAbstraction extend(const TrafficAbstraction& current) {
        const auto letters = oracle_.alphabet();
        std::vector<Word> children;
        for (const auto& w : current.states)
            for (int k : letters) children.push_back(concat(w, k));
        queries_ += static_cast<long>(children.size());
        const auto ok = oracle_.admits(children);
        std::vector<Word> next;
        for (std::size_t i = 0; i < children.size(); ++i)
            if (ok[i]) next.push_back(std::move(children[i]));
        return make_abstraction(std::move(next));
    }

    WordOracle& oracle_;
    std::function<bool(const Word&)> behavior_;
    RefinementMode mode_;
    long queries_ = 0;
};

/// Generic limit-average computation over a fixture.
inline SaistReport generic_limavg(const fixtures::Fixture& fx, int l_max,
                                  RefinementMode mode = RefinementMode::Full) {
    fixtures::LanguageOracle oracle(fx.letters, fx.fragment);
    LanguageProvider provider(oracle, fx.periodic_behavior, mode);
    return run_engine(provider, l_max);
}

/// PETC provider: cone oracle for fragments, invariant subspaces for cycles.
class PetcProvider : public AbstractionProvider {
public:
    PetcProvider(ConeOracle& oracle, VerifyOptions verify, RefinementMode mode)
        : oracle_(oracle), verify_(verify), mode_(mode) {}

    TrafficAbstraction initial() override { return build_l_complete(oracle_, 1); }

    TrafficAbstraction refine(const TrafficAbstraction& current, const std::vector<int>& sac) override {
        if (mode_ == RefinementMode::Targeted) return refine_sac(current, sac, oracle_);
        std::vector<Word> children;
        for (const auto& w : current.states)
            for (int k = 1; k <= oracle_.system().kbar; ++k) children.push_back(concat(w, k));
        const auto ok = oracle_.admits(children);
        std::vector<Word> next;
        for (std::size_t i = 0; i < children.size(); ++i)
            if (ok[i]) next.push_back(std::move(children[i]));
        return make_abstraction(std::move(next));
    }

    SacCheck verify(const Word& word, SaistReport& report) override {
        SacCheck c;
        c.word = word;
        try {
            const CycleVerdict v = verify_cycle(oracle_.system(), word, verify_);
            c.verified = v.verified;
            if (v.verified) {
                c.note = std::string("witness ") + to_string(v.kind) + (v.power > 1 ? " of power " + std::to_string(v.power) : "");
                report.witness = v.witness;
                report.witness_power = v.power;
            } else {
                c.note = "no invariant subspace inside the cone";
            }
            for (const auto& w : v.warnings) report.warnings.push_back(to_string(word) + ": " + w);
        } catch (const SingularCycleMatrix& e) {
            c.note = e.what();
        }
        return c;
    }

    long queries() const override { return oracle_.stats().queries; }

private:
    ConeOracle& oracle_;
    VerifyOptions verify_;
    RefinementMode mode_;
};

inline SaistReport compute_saist(const AnalysisConfig& cfg) {
    ConeOracle oracle(discretize(cfg.system), cfg.oracle);
    PetcProvider provider(oracle, cfg.verify, cfg.mode);
    SaistReport r = run_engine(provider, cfg.l_max, cfg.max_iterations, cfg.wall_budget_s, cfg.system.h);
    r.oracle = oracle.stats();
    return r;
}

// ---------------------------------------------------------------------------
// Empirical cross-check.

struct CrosscheckResult {
    std::vector<double> tail_averages;   ///< per random trial, over the second half
    double min_tail = std::numeric_limits<double>::infinity();
    std::optional<double> witness_average;
    double lower_slack = 0.0;
};

/// Simulates random unit initial states and checks that no tail average falls
/// below the lower bound. A tail of length L is a path of the abstraction, so
/// it may undercut the cycle bound by at most lower * states / L; that is the
/// allowed slack. Verified reports also replay a witness-seeded trajectory,
/// whose average must match the SAIST within `witness_tol`.
inline CrosscheckResult crosscheck_simulation(const DiscretizedSystem& disc, const SaistReport& report, int trials,
                                              int steps, std::uint64_t seed = 1, double witness_tol = 1e-9) {
    if (trials < 0 || steps < 2) throw InvalidSystem("crosscheck needs trials >= 0 and steps >= 2");
    CrosscheckResult out;
    const int tail_len = steps - steps / 2;
    const double lower = to_double(report.saist_lower);
    out.lower_slack = std::max(1e-9, lower * static_cast<double>(report.final_abstraction.states.size()) / tail_len);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int t = 0; t < trials; ++t) {
        Vector x(disc.n());
        for (int i = 0; i < disc.n(); ++i) x(i) = gauss(rng);
        x.normalize();
        const auto ists = simulate_ists(disc, x, steps);
        double sum = 0.0;
        for (int i = steps / 2; i < steps; ++i) sum += ists[static_cast<std::size_t>(i)];
        const double avg = sum / tail_len;
        out.tail_averages.push_back(avg);
        out.min_tail = std::min(out.min_tail, avg);
        if (avg < lower - out.lower_slack)
            throw CrosscheckFailed("trial " + std::to_string(t) + " tail average " + std::to_string(avg) +
                                   " below lower bound " + std::to_string(lower));
    }
    if (report.verified() && report.witness.size()) {
        const Word chain = power(report.sac_word, report.witness_power);
        const Vector x0 = subspace_point(report.witness, seed);
        const int periods = std::max(1, steps / static_cast<int>(chain.size()));
        if (!replay_matches(disc, chain, report.witness, x0, periods))
            throw CrosscheckFailed("witness trajectory left the cycle " + to_string(chain));
        const double avg = to_double(word_mean(chain));
        out.witness_average = avg;
        if (std::fabs(avg - lower) > witness_tol)
            throw CrosscheckFailed("witness average " + std::to_string(avg) + " differs from " + std::to_string(lower));
    }
    return out;
}

}  // namespace saist
