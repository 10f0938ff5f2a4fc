#pragma once

// Nonemptiness of sigma-cones: seeded sampling with local ascent, the exact
// planar arc sweep, and an external SMT solver; plus the cached per-word
// oracle the abstraction builder talks to.

#include "saist/cone.hpp"
#include "saist/parallel.hpp"
#include "saist/smt.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <random>
#include <span>

namespace saist {

enum class Feasibility { Feasible, Infeasible, Unknown };
enum class FeasibilityMethod { Sampling, Planar, Spatial, External };
enum class Policy { Conservative, ExactRequired };

inline const char* to_string(Feasibility f) {
    switch (f) {
        case Feasibility::Feasible: return "feasible";
        case Feasibility::Infeasible: return "infeasible";
        default: return "unknown";
    }
}

inline const char* to_string(FeasibilityMethod m) {
    switch (m) {
        case FeasibilityMethod::Sampling: return "sampling";
        case FeasibilityMethod::Planar: return "planar";
        case FeasibilityMethod::Spatial: return "spatial";
        default: return "external";
    }
}

struct SamplingBudget {
    int evaluations = 10000;
    std::uint64_t seed = 1;
    double witness_tol = 1e-9;
};

struct FeasibilityVerdict {
    Feasibility status = Feasibility::Unknown;
    FeasibilityMethod method = FeasibilityMethod::Sampling;
    Vector witness;  ///< unit vector when Feasible
    double margin = -std::numeric_limits<double>::infinity();

    /// Feasible or Unknown: the word stays in the abstraction.
    bool admits() const { return status != Feasibility::Infeasible; }
};

namespace sampling_detail {

inline std::uint64_t word_hash(const Word& w, std::uint64_t seed) {
    std::uint64_t h = seed ^ 0x9E3779B97F4A7C15ull;
    for (int k : w) {
        h ^= static_cast<std::uint64_t>(k) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    }
    return h;
}

/// Seeded, roughly uniform points on the unit sphere; stratified for n = 2 and
/// a randomly rotated Fibonacci lattice on the upper hemisphere for n = 3
/// (cones are symmetric under x -> -x).
inline std::vector<Vector> sphere_points(int n, int count, std::mt19937_64& rng) {
    std::vector<Vector> pts;
    pts.reserve(static_cast<std::size_t>(count));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    if (n == 1) {
        pts.push_back(Vector::Ones(1));
        return pts;
    }
    if (n == 2) {
        const double off = uni(rng);
        for (int i = 0; i < count; ++i) {
            const double t = (i + off) / count * (planar::kTwoPi / 2);
            Vector x(2);
            x << std::cos(t), std::sin(t);
            pts.push_back(x);
        }
        return pts;
    }
    if (n == 3) {
        Matrix G(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) G(i, j) = gauss(rng);
        const Matrix R = linalg::orthonormalize(G);
        const double golden = planar::kTwoPi * (1.0 - 1.0 / 1.6180339887498949);
        for (int i = 0; i < count; ++i) {
            const double z = (i + 0.5) / count;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            Vector x(3);
            x << r * std::cos(golden * i), r * std::sin(golden * i), z;
            pts.push_back(R * x);
        }
        return pts;
    }
    for (int i = 0; i < count; ++i) {
        Vector x(n);
        for (int j = 0; j < n; ++j) x(j) = gauss(rng);
        pts.push_back(x.normalized());
    }
    return pts;
}

}  // namespace sampling_detail

/// Sampling phase: seeded sphere points (plus perturbations of the hints),
/// then projected subgradient ascent of the minimum margin from the best
/// starts. Returns Feasible (margin > witness_tol) or Unknown.
inline FeasibilityVerdict sample_feasible(const ConeSystem& cone, const SamplingBudget& budget,
                                          std::span<const Vector> hints = {}) {
    FeasibilityVerdict out;
    out.method = FeasibilityMethod::Sampling;
    if (budget.evaluations < 1) throw InvalidSystem("sampling budget must be at least 1");
    const int n = cone.n;

    // Normalized atoms so margins are comparable.
    std::vector<Matrix> P;
    std::vector<double> sgn;
    for (const auto& c : cone.constraints) {
        const double s = c.P.norm();
        if (s == 0.0) {
            if (c.sense == Sense::StrictPositive) { out.status = Feasibility::Unknown; return out; }
            continue;
        }
        P.push_back(c.P / s);
        sgn.push_back(c.sense == Sense::StrictPositive ? 1.0 : -1.0);
    }
    auto eval = [&](const Vector& x, std::size_t* arg) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < P.size(); ++i) {
            const double v = sgn[i] * x.dot(P[i] * x);
            if (v < m) { m = v; if (arg) *arg = i; }
        }
        return m;
    };

    std::mt19937_64 rng(sampling_detail::word_hash(cone.word, budget.seed));
    int used = 0;
    const int global = std::max(1, budget.evaluations / 2);
    std::vector<std::pair<double, Vector>> best;  // (margin, point), kept sorted descending
    constexpr std::size_t kStarts = 4;
    auto offer = [&](const Vector& x) {
        ++used;
        const double m = eval(x, nullptr);
        if (best.size() < kStarts || m > best.back().first) {
            best.emplace_back(m, x);
            std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
            if (best.size() > kStarts) best.pop_back();
        }
        return m;
    };
    auto success = [&](const Vector& x, double m) {
        out.status = Feasibility::Feasible;
        out.witness = x;
        out.margin = m;
        return out;
    };

    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const auto& h : hints) {
        if (h.size() != n || h.norm() == 0.0) continue;
        const Vector x0 = h.normalized();
        double m = offer(x0);
        if (m > budget.witness_tol) return success(x0, m);
        for (double scale = 1e-1; scale > 1e-9 && used < global / 2; scale *= 0.1) {
            for (int r = 0; r < 16; ++r) {
                Vector x = x0;
                for (int j = 0; j < n; ++j) x(j) += scale * gauss(rng);
                x.normalize();
                m = offer(x);
                if (m > budget.witness_tol) return success(x, m);
            }
        }
    }
    for (const auto& x : sampling_detail::sphere_points(n, std::max(1, global - used), rng)) {
        const double m = offer(x);
        if (m > budget.witness_tol) return success(x, m);
    }

    // Local ascent from the best starts.
    const int per_start = std::max(1, (budget.evaluations - used) / static_cast<int>(std::max<std::size_t>(1, best.size())));
    for (auto [m, x] : std::vector(best)) {
        double step = 0.1;
        for (int it = 0; it < per_start && step > 1e-14; ++it) {
            std::size_t arg = 0;
            const double cur = eval(x, &arg);
            Vector g = 2.0 * sgn[arg] * (P[arg] * x);
            g -= g.dot(x) * x;
            if (g.norm() == 0.0) break;
            Vector y = (x + step * g.normalized()).normalized();
            const double my = eval(y, nullptr);
            ++used;
            if (my > cur) {
                x = y;
                step *= 1.5;
                if (my > budget.witness_tol) return success(x, my);
            } else {
                step *= 0.5;
            }
        }
    }
    out.status = Feasibility::Unknown;
    out.margin = best.empty() ? out.margin : best.front().first;
    return out;
}

/// Asks the external solver. Sat models are normalized; their margin may be
/// zero because solvers like to return points on non-strict boundaries.
inline FeasibilityVerdict external_feasible(const ConeSystem& cone, const SmtSolver& solver) {
    FeasibilityVerdict out;
    out.method = FeasibilityMethod::External;
    const SolverReply reply = solver.check(emit_smtlib(cone, solver.config().digits));
    if (reply.status == SolverStatus::Unsat) {
        out.status = Feasibility::Infeasible;
        return out;
    }
    if (reply.status == SolverStatus::Unknown) return out;
    Vector x = Vector::Zero(cone.n);
    for (int i = 0; i < cone.n; ++i) {
        const auto it = reply.model.find("x" + std::to_string(i));
        if (it == reply.model.end()) throw SolverError("model lacks x" + std::to_string(i));
        x(i) = it->second;
    }
    if (x.norm() == 0.0) throw SolverError("model is the origin despite the sphere constraint");
    out.status = Feasibility::Feasible;
    out.witness = x.normalized();
    out.margin = cone.margin(out.witness);
    return out;
}

/// Sampling first; on failure Conservative answers Unknown and ExactRequired
/// defers to the external solver.
inline FeasibilityVerdict feasible(const ConeSystem& cone, const SamplingBudget& budget, Policy policy,
                                   const SmtSolver* solver = nullptr, std::span<const Vector> hints = {}) {
    FeasibilityVerdict v = sample_feasible(cone, budget, hints);
    if (v.status == Feasibility::Feasible || policy == Policy::Conservative) return v;
    if (!solver || !solver->config().configured())
        throw SolverUnavailable("exact feasibility requested but no solver is configured");
    return external_feasible(cone, *solver);
}

inline FeasibilityVerdict spatial_decision(const ConeSystem& cone) {
    FeasibilityVerdict v;
    v.method = FeasibilityMethod::Spatial;
    v.status = Feasibility::Infeasible;
    if (const auto x = spherical::witness(cone)) {
        v.status = Feasibility::Feasible;
        v.witness = *x;
        v.margin = cone.margin(*x);
    }
    return v;
}

/// One-shot decision: exact for n = 1 (evaluate at x = 1), n = 2 (arc sweep)
/// and n = 3 (sampling, then the great-circle sweep); feasible() otherwise.
inline FeasibilityVerdict decide_cone(const ConeSystem& cone, const SamplingBudget& budget, Policy policy,
                                      const SmtSolver* solver = nullptr) {
    FeasibilityVerdict v;
    if (cone.n == 1 || cone.n == 2) {
        v.method = FeasibilityMethod::Planar;
        v.status = Feasibility::Infeasible;
        const std::optional<Vector> x = cone.n == 1 ? std::optional<Vector>(Vector::Ones(1)) : planar::witness(cone);
        if (x && cone.contains(*x)) {
            v.status = Feasibility::Feasible;
            v.witness = *x;
            v.margin = cone.margin(*x);
        }
        return v;
    }
    if (cone.n == 3) {
        v = sample_feasible(cone, budget);
        if (v.status == Feasibility::Feasible) return v;
        return spatial_decision(cone);
    }
    return feasible(cone, budget, policy, solver);
}

// ---------------------------------------------------------------------------
// Word oracles.

/// Membership oracle for finite behavior fragments over letters 1..alphabet
/// (or any fixed alphabet). admits() is true for feasible and undecided words.
class WordOracle {
public:
    virtual ~WordOracle() = default;
    virtual std::vector<int> alphabet() const = 0;
    /// Batch query; result[i] refers to words[i].
    virtual std::vector<bool> admits(const std::vector<Word>& words) = 0;
};

enum class OracleMode { Sampling, Exact, Hybrid };

inline const char* to_string(OracleMode m) {
    switch (m) {
        case OracleMode::Sampling: return "sampling";
        case OracleMode::Exact: return "exact";
        default: return "hybrid";
    }
}

struct OracleOptions {
    OracleMode mode = OracleMode::Hybrid;
    SamplingBudget budget;
    SolverConfig solver;
    int workers = 1;
};

struct OracleStats {
    long queries = 0;
    long feasible = 0;
    long infeasible = 0;
    long unknown = 0;
    long by_sampling = 0;
    long by_planar = 0;
    long by_spatial = 0;
    long by_external = 0;
    double seconds = 0.0;
};

/// PETC cone oracle with a verdict cache keyed by word.
///
/// Sampling mode: sampling only, Unknown kept (Conservative).
/// Exact mode: sampling, then the external solver (ExactRequired).
/// Hybrid mode: planar systems use the arc sweep, extended incrementally from
///   the cached parent word; spatial systems sample and then run the
///   great-circle sweep; higher dimensions sample and fall back to the solver
///   when one is configured, Unknown otherwise.
class ConeOracle : public WordOracle {
public:
    ConeOracle(DiscretizedSystem disc, OracleOptions opts)
        : disc_(std::move(disc)), opts_(std::move(opts)), solver_(opts_.solver) {
        if (opts_.mode == OracleMode::Exact && !solver_.config().configured())
            throw SolverUnavailable("exact oracle mode needs a solver path");
        Entry root;
        root.verdict.status = Feasibility::Feasible;
        root.verdict.method = hybrid_planar() ? FeasibilityMethod::Planar : FeasibilityMethod::Sampling;
        root.verdict.witness = Vector::Unit(disc_.n(), 0);
        root.verdict.margin = std::numeric_limits<double>::infinity();
        root.phi = Matrix::Identity(disc_.n(), disc_.n());
        root.arcs = planar::ArcSet::full();
        cache_.emplace(Word{}, std::move(root));
    }

    const DiscretizedSystem& system() const { return disc_; }
    const OracleOptions& options() const { return opts_; }
    const OracleStats& stats() const { return stats_; }

    std::vector<int> alphabet() const override {
        std::vector<int> a(static_cast<std::size_t>(disc_.kbar));
        for (int k = 1; k <= disc_.kbar; ++k) a[static_cast<std::size_t>(k - 1)] = k;
        return a;
    }

    std::vector<bool> admits(const std::vector<Word>& words) override {
        const auto verdicts = query_batch(words);
        std::vector<bool> out;
        out.reserve(verdicts.size());
        for (const auto& v : verdicts) out.push_back(v.admits());
        return out;
    }

    FeasibilityVerdict query(const Word& w) { return query_batch({w}).front(); }

    /// Verdicts for all words; uncached ones are computed on the worker pool
    /// and inserted in input order, so results do not depend on scheduling.
    std::vector<FeasibilityVerdict> query_batch(const std::vector<Word>& words) {
        const auto t0 = std::chrono::steady_clock::now();
        // Parents first, so every fresh word extends a cached entry.
        std::vector<Word> todo;
        for (const auto& w : words) collect_missing(w, todo);
        std::sort(todo.begin(), todo.end(), [](const Word& a, const Word& b) {
            return a.size() != b.size() ? a.size() < b.size() : a < b;
        });
        todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
        std::size_t start = 0;
        while (start < todo.size()) {
            std::size_t stop = start;
            while (stop < todo.size() && todo[stop].size() == todo[start].size()) ++stop;
            std::vector<Entry> fresh(stop - start);
            parallel_for(stop - start, opts_.workers, [&](std::size_t i) { fresh[i] = compute(todo[start + i]); });
            for (std::size_t i = 0; i < fresh.size(); ++i) record(todo[start + i], std::move(fresh[i]));
            start = stop;
        }
        std::vector<FeasibilityVerdict> out;
        out.reserve(words.size());
        for (const auto& w : words) out.push_back(cache_.at(w).verdict);
        stats_.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }

    bool cached(const Word& w) const { return cache_.count(w) != 0; }

private:
    struct Entry {
        FeasibilityVerdict verdict;
        Matrix phi;  ///< M(k_m) ... M(k_1)
        planar::ArcSet arcs;
    };

    bool hybrid_planar() const { return opts_.mode == OracleMode::Hybrid && disc_.n() == 2; }

    void collect_missing(const Word& w, std::vector<Word>& todo) const {
        for (std::size_t len = 1; len <= w.size(); ++len) {
            Word p(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(len));
            if (!cache_.count(p)) todo.push_back(std::move(p));
        }
    }

    /// Builds the entry of w from its cached parent. Read-only on the cache.
    Entry compute(const Word& w) const {
        for (int k : w)
            if (k < 1 || k > disc_.kbar) throw InvalidSystem("word letter out of range 1..kbar");
        const Word parent_word(w.begin(), w.end() - 1);
        const Entry& parent = cache_.at(parent_word);
        const int k = w.back();
        Entry e;
        e.phi = disc_.transition(k) * parent.phi;
        if (!parent.verdict.admits()) {
            e.verdict.status = Feasibility::Infeasible;
            e.verdict.method = parent.verdict.method;
            return e;
        }
        if (hybrid_planar()) {
            std::vector<QuadConstraint> atoms;
            append_step_atoms(disc_, parent.phi, k, atoms);
            e.arcs = parent.arcs;
            for (const auto& a : atoms) {
                if (e.arcs.empty()) break;
                e.arcs = planar::intersect(e.arcs, planar::atom_arcs(a));
            }
            e.verdict.method = FeasibilityMethod::Planar;
            e.verdict.status = Feasibility::Infeasible;
            if (!e.arcs.empty()) {
                const ConeSystem cone = sigma_cone(disc_, w);
                for (const auto& x : planar::candidate_points(e.arcs)) {
                    if (cone.contains(x)) {
                        e.verdict.status = Feasibility::Feasible;
                        e.verdict.witness = x;
                        e.verdict.margin = cone.margin(x);
                        break;
                    }
                }
            }
            return e;
        }
        const ConeSystem cone = sigma_cone(disc_, w);
        std::vector<Vector> hints;
        if (parent.verdict.witness.size() == disc_.n()) hints.push_back(parent.verdict.witness);
        const Policy policy = (opts_.mode == OracleMode::Exact ||
                               (opts_.mode == OracleMode::Hybrid && solver_.config().configured()))
                                  ? Policy::ExactRequired
                                  : Policy::Conservative;
        if (opts_.mode == OracleMode::Hybrid && disc_.n() == 3) {
            e.verdict = sample_feasible(cone, opts_.budget, hints);
            if (e.verdict.status != Feasibility::Feasible) e.verdict = spatial_decision(cone);
            return e;
        }
        e.verdict = feasible(cone, opts_.budget, policy, &solver_, hints);
        return e;
    }

    void record(const Word& w, Entry e) {
        ++stats_.queries;
        switch (e.verdict.status) {
            case Feasibility::Feasible: ++stats_.feasible; break;
            case Feasibility::Infeasible: ++stats_.infeasible; break;
            default: ++stats_.unknown; break;
        }
        switch (e.verdict.method) {
            case FeasibilityMethod::Sampling: ++stats_.by_sampling; break;
            case FeasibilityMethod::Planar: ++stats_.by_planar; break;
            case FeasibilityMethod::Spatial: ++stats_.by_spatial; break;
            default: ++stats_.by_external; break;
        }
        cache_.emplace(w, std::move(e));
    }

    DiscretizedSystem disc_;
    OracleOptions opts_;
    SmtSolver solver_;
    std::map<Word, Entry> cache_;
    OracleStats stats_;
};

}  // namespace saist
