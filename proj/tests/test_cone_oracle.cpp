#include "systems.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace saist;
using saist::testing::planar_system;

namespace {

SolverConfig z3_config(int digits = 15) {
    SolverConfig c;
    c.path = "z3";
    c.timeout_s = 60;
    c.digits = digits;
    return c;
}

bool z3_available() {
    static const bool ok = [] {
        try {
            SmtSolver s(z3_config());
            return s.check("(check-sat)\n").status == SolverStatus::Sat;
        } catch (const Error&) {
            return false;
        }
    }();
    return ok;
}

Matrix random_symmetric(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix P(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) P(i, j) = g(rng);
    return linalg::symmetrize(P);
}

// Dense deterministic sampling of the unit circle: does any point lie in the cone?
bool circle_hits(const ConeSystem& cone, int count = 20000) {
    for (int i = 0; i < count; ++i) {
        const double t = (i + 0.5) / count * planar::kTwoPi / 2;
        if (cone.contains((Vector(2) << std::cos(t), std::sin(t)).finished())) return true;
    }
    return false;
}

// Fibonacci lattice over the sphere.
bool sphere_hits(const ConeSystem& cone, int count) {
    const double golden = planar::kTwoPi / 2 * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double t = golden * i;
        if (cone.contains((Vector(3) << r * std::cos(t), r * std::sin(t), z).finished())) return true;
    }
    return false;
}

std::vector<Word> all_words(int kbar, int len) {
    std::vector<Word> out{Word{}};
    for (int d = 0; d < len; ++d) {
        std::vector<Word> next;
        for (const auto& w : out)
            for (int k = 1; k <= kbar; ++k) next.push_back(concat(w, k));
        out = std::move(next);
    }
    return out;
}

}  // namespace

TEST(SigmaCone, AtomCounts) {
    const auto d = discretize(planar_system(0.3));
    EXPECT_EQ(atom_count(3, 20), 3);
    EXPECT_EQ(atom_count(20, 20), 19);
    EXPECT_EQ(sigma_cone(d, {3, 20}).constraints.size(), 22u);
    EXPECT_EQ(sigma_cone(d, {1}).constraints.size(), 1u);
    EXPECT_EQ(sigma_cone(d, {1}).constraints[0].sense, Sense::StrictPositive);
    EXPECT_THROW(sigma_cone(d, {21}), InvalidSystem);
    EXPECT_THROW(sigma_cone(d, {0}), InvalidSystem);
}

TEST(SigmaCone, SecondStepIsCongruentByM1) {
    const auto d = discretize(planar_system(0.3));
    const ConeSystem c = sigma_cone(d, {1, 2});
    ASSERT_EQ(c.constraints.size(), 3u);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        const Vector x = (Vector(2) << g(rng), g(rng)).finished();
        const Vector y = d.transition(1) * x;
        EXPECT_NEAR(x.dot(c.constraints[1].P * x), y.dot(d.trigger_form(1) * y), 1e-12);
        EXPECT_NEAR(x.dot(c.constraints[2].P * x), y.dot(d.trigger_form(2) * y), 1e-12);
        EXPECT_EQ(c.constraints[1].sense, Sense::NonPositive);
        EXPECT_EQ(c.constraints[2].sense, Sense::StrictPositive);
    }
}

TEST(SigmaCone, ContainsMatchesSimulatedTrace) {
    const auto d = discretize(planar_system(0.3));
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        const Vector x = (Vector(2) << g(rng), g(rng)).finished();
        const auto w = simulate_ists(d, x, 4);
        EXPECT_TRUE(sigma_cone(d, w).contains(x));
        Word other = w;
        other.back() = other.back() == 1 ? 2 : other.back() - 1;
        EXPECT_FALSE(sigma_cone(d, other).contains(x));
    }
}

TEST(Smt, EmitsOneAssertionPerAtom) {
    ConeSystem c;
    c.n = 2;
    c.constraints.push_back({(Matrix(2, 2) << 2, 0, 0, 0).finished(), Sense::StrictPositive});
    const std::string q = emit_smtlib(c);
    EXPECT_NE(q.find("(assert (> (* 2.0 x0 x0) 0))"), std::string::npos) << q;
    EXPECT_NE(q.find("(declare-const x1 Real)"), std::string::npos);
    EXPECT_NE(q.find("(assert (= (+ (* x0 x0) (* x1 x1)) 1))"), std::string::npos);
    EXPECT_EQ(emit_smtlib(c), q);
    EXPECT_THROW(emit_smtlib(c, 3), InvalidSystem);
}

TEST(Smt, DecimalFormatting) {
    EXPECT_EQ(format_decimal(2.0, 15), "2.0");
    EXPECT_EQ(format_decimal(-0.00125, 15), "-0.00125");
    EXPECT_EQ(format_decimal(1234.5, 15), "1234.5");
    EXPECT_EQ(format_decimal(1e-20, 6), "0.00000000000000000001");
    EXPECT_EQ(format_decimal(0.0, 15), "0.0");
}

TEST(Smt, ParsesReplies) {
    auto r = parse_solver_reply("sat\n(model\n  (define-fun x0 () Real 0.5)\n  (define-fun x1 () Real (- 0.25))\n"
                                "  (define-fun x2 () Real (/ 1.0 4.0)))\n");
    EXPECT_EQ(r.status, SolverStatus::Sat);
    EXPECT_DOUBLE_EQ(r.model.at("x0"), 0.5);
    EXPECT_DOUBLE_EQ(r.model.at("x1"), -0.25);
    EXPECT_DOUBLE_EQ(r.model.at("x2"), 0.25);
    r = parse_solver_reply("sat\n((define-fun x0 () Real 0.70710678118654752440?))");
    EXPECT_NEAR(r.model.at("x0"), std::sqrt(0.5), 1e-15);
    EXPECT_EQ(parse_solver_reply("unsat\n(error \"model is not available\")").status, SolverStatus::Unsat);
    EXPECT_EQ(parse_solver_reply("unknown\n").status, SolverStatus::Unknown);
    EXPECT_EQ(parse_solver_reply("timeout\n").status, SolverStatus::Unknown);
    EXPECT_THROW(parse_solver_reply("(error \"line 1\")"), SolverError);
    EXPECT_THROW(parse_solver_reply("sat\n((define-fun x0 () Real"), SolverError);
}

TEST(Smt, MissingSolverIsUnavailable) {
    SolverConfig c;
    EXPECT_THROW(SmtSolver(c).check("(check-sat)"), SolverUnavailable);
    c.path = "/nonexistent/solver-binary";
    EXPECT_THROW(SmtSolver(c).check("(check-sat)"), SolverUnavailable);
}

TEST(SubspaceContained, AgreesWithSampling) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    int disagreements = 0;
    for (int t = 0; t < 200; ++t) {
        Matrix V(3, 2);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 2; ++j) V(i, j) = g(rng);
        const Matrix P = random_symmetric(3, rng);
        for (Sense sense : {Sense::StrictPositive, Sense::NonPositive}) {
            const QuadConstraint c{P, sense};
            const bool verdict = subspace_contained(V, c, 0.0);
            const Matrix W = linalg::orthonormalize(V);
            bool all = true;
            for (int i = 0; i < 1000 && all; ++i) {
                const double a = (i + 0.5) / 1000 * planar::kTwoPi / 2;
                all = c.holds(W.col(0) * std::cos(a) + W.col(1) * std::sin(a));
            }
            disagreements += verdict != all;
        }
    }
    EXPECT_EQ(disagreements, 0);
}

TEST(SubspaceContained, RejectsDependentBasis) {
    Matrix V(3, 2);
    V << 1, 2, 0, 0, 1, 2;
    EXPECT_THROW(subspace_contained(V, {Matrix::Identity(3, 3), Sense::StrictPositive}, 0.0), RankDeficientBasis);
}

TEST(PlanarDecision, AgreesWithDenseSampling) {
    const auto d = discretize(planar_system(0.3));
    int checked = 0, feasible = 0;
    for (int len = 1; len <= 2; ++len) {
        for (const auto& w : all_words(d.kbar, len)) {
            const ConeSystem c = sigma_cone(d, w);
            const auto x = planar::witness(c);
            if (x) EXPECT_TRUE(c.contains(*x));
            EXPECT_EQ(x.has_value(), circle_hits(c)) << to_string(w);
            ++checked;
            feasible += x.has_value();
        }
    }
    EXPECT_EQ(checked, 420);
    EXPECT_GT(feasible, 0);
}

TEST(PlanarDecision, ArcAlgebra) {
    planar::ArcSet a, b;
    planar::push_wrapped(a, -0.5, 0.5);
    ASSERT_EQ(a.arcs.size(), 2u);
    std::sort(a.arcs.begin(), a.arcs.end());
    planar::push_wrapped(b, 0.25, 1.0);
    const auto c = planar::intersect(a, b);
    ASSERT_EQ(c.arcs.size(), 1u);
    EXPECT_DOUBLE_EQ(c.arcs[0].first, 0.25);
    EXPECT_DOUBLE_EQ(c.arcs[0].second, 0.5);
    EXPECT_TRUE(planar::atom_arcs({-Matrix::Identity(2, 2), Sense::StrictPositive}).empty());
    EXPECT_EQ(planar::atom_arcs({-Matrix::Identity(2, 2), Sense::NonPositive}).arcs.size(), 1u);
}

TEST(SpatialDecision, SoundAndCompleteAgainstSampling) {
    std::mt19937_64 rng(23);
    int sampled_feasible = 0, decided_feasible = 0;
    for (int t = 0; t < 150; ++t) {
        ConeSystem c;
        c.n = 3;
        const int atoms = 1 + t % 4;
        for (int i = 0; i < atoms; ++i)
            c.constraints.push_back({random_symmetric(3, rng), i % 2 ? Sense::NonPositive : Sense::StrictPositive});
        const auto x = spherical::witness(c);
        const bool hit = sphere_hits(c, 40000);
        if (x) EXPECT_TRUE(c.contains(*x)) << t;
        if (hit) EXPECT_TRUE(x.has_value()) << t;
        sampled_feasible += hit;
        decided_feasible += x.has_value();
    }
    EXPECT_GT(sampled_feasible, 20);
    EXPECT_LT(sampled_feasible, 150);
    EXPECT_GE(decided_feasible, sampled_feasible);
}

TEST(SpatialDecision, OnPetcWords) {
    const auto d = discretize(saist::testing::spatial_system(0.5));
    for (int len = 1; len <= 2; ++len) {
        for (const auto& w : all_words(8, len)) {
            const ConeSystem c = sigma_cone(d, w);
            const auto x = spherical::witness(c);
            if (x) EXPECT_TRUE(c.contains(*x));
            if (sphere_hits(c, 20000)) EXPECT_TRUE(x.has_value()) << to_string(w);
        }
    }
}

TEST(Sampling, WitnessHasPositiveMargin) {
    const auto d = discretize(planar_system(0.4));
    const auto v = sample_feasible(sigma_cone(d, {5, 5}), SamplingBudget{});
    ASSERT_EQ(v.status, Feasibility::Feasible);
    EXPECT_GT(v.margin, 1e-9);
    EXPECT_TRUE(sigma_cone(d, {5, 5}).contains(v.witness));
    EXPECT_THROW(sample_feasible(sigma_cone(d, {5}), SamplingBudget{0, 1, 1e-9}), InvalidSystem);
}

TEST(Sampling, ExactPolicyNeedsSolver) {
    ConeSystem c;
    c.n = 4;
    c.constraints.push_back({-Matrix::Identity(4, 4), Sense::StrictPositive});
    EXPECT_EQ(feasible(c, {}, Policy::Conservative).status, Feasibility::Unknown);
    EXPECT_THROW(feasible(c, {}, Policy::ExactRequired), SolverUnavailable);
    OracleOptions o;
    o.mode = OracleMode::Exact;
    EXPECT_THROW(ConeOracle(discretize(planar_system(0.3)), o), SolverUnavailable);
}

TEST(Sampling, Deterministic) {
    const auto d = discretize(saist::testing::spatial_system(0.5));
    const auto c = sigma_cone(d, {3, 4, 3});
    const auto a = sample_feasible(c, {}), b = sample_feasible(c, {});
    EXPECT_EQ(a.status, b.status);
    EXPECT_EQ(a.witness, b.witness);
}

TEST(ConeOracle, TripleOneIsDisproved) {
    ConeOracle oracle(discretize(planar_system(0.3)), {});
    EXPECT_EQ(oracle.query({1, 1, 1}).status, Feasibility::Infeasible);
    EXPECT_TRUE(oracle.cached({1, 1}));
}

TEST(ConeOracle, PrefixMonotone) {
    const auto d = discretize(planar_system(0.3));
    ConeOracle oracle(d, {});
    int infeasible = 0;
    for (const auto& w : all_words(d.kbar, 2)) {
        if (oracle.query(w).admits()) continue;
        ++infeasible;
        for (int k = 1; k <= d.kbar; ++k)
            EXPECT_EQ(decide_cone(sigma_cone(d, concat(w, k)), {}, Policy::Conservative).status,
                      Feasibility::Infeasible);
    }
    EXPECT_GT(infeasible, 0);
}

TEST(ConeOracle, IncrementalAgreesWithOneShot) {
    const auto d = discretize(planar_system(0.2));
    ConeOracle oracle(d, {});
    auto words = all_words(d.kbar, 2);
    const auto batch = oracle.query_batch(words);
    for (std::size_t i = 0; i < words.size(); ++i)
        EXPECT_EQ(batch[i].status, decide_cone(sigma_cone(d, words[i]), {}, Policy::Conservative).status)
            << to_string(words[i]);
}

TEST(ConeOracle, WorkerCountDoesNotChangeVerdicts) {
    const auto d = discretize(saist::testing::spatial_system(0.8));
    OracleOptions one, four;
    four.workers = 4;
    ConeOracle a(d, one), b(d, four);
    const auto words = all_words(6, 2);
    const auto va = a.query_batch(words), vb = b.query_batch(words);
    for (std::size_t i = 0; i < words.size(); ++i) {
        EXPECT_EQ(va[i].status, vb[i].status);
        EXPECT_EQ(va[i].witness, vb[i].witness);
    }
    EXPECT_EQ(a.stats().queries, b.stats().queries);
}

TEST(ExternalSolver, RoundTripModelSatisfiesCone) {
    if (!z3_available()) GTEST_SKIP() << "z3 not on PATH";
    const auto d = discretize(planar_system(0.3));
    SmtSolver solver(z3_config());
    ConeOracle planar_oracle(d, {});
    for (const Word& w : build_l_complete(planar_oracle, 2).states) {
        const ConeSystem c = sigma_cone(d, w);
        const auto v = external_feasible(c, solver);
        ASSERT_EQ(v.status, Feasibility::Feasible) << to_string(w);
        for (const auto& a : c.constraints) {
            if (a.sense == Sense::StrictPositive) EXPECT_GT(a.margin(v.witness), 0.0);
            else EXPECT_GE(a.margin(v.witness), -1e-12);
        }
    }
    EXPECT_EQ(external_feasible(sigma_cone(d, {1, 1, 1}), solver).status, Feasibility::Infeasible);
}

TEST(ExternalSolver, DigitsDoNotChangeVerdicts) {
    if (!z3_available()) GTEST_SKIP() << "z3 not on PATH";
    const auto d = discretize(planar_system(0.4));
    // States of the l-complete models up to l = 4 plus their near-boundary extensions.
    ConeOracle planar_oracle(d, {});
    std::vector<Word> words;
    for (int l = 1; l <= 4; ++l)
        for (const auto& w : build_l_complete(planar_oracle, l).states) {
            words.push_back(w);
            for (int dk : {-1, 1}) {
                const int k = w.back() + dk;
                if (k >= 1 && k <= d.kbar) words.push_back(concat(w, k));
            }
        }
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    SmtSolver s15(z3_config(15)), s16(z3_config(16));
    int mismatches = 0, disagree_planar = 0;
    for (const auto& w : words) {
        const ConeSystem c = sigma_cone(d, w);
        const auto a = external_feasible(c, s15).status, b = external_feasible(c, s16).status;
        mismatches += a != b;
        disagree_planar += a != planar_oracle.query(w).status;
    }
    EXPECT_EQ(mismatches, 0);
    EXPECT_EQ(disagree_planar, 0);
    EXPECT_LE(words.back().size(), 5u);
}

TEST(ExternalSolver, ExactOracleMatchesPlanarAbstraction) {
    if (!z3_available()) GTEST_SKIP() << "z3 not on PATH";
    const auto d = discretize(planar_system(0.3));
    OracleOptions exact;
    exact.mode = OracleMode::Exact;
    exact.solver = z3_config();
    exact.workers = 4;
    ConeOracle z(d, exact), p(d, {});
    EXPECT_EQ(build_l_complete(z, 2).states, build_l_complete(p, 2).states);
    EXPECT_GT(z.stats().by_external, 0);
}
