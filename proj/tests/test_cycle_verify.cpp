#include "systems.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace saist;
using saist::testing::planar_system;

namespace {

// Two-mode system whose dominant eigenvector e1 sits on the zero set of x1 x2.
DiscretizedSystem boundary_fixture() {
    const Matrix M = (Matrix(2, 2) << 2, 0, 0, 0.5).finished();
    const Matrix N = (Matrix(2, 2) << 0, 1, 1, 0).finished();
    return DiscretizedSystem::from_matrices({M, M}, {N, N});
}

}  // namespace

TEST(CycleMatrix, EqualsStepwisePropagation) {
    const auto d = discretize(planar_system(0.3));
    const Vector x = (Vector(2) << 0.3, -1.2).finished();
    for (const Word& w : {Word{1, 2}, Word{2, 1}}) {
        Vector y = x;
        for (int k : w) y = d.transition(k) * y;
        EXPECT_LT((cycle_matrix(d, w) * x - y).norm(), 1e-14);
    }
    EXPECT_GT((cycle_matrix(d, {1, 2}) - cycle_matrix(d, {2, 1})).norm(), 1e-6);
    EXPECT_THROW(cycle_matrix(d, {}), InvalidSystem);
}

TEST(CycleMatrix, SingularIsReported) {
    const auto d = DiscretizedSystem::from_matrices({Matrix::Zero(2, 2)}, {Matrix::Identity(2, 2)});
    EXPECT_THROW(cycle_matrix(d, {1}), SingularCycleMatrix);
}

TEST(Eigen, MixedMatrixGivesLineAndPlane) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix J = Matrix::Zero(3, 3);
    J(0, 0) = 1.7;
    J.block(1, 1, 2, 2) << 0.6, -0.8, 0.8, 0.6;
    Matrix S(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) S(i, j) = g(rng);
    const Matrix M = S * J * S.inverse();
    const auto es = eigen_structure(M);
    EXPECT_TRUE(es.is_mixed);
    EXPECT_TRUE(es.is_irrational_rotations);
    EXPECT_NEAR(std::abs(es.eigenvalues.front()), 1.7, 1e-12);
    const auto subs = basic_invariant_subspaces(M);
    ASSERT_EQ(subs.size(), 2u);
    EXPECT_EQ(subs[0].kind, InvariantSubspace::Kind::RealLine);
    EXPECT_EQ(subs[0].basis.cols(), 1);
    EXPECT_EQ(subs[1].kind, InvariantSubspace::Kind::ConjugatePlane);
    EXPECT_EQ(subs[1].basis.cols(), 2);
    for (const auto& s : subs) EXPECT_LT(invariance_residual(M, s.basis), 1e-10);
}

TEST(Eigen, FlagsAndDefects) {
    EXPECT_FALSE(eigen_structure(Matrix::Identity(2, 2) * 2.0).is_mixed);
    const Matrix quarter = (Matrix(2, 2) << 0, -1, 1, 0).finished();
    EXPECT_FALSE(eigen_structure(quarter).is_irrational_rotations);
    EXPECT_TRUE(rational_rotation(planar::kTwoPi / 4));
    EXPECT_TRUE(rational_rotation(planar::kTwoPi * 5 / 64));
    EXPECT_FALSE(rational_rotation(1.0));
    const Matrix jordan = (Matrix(2, 2) << 1, 1, 0, 1).finished();
    EXPECT_THROW(basic_invariant_subspaces(jordan), DefectiveMatrix);
}

TEST(Verify, FiveAndSixAtSigmaPointFour) {
    const auto d = discretize(planar_system(0.4));
    for (int k : {5, 6}) {
        const auto v = verify_cycle(d, {k});
        EXPECT_TRUE(v.verified) << k;
        EXPECT_TRUE(v.constructive_ok);
        EXPECT_EQ(v.power, 1);
    }
    EXPECT_FALSE(verify_cycle(d, {4}).verified);
}

TEST(Verify, SixSevenEightAtSigmaPointFive) {
    const auto d = discretize(planar_system(0.5));
    for (int k : {6, 7, 8}) EXPECT_TRUE(verify_cycle(d, {k}).verified) << k;
    EXPECT_FALSE(verify_cycle(d, {5}).verified);
    EXPECT_FALSE(verify_cycle(d, {9}).verified);
}

TEST(Verify, TrivialWithSingleLetter) {
    const auto d = discretize(planar_system(0.3, 1));
    const auto v = verify_cycle(d, {1});
    EXPECT_TRUE(v.verified);
    const auto r = regularity_check(d, {1}, 0.999);
    EXPECT_TRUE(r.regular);
    for (double x : r.distances) EXPECT_EQ(x, 1.0);
}

TEST(Verify, WitnessReplaysTwentyPeriods) {
    const auto d = discretize(planar_system(0.4));
    const auto v = verify_cycle(d, {5});
    ASSERT_TRUE(v.verified);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Vector x = subspace_point(v.witness, seed);
        EXPECT_TRUE(replay_matches(d, {5}, v.witness, x, 20));
        EXPECT_EQ(simulate_ists(d, x, 20), std::vector<int>(20, 5));
    }
    EXPECT_FALSE(replay_matches(d, {6}, v.witness, subspace_point(v.witness, 1), 1));
}

TEST(Verify, RotationClosure) {
    auto cfg = saist::testing::planar_config(0.2);
    const auto r = compute_saist(cfg);
    ASSERT_TRUE(r.verified());
    ASSERT_EQ(r.sac_word.size(), 27u);
    const auto d = discretize(cfg.system);
    Word w = r.sac_word;
    for (std::size_t i = 0; i < w.size(); ++i) {
        EXPECT_TRUE(verify_cycle(d, w).verified) << to_string(w);
        std::rotate(w.begin(), w.begin() + 1, w.end());
    }
}

TEST(Verify, InvariantUnderTriggerScaling) {
    auto s = planar_system(0.5);
    const auto d1 = discretize(s);
    s.Qtrig *= 1e3;
    const auto d2 = discretize(s);
    for (int k = 4; k <= 9; ++k) EXPECT_EQ(verify_cycle(d1, {k}).verified, verify_cycle(d2, {k}).verified) << k;
}

TEST(Verify, BoundaryEigenvectorIsMarginal) {
    const auto d = boundary_fixture();
    const auto v = verify_cycle(d, {2});
    ASSERT_TRUE(v.verified);
    EXPECT_LT(subspace_distance(v.witness, Vector::Unit(2, 0)), 1e-12);
    const auto r = regularity_check(d, {2}, 1e-6);
    EXPECT_FALSE(r.regular);
    ASSERT_FALSE(r.distances.empty());
    EXPECT_LT(*std::min_element(r.distances.begin(), r.distances.end()), 1e-12);
}

TEST(Distance, Examples) {
    const Matrix e1 = Vector::Unit(2, 0), e2 = Vector::Unit(2, 1);
    EXPECT_NEAR(subspace_distance(e1, e1), 0.0, 1e-15);
    EXPECT_NEAR(subspace_distance(e1, e2), 1.0, 1e-15);
    EXPECT_NEAR(subspace_distance(e1, (Vector(2) << 1, 1).finished()), 1.0 - std::sqrt(0.5), 1e-12);

    // Zero set of x1^2 - x2^2 is the diagonals, 45 degrees from e1.
    ConeSystem c;
    c.n = 2;
    c.constraints.push_back({(Matrix(2, 2) << 1, 0, 0, -1).finished(), Sense::StrictPositive});
    EXPECT_NEAR(normalized_distance(e1, c), 1.0 - std::cos(planar::kTwoPi / 8), 1e-12);
    // Definite atom: no zero set.
    ConeSystem pd;
    pd.n = 2;
    pd.constraints.push_back({Matrix::Identity(2, 2), Sense::StrictPositive});
    EXPECT_EQ(normalized_distance(e1, pd), 1.0);
    EXPECT_THROW(normalized_distance(Matrix::Zero(2, 1), c), RankDeficientBasis);
}

TEST(Regularity, SixAtSigmaPointFive) {
    const auto d = discretize(planar_system(0.5));
    const auto r = regularity_check(d, {6}, 1e-6);
    EXPECT_TRUE(r.regular) << (r.reasons.empty() ? "" : r.reasons.front());
}

TEST(Inflation, Examples) {
    ConeSystem c;
    c.n = 2;
    c.constraints.push_back({-Matrix::Identity(2, 2), Sense::StrictPositive});
    EXPECT_TRUE(epsilon_inflation_empty(c, 0.5));
    EXPECT_FALSE(epsilon_inflation_empty(c, 2.0));
    EXPECT_THROW(epsilon_inflation_empty(c, 0.0), InvalidSystem);
    const auto d = discretize(planar_system(0.3));
    EXPECT_TRUE(epsilon_inflation_empty(sigma_cone(d, {1, 1, 1}), 1e-8));
}
