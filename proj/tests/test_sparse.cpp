#include <brep/oracle.hpp>
#include <brep/sparse.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace brep;

namespace {

// Reference LASSO via exact coordinate descent.
Vec lasso_cd(const Mat &a, const Vec &y, double lambda) {
    return coordinate_descent(a, y, Mat(), Vec::Constant(a.cols(), lambda)).z;
}

} // namespace

TEST(SoftThreshold, Examples) {
    Vec v(4);
    v << 3.0, -0.5, 0.2, -2.0;
    Vec e(4);
    e << 2.0, 0.0, 0.0, -1.0;
    EXPECT_EQ(soft_threshold(v, 1.0), e);
}

TEST(UnionDictionary, IdentityAndDifference) {
    const Mat u = build_union_dictionary({Mat::Identity(3, 3)});
    EXPECT_EQ(u, Mat::Identity(3, 3));

    const Mat d = forward_difference(3);
    const Mat u2 = build_union_dictionary({Mat::Identity(3, 3), d});
    ASSERT_EQ(u2.cols(), 6);
    // inverse of the first difference is the cumulative sum
    Mat cumsum = Mat::Zero(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j <= i; ++j)
            cumsum(i, j) = 1.0;
    EXPECT_NEAR((u2.rightCols(3) - cumsum).norm(), 0.0, 1e-14);
}

TEST(UnionDictionary, SingularTransformIsNamed) {
    Mat sing = Mat::Identity(3, 3);
    sing(2, 2) = 0.0;
    try {
        build_union_dictionary({Mat::Identity(3, 3), sing});
        FAIL() << "expected a throw";
    } catch (const SingularMatrixError &e) {
        EXPECT_NE(std::string(e.what()).find("transform 2 singular"), std::string::npos) << e.what();
    }
}

TEST(Lasso, DeadzoneGivesZero) {
    std::mt19937_64 rng(1);
    const Mat a = random_normal(5, 8, rng);
    const Vec y = random_normal(5, rng);
    const double lambda = 2.0 * (a.transpose() * y).cwiseAbs().maxCoeff();
    const auto sol = solve_synthesis_lasso(a, y, lambda);
    EXPECT_EQ(sol.c, Vec::Zero(8));
    EXPECT_TRUE(sol.converged);
    EXPECT_TRUE(sol.support.empty());
}

TEST(Lasso, IdentityClosedForm) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        const Vec y = random_normal(6, rng);
        const double lambda = 0.8;
        const auto sol = solve_synthesis_lasso(Mat::Identity(6, 6), y, lambda);
        EXPECT_LE((sol.c - soft_threshold(y, lambda / 2.0)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Lasso, MatchesCoordinateDescentOracle) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 30; ++t) {
        const Mat a = random_normal(5, 8, rng);
        const Vec y = random_normal(5, rng);
        const double lambda = 0.1 + std::abs(random_normal(1, rng)(0));
        const auto sol = solve_synthesis_lasso(a, y, lambda);
        const Vec ref = lasso_cd(a, y, lambda);
        EXPECT_TRUE(sol.converged);
        EXPECT_LE(sol.kkt_residual, lasso_kkt_tolerance(lambda));
        EXPECT_NEAR(sol.objective, lasso_objective(a, y, lambda, ref), 1e-6 * (1.0 + sol.objective));
        EXPECT_LE(static_cast<Eigen::Index>(sol.support.size()), 5);
    }
}

TEST(Lasso, SubgradientOracleAgreesLoosely) {
    std::mt19937_64 rng(4);
    const Mat a = random_normal(5, 8, rng);
    const Vec y = random_normal(5, rng);
    const double lambda = 0.5;
    GenericConvexProblem pb;
    pb.dim = 8;
    pb.objective = [&](const Vec &c) { return lasso_objective(a, y, lambda, c); };
    pb.subgradient = [&](const Vec &c) {
        Vec s = c.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
        return Vec(2.0 * a.transpose() * (a * c - y) + lambda * s);
    };
    const auto orc = solve_generic(pb, 200000, 0);
    const auto sol = solve_synthesis_lasso(a, y, lambda);
    EXPECT_LE(sol.objective, orc.objective + 1e-9);
    EXPECT_LE(orc.objective - sol.objective, 1e-2 * (1.0 + sol.objective));
}

TEST(Lasso, IterationCapReportsNonConvergence) {
    std::mt19937_64 rng(5);
    const Mat a = random_normal(20, 40, rng);
    const Vec y = random_normal(20, rng);
    const auto sol = solve_synthesis_lasso(a, y, 0.01, 1);
    EXPECT_FALSE(sol.converged);
    EXPECT_TRUE(sol.c.allFinite());
}

TEST(Lasso, RejectsBadInput) {
    EXPECT_THROW(solve_synthesis_lasso(Mat::Identity(3, 3), Vec::Zero(2), 1.0), DimensionError);
    EXPECT_THROW(solve_synthesis_lasso(Mat::Identity(3, 3), Vec::Zero(3), 0.0), DomainError);
}

TEST(AnalysisObjective, Examples) {
    DictionaryProblem p{Mat::Identity(3, 3), Vec::Zero(3), {Mat::Identity(3, 3), forward_difference(3)}, 1.0};
    EXPECT_EQ(analysis_objective(p, {Vec::Zero(3), Vec::Zero(3)}), 0.0);
    Vec x1(3), x2(3);
    x1 << 1, 0, -2;
    x2 << 1, 1, 1;
    // data term ||-(x1 + x2)||^2 = 4 + 1 + 1; ||x1||_1 = 3; ||D x2||_1 = 1
    EXPECT_DOUBLE_EQ(analysis_objective(p, {x1, x2}), 6.0 + 3.0 + 1.0);
}

TEST(Dictionary, SynthesisEqualsAnalysis) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 10; ++t) {
        DictionaryProblem p;
        p.h = random_normal(6, 5, rng);
        p.y = random_normal(6, rng);
        p.transforms = {Mat::Identity(5, 5), forward_difference(5)};
        p.lambda = 0.3;
        const auto syn = solve_dictionary(p);
        const auto ana = solve_analysis_admm(p);
        const double obj_syn = analysis_objective(p, syn.components);
        EXPECT_NEAR(obj_syn, syn.objective, 1e-10 * (1.0 + obj_syn));
        EXPECT_NEAR(obj_syn, ana.objective, 1e-6 * (1.0 + obj_syn));
    }
}

TEST(ReduceToExtreme, TwoEqualColumns) {
    Mat a(1, 2);
    a << 1, 1;
    Vec c(2);
    c << 0.5, 0.5;
    const Vec r = reduce_to_extreme(a, c);
    EXPECT_EQ(support_of(r).size(), 1u);
    EXPECT_NEAR((a * r)(0), 1.0, 1e-14);
    EXPECT_NEAR(r.lpNorm<1>(), 1.0, 1e-14);
    EXPECT_EQ(reduce_to_extreme(a, c), r);
}

TEST(ReduceToExtreme, SimultaneousZerosAreExact) {
    // d = (-1, -1, 1) drives coefficients 0 and 1 to zero at the same step
    Mat a(2, 3);
    a << 1, 0, 1, 0, 1, 1;
    const Vec c = Vec::Constant(3, 0.5);
    const Vec r = reduce_to_extreme(a, c);
    Vec e(3);
    e << 0, 0, 1;
    EXPECT_LE((r - e).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(r(0), 0.0);
    EXPECT_LT(r.lpNorm<1>(), c.lpNorm<1>());
}

TEST(ReduceToExtreme, RandomInstancesPreserveEverything) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; ++t) {
        const Mat a = random_normal(3, 10, rng);
        const Vec y = random_normal(3, rng);
        const double lambda = 0.05;
        const Vec c = solve_synthesis_lasso(a, y, lambda).c;
        const Vec r = reduce_to_extreme(a, c);
        EXPECT_LE((a * r - a * c).norm(), 1e-9 * (1.0 + (a * c).norm()));
        EXPECT_LE(r.lpNorm<1>(), c.lpNorm<1>() + 1e-9);
        EXPECT_LE(static_cast<Eigen::Index>(support_of(r).size()), 3);
    }
}

TEST(ReduceToExtreme, DenseStartOnAFlatFace) {
    // Every column duplicated: a dense point with the same fit and l1 norm.
    std::mt19937_64 rng(8);
    for (int t = 0; t < 50; ++t) {
        const Mat base = random_normal(3, 5, rng);
        Mat a(3, 10);
        a << base, base;
        const Vec y = random_normal(3, rng);
        const Vec c0 = solve_synthesis_lasso(base, y, 0.1).c;
        Vec c(10);
        c << 0.5 * c0, 0.5 * c0;
        const Vec r = reduce_to_extreme(a, c);
        EXPECT_LE((a * r - a * c).norm(), 1e-9 * (1.0 + (a * c).norm()));
        EXPECT_LE(r.lpNorm<1>(), c.lpNorm<1>() + 1e-9);
        EXPECT_LE(static_cast<Eigen::Index>(support_of(r).size()), 3);
        EXPECT_NEAR(lasso_objective(a, y, 0.1, r), lasso_objective(a, y, 0.1, c), 1e-9);
    }
}

TEST(Mixed, LargeLambda2KillsSmoothPart) {
    std::mt19937_64 rng(9);
    const Mat h = random_normal(4, 6, rng);
    const Vec y = random_normal(4, rng);
    const auto sol =
        solve_mixed_two_component(h, Mat::Identity(6, 6), forward_difference(6), y, 0.2, 1e8);
    EXPECT_LE(sol.x2.norm(), 1e-6 * y.norm());
    // and x1 is then a plain LASSO
    const Vec ref = lasso_cd(h, y, 0.2);
    EXPECT_NEAR(lasso_objective(h, y, 0.2, sol.x1), lasso_objective(h, y, 0.2, ref), 1e-6);
}

TEST(Mixed, LargeLambda1GivesTikhonov) {
    std::mt19937_64 rng(10);
    const Mat h = random_normal(4, 6, rng);
    const Vec y = random_normal(4, rng);
    const Mat l2 = forward_difference(6);
    const double lambda2 = 0.7;
    const auto sol = solve_mixed_two_component(h, Mat::Identity(6, 6), l2, y, 1e6, lambda2);
    EXPECT_EQ(sol.x1, Vec::Zero(6));
    const Vec tik = (h.transpose() * h + lambda2 * l2.transpose() * l2).fullPivLu().solve(h.transpose() * y);
    EXPECT_LE((sol.x2 - tik).norm(), 1e-10 * (1.0 + tik.norm()));
}

TEST(Mixed, MatchesJointCoordinateDescent) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 10; ++t) {
        const Mat h = random_normal(4, 6, rng);
        const Vec y = random_normal(4, rng);
        const Mat l1 = Mat::Identity(6, 6);
        const Mat l2 = forward_difference(6);
        const double lambda1 = 0.3, lambda2 = 0.5;
        const auto sol = solve_mixed_two_component(h, l1, l2, y, lambda1, lambda2);
        EXPECT_TRUE(sol.converged);

        // joint variable z = (c1, x2): ||y - [H L1^{-1}, H] z||^2 + z^T Q z + lambda1 ||c1||_1
        Mat b(4, 12);
        b << h * l1.inverse(), h;
        Mat q = Mat::Zero(12, 12);
        q.bottomRightCorner(6, 6) = lambda2 * l2.transpose() * l2;
        Vec w = Vec::Zero(12);
        w.head(6).setConstant(lambda1);
        const auto cd = coordinate_descent(b, y, q, w);
        EXPECT_NEAR(sol.objective, cd.objective, 1e-5 * (1.0 + cd.objective));
        EXPECT_LE((sol.x2 - cd.z.tail(6)).norm(), 1e-4 * (1.0 + sol.x2.norm()));
    }
}

TEST(Mixed, SingularTransformsAreNamed) {
    Mat sing = Mat::Identity(3, 3);
    sing(0, 0) = 0.0;
    const Mat h = Mat::Identity(3, 3);
    const Vec y = Vec::Ones(3);
    try {
        solve_mixed_two_component(h, Mat::Identity(3, 3), sing, y, 1.0, 1.0);
        FAIL();
    } catch (const SingularMatrixError &e) {
        EXPECT_NE(std::string(e.what()).find("transform 2 singular"), std::string::npos);
    }
    EXPECT_THROW(solve_mixed_two_component(h, sing, Mat::Identity(3, 3), y, 1.0, 1.0), SingularMatrixError);
}
