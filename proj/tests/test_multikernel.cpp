#include <brep/multikernel.hpp>
#include <brep/norms.hpp>
#include <brep/oracle.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace brep;

namespace {

Mat points1d(std::initializer_list<double> xs) {
    Mat p(static_cast<Eigen::Index>(xs.size()), 1);
    Eigen::Index i = 0;
    for (double x : xs)
        p(i++, 0) = x;
    return p;
}

const std::vector<KernelSpec> &three_kernels() {
    static const std::vector<KernelSpec> ks{KernelSpec::gaussian(0.5), KernelSpec::laplacian(1.0),
                                            KernelSpec::polynomial(2, 1.0)};
    return ks;
}

// min ||y - sum_n G_n c_n||^2 + sum_n lambda_n c_n^T G_n c_n over c in R^{N M},
// solved by the generic oracle.
GenericResult weighted_l2_oracle(const std::vector<Mat> &g, const Vec &y, const Vec &lam, int iters) {
    const auto n = static_cast<Eigen::Index>(g.size());
    const Eigen::Index m = y.size();
    GenericConvexProblem pb;
    pb.dim = n * m;
    pb.smooth = true;
    pb.start = Vec::Zero(n * m);
    pb.objective = [&, n, m](const Vec &c) {
        Vec f = Vec::Zero(m);
        double reg = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            const Vec gc = g[k] * c.segment(k * m, m);
            f += gc;
            reg += lam(k) * c.segment(k * m, m).dot(gc);
        }
        return (y - f).squaredNorm() + reg;
    };
    pb.subgradient = [&, n, m](const Vec &c) {
        Vec f = Vec::Zero(m);
        for (Eigen::Index k = 0; k < n; ++k)
            f += g[k] * c.segment(k * m, m);
        Vec grad(n * m);
        for (Eigen::Index k = 0; k < n; ++k)
            grad.segment(k * m, m) = 2.0 * g[k] * (f - y + lam(k) * c.segment(k * m, m));
        return grad;
    };
    return solve_generic(pb, iters, 0);
}

} // namespace

TEST(WeightedL2, SinglePointClosedForm) {
    const auto p = MultiKernelProblem::weighted_l2(points1d({0.0}), Vec::Constant(1, 2.0), {KernelSpec::gaussian(1.0)},
                                                   Vec::Ones(1));
    const auto fit = fit_weighted_l2(p);
    EXPECT_NEAR(fit.model.coefficients(0), 1.0, 1e-15);
    EXPECT_NEAR(predict(fit.model, Vec::Zero(1)), 1.0, 1e-15);
}

TEST(WeightedL2, ZeroDataZeroModel) {
    std::mt19937_64 rng(1);
    const auto p = MultiKernelProblem::weighted_l2(random_normal(5, 2, rng), Vec::Zero(5), three_kernels(),
                                                   Vec::Ones(3));
    const auto fit = fit_weighted_l2(p);
    EXPECT_EQ(fit.model.coefficients, Vec::Zero(5));
    EXPECT_EQ(predict(fit.model, Vec::Ones(2)), 0.0);
}

TEST(WeightedL2, SingleKernelIsKernelRidge) {
    // Oracle: a' = (G + lambda I)^{-1} y is the usual ridge weight with f = G a'.
    std::mt19937_64 rng(2);
    const Mat x = random_normal(8, 1, rng);
    const Vec y = random_normal(8, rng);
    const double lambda = 0.37;
    const auto fit = fit_weighted_l2(
        MultiKernelProblem::weighted_l2(x, y, {KernelSpec::gaussian(0.6)}, Vec::Constant(1, lambda)));
    const Mat g = gram(KernelSpec::gaussian(0.6), x);
    const Vec ridge = lambda * (g + lambda * Mat::Identity(8, 8)).fullPivLu().solve(y);
    EXPECT_NEAR((fit.model.coefficients - ridge).norm(), 0.0, 1e-10 * (1.0 + ridge.norm()));
    EXPECT_DOUBLE_EQ(fit.model.combo_weights(0), 1.0 / lambda);
}

TEST(WeightedL2, GradientCertificate) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const Mat x = random_normal(10, 2, rng);
        const Vec y = random_normal(10, rng);
        const Vec lam = random_normal(3, rng).cwiseAbs().array() + 0.05;
        const auto fit = fit_weighted_l2(MultiKernelProblem::weighted_l2(x, y, three_kernels(), lam));
        EXPECT_LE(fit.gradient_norm, 1e-8 * (1.0 + y.norm()));
        EXPECT_FALSE(fit.ridge_added);
    }
}

TEST(WeightedL2, DuplicatedPointsAreHandled) {
    Mat x = points1d({0.1, 0.1, 0.5, 0.5, 0.9});
    Vec y(5);
    y << 1.0, 1.2, -0.3, -0.1, 0.4;
    const auto fit = fit_weighted_l2(MultiKernelProblem::weighted_l2(x, y, three_kernels(), Vec::Ones(3)));
    EXPECT_TRUE(fit.model.coefficients.allFinite());
    EXPECT_LE(fit.gradient_norm, 1e-8 * (1.0 + y.norm()));
}

TEST(WeightedL2, RepresenterSpanOracleMatchesOnGrid) {
    std::mt19937_64 rng(4);
    const Mat x = random_normal(6, 1, rng);
    const Vec y = random_normal(6, rng);
    Vec lam(3);
    lam << 0.5, 1.5, 0.8;
    const auto p = MultiKernelProblem::weighted_l2(x, y, three_kernels(), lam);
    const auto fit = fit_weighted_l2(p);
    const auto orc = weighted_l2_oracle(p.grams(), y, lam, 400000);
    EXPECT_NEAR(orc.objective, fit.objective, 1e-8 * (1.0 + fit.objective));
    double worst = 0.0, scale = 0.0;
    for (int i = 0; i <= 50; ++i) {
        Vec t = Vec::Constant(1, -2.5 + 5.0 * i / 50.0);
        double f_orc = 0.0;
        for (int n = 0; n < 3; ++n)
            for (int m = 0; m < 6; ++m)
                f_orc += orc.x(n * 6 + m) * three_kernels()[n](t, x.row(m).transpose());
        const double f_fit = predict(fit.model, t);
        worst = std::max(worst, std::abs(f_fit - f_orc));
        scale = std::max(scale, std::abs(f_fit));
    }
    EXPECT_LE(worst, 1e-6 * std::max(1.0, scale));
}

TEST(ComponentNorms, Examples) {
    KernelModel zero{three_kernels(), Vec::Ones(3), points1d({0.0, 1.0}), Vec::Zero(2)};
    EXPECT_EQ(component_norms(zero), Vec::Zero(3));
    // linear kernel at x = 2 has G = [4]
    KernelModel one{{KernelSpec::linear()}, Vec::Constant(1, 0.7), points1d({2.0}), Vec::Ones(1)};
    EXPECT_NEAR(component_norms(one)(0), 1.4, 1e-15);
}

TEST(ComponentNorms, AlphaIsNormOverConjugate) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const Mat x = random_normal(7, 1, rng);
        const Vec y = random_normal(7, rng);
        const Vec lam = random_normal(3, rng).cwiseAbs().array() + 0.1;
        const auto fit = fit_weighted_l2(MultiKernelProblem::weighted_l2(x, y, three_kernels(), lam));
        const Vec yn = component_norms(fit.model);
        const Vec ystar = duality_map(yn, NormSpec::weighted_euclidean(lam));
        for (int n = 0; n < 3; ++n)
            EXPECT_NEAR(fit.model.combo_weights(n), yn(n) / ystar(n), 1e-8);
    }
}

TEST(ScalingLambda, PenaltyNeverIncreases) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 50; ++t) {
        const Mat x = random_normal(8, 1, rng);
        const Vec y = random_normal(8, rng);
        const Vec lam = random_normal(3, rng).cwiseAbs().array() + 0.1;
        const Vec n1 = component_norms(fit_weighted_l2(MultiKernelProblem::weighted_l2(x, y, three_kernels(), lam)).model);
        for (double c : {1.5, 3.0, 10.0}) {
            const Vec n2 =
                component_norms(fit_weighted_l2(MultiKernelProblem::weighted_l2(x, y, three_kernels(), c * lam)).model);
            EXPECT_LE(lam.dot(n2.cwiseAbs2()), lam.dot(n1.cwiseAbs2()) * (1.0 + 1e-12));
        }
    }
}

TEST(ScalingLambda, SingleKernelNormNeverIncreases) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        const Mat x = random_normal(8, 1, rng);
        const Vec y = random_normal(8, rng);
        const Vec lam = Vec::Constant(1, std::abs(random_normal(1, rng)(0)) + 0.1);
        const std::vector<KernelSpec> k{KernelSpec::laplacian(0.7)};
        const double n1 = component_norms(fit_weighted_l2(MultiKernelProblem::weighted_l2(x, y, k, lam)).model)(0);
        const double n2 = component_norms(fit_weighted_l2(MultiKernelProblem::weighted_l2(x, y, k, 2.0 * lam)).model)(0);
        EXPECT_LE(n2, n1 * (1.0 + 1e-12));
    }
}

TEST(ScalingLambda, SingleComponentCanGrowWithSeveralKernels) {
    // Counterexample to per-component monotonicity for N > 1.
    std::mt19937_64 rng(37);
    std::uniform_int_distribution<int> msz(2, 10);
    const Eigen::Index m = msz(rng);
    const Mat x = random_normal(m, 1, rng);
    const Vec y = random_normal(m, rng);
    const Vec lam = random_normal(3, rng).cwiseAbs().array() + 0.1;
    const Vec n1 = component_norms(fit_weighted_l2(MultiKernelProblem::weighted_l2(x, y, three_kernels(), lam)).model);
    const Vec n2 =
        component_norms(fit_weighted_l2(MultiKernelProblem::weighted_l2(x, y, three_kernels(), 2.0 * lam)).model);
    EXPECT_GT(n2(2), n1(2) * 1.1);
    EXPECT_LT(lam.dot(n2.cwiseAbs2()), lam.dot(n1.cwiseAbs2()));
}

TEST(L1MultiKernel, SingleKernelSimplexIsAPoint) {
    std::mt19937_64 rng(8);
    const Mat x = random_normal(6, 1, rng);
    const Vec y = random_normal(6, rng);
    const auto fit = fit_l1_multikernel(MultiKernelProblem::l1(x, y, {KernelSpec::gaussian(0.8)}, 0.5));
    EXPECT_EQ(fit.model.combo_weights, Vec::Ones(1));
    EXPECT_TRUE(fit.converged);
    // then (sum ||f_n||)^2 = ||f||^2 and the fit is kernel ridge with weight lambda
    const auto ridge =
        fit_weighted_l2(MultiKernelProblem::weighted_l2(x, y, {KernelSpec::gaussian(0.8)}, Vec::Constant(1, 0.5)));
    for (int i = 0; i < 6; ++i) {
        const Vec t = x.row(i).transpose();
        EXPECT_NEAR(predict(fit.model, t), predict(ridge.model, t), 1e-12);
    }
}

TEST(L1MultiKernel, LargeLambdaShrinksToZero) {
    std::mt19937_64 rng(9);
    const Mat x = random_normal(6, 1, rng);
    const Vec y = random_normal(6, rng);
    const double lambda = std::max(1e6, 2.0 * y.squaredNorm());
    const auto fit = fit_l1_multikernel(MultiKernelProblem::l1(x, y, three_kernels(), lambda));
    EXPECT_LE(fit.model.coefficients.norm(), 1e-5 * y.norm());
    double fmax = 0.0;
    for (int i = 0; i < 6; ++i)
        fmax = std::max(fmax, std::abs(predict(fit.model, x.row(i).transpose())));
    EXPECT_LE(fmax, 1e-4 * y.norm());
}

TEST(L1MultiKernel, SelectsTheKernelThatExplainsTheData) {
    // Kernel 2 (linear) is blind to y because y is orthogonal to the inputs;
    // kernel 1 (narrow Gaussian, Gram close to I) fits y directly.
    const Mat x = points1d({-2, -1, 0, 1, 2});
    Vec y(5);
    y << 1, -1, 0, -1, 1;
    const std::vector<KernelSpec> ks{KernelSpec::gaussian(0.1), KernelSpec::linear()};
    const double lambda = 0.2;
    const auto p = MultiKernelProblem::l1(x, y, ks, lambda);
    const auto fit = fit_l1_multikernel(p);
    EXPECT_TRUE(fit.converged);
    EXPECT_LE(fit.model.combo_weights(1), 0.05);
    EXPECT_NEAR(fit.model.combo_weights.sum(), 1.0, 1e-12);

    // Oracle on the function-space objective over the span of both kernel sections.
    const auto g = p.grams();
    GenericConvexProblem pb;
    pb.dim = 10;
    pb.objective = [&](const Vec &c) {
        const Vec f = g[0] * c.head(5) + g[1] * c.tail(5);
        const double s = std::sqrt(std::max(0.0, c.head(5).dot(g[0] * c.head(5)))) +
                         std::sqrt(std::max(0.0, c.tail(5).dot(g[1] * c.tail(5))));
        return (y - f).squaredNorm() + lambda * s * s;
    };
    pb.subgradient = [&](const Vec &c) {
        const Vec f = g[0] * c.head(5) + g[1] * c.tail(5);
        const double n1 = std::sqrt(std::max(0.0, c.head(5).dot(g[0] * c.head(5))));
        const double n2 = std::sqrt(std::max(0.0, c.tail(5).dot(g[1] * c.tail(5))));
        Vec out(10);
        out.head(5) = -2.0 * g[0] * (y - f);
        out.tail(5) = -2.0 * g[1] * (y - f);
        if (n1 > 0)
            out.head(5) += 2.0 * lambda * (n1 + n2) * g[0] * c.head(5) / n1;
        if (n2 > 0)
            out.tail(5) += 2.0 * lambda * (n1 + n2) * g[1] * c.tail(5) / n2;
        return out;
    };
    const auto orc = solve_generic(pb, 200000, 1);
    EXPECT_LE(fit.objective, orc.objective + 1e-4);
}

TEST(L1MultiKernel, RandomInstancesBeatTheOracleAndDescend) {
    std::mt19937_64 rng(10);
    for (int t = 0; t < 5; ++t) {
        const Mat x = random_normal(5, 1, rng);
        const Vec y = random_normal(5, rng);
        const double lambda = 0.3;
        const auto p = MultiKernelProblem::l1(x, y, three_kernels(), lambda);
        const auto fit = fit_l1_multikernel(p);
        for (std::size_t k = 1; k < fit.objective_history.size(); ++k)
            EXPECT_LE(fit.objective_history[k], fit.objective_history[k - 1]);
        EXPECT_NEAR(fit.model.combo_weights.sum(), 1.0, 1e-12);
        EXPECT_GE(fit.model.combo_weights.minCoeff(), 0.0);

        const auto g = p.grams();
        GenericConvexProblem pb;
        pb.dim = 15;
        auto norms = [&](const Vec &c) {
            Vec s(3);
            for (int n = 0; n < 3; ++n)
                s(n) = std::sqrt(std::max(0.0, c.segment(5 * n, 5).dot(g[n] * c.segment(5 * n, 5))));
            return s;
        };
        pb.objective = [&](const Vec &c) {
            Vec f = Vec::Zero(5);
            for (int n = 0; n < 3; ++n)
                f += g[n] * c.segment(5 * n, 5);
            const double s = norms(c).sum();
            return (y - f).squaredNorm() + lambda * s * s;
        };
        pb.subgradient = [&](const Vec &c) {
            Vec f = Vec::Zero(5);
            for (int n = 0; n < 3; ++n)
                f += g[n] * c.segment(5 * n, 5);
            const Vec s = norms(c);
            Vec out(15);
            for (int n = 0; n < 3; ++n) {
                out.segment(5 * n, 5) = -2.0 * g[n] * (y - f);
                if (s(n) > 0)
                    out.segment(5 * n, 5) += 2.0 * lambda * s.sum() * g[n] * c.segment(5 * n, 5) / s(n);
            }
            return out;
        };
        const auto orc = solve_generic(pb, 200000, 2);
        EXPECT_LE(fit.objective, orc.objective + 1e-4);
    }
}

TEST(L1MultiKernel, NonConvergenceIsReportedNotThrown) {
    std::mt19937_64 rng(11);
    const Mat x = random_normal(6, 1, rng);
    const Vec y = random_normal(6, rng);
    MultiKernelFit fit;
    EXPECT_NO_THROW(fit = fit_l1_multikernel(MultiKernelProblem::l1(x, y, three_kernels(), 0.01), 1));
    EXPECT_EQ(fit.iterations, 1);
    EXPECT_TRUE(fit.model.coefficients.allFinite());
}

TEST(MultiKernelProblem, Validation) {
    EXPECT_THROW(MultiKernelProblem::weighted_l2(Mat(0, 1), Vec(0), three_kernels(), Vec::Ones(3)), DomainError);
    EXPECT_THROW(MultiKernelProblem::weighted_l2(Mat::Zero(2, 1), Vec::Zero(2), three_kernels(), Vec::Ones(2)),
                 DimensionError);
    EXPECT_THROW(MultiKernelProblem::weighted_l2(Mat::Zero(2, 1), Vec::Zero(2), three_kernels(), -Vec::Ones(3)),
                 DomainError);
    EXPECT_THROW(MultiKernelProblem::l1(Mat::Zero(2, 1), Vec::Zero(2), three_kernels(), 0.0), DomainError);
    const auto l1 = MultiKernelProblem::l1(Mat::Zero(2, 1), Vec::Zero(2), three_kernels(), 1.0);
    EXPECT_THROW(fit_weighted_l2(l1), DomainError);
}
