#include <brep/kernels.hpp>

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

} // namespace

TEST(KernelSpec, ValidatesParameters) {
    EXPECT_THROW(KernelSpec::gaussian(0.0), DomainError);
    EXPECT_THROW(KernelSpec::laplacian(-1.0), DomainError);
    EXPECT_THROW(KernelSpec::polynomial(0, 1.0), DomainError);
    EXPECT_THROW(KernelSpec::polynomial(2, -1.0), DomainError);
    EXPECT_NO_THROW(KernelSpec::linear());
}

TEST(Gram, GaussianSinglePoint) {
    EXPECT_EQ(gram(KernelSpec::gaussian(1.0), points1d({0.7})), Mat::Ones(1, 1));
}

TEST(Gram, GaussianDuplicatePointsRankOne) {
    const Mat g = gram(KernelSpec::gaussian(1.0), points1d({0.3, 0.3}));
    EXPECT_EQ(g, Mat::Ones(2, 2));
}

TEST(Gram, LaplacianTwoPoints) {
    const Mat g = gram(KernelSpec::laplacian(1.0), points1d({0.0, 1.0}));
    Mat expect(2, 2);
    expect << 1.0, std::exp(-1.0), std::exp(-1.0), 1.0;
    EXPECT_NEAR((g - expect).norm(), 0.0, 1e-16);
}

TEST(Gram, EmptyPointSetRejected) { EXPECT_THROW(gram(KernelSpec::linear(), Mat(0, 2)), DomainError); }

TEST(Gram, SymmetricPsdForAllFamilies) {
    std::mt19937_64 rng(3);
    const Mat pts = random_normal(12, 3, rng);
    for (const auto &k : {KernelSpec::gaussian(0.7), KernelSpec::laplacian(1.3), KernelSpec::polynomial(3, 1.0),
                          KernelSpec::linear()}) {
        const Mat g = gram(k, pts);
        EXPECT_EQ(g, g.transpose());
        Eigen::SelfAdjointEigenSolver<Mat> es(g);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9 * es.eigenvalues().cwiseAbs().maxCoeff()) << k.describe();
        const Vec a = random_normal(12, rng);
        EXPECT_GE(expansion_norm_sq(g, a), -1e-9 * g.norm() * a.squaredNorm());
    }
}

TEST(MultiKernel, WeightsAndLinearity) {
    EXPECT_THROW(multi_kernel({KernelSpec::linear()}, Vec::Constant(1, -1.0)), DomainError);
    std::mt19937_64 rng(4);
    const Mat pts = random_normal(7, 2, rng);
    const std::vector<KernelSpec> ks{KernelSpec::gaussian(1.0), KernelSpec::laplacian(0.5),
                                     KernelSpec::polynomial(2, 0.5)};
    Vec w(3);
    w << 0.2, 1.7, 0.05;
    const Mat lhs = gram(multi_kernel(ks, w), pts);
    Mat rhs = Mat::Zero(7, 7);
    for (int n = 0; n < 3; ++n)
        rhs += w(n) * gram(ks[n], pts);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-15 * rhs.cwiseAbs().maxCoeff() * 4);

    // alpha = (1, 0) reproduces kernel 1
    Vec e1(2);
    e1 << 1.0, 0.0;
    const auto mk = multi_kernel({ks[0], ks[1]}, e1);
    EXPECT_EQ(gram(mk, pts), gram(ks[0], pts));

    // convex combination of two Gaussians at x = y
    Vec half(2);
    half << 0.5, 0.5;
    const auto g2 = multi_kernel({KernelSpec::gaussian(1.0), KernelSpec::gaussian(2.0)}, half);
    const Vec x = pts.row(0).transpose();
    EXPECT_DOUBLE_EQ(g2(x, x), 1.0);
}

TEST(Predict, Examples) {
    KernelModel one{{KernelSpec::gaussian(1.0)}, Vec::Ones(1), points1d({0.4}), Vec::Ones(1)};
    EXPECT_DOUBLE_EQ(predict(one, Vec::Constant(1, 0.4)), 1.0);

    KernelModel zero{{KernelSpec::laplacian(1.0)}, Vec::Ones(1), points1d({0.0, 1.0}), Vec::Zero(2)};
    EXPECT_EQ(predict(zero, Vec::Constant(1, 0.3)), 0.0);

    Vec a(2);
    a << 1.0, -1.0;
    KernelModel lap{{KernelSpec::laplacian(1.0)}, Vec::Ones(1), points1d({0.0, 1.0}), a};
    EXPECT_NEAR(predict(lap, Vec::Zero(1)), 1.0 - std::exp(-1.0), 1e-16);

    EXPECT_THROW(predict(lap, Vec::Zero(2)), DimensionError);
}

TEST(Predict, ReproducesGramOnCenters) {
    std::mt19937_64 rng(5);
    const Mat pts = random_normal(6, 2, rng);
    const std::vector<KernelSpec> ks{KernelSpec::gaussian(0.8), KernelSpec::polynomial(2, 1.0)};
    Vec w(2);
    w << 0.3, 1.1;
    const Vec a = random_normal(6, rng);
    KernelModel m{ks, w, pts, a};
    const Vec on_centers = (w(0) * gram(ks[0], pts) + w(1) * gram(ks[1], pts)) * a;
    for (Eigen::Index i = 0; i < 6; ++i)
        EXPECT_NEAR(predict(m, pts.row(i).transpose()), on_centers(i), 1e-13);
}

TEST(KernelModel, ValidateCatchesShapeErrors) {
    KernelModel bad{{KernelSpec::linear()}, Vec::Ones(2), Mat::Zero(3, 1), Vec::Zero(3)};
    EXPECT_THROW(bad.validate(), DimensionError);
    KernelModel neg{{KernelSpec::linear()}, Vec::Constant(1, -1.0), Mat::Zero(3, 1), Vec::Zero(3)};
    EXPECT_THROW(neg.validate(), DomainError);
}
