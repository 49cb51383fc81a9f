#pragma once

#include <brep/error.hpp>
#include <brep/linalg.hpp>

#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace brep {

/// exp(-||x - y||^2 / (2 sigma^2))
struct GaussianKernel {
    double width;
};
/// exp(-||x - y|| / scale)
struct LaplacianKernel {
    double scale;
};
/// (<x, y> + offset)^degree
struct PolynomialKernel {
    int degree;
    double offset;
};
/// <x, y>
struct LinearKernel {};

class KernelSpec {
  public:
    using Family = std::variant<GaussianKernel, LaplacianKernel, PolynomialKernel, LinearKernel>;

    static KernelSpec gaussian(double width) {
        if (!(width > 0.0) || !std::isfinite(width))
            throw DomainError("Gaussian kernel width must be > 0");
        return KernelSpec(GaussianKernel{width});
    }
    static KernelSpec laplacian(double scale) {
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw DomainError("Laplacian kernel scale must be > 0");
        return KernelSpec(LaplacianKernel{scale});
    }
    static KernelSpec polynomial(int degree, double offset) {
        if (degree < 1)
            throw DomainError("polynomial kernel degree must be >= 1");
        if (!(offset >= 0.0))
            throw DomainError("polynomial kernel offset must be >= 0");
        return KernelSpec(PolynomialKernel{degree, offset});
    }
    static KernelSpec linear() { return KernelSpec(LinearKernel{}); }

    template <class XExpr, class YExpr>
    double operator()(const XExpr &x, const YExpr &y) const {
        return std::visit(
            [&](const auto &k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, GaussianKernel>)
                    return std::exp(-(x - y).squaredNorm() / (2.0 * k.width * k.width));
                else if constexpr (std::is_same_v<K, LaplacianKernel>)
                    return std::exp(-(x - y).norm() / k.scale);
                else if constexpr (std::is_same_v<K, PolynomialKernel>)
                    return std::pow(x.dot(y) + k.offset, k.degree);
                else
                    return x.dot(y);
            },
            family_);
    }

    const Family &family() const { return family_; }

    std::string describe() const {
        return std::visit(
            [](const auto &k) -> std::string {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, GaussianKernel>)
                    return "gaussian:" + std::to_string(k.width);
                else if constexpr (std::is_same_v<K, LaplacianKernel>)
                    return "laplacian:" + std::to_string(k.scale);
                else if constexpr (std::is_same_v<K, PolynomialKernel>)
                    return "polynomial:" + std::to_string(k.degree) + ":" + std::to_string(k.offset);
                else
                    return "linear";
            },
            family_);
    }

  private:
    explicit KernelSpec(Family f) : family_(f) {}
    Family family_;
};

/// Nonnegative combination r(x, y) = sum_n alpha_n r_n(x, y).
struct MultiKernel {
    std::vector<KernelSpec> kernels;
    Vec weights;

    template <class XExpr, class YExpr>
    double operator()(const XExpr &x, const YExpr &y) const {
        double s = 0.0;
        for (std::size_t n = 0; n < kernels.size(); ++n)
            if (weights(n) != 0.0)
                s += weights(n) * kernels[n](x, y);
        return s;
    }
};

inline MultiKernel multi_kernel(std::vector<KernelSpec> kernels, Vec weights) {
    require_same_size(static_cast<Eigen::Index>(kernels.size()), weights.size(), "multi_kernel");
    for (Eigen::Index i = 0; i < weights.size(); ++i)
        if (!(weights(i) >= 0.0))
            throw DomainError("multi-kernel weights must be nonnegative");
    return MultiKernel{std::move(kernels), std::move(weights)};
}

namespace detail {

// Gram PSD tolerance: eigenvalues down to -1e-9 ||G|| count as rounding.
inline constexpr double gram_psd_tol = 1e-9;

inline void check_psd(const Mat &g) {
    if (g.rows() < 2)
        return;
    Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    if (lo < -gram_psd_tol * scale)
        throw DomainError("Gram matrix is not positive semidefinite (min eigenvalue " +
                          std::to_string(lo) + ")");
}

template <class Kernel>
Mat gram_impl(const Kernel &kernel, const Mat &points) {
    const Eigen::Index m = points.rows();
    Mat g(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel(points.row(i).transpose(), points.row(j).transpose());
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

} // namespace detail

/// Gram matrix [r(x_i, x_j)] of the points stored as rows. Checked PSD.
inline Mat gram(const KernelSpec &kernel, const Mat &points) {
    if (points.rows() == 0)
        throw DomainError("gram: empty point set");
    Mat g = detail::gram_impl(kernel, points);
    detail::check_psd(g);
    return g;
}

inline Mat gram(const MultiKernel &kernel, const Mat &points) {
    if (points.rows() == 0)
        throw DomainError("gram: empty point set");
    Mat g = Mat::Zero(points.rows(), points.rows());
    for (std::size_t n = 0; n < kernel.kernels.size(); ++n)
        if (kernel.weights(n) != 0.0)
            g += kernel.weights(n) * detail::gram_impl(kernel.kernels[n], points);
    detail::check_psd(g);
    return g;
}

/// Cross-kernel matrix [r(x_i, c_j)], x_i rows of `points`, c_j rows of `centers`.
inline Mat cross_gram(const KernelSpec &kernel, const Mat &points, const Mat &centers) {
    require_same_size(points.cols(), centers.cols(), "cross_gram");
    Mat k(points.rows(), centers.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        for (Eigen::Index j = 0; j < centers.rows(); ++j)
            k(i, j) = kernel(points.row(i).transpose(), centers.row(j).transpose());
    return k;
}

/// f(x) = sum_m a_m sum_n alpha_n r_n(x, x_m).
struct KernelModel {
    std::vector<KernelSpec> kernels;
    Vec combo_weights;
    Mat centers; ///< one center per row
    Vec coefficients;

    Eigen::Index input_dim() const { return centers.cols(); }
    Eigen::Index num_components() const { return static_cast<Eigen::Index>(kernels.size()); }

    void validate() const {
        require_same_size(static_cast<Eigen::Index>(kernels.size()), combo_weights.size(),
                          "KernelModel kernels/weights");
        require_same_size(centers.rows(), coefficients.size(), "KernelModel centers/coefficients");
        for (Eigen::Index i = 0; i < combo_weights.size(); ++i)
            if (!(combo_weights(i) >= 0.0))
                throw DomainError("KernelModel combination weights must be nonnegative");
    }
};

/// Per-component values f_n(x) = alpha_n sum_m a_m r_n(x, x_m).
inline Vec predict_components(const KernelModel &model, const Vec &x) {
    if (x.size() != model.input_dim())
        throw DimensionError("predict: input has dimension " + std::to_string(x.size()) +
                             ", model expects " + std::to_string(model.input_dim()));
    Vec out = Vec::Zero(model.num_components());
    for (Eigen::Index n = 0; n < model.num_components(); ++n) {
        if (model.combo_weights(n) == 0.0)
            continue;
        double s = 0.0;
        for (Eigen::Index m = 0; m < model.centers.rows(); ++m)
            s += model.coefficients(m) * model.kernels[n](x, model.centers.row(m).transpose());
        out(n) = model.combo_weights(n) * s;
    }
    return out;
}

inline double predict(const KernelModel &model, const Vec &x) {
    model.validate();
    return predict_components(model, x).sum();
}

/// Squared RKHS norm a^T G a of an expansion over the points of G.
inline double expansion_norm_sq(const Mat &gram_matrix, const Vec &a) { return a.dot(gram_matrix * a); }

} // namespace brep
