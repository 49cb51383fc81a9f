#pragma once

// Multi-component kernel regression with squared loss:
//
//   min_{f = f_1 + ... + f_N}  sum_m (y_m - f(x_m))^2 + Reg(||f_1||_H1, ..., ||f_N||_HN)
//
// with Reg = sum_n lambda_n ||f_n||^2 (weighted l2 outer norm, closed form) or
// Reg = lambda (sum_n ||f_n||)^2 (l1 outer norm, kernel selection over the
// simplex). Both return f = sum_m a_m sum_n alpha_n r_n(., x_m).

#include <brep/error.hpp>
#include <brep/kernels.hpp>
#include <brep/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace brep {

enum class OuterNormKind { weighted_l2, l1 };

struct MultiKernelProblem {
    Mat points; ///< x_m as rows
    Vec y;
    std::vector<KernelSpec> kernels;
    OuterNormKind outer = OuterNormKind::weighted_l2;
    Vec lambdas;       ///< weighted_l2: one lambda per kernel
    double lambda = 1; ///< l1

    static MultiKernelProblem weighted_l2(Mat points, Vec y, std::vector<KernelSpec> kernels, Vec lambdas) {
        MultiKernelProblem p{std::move(points), std::move(y), std::move(kernels), OuterNormKind::weighted_l2,
                             std::move(lambdas), 1.0};
        require_same_size(static_cast<Eigen::Index>(p.kernels.size()), p.lambdas.size(),
                          "weighted_l2 kernels/lambdas");
        for (Eigen::Index i = 0; i < p.lambdas.size(); ++i)
            if (!(p.lambdas(i) > 0.0))
                throw DomainError("regularization weights must be > 0");
        p.validate();
        return p;
    }

    static MultiKernelProblem l1(Mat points, Vec y, std::vector<KernelSpec> kernels, double lambda) {
        MultiKernelProblem p{std::move(points), std::move(y), std::move(kernels), OuterNormKind::l1, Vec(),
                             lambda};
        if (!(lambda > 0.0))
            throw DomainError("regularization weight must be > 0");
        p.validate();
        return p;
    }

    void validate() const {
        if (points.rows() < 1)
            throw DomainError("need at least one data point");
        require_same_size(points.rows(), y.size(), "data points/observations");
        if (kernels.empty())
            throw DomainError("need at least one kernel");
    }

    std::vector<Mat> grams() const {
        std::vector<Mat> g;
        g.reserve(kernels.size());
        for (const auto &k : kernels)
            g.push_back(gram(k, points));
        return g;
    }
};

struct MultiKernelFit {
    KernelModel model;
    double objective = 0.0;
    double gradient_norm = 0.0;  ///< weighted_l2: ||grad_a|| at the solution
    double condition = 1.0;      ///< cond(R + I)
    bool ridge_added = false;
    bool converged = true;
    int iterations = 0;
    std::vector<double> objective_history; ///< l1 solver: objective per outer iteration
};

/// ||f_{0,n}||_{H_n} = alpha_n sqrt(a^T G_n a), Grams taken at the model centers.
inline Vec component_norms(const KernelModel &model) {
    model.validate();
    Vec out(model.num_components());
    for (Eigen::Index n = 0; n < model.num_components(); ++n) {
        const Mat g = gram(model.kernels[n], model.centers);
        out(n) = model.combo_weights(n) * std::sqrt(std::max(0.0, expansion_norm_sq(g, model.coefficients)));
    }
    return out;
}

/// Objective of the original (function-space) problem at a fitted model whose
/// centers are the data points.
inline double multikernel_objective(const KernelModel &model, const MultiKernelProblem &problem) {
    const auto grams = problem.grams();
    Vec fitted = Vec::Zero(problem.y.size());
    Vec norms(model.num_components());
    for (Eigen::Index n = 0; n < model.num_components(); ++n) {
        const Vec gn_a = grams[n] * model.coefficients;
        fitted += model.combo_weights(n) * gn_a;
        norms(n) = model.combo_weights(n) * std::sqrt(std::max(0.0, model.coefficients.dot(gn_a)));
    }
    const double loss = (problem.y - fitted).squaredNorm();
    if (problem.outer == OuterNormKind::weighted_l2)
        return loss + problem.lambdas.dot(norms.cwiseAbs2());
    return loss + problem.lambda * norms.sum() * norms.sum();
}

/// Closed form for the weighted-l2 outer norm: alpha_n = 1/lambda_n,
/// R = sum_n G_n / lambda_n, (R + I) a = y.
inline MultiKernelFit fit_weighted_l2(const MultiKernelProblem &problem) {
    if (problem.outer != OuterNormKind::weighted_l2)
        throw DomainError("fit_weighted_l2 requires a weighted-l2 outer norm");
    const auto grams = problem.grams();
    const Eigen::Index m = problem.y.size();
    const Vec alpha = problem.lambdas.cwiseInverse();
    Mat r = Mat::Zero(m, m);
    for (std::size_t n = 0; n < grams.size(); ++n)
        r += alpha(static_cast<Eigen::Index>(n)) * grams[n];

    MultiKernelFit fit;
    Mat sys = r + Mat::Identity(m, m);
    fit.condition = condition_number(sys);
    if (fit.condition > max_condition_number) {
        r += 1e-10 * Mat::Identity(m, m);
        sys = r + Mat::Identity(m, m);
        fit.ridge_added = true;
    }
    const Vec a = sys.ldlt().solve(problem.y);
    fit.model = KernelModel{problem.kernels, alpha, problem.points, a};
    // grad of ||y - R a||^2 + a^T R a is 2 R ((R + I) a - y)
    fit.gradient_norm = (2.0 * r * (sys * a - problem.y)).norm();
    fit.objective = multikernel_objective(fit.model, problem);
    return fit;
}

namespace detail {

/// Euclidean projection onto the probability simplex (sort-based).
inline Vec project_simplex(const Vec &v) {
    const Eigen::Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0;
    double theta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        css += u[j];
        const double t = (css - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0)
            theta = t;
    }
    return (v.array() - theta).cwiseMax(0.0);
}

struct SimplexEval {
    double value;
    Vec a;
    Vec grad;
};

// J(alpha) = y^T (R_alpha + I)^{-1} y, R_alpha = sum_n alpha_n G_n / lambda.
inline SimplexEval simplex_objective(const std::vector<Mat> &grams, const Vec &y, const Vec &alpha,
                                     double lambda) {
    const Eigen::Index m = y.size();
    Mat sys = Mat::Identity(m, m);
    for (std::size_t n = 0; n < grams.size(); ++n)
        sys += (alpha(static_cast<Eigen::Index>(n)) / lambda) * grams[n];
    SimplexEval e;
    e.a = sys.ldlt().solve(y);
    e.value = y.dot(e.a);
    e.grad.resize(static_cast<Eigen::Index>(grams.size()));
    for (std::size_t n = 0; n < grams.size(); ++n)
        e.grad(static_cast<Eigen::Index>(n)) = -e.a.dot(grams[n] * e.a) / lambda;
    return e;
}

} // namespace detail

/// l1 outer norm, lambda (sum_n ||f_n||)^2. Uses the variational identity
/// (sum_n t_n)^2 = min_{alpha in simplex} sum_n t_n^2 / alpha_n, alternating
/// the closed-form coefficients for fixed alpha with a projected gradient step
/// on alpha. Returned combo weights lie on the simplex; coefficients carry 1/lambda.
inline MultiKernelFit fit_l1_multikernel(const MultiKernelProblem &problem, int max_iter = 5000,
                                         double tol = 1e-8, std::uint64_t seed = 0) {
    if (problem.outer != OuterNormKind::l1)
        throw DomainError("fit_l1_multikernel requires an l1 outer norm");
    const auto grams = problem.grams();
    const auto n = static_cast<Eigen::Index>(grams.size());
    const double lambda = problem.lambda;

    Vec alpha = Vec::Constant(n, 1.0 / static_cast<double>(n));
    if (seed != 0 && n > 1) {
        std::mt19937_64 rng(seed);
        std::exponential_distribution<double> ex(1.0);
        for (Eigen::Index i = 0; i < n; ++i)
            alpha(i) = ex(rng);
        alpha /= alpha.sum();
    }

    MultiKernelFit fit;
    auto cur = detail::simplex_objective(grams, problem.y, alpha, lambda);
    fit.objective_history.push_back(cur.value);
    double step = 1.0;
    {
        const double gmax = cur.grad.cwiseAbs().maxCoeff();
        if (gmax > 0.0)
            step = 1.0 / gmax;
    }
    fit.converged = (n == 1);
    int it = 0;
    for (; it < max_iter && n > 1; ++it) {
        Vec next_alpha;
        detail::SimplexEval next;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            next_alpha = detail::project_simplex(alpha - step * cur.grad);
            next = detail::simplex_objective(grams, problem.y, next_alpha, lambda);
            const Vec d = next_alpha - alpha;
            if (next.value <= cur.value + cur.grad.dot(d) + d.squaredNorm() / (2.0 * step)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted || next.value > cur.value) {
            fit.converged = true; // no further descent possible at working precision
            break;
        }
        const double improvement = cur.value - next.value;
        const double moved = (next_alpha - alpha).norm();
        alpha = next_alpha;
        cur = std::move(next);
        fit.objective_history.push_back(cur.value);
        if (improvement <= tol * std::max(1.0, std::abs(cur.value)) && moved <= std::sqrt(tol)) {
            fit.converged = true;
            ++it;
            break;
        }
        step *= 2.0;
    }
    fit.iterations = it;
    fit.model = KernelModel{problem.kernels, alpha, problem.points, cur.a / lambda};
    fit.objective = multikernel_objective(fit.model, problem);
    return fit;
}

} // namespace brep
