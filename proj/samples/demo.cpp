// Walk-through of the library on small synthetic problems.

#include <brep/brep.hpp>

#include <cstdio>
#include <random>

using namespace brep;

static void kernel_selection() {
    std::puts("== multi-kernel regression ==");
    std::mt19937_64 rng(1);
    const Eigen::Index m = 30;
    Mat x(m, 1);
    Vec y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        x(i, 0) = -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(m - 1);
        y(i) = std::sin(2.0 * x(i, 0)) + 0.05 * random_normal(1, rng)(0);
    }
    const std::vector<KernelSpec> ks{KernelSpec::gaussian(0.4), KernelSpec::linear(), KernelSpec::polynomial(3, 1.0)};

    const auto ridge = fit_weighted_l2(MultiKernelProblem::weighted_l2(x, y, ks, Vec::Constant(3, 0.5)));
    const Vec rn = component_norms(ridge.model);
    std::printf("weighted l2: objective %.6f, component norms %.4f %.4f %.4f\n", ridge.objective, rn(0), rn(1), rn(2));

    const auto sel = fit_l1_multikernel(MultiKernelProblem::l1(x, y, ks, 0.5));
    const Vec& w = sel.model.combo_weights;
    std::printf("l1 outer:    objective %.6f, simplex weights %.4f %.4f %.4f (%d iterations)\n", sel.objective, w(0),
                w(1), w(2), sel.iterations);
}

static void sparse_dictionary() {
    std::puts("== sparse recovery in a union of dictionaries ==");
    std::mt19937_64 rng(2);
    const Eigen::Index n = 16, m = 10;
    Vec spikes = Vec::Zero(n), steps = Vec::Zero(n);
    spikes(3) = 1.5;
    steps.tail(6).setConstant(-1.0);
    const Mat h = random_normal(m, n, rng) / std::sqrt(static_cast<double>(m));
    const Vec y = h * (spikes + steps);

    DictionaryProblem p{h, y, {Mat::Identity(n, n), forward_difference(n)}, 0.01};
    const auto sol = solve_dictionary(p);
    std::printf("support size %zu (<= %ld), kkt residual %.2e, converged %s\n", sol.support.size(),
                static_cast<long>(m), sol.kkt_residual, sol.converged ? "yes" : "no");
    const Mat u = build_union_dictionary(p.transforms);
    const Vec ext = reduce_to_extreme(h * u, sol.c);
    std::printf("after extreme-point reduction: support %zu, l1 norm %.6f -> %.6f\n", support_of(ext).size(),
                sol.c.lpNorm<1>(), ext.lpNorm<1>());
}

static void spline() {
    std::puts("== total-variation spline ==");
    const Eigen::Index g = 101;
    std::vector<Eigen::Index> samples;
    Vec y(9);
    for (Eigen::Index k = 0; k < 9; ++k) {
        samples.push_back(k * 12 + 2);
        const double t = static_cast<double>(samples.back()) / static_cast<double>(g - 1);
        y(k) = t < 0.5 ? t : 1.0 - t;
    }
    const auto fit = fit_gtv_spline(g, samples, y, DiffOperator::D2, 1e-3);
    std::printf("knots at grid points:");
    for (auto k : fit.knots)
        std::printf(" %ld", static_cast<long>(k + 1));
    std::printf("  (%zu <= %d)\n", fit.knots.size(), 9 - 2);
    std::printf("data misfit %.3e, objective %.6f\n", fit.data_misfit, fit.objective);
}

int main() {
    kernel_selection();
    sparse_dictionary();
    spline();
}
