#pragma once

// Reference solvers and certifiers used to cross-check the specialized ones.
// They share no code with the solvers they check beyond norm evaluation.

#include <brep/error.hpp>
#include <brep/linalg.hpp>
#include <brep/norms.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace brep {

struct GenericConvexProblem {
    std::function<double(const Vec &)> objective;
    std::function<Vec(const Vec &)> subgradient;
    Eigen::Index dim = 0;
    std::optional<double> box;  ///< |x_i| <= box when set
    bool smooth = false;        ///< subgradient is the gradient of a C^1 objective
    std::optional<Vec> start;
};

struct GenericResult {
    Vec x;
    double objective = 0.0;
    int iterations = 0;
    std::vector<double> best_history; ///< running best, sampled every 1000 iterations
};

namespace detail {

inline Vec box_project(const Vec &x, const std::optional<double> &box) {
    if (!box)
        return x;
    return x.cwiseMax(-*box).cwiseMin(*box);
}

inline GenericResult solve_smooth(const GenericConvexProblem &pb, Vec x, int iterations) {
    GenericResult res;
    double fx = pb.objective(x);
    Vec z = x;
    double t = 1.0;
    double step = 1.0;
    res.x = x;
    res.objective = fx;
    int it = 0;
    for (; it < iterations; ++it) {
        const Vec g = pb.subgradient(z);
        const double fz = pb.objective(z);
        if (g.norm() <= 1e-15 * (1.0 + std::abs(fz)))
            break;
        Vec xn;
        double fxn = 0.0;
        for (int bt = 0; bt < 80; ++bt) {
            xn = box_project(z - step * g, pb.box);
            fxn = pb.objective(xn);
            const Vec d = xn - z;
            if (fxn <= fz + g.dot(d) + d.squaredNorm() / (2.0 * step))
                break;
            step *= 0.5;
        }
        if (fxn > fx) {
            t = 1.0;
            z = x;
            if ((xn - z).norm() == 0.0)
                break;
            continue;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = xn + ((t - 1.0) / tn) * (xn - x);
        const double moved = (xn - x).norm();
        x = std::move(xn);
        fx = fxn;
        t = tn;
        step *= 1.1;
        if (fx < res.objective) {
            res.objective = fx;
            res.x = x;
        }
        if (it % 1000 == 0)
            res.best_history.push_back(res.objective);
        if (moved <= 1e-16 * (1.0 + x.norm()) && t == 1.0)
            break;
    }
    res.iterations = it;
    res.best_history.push_back(res.objective);
    return res;
}

} // namespace detail

/// Subgradient method with step-weighted averaging and a running best
/// (accelerated gradient descent when the problem is flagged smooth).
/// The starting point is `start` or a seeded small random vector.
inline GenericResult solve_generic(const GenericConvexProblem &pb, int iterations, std::uint64_t seed = 0) {
    if (iterations < 1)
        throw DomainError("solve_generic: iterations must be >= 1");
    if (!pb.objective || !pb.subgradient)
        throw DomainError("solve_generic: objective and subgradient are required");
    Vec x;
    if (pb.start) {
        require_same_size(pb.dim, pb.start->size(), "solve_generic start");
        x = *pb.start;
    } else {
        std::mt19937_64 rng(seed);
        x = 1e-3 * random_normal(pb.dim, rng);
    }
    x = detail::box_project(x, pb.box);
    if (pb.smooth)
        return detail::solve_smooth(pb, std::move(x), iterations);

    GenericResult res;
    res.x = x;
    res.objective = pb.objective(x);
    const double scale = std::max(1.0, x.norm());
    Vec avg = x;
    double wsum = 0.0;
    for (int k = 0; k < iterations; ++k) {
        const Vec g = pb.subgradient(x);
        const double gn = g.norm();
        if (gn == 0.0)
            break;
        const double step = scale / std::sqrt(static_cast<double>(k) + 1.0);
        x = detail::box_project(x - (step / gn) * g, pb.box);
        wsum += step;
        avg += (step / wsum) * (x - avg);
        const double fx = pb.objective(x);
        if (fx < res.objective) {
            res.objective = fx;
            res.x = x;
        }
        if (k % 100 == 99) {
            const double fa = pb.objective(avg);
            if (fa < res.objective) {
                res.objective = fa;
                res.x = avg;
            }
        }
        if (k % 1000 == 0)
            res.best_history.push_back(res.objective);
        res.iterations = k + 1;
    }
    res.best_history.push_back(res.objective);
    return res;
}

struct CoordinateDescentResult {
    Vec z;
    double objective = 0.0;
    int sweeps = 0;
};

/// Exact coordinate minimization of ||y - B z||^2 + z^T Q z + sum_j w_j |z_j|
/// (Q symmetric PSD, w >= 0). Reference solver for LASSO-type problems.
inline CoordinateDescentResult coordinate_descent(const Mat &b, const Vec &y, const Mat &q, const Vec &w,
                                                  int max_sweeps = 200000, double tol = 1e-15) {
    require_same_size(b.rows(), y.size(), "coordinate_descent B/y");
    require_same_size(b.cols(), w.size(), "coordinate_descent B/w");
    const Eigen::Index n = b.cols();
    const bool has_q = q.size() > 0;
    Vec z = Vec::Zero(n);
    Vec r = y;
    Vec qz = Vec::Zero(n);
    Vec diag(n);
    for (Eigen::Index j = 0; j < n; ++j)
        diag(j) = b.col(j).squaredNorm() + (has_q ? q(j, j) : 0.0);
    CoordinateDescentResult out;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double change = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (diag(j) <= 0.0)
                continue;
            // half-gradient of the smooth part along j
            const double hg = -b.col(j).dot(r) + (has_q ? qz(j) : 0.0);
            const double v = z(j) - hg / diag(j);
            const double thr = 0.5 * w(j) / diag(j);
            const double nz = std::abs(v) > thr ? (v > 0 ? v - thr : v + thr) : 0.0;
            const double dz = nz - z(j);
            if (dz != 0.0) {
                r -= dz * b.col(j);
                if (has_q)
                    qz += dz * q.col(j);
                z(j) = nz;
                change = std::max(change, std::abs(dz));
            }
        }
        if (change <= tol * (1.0 + z.cwiseAbs().maxCoeff()))
            break;
    }
    out.z = z;
    out.sweeps = sweep;
    out.objective = (y - b * z).squaredNorm() + (has_q ? z.dot(q * z) : 0.0) + w.dot(z.cwiseAbs());
    return out;
}

/// Lower bound on the dual norm of x: max <x, u> / ||u|| over random directions
/// u plus the direction J_{X'}(x), which attains the supremum.
inline double brute_force_dual_norm(const Vec &x, const NormSpec &spec, int samples, std::uint64_t seed = 0) {
    if (x.size() > 8)
        throw DomainError("brute_force_dual_norm: dimension must be <= 8");
    std::mt19937_64 rng(seed);
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Vec u = random_normal(x.size(), rng);
        const double nu = norm_eval(u, spec);
        if (nu > 0.0)
            best = std::max(best, x.dot(u) / nu);
    }
    const Vec u = duality_map(x, dual_of(spec));
    const double nu = norm_eval(u, spec);
    if (nu > 0.0)
        best = std::max(best, x.dot(u) / nu);
    return best;
}

struct MembershipResult {
    bool is_member = false;
    double residual = 0.0;
};

/// Checks that J(f0), the duality image of f0 under the regularizer norm
/// `reg_spec`, lies in the row space of H. Returns the relative least-squares
/// residual. Only defined for strictly convex norms, where J is single-valued.
inline MembershipResult verify_representer_membership(const Vec &f0, const Mat &h, const NormSpec &reg_spec,
                                                       double tol) {
    require_same_size(h.cols(), f0.size(), "membership H/f0");
    if (!is_strictly_convex(reg_spec))
        throw UnsupportedError("representer membership needs a strictly convex norm; " + reg_spec.describe() +
                               " has a set-valued duality map, use the extremal-point characterization instead");
    MembershipResult out;
    const Vec nu0 = duality_map(f0, reg_spec);
    const double n0 = nu0.norm();
    if (n0 == 0.0) {
        out.is_member = true;
        return out;
    }
    const Mat ht = h.transpose();
    const Vec coef = ht.completeOrthogonalDecomposition().solve(nu0);
    out.residual = (nu0 - ht * coef).norm() / n0;
    out.is_member = out.residual <= tol;
    return out;
}

} // namespace brep
