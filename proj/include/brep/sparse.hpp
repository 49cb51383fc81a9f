#pragma once

// Sparse recovery over a union of dictionaries.
//
//   analysis:  min_{x_1..x_I} ||y - H sum_i x_i||^2 + lambda sum_i ||L_i x_i||_1
//   synthesis: min_c          ||y - H U c||^2       + lambda ||c||_1,  U = [L_1^{-1} | ... | L_I^{-1}]
//
// Loss is unnormalized, so every threshold is lambda / 2.

#include <brep/error.hpp>
#include <brep/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace brep {

inline Vec soft_threshold(const Vec &v, double t) {
    return v.array().sign() * (v.array().abs() - t).cwiseMax(0.0);
}

struct SparseSolution {
    Vec c;
    std::vector<Eigen::Index> support;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<Vec> components; ///< x_i = L_i^{-1} c_i when solved from a DictionaryProblem
};

inline std::vector<Eigen::Index> support_of(const Vec &c) {
    std::vector<Eigen::Index> s;
    for (Eigen::Index j = 0; j < c.size(); ++j)
        if (c(j) != 0.0)
            s.push_back(j);
    return s;
}

inline double lasso_objective(const Mat &a, const Vec &y, double lambda, const Vec &c) {
    return (y - a * c).squaredNorm() + lambda * c.lpNorm<1>();
}

/// Max violation of 0 in 2 A^T (A c - y) + lambda d||c||_1.
inline double lasso_kkt_residual(const Mat &a, const Vec &y, double lambda, const Vec &c) {
    const Vec g = 2.0 * a.transpose() * (a * c - y);
    double r = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        if (c(j) != 0.0)
            r = std::max(r, std::abs(g(j) + lambda * (c(j) > 0 ? 1.0 : -1.0)));
        else
            r = std::max(r, std::abs(g(j)) - lambda);
    }
    return std::max(r, 0.0);
}

/// Certificate threshold for the LASSO KKT residual.
inline double lasso_kkt_tolerance(double lambda) { return 1e-6 * (1.0 + lambda); }

namespace detail {

// Equality-constrained refinement on a fixed support and sign pattern:
// 2 A_S^T A_S c_S = 2 A_S^T y - lambda s. Accepted only if it keeps the signs
// and lowers the KKT residual.
inline bool polish_support(const Mat &a, const Vec &y, double lambda, Vec &c) {
    const auto s = support_of(c);
    if (s.empty() || static_cast<Eigen::Index>(s.size()) > a.rows())
        return false;
    const auto k = static_cast<Eigen::Index>(s.size());
    Mat as(a.rows(), k);
    Vec sg(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        as.col(j) = a.col(s[j]);
        sg(j) = c(s[j]) > 0 ? 1.0 : -1.0;
    }
    const Mat gram = as.transpose() * as;
    if (condition_number(gram) > max_condition_number)
        return false;
    const Vec cs = gram.ldlt().solve(as.transpose() * y - 0.5 * lambda * sg);
    Vec cand = Vec::Zero(c.size());
    for (Eigen::Index j = 0; j < k; ++j) {
        if (cs(j) * sg(j) <= 0.0)
            return false;
        cand(s[j]) = cs(j);
    }
    const double before = lasso_kkt_residual(a, y, lambda, c);
    const double after = lasso_kkt_residual(a, y, lambda, cand);
    if (after > before)
        return false;
    if (lasso_objective(a, y, lambda, cand) > lasso_objective(a, y, lambda, c) + 1e-14 * (1.0 + y.squaredNorm()))
        return false;
    c = cand;
    return true;
}

} // namespace detail

/// min ||y - A c||^2 + lambda ||c||_1 by FISTA with backtracking and adaptive
/// restart, then a support polish. Stops once the KKT residual falls below tol.
inline SparseSolution solve_synthesis_lasso(const Mat &a, const Vec &y, double lambda, int max_iter = 100000,
                                            double tol = 1e-11) {
    if (!(lambda > 0.0))
        throw DomainError("lasso: lambda must be > 0");
    require_same_size(a.rows(), y.size(), "lasso A/y");
    const Eigen::Index n = a.cols();
    SparseSolution sol;
    sol.c = Vec::Zero(n);

    const Vec aty = a.transpose() * y;
    const Mat ata = a.transpose() * a;
    auto smooth = [&](const Vec &c) { return (y - a * c).squaredNorm(); };
    auto grad = [&](const Vec &c) -> Vec { return 2.0 * (ata * c - aty); };

    const double kkt_target = tol * (1.0 + lambda);
    if (n == 0 || 2.0 * aty.cwiseAbs().maxCoeff() <= lambda) {
        sol.converged = true; // zero is optimal
    } else {
        const double lip0 = 2.0 * spectral_norm_sq(a, 50);
        double step = lip0 > 0.0 ? 1.0 / lip0 : 1.0;
        Vec x = sol.c;
        Vec z = x;
        double t = 1.0;
        double fx = smooth(x) + lambda * x.lpNorm<1>();
        int it = 0;
        for (; it < max_iter; ++it) {
            const Vec gz = grad(z);
            const double fz = smooth(z);
            Vec xn;
            for (int bt = 0; bt < 60; ++bt) {
                xn = soft_threshold(z - step * gz, step * lambda);
                const Vec d = xn - z;
                if (smooth(xn) <= fz + gz.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-15 * (1.0 + fz))
                    break;
                step *= 0.5;
            }
            const double fxn = smooth(xn) + lambda * xn.lpNorm<1>();
            if (fxn > fx) {
                // restart momentum from the last accepted point
                t = 1.0;
                z = x;
                continue;
            }
            const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            z = xn + ((t - 1.0) / tn) * (xn - x);
            x = std::move(xn);
            fx = fxn;
            t = tn;
            if (it % 10 == 0 && lasso_kkt_residual(a, y, lambda, x) <= kkt_target)
                break;
            if (it % 50 == 49) {
                Vec trial = x;
                if (detail::polish_support(a, y, lambda, trial) &&
                    lasso_kkt_residual(a, y, lambda, trial) <= kkt_target) {
                    x = std::move(trial);
                    break;
                }
            }
        }
        sol.iterations = it;
        sol.c = x;
        detail::polish_support(a, y, lambda, sol.c);
    }
    sol.support = support_of(sol.c);
    sol.objective = lasso_objective(a, y, lambda, sol.c);
    sol.kkt_residual = lasso_kkt_residual(a, y, lambda, sol.c);
    sol.converged = sol.kkt_residual <= lasso_kkt_tolerance(lambda);
    return sol;
}

struct DictionaryProblem {
    Mat h;                   ///< M x N
    Vec y;                   ///< M
    std::vector<Mat> transforms; ///< invertible N x N
    double lambda = 1.0;

    void validate() const {
        require_same_size(h.rows(), y.size(), "dictionary H/y");
        if (transforms.empty())
            throw DomainError("dictionary: need at least one transform");
        if (!(lambda > 0.0))
            throw DomainError("dictionary: lambda must be > 0");
        for (std::size_t i = 0; i < transforms.size(); ++i) {
            const std::string name = "transform " + std::to_string(i + 1);
            if (transforms[i].rows() != h.cols() || transforms[i].cols() != h.cols())
                throw DimensionError(name + " must be " + std::to_string(h.cols()) + "x" +
                                     std::to_string(h.cols()));
        }
    }
};

/// U = [L_1^{-1} | ... | L_I^{-1}]. Throws "transform i singular" (1-based).
inline Mat build_union_dictionary(const std::vector<Mat> &transforms) {
    if (transforms.empty())
        throw DomainError("union dictionary: no transforms");
    const Eigen::Index n = transforms.front().rows();
    Mat u(n, n * static_cast<Eigen::Index>(transforms.size()));
    for (std::size_t i = 0; i < transforms.size(); ++i) {
        if (transforms[i].rows() != n || transforms[i].cols() != n)
            throw DimensionError("transform " + std::to_string(i + 1) + " must be " + std::to_string(n) + "x" +
                                 std::to_string(n));
        u.middleCols(static_cast<Eigen::Index>(i) * n, n) =
            checked_inverse(transforms[i], "transform " + std::to_string(i + 1));
    }
    return u;
}

/// Lower-bidiagonal first difference (x_1, x_2 - x_1, ..., x_N - x_{N-1}).
inline Mat forward_difference(Eigen::Index n) {
    Mat d = Mat::Identity(n, n);
    for (Eigen::Index i = 1; i < n; ++i)
        d(i, i - 1) = -1.0;
    return d;
}

/// Splits synthesis coefficients into components x_i = L_i^{-1} c_i.
inline std::vector<Vec> synthesis_components(const Mat &dictionary, Eigen::Index n, const Vec &c) {
    require_same_size(dictionary.cols(), c.size(), "dictionary/coefficients");
    std::vector<Vec> xs;
    for (Eigen::Index i = 0; i * n < c.size(); ++i)
        xs.push_back(dictionary.middleCols(i * n, n) * c.segment(i * n, n));
    return xs;
}

inline double analysis_objective(const DictionaryProblem &problem, const std::vector<Vec> &components) {
    problem.validate();
    require_same_size(static_cast<Eigen::Index>(problem.transforms.size()),
                      static_cast<Eigen::Index>(components.size()), "analysis components");
    Vec sum = Vec::Zero(problem.h.cols());
    double reg = 0.0;
    for (std::size_t i = 0; i < components.size(); ++i) {
        require_same_size(problem.h.cols(), components[i].size(), "analysis component");
        sum += components[i];
        reg += (problem.transforms[i] * components[i]).lpNorm<1>();
    }
    return (problem.y - problem.h * sum).squaredNorm() + problem.lambda * reg;
}

/// Synthesis route: LASSO on A = H U, components mapped back through L_i^{-1}.
inline SparseSolution solve_dictionary(const DictionaryProblem &problem, int max_iter = 100000,
                                       double tol = 1e-11) {
    problem.validate();
    const Mat u = build_union_dictionary(problem.transforms);
    SparseSolution sol = solve_synthesis_lasso(problem.h * u, problem.y, problem.lambda, max_iter, tol);
    sol.components = synthesis_components(u, problem.h.cols(), sol.c);
    return sol;
}

struct AnalysisSolution {
    std::vector<Vec> components;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Analysis route, working on x directly: ADMM on the splitting z = blockdiag(L_i) x.
inline AnalysisSolution solve_analysis_admm(const DictionaryProblem &problem, int max_iter = 200000,
                                            double tol = 1e-12, double rho = 1.0) {
    problem.validate();
    const Eigen::Index n = problem.h.cols();
    const auto ni = static_cast<Eigen::Index>(problem.transforms.size());
    Mat b(problem.h.rows(), n * ni);
    Mat l = Mat::Zero(n * ni, n * ni);
    for (Eigen::Index i = 0; i < ni; ++i) {
        b.middleCols(i * n, n) = problem.h;
        l.block(i * n, i * n, n, n) = problem.transforms[static_cast<std::size_t>(i)];
    }
    // x-update system is singular-free: L is invertible.
    const Eigen::LDLT<Mat> sys(2.0 * b.transpose() * b + rho * l.transpose() * l);
    const Vec bty2 = 2.0 * b.transpose() * problem.y;
    Vec x = Vec::Zero(n * ni);
    Vec z = Vec::Zero(n * ni);
    Vec w = Vec::Zero(n * ni);
    AnalysisSolution out;
    int it = 0;
    for (; it < max_iter; ++it) {
        x = sys.solve(bty2 + rho * l.transpose() * (z - w));
        const Vec lx = l * x;
        const Vec zn = soft_threshold(lx + w, problem.lambda / rho);
        w += lx - zn;
        const double primal = (lx - zn).norm();
        const double dual = rho * (zn - z).norm();
        z = zn;
        if (primal <= tol * (1.0 + lx.norm()) && dual <= tol * (1.0 + rho * w.norm())) {
            out.converged = true;
            ++it;
            break;
        }
    }
    // Report the feasible point x_i = L_i^{-1} z_i (exactly sparse in analysis coefficients).
    for (Eigen::Index i = 0; i < ni; ++i)
        out.components.push_back(
            problem.transforms[static_cast<std::size_t>(i)].fullPivLu().solve(z.segment(i * n, n)));
    const double obj_z = analysis_objective(problem, out.components);
    std::vector<Vec> xs;
    for (Eigen::Index i = 0; i < ni; ++i)
        xs.push_back(x.segment(i * n, n));
    const double obj_x = analysis_objective(problem, xs);
    if (obj_x < obj_z)
        out.components = std::move(xs);
    out.objective = std::min(obj_x, obj_z);
    out.iterations = it;
    return out;
}

/// Moves c within {c' : A c' = A c} without increasing ||c'||_1 until the
/// support columns of A are linearly independent, so |support| <= rank(A).
/// Each step follows a null-space direction d of A_S with sign(c_S)^T d = 0,
/// falling back to the orientation with sign(c_S)^T d < 0 when no balanced
/// direction exists, and zeroes the first coefficient that reaches zero
/// (smallest index on ties).
inline Vec reduce_to_extreme(const Mat &a, const Vec &c, double tol = 1e-10) {
    require_same_size(a.cols(), c.size(), "reduce_to_extreme A/c");
    Vec cur = c;
    for (Eigen::Index guard = 0; guard <= c.size(); ++guard) {
        const auto s = support_of(cur);
        const auto k = static_cast<Eigen::Index>(s.size());
        if (k == 0)
            break;
        Mat as(a.rows(), k);
        Vec sg(k);
        for (Eigen::Index j = 0; j < k; ++j) {
            as.col(j) = a.col(s[j]);
            sg(j) = cur(s[j]) > 0 ? 1.0 : -1.0;
        }
        const Mat ns = null_space(as, tol);
        if (ns.cols() == 0)
            break;
        Vec d;
        const Vec wts = ns.transpose() * sg;
        if (ns.cols() >= 2) {
            const double wn = wts.norm();
            const Mat perp = wn > 0.0 ? orthogonal_complement(wts / wn) : Mat::Identity(ns.cols(), ns.cols());
            d = ns * perp.col(0);
        } else {
            d = ns.col(0);
        }
        d /= d.norm();
        const double slope = sg.dot(d);
        if (std::abs(slope) > tol) {
            if (slope > 0.0)
                d = -d; // fallback: strictly decreasing orientation
        } else {
            Eigen::Index imax = 0;
            d.cwiseAbs().maxCoeff(&imax);
            if (d(imax) < 0.0)
                d = -d;
        }
        // first coefficient driven to zero along +d
        double tstar = std::numeric_limits<double>::infinity();
        Eigen::Index jstar = -1;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double cj = cur(s[j]);
            if (cj * d(j) < 0.0) {
                const double tj = -cj / d(j);
                if (tj < tstar * (1.0 - 1e-12)) {
                    tstar = tj;
                    jstar = j;
                }
            }
        }
        if (jstar < 0) {
            // d preserves every sign: go the other way instead
            d = -d;
            for (Eigen::Index j = 0; j < k; ++j) {
                const double cj = cur(s[j]);
                if (cj * d(j) < 0.0) {
                    const double tj = -cj / d(j);
                    if (tj < tstar * (1.0 - 1e-12)) {
                        tstar = tj;
                        jstar = j;
                    }
                }
            }
        }
        if (jstar < 0)
            break;
        for (Eigen::Index j = 0; j < k; ++j)
            cur(s[j]) += tstar * d(j);
        cur(s[jstar]) = 0.0;
    }
    return cur;
}

struct MixedSolution {
    Vec x1;
    Vec x2;
    Vec c1; ///< L1 x1
    double objective = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline double mixed_objective(const Mat &h, const Mat &l1, const Mat &l2, const Vec &y, double lambda1,
                              double lambda2, const Vec &x1, const Vec &x2) {
    return (y - h * (x1 + x2)).squaredNorm() + lambda1 * (l1 * x1).lpNorm<1>() +
           lambda2 * (l2 * x2).squaredNorm();
}

/// min ||y - H (x1 + x2)||^2 + lambda1 ||L1 x1||_1 + lambda2 ||L2 x2||_2^2.
/// For fixed c1 = L1 x1 the quadratic block has the closed form
/// x2 = K^{-1} H^T (y - H L1^{-1} c1), K = H^T H + lambda2 L2^T L2; substituting
/// it leaves a LASSO in c1 with the loss weighted by Q = I - H K^{-1} H^T.
inline MixedSolution solve_mixed_two_component(const Mat &h, const Mat &l1, const Mat &l2, const Vec &y,
                                               double lambda1, double lambda2, int max_iter = 100000,
                                               double tol = 1e-11) {
    require_same_size(h.rows(), y.size(), "mixed H/y");
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
        throw DomainError("mixed: lambdas must be > 0");
    const Mat u1 = checked_inverse(l1, "transform 1");
    if (l2.rows() != h.cols() || l2.cols() != h.cols())
        throw DimensionError("transform 2 has the wrong shape");
    if (condition_number(l2) > max_condition_number)
        throw SingularMatrixError("transform 2 singular");

    const Eigen::LDLT<Mat> kfac(h.transpose() * h + lambda2 * l2.transpose() * l2);
    const Eigen::Index m = h.rows();
    const Mat q = Mat::Identity(m, m) - h * kfac.solve(h.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (q + q.transpose()));
    const Mat qhalf =
        es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();

    const Mat a = h * u1;
    const SparseSolution inner = solve_synthesis_lasso(qhalf * a, qhalf * y, lambda1, max_iter, tol);

    MixedSolution out;
    out.c1 = inner.c;
    out.x1 = u1 * inner.c;
    out.x2 = kfac.solve(h.transpose() * (y - h * out.x1));
    out.kkt_residual = inner.kkt_residual;
    out.iterations = inner.iterations;
    out.converged = inner.converged;
    out.objective = mixed_objective(h, l1, l2, y, lambda1, lambda2, out.x1, out.x2);
    return out;
}

} // namespace brep
