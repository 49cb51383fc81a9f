#pragma once

// Semi-norm regularized fitting on a uniform grid. The regularizer ||L f||
// vanishes on a finite-dimensional null space spanned by the columns of P
// (constants for L = D, affine functions for L = D^2), which stays unpenalized.

#include <brep/error.hpp>
#include <brep/linalg.hpp>
#include <brep/sparse.hpp>

#include <optional>
#include <string>
#include <vector>

namespace brep {

/// Completion of the null-space measurements V = nu(P) to a basis [U | V] of
/// R^M, with dual basis [Utilde | Vtilde]^T = [U | V]^{-1}.
struct BiorthoSystem {
    Mat v;
    Mat u;
    Mat vtilde;
    Mat utilde;

    Eigen::Index measurements() const { return v.rows(); }
    Eigen::Index null_dim() const { return v.cols(); }

    /// max |[Utilde | Vtilde]^T [U | V] - I|
    double identity_error() const {
        const Eigen::Index m = measurements();
        Mat left(m, m), right(m, m);
        left << utilde, vtilde;
        right << u, v;
        return (left.transpose() * right - Mat::Identity(m, m)).cwiseAbs().maxCoeff();
    }
};

namespace detail {

inline void check_well_posed(const Mat &v) {
    if (v.cols() == 0)
        return;
    if (v.cols() > v.rows())
        throw WellPosednessError("null space of dimension " + std::to_string(v.cols()) + " cannot be determined by " +
                                 std::to_string(v.rows()) + " measurements; the inverse problem must be well-posed " +
                                 "over the null space of the regularizer");
    Eigen::JacobiSVD<Mat> svd(v);
    const auto &s = svd.singularValues();
    if (!(s(0) > 0.0) || !(s(s.size() - 1) > 1e-10 * s(0)))
        throw WellPosednessError("measurements of the null-space basis are rank deficient (rank " +
                                 std::to_string(numerical_rank(v)) + " < " + std::to_string(v.cols()) +
                                 "); the inverse problem must be well-posed over the null space of the regularizer");
}

} // namespace detail

/// Unpinned: U is the orthonormal complement of col(V), so Utilde = U and
/// Vtilde = V (V^T V)^{-1}. Pinned: Vtilde is prescribed (Vtilde^T V = I) and
/// U spans its orthogonal complement.
inline BiorthoSystem build_biortho(const Mat &v, const std::optional<Mat> &pinned_vtilde = std::nullopt) {
    detail::check_well_posed(v);
    const Eigen::Index m = v.rows();
    const Eigen::Index n0 = v.cols();
    BiorthoSystem sys;
    sys.v = v;
    if (n0 == 0) {
        sys.u = Mat::Identity(m, m);
        sys.utilde = Mat::Identity(m, m);
        sys.vtilde = Mat(m, 0);
        return sys;
    }
    const Mat w = orthogonal_complement(v);
    if (!pinned_vtilde) {
        sys.u = w;
        sys.utilde = w;
        sys.vtilde = v * (v.transpose() * v).inverse();
        return sys;
    }
    const Mat &vt = *pinned_vtilde;
    if (vt.rows() != m || vt.cols() != n0)
        throw DimensionError("pinned Vtilde must be " + std::to_string(m) + "x" + std::to_string(n0));
    if ((vt.transpose() * v - Mat::Identity(n0, n0)).cwiseAbs().maxCoeff() > 1e-10)
        throw DomainError("pinned Vtilde must satisfy Vtilde^T V = I");
    sys.vtilde = vt;
    sys.u = orthogonal_complement(vt);
    const Mat wtu = w.transpose() * sys.u;
    if (condition_number(wtu) > max_condition_number)
        throw SingularMatrixError("pinned Vtilde does not complete V to a basis");
    sys.utilde = w * wtu.transpose().inverse();
    return sys;
}

struct ReducedMeasurements {
    Mat nu_tilde;    ///< (M - N0) x G, annihilates the null space
    Mat pstar_tilde; ///< N0 x G
};

/// nu = U nu_tilde + V pstar_tilde.
inline ReducedMeasurements reduce_measurements(const Mat &nu, const BiorthoSystem &sys) {
    require_same_size(nu.rows(), sys.measurements(), "reduce_measurements nu/system");
    return {sys.utilde.transpose() * nu, sys.vtilde.transpose() * nu};
}

/// Basis p_n (columns of P, G x N0) with dual functionals p*_n (rows of
/// pstar, N0 x G), pstar P = I.
struct NullSpaceSystem {
    Mat p;
    Mat pstar;

    double biorthogonality_error() const {
        return (pstar * p - Mat::Identity(p.cols(), p.cols())).cwiseAbs().maxCoeff();
    }
};

/// Orthogonal projector onto span(P): pstar = (P^T P)^{-1} P^T.
inline NullSpaceSystem make_nullspace_system(const Mat &p) {
    detail::check_well_posed(p);
    return {p, (p.transpose() * p).ldlt().solve(p.transpose())};
}

/// Projector defined through the measurements: p*_n = (Vtilde^T nu)_n, V = nu P.
inline NullSpaceSystem make_nullspace_system(const Mat &p, const Mat &nu, const BiorthoSystem &sys) {
    require_same_size(nu.cols(), p.rows(), "null-space system nu/P");
    return {p, sys.vtilde.transpose() * nu};
}

/// b_n = <p*_n, f>.
inline Vec projector_coeffs(const Vec &f, const NullSpaceSystem &ns) {
    require_same_size(ns.pstar.cols(), f.size(), "projector_coeffs");
    return ns.pstar * f;
}

enum class DiffOperator { D, D2 };

inline Eigen::Index operator_order(DiffOperator op) { return op == DiffOperator::D ? 1 : 2; }

/// (G - k) x G finite difference of order k: (D f)_i = f_{i+1} - f_i.
inline Mat difference_matrix(Eigen::Index g, DiffOperator op) {
    const Eigen::Index k = operator_order(op);
    if (g <= k)
        throw DomainError("grid too small for the difference operator");
    Mat d = Mat::Zero(g - k, g);
    for (Eigen::Index i = 0; i < g - k; ++i) {
        if (k == 1) {
            d(i, i) = -1.0;
            d(i, i + 1) = 1.0;
        } else {
            d(i, i) = 1.0;
            d(i, i + 1) = -2.0;
            d(i, i + 2) = 1.0;
        }
    }
    return d;
}

/// Null space basis on the grid: [1] for D, [1, i] for D^2.
inline Mat nullspace_basis(Eigen::Index g, DiffOperator op) {
    Mat p(g, operator_order(op));
    p.col(0).setOnes();
    if (op == DiffOperator::D2)
        for (Eigen::Index i = 0; i < g; ++i)
            p(i, 1) = static_cast<double>(i);
    return p;
}

/// Green operator G x (G - k) with L G = I, anchored at the grid start: steps
/// for D, ramps for D^2.
inline Mat green_matrix(Eigen::Index g, DiffOperator op) {
    const Eigen::Index k = operator_order(op);
    if (g <= k)
        throw DomainError("grid too small for the difference operator");
    Mat gm = Mat::Zero(g, g - k);
    for (Eigen::Index j = 0; j < g - k; ++j)
        for (Eigen::Index i = j + 1; i < g; ++i)
            gm(i, j) = k == 1 ? 1.0 : static_cast<double>(i - j - 1);
    return gm;
}

/// Sampling matrix selecting grid points.
inline Mat sampling_matrix(Eigen::Index g, const std::vector<Eigen::Index> &samples) {
    Mat h = Mat::Zero(static_cast<Eigen::Index>(samples.size()), g);
    for (std::size_t m = 0; m < samples.size(); ++m) {
        if (samples[m] < 0 || samples[m] >= g)
            throw DomainError("sample index " + std::to_string(samples[m]) + " outside the grid");
        h(static_cast<Eigen::Index>(m), samples[m]) = 1.0;
    }
    return h;
}

struct SplineFit {
    Vec f;       ///< grid values
    Vec b;       ///< null-space coefficients
    Vec a;       ///< Hilbert fit: coefficients of the reduced kernel expansion
    Vec u;       ///< gTV fit: innovation L f
    std::vector<Eigen::Index> knots;
    double lambda = 0.0;
    double objective = 0.0;
    double residual = 0.0;     ///< Hilbert: normal-equation residual; gTV: KKT residual
    double data_misfit = 0.0;  ///< ||y - nu f||
    bool converged = true;
};

/// min ||y - nu f||^2 + lambda ||L f||_2^2 over grid functions f, with the
/// null space of L spanned by P. The minimizer is f = Phi a + P b where
/// Phi = K nu_tilde^T, K = (L^T L)^+, (nu_tilde K nu_tilde^T + lambda I) a = Utilde^T y.
inline SplineFit fit_hilbert_seminorm(const Mat &nu, const Vec &y, const Mat &p, const Mat &l, double lambda) {
    require_same_size(nu.rows(), y.size(), "hilbert nu/y");
    require_same_size(nu.cols(), p.rows(), "hilbert nu/P");
    require_same_size(nu.cols(), l.cols(), "hilbert nu/L");
    if (!(lambda > 0.0))
        throw DomainError("hilbert: lambda must be > 0");
    if ((l * p).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + l.cwiseAbs().maxCoeff() * p.cwiseAbs().maxCoeff()))
        throw DomainError("hilbert: P must span the null space of L");

    const BiorthoSystem sys = build_biortho(nu * p);
    const Mat k = psd_pseudo_inverse(l.transpose() * l);
    const auto red = reduce_measurements(nu, sys);
    const Mat phi = k * red.nu_tilde.transpose();
    const Eigen::Index mr = red.nu_tilde.rows();
    const Mat gt = red.nu_tilde * phi;

    SplineFit fit;
    fit.lambda = lambda;
    fit.a = (gt + lambda * Mat::Identity(mr, mr)).ldlt().solve(sys.utilde.transpose() * y);
    const Vec nphi_a = nu * (phi * fit.a);
    fit.b = sys.vtilde.transpose() * (y - nphi_a - lambda * (sys.utilde * fit.a));
    fit.f = phi * fit.a + p * fit.b;
    const Vec r = y - nu * fit.f;
    fit.data_misfit = r.norm();
    fit.objective = r.squaredNorm() + lambda * (l * fit.f).squaredNorm();
    fit.residual = (-2.0 * nu.transpose() * r + 2.0 * lambda * l.transpose() * (l * fit.f)).norm();
    fit.u = l * fit.f;
    return fit;
}

inline std::vector<Eigen::Index> detect_knots(const Vec &u) {
    std::vector<Eigen::Index> k;
    if (u.size() == 0)
        return k;
    const double thr = 1e-8 * std::max(1.0, u.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (std::abs(u(i)) > thr)
            k.push_back(i);
    return k;
}

/// min ||y - H f||^2 + lambda ||L f||_1, L in {D, D^2}, over grid functions of size g.
/// Parametrized as f = P b + G_L u; b is eliminated through the biorthogonal
/// reduction, the LASSO in u is solved and then reduced to an extreme point so
/// that at most M - N0 knots remain.
inline SplineFit fit_gtv_spline(Eigen::Index g, const Mat &h, const Vec &y, DiffOperator op, double lambda,
                                int max_iter = 100000, double tol = 1e-11) {
    require_same_size(h.rows(), y.size(), "gtv H/y");
    require_same_size(h.cols(), g, "gtv H/grid");
    if (!(lambda > 0.0))
        throw DomainError("gtv: lambda must be > 0");
    const Mat p = nullspace_basis(g, op);
    if (h.rows() <= p.cols())
        throw WellPosednessError("gtv: need more measurements than the null-space dimension " +
                                 std::to_string(p.cols()) + " for the problem to be well-posed");
    const Mat gl = green_matrix(g, op);
    const BiorthoSystem sys = build_biortho(h * p);
    const Mat hg = h * gl;
    const Mat a = sys.utilde.transpose() * hg;
    const Vec yr = sys.utilde.transpose() * y;

    const SparseSolution sol = solve_synthesis_lasso(a, yr, lambda, max_iter, tol);
    SplineFit fit;
    fit.lambda = lambda;
    fit.u = reduce_to_extreme(a, sol.c);
    fit.b = sys.vtilde.transpose() * (y - hg * fit.u);
    fit.f = p * fit.b + gl * fit.u;
    fit.knots = detect_knots(fit.u);
    const Vec r = y - h * fit.f;
    fit.data_misfit = r.norm();
    fit.objective = r.squaredNorm() + lambda * fit.u.lpNorm<1>();
    fit.residual = lasso_kkt_residual(a, yr, lambda, fit.u);
    fit.converged = sol.converged;
    return fit;
}

inline SplineFit fit_gtv_spline(Eigen::Index g, const std::vector<Eigen::Index> &samples, const Vec &y,
                                DiffOperator op, double lambda, int max_iter = 100000, double tol = 1e-11) {
    return fit_gtv_spline(g, sampling_matrix(g, samples), y, op, lambda, max_iter, tol);
}

} // namespace brep
