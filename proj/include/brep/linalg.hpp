#pragma once

#include <brep/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace brep {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Condition numbers above this are treated as singular.
inline constexpr double max_condition_number = 1e12;

/// 2-norm condition number via SVD. Returns +inf for a numerically zero matrix.
inline double condition_number(const Mat &a) {
    if (a.size() == 0)
        return 1.0;
    Eigen::JacobiSVD<Mat> svd(a);
    const auto &s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    if (smax == 0.0 || smin == 0.0)
        return std::numeric_limits<double>::infinity();
    return smax / smin;
}

/// Numerical rank: number of singular values above rel_tol * sigma_max.
inline Eigen::Index numerical_rank(const Mat &a, double rel_tol = 1e-10) {
    if (a.size() == 0)
        return 0;
    Eigen::JacobiSVD<Mat> svd(a);
    const auto &s = svd.singularValues();
    if (s(0) == 0.0)
        return 0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0))
            ++r;
    return r;
}

/// Inverse of a square matrix; throws SingularMatrixError when
/// cond(a) exceeds max_condition_number.
inline Mat checked_inverse(const Mat &a, const std::string &what = "matrix") {
    if (a.rows() != a.cols())
        throw DimensionError(what + " must be square");
    if (condition_number(a) > max_condition_number)
        throw SingularMatrixError(what + " singular");
    return a.fullPivLu().inverse();
}

/// Orthonormal basis of the orthogonal complement of col(a), a: m x k with
/// full column rank. Each basis column is signed so that its largest-magnitude
/// entry is positive; for a = leading canonical columns this returns exactly the
/// trailing canonical columns.
inline Mat orthogonal_complement(const Mat &a) {
    const Eigen::Index m = a.rows();
    const Eigen::Index k = a.cols();
    if (k == 0)
        return Mat::Identity(m, m);
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ() * Mat::Identity(m, m);
    Mat w = q.rightCols(m - k);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        Eigen::Index imax = 0;
        w.col(j).cwiseAbs().maxCoeff(&imax);
        if (w(imax, j) < 0)
            w.col(j) = -w.col(j);
        // Clean up rounding noise so canonical inputs map to canonical outputs.
        for (Eigen::Index i = 0; i < m; ++i)
            if (std::abs(w(i, j)) < 1e-15)
                w(i, j) = 0.0;
    }
    return w;
}

/// Orthonormal basis (columns) of the null space of a; rel_tol as in numerical_rank.
inline Mat null_space(const Mat &a, double rel_tol = 1e-10) {
    const Eigen::Index n = a.cols();
    if (a.rows() == 0)
        return Mat::Identity(n, n);
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
    const auto &s = svd.singularValues();
    Eigen::Index r = 0;
    if (s.size() > 0 && s(0) > 0.0)
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (s(i) > rel_tol * s(0))
                ++r;
    return svd.matrixV().rightCols(n - r);
}

/// Largest singular value squared, estimated by power iteration on a^T a.
inline double spectral_norm_sq(const Mat &a, int iterations = 50) {
    if (a.size() == 0)
        return 0.0;
    Vec v = Vec::Ones(a.cols()) / std::sqrt(static_cast<double>(a.cols()));
    double est = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vec w = a.transpose() * (a * v);
        const double nw = w.norm();
        if (nw == 0.0)
            return est;
        est = nw;
        v = w / nw;
    }
    return est;
}

/// Moore-Penrose pseudo-inverse of a symmetric positive-semidefinite matrix.
inline Mat psd_pseudo_inverse(const Mat &a, double rel_tol = 1e-10) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    const Vec &ev = es.eigenvalues();
    const double emax = ev.cwiseAbs().maxCoeff();
    Vec inv = Vec::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) > rel_tol * emax)
            inv(i) = 1.0 / ev(i);
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/// Standard-normal random vector.
inline Vec random_normal(Eigen::Index n, std::mt19937_64 &rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = nd(rng);
    return v;
}

/// Standard-normal random matrix.
inline Mat random_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            m(i, j) = nd(rng);
    return m;
}

inline void require_same_size(Eigen::Index a, Eigen::Index b, const char *what) {
    if (a != b)
        throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
}

} // namespace brep
