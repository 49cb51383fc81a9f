#pragma once

// Finite-dimensional norms, their duals, duality mappings and extremal points.
//
// A NormSpec describes the norm of a space X over R^n. Every operation takes
// the vector together with the NormSpec of the space it lives in; the dual
// space X' is described by dual_of(spec). Supported families:
//
//   Lp(p)                    ||x||_p, 1 <= p <= inf
//   WeightedEuclidean(w)     (sum_i w_i x_i^2)^(1/2), w_i > 0
//   Transformed(base, L)     ||L x||_base, L square and invertible
//   Composite(X_1..X_N, Z)   ||(||x_1||_X1, ..., ||x_N||_XN)||_Z, Z absolute
//
// The duality mapping J_X sends x to the elements x* of X' with
// ||x*||_X' = ||x||_X and <x, x*> = ||x||_X ||x*||_X'. It is single-valued for
// strictly convex duals; otherwise a canonical member is returned and flagged.

#include <brep/error.hpp>
#include <brep/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace brep {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

class NormSpec;
using NormPtr = std::shared_ptr<const NormSpec>;

struct LpNorm {
    double p;
    Eigen::Index dim; ///< fixed dimension, or -1 for "any"
};

struct WeightedEuclideanNorm {
    Vec weights;
};

/// ||x|| = ||L x||_base.
struct TransformedNorm {
    NormPtr base;
    Mat transform;
    Mat inverse;
};

struct CompositeNorm {
    std::vector<NormPtr> components;
    NormPtr outer;
    std::vector<Eigen::Index> offsets; ///< start of each block; back() == total dim
};

class NormSpec {
  public:
    using Kind = std::variant<LpNorm, WeightedEuclideanNorm, TransformedNorm, CompositeNorm>;

    static NormSpec lp(double p, Eigen::Index dim = -1) {
        if (!(p >= 1.0))
            throw DomainError("Lp norm requires p >= 1 (got " + std::to_string(p) + ")");
        return NormSpec(LpNorm{p, dim});
    }
    static NormSpec l1(Eigen::Index dim = -1) { return lp(1.0, dim); }
    static NormSpec l2(Eigen::Index dim = -1) { return lp(2.0, dim); }
    static NormSpec linf(Eigen::Index dim = -1) { return lp(infinity, dim); }

    static NormSpec weighted_euclidean(Vec weights) {
        if (weights.size() == 0)
            throw DomainError("weighted Euclidean norm needs at least one weight");
        for (Eigen::Index i = 0; i < weights.size(); ++i)
            if (!(weights(i) > 0.0) || !std::isfinite(weights(i)))
                throw DomainError("weighted Euclidean norm requires strictly positive weights");
        return NormSpec(WeightedEuclideanNorm{std::move(weights)});
    }

    /// ||x|| = ||L x||_base. Rejects cond(L) > 1e12.
    static NormSpec transformed(const NormSpec &base, Mat transform) {
        if (transform.rows() != transform.cols())
            throw DimensionError("transform must be square");
        if (base.dim() >= 0 && base.dim() != transform.rows())
            throw DimensionError("transform size does not match base norm dimension");
        Mat inv = checked_inverse(transform, "transform");
        return NormSpec(TransformedNorm{std::make_shared<NormSpec>(base), std::move(transform),
                                        std::move(inv)});
    }

    /// Direct-product norm. Each component must have a fixed dimension and the
    /// outer norm must be absolute (checked by randomized sign flips).
    static NormSpec composite(const std::vector<NormSpec> &components, const NormSpec &outer);

    /// Dimension of the underlying R^n, or -1 if the norm accepts any length.
    Eigen::Index dim() const {
        return std::visit(
            [](const auto &k) -> Eigen::Index {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, LpNorm>)
                    return k.dim;
                else if constexpr (std::is_same_v<K, WeightedEuclideanNorm>)
                    return k.weights.size();
                else if constexpr (std::is_same_v<K, TransformedNorm>)
                    return k.transform.cols();
                else
                    return k.offsets.back();
            },
            kind_);
    }

    const Kind &kind() const { return kind_; }

    template <class T>
    const T *as() const {
        return std::get_if<T>(&kind_);
    }

    std::string describe() const;

  private:
    explicit NormSpec(Kind k) : kind_(std::move(k)) {}
    Kind kind_;

    friend NormSpec dual_of(const NormSpec &spec);
};

/// Result of a duality mapping: the conjugate and whether the mapping was
/// set-valued at x (in which case `value` is the canonical member).
struct DualityImage {
    Vec value;
    bool set_valued = false;
};

/// Outcome of a conjugate-pair check against both duality-mapping conditions.
struct ConjugateReport {
    double norm_primal = 0.0;
    double norm_dual = 0.0;
    double pairing = 0.0;
    double norm_gap = 0.0;
    double pairing_gap = 0.0;
    bool is_conjugate = false;
};

namespace detail {

inline void check_dim(const Vec &x, const NormSpec &spec, const char *op) {
    const auto d = spec.dim();
    if (d >= 0 && x.size() != d)
        throw DimensionError(std::string(op) + ": vector has dimension " + std::to_string(x.size()) +
                             ", norm expects " + std::to_string(d));
}

inline double lp_value(const Vec &x, double p) {
    if (x.size() == 0)
        return 0.0;
    if (p == 1.0)
        return x.lpNorm<1>();
    if (p == 2.0)
        return x.stableNorm();
    if (std::isinf(p))
        return x.lpNorm<Eigen::Infinity>();
    const double m = x.lpNorm<Eigen::Infinity>();
    if (m == 0.0)
        return 0.0;
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        s += std::pow(std::abs(x(i)) / m, p);
    return m * std::pow(s, 1.0 / p);
}

inline double conjugate_exponent(double p) {
    if (p == 1.0)
        return infinity;
    if (std::isinf(p))
        return 1.0;
    return p / (p - 1.0);
}

inline double sign(double v) { return (v > 0.0) - (v < 0.0); }

inline DualityImage lp_duality_map(const Vec &x, double p) {
    DualityImage out{Vec::Zero(x.size()), false};
    const double m = x.lpNorm<Eigen::Infinity>();
    if (m == 0.0)
        return out;
    if (p == 2.0) {
        out.value = x;
    } else if (p == 1.0) {
        // l1 primal: the dual is l_inf and the conjugate must be ||x||_1 sign(x)
        // wherever x is nonzero; zero coordinates are free, we pick 0.
        const double n1 = x.lpNorm<1>();
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            out.value(i) = n1 * sign(x(i));
            if (x(i) == 0.0)
                out.set_valued = true;
        }
    } else if (std::isinf(p)) {
        // l_inf primal: put all the mass on the smallest maximizing index.
        Eigen::Index imax = 0;
        int ties = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (std::abs(x(i)) >= m * (1.0 - 1e-12))
                ++ties;
        }
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (std::abs(x(i)) == m) {
                imax = i;
                break;
            }
        out.value(imax) = m * sign(x(imax));
        out.set_valued = ties > 1;
    } else {
        // x*_i = sign(x_i)|x_i|^(p-1) ||x||_p^(2-p), evaluated on x/m.
        const Vec s = x / m;
        const double ns = lp_value(s, p);
        const double scale = m * std::pow(ns, 2.0 - p);
        for (Eigen::Index i = 0; i < x.size(); ++i)
            out.value(i) = sign(s(i)) * std::pow(std::abs(s(i)), p - 1.0) * scale;
    }
    return out;
}

} // namespace detail

/// ||x|| under spec.
inline double norm_eval(const Vec &x, const NormSpec &spec) {
    detail::check_dim(x, spec, "norm_eval");
    return std::visit(
        [&](const auto &k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, LpNorm>) {
                return detail::lp_value(x, k.p);
            } else if constexpr (std::is_same_v<K, WeightedEuclideanNorm>) {
                return x.cwiseProduct(k.weights.cwiseSqrt()).stableNorm();
            } else if constexpr (std::is_same_v<K, TransformedNorm>) {
                return norm_eval(k.transform * x, *k.base);
            } else {
                const auto n = static_cast<Eigen::Index>(k.components.size());
                Vec z(n);
                for (Eigen::Index i = 0; i < n; ++i)
                    z(i) = norm_eval(x.segment(k.offsets[i], k.offsets[i + 1] - k.offsets[i]),
                                     *k.components[i]);
                return norm_eval(z, *k.outer);
            }
        },
        spec.kind());
}

/// The norm of the dual space X'.
inline NormSpec dual_of(const NormSpec &spec) {
    return std::visit(
        [&](const auto &k) -> NormSpec {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, LpNorm>) {
                return NormSpec(LpNorm{detail::conjugate_exponent(k.p), k.dim});
            } else if constexpr (std::is_same_v<K, WeightedEuclideanNorm>) {
                return NormSpec(WeightedEuclideanNorm{k.weights.cwiseInverse()});
            } else if constexpr (std::is_same_v<K, TransformedNorm>) {
                // Y = L^{-1}(X) with ||y|| = ||L y||; its dual carries ||L^{-T} y*||_{X'}.
                return NormSpec(TransformedNorm{std::make_shared<NormSpec>(dual_of(*k.base)),
                                                k.inverse.transpose(), k.transform.transpose()});
            } else {
                CompositeNorm d;
                d.offsets = k.offsets;
                for (const auto &c : k.components)
                    d.components.push_back(std::make_shared<NormSpec>(dual_of(*c)));
                d.outer = std::make_shared<NormSpec>(dual_of(*k.outer));
                return NormSpec(std::move(d));
            }
        },
        spec.kind());
}

/// Dual norm ||x||_{X'} for x in X'.
inline double dual_norm_eval(const Vec &x, const NormSpec &spec) {
    detail::check_dim(x, spec, "dual_norm_eval");
    return norm_eval(x, dual_of(spec));
}

/// True when the unit ball of spec is strictly convex.
inline bool is_strictly_convex(const NormSpec &spec) {
    return std::visit(
        [&](const auto &k) -> bool {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, LpNorm>)
                return k.p > 1.0 && std::isfinite(k.p);
            else if constexpr (std::is_same_v<K, WeightedEuclideanNorm>)
                return true;
            else if constexpr (std::is_same_v<K, TransformedNorm>)
                return is_strictly_convex(*k.base);
            else {
                if (!is_strictly_convex(*k.outer))
                    return false;
                return std::all_of(k.components.begin(), k.components.end(),
                                   [](const NormPtr &c) { return is_strictly_convex(*c); });
            }
        },
        spec.kind());
}

/// Randomized absoluteness test: ||z|| == ||s o z|| for random sign patterns s.
inline bool is_absolute(const NormSpec &spec, Eigen::Index dim, int probes = 64, double tol = 1e-12) {
    std::mt19937_64 rng(0x5eed);
    std::bernoulli_distribution coin(0.5);
    for (int t = 0; t < probes; ++t) {
        Vec z = random_normal(dim, rng);
        Vec flipped = z;
        for (Eigen::Index i = 0; i < dim; ++i)
            if (coin(rng))
                flipped(i) = -flipped(i);
        const double a = norm_eval(z, spec);
        const double b = norm_eval(flipped, spec);
        if (std::abs(a - b) > tol * std::max(1.0, a))
            return false;
    }
    return true;
}

inline NormSpec NormSpec::composite(const std::vector<NormSpec> &components, const NormSpec &outer) {
    if (components.empty())
        throw DomainError("composite norm needs at least one component");
    const auto n = static_cast<Eigen::Index>(components.size());
    if (outer.dim() >= 0 && outer.dim() != n)
        throw DimensionError("outer norm dimension " + std::to_string(outer.dim()) +
                             " does not match component count " + std::to_string(n));
    CompositeNorm c;
    c.offsets.push_back(0);
    for (const auto &comp : components) {
        if (comp.dim() < 0)
            throw DomainError("composite components need a fixed dimension");
        c.offsets.push_back(c.offsets.back() + comp.dim());
        c.components.push_back(std::make_shared<NormSpec>(comp));
    }
    if (!is_absolute(outer, n))
        throw DomainError("composite outer norm must be absolute");
    c.outer = std::make_shared<NormSpec>(outer);
    return NormSpec(std::move(c));
}

inline std::string NormSpec::describe() const {
    return std::visit(
        [](const auto &k) -> std::string {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, LpNorm>) {
                return std::isinf(k.p) ? std::string("Lp(inf)") : "Lp(" + std::to_string(k.p) + ")";
            } else if constexpr (std::is_same_v<K, WeightedEuclideanNorm>) {
                return "WeightedEuclidean(" + std::to_string(k.weights.size()) + ")";
            } else if constexpr (std::is_same_v<K, TransformedNorm>) {
                return "Transformed(" + k.base->describe() + ")";
            } else {
                std::string s = "Composite[";
                for (std::size_t i = 0; i < k.components.size(); ++i)
                    s += (i ? "," : "") + k.components[i]->describe();
                return s + "; outer " + k.outer->describe() + "]";
            }
        },
        kind_);
}

/// Duality mapping with set-valuedness flag.
inline DualityImage duality_map_info(const Vec &x, const NormSpec &spec) {
    detail::check_dim(x, spec, "duality_map");
    return std::visit(
        [&](const auto &k) -> DualityImage {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, LpNorm>) {
                return detail::lp_duality_map(x, k.p);
            } else if constexpr (std::is_same_v<K, WeightedEuclideanNorm>) {
                return {k.weights.cwiseProduct(x), false};
            } else if constexpr (std::is_same_v<K, TransformedNorm>) {
                // J_Y = L^T J_X L
                auto inner = duality_map_info(k.transform * x, *k.base);
                return {k.transform.transpose() * inner.value, inner.set_valued};
            } else {
                const auto n = static_cast<Eigen::Index>(k.components.size());
                Vec z(n);
                for (Eigen::Index i = 0; i < n; ++i)
                    z(i) = norm_eval(x.segment(k.offsets[i], k.offsets[i + 1] - k.offsets[i]),
                                     *k.components[i]);
                auto zstar = duality_map_info(z, *k.outer);
                DualityImage out{Vec::Zero(x.size()), zstar.set_valued};
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (z(i) == 0.0)
                        continue;
                    const auto len = k.offsets[i + 1] - k.offsets[i];
                    auto inner = duality_map_info(x.segment(k.offsets[i], len), *k.components[i]);
                    const double alpha = zstar.value(i) / z(i);
                    out.value.segment(k.offsets[i], len) = alpha * inner.value;
                    out.set_valued = out.set_valued || inner.set_valued;
                }
                return out;
            }
        },
        spec.kind());
}

/// Duality mapping J_X(x) in X' (canonical member when set-valued).
inline Vec duality_map(const Vec &x, const NormSpec &spec) { return duality_map_info(x, spec).value; }

/// Checks norm preservation and the sharp duality bound for (x, xstar).
inline ConjugateReport is_conjugate_pair(const Vec &x, const Vec &xstar, const NormSpec &spec, double tol) {
    require_same_size(x.size(), xstar.size(), "is_conjugate_pair");
    detail::check_dim(x, spec, "is_conjugate_pair");
    ConjugateReport r;
    r.norm_primal = norm_eval(x, spec);
    r.norm_dual = dual_norm_eval(xstar, spec);
    r.pairing = x.dot(xstar);
    r.norm_gap = std::abs(r.norm_primal - r.norm_dual);
    r.pairing_gap = std::abs(r.pairing - r.norm_primal * r.norm_dual);
    r.is_conjugate = r.norm_gap <= tol * (1.0 + r.norm_primal) &&
                     r.pairing_gap <= tol * (1.0 + std::abs(r.pairing));
    return r;
}

/// Concatenates component vectors.
inline Vec concat(const std::vector<Vec> &parts) {
    Eigen::Index total = 0;
    for (const auto &p : parts)
        total += p.size();
    Vec out(total);
    Eigen::Index off = 0;
    for (const auto &p : parts) {
        out.segment(off, p.size()) = p;
        off += p.size();
    }
    return out;
}

/// Splits x according to the block layout of a composite norm.
inline std::vector<Vec> split_components(const Vec &x, const NormSpec &composite) {
    const auto *c = composite.as<CompositeNorm>();
    if (!c)
        throw DomainError("split_components requires a composite norm");
    detail::check_dim(x, composite, "split_components");
    std::vector<Vec> out;
    for (std::size_t i = 0; i + 1 < c->offsets.size(); ++i)
        out.emplace_back(x.segment(c->offsets[i], c->offsets[i + 1] - c->offsets[i]));
    return out;
}

/// Conjugate (alpha_1 x*_1, ..., alpha_N x*_N) of a point of a direct-product
/// space, alpha_n = z*_n / ||x_n|| with z* the outer conjugate of the
/// component-norm vector z.
inline std::vector<Vec> composite_conjugate(const std::vector<std::pair<Vec, NormSpec>> &components,
                                            const NormSpec &outer) {
    std::vector<NormSpec> specs;
    std::vector<Vec> parts;
    for (const auto &[v, s] : components) {
        if (s.dim() >= 0) {
            specs.push_back(s);
        } else {
            const auto *lp = s.as<LpNorm>();
            specs.push_back(NormSpec::lp(lp->p, v.size()));
        }
        parts.push_back(v);
    }
    const NormSpec spec = NormSpec::composite(specs, outer);
    return split_components(duality_map(concat(parts), spec), spec);
}

/// Columns L^{-1} e_n: up to sign, the extremal points of the unit ball of ||L . ||_1.
inline Mat extremal_atoms(const Mat &transform) { return checked_inverse(transform, "transform"); }

/// Extremality of v in the unit ball of spec. std::nullopt when the family
/// has no finite test here.
inline std::optional<bool> is_extremal_point(const Vec &v, const NormSpec &spec, double tol);

/// Extremality of e = (e_1..e_N) in the unit ball of the direct product
/// (X_1 x ... x X_N)_Z: the component-norm vector must be extremal for Z and
/// each nonzero normalized component extremal for its own ball.
inline std::optional<bool> check_extremal_product(const std::vector<Vec> &e_components,
                                                  const std::vector<NormSpec> &inner_specs,
                                                  const NormSpec &outer, double tol) {
    require_same_size(static_cast<Eigen::Index>(e_components.size()),
                      static_cast<Eigen::Index>(inner_specs.size()), "check_extremal_product");
    const auto n = static_cast<Eigen::Index>(e_components.size());
    Vec z(n);
    for (Eigen::Index i = 0; i < n; ++i)
        z(i) = norm_eval(e_components[i], inner_specs[i]);
    auto outer_ok = is_extremal_point(z, outer, tol);
    if (outer_ok && !*outer_ok)
        return false;
    bool unknown = !outer_ok.has_value();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (z(i) <= tol)
            continue;
        auto inner_ok = is_extremal_point(e_components[i] / z(i), inner_specs[i], tol);
        if (inner_ok && !*inner_ok)
            return false;
        unknown = unknown || !inner_ok.has_value();
    }
    if (unknown)
        return std::nullopt;
    return true;
}

inline std::optional<bool> is_extremal_point(const Vec &v, const NormSpec &spec, double tol) {
    detail::check_dim(v, spec, "is_extremal_point");
    if (std::abs(norm_eval(v, spec) - 1.0) > tol)
        return false;
    if (is_strictly_convex(spec))
        return true;
    return std::visit(
        [&](const auto &k) -> std::optional<bool> {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, LpNorm>) {
                if (k.p == 1.0) {
                    // Signed canonical vectors.
                    int active = 0;
                    for (Eigen::Index i = 0; i < v.size(); ++i)
                        if (std::abs(v(i)) > tol)
                            ++active;
                    return active == 1;
                }
                // l_inf: the vertices of the cube.
                for (Eigen::Index i = 0; i < v.size(); ++i)
                    if (std::abs(v(i)) < 1.0 - tol)
                        return false;
                return true;
            } else if constexpr (std::is_same_v<K, WeightedEuclideanNorm>) {
                return true;
            } else if constexpr (std::is_same_v<K, TransformedNorm>) {
                return is_extremal_point(k.transform * v, *k.base, tol);
            } else {
                std::vector<Vec> parts;
                std::vector<NormSpec> specs;
                for (std::size_t i = 0; i < k.components.size(); ++i) {
                    parts.emplace_back(v.segment(k.offsets[i], k.offsets[i + 1] - k.offsets[i]));
                    specs.push_back(*k.components[i]);
                }
                return check_extremal_product(parts, specs, *k.outer, tol);
            }
        },
        spec.kind());
}

} // namespace brep
