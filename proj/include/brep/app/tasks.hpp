#pragma once

#include <brep/app/config.hpp>
#include <brep/app/csv.hpp>
#include <brep/kernels.hpp>
#include <brep/multikernel.hpp>
#include <brep/norms.hpp>
#include <brep/oracle.hpp>
#include <brep/sparse.hpp>
#include <brep/spline.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace brep::app {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int config = 2;
inline constexpr int not_converged = 3;
inline constexpr int verify_failed = 4;
} // namespace exit_code

using json = nlohmann::json;

inline json to_json(const Vec &v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v(i));
    return a;
}

inline json to_json(const std::vector<Eigen::Index> &v) {
    json a = json::array();
    for (auto i : v)
        a.push_back(i);
    return a;
}

inline Vec vec_from_json(const json &j) {
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

/// %.17g: enough digits to round-trip every double.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct GridSpec {
    double lo = 0.0;
    double hi = 1.0;
    int points = 101;

    double at(int i) const { return points == 1 ? lo : lo + (hi - lo) * i / static_cast<double>(points - 1); }
};

/// CSV with columns x, f and, for models with several components, f1..fN.
inline void emit_prediction_grid(const KernelModel &model, const GridSpec &grid, const std::string &path) {
    if (model.input_dim() != 1)
        throw ConfigError("prediction grid needs one-dimensional inputs (model has " +
                          std::to_string(model.input_dim()) + ")");
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path);
    const Eigen::Index n = model.num_components();
    out << "x,f";
    if (n > 1)
        for (Eigen::Index k = 0; k < n; ++k)
            out << ",f" << k + 1;
    out << '\n';
    Vec x(1);
    for (int i = 0; i < grid.points; ++i) {
        x(0) = grid.at(i);
        const Vec comp = predict_components(model, x);
        out << format_double(x(0)) << ',' << format_double(comp.sum());
        if (n > 1)
            for (Eigen::Index k = 0; k < n; ++k)
                out << ',' << format_double(comp(k));
        out << '\n';
    }
    if (!out)
        throw Error("failed writing " + path);
}

/// Grid function given by its values f at the abscissae xs.
inline void emit_prediction_grid(const Vec &xs, const Vec &f, const std::string &path) {
    require_same_size(xs.size(), f.size(), "prediction grid");
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path);
    out << "x,f\n";
    for (Eigen::Index i = 0; i < xs.size(); ++i)
        out << format_double(xs(i)) << ',' << format_double(f(i)) << '\n';
    if (!out)
        throw Error("failed writing " + path);
}

// ---------------------------------------------------------------- inputs

struct KernelInputs {
    RegressionData data;
    MultiKernelProblem problem;
};

inline KernelInputs load_kernel_inputs(const RunConfig &c) {
    RegressionData d = read_regression_csv(c.input);
    std::vector<KernelSpec> ks;
    for (const auto &k : c.kernels)
        ks.push_back(parse_kernel(k));
    MultiKernelProblem p;
    if (c.task == "fit-multikernel" && c.outer == "l1") {
        p = MultiKernelProblem::l1(d.x, d.y, ks, c.lambdas.front());
    } else {
        Vec lam(static_cast<Eigen::Index>(ks.size()));
        for (std::size_t n = 0; n < ks.size(); ++n)
            lam(static_cast<Eigen::Index>(n)) = c.lambdas.size() == 1 ? c.lambdas.front() : c.lambdas[n];
        p = MultiKernelProblem::weighted_l2(d.x, d.y, ks, lam);
    }
    return {std::move(d), std::move(p)};
}

struct DictInputs {
    Mat h;
    Vec y;
    std::vector<Mat> transforms;
};

inline DictInputs load_dict_inputs(const RunConfig &c) {
    DictInputs in;
    in.h = read_matrix_csv(c.h_path);
    in.y = read_observations_csv(c.input);
    if (in.y.size() != in.h.rows())
        throw ConfigError("H has " + std::to_string(in.h.rows()) + " rows but " + std::to_string(in.y.size()) +
                          " observations were given");
    for (std::size_t i = 0; i < c.transforms.size(); ++i) {
        Mat t = parse_transform(c.transforms[i], in.h.cols());
        if (t.rows() != in.h.cols() || t.cols() != in.h.cols())
            throw ConfigError("transform " + std::to_string(i + 1) + " must be " + std::to_string(in.h.cols()) +
                              "x" + std::to_string(in.h.cols()));
        if (condition_number(t) > max_condition_number)
            throw SingularMatrixError("transform " + std::to_string(i + 1) + " singular");
        in.transforms.push_back(std::move(t));
    }
    return in;
}

struct SplineInputs {
    Vec y;
    std::vector<Eigen::Index> samples;
    Vec abscissae; ///< grid coordinates
    DiffOperator op = DiffOperator::D;
};

inline SplineInputs load_spline_inputs(const RunConfig &c) {
    RegressionData d = read_regression_csv(c.input);
    if (d.x.cols() != 1)
        throw ConfigError("fit-spline: data must have a single input column x1");
    SplineInputs in;
    in.op = parse_operator(c.op);
    in.y = d.y;
    const Eigen::Index g = c.grid;
    in.abscissae.resize(g);
    for (Eigen::Index i = 0; i < g; ++i)
        in.abscissae(i) = c.domain_lo + (c.domain_hi - c.domain_lo) * static_cast<double>(i) / static_cast<double>(g - 1);
    for (Eigen::Index m = 0; m < d.x.rows(); ++m) {
        const double pos = (d.x(m, 0) - c.domain_lo) / (c.domain_hi - c.domain_lo) * static_cast<double>(g - 1);
        const auto idx = static_cast<Eigen::Index>(std::llround(pos));
        if (!std::isfinite(pos) || idx < 0 || idx >= g)
            throw InputError(c.input + ":" + std::to_string(m + 2) + ": x1 = " + format_double(d.x(m, 0)) +
                             " lies outside the domain [" + format_double(c.domain_lo) + ", " +
                             format_double(c.domain_hi) + "]");
        in.samples.push_back(idx);
    }
    return in;
}

// ---------------------------------------------------------------- objectives
// Each objective is a function of the serialized coefficients only, so the
// value reported in the output can be reproduced exactly from the file.

inline double kernel_objective_from(const json &coef, const KernelInputs &in) {
    KernelModel m{in.problem.kernels, vec_from_json(coef.at("combo_weights")), in.data.x,
                  vec_from_json(coef.at("a"))};
    return multikernel_objective(m, in.problem);
}

inline double dict_objective_from(const json &coef, const DictInputs &in, double lambda) {
    const Mat u = build_union_dictionary(in.transforms);
    return lasso_objective(in.h * u, in.y, lambda, vec_from_json(coef.at("c")));
}

inline double mixed_objective_from(const json &coef, const DictInputs &in, double lambda1, double lambda2) {
    return mixed_objective(in.h, in.transforms[0], in.transforms[1], in.y, lambda1, lambda2,
                           vec_from_json(coef.at("x1")), vec_from_json(coef.at("x2")));
}

inline double spline_objective_from(const json &coef, const SplineInputs &in, const RunConfig &c) {
    const Eigen::Index g = c.grid;
    const Mat h = sampling_matrix(g, in.samples);
    const double lambda = c.lambdas.front();
    if (c.penalty == "tv") {
        const Vec b = vec_from_json(coef.at("b"));
        const Vec u = vec_from_json(coef.at("u"));
        const Vec f = nullspace_basis(g, in.op) * b + green_matrix(g, in.op) * u;
        return (in.y - h * f).squaredNorm() + lambda * u.lpNorm<1>();
    }
    const Vec f = vec_from_json(coef.at("f"));
    return (in.y - h * f).squaredNorm() + lambda * (difference_matrix(g, in.op) * f).squaredNorm();
}

/// Recomputes the objective of a fit from its output document.
inline double reevaluate_objective(const json &doc, const RunConfig &c) {
    const json &coef = doc.at("coefficients");
    if (c.task == "fit-kernel" || c.task == "fit-multikernel")
        return kernel_objective_from(coef, load_kernel_inputs(c));
    if (c.task == "fit-dict")
        return dict_objective_from(coef, load_dict_inputs(c), c.lambdas.front());
    if (c.task == "fit-mixed")
        return mixed_objective_from(coef, load_dict_inputs(c), c.lambda1, c.lambda2);
    if (c.task == "fit-spline")
        return spline_objective_from(coef, load_spline_inputs(c), c);
    throw ConfigError("task " + c.task + " has no objective");
}

// ---------------------------------------------------------------- tasks

struct TaskResult {
    json doc;
    bool converged = true;
};

inline json certificates(double kkt, json gaps = json::array()) {
    return json{{"kkt_residual", kkt}, {"conjugacy_gaps", std::move(gaps)}};
}

inline TaskResult run_kernel(const RunConfig &c) {
    const KernelInputs in = load_kernel_inputs(c);
    const bool l1 = in.problem.outer == OuterNormKind::l1;
    const MultiKernelFit fit = l1 ? fit_l1_multikernel(in.problem, c.max_iter, 1e-8, c.seed) : fit_weighted_l2(in.problem);
    TaskResult r;
    json coef{{"a", to_json(fit.model.coefficients)}, {"combo_weights", to_json(fit.model.combo_weights)}};
    std::vector<Eigen::Index> active;
    for (Eigen::Index n = 0; n < fit.model.combo_weights.size(); ++n)
        if (fit.model.combo_weights(n) > 0.0)
            active.push_back(n);
    const Vec norms = component_norms(fit.model);

    double kkt = fit.gradient_norm;
    json gaps = json::array();
    if (l1) {
        // simplex stationarity: every active weight carries the minimal gradient
        const auto ev = brep::detail::simplex_objective(in.problem.grams(), in.problem.y, fit.model.combo_weights,
                                                  in.problem.lambda);
        const double gmin = ev.grad.minCoeff();
        kkt = 0.0;
        for (auto n : active)
            kkt = std::max(kkt, ev.grad(n) - gmin);
    } else {
        // alpha_n = y_n / y*_n with y the component norms and y* their weighted-l2 conjugate
        const Vec ystar = duality_map(norms, NormSpec::weighted_euclidean(in.problem.lambdas));
        for (Eigen::Index n = 0; n < norms.size(); ++n)
            gaps.push_back(ystar(n) > 0.0 ? std::abs(fit.model.combo_weights(n) - norms(n) / ystar(n)) : 0.0);
    }
    r.doc["coefficients"] = coef;
    r.doc["support"] = to_json(active);
    r.doc["objective"] = kernel_objective_from(coef, in);
    r.doc["certificates"] = certificates(kkt, gaps);
    r.doc["component_norms"] = to_json(norms);
    r.doc["iterations"] = fit.iterations;
    r.doc["converged"] = fit.converged;
    r.converged = fit.converged;
    if (!c.predict_path.empty()) {
        GridSpec g{c.predict_lo.value_or(in.data.x.col(0).minCoeff()), c.predict_hi.value_or(in.data.x.col(0).maxCoeff()),
                   c.predict_points};
        emit_prediction_grid(fit.model, g, c.predict_path);
    }
    return r;
}

inline TaskResult run_dict(const RunConfig &c) {
    const DictInputs in = load_dict_inputs(c);
    DictionaryProblem p{in.h, in.y, in.transforms, c.lambdas.front()};
    const SparseSolution sol = solve_dictionary(p, c.max_iter, c.tol);
    TaskResult r;
    json comps = json::array();
    for (const auto &x : sol.components)
        comps.push_back(to_json(x));
    json coef{{"c", to_json(sol.c)}, {"components", comps}};
    r.doc["coefficients"] = coef;
    r.doc["support"] = to_json(sol.support);
    r.doc["objective"] = dict_objective_from(coef, in, p.lambda);
    r.doc["certificates"] = certificates(sol.kkt_residual);
    r.doc["iterations"] = sol.iterations;
    r.doc["converged"] = sol.converged;
    r.converged = sol.converged;
    return r;
}

inline TaskResult run_mixed(const RunConfig &c) {
    const DictInputs in = load_dict_inputs(c);
    const MixedSolution sol = solve_mixed_two_component(in.h, in.transforms[0], in.transforms[1], in.y, c.lambda1,
                                                        c.lambda2, c.max_iter, c.tol);
    TaskResult r;
    json coef{{"c1", to_json(sol.c1)}, {"x1", to_json(sol.x1)}, {"x2", to_json(sol.x2)}};
    r.doc["coefficients"] = coef;
    r.doc["support"] = to_json(support_of(sol.c1));
    r.doc["objective"] = mixed_objective_from(coef, in, c.lambda1, c.lambda2);
    r.doc["certificates"] = certificates(sol.kkt_residual);
    r.doc["iterations"] = sol.iterations;
    r.doc["converged"] = sol.converged;
    r.converged = sol.converged;
    return r;
}

inline TaskResult run_spline(const RunConfig &c) {
    const SplineInputs in = load_spline_inputs(c);
    const double lambda = c.lambdas.front();
    const Eigen::Index g = c.grid;
    TaskResult r;
    SplineFit fit;
    json coef;
    if (c.penalty == "tv") {
        fit = fit_gtv_spline(g, in.samples, in.y, in.op, lambda, c.max_iter, c.tol);
        coef = json{{"b", to_json(fit.b)}, {"u", to_json(fit.u)}};
        r.doc["b"] = coef["b"];
        r.doc["u"] = coef["u"];
    } else {
        const Mat h = sampling_matrix(g, in.samples);
        fit = fit_hilbert_seminorm(h, in.y, nullspace_basis(g, in.op), difference_matrix(g, in.op), lambda);
        coef = json{{"a", to_json(fit.a)}, {"b", to_json(fit.b)}, {"f", to_json(fit.f)}};
        r.doc["b"] = coef["b"];
    }
    r.doc["coefficients"] = coef;
    r.doc["knots"] = to_json(fit.knots);
    r.doc["support"] = to_json(fit.knots);
    r.doc["objective"] = spline_objective_from(coef, in, c);
    r.doc["certificates"] = certificates(fit.residual);
    r.doc["converged"] = fit.converged;
    r.converged = fit.converged;
    if (!c.predict_path.empty())
        emit_prediction_grid(in.abscissae, fit.f, c.predict_path);
    return r;
}

inline TaskResult run_dual(const RunConfig &c) {
    const NormSpec spec = parse_norm(c.norm);
    const CsvTable t = read_csv(c.input, true);
    for (std::size_t j = 0; j < t.header.size(); ++j)
        if (t.header[j] != "x" + std::to_string(j + 1))
            throw InputError(c.input + ":1: header must be x1,...,xd");
    TaskResult r;
    json maps = json::array(), norms = json::array(), dnorms = json::array(), setv = json::array(),
         gaps = json::array(), bounds = json::array();
    for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
        const Vec x = t.values.row(i).transpose();
        const DualityImage img = duality_map_info(x, spec);
        const ConjugateReport rep = is_conjugate_pair(x, img.value, spec, 1e-9);
        maps.push_back(to_json(img.value));
        norms.push_back(rep.norm_primal);
        dnorms.push_back(dual_norm_eval(x, spec));
        setv.push_back(img.set_valued);
        gaps.push_back(std::max(rep.norm_gap, rep.pairing_gap));
        if (x.size() <= 8)
            bounds.push_back(brute_force_dual_norm(x, spec, c.trials, c.seed));
        else
            bounds.push_back(nullptr);
    }
    r.doc["coefficients"] = json{{"duality_map", maps},        {"norm", norms},         {"dual_norm", dnorms},
                                 {"set_valued", setv},         {"brute_force_dual_norm", bounds}};
    r.doc["support"] = json::array();
    r.doc["objective"] = nullptr;
    r.doc["certificates"] = certificates(0.0, gaps);
    r.doc["norm"] = spec.describe();
    return r;
}

} // namespace brep::app
