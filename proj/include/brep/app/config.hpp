#pragma once

#include <brep/app/csv.hpp>
#include <brep/kernels.hpp>
#include <brep/norms.hpp>
#include <brep/sparse.hpp>
#include <brep/spline.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace brep::app {

/// Invalid or missing run parameter.
class ConfigError : public Error {
  public:
    using Error::Error;
};

inline const std::vector<std::string> &task_names() {
    static const std::vector<std::string> names{"fit-kernel", "fit-multikernel", "fit-dict", "fit-spline",
                                                "fit-mixed",  "dual",            "verify"};
    return names;
}

struct RunConfig {
    std::string task;
    std::string input;
    std::string output;

    std::vector<std::string> kernels; ///< gaussian:W | laplacian:S | polynomial:D:C | linear
    std::string outer = "l2";         ///< l2 | l1
    std::vector<double> lambdas;      ///< one per kernel (l2), or a single value
    double lambda1 = 0.0;             ///< fit-mixed
    double lambda2 = 0.0;             ///< fit-mixed

    std::string h_path;                  ///< measurement matrix CSV
    std::vector<std::string> transforms; ///< identity | diff | path to CSV

    std::string op = "D";        ///< D | D2
    std::string penalty = "tv";  ///< tv | l2
    int grid = 200;
    double domain_lo = 0.0;
    double domain_hi = 1.0;

    std::string norm = "l2"; ///< l1 | l2 | linf | lp:P | weighted:W1,W2,...

    std::string suite = "all";
    int trials = 100;

    std::uint64_t seed = 0;
    double tol = 1e-11;
    int max_iter = 100000;

    std::string predict_path;
    int predict_points = 101;
    std::optional<double> predict_lo;
    std::optional<double> predict_hi;

    bool no_timing = false;
};

inline nlohmann::json config_echo(const RunConfig &c) {
    nlohmann::json j;
    j["task"] = c.task;
    j["input"] = c.input;
    j["seed"] = c.seed;
    j["tol"] = c.tol;
    j["max_iter"] = c.max_iter;
    if (c.task == "fit-kernel" || c.task == "fit-multikernel") {
        j["kernels"] = c.kernels;
        j["outer"] = c.outer;
        j["lambda"] = c.lambdas;
    } else if (c.task == "fit-dict") {
        j["H"] = c.h_path;
        j["transforms"] = c.transforms;
        j["lambda"] = c.lambdas;
    } else if (c.task == "fit-mixed") {
        j["H"] = c.h_path;
        j["transforms"] = c.transforms;
        j["lambda1"] = c.lambda1;
        j["lambda2"] = c.lambda2;
    } else if (c.task == "fit-spline") {
        j["operator"] = c.op;
        j["penalty"] = c.penalty;
        j["grid"] = c.grid;
        j["domain"] = {c.domain_lo, c.domain_hi};
        j["lambda"] = c.lambdas;
        if (!c.h_path.empty())
            j["H"] = c.h_path;
    } else if (c.task == "dual") {
        j["norm"] = c.norm;
        j["trials"] = c.trials;
    } else if (c.task == "verify") {
        j["suite"] = c.suite;
        j["trials"] = c.trials;
    }
    return j;
}

/// Rebuilds the run configuration recorded in an output document, so a
/// result file can be re-checked without the original command line.
inline RunConfig config_from_echo(const nlohmann::json &j) {
    RunConfig c;
    c.task = j.at("task").get<std::string>();
    c.input = j.value("input", "");
    c.seed = j.value("seed", c.seed);
    c.tol = j.value("tol", c.tol);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.kernels = j.value("kernels", c.kernels);
    c.outer = j.value("outer", c.outer);
    c.lambdas = j.value("lambda", c.lambdas);
    c.lambda1 = j.value("lambda1", c.lambda1);
    c.lambda2 = j.value("lambda2", c.lambda2);
    c.h_path = j.value("H", c.h_path);
    c.transforms = j.value("transforms", c.transforms);
    c.op = j.value("operator", c.op);
    c.penalty = j.value("penalty", c.penalty);
    c.grid = j.value("grid", c.grid);
    if (j.contains("domain")) {
        c.domain_lo = j["domain"].at(0).get<double>();
        c.domain_hi = j["domain"].at(1).get<double>();
    }
    c.norm = j.value("norm", c.norm);
    c.suite = j.value("suite", c.suite);
    c.trials = j.value("trials", c.trials);
    return c;
}

namespace detail {

inline std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline double to_double(const std::string &s, const std::string &what) {
    double v = 0.0;
    if (!parse_double(s, v))
        throw ConfigError("invalid number '" + s + "' in " + what);
    return v;
}

} // namespace detail

inline KernelSpec parse_kernel(const std::string &text) {
    const auto parts = detail::split(text, ':');
    const std::string &name = parts[0];
    try {
        if (name == "gaussian" && parts.size() == 2)
            return KernelSpec::gaussian(detail::to_double(parts[1], text));
        if (name == "laplacian" && parts.size() == 2)
            return KernelSpec::laplacian(detail::to_double(parts[1], text));
        if (name == "polynomial" && parts.size() == 3)
            return KernelSpec::polynomial(static_cast<int>(detail::to_double(parts[1], text)),
                                          detail::to_double(parts[2], text));
        if (name == "linear" && parts.size() == 1)
            return KernelSpec::linear();
    } catch (const DomainError &e) {
        throw ConfigError("kernel '" + text + "': " + e.what());
    }
    throw ConfigError("unknown kernel '" + text +
                      "' (expected gaussian:W, laplacian:S, polynomial:D:C or linear)");
}

inline NormSpec parse_norm(const std::string &text) {
    const auto colon = text.find(':');
    const std::string name = colon == std::string::npos ? text : text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    try {
        if (name == "l1")
            return NormSpec::l1();
        if (name == "l2")
            return NormSpec::l2();
        if (name == "linf")
            return NormSpec::linf();
        if (name == "lp")
            return NormSpec::lp(detail::to_double(arg, text));
        if (name == "weighted") {
            const auto ws = detail::split(arg, ',');
            Vec w(static_cast<Eigen::Index>(ws.size()));
            for (std::size_t i = 0; i < ws.size(); ++i)
                w(static_cast<Eigen::Index>(i)) = detail::to_double(ws[i], text);
            return NormSpec::weighted_euclidean(w);
        }
    } catch (const DomainError &e) {
        throw ConfigError("norm '" + text + "': " + e.what());
    }
    throw ConfigError("unknown norm '" + text + "' (expected l1, l2, linf, lp:P or weighted:W1,...)");
}

/// identity | diff | path to a square CSV matrix.
inline Mat parse_transform(const std::string &text, Eigen::Index n) {
    if (text == "identity")
        return Mat::Identity(n, n);
    if (text == "diff")
        return forward_difference(n);
    return read_matrix_csv(text);
}

inline DiffOperator parse_operator(const std::string &text) {
    if (text == "D")
        return DiffOperator::D;
    if (text == "D2")
        return DiffOperator::D2;
    throw ConfigError("unknown operator '" + text + "' (expected D or D2)");
}

inline void validate_config(const RunConfig &c) {
    bool known = false;
    for (const auto &t : task_names())
        known = known || t == c.task;
    if (!known)
        throw ConfigError("unknown task '" + c.task + "'");
    for (double l : c.lambdas)
        if (!(l > 0.0))
            throw ConfigError("lambda must be > 0");
    if (c.max_iter < 1)
        throw ConfigError("max_iter must be >= 1");
    if (!(c.tol > 0.0))
        throw ConfigError("tol must be > 0");
    auto need_input = [&] {
        if (c.input.empty())
            throw ConfigError(c.task + ": input file required");
    };
    auto need_lambda = [&] {
        if (c.lambdas.empty())
            throw ConfigError(c.task + ": --lambda required");
    };
    if (c.task == "fit-kernel") {
        need_input();
        need_lambda();
        if (c.kernels.size() != 1)
            throw ConfigError("fit-kernel: exactly one --kernel required");
        if (c.lambdas.size() != 1)
            throw ConfigError("fit-kernel: exactly one --lambda required");
    } else if (c.task == "fit-multikernel") {
        need_input();
        need_lambda();
        if (c.kernels.empty())
            throw ConfigError("fit-multikernel: at least one --kernel required");
        if (c.outer != "l2" && c.outer != "l1")
            throw ConfigError("fit-multikernel: --outer must be l2 or l1");
        if (c.outer == "l1" && c.lambdas.size() != 1)
            throw ConfigError("fit-multikernel: l1 outer norm takes a single --lambda");
        if (c.outer == "l2" && c.lambdas.size() != 1 && c.lambdas.size() != c.kernels.size())
            throw ConfigError("fit-multikernel: give one --lambda or one per kernel");
    } else if (c.task == "fit-dict") {
        need_input();
        need_lambda();
        if (c.h_path.empty())
            throw ConfigError("fit-dict: --H required");
        if (c.transforms.empty())
            throw ConfigError("fit-dict: at least one --transform required");
        if (c.lambdas.size() != 1)
            throw ConfigError("fit-dict: exactly one --lambda required");
    } else if (c.task == "fit-mixed") {
        need_input();
        if (c.h_path.empty())
            throw ConfigError("fit-mixed: --H required");
        if (c.transforms.size() != 2)
            throw ConfigError("fit-mixed: exactly two --transform required");
        if (!(c.lambda1 > 0.0) || !(c.lambda2 > 0.0))
            throw ConfigError("fit-mixed: --lambda1 and --lambda2 must be > 0");
    } else if (c.task == "fit-spline") {
        need_input();
        need_lambda();
        if (c.lambdas.size() != 1)
            throw ConfigError("fit-spline: exactly one --lambda required");
        parse_operator(c.op);
        if (c.penalty != "tv" && c.penalty != "l2")
            throw ConfigError("fit-spline: --penalty must be tv or l2");
        if (c.grid < 3)
            throw ConfigError("fit-spline: --grid must be >= 3");
        if (!(c.domain_hi > c.domain_lo))
            throw ConfigError("fit-spline: domain must satisfy lo < hi");
    } else if (c.task == "dual") {
        need_input();
        parse_norm(c.norm);
    } else if (c.task == "verify") {
        if (c.trials < 1)
            throw ConfigError("verify: --trials must be >= 1");
    }
    if (c.predict_points < 2)
        throw ConfigError("--predict-points must be >= 2");
}

} // namespace brep::app
