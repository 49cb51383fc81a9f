// banachrep: command-line front end for the representer-theorem solvers.

#include <brep/app/run.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

std::string tasks_help() {
    std::string s;
    for (const auto &t : brep::app::task_names())
        s += (s.empty() ? "" : ", ") + t;
    return s;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Fit and certify solutions of regularized inverse problems in Banach spaces"};
    app.set_config("--config", "", "TOML file with option values (command-line flags take precedence)");
    app.allow_config_extras(false);

    brep::app::RunConfig c;
    std::vector<std::string> positionals;
    app.add_option("task", c.task, "Task: " + tasks_help())->required();
    app.add_option("files", positionals, "[input] [output]")->expected(0, 2);

    app.add_option("--kernel", c.kernels, "Kernel (gaussian:W, laplacian:S, polynomial:D:C, linear); repeatable");
    app.add_option("--outer", c.outer, "Outer norm for fit-multikernel: l2 or l1")->capture_default_str();
    app.add_option("--lambda", c.lambdas, "Regularization weight(s); repeatable");
    app.add_option("--lambda1", c.lambda1, "Sparse-block weight for fit-mixed");
    app.add_option("--lambda2", c.lambda2, "Quadratic-block weight for fit-mixed");
    app.add_option("--H", c.h_path, "Measurement matrix CSV");
    app.add_option("--transform", c.transforms, "Transform: identity, diff or a CSV path; repeatable");
    app.add_option("--operator", c.op, "Spline operator: D or D2")->capture_default_str();
    app.add_option("--penalty", c.penalty, "Spline penalty: tv or l2")->capture_default_str();
    app.add_option("--grid", c.grid, "Spline grid size")->capture_default_str();
    app.add_option("--domain-lo", c.domain_lo, "Left end of the spline domain")->capture_default_str();
    app.add_option("--domain-hi", c.domain_hi, "Right end of the spline domain")->capture_default_str();
    app.add_option("--norm", c.norm, "Norm for dual: l1, l2, linf, lp:P, weighted:W1,W2,...")->capture_default_str();
    app.add_option("--suite", c.suite, "Verification suite (or all)")->capture_default_str();
    app.add_option("--trials", c.trials, "Verification trials / dual sampling directions")->capture_default_str();
    app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
    app.add_option("--tol", c.tol, "Solver tolerance")->capture_default_str();
    app.add_option("--max-iter", c.max_iter, "Solver iteration cap")->capture_default_str();
    app.add_option("--predict", c.predict_path, "Write a prediction grid CSV to this path");
    app.add_option("--predict-points", c.predict_points, "Prediction grid size")->capture_default_str();
    auto *plo = app.add_option("--predict-lo", "Prediction grid left end (default: data minimum)");
    auto *phi = app.add_option("--predict-hi", "Prediction grid right end (default: data maximum)");
    app.add_flag("--no-timing", c.no_timing, "Report timing_ms as 0 for reproducible output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : brep::app::exit_code::config;
    }
    if (plo->count() > 0)
        c.predict_lo = plo->as<double>();
    if (phi->count() > 0)
        c.predict_hi = phi->as<double>();
    if (!positionals.empty())
        c.input = positionals[0];
    if (positionals.size() > 1)
        c.output = positionals[1];

    const brep::app::RunOutcome out = brep::app::run(c);
    if (!out.message.empty())
        std::cerr << "banachrep: " << out.message << '\n';
    return out.exit_code;
}
