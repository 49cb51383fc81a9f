#pragma once

#include <brep/app/config.hpp>
#include <brep/app/tasks.hpp>
#include <brep/app/verify.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>

namespace brep::app {

struct RunOutcome {
    int exit_code = exit_code::ok;
    json document;
    std::string message;
};

inline void write_document(const json &doc, const std::string &path) {
    const std::string text = doc.dump(2) + "\n";
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path);
    out << text;
    if (!out)
        throw Error("failed writing " + path);
}

inline json run_verify(const RunConfig &c, bool &all_passed) {
    std::vector<std::string> names;
    if (c.suite == "all") {
        for (const auto &[name, fn] : suite_table())
            names.push_back(name);
    } else {
        names.push_back(c.suite);
    }
    json suites = json::object();
    all_passed = true;
    for (const auto &name : names) {
        const SuiteReport rep = run_suite(name, c.trials, c.seed);
        suites[name] = {{"passed", rep.all_passed}, {"invariants", rep.counts}};
        all_passed = all_passed && rep.all_passed;
    }
    return suites;
}

/// Executes one task and writes its output document. Exit codes: 0 success,
/// 2 configuration or input error, 3 solver did not converge (outputs are
/// still written), 4 verification failure, 1 anything else.
inline RunOutcome run(const RunConfig &c) {
    RunOutcome out;
    try {
        validate_config(c);
        const auto t0 = std::chrono::steady_clock::now();
        TaskResult r;
        bool verify_ok = true;
        if (c.task == "fit-kernel" || c.task == "fit-multikernel")
            r = run_kernel(c);
        else if (c.task == "fit-dict")
            r = run_dict(c);
        else if (c.task == "fit-mixed")
            r = run_mixed(c);
        else if (c.task == "fit-spline")
            r = run_spline(c);
        else if (c.task == "dual")
            r = run_dual(c);
        else {
            r.doc["suites"] = run_verify(c, verify_ok);
            r.doc["passed"] = verify_ok;
            r.doc["coefficients"] = nullptr;
            r.doc["support"] = json::array();
            r.doc["objective"] = nullptr;
            r.doc["certificates"] = certificates(0.0);
        }
        const auto t1 = std::chrono::steady_clock::now();
        r.doc["task"] = c.task;
        r.doc["config_echo"] = config_echo(c);
        r.doc["timing_ms"] = c.no_timing ? 0.0 : std::chrono::duration<double, std::milli>(t1 - t0).count();
        write_document(r.doc, c.output);
        out.document = std::move(r.doc);
        if (!verify_ok) {
            out.exit_code = exit_code::verify_failed;
            out.message = "verification failed";
        } else if (!r.converged) {
            out.exit_code = exit_code::not_converged;
            out.message = "solver did not converge; best iterate written";
        }
    } catch (const ConfigError &e) {
        out.exit_code = exit_code::config;
        out.message = e.what();
    } catch (const InputError &e) {
        out.exit_code = exit_code::config;
        out.message = e.what();
    } catch (const DomainError &e) {
        out.exit_code = exit_code::config;
        out.message = e.what();
    } catch (const DimensionError &e) {
        out.exit_code = exit_code::config;
        out.message = e.what();
    } catch (const SingularMatrixError &e) {
        out.exit_code = exit_code::config;
        out.message = e.what();
    } catch (const WellPosednessError &e) {
        out.exit_code = exit_code::config;
        out.message = e.what();
    } catch (const UnsupportedError &e) {
        out.exit_code = exit_code::config;
        out.message = e.what();
    } catch (const std::exception &e) {
        out.exit_code = exit_code::failure;
        out.message = e.what();
    }
    return out;
}

} // namespace brep::app
