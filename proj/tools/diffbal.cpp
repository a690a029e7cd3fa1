#include "diffbal/error.hpp"
#include "diffbal/harness.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fstream>
#include <iostream>

using namespace diffbal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitVerification = 3;

void add_spec_options(CLI::App* cmd, harness::ExperimentSpec& spec, std::string& algorithm) {
    cmd->add_option("--graph", spec.graph, "cycle:N | path:N | star:N | complete:N | hypercube:DIM | torus:AxB | "
                                           "regular:N:D:SEED | randconn:N:P:SEED | file:PATH");
    cmd->add_option("--matrix", spec.matrix, "lazy-rw | metropolis | file:PATH")->capture_default_str();
    if (cmd->get_name() != "simulate") return;
    cmd->add_option("--algorithm", algorithm, "alg2-naive | alg2-batch | send-floor2d | send-round3d | send-partition | rsend")
        ->capture_default_str();
    cmd->add_option("--loads", spec.loads, "point:M | uniform:M | random:M:SEED | file:PATH")->capture_default_str();
}

int write_output(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return kExitOk;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << path << "\n";
        return kExitValidation;
    }
    out << text;
    return out ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized diffusion load balancing simulator"};
    app.require_subcommand(1);

    harness::ExperimentSpec spec;
    std::string algorithm = "alg2-batch";
    std::string steps = "auto";
    std::string out;
    int order = 2;
    double tol = 1e-12;
    std::string suite = "all";
    std::string fault = "none";
    std::uint64_t verify_seed = harness::VerifyOptions{}.seed;

    auto* sim = app.add_subcommand("simulate", "Run seeded trials and emit CSV records");
    add_spec_options(sim, spec, algorithm);
    sim->add_option("--steps", steps, "number of rounds, or auto")->capture_default_str();
    sim->add_option("--trials", spec.trials)->check(CLI::PositiveNumber)->capture_default_str();
    sim->add_option("--seed", spec.seed)->capture_default_str();
    sim->add_option("--jobs", spec.jobs)->check(CLI::PositiveNumber)->capture_default_str();
    sim->add_option("--stride", spec.stride, "record every k-th round (T is always recorded)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sim->add_option("--out", out, "CSV path (default stdout)");

    auto* bounds = app.add_subcommand("bounds", "Print spectral quantities and discrepancy bounds");
    add_spec_options(bounds, spec, algorithm);
    bounds->add_option("--out", out);

    auto* div = app.add_subcommand("divergence", "Compute the local p-divergence");
    add_spec_options(div, spec, algorithm);
    div->add_option("--p", order)->check(CLI::IsMember({1, 2}))->capture_default_str();
    div->add_option("--tol", tol)->check(CLI::PositiveNumber)->capture_default_str();
    div->add_option("--out", out);

    auto* verify = app.add_subcommand("verify", "Run the invariant suites");
    std::vector<std::string> suite_choices = harness::verify_suite_names();
    suite_choices.insert(suite_choices.begin(), "all");
    verify->add_option("--suite", suite)->check(CLI::IsMember(suite_choices))->capture_default_str();
    verify->add_option("--seed", verify_seed)->capture_default_str();
    verify->add_option("--inject-fault", fault)->check(CLI::IsMember({"none", "boundary-left"}))->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*sim || *bounds || *div) {
            spec.algorithm = harness::parse_algorithm(algorithm);
        }
        if (*sim) {
            if (steps != "auto") {
                std::size_t used = 0;
                long long value = -1;
                try {
                    value = std::stoll(steps, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used != steps.size() || value < 0) {
                    std::cerr << "error: --steps must be a nonnegative integer or 'auto'\n";
                    return kExitUsage;
                }
                spec.steps = static_cast<std::size_t>(value);
            }
            return write_output(harness::simulate(spec).csv, out);
        }
        if (*bounds) return write_output(harness::bounds_report(spec), out);
        if (*div) return write_output(harness::divergence_report(spec, order, tol), out);

        harness::VerifyOptions options;
        options.seed = verify_seed;
        if (fault == "boundary-left") options.fault = SamplerFault::BoundaryLeft;
        std::vector<std::string> names;
        if (suite == "all") {
            names = harness::verify_suite_names();
        } else {
            names.push_back(suite);
        }
        bool all_passed = true;
        for (const auto& name : names) {
            const auto result = harness::run_verify_suite(name, options);
            for (const auto& line : result.lines) std::cout << "  " << line << "\n";
            std::cout << fmt::format("{} {} ({:.2f} s)\n", result.passed ? "PASS" : "FAIL", result.name, result.seconds);
            all_passed = all_passed && result.passed;
        }
        return all_passed ? kExitOk : kExitVerification;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}
