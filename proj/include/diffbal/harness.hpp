#pragma once

#include "diffbal/analysis.hpp"
#include "diffbal/discrete.hpp"
#include "diffbal/graph.hpp"
#include "diffbal/round_matrix.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace diffbal::harness {

enum class Algorithm { Alg2Naive, Alg2Batch, SendFloor2d, SendRound3d, SendPartition, RSend };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm algorithm);

// Graph specs: cycle:N, path:N, star:N, complete:N, hypercube:DIM, torus:AxB,
// regular:N:D:SEED, randconn:N:P:SEED, file:PATH (edge list).
Graph parse_graph_spec(std::string_view spec);

struct ExperimentSpec {
    std::string graph;                  // graph spec; may be empty with a matrix file
    std::string matrix = "lazy-rw";     // lazy-rw | metropolis | file:PATH
    Algorithm algorithm = Algorithm::Alg2Batch;
    std::string loads = "point:1000";   // preset, or file:PATH (load-vector file)
    std::optional<std::size_t> steps;   // empty = auto (convergence_time with eps = 1)
    std::size_t trials = 1;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    std::size_t stride = 1;
};

// Graph, matrix and initial configuration resolved from a spec.
struct Setup {
    std::optional<Graph> graph;
    RoundMatrix matrix;
    std::string matrix_kind;
    LoadConfig initial;
};

Setup resolve_setup(const ExperimentSpec& spec);

struct ExperimentRecord {
    std::size_t trial = 0;
    std::size_t t = 0;
    double disc = 0.0;
    double max_dev = 0.0;
    double bound_thm3 = 0.0;
    double bound_thm1_or_2 = 0.0;
    bool viol_thm3 = false;
    bool viol_disc = false;
};

struct SimulationResult {
    std::size_t steps = 0;
    std::size_t convergence_steps = 0;   // convergence_time with eps = 1 (0 if unavailable)
    double lambda = 0.0;
    double psi2 = 0.0;
    std::string psi2_source;
    std::vector<ExperimentRecord> records; // sorted by (trial, t)
    std::string csv;
};

inline constexpr std::string_view kCsvHeader = "trial,t,disc,max_dev,bound_thm3,bound_thm1_or_2,viol_thm3,viol_disc";

// Runs spec.trials independent trajectories with per-trial seeds
// derive_seed(spec.seed, trial). Output is independent of spec.jobs.
SimulationResult simulate(const ExperimentSpec& spec);

// Key-value text report of N, degrees, lambda, Psi_2 and all applicable bounds.
std::string bounds_report(const ExperimentSpec& spec);

std::string divergence_report(const ExperimentSpec& spec, int order, double tol);
std::string format_divergence(const DivergenceReport& report);

// Invariant suites.
struct SuiteResult {
    std::string name;
    bool passed = true;
    std::vector<std::string> lines;
    double seconds = 0.0;
};

struct VerifyOptions {
    std::uint64_t seed = 20240601;
    SamplerFault fault = SamplerFault::None;
};

const std::vector<std::string>& verify_suite_names();
SuiteResult run_verify_suite(std::string_view name, const VerifyOptions& options = {});

// Five-slot row (1/16, 1/16, 1/8, 1/4, 1/2) on vertex 4 of a
// five-vertex matrix; the other rows are the identity.
RoundMatrix five_slot_fixture();

// Two-sample chi-square homogeneity p-value over categorical counts.
double chi_square_two_sample_p(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b);

}  // namespace diffbal::harness
