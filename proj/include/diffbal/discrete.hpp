#pragma once

#include "diffbal/graph.hpp"
#include "diffbal/rng.hpp"
#include "diffbal/round_matrix.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace diffbal {

using Load = std::int64_t;

// Nonnegative integer token counts per vertex; the total is cached and every
// step operation preserves it.
class LoadConfig {
public:
    LoadConfig() = default;
    // Throws Error(InvalidInput) on a negative entry.
    explicit LoadConfig(std::vector<Load> loads);

    std::size_t size() const noexcept { return loads_.size(); }
    Load operator[](Vertex v) const { return loads_[v]; }
    std::span<const Load> loads() const noexcept { return loads_; }
    Load total() const noexcept { return total_; }

    std::vector<double> as_real() const;

    friend bool operator==(const LoadConfig&, const LoadConfig&) = default;

private:
    std::vector<Load> loads_;
    Load total_ = 0;
};

// Presets: "point:M" (all M tokens on vertex 0), "uniform:M" (M/n each, the
// remainder one apiece on the lowest indices), "random:M:seed" (multinomial).
LoadConfig make_load_preset(std::string_view preset, std::size_t n);
// Load-vector file: one nonnegative integer per line, exactly n lines.
LoadConfig parse_load_vector(std::string_view text, std::size_t n);

// One token's sampling record: r in [k/x_v, (k+1)/x_v), routed to the row
// interval that contains r.
struct DestinationDraw {
    Vertex vertex;
    Load index;
    double r;
    Vertex destination;
};

// Probability of token k (of x_v) landing in each slot of row v, aligned with
// P.row(v): the length of [k/x_v, (k+1)/x_v) inside the slot's interval, times x_v.
std::vector<double> destination_distribution(const RoundMatrix& p, Vertex v, Load k, Load x_v);

// Tokens of vertex v whose interval straddles a slot boundary, ascending.
// Every other token lies inside a single slot and is routed deterministically.
std::vector<Load> boundary_tokens(const RoundMatrix& p, Vertex v, Load x_v);

struct StepTrace {
    // sent[v][j]: tokens moved from v to P.row(v)[j].target.
    std::vector<std::vector<Load>> sent;
    // Only filled when StepOptions::record_draws is set. The batch sampler
    // records deterministic tokens with r = NaN.
    std::vector<DestinationDraw> draws;
};

// Counters for the structural checks run in verify mode. A step with a
// non-null audit pointer checks, per vertex: outflow equals x_v; for every
// token, sum_u |1[D=u] - Pr[D=u]| <= 2; for every (v,u), the same sum over
// tokens is <= 2 and at most two tokens are non-deterministic. Conservation and
// non-negativity are checked on the resulting configuration.
struct StepAudit {
    std::uint64_t vertex_steps = 0;
    std::uint64_t tokens = 0;
    std::uint64_t conservation_violations = 0;
    std::uint64_t negativity_violations = 0;
    std::uint64_t outflow_violations = 0;
    std::uint64_t per_load_violations = 0;
    std::uint64_t per_neighbor_violations = 0;
    std::uint64_t boundary_count_violations = 0;
    double max_per_load_sum = 0.0;
    double max_per_neighbor_sum = 0.0;
    std::size_t max_boundary_tokens_per_pair = 0;
    std::vector<std::string> messages;

    std::uint64_t violations() const noexcept {
        return conservation_violations + negativity_violations + outflow_violations + per_load_violations +
               per_neighbor_violations + boundary_count_violations;
    }
};

enum class Sampler { Naive, Batch };

// Fault injection for the verifier: BoundaryLeft makes the batch sampler route
// each boundary token to the first slot it overlaps instead of sampling.
enum class SamplerFault { None, BoundaryLeft };

struct StepOptions {
    StepTrace* trace = nullptr;
    StepAudit* audit = nullptr;
    bool record_draws = false;
    SamplerFault fault = SamplerFault::None;
};

// Literal per-token sampler: each token k at v draws u ~ U[0,1) and goes to
// the slot containing (k + u) / x_v.
LoadConfig step_naive(const LoadConfig& x, const RoundMatrix& p, Rng& rng, const StepOptions& options = {});

// Same distribution as step_naive, but only boundary tokens consume
// randomness; interior tokens are routed in bulk.
LoadConfig step_batch(const LoadConfig& x, const RoundMatrix& p, Rng& rng, const StepOptions& options = {});

LoadConfig step(Sampler sampler, const LoadConfig& x, const RoundMatrix& p, Rng& rng, const StepOptions& options = {});

struct RunOptions {
    Sampler sampler = Sampler::Batch;
    // Record t = 0, every multiple of stride, and T.
    std::size_t stride = 1;
    bool keep_traces = false;
    StepAudit* audit = nullptr;
    SamplerFault fault = SamplerFault::None;
};

struct Trajectory {
    std::vector<std::size_t> times;
    std::vector<LoadConfig> configs;
    // traces[i] describes the step from times[i]-1 to times[i] (empty for t=0);
    // only filled with keep_traces and stride 1.
    std::vector<StepTrace> traces;
};

Trajectory run(const LoadConfig& x0, const RoundMatrix& p, std::size_t steps, Rng& rng, const RunOptions& options = {});

// Deterministic and randomized baselines on d-regular graphs. Each throws
// Error(InvalidInput) for an irregular graph.

// Sends floor(x_v / 2d) to each neighbor.
LoadConfig step_send_floor2d(const LoadConfig& x, const Graph& g);
// Sends [x_v / 3d] (rounded half-up) to each neighbor.
LoadConfig step_send_round3d(const LoadConfig& x, const Graph& g);
// Splits x_v into d+1 parts, ceilings first, over neighbors ascending then self.
LoadConfig step_send_partition(const LoadConfig& x, const Graph& g);
// floor(x_v/(d+1)) to every target, the remainder to distinct uniform targets.
LoadConfig step_rsend(const LoadConfig& x, const Graph& g, Rng& rng);

}  // namespace diffbal
