#include "diffbal/discrete.hpp"

#include "diffbal/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace diffbal {

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

constexpr std::size_t kMaxAuditMessages = 16;

void check_dimensions(const LoadConfig& x, std::size_t n) {
    if (x.size() != n) fail(ErrorKind::InvalidInput, fmt::format("configuration has {} entries, expected {}", x.size(), n));
}

// Row prefix sums scaled by x_v: token k occupies [k, k+1) in these units.
std::vector<double> scaled_prefix(std::span<const double> prefix, Load x_v) {
    std::vector<double> s(prefix.size());
    const auto xv = static_cast<double>(x_v);
    for (std::size_t j = 0; j < prefix.size(); ++j) s[j] = prefix[j] * xv;
    s.front() = 0.0;
    s.back() = xv;
    return s;
}

// Slot j with s[j] <= pos < s[j+1], clamped to a valid slot.
std::size_t locate(std::span<const double> bounds, double pos) {
    const auto it = std::upper_bound(bounds.begin() + 1, bounds.end(), pos);
    const auto slot = static_cast<std::size_t>(it - (bounds.begin() + 1));
    return std::min(slot, bounds.size() - 2);
}

std::vector<Load> boundary_from_scaled(std::span<const double> s) {
    std::vector<Load> out;
    for (std::size_t j = 1; j + 1 < s.size(); ++j) {
        const double f = std::floor(s[j]);
        if (f == s[j]) continue;
        const auto k = static_cast<Load>(f);
        if (out.empty() || out.back() != k) out.push_back(k);
    }
    return out;
}

std::vector<double> distribution_from_scaled(std::span<const double> s, Load k) {
    const auto lo = static_cast<double>(k);
    const double hi = lo + 1.0;
    std::vector<double> dist(s.size() - 1);
    for (std::size_t j = 0; j + 1 < s.size(); ++j) {
        dist[j] = std::max(0.0, std::min(hi, s[j + 1]) - std::max(lo, s[j]));
    }
    return dist;
}

void note(StepAudit& audit, std::string msg) {
    if (audit.messages.size() < kMaxAuditMessages) audit.messages.push_back(std::move(msg));
}

// Checks the per-load and per-neighbor sum bounds for one vertex given where every
// token went.
void audit_vertex(StepAudit& audit, Vertex v, std::span<const double> s, std::span<const std::size_t> dest,
                  std::span<const Load> sent) {
    const std::size_t slots = s.size() - 1;
    const auto x_v = static_cast<Load>(dest.size());
    ++audit.vertex_steps;
    audit.tokens += static_cast<std::uint64_t>(x_v);

    Load outflow = 0;
    for (Load c : sent) outflow += c;
    if (outflow != x_v) {
        ++audit.outflow_violations;
        note(audit, fmt::format("vertex {}: outflow {} != load {}", v, outflow, x_v));
    }

    std::vector<double> neighbor_sum(slots, 0.0);
    std::vector<std::size_t> random_tokens(slots, 0);
    const auto boundary = boundary_from_scaled(s);
    std::size_t b = 0;
    for (Load k = 0; k < x_v; ++k) {
        const std::size_t d = dest[static_cast<std::size_t>(k)];
        if (b < boundary.size() && boundary[b] == k) {
            ++b;
            const auto dist = distribution_from_scaled(s, k);
            double load_sum = 0.0;
            for (std::size_t j = 0; j < slots; ++j) {
                const double dev = std::abs((d == j ? 1.0 : 0.0) - dist[j]);
                load_sum += dev;
                neighbor_sum[j] += dev;
                if (dist[j] > 0.0) ++random_tokens[j];
            }
            audit.max_per_load_sum = std::max(audit.max_per_load_sum, load_sum);
            if (load_sum > 2.0 + 1e-12) {
                ++audit.per_load_violations;
                note(audit, fmt::format("vertex {} token {}: per-load deviation {}", v, k, load_sum));
            }
        } else {
            const std::size_t expected = locate(s, static_cast<double>(k));
            if (d != expected) {
                neighbor_sum[expected] += 1.0;
                neighbor_sum[d] += 1.0;
                audit.max_per_load_sum = std::max(audit.max_per_load_sum, 2.0);
            }
        }
    }
    for (std::size_t j = 0; j < slots; ++j) {
        audit.max_per_neighbor_sum = std::max(audit.max_per_neighbor_sum, neighbor_sum[j]);
        audit.max_boundary_tokens_per_pair = std::max(audit.max_boundary_tokens_per_pair, random_tokens[j]);
        if (neighbor_sum[j] > 2.0 + 1e-9) {
            ++audit.per_neighbor_violations;
            note(audit, fmt::format("vertex {} slot {}: per-neighbor deviation {}", v, j, neighbor_sum[j]));
        }
        if (random_tokens[j] > 2) {
            ++audit.boundary_count_violations;
            note(audit, fmt::format("vertex {} slot {}: {} non-deterministic tokens", v, j, random_tokens[j]));
        }
    }
}

void audit_result(StepAudit& audit, const LoadConfig& before, std::span<const Load> after) {
    Load total = 0;
    for (Vertex v = 0; v < after.size(); ++v) {
        total += after[v];
        if (after[v] < 0) {
            ++audit.negativity_violations;
            note(audit, fmt::format("vertex {}: negative load {}", v, after[v]));
        }
    }
    if (total != before.total()) {
        ++audit.conservation_violations;
        note(audit, fmt::format("total changed from {} to {}", before.total(), total));
    }
}

template <typename RouteVertex>
LoadConfig step_impl(const LoadConfig& x, const RoundMatrix& p, const StepOptions& options, RouteVertex&& route) {
    check_dimensions(x, p.size());
    const std::size_t n = p.size();
    std::vector<Load> next(n, 0);
    if (options.trace) {
        options.trace->sent.assign(n, {});
        options.trace->draws.clear();
    }
    std::vector<Load> sent;
    std::vector<std::size_t> dest;
    for (Vertex v = 0; v < n; ++v) {
        const Load x_v = x[v];
        const auto row = p.row(v);
        sent.assign(row.size(), 0);
        if (x_v > 0) {
            const auto s = scaled_prefix(p.prefix(v), x_v);
            dest.clear();
            route(v, x_v, std::span<const double>(s), sent, options.audit ? &dest : nullptr);
            if (options.audit) audit_vertex(*options.audit, v, s, dest, sent);
        }
        for (std::size_t j = 0; j < row.size(); ++j) next[row[j].target] += sent[j];
        if (options.trace) options.trace->sent[v] = sent;
    }
    if (options.audit) audit_result(*options.audit, x, next);
    return LoadConfig(std::move(next));
}

}  // namespace

LoadConfig::LoadConfig(std::vector<Load> loads) : loads_(std::move(loads)) {
    for (std::size_t v = 0; v < loads_.size(); ++v) {
        if (loads_[v] < 0) fail(ErrorKind::InvalidInput, fmt::format("negative load {} at vertex {}", loads_[v], v));
        total_ += loads_[v];
    }
}

std::vector<double> LoadConfig::as_real() const { return {loads_.begin(), loads_.end()}; }

LoadConfig make_load_preset(std::string_view preset, std::size_t n) {
    if (n == 0) fail(ErrorKind::InvalidParameter, "load preset needs n >= 1");
    std::vector<std::string_view> parts;
    for (std::size_t pos = 0;;) {
        const auto colon = preset.find(':', pos);
        parts.push_back(preset.substr(pos, colon - pos));
        if (colon == std::string_view::npos) break;
        pos = colon + 1;
    }
    auto number = [&](std::string_view s, std::uint64_t limit = std::numeric_limits<Load>::max() / 2) {
        std::uint64_t value = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
        if (ec != std::errc{} || ptr != s.data() + s.size() || value > limit) {
            fail(ErrorKind::InvalidParameter, fmt::format("bad number '{}' in load preset '{}'", s, preset));
        }
        return value;
    };
    std::vector<Load> loads(n, 0);
    if (parts[0] == "point" && parts.size() == 2) {
        loads[0] = static_cast<Load>(number(parts[1]));
    } else if (parts[0] == "uniform" && parts.size() == 2) {
        const auto m = static_cast<Load>(number(parts[1]));
        const auto nn = static_cast<Load>(n);
        for (std::size_t v = 0; v < n; ++v) loads[v] = m / nn + (static_cast<Load>(v) < m % nn ? 1 : 0);
    } else if (parts[0] == "random" && parts.size() == 3) {
        const auto m = number(parts[1]);
        Rng rng(number(parts[2], std::numeric_limits<std::uint64_t>::max()));
        for (std::uint64_t i = 0; i < m; ++i) ++loads[uniform_below(rng, n)];
    } else {
        fail(ErrorKind::InvalidParameter,
             fmt::format("unknown load preset '{}' (expected point:M, uniform:M or random:M:seed)", preset));
    }
    return LoadConfig(std::move(loads));
}

LoadConfig parse_load_vector(std::string_view text, std::size_t n) {
    std::vector<Load> loads;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        Load value = 0;
        auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
        if (ec != std::errc{} || ptr != line.data() + line.size()) {
            fail(ErrorKind::Parse, fmt::format("line {}: '{}' is not an integer load", line_no, line));
        }
        if (value < 0) fail(ErrorKind::Validation, fmt::format("line {}: negative load {}", line_no, value));
        loads.push_back(value);
    }
    if (loads.size() != n) fail(ErrorKind::Validation, fmt::format("load vector has {} entries, expected {}", loads.size(), n));
    return LoadConfig(std::move(loads));
}

std::vector<double> destination_distribution(const RoundMatrix& p, Vertex v, Load k, Load x_v) {
    if (v >= p.size()) fail(ErrorKind::InvalidInput, fmt::format("vertex {} out of range", v));
    if (x_v <= 0 || k < 0 || k >= x_v) {
        fail(ErrorKind::InvalidInput, fmt::format("token index {} out of range for load {}", k, x_v));
    }
    return distribution_from_scaled(scaled_prefix(p.prefix(v), x_v), k);
}

std::vector<Load> boundary_tokens(const RoundMatrix& p, Vertex v, Load x_v) {
    if (v >= p.size()) fail(ErrorKind::InvalidInput, fmt::format("vertex {} out of range", v));
    if (x_v <= 0) return {};
    return boundary_from_scaled(scaled_prefix(p.prefix(v), x_v));
}

LoadConfig step_naive(const LoadConfig& x, const RoundMatrix& p, Rng& rng, const StepOptions& options) {
    return step_impl(x, p, options,
                     [&](Vertex v, Load x_v, std::span<const double>, std::vector<Load>& sent,
                         std::vector<std::size_t>* dest) {
                         const auto prefix = p.prefix(v);
                         const auto row = p.row(v);
                         const auto xv = static_cast<double>(x_v);
                         for (Load k = 0; k < x_v; ++k) {
                             const double r = (static_cast<double>(k) + uniform01(rng)) / xv;
                             const std::size_t slot = locate(prefix, r);
                             ++sent[slot];
                             if (dest) dest->push_back(slot);
                             if (options.trace && options.record_draws) {
                                 options.trace->draws.push_back({v, k, r, row[slot].target});
                             }
                         }
                     });
}

LoadConfig step_batch(const LoadConfig& x, const RoundMatrix& p, Rng& rng, const StepOptions& options) {
    return step_impl(x, p, options,
                     [&](Vertex v, Load x_v, std::span<const double> s, std::vector<Load>& sent,
                         std::vector<std::size_t>* dest) {
                         const auto prefix = p.prefix(v);
                         const auto row = p.row(v);
                         const auto xv = static_cast<double>(x_v);
                         const bool draws = options.trace && options.record_draws;
                         if (dest) dest->assign(static_cast<std::size_t>(x_v), 0);

                         // Interior tokens: ceil(s_j) <= k and k + 1 <= floor(s_{j+1}).
                         for (std::size_t j = 0; j + 1 < s.size(); ++j) {
                             const auto lo = static_cast<Load>(std::ceil(s[j]));
                             const auto hi = static_cast<Load>(std::floor(s[j + 1]));
                             if (hi <= lo) continue;
                             sent[j] += hi - lo;
                             if (dest) std::fill(dest->begin() + lo, dest->begin() + hi, j);
                             if (draws) {
                                 for (Load k = lo; k < hi; ++k) {
                                     options.trace->draws.push_back(
                                         {v, k, std::numeric_limits<double>::quiet_NaN(), row[j].target});
                                 }
                             }
                         }
                         for (Load k : boundary_from_scaled(s)) {
                             std::size_t slot;
                             double r = std::numeric_limits<double>::quiet_NaN();
                             if (options.fault == SamplerFault::BoundaryLeft) {
                                 slot = locate(s, static_cast<double>(k));
                             } else {
                                 r = (static_cast<double>(k) + uniform01(rng)) / xv;
                                 slot = locate(prefix, r);
                             }
                             ++sent[slot];
                             if (dest) (*dest)[static_cast<std::size_t>(k)] = slot;
                             if (draws) options.trace->draws.push_back({v, k, r, row[slot].target});
                         }
                     });
}

LoadConfig step(Sampler sampler, const LoadConfig& x, const RoundMatrix& p, Rng& rng, const StepOptions& options) {
    return sampler == Sampler::Naive ? step_naive(x, p, rng, options) : step_batch(x, p, rng, options);
}

Trajectory run(const LoadConfig& x0, const RoundMatrix& p, std::size_t steps, Rng& rng, const RunOptions& options) {
    check_dimensions(x0, p.size());
    if (options.stride == 0) fail(ErrorKind::InvalidParameter, "stride must be >= 1");
    const bool traces = options.keep_traces && options.stride == 1;

    Trajectory out;
    out.times.push_back(0);
    out.configs.push_back(x0);
    if (traces) out.traces.emplace_back();

    LoadConfig cur = x0;
    StepTrace trace;
    StepOptions step_options;
    step_options.audit = options.audit;
    step_options.fault = options.fault;
    step_options.trace = traces ? &trace : nullptr;
    for (std::size_t t = 1; t <= steps; ++t) {
        cur = step(options.sampler, cur, p, rng, step_options);
        if (t % options.stride == 0 || t == steps) {
            out.times.push_back(t);
            out.configs.push_back(cur);
            if (traces) out.traces.push_back(std::move(trace));
        }
    }
    return out;
}

namespace {

std::size_t require_regular(const LoadConfig& x, const Graph& g, std::string_view who) {
    check_dimensions(x, g.size());
    if (!g.is_regular()) {
        fail(ErrorKind::InvalidInput, fmt::format("{} requires a regular graph (degrees range {}..{})", who,
                                                  g.min_degree(), g.max_degree()));
    }
    return g.max_degree();
}

// Each vertex sends `per_neighbor(x_v)` to every neighbor and keeps the rest.
template <typename PerNeighbor>
LoadConfig send_uniform(const LoadConfig& x, const Graph& g, PerNeighbor&& per_neighbor) {
    std::vector<Load> next(g.size(), 0);
    const auto d = static_cast<Load>(g.max_degree());
    for (Vertex v = 0; v < g.size(); ++v) {
        const Load share = per_neighbor(x[v]);
        for (Vertex u : g.neighbors(v)) next[u] += share;
        next[v] += x[v] - d * share;
    }
    return LoadConfig(std::move(next));
}

}  // namespace

LoadConfig step_send_floor2d(const LoadConfig& x, const Graph& g) {
    const auto d = static_cast<Load>(require_regular(x, g, "send-floor2d"));
    return send_uniform(x, g, [d](Load xv) { return xv / (2 * d); });
}

LoadConfig step_send_round3d(const LoadConfig& x, const Graph& g) {
    const auto d = static_cast<Load>(require_regular(x, g, "send-round3d"));
    // floor(x/(3d) + 1/2) in integers.
    return send_uniform(x, g, [d](Load xv) { return (2 * xv + 3 * d) / (6 * d); });
}

LoadConfig step_send_partition(const LoadConfig& x, const Graph& g) {
    const auto d = static_cast<Load>(require_regular(x, g, "send-partition"));
    std::vector<Load> next(g.size(), 0);
    for (Vertex v = 0; v < g.size(); ++v) {
        const Load q = x[v] / (d + 1);
        Load extra = x[v] % (d + 1);
        for (Vertex u : g.neighbors(v)) {
            next[u] += q + (extra > 0 ? 1 : 0);
            if (extra > 0) --extra;
        }
        next[v] += q + extra;
    }
    return LoadConfig(std::move(next));
}

LoadConfig step_rsend(const LoadConfig& x, const Graph& g, Rng& rng) {
    const auto d = require_regular(x, g, "rsend");
    std::vector<Load> next(g.size(), 0);
    std::vector<Vertex> targets(d + 1);
    for (Vertex v = 0; v < g.size(); ++v) {
        const auto nb = g.neighbors(v);
        std::copy(nb.begin(), nb.end(), targets.begin());
        targets[d] = v;
        const Load q = x[v] / static_cast<Load>(d + 1);
        const auto rem = static_cast<std::size_t>(x[v] % static_cast<Load>(d + 1));
        for (Vertex u : targets) next[u] += q;
        // Partial Fisher-Yates: the first `rem` slots become a uniform subset.
        for (std::size_t i = 0; i < rem; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, d + 1 - i));
            std::swap(targets[i], targets[j]);
            next[targets[i]] += 1;
        }
    }
    return LoadConfig(std::move(next));
}

}  // namespace diffbal
