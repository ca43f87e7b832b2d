#pragma once

#include <mtorque/multiplex_graph.hpp>
#include <mtorque/panel.hpp>
#include <mtorque/parallel.hpp>

#include <optional>
#include <string_view>
#include <vector>

namespace mtorque {

/// PRIMARY pathways pass only through validated intermediaries; SECONDARY
/// pathways may pass through anyone.
enum class PathwayMode { primary, secondary };

/// DIRECTED steps follow the nomination from the node nearer the focal
/// individual to the farther one (focal -> ... -> alter), so influence can
/// flow back along nominations. REVERSED steps require the opposite
/// nomination.
enum class Direction { directed, reversed };

inline std::string_view to_string(PathwayMode m) { return m == PathwayMode::primary ? "primary" : "secondary"; }
inline std::string_view to_string(Direction d) { return d == Direction::directed ? "directed" : "reversed"; }

struct PathwayConfig {
    int k = 3;
    PathwayMode mode = PathwayMode::primary;
    Direction direction = Direction::directed;
    LayerId layer{};
    /// Count N_k under the mode's validity filter instead of over all
    /// intermediaries.
    bool alters_follow_mode = false;

    void validate() const {
        if (k < 2)
            throw std::invalid_argument("pathway length k must be at least 2");
    }
};

struct ExposureRecord {
    NodeId node = 0;
    int xi_layer = 0;  ///< intervened k-degree alters reached only through the layer
    int xi_other = 0;  ///< intervened k-degree alters with a surviving route
    int alters = 0;    ///< N_k, all k-degree alters

    bool operator==(const ExposureRecord &) const = default;
};

/// Validated intermediaries: accurate at follow-up or treated at baseline.
class ValidityOracle {
public:
    ValidityOracle(const VillagePanel &panel, std::size_t topic) : flags_(panel.size(), 0) {
        for (NodeId v = 0; v < panel.size(); ++v)
            if (panel.covers(v)) {
                const auto &rec = panel.at(v).topics.at(topic);
                flags_[v] = rec.treated || rec.k_w3.value_or(0) == 1;
            }
    }
    bool validated(NodeId v) const { return v < flags_.size() && flags_[v]; }

private:
    std::vector<char> flags_;
};

inline LayerMask step_mask(const Tie &tie, Direction direction) {
    return direction == Direction::directed ? tie.outgoing : tie.incoming;
}

/// Whether the walk may move from u to v.
inline bool admissible_step(const MultiplexNetwork &net, NodeId u, NodeId v, Direction direction,
                            std::optional<LayerId> excluded = std::nullopt) {
    LayerMask mask = direction == Direction::directed ? net.nominated(u, v) : net.nominated(v, u);
    if (excluded)
        mask &= ~layer_bit(*excluded);
    return mask != 0;
}

namespace detail {

inline constexpr int unreached = -1;

/// Depth-limited BFS over admissible steps. When `validity` is set, only the
/// source and validated nodes are expanded (others may still be reached).
inline void pathway_bfs(const MultiplexNetwork &net, NodeId source, Direction direction, LayerMask allowed,
                        const ValidityOracle *validity, int max_depth, std::vector<int> &dist,
                        std::vector<NodeId> &queue) {
    std::fill(dist.begin(), dist.end(), unreached);
    queue.clear();
    dist[source] = 0;
    queue.push_back(source);
    for (std::size_t head = 0; head < queue.size(); ++head) {
        NodeId v = queue[head];
        if (dist[v] >= max_depth)
            continue;
        if (validity && v != source && !validity->validated(v))
            continue;
        for (const auto &tie : net.ties(v)) {
            if (dist[tie.other] != unreached || (step_mask(tie, direction) & allowed) == 0)
                continue;
            dist[tie.other] = dist[v] + 1;
            queue.push_back(tie.other);
        }
    }
}

struct ExposureContext {
    const MultiplexNetwork &net;
    std::span<const PathwayConfig> configs;
    ValidityOracle validity;
    std::vector<char> intervened;

    ExposureContext(const MultiplexNetwork &network, const VillagePanel &panel,
                    std::span<const PathwayConfig> cfgs, std::size_t topic)
        : net(network), configs(cfgs), validity(panel, topic), intervened(network.node_count(), 0) {
        if (configs.empty())
            throw std::invalid_argument("no pathway configuration given");
        const PathwayConfig &base = configs.front();
        for (const auto &cfg : configs) {
            cfg.validate();
            net.check_layer(cfg.layer);
            if (cfg.k != base.k || cfg.mode != base.mode || cfg.direction != base.direction ||
                cfg.alters_follow_mode != base.alters_follow_mode)
                throw std::invalid_argument("exposure configs may differ only in the layer");
        }
        panel.require_complete(net.node_count());
        for (NodeId v = 0; v < net.node_count(); ++v)
            intervened[v] = panel.at(v).topics.at(topic).treated;
    }

    // Writes the record of `focal` for every config into out[c].
    void run(NodeId focal, std::span<ExposureRecord> out) const {
        thread_local std::vector<int> any_route, valid_route, cut_route;
        thread_local std::vector<NodeId> queue;
        const std::size_t n = net.node_count();
        any_route.resize(n);
        valid_route.resize(n);
        cut_route.resize(n);
        const PathwayConfig &base = configs.front();
        const int k = base.k;
        const bool primary = base.mode == PathwayMode::primary;
        const LayerMask all = ~LayerMask{0};

        pathway_bfs(net, focal, base.direction, all, nullptr, k, any_route, queue);
        if (primary)
            pathway_bfs(net, focal, base.direction, all, &validity, k, valid_route, queue);
        const std::vector<int> &mode_route = primary ? valid_route : any_route;

        // k-degree alters: exact admissible distance k, joined by a length-k
        // route the mode allows.
        std::vector<NodeId> counted;
        int all_alters = 0, mode_alters = 0;
        for (NodeId j = 0; j < n; ++j) {
            if (any_route[j] != k)
                continue;
            ++all_alters;
            if (mode_route[j] == k) {
                ++mode_alters;
                if (intervened[j])
                    counted.push_back(j);
            }
        }
        const int alters = base.alters_follow_mode ? mode_alters : all_alters;

        for (std::size_t c = 0; c < configs.size(); ++c) {
            ExposureRecord &rec = out[c];
            rec = ExposureRecord{focal, 0, 0, alters};
            if (counted.empty())
                continue;
            // Critical: no admissible length-k route survives removal of the
            // layer, whatever the validity of its intermediaries.
            pathway_bfs(net, focal, base.direction, ~layer_bit(configs[c].layer), nullptr, k, cut_route, queue);
            for (NodeId j : counted) {
                if (cut_route[j] == k)
                    ++rec.xi_other;
                else
                    ++rec.xi_layer;
            }
        }
    }
};

} // namespace detail

/// Exposure of every node for several layers at once, sharing the sweeps
/// that do not depend on the layer. Configs may differ only in the layer.
/// Result[c][v] is the record of node v under configs[c].
inline std::vector<std::vector<ExposureRecord>>
exposure_by_layer(const MultiplexNetwork &net, const VillagePanel &panel, std::span<const PathwayConfig> configs,
                  std::size_t topic, unsigned threads = 1) {
    const std::size_t n = net.node_count();
    const detail::ExposureContext ctx(net, panel, configs, topic);
    std::vector<std::vector<ExposureRecord>> by_node(n, std::vector<ExposureRecord>(configs.size()));
    parallel_for(n, threads, [&](std::size_t f) { ctx.run(static_cast<NodeId>(f), by_node[f]); });
    std::vector<std::vector<ExposureRecord>> out(configs.size(), std::vector<ExposureRecord>(n));
    for (std::size_t f = 0; f < n; ++f)
        for (std::size_t c = 0; c < configs.size(); ++c)
            out[c][f] = by_node[f][c];
    return out;
}

inline std::vector<ExposureRecord> exposure_table(const MultiplexNetwork &net, const VillagePanel &panel,
                                                  const PathwayConfig &cfg, std::size_t topic, unsigned threads = 1) {
    return std::move(exposure_by_layer(net, panel, std::span(&cfg, 1), topic, threads).front());
}

inline ExposureRecord exposure(const MultiplexNetwork &net, const VillagePanel &panel, NodeId focal,
                               const PathwayConfig &cfg, std::size_t topic) {
    if (!panel.covers(focal))
        throw DataError("focal node " + std::to_string(focal) + " missing from panel");
    const detail::ExposureContext ctx(net, panel, std::span(&cfg, 1), topic);
    ExposureRecord rec;
    ctx.run(focal, std::span(&rec, 1));
    return rec;
}

/// Intervened k-degree alters regardless of layer (xi_layer + xi_other of
/// any layer), used for the layer-free contagion screen.
inline std::vector<int> total_exposure(const std::vector<ExposureRecord> &records) {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto &r : records)
        out.push_back(r.xi_layer + r.xi_other);
    return out;
}

} // namespace mtorque
