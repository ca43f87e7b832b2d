#pragma once

#include <mtorque/multiplex_graph.hpp>
#include <mtorque/parallel.hpp>

#include <cstdint>
#include <limits>
#include <vector>

namespace mtorque {

using Distance = std::uint32_t;

/// Sentinel for unreachable pairs; compares greater than any hop count.
inline constexpr Distance infinite_distance = std::numeric_limits<Distance>::max();

class DistanceMatrix {
public:
    explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, infinite_distance) {}

    std::size_t size() const noexcept { return n_; }
    Distance operator()(NodeId i, NodeId j) const { return d_[static_cast<std::size_t>(i) * n_ + j]; }
    std::span<Distance> row(NodeId i) { return {d_.data() + static_cast<std::size_t>(i) * n_, n_}; }
    std::span<const Distance> row(NodeId i) const {
        return {d_.data() + static_cast<std::size_t>(i) * n_, n_};
    }

private:
    std::size_t n_;
    std::vector<Distance> d_;
};

/// Hop distances from `source`; `out` has one slot per node. `queue` is
/// scratch space reused across calls.
inline void bfs_distances(const SimpleGraph &g, NodeId source, std::span<Distance> out,
                          std::vector<NodeId> &queue) {
    std::fill(out.begin(), out.end(), infinite_distance);
    queue.clear();
    out[source] = 0;
    queue.push_back(source);
    for (std::size_t head = 0; head < queue.size(); ++head) {
        NodeId v = queue[head];
        for (NodeId w : g.neighbors(v))
            if (out[w] == infinite_distance) {
                out[w] = out[v] + 1;
                queue.push_back(w);
            }
    }
}

inline DistanceMatrix all_pairs_distances(const SimpleGraph &g, unsigned threads = 1) {
    DistanceMatrix m(g.node_count());
    parallel_for(g.node_count(), threads, [&](std::size_t s) {
        thread_local std::vector<NodeId> queue;
        bfs_distances(g, static_cast<NodeId>(s), m.row(static_cast<NodeId>(s)), queue);
    });
    return m;
}

/// Whether removing `layer` lengthens (or breaks) the shortest i-j route.
/// Throws CriticalityUndefinedError when i and j are disconnected in the
/// composite network.
inline bool criticality(const MultiplexNetwork &net, LayerId layer, NodeId i, NodeId j) {
    net.check_layer(layer);
    if (i == j)
        throw std::invalid_argument("criticality needs two distinct nodes");
    if (i >= net.node_count() || j >= net.node_count())
        throw std::out_of_range("node id out of range");
    std::vector<Distance> before(net.node_count()), after(net.node_count());
    std::vector<NodeId> queue;
    bfs_distances(composite(net), i, before, queue);
    if (before[j] == infinite_distance)
        throw CriticalityUndefinedError("nodes " + std::to_string(i) + " and " + std::to_string(j) +
                                        " are disconnected in the composite network");
    bfs_distances(composite_minus_layer(net, layer), i, after, queue);
    return after[j] > before[j];
}

struct LayerTorque {
    LayerId layer{};
    std::uint64_t critical_pairs = 0;
    double torque = 0.0;
};

struct TorqueReport {
    std::uint64_t connected_pairs = 0;
    std::vector<LayerTorque> layers; // one per registry layer, in id order
};

/// Network torque of every layer. One BFS sweep over the composite plus
/// one over E\L per layer whose removal changes the graph; counting is in
/// integers, so results are identical for any thread count.
inline TorqueReport torque_all_layers(const MultiplexNetwork &net, unsigned threads = 1) {
    const std::size_t n = net.node_count();
    const std::size_t layer_count = net.layer_count();
    const SimpleGraph full = composite(net);

    // A layer whose every dyad has other support leaves E unchanged.
    std::vector<std::size_t> active;
    std::vector<SimpleGraph> removed;
    for (std::size_t l = 0; l < layer_count; ++l) {
        const LayerMask bit = layer_bit(layer_at(l));
        bool changes = false;
        for (const auto &d : net.dyads())
            if (d.support() == bit) {
                changes = true;
                break;
            }
        if (changes) {
            active.push_back(l);
            removed.push_back(composite_minus_layer(net, layer_at(l)));
        }
    }

    std::vector<std::uint64_t> connected(n, 0);
    std::vector<std::vector<std::uint64_t>> critical(n);
    parallel_for(n, threads, [&](std::size_t s) {
        thread_local std::vector<NodeId> queue;
        std::vector<Distance> base(n), cut(n);
        const auto source = static_cast<NodeId>(s);
        bfs_distances(full, source, base, queue);
        for (std::size_t j = s + 1; j < n; ++j)
            connected[s] += base[j] != infinite_distance;
        critical[s].assign(active.size(), 0);
        if (connected[s] == 0)
            return;
        for (std::size_t a = 0; a < active.size(); ++a) {
            bfs_distances(removed[a], source, cut, queue);
            std::uint64_t count = 0;
            for (std::size_t j = s + 1; j < n; ++j)
                count += base[j] != infinite_distance && cut[j] > base[j];
            critical[s][a] = count;
        }
    });

    TorqueReport report;
    for (auto c : connected)
        report.connected_pairs += c;
    report.layers.resize(layer_count);
    for (std::size_t l = 0; l < layer_count; ++l)
        report.layers[l].layer = layer_at(l);
    for (std::size_t a = 0; a < active.size(); ++a) {
        std::uint64_t total = 0;
        for (std::size_t s = 0; s < n; ++s)
            total += critical[s][a];
        report.layers[active[a]].critical_pairs = total;
    }
    if (report.connected_pairs == 0)
        throw UndefinedStatisticError("torque undefined: no connected pairs in the composite network");
    for (auto &lt : report.layers)
        lt.torque = static_cast<double>(lt.critical_pairs) / static_cast<double>(report.connected_pairs);
    return report;
}

/// Fraction of composite-connected unordered pairs critical to `layer`.
inline double network_torque(const MultiplexNetwork &net, LayerId layer) {
    net.check_layer(layer);
    return torque_all_layers(net).layers[to_index(layer)].torque;
}

} // namespace mtorque
