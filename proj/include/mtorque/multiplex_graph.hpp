#pragma once

#include <mtorque/error.hpp>
#include <mtorque/layers.hpp>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mtorque {

using NodeId = std::uint32_t;

/// A directed name-generator report: ego named alter on one layer.
struct Nomination {
    NodeId ego;
    NodeId alter;
    LayerId layer;

    auto operator<=>(const Nomination &) const = default;
};

/// Aggregated layer support of an unordered pair u < v.
/// forward holds the layers on which u nominated v, backward those on which
/// v nominated u.
struct Dyad {
    NodeId u;
    NodeId v;
    LayerMask forward = 0;
    LayerMask backward = 0;

    LayerMask support() const noexcept { return forward | backward; }
    bool supported_by(LayerId layer) const noexcept { return (support() & layer_bit(layer)) != 0; }
    bool operator==(const Dyad &) const = default;
};

/// Adjacency entry of a node: the other endpoint plus nomination masks as
/// seen from the owning node.
struct Tie {
    NodeId other;
    LayerMask outgoing; // owner nominated other
    LayerMask incoming; // other nominated owner
};

struct Edge {
    NodeId u;
    NodeId v;
    auto operator<=>(const Edge &) const = default;
};

/// Directed, layer-tagged nomination network of one village. Immutable.
class MultiplexNetwork {
public:
    MultiplexNetwork() = default;

    /// Validates and aggregates nominations. Duplicate triples collapse;
    /// out-of-range ids, unknown layers and self-nominations raise an
    /// IngestError naming the offending (0-based) row.
    MultiplexNetwork(std::size_t node_count, std::size_t layer_count, std::span<const Nomination> rows)
        : n_(node_count), layers_(layer_count) {
        if (layer_count > max_layers)
            throw IngestError("too many layers (maximum 64)");
        nominations_.reserve(rows.size());
        for (std::size_t row = 0; row < rows.size(); ++row) {
            const auto &nom = rows[row];
            if (nom.ego >= n_ || nom.alter >= n_)
                throw IngestError("row " + std::to_string(row) + ": node id out of range (n = " +
                                  std::to_string(n_) + ")");
            if (to_index(nom.layer) >= layers_)
                throw IngestError("row " + std::to_string(row) + ": unknown layer id " +
                                  std::to_string(to_index(nom.layer)));
            if (nom.ego == nom.alter)
                throw IngestError("row " + std::to_string(row) + ": self-nomination of node " +
                                  std::to_string(nom.ego));
            nominations_.push_back(nom);
        }
        std::sort(nominations_.begin(), nominations_.end());
        nominations_.erase(std::unique(nominations_.begin(), nominations_.end()), nominations_.end());
        collapsed_ = rows.size() - nominations_.size();
        index();
    }

    std::size_t node_count() const noexcept { return n_; }
    std::size_t layer_count() const noexcept { return layers_; }

    /// Sorted, duplicate-free nominations.
    std::span<const Nomination> nominations() const noexcept { return nominations_; }
    std::size_t collapsed_duplicates() const noexcept { return collapsed_; }

    /// Dyads sorted by (u, v) with u < v.
    std::span<const Dyad> dyads() const noexcept { return dyads_; }

    std::span<const Tie> ties(NodeId node) const {
        return {ties_.data() + tie_offsets_[node], ties_.data() + tie_offsets_[node + 1]};
    }

    const Dyad *find_dyad(NodeId a, NodeId b) const {
        if (a > b)
            std::swap(a, b);
        auto it = std::lower_bound(dyads_.begin(), dyads_.end(), std::pair{a, b},
                                   [](const Dyad &d, const std::pair<NodeId, NodeId> &key) {
                                       return std::pair{d.u, d.v} < key;
                                   });
        if (it != dyads_.end() && it->u == a && it->v == b)
            return &*it;
        return nullptr;
    }

    /// Layers on which `from` nominated `to`.
    LayerMask nominated(NodeId from, NodeId to) const {
        const Dyad *d = find_dyad(from, to);
        if (!d)
            return 0;
        return from < to ? d->forward : d->backward;
    }

    void check_layer(LayerId layer) const {
        if (to_index(layer) >= layers_)
            throw UnknownLayerError("unknown layer id " + std::to_string(to_index(layer)));
    }

    /// Dyads supported by `layer`.
    std::size_t dyad_count(LayerId layer) const {
        check_layer(layer);
        return static_cast<std::size_t>(std::count_if(dyads_.begin(), dyads_.end(),
                                                      [&](const Dyad &d) { return d.supported_by(layer); }));
    }

private:
    void index() {
        std::vector<Dyad> raw;
        raw.reserve(nominations_.size());
        for (const auto &nom : nominations_) {
            Dyad d{std::min(nom.ego, nom.alter), std::max(nom.ego, nom.alter), 0, 0};
            (nom.ego < nom.alter ? d.forward : d.backward) = layer_bit(nom.layer);
            raw.push_back(d);
        }
        std::sort(raw.begin(), raw.end(),
                  [](const Dyad &a, const Dyad &b) { return std::pair{a.u, a.v} < std::pair{b.u, b.v}; });
        std::vector<Dyad> merged;
        merged.reserve(raw.size());
        for (const auto &d : raw) {
            if (!merged.empty() && merged.back().u == d.u && merged.back().v == d.v) {
                merged.back().forward |= d.forward;
                merged.back().backward |= d.backward;
            } else {
                merged.push_back(d);
            }
        }
        dyads_ = std::move(merged);

        tie_offsets_.assign(n_ + 1, 0);
        for (const auto &d : dyads_) {
            ++tie_offsets_[d.u + 1];
            ++tie_offsets_[d.v + 1];
        }
        for (std::size_t i = 0; i < n_; ++i)
            tie_offsets_[i + 1] += tie_offsets_[i];
        ties_.resize(tie_offsets_[n_]);
        std::vector<std::size_t> fill(tie_offsets_.begin(), tie_offsets_.end() - 1);
        for (const auto &d : dyads_) {
            ties_[fill[d.u]++] = {d.v, d.forward, d.backward};
            ties_[fill[d.v]++] = {d.u, d.backward, d.forward};
        }
    }

    std::size_t n_ = 0;
    std::size_t layers_ = 0;
    std::vector<Nomination> nominations_;
    std::size_t collapsed_ = 0;
    std::vector<Dyad> dyads_;
    std::vector<std::size_t> tie_offsets_{0};
    std::vector<Tie> ties_;
};

inline MultiplexNetwork build_network(std::span<const Nomination> nominations, std::size_t node_count,
                                      std::size_t layer_count) {
    return MultiplexNetwork(node_count, layer_count, nominations);
}

/// Undirected, unweighted graph in compressed adjacency form.
class SimpleGraph {
public:
    SimpleGraph() = default;

    SimpleGraph(std::size_t node_count, std::vector<Edge> edges) : n_(node_count) {
        for (auto &e : edges) {
            if (e.u >= n_ || e.v >= n_)
                throw std::invalid_argument("edge endpoint out of range");
            if (e.u == e.v)
                throw std::invalid_argument("self-loop in simple graph");
            if (e.u > e.v)
                std::swap(e.u, e.v);
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        edges_ = std::move(edges);

        offsets_.assign(n_ + 1, 0);
        for (const auto &e : edges_) {
            ++offsets_[e.u + 1];
            ++offsets_[e.v + 1];
        }
        for (std::size_t i = 0; i < n_; ++i)
            offsets_[i + 1] += offsets_[i];
        adjacency_.resize(offsets_[n_]);
        adjacent_edge_.resize(offsets_[n_]);
        std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
        for (std::size_t idx = 0; idx < edges_.size(); ++idx) {
            const auto &e = edges_[idx];
            adjacency_[fill[e.u]] = e.v;
            adjacent_edge_[fill[e.u]++] = idx;
            adjacency_[fill[e.v]] = e.u;
            adjacent_edge_[fill[e.v]++] = idx;
        }
        // Edges sorted by (u, v) fill every adjacency list in ascending order.
    }

    std::size_t node_count() const noexcept { return n_; }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    std::span<const Edge> edges() const noexcept { return edges_; }

    std::span<const NodeId> neighbors(NodeId v) const {
        return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
    }
    /// Edge indices parallel to neighbors(v).
    std::span<const std::size_t> incident_edges(NodeId v) const {
        return {adjacent_edge_.data() + offsets_[v], adjacent_edge_.data() + offsets_[v + 1]};
    }
    std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }

    bool has_edge(NodeId a, NodeId b) const {
        auto nb = neighbors(a);
        return std::binary_search(nb.begin(), nb.end(), b);
    }

private:
    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> adjacency_;
    std::vector<std::size_t> adjacent_edge_;
};

namespace detail {

inline SimpleGraph filter_dyads(const MultiplexNetwork &net, const std::function<bool(const Dyad &)> &keep) {
    std::vector<Edge> edges;
    for (const auto &d : net.dyads())
        if (keep(d))
            edges.push_back({d.u, d.v});
    return SimpleGraph(net.node_count(), std::move(edges));
}

} // namespace detail

/// The composite network: an edge wherever any layer has a nomination in
/// either direction.
inline SimpleGraph composite(const MultiplexNetwork &net) {
    return detail::filter_dyads(net, [](const Dyad &d) { return d.support() != 0; });
}

/// Composite network after removing `layer`. A dyad survives when some
/// other layer still supports it.
inline SimpleGraph composite_minus_layer(const MultiplexNetwork &net, LayerId layer) {
    net.check_layer(layer);
    const LayerMask keep = ~layer_bit(layer);
    return detail::filter_dyads(net, [keep](const Dyad &d) { return (d.support() & keep) != 0; });
}

inline SimpleGraph layer_subgraph(const MultiplexNetwork &net, LayerId layer) {
    net.check_layer(layer);
    return detail::filter_dyads(net, [layer](const Dyad &d) { return d.supported_by(layer); });
}

} // namespace mtorque
