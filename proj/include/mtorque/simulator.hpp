#pragma once

#include <mtorque/contagion_model.hpp>
#include <mtorque/critical_pathways.hpp>
#include <mtorque/error.hpp>
#include <mtorque/layers.hpp>
#include <mtorque/logit.hpp>
#include <mtorque/multiplex_graph.hpp>
#include <mtorque/panel.hpp>
#include <mtorque/parallel.hpp>
#include <mtorque/random.hpp>
#include <mtorque/structural_metrics.hpp>
#include <mtorque/torque.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mtorque {

enum class LayerShape {
    kin_partner, ///< head of household and partner
    kin_parent,  ///< children nominate the household's adults
    kin_sibling, ///< children of one household, plus adult siblings elsewhere
    small_world, ///< ring neighbourhood with random rewiring
    chain,       ///< forward steps along the ring, preferring popular alters
    hub,         ///< ties to a few central nodes
};

inline bool is_kin(LayerShape s) {
    return s == LayerShape::kin_partner || s == LayerShape::kin_parent || s == LayerShape::kin_sibling;
}

struct LayerGenSpec {
    std::string name;
    LayerShape shape = LayerShape::small_world;
    double mean_degree = 1.0;     ///< dyads per node (non-kin shapes)
    double monoplexity = 0.5;     ///< target share of single-layer dyads (non-kin shapes)
    double reciprocity = 0.3;     ///< chance a dyad is nominated both ways
    double rewire = 0.1;          ///< small_world: chance of a uniformly random alter
    int reach = 0;                ///< ring window; 0 picks one from the mean degree
    bool exclude_kin = false;     ///< never share a dyad with a kin layer
    double cross_household = 0.0; ///< kin_sibling: extra sibling dyads per household head
};

struct VillageGenConfig {
    std::size_t n = 120;
    double household_mean = 2.5;
    double household_sd = 1.4;
    double partner_rate = 0.7; ///< households of two or more with a partnered head
    std::size_t topic_count = 1;
    std::vector<LayerGenSpec> layers;

    LayerRegistry registry() const {
        std::vector<std::string> names;
        for (const auto &l : layers)
            names.push_back(l.name);
        return LayerRegistry(names);
    }

    void validate() const {
        if (n < 2)
            throw ConfigError("village population must be at least 2");
        if (layers.empty() || layers.size() > 64)
            throw ConfigError("between 1 and 64 layers are required");
        if (!(household_mean >= 1.0) || !(household_sd >= 0.0))
            throw ConfigError("household mean must be at least 1 and sd non-negative");
        const double extra_mean = household_mean - 1.0, extra_var = household_sd * household_sd;
        if (extra_mean > 0 && extra_var <= extra_mean)
            throw ConfigError("household size sd is too small for a negative-binomial draw");
        for (const auto &l : layers) {
            auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
            if (!in_unit(l.monoplexity) || !in_unit(l.reciprocity) || !in_unit(l.rewire))
                throw ConfigError("layer '" + l.name + "': probabilities must lie in [0, 1]");
            if (l.mean_degree < 0 || l.cross_household < 0)
                throw ConfigError("layer '" + l.name + "': degrees must be non-negative");
            if (!is_kin(l.shape) && l.mean_degree >= static_cast<double>(n - 1))
                throw ConfigError("layer '" + l.name + "': mean degree must be below n - 1");
        }
    }
};

/// Layer profiles loosely following the descriptive statistics of rural
/// village networks: cohesive kin blocks, bridging closest friends, and
/// chain-like money and advice layers.
inline std::vector<LayerGenSpec> default_layer_specs() {
    using S = LayerShape;
    return {
        {"parent", S::kin_parent, 0, 0, 0.6, 0, 0, false, 0},
        {"sibling", S::kin_sibling, 0, 0, 0.7, 0, 0, false, 0.8},
        {"partner", S::kin_partner, 0, 0, 0.9, 0, 0, false, 0},
        {"patron", S::hub, 0.15, 0.56, 0.05, 0, 0, false, 0},
        {"personal_private", S::small_world, 1.0, 0.3, 0.4, 0.05, 0, false, 0},
        {"free_time", S::small_world, 2.0, 0.2, 0.5, 0.05, 0, false, 0},
        {"closest_friend", S::small_world, 1.6, 0.54, 0.4, 0.3, 0, true, 0},
        {"borrow_money", S::chain, 1.0, 0.3, 0.2, 0, 3, false, 0},
        {"lend_money", S::chain, 0.8, 0.3, 0.2, 0, 3, false, 0},
        {"health_advice_give", S::chain, 0.8, 0.3, 0.3, 0, 3, false, 0},
        {"health_advice_get", S::chain, 1.0, 0.3, 0.3, 0, 3, false, 0},
    };
}

namespace detail {

// Household sizes are 1 + a negative binomial draw matching the configured
// mean and sd, sampled by inversion of the pmf.
inline std::vector<double> household_size_cdf(double mean, double sd, std::size_t cap) {
    const double mu = mean - 1.0;
    std::vector<double> cdf;
    double acc = 0.0;
    for (std::size_t x = 0; x + 1 < cap; ++x) {
        double pmf;
        if (mu <= 0.0) {
            pmf = x == 0 ? 1.0 : 0.0;
        } else {
            const double r = mu * mu / (sd * sd - mu), prob = r / (r + mu);
            const double xd = static_cast<double>(x);
            pmf = std::exp(std::lgamma(xd + r) - std::lgamma(r) - std::lgamma(xd + 1.0) + r * std::log(prob) +
                           xd * std::log1p(-prob));
        }
        acc += pmf;
        cdf.push_back(acc);
    }
    for (auto &c : cdf)
        c /= acc;
    return cdf;
}

struct DyadState {
    LayerMask support = 0;
    bool reserved = false; // a layer's monoplex dyad; never shared
};

class VillageBuilder {
public:
    VillageBuilder(std::size_t n, const std::vector<LayerGenSpec> &specs, Rng &rng)
        : n_(n), specs_(specs), rng_(rng), neighbours_(n), in_degree_(specs.size(), std::vector<int>(n, 0)) {
        for (std::size_t l = 0; l < specs.size(); ++l)
            if (is_kin(specs[l].shape))
                kin_mask_ |= layer_bit(layer_at(l));
    }

    std::vector<Nomination> nominations;

    const DyadState *find(NodeId a, NodeId b) const {
        auto it = dyads_.find(key(a, b));
        return it == dyads_.end() ? nullptr : &it->second;
    }

    void add_tie(NodeId ego, NodeId alter, std::size_t layer, bool reserved = false) {
        auto [it, inserted] = dyads_.try_emplace(key(ego, alter));
        if (inserted) {
            neighbours_[ego].push_back(alter);
            neighbours_[alter].push_back(ego);
        }
        it->second.support |= layer_bit(layer_at(layer));
        it->second.reserved = it->second.reserved || reserved;
        nominations.push_back({ego, alter, layer_at(layer)});
        ++in_degree_[layer][alter];
        if (bernoulli(rng_, specs_[layer].reciprocity)) {
            nominations.push_back({alter, ego, layer_at(layer)});
            ++in_degree_[layer][ego];
        }
    }

    void build_kin(const std::vector<std::vector<NodeId>> &households, double partner_rate) {
        // Adults: the head and, in some households, a partner.
        std::vector<std::size_t> adults(households.size(), 1);
        for (std::size_t h = 0; h < households.size(); ++h)
            if (households[h].size() >= 2 && bernoulli(rng_, partner_rate))
                adults[h] = 2;
        for (std::size_t l = 0; l < specs_.size(); ++l) {
            const auto &spec = specs_[l];
            if (spec.shape == LayerShape::kin_partner) {
                for (std::size_t h = 0; h < households.size(); ++h)
                    if (adults[h] == 2)
                        add_tie(households[h][0], households[h][1], l);
            } else if (spec.shape == LayerShape::kin_parent) {
                for (std::size_t h = 0; h < households.size(); ++h)
                    for (std::size_t c = adults[h]; c < households[h].size(); ++c)
                        for (std::size_t a = 0; a < adults[h]; ++a)
                            add_tie(households[h][c], households[h][a], l);
            } else if (spec.shape == LayerShape::kin_sibling) {
                for (std::size_t h = 0; h < households.size(); ++h)
                    for (std::size_t c = adults[h]; c < households[h].size(); ++c)
                        for (std::size_t d = c + 1; d < households[h].size(); ++d)
                            add_tie(households[h][c], households[h][d], l);
                // Adult siblings head their own households.
                const std::size_t links = static_cast<std::size_t>(
                    std::llround(spec.cross_household * static_cast<double>(households.size()) / 2.0));
                for (std::size_t e = 0; e < links && households.size() > 1; ++e) {
                    NodeId a = households[uniform_index(rng_, households.size())][0];
                    NodeId b = households[uniform_index(rng_, households.size())][0];
                    if (a != b)
                        add_tie(a, b, l);
                }
            }
        }
    }

    void build_layer(std::size_t layer) {
        const auto &spec = specs_[layer];
        const auto total = static_cast<std::size_t>(std::llround(spec.mean_degree * static_cast<double>(n_) / 2.0));
        if (spec.shape == LayerShape::hub) {
            const std::size_t hubs = std::max<std::size_t>(1, n_ / 40);
            hubs_.clear();
            for (std::size_t h = 0; h < hubs; ++h)
                hubs_.push_back(static_cast<NodeId>(uniform_index(rng_, n_)));
        }
        // Single-layer dyads are rationed so their running share tracks the
        // target; a failed attempt to share falls back to a fresh dyad.
        std::size_t made = 0, single = 0;
        for (std::size_t t = 0; t < total; ++t) {
            const auto ego = static_cast<NodeId>(uniform_index(rng_, n_));
            const bool own = static_cast<double>(single) < spec.monoplexity * static_cast<double>(made + 1) - 0.5;
            if (!own) {
                if (auto alter = shared_alter(ego, layer)) {
                    add_tie(ego, *alter, layer);
                    ++made;
                    continue;
                }
                if (auto alter = shape_alter(ego, layer, true)) {
                    add_tie(ego, *alter, layer);
                    pending_.push_back({ego, *alter, layer_at(layer)});
                    ++made;
                    continue;
                }
            }
            if (auto alter = shape_alter(ego, layer, true)) {
                add_tie(ego, *alter, layer, true);
                ++made;
                ++single;
                continue;
            }
            if (auto alter = shape_alter(ego, layer, false)) {
                add_tie(ego, *alter, layer);
                ++made;
            }
        }
    }

    /// Gives every shared dyad that no other layer picked up a second,
    /// non-kin layer, chosen in proportion to mean degree.
    void pair_pending() {
        for (const auto &nom : pending_) {
            const DyadState *d = find(nom.ego, nom.alter);
            if (std::popcount(d->support) > 1)
                continue;
            std::vector<double> weight(specs_.size(), 0.0);
            double sum = 0.0;
            for (std::size_t l = 0; l < specs_.size(); ++l)
                if (!is_kin(specs_[l].shape) && specs_[l].shape != LayerShape::hub && layer_at(l) != nom.layer) {
                    weight[l] = specs_[l].mean_degree;
                    sum += weight[l];
                }
            if (sum <= 0.0)
                continue;
            double u = uniform01(rng_) * sum;
            std::size_t pick = 0;
            for (std::size_t l = 0; l < specs_.size(); ++l) {
                if (weight[l] <= 0.0)
                    continue;
                pick = l;
                u -= weight[l];
                if (u < 0.0)
                    break;
            }
            add_tie(nom.ego, nom.alter, pick);
        }
    }

private:
    std::uint64_t key(NodeId a, NodeId b) const {
        if (a > b)
            std::swap(a, b);
        return static_cast<std::uint64_t>(a) * n_ + b;
    }

    bool usable(NodeId ego, NodeId alter, std::size_t layer, bool fresh) const {
        if (alter == ego)
            return false;
        const DyadState *d = find(ego, alter);
        if (!d)
            return true;
        if (fresh || d->reserved || (d->support & layer_bit(layer_at(layer))))
            return false;
        return !(specs_[layer].exclude_kin && (d->support & kin_mask_));
    }

    // An existing, shareable neighbour of ego.
    std::optional<NodeId> shared_alter(NodeId ego, std::size_t layer) {
        std::vector<NodeId> candidates;
        for (NodeId w : neighbours_[ego]) {
            if (!usable(ego, w, layer, false))
                continue;
            if (specs_[layer].shape == LayerShape::hub && std::find(hubs_.begin(), hubs_.end(), w) == hubs_.end())
                continue;
            candidates.push_back(w);
        }
        if (candidates.empty())
            return std::nullopt;
        return candidates[uniform_index(rng_, candidates.size())];
    }

    int window(const LayerGenSpec &spec) const {
        if (spec.reach > 0)
            return spec.reach;
        return std::max(2, static_cast<int>(std::ceil(spec.mean_degree)));
    }

    NodeId ring(NodeId ego, long offset) const {
        const long n = static_cast<long>(n_);
        return static_cast<NodeId>(((static_cast<long>(ego) + offset) % n + n) % n);
    }

    // An alter drawn by the layer's shape; `fresh` requires an untouched dyad.
    std::optional<NodeId> shape_alter(NodeId ego, std::size_t layer, bool fresh) {
        const auto &spec = specs_[layer];
        const int w = std::min<int>(window(spec), static_cast<int>((n_ - 1) / 2 > 0 ? (n_ - 1) / 2 : 1));
        for (int attempt = 0; attempt < 24; ++attempt) {
            NodeId alter = ego;
            switch (spec.shape) {
            case LayerShape::small_world:
                if (bernoulli(rng_, spec.rewire)) {
                    alter = static_cast<NodeId>(uniform_index(rng_, n_));
                } else {
                    const long d = 1 + static_cast<long>(uniform_index(rng_, static_cast<std::uint64_t>(w)));
                    alter = ring(ego, bernoulli(rng_, 0.5) ? d : -d);
                }
                break;
            case LayerShape::chain: {
                std::vector<double> weight(static_cast<std::size_t>(w));
                double sum = 0.0;
                for (int d = 1; d <= w; ++d) {
                    weight[static_cast<std::size_t>(d - 1)] = 1.0 + in_degree_[layer][ring(ego, d)];
                    sum += weight[static_cast<std::size_t>(d - 1)];
                }
                double u = uniform01(rng_) * sum;
                int pick = w;
                for (int d = 1; d <= w; ++d) {
                    u -= weight[static_cast<std::size_t>(d - 1)];
                    if (u < 0) {
                        pick = d;
                        break;
                    }
                }
                alter = ring(ego, pick);
                break;
            }
            case LayerShape::hub:
                alter = hubs_[uniform_index(rng_, hubs_.size())];
                break;
            default:
                return std::nullopt;
            }
            if (usable(ego, alter, layer, fresh))
                return alter;
        }
        return std::nullopt;
    }

    std::size_t n_;
    const std::vector<LayerGenSpec> &specs_;
    Rng &rng_;
    std::unordered_map<std::uint64_t, DyadState> dyads_;
    std::vector<std::vector<NodeId>> neighbours_;
    std::vector<std::vector<int>> in_degree_;
    std::vector<NodeId> hubs_;
    std::vector<Nomination> pending_;
    LayerMask kin_mask_ = 0;
};

} // namespace detail

/// A synthetic village: households on consecutive ids around a ring, kin
/// layers from household structure, other layers from their shapes, and
/// random demographic covariates. Treatment and knowledge are left unset.
inline Village generate_village(const VillageGenConfig &cfg, std::uint64_t seed, std::string name = "village") {
    cfg.validate();
    Rng rng = make_rng(seed);
    const std::size_t n = cfg.n;

    auto cdf = detail::household_size_cdf(cfg.household_mean, cfg.household_sd, 16);
    std::vector<std::vector<NodeId>> households;
    for (NodeId next = 0; next < n;) {
        const double u = uniform01(rng);
        std::size_t size = 1 + static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        size = std::min(size, n - next);
        std::vector<NodeId> members(size);
        std::iota(members.begin(), members.end(), next);
        households.push_back(std::move(members));
        next += static_cast<NodeId>(size);
    }

    detail::VillageBuilder builder(n, cfg.layers, rng);
    builder.build_kin(households, cfg.partner_rate);
    for (std::size_t l = 0; l < cfg.layers.size(); ++l)
        if (!is_kin(cfg.layers[l].shape))
            builder.build_layer(l);
    builder.pair_pending();

    Village village;
    village.name = std::move(name);
    for (NodeId i = 0; i < n; ++i)
        village.ids.intern(std::to_string(i));
    village.network = build_network(builder.nominations, n, cfg.layers.size());

    village.panel = VillagePanel(n);
    for (std::size_t h = 0; h < households.size(); ++h)
        for (NodeId member : households[h]) {
            Person p;
            p.household = "h" + std::to_string(h);
            std::size_t noms = 0;
            for (const auto &tie : village.network.ties(member))
                noms += static_cast<std::size_t>(std::popcount(tie.outgoing) + std::popcount(tie.incoming));
            p.sociability = static_cast<double>(noms);
            p.age = std::floor(16.0 + 60.0 * uniform01(rng));
            p.gender = bernoulli(rng, 0.58) ? 1.0 : 0.0;
            p.education = std::floor(12.0 * uniform01(rng));
            p.income = 1.0 + static_cast<double>(uniform_index(rng, 4));
            p.self_health = 1.0 + static_cast<double>(uniform_index(rng, 5));
            p.topics.assign(cfg.topic_count, TopicRecord{});
            village.panel.set(member, std::move(p));
        }
    return village;
}

/// Treats whole households, drawn uniformly without replacement, until at
/// least `fraction` of the population is treated. Every topic is treated.
inline void assign_intervention(VillagePanel &panel, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw ConfigError("treated fraction must lie in [0, 1]");
    std::vector<std::string> names;
    std::unordered_map<std::string, std::vector<NodeId>> members;
    std::size_t people = 0;
    for (NodeId v = 0; v < panel.size(); ++v) {
        if (!panel.covers(v))
            continue;
        ++people;
        auto &list = members[panel.at(v).household];
        if (list.empty())
            names.push_back(panel.at(v).household);
        list.push_back(v);
        for (auto &t : panel.at(v).topics)
            t.treated = false;
    }
    const auto target = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(people) - 1e-9));
    Rng rng = make_rng(seed);
    std::size_t treated = 0;
    for (std::size_t i = 0; i < names.size() && treated < target; ++i) {
        std::swap(names[i], names[i + uniform_index(rng, names.size() - i)]);
        for (NodeId v : members[names[i]]) {
            for (auto &t : panel.at(v).topics)
                t.treated = true;
            ++treated;
        }
    }
}

/// Draws baseline accuracy on a topic: logit P(K = 1) = logit(rate) +
/// education_effect * standardized education.
inline void assign_baseline(VillagePanel &panel, std::size_t topic, double rate, std::uint64_t seed,
                            double education_effect = 0.0) {
    if (!(rate > 0.0 && rate < 1.0))
        throw ConfigError("baseline rate must lie in (0, 1)");
    Rng rng = make_rng(seed);
    const double base = std::log(rate / (1.0 - rate));
    for (NodeId v = 0; v < panel.size(); ++v) {
        if (!panel.covers(v))
            continue;
        Person &p = panel.at(v);
        const double edu = p.education ? (*p.education - 5.5) / 3.45 : 0.0;
        p.topics.at(topic).k_w1 = bernoulli(rng, inverse_logit(base + education_effect * edu)) ? 1 : 0;
    }
}

struct DiffusionConfig {
    std::vector<double> probability; ///< per layer, per attempt
    int rounds = 4;
    double uptake = 1.0;     ///< treated nodes learn at the start
    double forgetting = 0.0; ///< baseline knowers who lose it before diffusion
    double background = 0.0; ///< spontaneous learning at the start
    std::size_t topic = 0;

    void validate(std::size_t layer_count) const {
        if (probability.size() != layer_count)
            throw ConfigError("one transmission probability per layer is required");
        for (double p : probability)
            if (!(p >= 0.0 && p <= 1.0))
                throw ConfigError("transmission probabilities must lie in [0, 1]");
        for (double p : {uptake, forgetting, background})
            if (!(p >= 0.0 && p <= 1.0))
                throw ConfigError("uptake, forgetting and background must lie in [0, 1]");
        if (rounds < 0)
            throw ConfigError("rounds must be non-negative");
    }
};

/// Independent-cascade spread with absorbing knowledge. Knowledge flows
/// from a nominated alter B to the ego A who nominated B; each newly
/// knowledgeable node gets one attempt per layer on each such ego. Sets
/// K_w3 on the topic. Every coin is keyed by node, or by (B, A, layer), so
/// runs with different starting knowers share their randomness.
inline void simulate_diffusion(const MultiplexNetwork &net, VillagePanel &panel, const DiffusionConfig &dcfg,
                               std::uint64_t seed) {
    dcfg.validate(net.layer_count());
    panel.require_complete(net.node_count());
    const std::size_t n = net.node_count();
    std::vector<char> knows(n, 0);
    std::vector<NodeId> frontier;
    for (NodeId v = 0; v < n; ++v) {
        const TopicRecord &rec = panel.at(v).topics.at(dcfg.topic);
        Rng rng = make_rng(seed, {0, v});
        const bool forgot = bernoulli(rng, dcfg.forgetting);
        const bool took_up = bernoulli(rng, dcfg.uptake);
        const bool spontaneous = bernoulli(rng, dcfg.background);
        if ((rec.k_w1.value_or(0) == 1 && !forgot) || (rec.treated && took_up) || spontaneous) {
            knows[v] = 1;
            frontier.push_back(v);
        }
    }
    for (int round = 0; round < dcfg.rounds && !frontier.empty(); ++round) {
        std::vector<NodeId> next;
        for (NodeId b : frontier)
            for (const auto &tie : net.ties(b)) {
                const NodeId a = tie.other;
                if (knows[a])
                    continue;
                // a nominated b on the layers in tie.incoming
                for (LayerMask m = tie.incoming; m != 0; m &= m - 1) {
                    const auto l = static_cast<std::uint64_t>(std::countr_zero(m));
                    if (keyed_uniform01(seed, {1, b, a, l}) < dcfg.probability[l]) {
                        knows[a] = 1;
                        next.push_back(a);
                        break;
                    }
                }
            }
        frontier = std::move(next);
    }
    for (NodeId v = 0; v < n; ++v)
        panel.at(v).topics[dcfg.topic].k_w3 = knows[v];
}

/// Seeds households incident to the layer's bridging ties first: dyads only
/// this layer supports, ranked by composite edge betweenness. Remaining
/// capacity is filled at random.
inline void assign_torque_guided(const MultiplexNetwork &net, VillagePanel &panel, LayerId layer, double fraction,
                                 std::uint64_t seed) {
    net.check_layer(layer);
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw ConfigError("treated fraction must lie in [0, 1]");
    panel.require_complete(net.node_count());
    const std::size_t n = net.node_count();
    auto betweenness = edge_betweenness(composite(net));
    std::vector<std::size_t> bridges;
    for (std::size_t i = 0; i < net.dyads().size(); ++i)
        if (net.dyads()[i].support() == layer_bit(layer))
            bridges.push_back(i);
    std::stable_sort(bridges.begin(), bridges.end(),
                     [&](std::size_t a, std::size_t b) { return betweenness[a] > betweenness[b]; });

    std::unordered_map<std::string, std::vector<NodeId>> members;
    for (NodeId v = 0; v < n; ++v) {
        members[panel.at(v).household].push_back(v);
        for (auto &t : panel.at(v).topics)
            t.treated = false;
    }
    const auto target = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    std::size_t treated = 0;
    auto treat_household = [&](NodeId v) {
        if (treated >= target || panel.at(v).topics.empty() || panel.at(v).topics.front().treated)
            return;
        for (NodeId m : members[panel.at(v).household]) {
            for (auto &t : panel.at(m).topics)
                t.treated = true;
            ++treated;
        }
    };
    for (std::size_t i : bridges) {
        treat_household(net.dyads()[i].u);
        treat_household(net.dyads()[i].v);
    }
    Rng rng = make_rng(seed);
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < n; ++i)
        std::swap(order[i], order[i + uniform_index(rng, n - i)]);
    for (NodeId v : order)
        treat_household(v);
}

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::size_t villages = 30;
    std::size_t population_min = 60;
    std::size_t population_max = 140;
    VillageGenConfig generator{.layers = default_layer_specs()};
    double treated_fraction = 0.3;
    double baseline_rate = 0.3;
    double baseline_education_effect = 0.3;
    DiffusionConfig diffusion{.probability = std::vector<double>(11, 0.0), .uptake = 0.7, .forgetting = 0.2, .background = 0.05};
    std::string topic = "topic";
    PathwayConfig pathway{.k = 3};
    int bootstrap = 1000;
    std::vector<std::string> interval_layers; ///< layers that get a bootstrap interval; empty means all
    double level = 0.95;
    unsigned threads = 1;

    void validate() const {
        generator.validate();
        diffusion.validate(generator.layers.size());
        if (villages < 2)
            throw ConfigError("at least two villages are required");
        if (population_min < 2 || population_max < population_min)
            throw ConfigError("population range is invalid");
        if (!(treated_fraction >= 0.0 && treated_fraction <= 1.0))
            throw ConfigError("treated fraction must lie in [0, 1]");
        if (!(baseline_rate > 0.0 && baseline_rate < 1.0))
            throw ConfigError("baseline rate must lie in (0, 1)");
        if (pathway.k < 2)
            throw ConfigError("k must be at least 2");
        if (bootstrap < 0)
            throw ConfigError("bootstrap count must be non-negative");
        if (!(level > 0.0 && level < 1.0))
            throw ConfigError("confidence level must lie in (0, 1)");
    }
};

/// Simulated villages with one topic, ready for estimation.
inline Dataset simulate_dataset(const ExperimentConfig &cfg) {
    cfg.validate();
    Dataset data;
    data.layers = cfg.generator.registry();
    data.topics = {cfg.topic};
    data.villages.resize(cfg.villages);
    const int width = static_cast<int>(std::to_string(cfg.villages - 1).size());
    parallel_for(cfg.villages, cfg.threads, [&](std::size_t v) {
        VillageGenConfig gen = cfg.generator;
        gen.topic_count = 1;
        Rng size_rng = make_rng(cfg.seed, {v, 0});
        gen.n = cfg.population_min + uniform_index(size_rng, cfg.population_max - cfg.population_min + 1);
        std::string name = std::to_string(v);
        name.insert(0, static_cast<std::size_t>(width) - name.size(), '0');
        Village village = generate_village(gen, derive_seed(cfg.seed, {v, 1}), "v" + name);
        assign_intervention(village.panel, cfg.treated_fraction, derive_seed(cfg.seed, {v, 2}));
        assign_baseline(village.panel, 0, cfg.baseline_rate, derive_seed(cfg.seed, {v, 3}),
                        cfg.baseline_education_effect);
        DiffusionConfig dcfg = cfg.diffusion;
        dcfg.topic = 0;
        simulate_diffusion(village.network, village.panel, dcfg, derive_seed(cfg.seed, {v, 4}));
        data.villages[v] = std::move(village);
    });
    return data;
}

struct ExperimentLayer {
    std::string layer;
    double mean_torque = 0.0;
    double transmission = 0.0;
    bool estimated = false; ///< false when nobody has critical-pathway exposure
    ReductionEstimate reduction;
};

struct ExperimentResult {
    std::vector<ExperimentLayer> layers;
    std::optional<SimpleRegression> torque_regression; ///< z-scored reduction on log mean torque
    std::size_t regression_layers = 0;
};

/// Z-scored reductions regressed on log mean torque over layers with
/// positive torque.
inline std::optional<SimpleRegression> torque_reduction_regression(const std::vector<ExperimentLayer> &layers,
                                                                   std::size_t *used = nullptr) {
    std::vector<double> x, r;
    for (const auto &l : layers)
        if (l.mean_torque > 0.0) {
            x.push_back(std::log(l.mean_torque));
            r.push_back(l.reduction.reduction);
        }
    if (used)
        *used = x.size();
    if (x.size() < 3)
        return std::nullopt;
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    double ss = 0.0;
    for (double v : r)
        ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(r.size() - 1));
    if (sd == 0.0)
        return std::nullopt;
    for (auto &v : r)
        v = (v - mean) / sd;
    try {
        return simple_regression(x, r);
    } catch (const UndefinedStatisticError &) {
        return std::nullopt;
    }
}

/// Mean torque of every layer over the villages where torque is defined.
inline std::vector<double> mean_torque_by_layer(const Dataset &data, unsigned threads = 1) {
    const std::size_t layer_count = data.layers.size();
    std::vector<std::optional<TorqueReport>> reports(data.villages.size());
    parallel_for(data.villages.size(), threads, [&](std::size_t v) {
        try {
            reports[v] = torque_all_layers(data.villages[v].network);
        } catch (const UndefinedStatisticError &) {
        }
    });
    std::vector<double> sum(layer_count, 0.0);
    std::size_t villages = 0;
    for (const auto &r : reports)
        if (r) {
            for (std::size_t l = 0; l < layer_count; ++l)
                sum[l] += r->layers[l].torque;
            ++villages;
        }
    for (auto &s : sum)
        s = villages ? s / static_cast<double>(villages) : 0.0;
    return sum;
}

struct LayerReductionOptions {
    PathwayConfig pathway{};
    int bootstrap = 1000;
    double level = 0.95;
    std::uint64_t seed = 1;
    std::vector<std::string> interval_layers; ///< empty means every layer
    unsigned threads = 1;
};

/// Fits the by-layer contagion model and its counterfactual reduction for
/// each requested layer. A layer through which nobody has critical-pathway
/// exposure has reduction 0 without a fit.
inline std::vector<ExperimentLayer> reduction_by_layer(const Dataset &data, std::size_t topic,
                                                       const std::vector<LayerId> &layers,
                                                       const LayerReductionOptions &opt) {
    std::vector<PathwayConfig> configs(layers.size(), opt.pathway);
    for (std::size_t i = 0; i < layers.size(); ++i)
        configs[i].layer = layers[i];
    auto exposure = compute_exposure(data, topic, configs, opt.threads);
    const auto torque = mean_torque_by_layer(data, opt.threads);

    std::vector<ExperimentLayer> out(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        ExperimentLayer &row = out[i];
        const std::size_t l = to_index(layers[i]);
        row.layer = data.layers.name(layers[i]);
        row.mean_torque = torque[l];
        Design design = build_design(data, topic, configs[i], exposure[i]);
        row.reduction.layer = row.layer;
        row.reduction.k = opt.pathway.k;
        row.reduction.level = opt.level;
        row.reduction.individuals = static_cast<std::size_t>(design.rows());
        const bool interval = opt.bootstrap > 0 && (opt.interval_layers.empty() ||
                                                    std::find(opt.interval_layers.begin(), opt.interval_layers.end(),
                                                              row.layer) != opt.interval_layers.end());
        if (design.x.col(column::xi_layer).isZero(0.0)) {
            if (interval) {
                row.reduction.ci_low = 0.0;
                row.reduction.ci_high = 0.0;
                row.reduction.replicates = opt.bootstrap;
            }
            continue;
        }
        LogitOptions fit_options;
        fit_options.drop_collinear = true;
        auto model = fit_contagion(std::move(design), fit_options);
        ReductionOptions ropt;
        ropt.bootstrap = interval ? opt.bootstrap : 0;
        ropt.level = opt.level;
        ropt.seed = derive_seed(opt.seed, {1000 + l});
        ropt.threads = opt.threads;
        row.reduction = counterfactual_reduction(model, ropt);
        row.estimated = true;
    }
    return out;
}

/// Generator, intervention, diffusion, exposure, fit and counterfactual
/// reduction for every layer, plus the torque regression.
inline ExperimentResult end_to_end_experiment(const ExperimentConfig &cfg) {
    Dataset data = simulate_dataset(cfg);
    LayerReductionOptions opt;
    opt.pathway = cfg.pathway;
    opt.bootstrap = cfg.bootstrap;
    opt.level = cfg.level;
    opt.seed = cfg.seed;
    opt.interval_layers = cfg.interval_layers;
    opt.threads = cfg.threads;
    ExperimentResult result;
    result.layers = reduction_by_layer(data, 0, data.layers.ids(), opt);
    for (std::size_t l = 0; l < result.layers.size(); ++l)
        result.layers[l].transmission = cfg.diffusion.probability[l];
    result.torque_regression = torque_reduction_regression(result.layers, &result.regression_layers);
    return result;
}

} // namespace mtorque
