#include "oracles.hpp"

#include <mtorque/multiplex_graph.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace mtorque;

namespace {

const LayerId F = layer_at(0);
const LayerId H = layer_at(1);

std::vector<Edge> edge_list(const SimpleGraph &g) { return {g.edges().begin(), g.edges().end()}; }

// Layers A = {1-2, 2-3}, B = {1-2, 3-4}, relabelled to 0-based ids.
MultiplexNetwork two_layer_fixture() {
    std::vector<Nomination> noms{{0, 1, F}, {1, 2, F}, {0, 1, H}, {2, 3, H}};
    return build_network(noms, 4, 2);
}

} // namespace

TEST(BuildNetwork, EmptyInputHasNoDyads) {
    auto net = build_network({}, 3, 2);
    EXPECT_EQ(net.node_count(), 3u);
    EXPECT_TRUE(net.dyads().empty());
    EXPECT_TRUE(net.nominations().empty());
}

TEST(BuildNetwork, ReciprocalNominationsCollapseIntoOneDyad) {
    std::vector<Nomination> noms{{0, 1, F}, {1, 0, F}};
    auto net = build_network(noms, 2, 2);
    ASSERT_EQ(net.dyads().size(), 1u);
    const Dyad &d = net.dyads()[0];
    EXPECT_EQ(d.support(), layer_bit(F));
    EXPECT_EQ(d.forward, layer_bit(F));
    EXPECT_EQ(d.backward, layer_bit(F));
}

TEST(BuildNetwork, DuplicateTriplesCollapseAndLayersAggregate) {
    std::vector<Nomination> noms{{0, 1, F}, {0, 1, F}, {0, 1, H}};
    auto net = build_network(noms, 2, 2);
    EXPECT_EQ(net.nominations().size(), 2u);
    EXPECT_EQ(net.collapsed_duplicates(), 1u);
    ASSERT_EQ(net.dyads().size(), 1u);
    // hand enumeration: layer set {F, H}, direction 0 -> 1 only on both
    EXPECT_EQ(net.dyads()[0].forward, layer_bit(F) | layer_bit(H));
    EXPECT_EQ(net.dyads()[0].backward, 0u);
    EXPECT_EQ(net.nominated(0, 1), layer_bit(F) | layer_bit(H));
    EXPECT_EQ(net.nominated(1, 0), 0u);
}

TEST(BuildNetwork, RejectsSelfNominationWithRow) {
    std::vector<Nomination> noms{{0, 1, F}, {2, 2, F}};
    try {
        build_network(noms, 3, 1);
        FAIL() << "expected IngestError";
    } catch (const IngestError &e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
    }
}

TEST(BuildNetwork, RejectsOutOfRangeNode) {
    std::vector<Nomination> noms{{0, 5, F}};
    EXPECT_THROW(build_network(noms, 3, 1), IngestError);
}

TEST(BuildNetwork, TiesExposeDirectionFromEachSide) {
    std::vector<Nomination> noms{{2, 0, F}, {0, 2, H}};
    auto net = build_network(noms, 3, 2);
    auto ties0 = net.ties(0);
    ASSERT_EQ(ties0.size(), 1u);
    EXPECT_EQ(ties0[0].other, 2u);
    EXPECT_EQ(ties0[0].outgoing, layer_bit(H));
    EXPECT_EQ(ties0[0].incoming, layer_bit(F));
    auto ties2 = net.ties(2);
    ASSERT_EQ(ties2.size(), 1u);
    EXPECT_EQ(ties2[0].outgoing, layer_bit(F));
}

TEST(Composite, SingleDyadGivesOneEdge) {
    std::vector<Nomination> noms{{0, 1, F}};
    EXPECT_EQ(composite(build_network(noms, 2, 1)).edge_count(), 1u);
}

TEST(Composite, MixedLayersFormAPath) {
    std::vector<Nomination> noms{{0, 1, F}, {2, 1, H}};
    auto g = composite(build_network(noms, 3, 2));
    EXPECT_EQ(edge_list(g), (std::vector<Edge>{{0, 1}, {1, 2}}));
    EXPECT_TRUE(g.has_edge(1, 0));
    EXPECT_FALSE(g.has_edge(0, 2));
}

TEST(Composite, EmptyNetworkIsEdgeless) { EXPECT_EQ(composite(build_network({}, 4, 1)).edge_count(), 0u); }

TEST(CompositeMinusLayer, MultiplexDyadSurvives) {
    std::vector<Nomination> noms{{0, 1, F}, {1, 0, H}};
    EXPECT_EQ(composite_minus_layer(build_network(noms, 2, 2), F).edge_count(), 1u);
}

TEST(CompositeMinusLayer, MonoplexDyadDisappears) {
    std::vector<Nomination> noms{{0, 1, F}};
    EXPECT_EQ(composite_minus_layer(build_network(noms, 2, 2), F).edge_count(), 0u);
}

TEST(CompositeMinusLayer, TwoLayerFixture) {
    auto g = composite_minus_layer(two_layer_fixture(), F);
    EXPECT_EQ(edge_list(g), (std::vector<Edge>{{0, 1}, {2, 3}}));
}

TEST(CompositeMinusLayer, UnknownLayerThrows) {
    EXPECT_THROW(composite_minus_layer(two_layer_fixture(), layer_at(5)), UnknownLayerError);
    EXPECT_THROW(layer_subgraph(two_layer_fixture(), layer_at(5)), UnknownLayerError);
}

TEST(LayerSubgraph, SingleLayerEqualsComposite) {
    std::vector<Nomination> noms{{0, 1, F}, {1, 2, F}, {3, 1, F}};
    auto net = build_network(noms, 4, 1);
    EXPECT_EQ(edge_list(layer_subgraph(net, F)), edge_list(composite(net)));
}

TEST(LayerSubgraph, TwoLayerFixture) {
    EXPECT_EQ(edge_list(layer_subgraph(two_layer_fixture(), H)), (std::vector<Edge>{{0, 1}, {2, 3}}));
}

// Edge-set laws on random multiplex networks.
TEST(MultiplexProperties, RemovalAndSubgraphCoverComposite) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 2 + rng() % 9, layers = 1 + rng() % 4;
        auto noms = oracle::random_nominations(rng, n, layers, 0.08);
        auto net = build_network(noms, n, layers);
        auto full = edge_list(composite(net));
        for (std::size_t l = 0; l < layers; ++l) {
            auto minus = edge_list(composite_minus_layer(net, layer_at(l)));
            auto sub = edge_list(layer_subgraph(net, layer_at(l)));
            std::vector<Edge> uni;
            std::set_union(minus.begin(), minus.end(), sub.begin(), sub.end(), std::back_inserter(uni));
            EXPECT_EQ(uni, full);
            EXPECT_TRUE(std::includes(full.begin(), full.end(), minus.begin(), minus.end()));

            bool nested = true;
            for (const auto &d : net.dyads())
                if (d.support() == layer_bit(layer_at(l)))
                    nested = false;
            if (nested)
                EXPECT_EQ(minus, full);
        }
    }
}

TEST(MultiplexProperties, BuildIsIdempotentUnderDuplicationAndPermutation) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 2 + rng() % 8, layers = 1 + rng() % 3;
        auto noms = oracle::random_nominations(rng, n, layers, 0.15);
        auto net = build_network(noms, n, layers);
        auto shuffled = noms;
        shuffled.insert(shuffled.end(), noms.begin(), noms.end());
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto again = build_network(shuffled, n, layers);
        EXPECT_TRUE(std::equal(net.dyads().begin(), net.dyads().end(), again.dyads().begin(), again.dyads().end()));
        EXPECT_TRUE(std::equal(net.nominations().begin(), net.nominations().end(), again.nominations().begin(),
                               again.nominations().end()));
    }
}
