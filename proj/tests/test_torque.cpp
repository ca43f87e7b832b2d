#include "oracles.hpp"

#include <mtorque/torque.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace mtorque;

namespace {

const LayerId A = layer_at(0);
const LayerId B = layer_at(1);

// A = {1-2, 2-3}, B = {1-2, 3-4}; node k is id k-1.
MultiplexNetwork fixture() {
    std::vector<Nomination> noms{{0, 1, A}, {1, 2, A}, {0, 1, B}, {2, 3, B}};
    return build_network(noms, 4, 2);
}

} // namespace

TEST(AllPairsDistances, PathEdgelessComplete) {
    auto p4 = all_pairs_distances(SimpleGraph(4, {{0, 1}, {1, 2}, {2, 3}}));
    EXPECT_EQ(p4(0, 3), 3u);
    EXPECT_EQ(p4(3, 0), 3u);
    EXPECT_EQ(p4(2, 2), 0u);

    auto empty = all_pairs_distances(SimpleGraph(3, {}));
    for (NodeId i = 0; i < 3; ++i)
        for (NodeId j = 0; j < 3; ++j)
            EXPECT_EQ(empty(i, j), i == j ? 0u : infinite_distance);

    auto k4 = all_pairs_distances(SimpleGraph(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}));
    for (NodeId i = 0; i < 4; ++i)
        for (NodeId j = 0; j < 4; ++j)
            EXPECT_EQ(k4(i, j), i == j ? 0u : 1u);
}

TEST(Criticality, FixturePairs) {
    auto net = fixture();
    EXPECT_TRUE(criticality(net, A, 0, 2));  // 2 -> infinite
    EXPECT_FALSE(criticality(net, A, 0, 1)); // dyad survives through B
    EXPECT_TRUE(criticality(net, B, 0, 3));
    EXPECT_FALSE(criticality(net, B, 0, 2));
}

TEST(Criticality, DisconnectedPairIsUndefined) {
    std::vector<Nomination> noms{{0, 1, A}};
    auto net = build_network(noms, 3, 1);
    EXPECT_THROW(criticality(net, A, 0, 2), CriticalityUndefinedError);
}

TEST(Criticality, NestedLayerIsNeverCritical) {
    // every alpha dyad is also a beta dyad
    std::vector<Nomination> noms{{0, 1, A}, {0, 1, B}, {1, 2, B}, {2, 3, A}, {3, 2, B}, {3, 4, B}};
    auto net = build_network(noms, 5, 2);
    for (NodeId i = 0; i < 5; ++i)
        for (NodeId j = i + 1; j < 5; ++j)
            EXPECT_FALSE(criticality(net, A, i, j));
    EXPECT_DOUBLE_EQ(network_torque(net, A), 0.0);
}

TEST(NetworkTorque, FixtureValues) {
    auto net = fixture();
    auto report = torque_all_layers(net);
    EXPECT_EQ(report.connected_pairs, 6u);
    EXPECT_EQ(report.layers[0].critical_pairs, 4u); // (1,3) (1,4) (2,3) (2,4)
    EXPECT_EQ(report.layers[1].critical_pairs, 3u); // (1,4) (2,4) (3,4)
    EXPECT_DOUBLE_EQ(network_torque(net, A), 4.0 / 6.0);
    EXPECT_DOUBLE_EQ(network_torque(net, B), 0.5);
}

TEST(NetworkTorque, SingleLayerAndIdenticalLayers) {
    std::vector<Nomination> single{{0, 1, A}, {1, 2, A}, {3, 4, A}};
    EXPECT_DOUBLE_EQ(torque_all_layers(build_network(single, 5, 1)).layers[0].torque, 1.0);

    std::vector<Nomination> twins{{0, 1, A}, {1, 2, A}, {0, 1, B}, {2, 1, B}};
    auto report = torque_all_layers(build_network(twins, 3, 2));
    EXPECT_DOUBLE_EQ(report.layers[0].torque, 0.0);
    EXPECT_DOUBLE_EQ(report.layers[1].torque, 0.0);
}

TEST(NetworkTorque, NoConnectedPairsIsUndefined) {
    EXPECT_THROW(torque_all_layers(build_network({}, 3, 1)), UndefinedStatisticError);
}

TEST(NetworkTorque, MatchesNaiveRecomputation) {
    std::mt19937_64 rng(77);
    int checked = 0;
    for (int t = 0; t < 400; ++t) {
        std::size_t n = 2 + rng() % 11, layers = 1 + rng() % 4;
        auto noms = oracle::random_nominations(rng, n, layers, 0.06);
        auto net = build_network(noms, n, layers);
        auto naive = oracle::naive_torque(n, layers, noms);
        if (naive.connected == 0) {
            EXPECT_THROW(torque_all_layers(net), UndefinedStatisticError);
            continue;
        }
        auto report = torque_all_layers(net);
        ASSERT_EQ(report.connected_pairs, naive.connected);
        for (std::size_t l = 0; l < layers; ++l) {
            EXPECT_EQ(report.layers[l].critical_pairs, naive.critical[l]);
            EXPECT_GE(report.layers[l].torque, 0.0);
            EXPECT_LE(report.layers[l].torque, 1.0);
        }
        ++checked;
    }
    EXPECT_GT(checked, 300);
}

TEST(NetworkTorque, RemovalNeverShortensDistances) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 100; ++t) {
        std::size_t n = 3 + rng() % 8, layers = 1 + rng() % 3;
        auto net = build_network(oracle::random_nominations(rng, n, layers, 0.1), n, layers);
        auto full = all_pairs_distances(composite(net));
        for (std::size_t l = 0; l < layers; ++l) {
            auto cut = all_pairs_distances(composite_minus_layer(net, layer_at(l)));
            for (NodeId i = 0; i < n; ++i)
                for (NodeId j = 0; j < n; ++j)
                    EXPECT_GE(cut(i, j), full(i, j));
        }
    }
}

TEST(NetworkTorque, IndependentOfThreadCount) {
    std::mt19937_64 rng(31);
    auto noms = oracle::random_nominations(rng, 120, 4, 0.004);
    auto net = build_network(noms, 120, 4);
    auto one = torque_all_layers(net, 1), four = torque_all_layers(net, 4);
    EXPECT_EQ(one.connected_pairs, four.connected_pairs);
    for (std::size_t l = 0; l < 4; ++l)
        EXPECT_EQ(one.layers[l].critical_pairs, four.layers[l].critical_pairs);
}
