#include "oracles.hpp"

#include <mtorque/critical_pathways.hpp>
#include <mtorque/torque.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace mtorque;

namespace {

const LayerId F = layer_at(0);
const LayerId H = layer_at(1);

PathwayConfig config(int k, PathwayMode mode, Direction dir, LayerId layer) {
    PathwayConfig c;
    c.k = k;
    c.mode = mode;
    c.direction = dir;
    c.layer = layer;
    return c;
}

std::vector<char> flags(std::size_t n, std::initializer_list<NodeId> on) {
    std::vector<char> f(n, 0);
    for (auto v : on)
        f[v] = 1;
    return f;
}

} // namespace

// Nodes 1..4 of the worked chains map to ids 0..3.
TEST(Exposure, SingleChainIsCritical) {
    std::vector<Nomination> noms{{0, 1, F}, {1, 2, F}};
    auto net = build_network(noms, 3, 2);
    auto panel = oracle::flag_panel(flags(3, {2}), flags(3, {1}));
    auto rec = exposure(net, panel, 0, config(2, PathwayMode::primary, Direction::directed, F), 0);
    EXPECT_EQ(rec.xi_layer, 1);
    EXPECT_EQ(rec.xi_other, 0);
    EXPECT_EQ(rec.alters, 1);
}

TEST(Exposure, AlternativeChainOnOtherLayerIsNotCritical) {
    std::vector<Nomination> noms{{0, 1, F}, {1, 2, F}, {0, 3, H}, {3, 2, H}};
    auto net = build_network(noms, 4, 2);
    auto panel = oracle::flag_panel(flags(4, {2}), flags(4, {1, 3}));
    auto rec = exposure(net, panel, 0, config(2, PathwayMode::primary, Direction::directed, F), 0);
    EXPECT_EQ(rec.xi_layer, 0);
    EXPECT_EQ(rec.xi_other, 1);
}

TEST(Exposure, UnvalidatedIntermediaryBlocksPrimaryOnly) {
    std::vector<Nomination> noms{{0, 1, F}, {1, 2, F}};
    auto net = build_network(noms, 3, 1);
    auto panel = oracle::flag_panel(flags(3, {2}), flags(3, {}));
    auto primary = exposure(net, panel, 0, config(2, PathwayMode::primary, Direction::directed, F), 0);
    auto secondary = exposure(net, panel, 0, config(2, PathwayMode::secondary, Direction::directed, F), 0);
    EXPECT_EQ(primary.xi_layer + primary.xi_other, 0);
    EXPECT_EQ(secondary.xi_layer, 1);
    EXPECT_EQ(primary.alters, 1);
}

TEST(Exposure, TreatedIntermediaryIsValidated) {
    std::vector<Nomination> noms{{0, 1, F}, {1, 2, F}};
    auto net = build_network(noms, 3, 1);
    auto panel = oracle::flag_panel(flags(3, {1, 2}), flags(3, {}));
    EXPECT_EQ(exposure(net, panel, 0, config(2, PathwayMode::primary, Direction::directed, F), 0).xi_layer, 1);
}

TEST(Exposure, DirectionFiltersSteps) {
    std::vector<Nomination> noms{{0, 1, F}, {1, 2, F}};
    auto net = build_network(noms, 3, 1);
    auto panel = oracle::flag_panel(flags(3, {0, 2}), flags(3, {0, 1, 2}));
    auto reversed = config(2, PathwayMode::secondary, Direction::reversed, F);
    EXPECT_EQ(exposure(net, panel, 0, reversed, 0), (ExposureRecord{0, 0, 0, 0}));
    EXPECT_EQ(exposure(net, panel, 2, reversed, 0), (ExposureRecord{2, 1, 0, 1}));
}

TEST(Exposure, ShorterRouteExcludesAlter) {
    // 0 -> 1 -> 2 and a direct 0 -> 2: node 2 is at distance 1, not 2
    std::vector<Nomination> noms{{0, 1, F}, {1, 2, F}, {0, 2, H}};
    auto net = build_network(noms, 3, 2);
    auto panel = oracle::flag_panel(flags(3, {2}), flags(3, {1}));
    EXPECT_EQ(exposure(net, panel, 0, config(2, PathwayMode::secondary, Direction::directed, F), 0),
              (ExposureRecord{0, 0, 0, 0}));
}

TEST(Exposure, ErrorsOnBadInput) {
    std::vector<Nomination> noms{{0, 1, F}};
    auto net = build_network(noms, 3, 1);
    auto panel = oracle::flag_panel(flags(2, {}), flags(2, {}));
    EXPECT_THROW(exposure(net, panel, 2, config(2, PathwayMode::primary, Direction::directed, F), 0), DataError);
    auto full = oracle::flag_panel(flags(3, {}), flags(3, {}));
    EXPECT_THROW(exposure(net, full, 0, config(1, PathwayMode::primary, Direction::directed, F), 0),
                 std::invalid_argument);
    EXPECT_THROW(exposure(net, full, 0, config(2, PathwayMode::primary, Direction::directed, layer_at(3)), 0),
                 UnknownLayerError);
}

TEST(Exposure, AltersFollowModeOption) {
    std::vector<Nomination> noms{{0, 1, F}, {1, 2, F}};
    auto net = build_network(noms, 3, 1);
    auto panel = oracle::flag_panel(flags(3, {}), flags(3, {}));
    auto cfg = config(2, PathwayMode::primary, Direction::directed, F);
    EXPECT_EQ(exposure(net, panel, 0, cfg, 0).alters, 1);
    cfg.alters_follow_mode = true;
    EXPECT_EQ(exposure(net, panel, 0, cfg, 0).alters, 0);
}

TEST(ExposureProperties, MatchesPathEnumeration) {
    std::mt19937_64 rng(101);
    std::bernoulli_distribution half(0.5);
    for (int trial = 0; trial < 120; ++trial) {
        std::size_t n = 2 + rng() % 7, layers = 1 + rng() % 3;
        auto noms = oracle::random_nominations(rng, n, layers, 0.12);
        auto net = build_network(noms, n, layers);
        std::vector<char> treated(n), accurate(n);
        for (std::size_t v = 0; v < n; ++v) {
            treated[v] = half(rng);
            accurate[v] = half(rng);
        }
        auto panel = oracle::flag_panel(treated, accurate);
        std::vector<char> validated(n);
        for (std::size_t v = 0; v < n; ++v)
            validated[v] = treated[v] || accurate[v];
        int k = 2 + static_cast<int>(rng() % 3);
        for (auto mode : {PathwayMode::primary, PathwayMode::secondary})
            for (auto dir : {Direction::directed, Direction::reversed}) {
                std::vector<PathwayConfig> cfgs;
                for (std::size_t l = 0; l < layers; ++l)
                    cfgs.push_back(config(k, mode, dir, layer_at(l)));
                auto got = exposure_by_layer(net, panel, cfgs, 0);
                for (std::size_t l = 0; l < layers; ++l)
                    for (NodeId f = 0; f < n; ++f) {
                        auto want = oracle::naive_exposure(n, noms, f, k, mode == PathwayMode::primary,
                                                           dir == Direction::directed, layer_at(l), validated,
                                                           treated);
                        EXPECT_EQ(got[l][f].xi_layer, want.xi_layer);
                        EXPECT_EQ(got[l][f].xi_other, want.xi_other);
                        EXPECT_EQ(got[l][f].alters, want.alters);
                    }
            }
    }
}

TEST(ExposureProperties, PrimaryNeverExceedsSecondary) {
    std::mt19937_64 rng(55);
    std::bernoulli_distribution half(0.5);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 3 + rng() % 10, layers = 1 + rng() % 3;
        auto net = build_network(oracle::random_nominations(rng, n, layers, 0.1), n, layers);
        std::vector<char> treated(n), accurate(n);
        for (std::size_t v = 0; v < n; ++v) {
            treated[v] = half(rng);
            accurate[v] = half(rng);
        }
        auto panel = oracle::flag_panel(treated, accurate);
        for (int k = 2; k <= 4; ++k)
            for (auto dir : {Direction::directed, Direction::reversed})
                for (std::size_t l = 0; l < layers; ++l) {
                    auto p = exposure_table(net, panel, config(k, PathwayMode::primary, dir, layer_at(l)), 0);
                    auto s = exposure_table(net, panel, config(k, PathwayMode::secondary, dir, layer_at(l)), 0);
                    for (NodeId v = 0; v < n; ++v) {
                        EXPECT_LE(p[v].xi_layer, s[v].xi_layer);
                        EXPECT_LE(p[v].xi_other, s[v].xi_other);
                        EXPECT_EQ(p[v].alters, s[v].alters);
                        EXPECT_LE(s[v].xi_layer + s[v].xi_other, s[v].alters);
                        EXPECT_GE(p[v].xi_layer, 0);
                    }
                }
    }
}

TEST(ExposureProperties, ReciprocatedNetworksIgnoreDirection) {
    std::mt19937_64 rng(56);
    std::bernoulli_distribution half(0.5);
    bool asymmetric_differs = false;
    for (int trial = 0; trial < 80; ++trial) {
        std::size_t n = 3 + rng() % 8, layers = 1 + rng() % 3;
        auto noms = oracle::random_nominations(rng, n, layers, 0.1);
        auto sym = noms;
        for (const auto &nm : noms)
            sym.push_back({nm.alter, nm.ego, nm.layer});
        std::vector<char> treated(n), accurate(n);
        for (std::size_t v = 0; v < n; ++v) {
            treated[v] = half(rng);
            accurate[v] = half(rng);
        }
        auto panel = oracle::flag_panel(treated, accurate);
        auto sym_net = build_network(sym, n, layers);
        auto asym_net = build_network(noms, n, layers);
        for (std::size_t l = 0; l < layers; ++l) {
            auto d = config(3, PathwayMode::secondary, Direction::directed, layer_at(l));
            auto r = config(3, PathwayMode::secondary, Direction::reversed, layer_at(l));
            EXPECT_EQ(exposure_table(sym_net, panel, d, 0), exposure_table(sym_net, panel, r, 0));
            if (exposure_table(asym_net, panel, d, 0) != exposure_table(asym_net, panel, r, 0))
                asymmetric_differs = true;
        }
    }
    EXPECT_TRUE(asymmetric_differs);
}

TEST(ExposureProperties, UndirectedSecondaryAgreesWithCriticality) {
    std::mt19937_64 rng(57);
    for (int trial = 0; trial < 80; ++trial) {
        std::size_t n = 3 + rng() % 8, layers = 1 + rng() % 3;
        auto noms = oracle::random_nominations(rng, n, layers, 0.08);
        auto sym = noms;
        for (const auto &nm : noms)
            sym.push_back({nm.alter, nm.ego, nm.layer});
        auto net = build_network(sym, n, layers);
        auto panel = oracle::flag_panel(std::vector<char>(n, 1), std::vector<char>(n, 0));
        auto dist = all_pairs_distances(composite(net));
        for (int k = 2; k <= 3; ++k)
            for (std::size_t l = 0; l < layers; ++l) {
                auto table = exposure_table(net, panel, config(k, PathwayMode::secondary, Direction::directed,
                                                               layer_at(l)), 0);
                for (NodeId f = 0; f < n; ++f) {
                    int critical = 0, at_k = 0;
                    for (NodeId j = 0; j < n; ++j)
                        if (dist(f, j) == static_cast<Distance>(k)) {
                            ++at_k;
                            critical += criticality(net, layer_at(l), f, j);
                        }
                    EXPECT_EQ(table[f].alters, at_k);
                    EXPECT_EQ(table[f].xi_layer, critical);
                    EXPECT_EQ(table[f].xi_other, at_k - critical);
                }
            }
    }
}

TEST(ExposureProperties, ThreadCountDoesNotMatter) {
    std::mt19937_64 rng(58);
    const std::size_t n = 60;
    auto net = build_network(oracle::random_nominations(rng, n, 3, 0.02), n, 3);
    std::vector<char> treated(n), accurate(n);
    for (std::size_t v = 0; v < n; ++v) {
        treated[v] = rng() % 3 == 0;
        accurate[v] = rng() % 2;
    }
    auto panel = oracle::flag_panel(treated, accurate);
    std::vector<PathwayConfig> cfgs{config(3, PathwayMode::primary, Direction::directed, F),
                                    config(3, PathwayMode::primary, Direction::directed, H)};
    EXPECT_EQ(exposure_by_layer(net, panel, cfgs, 0, 1), exposure_by_layer(net, panel, cfgs, 0, 4));
}
