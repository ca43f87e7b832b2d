#pragma once

#include <mtorque/error.hpp>
#include <mtorque/simulator.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace mtorque {

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

struct ScenarioEntry {
    std::string key, value;
    std::size_t line = 0;

    std::string where() const { return "line " + std::to_string(line) + ": '" + key + "'"; }

    double real() const {
        double v = 0.0;
        auto res = std::from_chars(value.data(), value.data() + value.size(), v);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size() || !std::isfinite(v))
            throw ConfigError(where() + " expects a number, got '" + value + "'");
        return v;
    }

    long long integer() const {
        long long v = 0;
        auto res = std::from_chars(value.data(), value.data() + value.size(), v);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size())
            throw ConfigError(where() + " expects an integer, got '" + value + "'");
        return v;
    }

    std::size_t count() const {
        const long long v = integer();
        if (v < 0)
            throw ConfigError(where() + " must be non-negative");
        return static_cast<std::size_t>(v);
    }

    bool boolean() const {
        if (value == "true" || value == "1")
            return true;
        if (value == "false" || value == "0")
            return false;
        throw ConfigError(where() + " expects true or false, got '" + value + "'");
    }

    std::vector<std::string> list() const {
        std::vector<std::string> out;
        std::stringstream ss(value);
        for (std::string item; std::getline(ss, item, ',');) {
            item = trim(item);
            if (item.empty())
                throw ConfigError(where() + " has an empty list item");
            out.push_back(item);
        }
        return out;
    }
};

inline LayerShape parse_shape(const ScenarioEntry &e) {
    static const std::map<std::string, LayerShape> shapes{
        {"kin_partner", LayerShape::kin_partner}, {"kin_parent", LayerShape::kin_parent},
        {"kin_sibling", LayerShape::kin_sibling}, {"small_world", LayerShape::small_world},
        {"chain", LayerShape::chain},             {"hub", LayerShape::hub}};
    auto it = shapes.find(e.value);
    if (it == shapes.end())
        throw ConfigError(e.where() + " has unknown shape '" + e.value + "'");
    return it->second;
}

} // namespace detail

/// Parses a scenario file of "key = value" lines ('#' starts a comment)
/// into an experiment configuration. Unknown keys are rejected.
inline ExperimentConfig parse_scenario(std::istream &in) {
    std::vector<detail::ScenarioEntry> entries;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const std::string text = detail::trim(line);
        if (text.empty())
            continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        detail::ScenarioEntry e{detail::trim(std::string_view(text).substr(0, eq)),
                                detail::trim(std::string_view(text).substr(eq + 1)), line_no};
        if (e.key.empty() || e.value.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        for (const auto &prev : entries)
            if (prev.key == e.key)
                throw ConfigError(e.where() + " is set twice");
        entries.push_back(std::move(e));
    }

    ExperimentConfig cfg;
    // The layer list decides the meaning of every per-layer key, so it goes first.
    for (const auto &e : entries)
        if (e.key == "layers") {
            const auto defaults = default_layer_specs();
            cfg.generator.layers.clear();
            for (const auto &name : e.list()) {
                auto it = std::find_if(defaults.begin(), defaults.end(),
                                       [&](const LayerGenSpec &s) { return s.name == name; });
                LayerGenSpec spec = it != defaults.end() ? *it : LayerGenSpec{.name = name};
                cfg.generator.layers.push_back(spec);
            }
            cfg.diffusion.probability.assign(cfg.generator.layers.size(), 0.0);
        }

    auto layer_index = [&](const detail::ScenarioEntry &e, const std::string &name) {
        for (std::size_t l = 0; l < cfg.generator.layers.size(); ++l)
            if (cfg.generator.layers[l].name == name)
                return l;
        throw ConfigError(e.where() + " names unknown layer '" + name + "'");
    };

    for (const auto &e : entries) {
        const std::string &k = e.key;
        if (k == "layers")
            continue;
        if (k == "seed")
            cfg.seed = static_cast<std::uint64_t>(e.count());
        else if (k == "villages")
            cfg.villages = e.count();
        else if (k == "population_min")
            cfg.population_min = e.count();
        else if (k == "population_max")
            cfg.population_max = e.count();
        else if (k == "household_mean")
            cfg.generator.household_mean = e.real();
        else if (k == "household_sd")
            cfg.generator.household_sd = e.real();
        else if (k == "partner_rate")
            cfg.generator.partner_rate = e.real();
        else if (k == "treated_fraction")
            cfg.treated_fraction = e.real();
        else if (k == "baseline_rate")
            cfg.baseline_rate = e.real();
        else if (k == "baseline_education_effect")
            cfg.baseline_education_effect = e.real();
        else if (k == "rounds")
            cfg.diffusion.rounds = static_cast<int>(e.count());
        else if (k == "uptake")
            cfg.diffusion.uptake = e.real();
        else if (k == "forgetting")
            cfg.diffusion.forgetting = e.real();
        else if (k == "background")
            cfg.diffusion.background = e.real();
        else if (k == "topic")
            cfg.topic = e.value;
        else if (k == "k")
            cfg.pathway.k = static_cast<int>(e.integer());
        else if (k == "mode") {
            if (e.value != "primary" && e.value != "secondary")
                throw ConfigError(e.where() + " must be primary or secondary");
            cfg.pathway.mode = e.value == "primary" ? PathwayMode::primary : PathwayMode::secondary;
        } else if (k == "direction") {
            if (e.value != "directed" && e.value != "reversed")
                throw ConfigError(e.where() + " must be directed or reversed");
            cfg.pathway.direction = e.value == "directed" ? Direction::directed : Direction::reversed;
        } else if (k == "bootstrap")
            cfg.bootstrap = static_cast<int>(e.count());
        else if (k == "ci_level")
            cfg.level = e.real();
        else if (k == "interval_layers") {
            cfg.interval_layers = e.list();
            for (const auto &name : cfg.interval_layers)
                layer_index(e, name);
        } else if (k.rfind("transmit.", 0) == 0) {
            const std::string name = k.substr(9);
            if (name == "all")
                std::fill(cfg.diffusion.probability.begin(), cfg.diffusion.probability.end(), e.real());
            else
                cfg.diffusion.probability[layer_index(e, name)] = e.real();
        } else if (k.rfind("layer.", 0) == 0) {
            const auto dot = k.rfind('.');
            if (dot <= 6)
                throw ConfigError(e.where() + " is not a known key");
            LayerGenSpec &spec = cfg.generator.layers[layer_index(e, k.substr(6, dot - 6))];
            const std::string field = k.substr(dot + 1);
            if (field == "shape")
                spec.shape = detail::parse_shape(e);
            else if (field == "mean_degree")
                spec.mean_degree = e.real();
            else if (field == "monoplexity")
                spec.monoplexity = e.real();
            else if (field == "reciprocity")
                spec.reciprocity = e.real();
            else if (field == "rewire")
                spec.rewire = e.real();
            else if (field == "reach")
                spec.reach = static_cast<int>(e.count());
            else if (field == "exclude_kin")
                spec.exclude_kin = e.boolean();
            else if (field == "cross_household")
                spec.cross_household = e.real();
            else
                throw ConfigError(e.where() + " has unknown layer field '" + field + "'");
        } else {
            throw ConfigError(e.where() + " is not a known key");
        }
    }
    // transmit.all applies before per-layer overrides regardless of file order.
    for (const auto &e : entries)
        if (e.key.rfind("transmit.", 0) == 0 && e.key != "transmit.all")
            cfg.diffusion.probability[layer_index(e, e.key.substr(9))] = e.real();
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_scenario(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open scenario '" + path.string() + "'");
    return parse_scenario(in);
}

} // namespace mtorque
