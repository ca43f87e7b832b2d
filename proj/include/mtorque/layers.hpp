#pragma once

#include <mtorque/error.hpp>

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mtorque {

/// Index of a relationship layer inside a LayerRegistry.
enum class LayerId : std::uint8_t {};

/// One bit per layer; a registry holds at most 64 layers.
using LayerMask = std::uint64_t;

constexpr std::size_t max_layers = 64;

constexpr std::size_t to_index(LayerId id) noexcept { return static_cast<std::size_t>(id); }
constexpr LayerMask layer_bit(LayerId id) noexcept { return LayerMask{1} << to_index(id); }
constexpr LayerId layer_at(std::size_t index) noexcept { return static_cast<LayerId>(index); }

inline int layer_count_in(LayerMask mask) noexcept { return std::popcount(mask); }

class LayerRegistry {
public:
    LayerRegistry() = default;

    explicit LayerRegistry(const std::vector<std::string> &names) {
        for (const auto &name : names)
            add(name);
    }

    LayerId add(const std::string &name) {
        if (name.empty())
            throw ConfigError("layer name must not be empty");
        if (find(name))
            throw ConfigError("duplicate layer name '" + name + "'");
        if (names_.size() >= max_layers)
            throw ConfigError("too many layers (maximum 64)");
        names_.push_back(name);
        return layer_at(names_.size() - 1);
    }

    std::optional<LayerId> find(std::string_view name) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name)
                return layer_at(i);
        return std::nullopt;
    }

    LayerId at(std::string_view name) const {
        if (auto id = find(name))
            return *id;
        throw UnknownLayerError("unknown layer '" + std::string(name) + "'");
    }

    const std::string &name(LayerId id) const {
        check(id);
        return names_[to_index(id)];
    }

    void check(LayerId id) const {
        if (to_index(id) >= names_.size())
            throw UnknownLayerError("unknown layer id " + std::to_string(to_index(id)));
    }

    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string> &names() const noexcept { return names_; }

    std::vector<LayerId> ids() const {
        std::vector<LayerId> out;
        for (std::size_t i = 0; i < names_.size(); ++i)
            out.push_back(layer_at(i));
        return out;
    }

    bool operator==(const LayerRegistry &) const = default;

    /// The eleven name generators of the survey battery.
    static LayerRegistry canonical() {
        return LayerRegistry({"parent", "sibling", "partner", "patron", "personal_private",
                              "free_time", "closest_friend", "borrow_money", "lend_money",
                              "health_advice_give", "health_advice_get"});
    }

private:
    std::vector<std::string> names_;
};

} // namespace mtorque
