#pragma once

#include <mtorque/error.hpp>
#include <mtorque/multiplex_graph.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mtorque {

/// Knowledge and treatment of one person on one intervention topic.
struct TopicRecord {
    std::optional<int> k_w1; // baseline accuracy, 0/1
    std::optional<int> k_w3; // follow-up accuracy, 0/1
    bool treated = false;    // received modules covering this topic

    bool operator==(const TopicRecord &) const = default;
};

struct Person {
    std::string household;
    std::optional<double> sociability;
    std::optional<double> age;
    std::optional<double> gender;
    std::optional<double> education;
    std::optional<double> income; // 1..4
    std::optional<double> self_health;
    std::vector<TopicRecord> topics; // aligned with Dataset::topics

    bool operator==(const Person &) const = default;
};

/// Attributes of the members of one village, indexed by NodeId.
class VillagePanel {
public:
    VillagePanel() = default;
    explicit VillagePanel(std::size_t n) : people_(n) {}

    std::size_t size() const noexcept { return people_.size(); }
    void resize(std::size_t n) { people_.resize(n); }

    bool covers(NodeId node) const { return node < people_.size() && people_[node].has_value(); }

    const Person &at(NodeId node) const {
        if (!covers(node))
            throw DataError("node " + std::to_string(node) + " missing from panel");
        return *people_[node];
    }
    Person &at(NodeId node) {
        if (!covers(node))
            throw DataError("node " + std::to_string(node) + " missing from panel");
        return *people_[node];
    }

    void set(NodeId node, Person person) {
        if (node >= people_.size())
            people_.resize(node + 1);
        people_[node] = std::move(person);
    }

    /// Throws DataError unless every node in [0, n) has a record.
    void require_complete(std::size_t n) const {
        for (NodeId v = 0; v < n; ++v)
            if (!covers(v))
                throw DataError("node " + std::to_string(v) + " missing from panel");
    }

    bool operator==(const VillagePanel &) const = default;

private:
    std::vector<std::optional<Person>> people_;
};

/// Bijective map between external string ids and dense NodeIds.
class NodeIndex {
public:
    NodeId intern(const std::string &id) {
        auto [it, inserted] = lookup_.try_emplace(id, static_cast<NodeId>(names_.size()));
        if (inserted)
            names_.push_back(id);
        return it->second;
    }
    std::optional<NodeId> find(const std::string &id) const {
        auto it = lookup_.find(id);
        if (it == lookup_.end())
            return std::nullopt;
        return it->second;
    }
    const std::string &name(NodeId node) const { return names_.at(node); }
    std::size_t size() const noexcept { return names_.size(); }

private:
    std::map<std::string, NodeId> lookup_;
    std::vector<std::string> names_;
};

struct Village {
    std::string name;
    NodeIndex ids;
    MultiplexNetwork network;
    VillagePanel panel;
};

/// A set of villages sharing one layer registry and topic list. Villages are
/// kept sorted by name.
struct Dataset {
    LayerRegistry layers;
    std::vector<std::string> topics;
    std::vector<Village> villages;

    std::size_t topic_index(const std::string &topic) const {
        for (std::size_t i = 0; i < topics.size(); ++i)
            if (topics[i] == topic)
                return i;
        throw DataError("unknown topic '" + topic + "'");
    }
};

} // namespace mtorque
