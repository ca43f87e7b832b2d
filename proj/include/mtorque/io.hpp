#pragma once

#include <mtorque/error.hpp>
#include <mtorque/format.hpp>
#include <mtorque/layers.hpp>
#include <mtorque/multiplex_graph.hpp>
#include <mtorque/panel.hpp>

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace mtorque {

namespace csv {

/// Splits one line on commas. Quoting is not supported; a stray quote is an
/// error so that quoted files fail loudly instead of parsing wrongly.
inline std::vector<std::string> split(std::string_view line, std::size_t line_no) {
    if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
    if (line.find('"') != std::string_view::npos)
        throw IngestError("line " + std::to_string(line_no) + ": quoted fields are not supported");
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

inline std::string join(const std::vector<std::string> &fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            out += ',';
        out += fields[i];
    }
    return out;
}

inline double parse_double(const std::string &text, std::size_t line_no, const std::string &column) {
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(value))
        throw IngestError("line " + std::to_string(line_no) + ": column '" + column + "' is not a number: '" +
                          text + "'");
    return value;
}

} // namespace csv

inline constexpr const char *edge_header = "village,ego,alter,layer";

inline const std::vector<std::string> &attribute_base_columns() {
    static const std::vector<std::string> cols{"village", "node",      "household", "sociability", "age",
                                               "gender",  "education", "income",    "self_health"};
    return cols;
}

inline const std::vector<std::string> &topic_column_suffixes() {
    static const std::vector<std::string> s{"k_w1", "k_w3", "treated"};
    return s;
}

struct IngestReport {
    std::size_t rows_read = 0;
    std::size_t duplicates_collapsed = 0;
    std::size_t villages = 0;
    std::size_t missing_values = 0; ///< empty attribute cells
    std::map<std::string, std::size_t> missing_by_column;
};

struct EdgeRow {
    std::string village, ego, alter;
    LayerId layer{};
    std::size_t line = 0;
};

/// Parses the long-format edge list. The header must be exactly
/// "village,ego,alter,layer".
inline std::vector<EdgeRow> read_edge_rows(std::istream &in, const LayerRegistry &layers) {
    std::string line;
    if (!std::getline(in, line))
        throw IngestError("line 1: missing header, expected '" + std::string(edge_header) + "'");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != edge_header)
        throw IngestError("line 1: header must be exactly '" + std::string(edge_header) + "'");
    std::vector<EdgeRow> rows;
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (line.empty() || line == "\r")
            continue;
        auto f = csv::split(line, line_no);
        if (f.size() != 4)
            throw IngestError("line " + std::to_string(line_no) + ": expected 4 fields, found " +
                              std::to_string(f.size()));
        for (std::size_t c = 0; c < 4; ++c)
            if (f[c].empty())
                throw IngestError("line " + std::to_string(line_no) + ": empty field");
        if (f[1] == f[2])
            throw IngestError("line " + std::to_string(line_no) + ": self-nomination of '" + f[1] + "'");
        auto layer = layers.find(f[3]);
        if (!layer)
            throw UnknownLayerError("line " + std::to_string(line_no) + ": unknown layer '" + f[3] + "'");
        rows.push_back({f[0], f[1], f[2], *layer, line_no});
    }
    return rows;
}

struct AttributeRow {
    std::string village, node;
    Person person;
    std::size_t line = 0;
};

struct AttributeTable {
    std::vector<std::string> topics;
    std::vector<AttributeRow> rows;
};

/// Parses the attribute table. Columns may come in any order; every topic
/// contributes "<topic>.k_w1", "<topic>.k_w3" and "<topic>.treated".
inline AttributeTable read_attribute_rows(std::istream &in, IngestReport *report = nullptr) {
    std::string line;
    if (!std::getline(in, line))
        throw IngestError("line 1: missing attribute header");
    auto header = csv::split(line, 1);
    const auto &base = attribute_base_columns();
    std::map<std::string, std::size_t> base_at;
    AttributeTable table;
    std::map<std::string, std::array<std::optional<std::size_t>, 3>> topic_at;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string &name = header[c];
        if (std::find(base.begin(), base.end(), name) != base.end()) {
            if (!base_at.emplace(name, c).second)
                throw ValidationError("duplicate column '" + name + "'");
            continue;
        }
        auto dot = name.rfind('.');
        std::optional<std::size_t> suffix;
        if (dot != std::string::npos && dot > 0)
            for (std::size_t s = 0; s < 3; ++s)
                if (name.compare(dot + 1, std::string::npos, topic_column_suffixes()[s]) == 0)
                    suffix = s;
        if (!suffix)
            throw ValidationError("unknown column '" + name + "'");
        const std::string topic = name.substr(0, dot);
        if (!topic_at.contains(topic))
            table.topics.push_back(topic);
        auto &slot = topic_at[topic][*suffix];
        if (slot)
            throw ValidationError("duplicate column '" + name + "'");
        slot = c;
    }
    for (const auto &name : base)
        if (!base_at.contains(name))
            throw ValidationError("missing column '" + name + "'");
    for (const auto &topic : table.topics)
        for (std::size_t s = 0; s < 3; ++s)
            if (!topic_at[topic][s])
                throw ValidationError("missing column '" + topic + "." + topic_column_suffixes()[s] + "'");

    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (line.empty() || line == "\r")
            continue;
        auto f = csv::split(line, line_no);
        if (f.size() != header.size())
            throw IngestError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                              " fields, found " + std::to_string(f.size()));
        auto where = [&](const std::string &col) { return "line " + std::to_string(line_no) + ": " + col; };
        auto optional_number = [&](const std::string &col, std::size_t idx) -> std::optional<double> {
            if (f[idx].empty()) {
                if (report) {
                    ++report->missing_values;
                    ++report->missing_by_column[col];
                }
                return std::nullopt;
            }
            return csv::parse_double(f[idx], line_no, col);
        };
        auto binary = [&](const std::string &col, std::size_t idx) -> std::optional<int> {
            auto v = optional_number(col, idx);
            if (!v)
                return std::nullopt;
            if (*v != 0.0 && *v != 1.0)
                throw ValidationError(where(col) + " must be 0 or 1");
            return static_cast<int>(*v);
        };
        AttributeRow row;
        row.line = line_no;
        row.village = f[base_at["village"]];
        row.node = f[base_at["node"]];
        if (row.village.empty() || row.node.empty())
            throw IngestError(where("village/node") + " must not be empty");
        if (!seen.emplace(row.village, row.node).second)
            throw ValidationError(where("node") + " duplicate node '" + row.node + "' in village '" + row.village +
                                  "'");
        Person &p = row.person;
        p.household = f[base_at["household"]];
        if (p.household.empty())
            throw ValidationError(where("household") + " must not be empty");
        p.sociability = optional_number("sociability", base_at["sociability"]);
        p.age = optional_number("age", base_at["age"]);
        p.education = optional_number("education", base_at["education"]);
        p.self_health = optional_number("self_health", base_at["self_health"]);
        for (const char *col : {"sociability", "age", "education"}) {
            const auto &v = std::string(col) == "sociability" ? p.sociability
                            : std::string(col) == "age"       ? p.age
                                                              : p.education;
            if (v && *v < 0)
                throw ValidationError(where(col) + " must be non-negative");
        }
        if (auto g = binary("gender", base_at["gender"]))
            p.gender = *g;
        p.income = optional_number("income", base_at["income"]);
        if (p.income && !(*p.income == 1 || *p.income == 2 || *p.income == 3 || *p.income == 4))
            throw ValidationError(where("income") + " must be one of 1, 2, 3, 4");
        for (const auto &topic : table.topics) {
            const auto &at = topic_at[topic];
            TopicRecord rec;
            rec.k_w1 = binary(topic + ".k_w1", *at[0]);
            rec.k_w3 = binary(topic + ".k_w3", *at[1]);
            auto treated = binary(topic + ".treated", *at[2]);
            if (!treated)
                throw ValidationError(where(topic + ".treated") + " must not be empty");
            rec.treated = *treated == 1;
            p.topics.push_back(rec);
        }
        table.rows.push_back(std::move(row));
        if (report)
            ++report->rows_read;
    }
    return table;
}

/// Orders numeric names by value and places them before all other names,
/// which compare as plain strings.
struct NodeNameLess {
    static bool numeric(const std::string &s) {
        return !s.empty() && s.size() < 19 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
               (s.size() == 1 || s[0] != '0');
    }
    bool operator()(const std::string &a, const std::string &b) const {
        const bool na = numeric(a), nb = numeric(b);
        if (na != nb)
            return na;
        if (na && a.size() != b.size())
            return a.size() < b.size();
        return a < b;
    }
};

/// Builds villages from edge and attribute rows. Node ids follow
/// NodeNameLess within each village; villages are sorted by name.
/// Attribute-only nodes become isolates.
inline Dataset assemble_dataset(const LayerRegistry &layers, const std::vector<EdgeRow> &edges,
                                const AttributeTable *attributes, IngestReport *report = nullptr) {
    std::map<std::string, std::set<std::string, NodeNameLess>> nodes;
    for (const auto &e : edges) {
        nodes[e.village].insert(e.ego);
        nodes[e.village].insert(e.alter);
    }
    if (attributes)
        for (const auto &r : attributes->rows)
            nodes[r.village].insert(r.node);

    Dataset data;
    data.layers = layers;
    if (attributes)
        data.topics = attributes->topics;
    std::map<std::string, std::size_t> village_at;
    for (const auto &[name, members] : nodes) {
        village_at[name] = data.villages.size();
        Village v;
        v.name = name;
        for (const auto &m : members)
            v.ids.intern(m);
        data.villages.push_back(std::move(v));
    }
    std::vector<std::vector<Nomination>> noms(data.villages.size());
    for (const auto &e : edges) {
        const std::size_t v = village_at[e.village];
        noms[v].push_back({*data.villages[v].ids.find(e.ego), *data.villages[v].ids.find(e.alter), e.layer});
    }
    std::size_t collapsed = 0;
    for (std::size_t v = 0; v < data.villages.size(); ++v) {
        Village &village = data.villages[v];
        village.network = build_network(noms[v], village.ids.size(), layers.size());
        collapsed += village.network.collapsed_duplicates();
        village.panel = VillagePanel(village.ids.size());
    }
    if (attributes)
        for (const auto &r : attributes->rows) {
            Village &village = data.villages[village_at[r.village]];
            village.panel.set(*village.ids.find(r.node), r.person);
        }
    if (report) {
        report->duplicates_collapsed += collapsed;
        report->villages = data.villages.size();
        if (!attributes)
            report->rows_read += edges.size();
    }
    return data;
}

inline std::ifstream open_input(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IngestError("cannot open '" + path.string() + "'");
    return in;
}

/// Loads an edge list (and optionally an attribute table) into a dataset.
inline Dataset load_dataset(const std::filesystem::path &edges_path,
                            const std::optional<std::filesystem::path> &attributes_path, const LayerRegistry &layers,
                            IngestReport *edge_report = nullptr, IngestReport *attribute_report = nullptr) {
    auto edges_in = open_input(edges_path);
    auto edges = read_edge_rows(edges_in, layers);
    if (edge_report)
        edge_report->rows_read = edges.size();
    std::optional<AttributeTable> attrs;
    if (attributes_path) {
        auto attrs_in = open_input(*attributes_path);
        attrs = read_attribute_rows(attrs_in, attribute_report);
    }
    IngestReport scratch;
    Dataset data = assemble_dataset(layers, edges, attrs ? &*attrs : nullptr, &scratch);
    if (edge_report) {
        edge_report->duplicates_collapsed = scratch.duplicates_collapsed;
        edge_report->villages = scratch.villages;
    }
    return data;
}

/// Edge list in canonical order: villages by name, then nominations by
/// (ego id, alter id, layer id).
inline void save_edges(std::ostream &out, const Dataset &data) {
    out << edge_header << '\n';
    for (const auto &v : data.villages)
        for (const auto &n : v.network.nominations())
            out << v.name << ',' << v.ids.name(n.ego) << ',' << v.ids.name(n.alter) << ','
                << data.layers.name(n.layer) << '\n';
}

/// Attribute table in canonical column and row order. Numbers use the
/// shortest text that parses back to the same value.
inline void save_attributes(std::ostream &out, const Dataset &data) {
    std::vector<std::string> header = attribute_base_columns();
    for (const auto &t : data.topics)
        for (const auto &s : topic_column_suffixes())
            header.push_back(t + "." + s);
    out << csv::join(header) << '\n';
    auto num = [](const std::optional<double> &v) { return v ? shortest(*v) : std::string(); };
    auto bin = [](const std::optional<int> &v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto &v : data.villages)
        for (NodeId i = 0; i < v.ids.size(); ++i) {
            if (!v.panel.covers(i))
                continue;
            const Person &p = v.panel.at(i);
            std::vector<std::string> f{v.name,       v.ids.name(i), p.household,  num(p.sociability), num(p.age),
                                       num(p.gender), num(p.education), num(p.income), num(p.self_health)};
            for (std::size_t t = 0; t < data.topics.size(); ++t) {
                const TopicRecord &r = p.topics.at(t);
                f.push_back(bin(r.k_w1));
                f.push_back(bin(r.k_w3));
                f.push_back(r.treated ? "1" : "0");
            }
            out << csv::join(f) << '\n';
        }
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
template <typename Writer>
void write_file_atomically(const std::filesystem::path &path, Writer &&writer) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write '" + tmp.string() + "'");
        writer(out);
        out.flush();
        if (!out)
            throw Error("failed writing '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

/// One cell of an output table.
struct Cell {
    enum class Kind { text, integer, fraction, real, missing };
    Kind kind = Kind::missing;
    std::string text;
    long long integer = 0;
    double real = 0.0;

    static Cell of_text(std::string s) { return {Kind::text, std::move(s), 0, 0.0}; }
    static Cell of_int(long long v) { return {Kind::integer, {}, v, 0.0}; }
    /// Printed with six decimals.
    static Cell of_fraction(double v) { return {Kind::fraction, {}, 0, v}; }
    /// Printed in shortest round-trip form.
    static Cell of_real(double v) { return {Kind::real, {}, 0, v}; }
    static Cell none() { return {}; }
    static Cell of_fraction(const std::optional<double> &v) { return v ? of_fraction(*v) : none(); }
    static Cell of_bool(bool b) { return of_text(b ? "true" : "false"); }

    std::string str() const {
        switch (kind) {
        case Kind::text:
            return text;
        case Kind::integer:
            return std::to_string(integer);
        case Kind::fraction:
            return std::isfinite(real) ? fixed(real, 6) : std::string(real > 0 ? "inf" : real < 0 ? "-inf" : "nan");
        case Kind::real:
            return std::isfinite(real) ? shortest(real) : std::string(real > 0 ? "inf" : real < 0 ? "-inf" : "nan");
        case Kind::missing:
            break;
        }
        return {};
    }

    nlohmann::ordered_json json() const {
        switch (kind) {
        case Kind::text:
            if (text == "true" || text == "false")
                return text == "true";
            return text;
        case Kind::integer:
            return integer;
        case Kind::fraction:
        case Kind::real:
            if (!std::isfinite(real))
                return nullptr;
            return kind == Kind::fraction ? std::stod(fixed(real, 6)) : real;
        case Kind::missing:
            break;
        }
        return nullptr;
    }
};

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size())
            throw std::logic_error("table '" + name + "': row width does not match the header");
        rows.push_back(std::move(row));
    }
};

inline void write_csv(std::ostream &out, const Table &t) {
    out << csv::join(t.columns) << '\n';
    for (const auto &row : t.rows) {
        std::vector<std::string> f;
        for (const auto &c : row)
            f.push_back(c.str());
        out << csv::join(f) << '\n';
    }
}

inline nlohmann::ordered_json to_json(const Table &t) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto &row : t.rows) {
        nlohmann::ordered_json r;
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            r[t.columns[c]] = row[c].json();
        rows.push_back(r);
    }
    nlohmann::ordered_json j;
    j["columns"] = t.columns;
    j["rows"] = rows;
    return j;
}

/// Tables as one JSON document with a schema version.
inline nlohmann::ordered_json tables_to_json(const std::vector<Table> &tables) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    nlohmann::ordered_json body;
    for (const auto &t : tables)
        body[t.name] = to_json(t);
    j["tables"] = body;
    return j;
}

/// Reads a CSV table written by write_csv back as text cells.
inline Table read_csv_table(std::istream &in, std::string name = "table") {
    Table t;
    t.name = std::move(name);
    std::string line;
    if (!std::getline(in, line))
        throw IngestError("line 1: missing header");
    t.columns = csv::split(line, 1);
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (line.empty())
            break;
        auto f = csv::split(line, line_no);
        if (f.size() != t.columns.size())
            throw IngestError("line " + std::to_string(line_no) + ": wrong number of fields");
        std::vector<Cell> row;
        for (auto &s : f)
            row.push_back(s.empty() ? Cell::none() : Cell::of_text(std::move(s)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace mtorque
