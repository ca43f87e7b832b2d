#include <mtorque/io.hpp>
#include <mtorque/simulator.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace mtorque;

namespace {

const std::string fixtures = MTORQUE_FIXTURES;

std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Dataset from_text(const std::string &edges, const LayerRegistry &layers, const std::string *attributes = nullptr,
                  IngestReport *report = nullptr) {
    std::istringstream e(edges);
    auto rows = read_edge_rows(e, layers);
    std::optional<AttributeTable> attrs;
    if (attributes) {
        std::istringstream a(*attributes);
        attrs = read_attribute_rows(a, report);
    }
    return assemble_dataset(layers, rows, attrs ? &*attrs : nullptr, report);
}

template <typename E>
std::string error_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const E &e) {
        return e.what();
    }
    return "no error";
}

std::string edges_text(const Dataset &d) {
    std::ostringstream s;
    save_edges(s, d);
    return s.str();
}

std::string attributes_text(const Dataset &d) {
    std::ostringstream s;
    save_attributes(s, d);
    return s.str();
}

const LayerRegistry ab({"A", "B"});
const std::string attribute_header =
    "village,node,household,sociability,age,gender,education,income,self_health,t.k_w1,t.k_w3,t.treated\n";

} // namespace

TEST(LoadEdges, HeaderOnlyGivesNoVillages) {
    IngestReport report;
    const Dataset d = from_text("village,ego,alter,layer\n", ab, nullptr, &report);
    EXPECT_TRUE(d.villages.empty());
    EXPECT_EQ(report.rows_read, 0u);
    EXPECT_EQ(report.duplicates_collapsed, 0u);
    EXPECT_EQ(report.villages, 0u);
}

TEST(LoadEdges, ThreeRowFixtureMatchesHandBuiltNetworks) {
    const LayerRegistry reg({"kin", "friend"});
    IngestReport report;
    const Dataset d = load_dataset(fixtures + "/three_rows.csv", std::nullopt, reg, &report);
    EXPECT_EQ(report.rows_read, 3u);
    EXPECT_EQ(report.villages, 2u);
    ASSERT_EQ(d.villages.size(), 2u);
    EXPECT_EQ(d.villages[0].name, "east");
    EXPECT_EQ(d.villages[1].name, "west");

    const auto east = build_network(std::vector<Nomination>{{0, 1, layer_at(0)}}, 2, 2);
    EXPECT_EQ(d.villages[0].ids.name(0), "x");
    EXPECT_TRUE(std::ranges::equal(d.villages[0].network.nominations(), east.nominations()));

    const auto west = build_network(std::vector<Nomination>{{1, 0, layer_at(1)}, {0, 1, layer_at(0)}}, 2, 2);
    EXPECT_EQ(d.villages[1].ids.name(0), "a");
    EXPECT_TRUE(std::ranges::equal(d.villages[1].network.nominations(), west.nominations()));
    ASSERT_EQ(d.villages[1].network.dyads().size(), 1u);
    EXPECT_EQ(d.villages[1].network.dyads()[0].support(), layer_bit(layer_at(0)) | layer_bit(layer_at(1)));
}

TEST(LoadEdges, DuplicatesCollapseAndAreReported) {
    IngestReport report;
    const Dataset d = from_text("village,ego,alter,layer\nv,1,2,A\nv,1,2,A\nv,2,1,A\nv,1,2,B\n", ab, nullptr,
                                &report);
    EXPECT_EQ(report.duplicates_collapsed, 1u);
    EXPECT_EQ(d.villages[0].network.nominations().size(), 3u);
}

TEST(LoadEdges, NumericNamesKeepNumericOrder) {
    const Dataset d = from_text("village,ego,alter,layer\nv,10,9,A\nv,2,b,A\nv,a,1,A\n", ab);
    const auto &ids = d.villages[0].ids;
    std::vector<std::string> order;
    for (NodeId i = 0; i < ids.size(); ++i)
        order.push_back(ids.name(i));
    EXPECT_EQ(order, (std::vector<std::string>{"1", "2", "9", "10", "a", "b"}));
}

TEST(LoadEdges, MalformedRowsNameTheirLine) {
    auto load = [](const std::string &text) { return [text] { from_text(text, ab); }; };
    EXPECT_NE(error_of<IngestError>(load("village,ego,alter,layer\nv,1,2,A\nv,3,3,A\n")).find("line 3"),
              std::string::npos);
    EXPECT_NE(error_of<IngestError>(load("village,ego,alter,layer\nv,1,2\n")).find("line 2"), std::string::npos);
    EXPECT_NE(error_of<IngestError>(load("village,ego,alter,layer\nv,1,,A\n")).find("line 2"), std::string::npos);
    EXPECT_NE(error_of<IngestError>(load("village,ego,alter,layer\nv,\"1\",2,A\n")).find("line 2"),
              std::string::npos);
    EXPECT_NE(error_of<IngestError>(load("village,ego,layer,alter\n")).find("header"), std::string::npos);
    EXPECT_NE(error_of<IngestError>(load("")).find("header"), std::string::npos);

    const std::string unknown = error_of<UnknownLayerError>(load("village,ego,alter,layer\nv,1,2,A\nv,1,2,Z\n"));
    EXPECT_NE(unknown.find("'Z'"), std::string::npos);
    EXPECT_NE(unknown.find("line 3"), std::string::npos);
}

TEST(LoadEdges, WindowsLineEndingsAreAccepted) {
    const Dataset d = from_text("village,ego,alter,layer\r\nv,1,2,A\r\n", ab);
    EXPECT_EQ(d.villages[0].ids.name(1), "2");
    EXPECT_EQ(d.layers.name(d.villages[0].network.nominations()[0].layer), "A");
}

TEST(LoadAttributes, FixtureValuesAndMissingFlags) {
    IngestReport report;
    const Dataset d = load_dataset(fixtures + "/two_layer.csv", fixtures + "/two_layer_attributes.csv", ab, nullptr,
                                   &report);
    EXPECT_EQ(report.rows_read, 4u);
    EXPECT_EQ(report.missing_values, 4u);
    EXPECT_EQ(report.missing_by_column["t.k_w3"], 1u);
    EXPECT_EQ(report.missing_by_column["education"], 1u);
    ASSERT_EQ(d.topics, std::vector<std::string>{"t"});
    const auto &panel = d.villages[0].panel;
    const Person &p2 = panel.at(1);
    EXPECT_EQ(p2.household, "h1");
    EXPECT_EQ(*p2.age, 0.1);
    EXPECT_FALSE(p2.education);
    EXPECT_EQ(*p2.income, 4.0);
    EXPECT_EQ(p2.topics[0].k_w1, 1);
    const Person &p3 = panel.at(2);
    EXPECT_FALSE(p3.topics[0].k_w3);
    EXPECT_FALSE(p3.self_health);
    EXPECT_TRUE(panel.at(0).topics[0].treated);
}

TEST(LoadAttributes, RejectsInvalidValuesAndColumns) {
    auto load = [](const std::string &text) {
        return [text] {
            std::istringstream in(text);
            read_attribute_rows(in);
        };
    };
    const std::string row = "v1,1,h1,2,34,1,6,";
    EXPECT_NE(error_of<ValidationError>(load(attribute_header + row + "5,3,0,1,1\n")).find("income"),
              std::string::npos);
    EXPECT_NE(error_of<ValidationError>(load(attribute_header + row + "0,3,0,1,1\n")).find("income"),
              std::string::npos);
    EXPECT_NE(error_of<ValidationError>(load(attribute_header + row + "2.5,3,0,1,1\n")).find("income"),
              std::string::npos);
    EXPECT_NE(error_of<ValidationError>(load(attribute_header + row + "2,3,2,1,1\n")).find("t.k_w1"),
              std::string::npos);
    EXPECT_NE(error_of<ValidationError>(load(attribute_header + row + "2,3,0,1,\n")).find("t.treated"),
              std::string::npos);
    EXPECT_NE(error_of<ValidationError>(load(attribute_header + "v1,1,h1,2,34,3,6,2,3,0,1,1\n")).find("gender"),
              std::string::npos);
    EXPECT_NE(error_of<ValidationError>(load(attribute_header + "v1,1,h1,2,34,1,6,2,3,0,1,1\n"
                                                                "v1,1,h1,2,34,1,6,2,3,0,1,1\n"))
                  .find("duplicate node"),
              std::string::npos);
    EXPECT_NE(error_of<ValidationError>(load("village,node,household,sociability,age,gender,education,income,"
                                             "self_health,favourite_colour\n"))
                  .find("'favourite_colour'"),
              std::string::npos);
    EXPECT_NE(error_of<ValidationError>(load("village,node,household,sociability,age,gender,education,income,"
                                             "self_health,t.k_w1,t.treated\n"))
                  .find("'t.k_w3'"),
              std::string::npos);
    EXPECT_NE(error_of<ValidationError>(load("village,node,sociability,age,gender,education,income,self_health\n"))
                  .find("'household'"),
              std::string::npos);
    EXPECT_NE(error_of<IngestError>(load(attribute_header + "v1,1,h1,abc,34,1,6,2,3,0,1,1\n")).find("line 2"),
              std::string::npos);
}

TEST(LoadAttributes, AttributeOnlyNodesBecomeIsolates) {
    const std::string attrs = attribute_header + "v,1,h,,,,,,,,,0\nv,2,h,,,,,,,,,0\nv,3,h,,,,,,,,,1\n";
    const Dataset d = from_text("village,ego,alter,layer\nv,1,2,A\n", ab, &attrs);
    ASSERT_EQ(d.villages[0].ids.size(), 3u);
    EXPECT_TRUE(d.villages[0].network.ties(2).empty());
    EXPECT_NO_THROW(d.villages[0].panel.require_complete(3));
}

TEST(RoundTrip, AttributeFixtureIsReproducedByteForByte) {
    const Dataset d = load_dataset(fixtures + "/two_layer.csv", fixtures + "/two_layer_attributes.csv", ab);
    EXPECT_EQ(attributes_text(d), slurp(fixtures + "/two_layer_attributes.csv"));
    EXPECT_EQ(edges_text(d), "village,ego,alter,layer\nv1,1,2,A\nv1,1,2,B\nv1,2,3,A\nv1,3,4,B\n");
}

TEST(RoundTrip, SimulatedDatasetSurvivesSaveAndLoad) {
    ExperimentConfig cfg;
    cfg.villages = 4;
    cfg.population_min = 30;
    cfg.population_max = 50;
    cfg.diffusion.probability.assign(11, 0.2);
    Dataset d = simulate_dataset(cfg);
    // Awkward doubles must come back bit-identical.
    std::mt19937_64 rng(3);
    for (auto &v : d.villages)
        for (NodeId i = 0; i < v.ids.size(); ++i)
            v.panel.at(i).age = std::ldexp(static_cast<double>(rng() >> 11), -40);
    d.villages[0].panel.at(0).age = 0.1 + 0.2;
    d.villages[0].panel.at(1).age = 1e-300;

    const std::string edges = edges_text(d), attrs = attributes_text(d);
    const Dataset back = from_text(edges, d.layers, &attrs);
    EXPECT_EQ(edges_text(back), edges);
    EXPECT_EQ(attributes_text(back), attrs);
    ASSERT_EQ(back.villages.size(), d.villages.size());
    for (std::size_t v = 0; v < d.villages.size(); ++v) {
        EXPECT_EQ(back.villages[v].panel, d.villages[v].panel);
        EXPECT_TRUE(std::ranges::equal(back.villages[v].network.nominations(), d.villages[v].network.nominations()));
    }
}

TEST(Tables, CellFormatting) {
    EXPECT_EQ(Cell::of_fraction(2.0 / 3.0).str(), "0.666667");
    EXPECT_EQ(Cell::of_fraction(0.5).str(), "0.500000");
    EXPECT_EQ(Cell::of_fraction(-1e-9).str(), "0.000000");
    EXPECT_EQ(Cell::of_int(42).str(), "42");
    EXPECT_EQ(Cell::of_real(0.1).str(), "0.1");
    EXPECT_EQ(Cell::none().str(), "");
    EXPECT_EQ(Cell::of_fraction(std::optional<double>{}).str(), "");
    EXPECT_EQ(Cell::of_fraction(2.0 / 3.0).json().get<double>(), 0.666667);
    EXPECT_TRUE(Cell::none().json().is_null());
    EXPECT_TRUE(Cell::of_bool(true).json().get<bool>());
}

TEST(Tables, CsvAndJsonRoundTrip) {
    Table t{"demo", {"name", "count", "share", "estimate", "note"}, {}};
    t.add({Cell::of_text("a"), Cell::of_int(3), Cell::of_fraction(0.25), Cell::of_real(1.0 / 3.0), Cell::none()});
    t.add({Cell::of_text("b"), Cell::of_int(-1), Cell::of_fraction(1.0), Cell::of_real(-2.5e-7),
           Cell::of_text("x")});
    EXPECT_THROW(t.add({Cell::of_text("short")}), std::logic_error);

    std::ostringstream csv;
    write_csv(csv, t);
    std::istringstream in(csv.str());
    const Table back = read_csv_table(in, "demo");
    EXPECT_EQ(back.columns, t.columns);
    ASSERT_EQ(back.rows.size(), 2u);
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            EXPECT_EQ(back.rows[r][c].str(), t.rows[r][c].str());
    EXPECT_EQ(std::stod(back.rows[0][3].str()), 1.0 / 3.0);

    const auto j = nlohmann::ordered_json::parse(tables_to_json({t}).dump());
    EXPECT_EQ(j["schema_version"], 1);
    const auto &rows = j["tables"]["demo"]["rows"];
    EXPECT_EQ(rows[0]["count"], 3);
    EXPECT_EQ(rows[0]["share"].get<double>(), 0.25);
    EXPECT_EQ(rows[0]["estimate"].get<double>(), 1.0 / 3.0);
    EXPECT_TRUE(rows[0]["note"].is_null());
    EXPECT_EQ(rows[1]["note"], "x");
}

TEST(Files, AtomicWriteLeavesNoTemporary) {
    const auto dir = std::filesystem::temp_directory_path() / "mtorque_io_atomic";
    std::filesystem::remove_all(dir);
    const auto path = dir / "nested" / "out.csv";
    write_file_atomically(path, [](std::ostream &o) { o << "first\n"; });
    write_file_atomically(path, [](std::ostream &o) { o << "second\n"; });
    EXPECT_EQ(slurp(path), "second\n");
    EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    EXPECT_THROW(load_dataset(dir / "missing.csv", std::nullopt, ab), IngestError);
    std::filesystem::remove_all(dir);
}
