#pragma once

#include <mtorque/contagion_model.hpp>
#include <mtorque/critical_pathways.hpp>
#include <mtorque/io.hpp>
#include <mtorque/scenario.hpp>
#include <mtorque/simulator.hpp>
#include <mtorque/structural_metrics.hpp>
#include <mtorque/torque.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace mtorque {

namespace cli {

struct Options {
    std::string edges;
    std::string attrs;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string format = "csv";
    std::vector<std::string> layers;
    std::string config;
    std::string topic;
    int k = 3;
    std::string mode = "primary";
    std::string direction = "directed";
    int bootstrap = 1000;
    double ci = 0.95;
    std::string design_out;
    std::vector<std::string> estimate_layers;
    std::vector<std::string> topics;
    std::vector<int> ks{2, 3, 4};
    double alpha = 0.05;
    bool exclude_low_degree = false;
    bool drop_collinear = false;
};

/// What a subcommand produced: tables, or a JSON document that replaces
/// them under --format json.
struct Output {
    std::vector<Table> tables;
    std::optional<nlohmann::ordered_json> document;
};

inline unsigned thread_count(const Options &o) {
    if (o.threads)
        return std::max(1u, *o.threads);
    if (const char *env = std::getenv("MTORQUE_THREADS")) {
        char *end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<unsigned>(v);
        throw ConfigError("MTORQUE_THREADS must be a positive integer");
    }
    return 1;
}

inline LayerRegistry registry(const Options &o) {
    return o.layers.empty() ? LayerRegistry::canonical() : LayerRegistry(o.layers);
}

inline Dataset load(const Options &o, bool need_attributes, std::ostream &err) {
    if (o.edges.empty())
        throw ConfigError("--edges is required");
    if (need_attributes && o.attrs.empty())
        throw ConfigError("--attrs is required");
    IngestReport edge_report, attribute_report;
    std::optional<std::filesystem::path> attrs;
    if (!o.attrs.empty())
        attrs = o.attrs;
    Dataset data = load_dataset(o.edges, attrs, registry(o), &edge_report, &attribute_report);
    err << "edges: " << edge_report.rows_read << " rows, " << edge_report.duplicates_collapsed
        << " duplicates collapsed, " << edge_report.villages << " villages\n";
    if (attrs) {
        err << "attributes: " << attribute_report.rows_read << " rows, " << attribute_report.missing_values
            << " missing values\n";
        for (const auto &[column, count] : attribute_report.missing_by_column)
            err << "  missing " << column << ": " << count << '\n';
    }
    return data;
}

inline PathwayConfig pathway(const Options &o) {
    PathwayConfig p;
    p.k = o.k;
    p.mode = o.mode == "primary" ? PathwayMode::primary : PathwayMode::secondary;
    p.direction = o.direction == "directed" ? Direction::directed : Direction::reversed;
    return p;
}

inline std::size_t topic_of(const Options &o, const Dataset &data) {
    if (data.topics.empty())
        throw DataError("the attribute table has no topics");
    return o.topic.empty() ? 0 : data.topic_index(o.topic);
}

inline std::vector<LayerId> chosen_layers(const std::vector<std::string> &names, const Dataset &data) {
    if (names.empty())
        return data.layers.ids();
    std::vector<LayerId> out;
    for (const auto &n : names) {
        auto id = data.layers.find(n);
        if (!id)
            throw UnknownLayerError("unknown layer '" + n + "'");
        out.push_back(*id);
    }
    return out;
}

inline Output metrics(const Options &o, std::ostream &err) {
    const Dataset data = load(o, false, err);
    const auto policy = o.exclude_low_degree ? LowDegreePolicy::exclude : LowDegreePolicy::count_as_zero;
    std::vector<std::vector<LayerStats>> stats(data.villages.size());
    std::vector<std::vector<double>> trans(data.villages.size());
    parallel_for(data.villages.size(), thread_count(o), [&](std::size_t v) {
        const auto &net = data.villages[v].network;
        stats[v] = layer_statistics(net, 1, policy);
        for (LayerId l : data.layers.ids())
            trans[v].push_back(transitivity(layer_subgraph(net, l)));
    });
    Table t{"metrics",
            {"village", "layer", "prevalence", "clustering", "transitivity", "reachability", "monoplexity",
             "mean_edge_betweenness"},
            {}};
    for (std::size_t v = 0; v < data.villages.size(); ++v)
        for (std::size_t l = 0; l < stats[v].size(); ++l) {
            const auto &s = stats[v][l];
            t.add({Cell::of_text(data.villages[v].name), Cell::of_text(data.layers.name(s.layer)),
                   Cell::of_fraction(s.prevalence), Cell::of_fraction(s.clustering), Cell::of_fraction(trans[v][l]),
                   Cell::of_fraction(s.reachability), Cell::of_fraction(s.monoplexity),
                   Cell::of_fraction(s.mean_edge_betweenness)});
        }
    return {{t}, std::nullopt};
}

inline std::vector<std::optional<TorqueReport>> village_torque(const Dataset &data, unsigned threads) {
    std::vector<std::optional<TorqueReport>> reports(data.villages.size());
    parallel_for(data.villages.size(), threads, [&](std::size_t v) {
        try {
            reports[v] = torque_all_layers(data.villages[v].network);
        } catch (const UndefinedStatisticError &) {
        }
    });
    return reports;
}

inline Output torque(const Options &o, std::ostream &err) {
    const Dataset data = load(o, false, err);
    const auto reports = village_torque(data, thread_count(o));
    Table t{"torque", {"village", "layer", "critical_pairs", "connected_pairs", "torque"}, {}};
    Table summary{"torque_summary", {"layer", "villages", "mean_torque", "min_torque", "max_torque"}, {}};
    const std::size_t layer_count = data.layers.size();
    std::vector<std::vector<double>> per_layer(layer_count);
    for (std::size_t v = 0; v < data.villages.size(); ++v)
        for (std::size_t l = 0; l < layer_count; ++l) {
            const auto &r = reports[v];
            std::vector<Cell> row{Cell::of_text(data.villages[v].name), Cell::of_text(data.layers.name(layer_at(l)))};
            if (r) {
                row.push_back(Cell::of_int(static_cast<long long>(r->layers[l].critical_pairs)));
                row.push_back(Cell::of_int(static_cast<long long>(r->connected_pairs)));
                row.push_back(Cell::of_fraction(r->layers[l].torque));
                per_layer[l].push_back(r->layers[l].torque);
            } else {
                row.push_back(Cell::of_int(0));
                row.push_back(Cell::of_int(0));
                row.push_back(Cell::none());
            }
            t.add(std::move(row));
        }
    for (std::size_t l = 0; l < layer_count; ++l) {
        const auto &x = per_layer[l];
        std::vector<Cell> row{Cell::of_text(data.layers.name(layer_at(l))), Cell::of_int(static_cast<long long>(x.size()))};
        if (x.empty()) {
            row.insert(row.end(), 3, Cell::none());
        } else {
            row.push_back(Cell::of_fraction(std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size())));
            row.push_back(Cell::of_fraction(*std::min_element(x.begin(), x.end())));
            row.push_back(Cell::of_fraction(*std::max_element(x.begin(), x.end())));
        }
        summary.add(std::move(row));
    }
    return {{t, summary}, std::nullopt};
}

inline std::optional<double> pearson(const std::vector<double> &x, const std::vector<double> &y) {
    const auto n = static_cast<double>(x.size());
    if (x.size() < 3)
        return std::nullopt;
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

inline Output correlates(const Options &o, std::ostream &err) {
    const Dataset data = load(o, false, err);
    const unsigned threads = thread_count(o);
    const auto reports = village_torque(data, threads);
    std::vector<std::vector<LayerStats>> stats(data.villages.size());
    parallel_for(data.villages.size(), threads,
                 [&](std::size_t v) { stats[v] = layer_statistics(data.villages[v].network); });

    const std::size_t layer_count = data.layers.size();
    Table t{"correlates", {"village", "layer", "prevalence", "monoplexity", "mean_edge_betweenness", "torque"}, {}};
    // Per layer: sums and counts of each statistic over villages where defined.
    std::vector<std::array<double, 4>> sum(layer_count, {0, 0, 0, 0});
    std::vector<std::array<std::size_t, 4>> count(layer_count, {0, 0, 0, 0});
    auto accumulate = [&](std::size_t l, std::size_t s, const std::optional<double> &v) {
        if (v) {
            sum[l][s] += *v;
            ++count[l][s];
        }
    };
    for (std::size_t v = 0; v < data.villages.size(); ++v)
        for (std::size_t l = 0; l < layer_count; ++l) {
            const auto &s = stats[v][l];
            std::optional<double> tq;
            if (reports[v])
                tq = reports[v]->layers[l].torque;
            t.add({Cell::of_text(data.villages[v].name), Cell::of_text(data.layers.name(s.layer)),
                   Cell::of_fraction(s.prevalence), Cell::of_fraction(s.monoplexity),
                   Cell::of_fraction(s.mean_edge_betweenness), Cell::of_fraction(tq)});
            accumulate(l, 0, s.prevalence);
            accumulate(l, 1, s.monoplexity);
            accumulate(l, 2, s.mean_edge_betweenness);
            accumulate(l, 3, tq);
        }
    Table summary{"correlates_summary",
                  {"layer", "prevalence", "monoplexity", "mean_edge_betweenness", "torque"},
                  {}};
    std::vector<std::array<std::optional<double>, 4>> means(layer_count);
    for (std::size_t l = 0; l < layer_count; ++l) {
        std::vector<Cell> row{Cell::of_text(data.layers.name(layer_at(l)))};
        for (std::size_t s = 0; s < 4; ++s) {
            if (count[l][s])
                means[l][s] = sum[l][s] / static_cast<double>(count[l][s]);
            row.push_back(Cell::of_fraction(means[l][s]));
        }
        summary.add(std::move(row));
    }
    Table corr{"correlations", {"statistic", "layers", "pearson_r_with_torque"}, {}};
    const char *names[] = {"prevalence", "monoplexity", "mean_edge_betweenness"};
    for (std::size_t s = 0; s < 3; ++s) {
        std::vector<double> x, y;
        for (std::size_t l = 0; l < layer_count; ++l)
            if (means[l][s] && means[l][3]) {
                x.push_back(*means[l][s]);
                y.push_back(*means[l][3]);
            }
        corr.add({Cell::of_text(names[s]), Cell::of_int(static_cast<long long>(x.size())),
                  Cell::of_fraction(pearson(x, y))});
    }
    return {{t, summary, corr}, std::nullopt};
}

inline Output exposure(const Options &o, std::ostream &err) {
    const Dataset data = load(o, true, err);
    const std::size_t topic = topic_of(o, data);
    const auto layers = chosen_layers(o.estimate_layers, data);
    std::vector<PathwayConfig> configs(layers.size(), pathway(o));
    for (std::size_t i = 0; i < layers.size(); ++i)
        configs[i].layer = layers[i];
    const auto table = compute_exposure(data, topic, configs, thread_count(o));
    Table t{"exposure", {"village", "node", "layer", "k", "mode", "direction", "xi_L", "xi_notL", "N_k"}, {}};
    for (std::size_t v = 0; v < data.villages.size(); ++v)
        for (NodeId i = 0; i < data.villages[v].ids.size(); ++i)
            for (std::size_t c = 0; c < configs.size(); ++c) {
                const auto &r = table[c][v][i];
                t.add({Cell::of_text(data.villages[v].name), Cell::of_text(data.villages[v].ids.name(i)),
                       Cell::of_text(data.layers.name(configs[c].layer)), Cell::of_int(configs[c].k),
                       Cell::of_text(std::string(to_string(configs[c].mode))),
                       Cell::of_text(std::string(to_string(configs[c].direction))), Cell::of_int(r.xi_layer),
                       Cell::of_int(r.xi_other), Cell::of_int(r.alters)});
            }
    return {{t}, std::nullopt};
}

inline Output screen(const Options &o, std::ostream &err) {
    const Dataset data = load(o, true, err);
    const auto topics = o.topics.empty() ? data.topics : o.topics;
    const auto result = contagion_screen(data, topics, o.ks, pathway(o), o.alpha, thread_count(o));
    Table t{"screen", {"topic", "k", "coefficient", "std_error", "z", "p_value"}, {}};
    for (const auto &r : result.rows)
        t.add({Cell::of_text(r.topic), Cell::of_int(r.k), Cell::of_real(r.coefficient), Cell::of_real(r.std_error),
               Cell::of_real(r.z), Cell::of_real(r.p_value)});
    Table pass{"screen_topics", {"topic", "passes"}, {}};
    for (const auto &topic : topics)
        pass.add({Cell::of_text(topic), Cell::of_bool(std::find(result.passing.begin(), result.passing.end(), topic) !=
                                                      result.passing.end())});
    return {{t, pass}, std::nullopt};
}

inline Output fit(const Options &o, std::ostream &err) {
    const Dataset data = load(o, true, err);
    const std::size_t topic = topic_of(o, data);
    if (o.estimate_layers.size() != 1)
        throw ConfigError("fit needs exactly one --layer");
    PathwayConfig p = pathway(o);
    p.layer = chosen_layers(o.estimate_layers, data).front();
    auto exposure = compute_exposure(data, topic, std::span(&p, 1), thread_count(o));
    Design design = build_design(data, topic, p, exposure.front());
    if (!o.design_out.empty())
        write_file_atomically(o.design_out, [&](std::ostream &f) { write_design_csv(f, design); });
    LogitOptions options;
    options.drop_collinear = o.drop_collinear;
    const ContagionModel model = fit_contagion(std::move(design), options);
    Table t{"coefficients", {"name", "estimate", "std_error", "z", "p_value", "fixed"}, {}};
    for (std::size_t i = 0; i < model.fit.names.size(); ++i) {
        const double b = model.fit.coef(static_cast<Eigen::Index>(i)), se = model.fit.std_error(i);
        const bool finite = std::isfinite(se);
        t.add({Cell::of_text(model.fit.names[i]), Cell::of_real(b), finite ? Cell::of_real(se) : Cell::none(),
               finite ? Cell::of_real(b / se) : Cell::none(),
               finite ? Cell::of_real(normal_two_sided_p(b / se)) : Cell::none(),
               Cell::of_bool(static_cast<bool>(model.fit.fixed[i]))});
    }
    return {{t}, to_json(model)};
}

inline Table reduction_table(const std::vector<ExperimentLayer> &layers, bool with_transmission) {
    Table t{"reductions",
            {"layer", "mean_torque", "estimated", "reduction", "ci_low", "ci_high", "level", "individuals",
             "replicates", "failed_replicates"},
            {}};
    if (with_transmission)
        t.columns.insert(t.columns.begin() + 1, "transmission");
    for (const auto &l : layers) {
        const auto &r = l.reduction;
        std::vector<Cell> row{Cell::of_text(l.layer),
                              Cell::of_fraction(l.mean_torque),
                              Cell::of_bool(l.estimated),
                              Cell::of_real(r.reduction),
                              r.ci_low ? Cell::of_real(*r.ci_low) : Cell::none(),
                              r.ci_high ? Cell::of_real(*r.ci_high) : Cell::none(),
                              Cell::of_fraction(r.level),
                              Cell::of_int(static_cast<long long>(r.individuals)),
                              Cell::of_int(r.replicates),
                              Cell::of_int(r.failed_replicates)};
        if (with_transmission)
            row.insert(row.begin() + 1, Cell::of_fraction(l.transmission));
        t.add(std::move(row));
    }
    return t;
}

inline Table regression_table(const std::vector<ExperimentLayer> &layers) {
    std::size_t used = 0;
    const auto reg = torque_reduction_regression(layers, &used);
    Table t{"torque_regression", {"layers", "slope", "intercept", "slope_se", "t", "p_value"}, {}};
    if (reg)
        t.add({Cell::of_int(static_cast<long long>(used)), Cell::of_real(reg->slope), Cell::of_real(reg->intercept),
               Cell::of_real(reg->slope_se), Cell::of_real(reg->t), Cell::of_real(reg->p_value)});
    else
        t.add({Cell::of_int(static_cast<long long>(used)), Cell::none(), Cell::none(), Cell::none(), Cell::none(),
               Cell::none()});
    return t;
}

inline Output reduce(const Options &o, std::ostream &err) {
    const Dataset data = load(o, true, err);
    const std::size_t topic = topic_of(o, data);
    LayerReductionOptions opt;
    opt.pathway = pathway(o);
    opt.bootstrap = o.bootstrap;
    opt.level = o.ci;
    opt.seed = o.seed.value_or(1);
    opt.threads = thread_count(o);
    const auto layers = reduction_by_layer(data, topic, chosen_layers(o.estimate_layers, data), opt);
    return {{reduction_table(layers, false), regression_table(layers)}, std::nullopt};
}

inline ExperimentConfig scenario(const Options &o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_scenario(o.config);
    if (o.seed)
        cfg.seed = *o.seed;
    cfg.threads = thread_count(o);
    cfg.validate();
    return cfg;
}

inline Output simulate(const Options &o, std::ostream &) {
    if (o.out_dir.empty())
        throw ConfigError("simulate needs --out-dir");
    const ExperimentConfig cfg = scenario(o);
    const Dataset data = simulate_dataset(cfg);
    const std::filesystem::path dir(o.out_dir);
    write_file_atomically(dir / "edges.csv", [&](std::ostream &f) { save_edges(f, data); });
    write_file_atomically(dir / "attributes.csv", [&](std::ostream &f) { save_attributes(f, data); });
    Table t{"villages", {"village", "nodes", "nominations", "treated", "k_w1_rate", "k_w3_rate"}, {}};
    for (const auto &v : data.villages) {
        std::size_t treated = 0, w1 = 0, w3 = 0;
        for (NodeId i = 0; i < v.ids.size(); ++i) {
            const auto &rec = v.panel.at(i).topics.front();
            treated += rec.treated;
            w1 += rec.k_w1.value_or(0);
            w3 += rec.k_w3.value_or(0);
        }
        const double n = static_cast<double>(v.ids.size());
        t.add({Cell::of_text(v.name), Cell::of_int(static_cast<long long>(v.ids.size())),
               Cell::of_int(static_cast<long long>(v.network.nominations().size())),
               Cell::of_int(static_cast<long long>(treated)), Cell::of_fraction(static_cast<double>(w1) / n),
               Cell::of_fraction(static_cast<double>(w3) / n)});
    }
    return {{t}, std::nullopt};
}

inline Output experiment(const Options &o, std::ostream &) {
    const ExperimentResult result = end_to_end_experiment(scenario(o));
    return {{reduction_table(result.layers, true), regression_table(result.layers)}, std::nullopt};
}

inline void emit(const Options &o, const Output &output, std::ostream &out) {
    const bool json = o.format == "json";
    if (json) {
        const auto doc = output.document ? *output.document : tables_to_json(output.tables);
        out << doc.dump(2) << '\n';
    } else {
        for (std::size_t i = 0; i < output.tables.size(); ++i) {
            if (i)
                out << '\n';
            write_csv(out, output.tables[i]);
        }
    }
    if (o.out_dir.empty())
        return;
    const std::filesystem::path dir(o.out_dir);
    if (json && output.document) {
        write_file_atomically(dir / (output.tables.front().name + ".json"),
                              [&](std::ostream &f) { f << output.document->dump(2) << '\n'; });
        return;
    }
    for (const auto &t : output.tables) {
        if (json)
            write_file_atomically(dir / (t.name + ".json"),
                                  [&](std::ostream &f) { f << tables_to_json({t}).dump(2) << '\n'; });
        else
            write_file_atomically(dir / (t.name + ".csv"), [&](std::ostream &f) { write_csv(f, t); });
    }
}

} // namespace cli

/// Runs the command-line interface. Returns 0 on success, 1 on runtime or
/// data errors and 2 on usage errors.
inline int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    cli::Options o;
    CLI::App app{"Multiplex network torque and contagion analytics", "mtorque"};
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->always_capture_default();
    app.add_option("--edges", o.edges, "Edge list CSV (village,ego,alter,layer)");
    app.add_option("--attrs", o.attrs, "Attribute CSV");
    app.add_option("--out-dir", o.out_dir, "Directory for output files");
    app.add_option("--seed", o.seed, "Random seed");
    app.add_option("--threads", o.threads, "Worker threads (default: MTORQUE_THREADS or 1)")->check(CLI::PositiveNumber);
    app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--layers", o.layers, "Layer registry, in order (default: the eleven canonical layers)")
        ->delimiter(',');

    using Handler = std::function<cli::Output(const cli::Options &, std::ostream &)>;
    std::vector<std::pair<CLI::App *, Handler>> commands;
    auto pathway_flags = [&](CLI::App *sub) {
        sub->add_option("--k", o.k, "Pathway length")->check(CLI::Range(2, 64));
        sub->add_option("--mode", o.mode, "Intermediary validity")->check(CLI::IsMember({"primary", "secondary"}));
        sub->add_option("--direction", o.direction, "Step direction")
            ->check(CLI::IsMember({"directed", "reversed"}));
    };

    auto *metrics = app.add_subcommand("metrics", "Per-village, per-layer descriptive statistics");
    metrics->add_flag("--exclude-low-degree", o.exclude_low_degree,
                      "Drop nodes of degree below 2 from average clustering");
    commands.emplace_back(metrics, cli::metrics);
    commands.emplace_back(app.add_subcommand("torque", "Network torque per village and layer"), cli::torque);
    commands.emplace_back(app.add_subcommand("correlates", "Prevalence, monoplexity and betweenness against torque"),
                          cli::correlates);

    auto *exposure = app.add_subcommand("exposure", "Critical-pathway exposure counts");
    exposure->add_option("--topic", o.topic, "Topic (default: first)");
    exposure->add_option("--layer", o.estimate_layers, "Layers (default: all)")->delimiter(',');
    pathway_flags(exposure);
    commands.emplace_back(exposure, cli::exposure);

    auto *screen = app.add_subcommand("screen", "Layer-free contagion screen per topic");
    screen->add_option("--topics", o.topics, "Topics (default: all)")->delimiter(',');
    screen->add_option("--ks", o.ks, "Pathway lengths")->delimiter(',')->check(CLI::Range(2, 64));
    screen->add_option("--alpha", o.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    screen->add_option("--mode", o.mode, "Intermediary validity")->check(CLI::IsMember({"primary", "secondary"}));
    screen->add_option("--direction", o.direction, "Step direction")->check(CLI::IsMember({"directed", "reversed"}));
    commands.emplace_back(screen, cli::screen);

    auto *fit = app.add_subcommand("fit", "Fixed-effects logit for one layer");
    fit->add_option("--topic", o.topic, "Topic (default: first)");
    fit->add_option("--layer", o.estimate_layers, "Layer")->required();
    fit->add_option("--design-out", o.design_out, "Write the design matrix as CSV");
    fit->add_flag("--drop-collinear", o.drop_collinear, "Drop collinear columns instead of failing");
    pathway_flags(fit);
    commands.emplace_back(fit, cli::fit);

    auto *reduce = app.add_subcommand("reduce", "Counterfactual reduction per layer and the torque regression");
    reduce->add_option("--topic", o.topic, "Topic (default: first)");
    reduce->add_option("--layer", o.estimate_layers, "Layers (default: all)")->delimiter(',');
    reduce->add_option("--bootstrap", o.bootstrap, "Bootstrap replicates")->check(CLI::NonNegativeNumber);
    reduce->add_option("--ci", o.ci, "Confidence level")->check(CLI::Range(0.0, 1.0));
    pathway_flags(reduce);
    commands.emplace_back(reduce, cli::reduce);

    auto *simulate = app.add_subcommand("simulate", "Write a synthetic dataset");
    simulate->add_option("--config", o.config, "Scenario file");
    commands.emplace_back(simulate, cli::simulate);

    auto *experiment = app.add_subcommand("experiment", "Simulate, estimate and report per-layer reductions");
    experiment->add_option("--config", o.config, "Scenario file");
    commands.emplace_back(experiment, cli::experiment);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        for (const auto &[sub, handler] : commands)
            if (sub->parsed()) {
                cli::emit(o, handler(o, err), out);
                return 0;
            }
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    err << app.help();
    return 2;
}

} // namespace mtorque
