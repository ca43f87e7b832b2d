#pragma once

#include <mtorque/critical_pathways.hpp>
#include <mtorque/format.hpp>
#include <mtorque/logit.hpp>
#include <mtorque/panel.hpp>
#include <mtorque/parallel.hpp>
#include <mtorque/random.hpp>

#include <json.hpp>

#include <algorithm>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mtorque {

/// Exposure records of one configuration: [village][node].
using VillageExposure = std::vector<std::vector<ExposureRecord>>;

/// Exposure for every config and village: result[c][village][node].
inline std::vector<VillageExposure> compute_exposure(const Dataset &data, std::size_t topic,
                                                     std::span<const PathwayConfig> configs, unsigned threads = 1) {
    std::vector<VillageExposure> out(configs.size(), VillageExposure(data.villages.size()));
    for (std::size_t v = 0; v < data.villages.size(); ++v) {
        const Village &village = data.villages[v];
        auto tables = exposure_by_layer(village.network, village.panel, configs, topic, threads);
        for (std::size_t c = 0; c < configs.size(); ++c)
            out[c][v] = std::move(tables[c]);
    }
    return out;
}

/// Whether the exposure regressors split by layer or pool every pathway.
enum class ExposureSplit { by_layer, total };

namespace column {
inline constexpr Eigen::Index intercept = 0;
inline constexpr Eigen::Index k_w1 = 1;
inline constexpr Eigen::Index xi_layer = 2; ///< pooled exposure under ExposureSplit::total
} // namespace column

/// Regression design for one topic and exposure configuration. Village
/// fixed effects are carried as groups; group 0 is the reference village.
struct Design {
    std::string topic;
    std::string layer_name; ///< empty for pooled exposure
    PathwayConfig pathway;
    ExposureSplit split = ExposureSplit::by_layer;
    std::vector<std::string> columns;
    std::vector<std::string> villages; ///< names by group id
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<int> group;
    std::vector<std::string> node_names;
    std::size_t dropped_rows = 0;

    Eigen::Index rows() const noexcept { return x.rows(); }

    LogitProblem problem() const {
        LogitProblem p;
        p.x = x;
        p.y = y;
        p.group = group;
        p.group_count = static_cast<int>(villages.size()) - 1;
        p.names = columns;
        for (std::size_t g = 1; g < villages.size(); ++g)
            p.names.push_back("village[" + villages[g] + "]");
        return p;
    }
};

inline const std::vector<std::string> &covariate_names() {
    static const std::vector<std::string> names{"treated", "sociability", "age",   "gender",
                                                "education", "income",   "self_health"};
    return names;
}

/// Builds the design with listwise deletion: rows missing the outcome,
/// baseline knowledge or any covariate are dropped and counted.
inline Design build_design(const Dataset &data, std::size_t topic, const PathwayConfig &pathway,
                           const VillageExposure &exposure, ExposureSplit split = ExposureSplit::by_layer) {
    if (topic >= data.topics.size())
        throw DataError("topic index out of range");
    if (exposure.size() != data.villages.size())
        throw DataError("exposure table does not cover every village");

    Design d;
    d.topic = data.topics[topic];
    d.pathway = pathway;
    d.split = split;
    if (split == ExposureSplit::by_layer)
        d.layer_name = data.layers.name(pathway.layer);
    d.columns = {"intercept", "k_w1"};
    if (split == ExposureSplit::by_layer) {
        d.columns.push_back("xi_L");
        d.columns.push_back("xi_notL");
    } else {
        d.columns.push_back("xi_total");
    }
    d.columns.push_back("N_k");
    for (const auto &c : covariate_names())
        d.columns.push_back(c);
    const auto p = static_cast<Eigen::Index>(d.columns.size());

    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> row_village;
    for (std::size_t v = 0; v < data.villages.size(); ++v) {
        const Village &village = data.villages[v];
        const std::size_t n = village.network.node_count();
        if (exposure[v].size() != n)
            throw DataError("exposure table of village '" + village.name + "' has the wrong size");
        for (NodeId node = 0; node < n; ++node) {
            if (!village.panel.covers(node)) {
                ++d.dropped_rows;
                continue;
            }
            const Person &person = village.panel.at(node);
            const TopicRecord &rec = person.topics.at(topic);
            const std::optional<double> covariates[] = {rec.treated ? 1.0 : 0.0, person.sociability,
                                                        person.age,              person.gender,
                                                        person.education,        person.income,
                                                        person.self_health};
            bool complete = rec.k_w1 && rec.k_w3;
            for (const auto &c : covariates)
                complete = complete && c.has_value();
            if (!complete) {
                ++d.dropped_rows;
                continue;
            }
            const ExposureRecord &e = exposure[v][node];
            std::vector<double> row{1.0, static_cast<double>(*rec.k_w1)};
            if (split == ExposureSplit::by_layer) {
                row.push_back(e.xi_layer);
                row.push_back(e.xi_other);
            } else {
                row.push_back(e.xi_layer + e.xi_other);
            }
            row.push_back(e.alters);
            for (const auto &c : covariates)
                row.push_back(*c);
            row.push_back(static_cast<double>(*rec.k_w3));
            rows.push_back(std::move(row));
            row_village.push_back(v);
            d.node_names.push_back(village.ids.size() > node ? village.ids.name(node) : std::to_string(node));
        }
    }

    std::vector<int> group_of(data.villages.size(), -1);
    for (auto v : row_village)
        if (group_of[v] < 0) {
            group_of[v] = static_cast<int>(d.villages.size());
            d.villages.push_back(data.villages[v].name);
        }

    const auto n = static_cast<Eigen::Index>(rows.size());
    d.x.resize(n, p);
    d.y.resize(n);
    d.group.resize(rows.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto &row = rows[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < p; ++c)
            d.x(i, c) = row[static_cast<std::size_t>(c)];
        d.y(i) = row.back();
        d.group[static_cast<std::size_t>(i)] = group_of[row_village[static_cast<std::size_t>(i)]];
    }
    return d;
}

struct ContagionModel {
    Design design;
    LogitFit fit;

    double coefficient(const std::string &name) const {
        for (std::size_t i = 0; i < fit.names.size(); ++i)
            if (fit.names[i] == name)
                return fit.coef(static_cast<Eigen::Index>(i));
        throw std::out_of_range("no coefficient named '" + name + "'");
    }
};

inline void check_estimable(const Design &d) {
    if (d.villages.size() < 2)
        throw ValidationError("the model needs at least two villages with complete rows");
    const double ones = d.y.sum();
    if (ones == 0.0 || ones == static_cast<double>(d.rows()))
        throw ValidationError("the outcome has a single class");
}

inline ContagionModel fit_contagion(Design design, const LogitOptions &options = {}) {
    check_estimable(design);
    ContagionModel m;
    m.fit = fit_logit(design.problem(), options);
    m.design = std::move(design);
    return m;
}

/// Linear predictor of design row i under the model's coefficients.
inline double linear_predictor(const ContagionModel &m, const Design &d, Eigen::Index i,
                               const std::vector<int> &group_map) {
    const auto p = static_cast<Eigen::Index>(m.fit.global_count);
    double eta = d.x.row(i).dot(m.fit.coef.head(p));
    const int g = group_map[static_cast<std::size_t>(d.group[static_cast<std::size_t>(i)])];
    if (g > 0)
        eta += m.fit.coef(p + g - 1);
    return eta;
}

/// Model group id for each group of `d`, matched by village name.
inline std::vector<int> match_villages(const ContagionModel &m, const Design &d) {
    if (d.columns != m.design.columns)
        throw PredictionError("rows do not carry the regressors of the model");
    std::vector<int> map;
    for (const auto &name : d.villages) {
        auto it = std::find(m.design.villages.begin(), m.design.villages.end(), name);
        if (it == m.design.villages.end())
            throw PredictionError("village '" + name + "' was not seen when fitting");
        map.push_back(static_cast<int>(it - m.design.villages.begin()));
    }
    return map;
}

inline std::vector<double> predict(const ContagionModel &m, const Design &rows) {
    auto map = match_villages(m, rows);
    std::vector<double> out(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        out[static_cast<std::size_t>(i)] = inverse_logit(linear_predictor(m, rows, i, map));
    return out;
}

struct ReductionOptions {
    int bootstrap = 1000;
    double level = 0.95;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct ReductionEstimate {
    std::string layer;
    int k = 0;
    double reduction = 0.0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    double level = 0.95;
    std::size_t individuals = 0;
    int replicates = 0;
    int failed_replicates = 0;
};

namespace detail {

// Weighted mean drop in predicted probability from zeroing xi_L.
inline double mean_reduction(const Eigen::MatrixXd &x, const std::vector<int> &group, const Eigen::VectorXd &w,
                             const Eigen::VectorXd &coef, std::size_t p) {
    double total = 0.0, mass = 0.0;
    const double beta = coef(column::xi_layer);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (w(i) == 0.0)
            continue;
        double eta = x.row(i).dot(coef.head(static_cast<Eigen::Index>(p)));
        const int g = group[static_cast<std::size_t>(i)];
        if (g > 0)
            eta += coef(static_cast<Eigen::Index>(p) + g - 1);
        const double cf = eta - beta * x(i, column::xi_layer);
        total += w(i) * (inverse_logit(eta) - inverse_logit(cf));
        mass += w(i);
    }
    return mass > 0 ? total / mass : 0.0;
}

/// Sample quantile with linear interpolation between order statistics.
inline double quantile_sorted(const std::vector<double> &sorted, double q) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace detail

/// Average drop in predicted adoption when the layer's critical-pathway
/// exposure is set to zero, with a village-level bootstrap percentile
/// interval. Each replicate draws villages with replacement and refits.
inline ReductionEstimate counterfactual_reduction(const ContagionModel &m, const ReductionOptions &opt = {}) {
    const Design &d = m.design;
    if (d.split != ExposureSplit::by_layer)
        throw std::invalid_argument("counterfactual reduction needs a layer-split design");
    if (opt.level <= 0.0 || opt.level >= 1.0)
        throw std::invalid_argument("confidence level must lie in (0, 1)");
    const auto all_groups = match_villages(m, d);
    ReductionEstimate est;
    est.layer = d.layer_name;
    est.k = d.pathway.k;
    est.level = opt.level;
    est.individuals = static_cast<std::size_t>(d.rows());
    std::vector<int> model_group(d.group.size());
    for (std::size_t i = 0; i < d.group.size(); ++i)
        model_group[i] = all_groups[static_cast<std::size_t>(d.group[i])];
    est.reduction = detail::mean_reduction(d.x, model_group, Eigen::VectorXd::Ones(d.rows()), m.fit.coef,
                                           m.fit.global_count);
    if (opt.bootstrap <= 0)
        return est;

    const std::size_t villages = d.villages.size();
    std::vector<std::vector<Eigen::Index>> members(villages);
    for (Eigen::Index i = 0; i < d.rows(); ++i)
        members[static_cast<std::size_t>(d.group[static_cast<std::size_t>(i)])].push_back(i);
    const LogitProblem full = d.problem();

    const bool constant_zero = d.x.col(column::xi_layer).isZero(0.0);
    std::vector<std::optional<double>> draws(static_cast<std::size_t>(opt.bootstrap));
    parallel_for(draws.size(), opt.threads, [&](std::size_t b) {
        if (constant_zero) {
            draws[b] = 0.0;
            return;
        }
        Rng rng = make_rng(opt.seed, {b});
        std::vector<int> multiplicity(villages, 0);
        for (std::size_t s = 0; s < villages; ++s)
            ++multiplicity[uniform_index(rng, villages)];
        LogitProblem rep;
        std::size_t rows = 0;
        for (std::size_t g = 0; g < villages; ++g)
            if (multiplicity[g] > 0)
                rows += members[g].size();
        rep.x.resize(static_cast<Eigen::Index>(rows), full.x.cols());
        rep.y.resize(static_cast<Eigen::Index>(rows));
        rep.weight.resize(static_cast<Eigen::Index>(rows));
        rep.group.reserve(rows);
        Eigen::Index r = 0;
        for (std::size_t g = 0; g < villages; ++g)
            for (Eigen::Index i : multiplicity[g] > 0 ? members[g] : std::vector<Eigen::Index>{}) {
                rep.x.row(r) = full.x.row(i);
                rep.y(r) = full.y(i);
                rep.weight(r) = multiplicity[g];
                rep.group.push_back(full.group[static_cast<std::size_t>(i)]);
                ++r;
            }
        rep.group_count = full.group_count;
        rep.names = full.names;
        LogitOptions lo;
        lo.drop_collinear = true;
        lo.compute_covariance = false;
        lo.start = m.fit.coef;
        try {
            auto fit = fit_logit(rep, lo);
            if (!fit.converged)
                return;
            draws[b] = detail::mean_reduction(rep.x, rep.group, rep.weight, fit.coef, fit.global_count);
        } catch (const SeparationError &) {
        }
    });

    std::vector<double> values;
    for (const auto &v : draws) {
        if (v)
            values.push_back(*v);
        else
            ++est.failed_replicates;
    }
    est.replicates = static_cast<int>(values.size());
    if (values.empty())
        return est;
    std::sort(values.begin(), values.end());
    const double tail = (1.0 - opt.level) / 2.0;
    est.ci_low = std::min(detail::quantile_sorted(values, tail), est.reduction);
    est.ci_high = std::max(detail::quantile_sorted(values, 1.0 - tail), est.reduction);
    return est;
}

struct ScreenRow {
    std::string topic;
    int k = 0;
    double coefficient = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    double p_value = 1.0;
};

struct ScreenResult {
    std::vector<ScreenRow> rows;
    std::vector<std::string> passing; ///< topics significant at every k
};

/// Fits the pooled-exposure model for each topic and k and reports the Wald
/// test of the exposure coefficient. A topic passes when p < alpha at
/// every k.
inline ScreenResult contagion_screen(const Dataset &data, const std::vector<std::string> &topics,
                                     const std::vector<int> &ks, PathwayConfig base, double alpha = 0.05,
                                     unsigned threads = 1) {
    ScreenResult out;
    for (const auto &topic : topics) {
        const std::size_t t = data.topic_index(topic);
        bool passes = !ks.empty();
        for (int k : ks) {
            base.k = k;
            auto exposure = compute_exposure(data, t, std::span(&base, 1), threads);
            auto model = fit_contagion(build_design(data, t, base, exposure.front(), ExposureSplit::total));
            ScreenRow row;
            row.topic = topic;
            row.k = k;
            row.coefficient = model.fit.coef(column::xi_layer);
            row.std_error = model.fit.std_error(column::xi_layer);
            row.z = row.coefficient / row.std_error;
            row.p_value = normal_two_sided_p(row.z);
            passes = passes && row.p_value < alpha;
            out.rows.push_back(row);
        }
        if (passes)
            out.passing.push_back(topic);
    }
    return out;
}

inline nlohmann::ordered_json to_json(const ContagionModel &m) {
    using nlohmann::ordered_json;
    const Design &d = m.design;
    ordered_json j;
    j["schema_version"] = 1;
    j["topic"] = d.topic;
    if (d.split == ExposureSplit::by_layer)
        j["layer"] = d.layer_name;
    j["k"] = d.pathway.k;
    j["mode"] = to_string(d.pathway.mode);
    j["direction"] = to_string(d.pathway.direction);
    j["rows_used"] = d.rows();
    j["rows_dropped"] = d.dropped_rows;
    j["villages"] = d.villages.size();
    j["reference_village"] = d.villages.empty() ? "" : d.villages.front();
    ordered_json coefs = ordered_json::array();
    for (std::size_t i = 0; i < m.fit.names.size(); ++i) {
        ordered_json c;
        c["name"] = m.fit.names[i];
        c["estimate"] = m.fit.coef(static_cast<Eigen::Index>(i));
        const double se = m.fit.std_error(i);
        if (std::isfinite(se)) {
            c["std_error"] = se;
            c["z"] = m.fit.coef(static_cast<Eigen::Index>(i)) / se;
            c["p_value"] = normal_two_sided_p(m.fit.coef(static_cast<Eigen::Index>(i)) / se);
        } else {
            c["std_error"] = nullptr;
        }
        c["fixed"] = static_cast<bool>(m.fit.fixed[i]);
        coefs.push_back(c);
    }
    j["coefficients"] = coefs;
    j["dropped_columns"] = m.fit.dropped;
    j["log_likelihood"] = m.fit.log_likelihood;
    j["null_log_likelihood"] = m.fit.null_log_likelihood;
    j["iterations"] = m.fit.iterations;
    j["converged"] = m.fit.converged;
    j["gradient_max_norm"] = m.fit.gradient_max_norm;
    return j;
}

inline nlohmann::ordered_json to_json(const ReductionEstimate &r) {
    nlohmann::ordered_json j;
    j["layer"] = r.layer;
    j["k"] = r.k;
    j["reduction"] = r.reduction;
    j["ci_low"] = r.ci_low ? nlohmann::ordered_json(*r.ci_low) : nlohmann::ordered_json(nullptr);
    j["ci_high"] = r.ci_high ? nlohmann::ordered_json(*r.ci_high) : nlohmann::ordered_json(nullptr);
    j["level"] = r.level;
    j["individuals"] = r.individuals;
    j["replicates"] = r.replicates;
    j["failed_replicates"] = r.failed_replicates;
    return j;
}

/// Writes the regression design (one row per individual, outcome first,
/// village indicators last) as CSV for external audit.
inline void write_design_csv(std::ostream &out, const Design &d) {
    out << "village,node,k_w3";
    for (const auto &c : d.columns)
        out << ',' << c;
    for (std::size_t g = 1; g < d.villages.size(); ++g)
        out << ",village[" << d.villages[g] << ']';
    out << '\n';
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        const int g = d.group[static_cast<std::size_t>(i)];
        out << d.villages[static_cast<std::size_t>(g)] << ',' << d.node_names[static_cast<std::size_t>(i)] << ','
            << d.y(i);
        for (Eigen::Index c = 0; c < d.x.cols(); ++c)
            out << ',' << shortest(d.x(i, c));
        for (std::size_t v = 1; v < d.villages.size(); ++v)
            out << ',' << (static_cast<std::size_t>(g) == v ? 1 : 0);
        out << '\n';
    }
}

} // namespace mtorque
