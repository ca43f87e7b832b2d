#pragma once

#include <mtorque/error.hpp>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace mtorque {

/// Weighted logistic regression with optional fixed effects for groups.
///
/// The linear predictor of row i is x_i' beta + alpha[group_i], where group
/// 0 is the reference (alpha = 0) and groups 1..group_count each carry an
/// indicator regressor. The indicators are never materialized: the Newton
/// system is solved through its block structure, so the cost per iteration
/// is linear in the number of groups.
struct LogitProblem {
    Eigen::MatrixXd x;               ///< n x p global regressors
    Eigen::VectorXd y;               ///< 0/1 outcomes
    std::vector<int> group;          ///< per row, 0..group_count; empty means no groups
    int group_count = 0;             ///< non-reference groups
    Eigen::VectorXd weight;          ///< per-row weights; empty means all 1
    std::vector<std::string> names;  ///< p + group_count coefficient names
    bool has_intercept = true;       ///< column 0 of x is the constant 1
};

struct LogitOptions {
    double loglik_tolerance = 1e-10;
    double gradient_tolerance = 1e-8;
    int max_iterations = 100;
    double separation_bound = 30.0;
    /// Fix collinear columns at zero instead of raising CollinearityError.
    bool drop_collinear = false;
    bool compute_covariance = true;
    /// Starting coefficients (size p + group_count); zero when empty.
    Eigen::VectorXd start;
};

struct LogitFit {
    Eigen::VectorXd coef;        ///< p + group_count
    Eigen::MatrixXd covariance;  ///< inverse information; empty if not requested
    std::vector<std::string> names;
    std::vector<std::string> dropped; ///< columns fixed at zero
    std::vector<char> fixed;          ///< per coefficient: held at zero
    double log_likelihood = 0.0;
    double null_log_likelihood = 0.0;
    double gradient_max_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> loglik_trace;

    std::size_t global_count = 0;     ///< p; the rest of coef are group effects

    double std_error(std::size_t i) const {
        if (covariance.size() == 0 || fixed[i])
            return std::numeric_limits<double>::quiet_NaN();
        return std::sqrt(covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    }
};

inline double inverse_logit(double eta) {
    if (eta >= 0)
        return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

/// log(1 + exp(eta)) without overflow.
inline double softplus(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

/// Two-sided p-value of a standard normal statistic.
inline double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

namespace detail {

/// Indices of columns that are linear combinations of the others once the
/// intercept and group indicators are accounted for.
inline std::vector<Eigen::Index> collinear_columns(const LogitProblem &prob, const Eigen::VectorXd &w) {
    const Eigen::Index n = prob.x.rows(), p = prob.x.cols();
    const bool grouped = !prob.group.empty();
    Eigen::Index first = prob.has_intercept ? 1 : 0;
    Eigen::MatrixXd m = prob.x.rightCols(p - first);
    if (grouped || prob.has_intercept) {
        // Project out the span of the group indicators (or the constant).
        const int groups = grouped ? prob.group_count + 1 : 1;
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(groups, m.cols());
        Eigen::VectorXd mass = Eigen::VectorXd::Zero(groups);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int g = grouped ? prob.group[static_cast<std::size_t>(i)] : 0;
            sums.row(g) += w(i) * m.row(i);
            mass(g) += w(i);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const int g = grouped ? prob.group[static_cast<std::size_t>(i)] : 0;
            if (mass(g) > 0)
                m.row(i) -= sums.row(g) / mass(g);
        }
    }
    for (Eigen::Index i = 0; i < n; ++i)
        m.row(i) *= std::sqrt(w(i));
    std::vector<Eigen::Index> out;
    Eigen::VectorXd norms = Eigen::VectorXd::Zero(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double raw = std::sqrt((prob.x.col(c + first).array().square() * w.array()).sum());
        norms(c) = m.col(c).norm();
        if (norms(c) <= 1e-10 * std::max(raw, 1.0)) {
            out.push_back(c + first);
            m.col(c).setZero();
        } else {
            m.col(c) /= norms(c);
        }
    }
    if (m.cols() > 0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
        qr.setThreshold(1e-9);
        const Eigen::Index rank = qr.rank();
        const auto &perm = qr.colsPermutation().indices();
        for (Eigen::Index r = rank; r < m.cols(); ++r) {
            const Eigen::Index c = perm(r) + first;
            if (std::find(out.begin(), out.end(), c) == out.end())
                out.push_back(c);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct NewtonState {
    double loglik = 0.0;
    Eigen::VectorXd grad_beta, grad_alpha;
    Eigen::MatrixXd a, b;   // information blocks: A = X'WX, B = X'W D
    Eigen::VectorXd d;      // diagonal block for the free group effects
};

} // namespace detail

/// Maximum-likelihood fit by Newton-Raphson (IRLS) with step halving.
/// Converges when the log-likelihood changes by less than loglik_tolerance
/// and the max-norm of the score is below gradient_tolerance.
inline LogitFit fit_logit(const LogitProblem &prob, const LogitOptions &opt = {}) {
    const Eigen::Index n = prob.x.rows(), p = prob.x.cols();
    const bool grouped = !prob.group.empty();
    const int G = grouped ? prob.group_count : 0;
    if (prob.y.size() != n)
        throw std::invalid_argument("fit_logit: outcome length mismatch");
    if (grouped && static_cast<Eigen::Index>(prob.group.size()) != n)
        throw std::invalid_argument("fit_logit: group vector length mismatch");
    if (static_cast<Eigen::Index>(prob.names.size()) != p + G)
        throw std::invalid_argument("fit_logit: expected one name per coefficient");
    const Eigen::VectorXd w = prob.weight.size() == 0 ? Eigen::VectorXd::Ones(n) : prob.weight;
    if (w.size() != n)
        throw std::invalid_argument("fit_logit: weight length mismatch");

    // Groups with no mass keep alpha = 0. If the reference group is empty
    // the first populated group takes its place.
    std::vector<double> group_mass(static_cast<std::size_t>(G) + 1, 0.0);
    if (grouped)
        for (Eigen::Index i = 0; i < n; ++i) {
            const int g = prob.group[static_cast<std::size_t>(i)];
            if (g < 0 || g > G)
                throw std::invalid_argument("fit_logit: group id out of range");
            group_mass[static_cast<std::size_t>(g)] += w(i);
        }
    std::vector<char> group_present(static_cast<std::size_t>(G) + 1, 0);
    for (int g = 0; g <= G; ++g)
        group_present[static_cast<std::size_t>(g)] = group_mass[static_cast<std::size_t>(g)] > 0;
    int reference = 0;
    if (grouped && !group_present[0])
        for (int g = 1; g <= G; ++g)
            if (group_present[static_cast<std::size_t>(g)]) {
                reference = g;
                break;
            }

    LogitFit fit;
    fit.names = prob.names;
    fit.global_count = static_cast<std::size_t>(p);
    fit.fixed.assign(static_cast<std::size_t>(p + G), 0);
    for (int g = 1; g <= G; ++g)
        if (!group_present[static_cast<std::size_t>(g)] || g == reference)
            fit.fixed[static_cast<std::size_t>(p + g - 1)] = 1;

    auto collinear = detail::collinear_columns(prob, w);
    if (!collinear.empty()) {
        std::string list;
        for (auto c : collinear) {
            if (!list.empty())
                list += ", ";
            list += prob.names[static_cast<std::size_t>(c)];
        }
        if (!opt.drop_collinear)
            throw CollinearityError("singular design; collinear columns would be dropped: " + list);
        for (auto c : collinear) {
            fit.fixed[static_cast<std::size_t>(c)] = 1;
            fit.dropped.push_back(prob.names[static_cast<std::size_t>(c)]);
        }
    }

    // Free parameters: kept global columns, then free group effects.
    std::vector<Eigen::Index> kept;
    for (Eigen::Index c = 0; c < p; ++c)
        if (!fit.fixed[static_cast<std::size_t>(c)])
            kept.push_back(c);
    std::vector<int> free_slot(static_cast<std::size_t>(G) + 1, -1);
    std::vector<int> free_groups;
    for (int g = 1; g <= G; ++g)
        if (!fit.fixed[static_cast<std::size_t>(p + g - 1)]) {
            free_slot[static_cast<std::size_t>(g)] = static_cast<int>(free_groups.size());
            free_groups.push_back(g);
        }
    const Eigen::Index q = static_cast<Eigen::Index>(kept.size());
    const Eigen::Index h = static_cast<Eigen::Index>(free_groups.size());

    Eigen::MatrixXd xf(n, q);
    for (Eigen::Index c = 0; c < q; ++c)
        xf.col(c) = prob.x.col(kept[static_cast<std::size_t>(c)]);
    std::vector<int> row_slot(static_cast<std::size_t>(n), -1);
    if (grouped)
        for (Eigen::Index i = 0; i < n; ++i)
            row_slot[static_cast<std::size_t>(i)] = free_slot[static_cast<std::size_t>(prob.group[static_cast<std::size_t>(i)])];

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(q), alpha = Eigen::VectorXd::Zero(h);
    if (opt.start.size() == p + G) {
        // Re-express the start relative to the effective reference group.
        const double shift = (grouped && reference > 0) ? opt.start(p + reference - 1) : 0.0;
        for (Eigen::Index c = 0; c < q; ++c)
            beta(c) = opt.start(kept[static_cast<std::size_t>(c)]);
        if (prob.has_intercept && !fit.fixed[0])
            beta(0) += shift;
        for (Eigen::Index s = 0; s < h; ++s)
            alpha(s) = opt.start(p + free_groups[static_cast<std::size_t>(s)] - 1) - shift;
    }

    Eigen::VectorXd eta(n), mu(n), wv(n);
    auto linear_predictor = [&](const Eigen::VectorXd &bt, const Eigen::VectorXd &al, Eigen::VectorXd &out) {
        out.noalias() = xf * bt;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int s = row_slot[static_cast<std::size_t>(i)];
            if (s >= 0)
                out(i) += al(s);
        }
    };
    auto loglik_of = [&](const Eigen::VectorXd &e) {
        double ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (w(i) != 0.0)
                ll += w(i) * (prob.y(i) * e(i) - softplus(e(i)));
        return ll;
    };

    detail::NewtonState st;
    auto evaluate = [&](const Eigen::VectorXd &bt, const Eigen::VectorXd &al) {
        linear_predictor(bt, al, eta);
        st.loglik = loglik_of(eta);
        Eigen::VectorXd resid(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mu(i) = inverse_logit(eta(i));
            resid(i) = w(i) * (prob.y(i) - mu(i));
            wv(i) = w(i) * mu(i) * (1.0 - mu(i));
        }
        st.grad_beta.noalias() = xf.transpose() * resid;
        st.grad_alpha = Eigen::VectorXd::Zero(h);
        st.b = Eigen::MatrixXd::Zero(q, h);
        st.d = Eigen::VectorXd::Zero(h);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int s = row_slot[static_cast<std::size_t>(i)];
            if (s < 0)
                continue;
            st.grad_alpha(s) += resid(i);
            st.d(s) += wv(i);
            st.b.col(s).noalias() += wv(i) * xf.row(i).transpose();
        }
        Eigen::MatrixXd scaled = xf.array().colwise() * wv.array().sqrt();
        st.a = Eigen::MatrixXd::Zero(q, q);
        st.a.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
        st.a = st.a.selfadjointView<Eigen::Lower>();
    };
    auto grad_max = [&]() {
        double g = 0.0;
        if (q > 0)
            g = st.grad_beta.cwiseAbs().maxCoeff();
        if (h > 0)
            g = std::max(g, st.grad_alpha.cwiseAbs().maxCoeff());
        return g;
    };
    auto check_separation = [&]() {
        Eigen::Index worst = -1;
        double worst_abs = opt.separation_bound;
        for (Eigen::Index c = 0; c < q; ++c)
            if (std::abs(beta(c)) > worst_abs) {
                worst_abs = std::abs(beta(c));
                worst = kept[static_cast<std::size_t>(c)];
            }
        for (Eigen::Index s = 0; s < h; ++s)
            if (std::abs(alpha(s)) > worst_abs) {
                worst_abs = std::abs(alpha(s));
                worst = p + free_groups[static_cast<std::size_t>(s)] - 1;
            }
        if (worst >= 0)
            throw SeparationError(prob.names[static_cast<std::size_t>(worst)]);
    };

    evaluate(beta, alpha);
    fit.loglik_trace.push_back(st.loglik);
    double previous = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        if (std::abs(st.loglik - previous) < opt.loglik_tolerance && grad_max() < opt.gradient_tolerance) {
            fit.converged = true;
            break;
        }
        // Newton direction through the Schur complement of the group block.
        for (Eigen::Index s = 0; s < h; ++s)
            if (!(st.d(s) > 1e-300))
                throw SeparationError(prob.names[static_cast<std::size_t>(p + free_groups[static_cast<std::size_t>(s)] - 1)]);
        const Eigen::VectorXd dinv = st.d.cwiseInverse();
        Eigen::MatrixXd schur = st.a;
        Eigen::VectorXd rhs = st.grad_beta;
        if (h > 0) {
            schur.noalias() -= st.b * dinv.asDiagonal() * st.b.transpose();
            rhs.noalias() -= st.b * dinv.cwiseProduct(st.grad_alpha);
        }
        Eigen::VectorXd step_beta = q > 0 ? Eigen::VectorXd(schur.ldlt().solve(rhs)) : Eigen::VectorXd(0);
        Eigen::VectorXd step_alpha = Eigen::VectorXd::Zero(h);
        if (h > 0)
            step_alpha = dinv.cwiseProduct(st.grad_alpha - st.b.transpose() * step_beta);

        const double current = st.loglik;
        double scale = 1.0;
        Eigen::VectorXd trial_beta, trial_alpha;
        Eigen::VectorXd trial_eta(n);
        double trial_ll = -std::numeric_limits<double>::infinity();
        for (int halving = 0; halving < 40; ++halving) {
            trial_beta = beta + scale * step_beta;
            trial_alpha = alpha + scale * step_alpha;
            linear_predictor(trial_beta, trial_alpha, trial_eta);
            trial_ll = loglik_of(trial_eta);
            if (trial_ll >= current - 1e-12 * std::max(1.0, std::abs(current)))
                break;
            scale *= 0.5;
        }
        if (!(trial_ll >= current - 1e-12 * std::max(1.0, std::abs(current))))
            break; // no ascent possible; leave converged = false
        beta = trial_beta;
        alpha = trial_alpha;
        previous = current;
        evaluate(beta, alpha);
        fit.loglik_trace.push_back(st.loglik);
        fit.iterations = iter + 1;
        check_separation();
    }
    if (!fit.converged && std::abs(st.loglik - previous) < opt.loglik_tolerance &&
        grad_max() < opt.gradient_tolerance)
        fit.converged = true;

    fit.log_likelihood = st.loglik;
    fit.gradient_max_norm = grad_max();
    fit.coef = Eigen::VectorXd::Zero(p + G);
    for (Eigen::Index c = 0; c < q; ++c)
        fit.coef(kept[static_cast<std::size_t>(c)]) = beta(c);
    for (Eigen::Index s = 0; s < h; ++s)
        fit.coef(p + free_groups[static_cast<std::size_t>(s)] - 1) = alpha(s);

    const double total = w.sum();
    const double mean_y = total > 0 ? w.dot(prob.y) / total : 0.0;
    if (mean_y > 0.0 && mean_y < 1.0)
        fit.null_log_likelihood = total * (mean_y * std::log(mean_y) + (1.0 - mean_y) * std::log1p(-mean_y));

    if (opt.compute_covariance) {
        // Block inverse of the information matrix over the free parameters.
        Eigen::MatrixXd info(q + h, q + h);
        info.topLeftCorner(q, q) = st.a;
        info.topRightCorner(q, h) = st.b;
        info.bottomLeftCorner(h, q) = st.b.transpose();
        info.bottomRightCorner(h, h) = st.d.asDiagonal();
        Eigen::MatrixXd inv = info.ldlt().solve(Eigen::MatrixXd::Identity(q + h, q + h));
        std::vector<Eigen::Index> slot_to_coef;
        for (auto c : kept)
            slot_to_coef.push_back(c);
        for (int g : free_groups)
            slot_to_coef.push_back(p + g - 1);
        fit.covariance = Eigen::MatrixXd::Constant(p + G, p + G, std::numeric_limits<double>::quiet_NaN());
        for (Eigen::Index r = 0; r < q + h; ++r)
            for (Eigen::Index c = 0; c < q + h; ++c)
                fit.covariance(slot_to_coef[static_cast<std::size_t>(r)], slot_to_coef[static_cast<std::size_t>(c)]) =
                    inv(r, c);
    }
    return fit;
}

/// Full score vector of the log-likelihood at `coef` (p + group_count),
/// with every group indicator materialized. Used to audit fits.
inline Eigen::VectorXd logit_score(const LogitProblem &prob, const Eigen::VectorXd &coef) {
    const Eigen::Index n = prob.x.rows(), p = prob.x.cols();
    const int G = prob.group.empty() ? 0 : prob.group_count;
    const Eigen::VectorXd w = prob.weight.size() == 0 ? Eigen::VectorXd::Ones(n) : prob.weight;
    Eigen::VectorXd score = Eigen::VectorXd::Zero(p + G);
    for (Eigen::Index i = 0; i < n; ++i) {
        double eta = prob.x.row(i).dot(coef.head(p));
        const int g = G > 0 ? prob.group[static_cast<std::size_t>(i)] : 0;
        if (g > 0)
            eta += coef(p + g - 1);
        const double r = w(i) * (prob.y(i) - inverse_logit(eta));
        score.head(p) += r * prob.x.row(i).transpose();
        if (g > 0)
            score(p + g - 1) += r;
    }
    return score;
}

inline double logit_loglik(const LogitProblem &prob, const Eigen::VectorXd &coef) {
    const Eigen::Index n = prob.x.rows(), p = prob.x.cols();
    const int G = prob.group.empty() ? 0 : prob.group_count;
    const Eigen::VectorXd w = prob.weight.size() == 0 ? Eigen::VectorXd::Ones(n) : prob.weight;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double eta = prob.x.row(i).dot(coef.head(p));
        const int g = G > 0 ? prob.group[static_cast<std::size_t>(i)] : 0;
        if (g > 0)
            eta += coef(p + g - 1);
        ll += w(i) * (prob.y(i) * eta - softplus(eta));
    }
    return ll;
}

struct SimpleRegression {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
    double t = 0.0;
    double p_value = 1.0;
    std::size_t points = 0;
};

/// Ordinary least squares of y on x with a two-sided t test of the slope.
inline SimpleRegression simple_regression(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size())
        throw std::invalid_argument("simple_regression: size mismatch");
    SimpleRegression r;
    r.points = x.size();
    if (x.size() < 3)
        throw UndefinedStatisticError("regression needs at least three points");
    const double m = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0)
        throw UndefinedStatisticError("regression predictor has zero variance");
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - r.intercept - r.slope * x[i];
        rss += e * e;
    }
    const double dof = m - 2.0;
    r.slope_se = std::sqrt(rss / dof / sxx);
    if (r.slope_se == 0) {
        r.t = r.slope == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.slope);
        r.p_value = r.slope == 0 ? 1.0 : 0.0;
        return r;
    }
    r.t = r.slope / r.slope_se;
    boost::math::students_t dist(dof);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    return r;
}

} // namespace mtorque
