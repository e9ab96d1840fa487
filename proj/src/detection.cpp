#include "sentinel/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "sentinel/error.hpp"

namespace sentinel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double logistic(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow
double softplus(double eta) { return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

void check_threshold(double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ContractError("threshold must lie strictly inside (0, 1)");
}

}  // namespace

void LagLogisticSpec::validate(int maxlag) const {
    if (lag < 0) throw ContractError("lag size must be >= 0");
    if (lag > maxlag) throw ContractError("lag size " + std::to_string(lag) + " exceeds dataset maxlag " +
                                          std::to_string(maxlag));
    check_threshold(threshold);
}

LagDesign build_design(const SurveillanceDataset& data, std::span<const int> years, int lag) {
    if (lag < 0 || lag > data.maxlag)
        throw ContractError("lag size " + std::to_string(lag) + " outside [0, " + std::to_string(data.maxlag) + "]");
    LagDesign d;
    std::vector<const SurveillanceRow*> picked;
    for (int year : years) {
        const int g = static_cast<int>(d.group_years.size());
        d.group_years.push_back(year);
        for (const auto& r : data.year_rows(year)) {
            bool complete = true;
            for (int k = 0; k <= lag; ++k) complete = complete && r.lags[static_cast<std::size_t>(k)].has_value();
            if (!complete) continue;
            picked.push_back(&r);
            d.group.push_back(g);
        }
    }
    const auto n = static_cast<Eigen::Index>(picked.size());
    const Eigen::Index p = lag + 4;
    d.X.resize(n, p);
    d.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = *picked[static_cast<std::size_t>(i)];
        d.X(i, 0) = 1.0;
        for (int k = 0; k <= lag; ++k) d.X(i, k + 1) = *r.lags[static_cast<std::size_t>(k)];
        d.X(i, lag + 2) = r.sinterm;
        d.X(i, lag + 3) = r.costerm;
        d.y(i) = r.case_flag;
    }
    return d;
}

RandomInterceptLogistic::RandomInterceptLogistic(Eigen::MatrixXd X, Eigen::VectorXd y, std::vector<int> group,
                                                 int n_groups)
    : X_(std::move(X)), y_(std::move(y)), members_(static_cast<std::size_t>(n_groups)) {
    for (std::size_t i = 0; i < group.size(); ++i) members_[static_cast<std::size_t>(group[i])].push_back(static_cast<int>(i));
}

double RandomInterceptLogistic::fixed_log_likelihood(const Eigen::VectorXd& beta) const {
    const Eigen::VectorXd eta = X_ * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y_(i) * eta(i) - softplus(eta(i));
    return ll;
}

double RandomInterceptLogistic::objective(const Eigen::VectorXd& params, Eigen::VectorXd* gradient,
                                          Eigen::VectorXd* modes) const {
    const Eigen::Index p = X_.cols();
    const Eigen::VectorXd beta = params.head(p);
    const double log_s = params(p);
    const double s = std::exp(log_s);
    if (!std::isfinite(s) || s <= 0.0 || !beta.allFinite()) return kInf;

    const Eigen::VectorXd base = X_ * beta;
    if (gradient) gradient->setZero(p + 1);
    if (modes) modes->setZero(static_cast<Eigen::Index>(members_.size()));

    double total = 0.0;
    Eigen::VectorXd sum_wx(p), sum_dwx(p), score(p);
    for (std::size_t j = 0; j < members_.size(); ++j) {
        const auto& rows = members_[j];
        if (rows.empty()) continue;

        // mode of l_j(g) - g^2 / (2 s): damped Newton on a strictly concave function
        auto log_post = [&](double g) {
            double v = -g * g / (2.0 * s);
            for (int i : rows) v += y_(i) * (base(i) + g) - softplus(base(i) + g);
            return v;
        };
        double g = 0.0;
        double current = log_post(g);
        for (int it = 0; it < 100; ++it) {
            double d1 = -g / s, d2 = -1.0 / s;
            for (int i : rows) {
                const double mu = logistic(base(i) + g);
                d1 += y_(i) - mu;
                d2 -= mu * (1.0 - mu);
            }
            double step = -d1 / d2;
            double candidate = g + step, value = log_post(candidate);
            // near the mode the objective is flat to rounding, so only damp real decreases
            const double slack = 1e-12 * (1.0 + std::fabs(current));
            int halvings = 0;
            while (!(value >= current - slack) && halvings < 60) {
                step *= 0.5;
                candidate = g + step;
                value = log_post(candidate);
                ++halvings;
            }
            if (!(value >= current - slack)) break;
            g = candidate;
            current = value;
            if (std::fabs(step) <= 1e-13 * (1.0 + std::fabs(g))) break;
        }

        double W = 0.0, sum_dw = 0.0;
        sum_wx.setZero();
        sum_dwx.setZero();
        score.setZero();
        double ll = 0.0;
        for (int i : rows) {
            const double eta = base(i) + g;
            const double mu = logistic(eta);
            const double w = mu * (1.0 - mu);
            const double dw = w * (1.0 - 2.0 * mu);
            ll += y_(i) * eta - softplus(eta);
            W += w;
            sum_dw += dw;
            if (gradient) {
                const auto xi = X_.row(i).transpose();
                sum_wx.noalias() += w * xi;
                sum_dwx.noalias() += dw * xi;
                score.noalias() += (y_(i) - mu) * xi;
            }
        }
        const double D = 1.0 + s * W;
        total += ll - g * g / (2.0 * s) - 0.5 * std::log(D);
        if (modes) (*modes)(static_cast<Eigen::Index>(j)) = g;

        if (gradient) {
            // implicit derivatives of the mode
            const Eigen::VectorXd dg_dbeta = -s * sum_wx / D;
            const double dg_ds = g / (s * D);
            const Eigen::VectorXd dW_dbeta = sum_dwx + sum_dw * dg_dbeta;
            const double dW_ds = sum_dw * dg_ds;
            gradient->head(p) += score - (s / (2.0 * D)) * dW_dbeta;
            const double d_ds = g * g / (2.0 * s * s) - (W + s * dW_ds) / (2.0 * D);
            (*gradient)(p) += s * d_ds;
        }
    }
    if (gradient) *gradient = -*gradient;
    return std::isfinite(total) ? -total : kInf;
}

LogisticFit fit_logistic_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ridge, int max_iterations) {
    const Eigen::Index n = X.rows(), p = X.cols();
    LogisticFit out;
    out.beta = Eigen::VectorXd::Zero(p);
    if (n == 0) throw EvaluationError("logistic fit on an empty design");

    auto penalized = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd eta = X * b;
        double ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) ll += y(i) * eta(i) - softplus(eta(i));
        return ll - 0.5 * ridge * b.squaredNorm();
    };

    Eigen::MatrixXd info(p, p);
    double current = penalized(out.beta);
    for (int it = 1; it <= max_iterations; ++it) {
        out.iterations = it;
        const Eigen::VectorXd eta = X * out.beta;
        Eigen::VectorXd w(n), resid(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mu = logistic(eta(i));
            w(i) = mu * (1.0 - mu);
            resid(i) = y(i) - mu;
        }
        info.noalias() = X.transpose() * w.asDiagonal() * X;
        info.diagonal().array() += ridge;
        const Eigen::VectorXd grad = X.transpose() * resid - ridge * out.beta;
        Eigen::VectorXd step = info.ldlt().solve(grad);
        if (!step.allFinite()) break;

        Eigen::VectorXd candidate = out.beta + step;
        double value = penalized(candidate);
        int halvings = 0;
        while (!(value >= current - 1e-12 * std::fabs(current)) && halvings < 40) {
            step *= 0.5;
            candidate = out.beta + step;
            value = penalized(candidate);
            ++halvings;
        }
        out.beta = candidate;
        const double change = std::fabs(value - current);
        current = value;
        if (step.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + out.beta.lpNorm<Eigen::Infinity>()) ||
            change <= 1e-14 * (1.0 + std::fabs(current))) {
            out.converged = true;
            break;
        }
    }

    const Eigen::VectorXd eta = X * out.beta;
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = logistic(eta(i));
        w(i) = mu * (1.0 - mu);
    }
    info.noalias() = X.transpose() * w.asDiagonal() * X;
    info.diagonal().array() += ridge;
    out.covariance = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    out.log_likelihood = current + 0.5 * ridge * out.beta.squaredNorm();

    const bool constant_response = (y.array() == y(0)).all();
    const bool saturated = eta.lpNorm<Eigen::Infinity>() > 30.0;
    out.separated = constant_response || saturated || !out.converged;
    return out;
}

namespace {

ModelFit fixed_effects_result(int lag, const LogisticFit& lf, const LagDesign& d, bool ridge) {
    ModelFit fit;
    fit.lag = lag;
    fit.beta.assign(lf.beta.data(), lf.beta.data() + lf.beta.size());
    for (Eigen::Index k = 0; k < lf.beta.size(); ++k) fit.std_errors.push_back(std::sqrt(std::max(0.0, lf.covariance(k, k))));
    fit.tau_sq = 0.0;
    fit.years = d.group_years;
    fit.gamma.assign(d.group_years.size(), 0.0);
    fit.log_likelihood = lf.log_likelihood;
    fit.converged = lf.converged;
    fit.iterations = lf.iterations;
    fit.random_effect = false;
    fit.ridge = ridge;
    return fit;
}

struct BfgsResult {
    Eigen::VectorXd x;
    double value = kInf;
    int iterations = 0;
    bool converged = false;
};

BfgsResult minimize_bfgs(const RandomInterceptLogistic& model, Eigen::VectorXd x, Eigen::MatrixXd inv_hessian,
                         const FitOptions& options) {
    BfgsResult r;
    Eigen::VectorXd g;
    double f = model.objective(x, &g);
    if (!std::isfinite(f)) return r;
    const Eigen::MatrixXd initial_inverse = inv_hessian;
    bool was_reset = false;

    for (int it = 1; it <= options.max_iterations; ++it) {
        r.iterations = it;
        Eigen::VectorXd direction = -inv_hessian * g;
        double slope = g.dot(direction);
        if (!(slope < 0.0)) {
            inv_hessian = initial_inverse;
            direction = -inv_hessian * g;
            slope = g.dot(direction);
        }

        double step = 1.0, f_new = kInf;
        Eigen::VectorXd x_new, g_new;
        bool accepted = false;
        for (int k = 0; k < 50; ++k) {
            x_new = x + step * direction;
            f_new = model.objective(x_new, &g_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!was_reset) {
                inv_hessian = initial_inverse;
                was_reset = true;
                continue;
            }
            // no descent left at working precision
            r.converged = true;
            break;
        }
        was_reset = false;

        const double change = f - f_new;
        const Eigen::VectorXd sk = x_new - x;
        const Eigen::VectorXd yk = g_new - g;
        x = std::move(x_new);
        g = std::move(g_new);
        f = f_new;

        if (change <= options.tolerance * std::max(1.0, std::fabs(f))) {
            r.converged = true;
            break;
        }
        const double sy = sk.dot(yk);
        if (sy > 1e-12 * sk.norm() * yk.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::VectorXd hy = inv_hessian * yk;
            inv_hessian += ((sy + yk.dot(hy)) * rho * rho) * (sk * sk.transpose()) -
                           rho * (hy * sk.transpose() + sk * hy.transpose());
        }
    }
    r.x = x;
    r.value = f;
    return r;
}

Eigen::MatrixXd numeric_hessian(const RandomInterceptLogistic& model, const Eigen::VectorXd& x) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd H(n, n);
    Eigen::VectorXd gp, gm;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double h = 1e-5 * std::max(1.0, std::fabs(x(k)));
        Eigen::VectorXd xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        model.objective(xp, &gp);
        model.objective(xm, &gm);
        H.col(k) = (gp - gm) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
}

}  // namespace

ModelFit fit(const SurveillanceDataset& data, std::span<const int> training_years, int lag, const FitOptions& options) {
    if (training_years.empty()) throw EvaluationError("fit requires at least one training year");
    std::vector<int> years(training_years.begin(), training_years.end());
    std::sort(years.begin(), years.end());
    years.erase(std::unique(years.begin(), years.end()), years.end());

    const LagDesign d = build_design(data, years, lag);
    if (d.X.rows() == 0) throw EvaluationError("no complete rows to fit at lag " + std::to_string(lag));

    const LogisticFit fe = fit_logistic_irls(d.X, d.y);
    if (fe.separated) {
        const LogisticFit ridge = fit_logistic_irls(d.X, d.y, options.ridge_penalty);
        return fixed_effects_result(lag, ridge, d, true);
    }
    ModelFit fixed = fixed_effects_result(lag, fe, d, false);
    if (years.size() == 1) return fixed;

    const RandomInterceptLogistic model(d.X, d.y, d.group, static_cast<int>(d.group_years.size()));
    const Eigen::Index p = d.X.cols();
    Eigen::VectorXd start(p + 1);
    start.head(p) = fe.beta;
    start(p) = std::log(options.initial_tau_sq);
    Eigen::MatrixXd inv_h = Eigen::MatrixXd::Zero(p + 1, p + 1);
    inv_h.topLeftCorner(p, p) = fe.covariance;
    inv_h(p, p) = 1.0;

    const BfgsResult opt = minimize_bfgs(model, start, inv_h, options);
    const double tau_sq = opt.x.size() ? std::exp(opt.x(p)) : 0.0;
    // The boundary tau^2 = 0 is the ordinary logistic fit; keep it whenever it is at least as good.
    if (!std::isfinite(opt.value) || tau_sq < options.boundary_tau_sq || -opt.value <= fe.log_likelihood) {
        fixed.iterations += opt.iterations;
        return fixed;
    }

    ModelFit out;
    out.lag = lag;
    out.beta.assign(opt.x.data(), opt.x.data() + p);
    out.tau_sq = tau_sq;
    out.years = d.group_years;
    Eigen::VectorXd modes;
    out.log_likelihood = -model.objective(opt.x, nullptr, &modes);
    out.gamma.assign(modes.data(), modes.data() + modes.size());
    out.converged = opt.converged;
    out.iterations = opt.iterations;
    out.random_effect = true;

    const Eigen::MatrixXd H = numeric_hessian(model, opt.x);
    const Eigen::MatrixXd cov = H.ldlt().solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
    for (Eigen::Index k = 0; k < p; ++k) {
        const double v = cov(k, k);
        out.std_errors.push_back(std::isfinite(v) && v > 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

std::vector<DailyRisk> predict_daily_risk(const ModelFit& fit, std::span<const SurveillanceRow> year_rows, int lag) {
    if (lag != fit.lag || fit.beta.size() != static_cast<std::size_t>(lag) + 4)
        throw ContractError("prediction lag " + std::to_string(lag) + " does not match fitted lag " +
                            std::to_string(fit.lag));
    std::vector<DailyRisk> out;
    for (const auto& r : year_rows) {
        if (r.lags.size() < static_cast<std::size_t>(lag) + 1)
            throw ContractError("row carries fewer lag columns than the model lag");
        double eta = fit.beta[0];
        bool complete = true;
        for (int k = 0; k <= lag && complete; ++k) {
            const auto& v = r.lags[static_cast<std::size_t>(k)];
            if (!v) complete = false;
            else eta += fit.beta[static_cast<std::size_t>(k) + 1] * *v;
        }
        if (!complete) continue;
        eta += fit.beta[static_cast<std::size_t>(lag) + 2] * r.sinterm;
        eta += fit.beta[static_cast<std::size_t>(lag) + 3] * r.costerm;
        out.push_back({r.date, logistic(eta)});
    }
    return out;
}

AlertTrace raise_alerts(std::span<const DailyRisk> theta, const LagLogisticSpec& spec, int year_start, int ref) {
    check_threshold(spec.threshold);
    if (ref < 1) throw ContractError("reference date must be a positive day index");
    AlertTrace trace;
    trace.theta.assign(theta.begin(), theta.end());
    for (const auto& d : theta) {
        if (d.date >= year_start && d.date <= ref && d.theta > spec.threshold) trace.alert_days.push_back(d.date);
    }
    std::sort(trace.alert_days.begin(), trace.alert_days.end());
    trace.alert_days.erase(std::unique(trace.alert_days.begin(), trace.alert_days.end()), trace.alert_days.end());
    return trace;
}

}  // namespace sentinel
