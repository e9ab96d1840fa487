#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sentinel/surveillance.hpp"

namespace sentinel {

/// Tuning pair of the detector: maximum lag (lag0 always included) and alert threshold.
struct LagLogisticSpec {
    int lag = 1;
    double threshold = 0.5;

    void validate(int maxlag) const;
};

/// Fitted seasonal lag-logistic model.
///
/// beta layout: [intercept, lag0 .. lag{l}, sin, cos] (length l + 4).
struct ModelFit {
    int lag = 0;
    std::vector<double> beta;
    std::vector<double> std_errors;
    double tau_sq = 0.0;
    std::vector<int> years;      // training years, ascending
    std::vector<double> gamma;   // per-training-year intercepts (posterior modes)
    double log_likelihood = 0.0; // Laplace-approximate marginal log-likelihood
    bool converged = false;
    int iterations = 0;
    bool random_effect = false;  // false when reduced to the fixed-effects fit
    bool ridge = false;          // separation fallback was used
};

struct FitOptions {
    int max_iterations = 200;
    double tolerance = 1e-8;      // relative objective change
    double initial_tau_sq = 0.1;
    double ridge_penalty = 1e-4;
    double boundary_tau_sq = 1e-6;  // below this the variance is treated as 0
};

/// Rows of `years` with every lag0..lag{l} present, as a dense design.
struct LagDesign {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<int> group;  // index into group_years
    std::vector<int> group_years;
};

LagDesign build_design(const SurveillanceDataset& data, std::span<const int> years, int lag);

/// Negative Laplace-approximate marginal log-likelihood of a logistic model
/// with one N(0, tau^2) intercept per group, as a function of (beta, log tau^2).
///
/// For each group j with mode g_j of the conditional log-posterior,
///   log L_j ~= l_j(beta, g_j) - g_j^2 / (2 tau^2) - log(1 + tau^2 W_j) / 2,
/// W_j = sum_i mu_i (1 - mu_i). At tau^2 -> 0 this is the ordinary logistic likelihood.
class RandomInterceptLogistic {
public:
    RandomInterceptLogistic(Eigen::MatrixXd X, Eigen::VectorXd y, std::vector<int> group, int n_groups);

    int n_coefficients() const { return static_cast<int>(X_.cols()); }

    /// params = (beta..., log tau^2). Fills the analytic gradient and the
    /// per-group modes when requested. Returns +inf where undefined.
    double objective(const Eigen::VectorXd& params, Eigen::VectorXd* gradient = nullptr,
                     Eigen::VectorXd* modes = nullptr) const;

    /// Ordinary logistic log-likelihood (all intercepts zero).
    double fixed_log_likelihood(const Eigen::VectorXd& beta) const;

private:
    Eigen::MatrixXd X_;
    Eigen::VectorXd y_;
    std::vector<std::vector<int>> members_;
};

struct LogisticFit {
    Eigen::VectorXd beta;
    Eigen::MatrixXd covariance;
    double log_likelihood = 0.0;
    bool converged = false;
    bool separated = false;
    int iterations = 0;
};

/// Newton/IRLS for (optionally ridge-penalized) logistic regression.
LogisticFit fit_logistic_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ridge = 0.0,
                              int max_iterations = 100);

/// Fits the detector on `training_years`, excluding rows with missing lags.
/// Deterministic; falls back to fixed effects with one training year or a
/// boundary variance estimate, and to a ridge fit under separation.
ModelFit fit(const SurveillanceDataset& data, std::span<const int> training_years, int lag,
             const FitOptions& options = {});

struct DailyRisk {
    int date = 0;
    double theta = 0.0;
};

/// Population-level risk (new-year intercept 0) for every row with lag0..lag{l} present.
std::vector<DailyRisk> predict_daily_risk(const ModelFit& fit, std::span<const SurveillanceRow> year_rows, int lag);

struct AlertTrace {
    int year = 0;
    std::vector<DailyRisk> theta;
    std::vector<int> alert_days;
};

/// Days with theta > threshold inside [year_start, ref].
AlertTrace raise_alerts(std::span<const DailyRisk> theta, const LagLogisticSpec& spec, int year_start, int ref);

}  // namespace sentinel
