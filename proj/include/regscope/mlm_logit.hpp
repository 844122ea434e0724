#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace regscope {

/// Two-level design: crossed registrar and TLD grouping factors over binary
/// outcomes. Group indices are dense 0-based; X carries the intercept first.
struct MixedDesign {
    Eigen::MatrixXd X;
    Eigen::VectorXd y; // 0/1
    std::vector<int> g_reg;
    std::vector<int> g_tld;
    std::vector<std::string> names;
    std::vector<std::string> reg_labels; // optional, for reporting
    std::vector<std::string> tld_labels;

    int n_reg_groups() const;
    int n_tld_groups() const;
};

struct MixedFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    Eigen::VectorXd z;
    Eigen::VectorXd p_values;
    Eigen::MatrixXd ci95;
    std::vector<std::string> names;
    double tau2_reg = 0.0;
    double tau2_tld = 0.0;
    bool boundary_reg = false; // variance pinned at the zero boundary
    bool boundary_tld = false;
    Eigen::VectorXd u_reg; // empirical-Bayes modes, centered
    Eigen::VectorXd u_tld;
    double loglik = 0.0; // Laplace-approximated marginal log-likelihood
    int outer_iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace; // accepted outer objective values
};

/// Laplace-approximated marginal likelihood, maximized by an inner Newton
/// solve for the random-effect modes and an outer quasi-Newton over
/// (beta, log tau2_reg, log tau2_tld). Crossed effects are handled jointly in
/// one penalized system. SEs come from the observed information of the
/// Laplace objective. tau2 pinned at the zero boundary is reported with a
/// flag, not an error. Throws Error{RankDeficient} and
/// Error{InvalidArgument} (malformed grouping).
MixedFit fit_mixed_logit(const MixedDesign& D, double tol = 1e-6, int max_outer = 200);

enum class ResidualMode { latent_logistic, supplied };

/// Share of latent variance attributable to the grouping factors:
/// (t_reg + t_tld) / (t_reg + t_tld + sigma2), sigma2 = pi^2/3 in
/// latent-logistic mode. Throws Error{AllZeroVariances} when the denominator
/// vanishes.
double icc(double tau2_reg, double tau2_tld, ResidualMode mode = ResidualMode::latent_logistic,
           double supplied_sigma2 = 0.0);

/// (marginal, conditional) variance-explained under the given residual
/// convention; marginal counts the fixed effects only.
std::pair<double, double> r2_nakagawa(const MixedFit& fit, const MixedDesign& D,
                                      ResidualMode mode = ResidualMode::latent_logistic,
                                      double supplied_sigma2 = 0.0);

enum class GroupFactor { registrar, tld };

/// Random intercepts sorted descending. Labels are anonymized to
/// Reg_i / TLD_i unless the design carries real group labels and
/// anonymize = false.
std::vector<std::pair<std::string, double>> extract_random_effects(
    const MixedFit& fit, GroupFactor factor, const MixedDesign& D, bool anonymize = true);

/// Fixed-effect table plus the variance-component block (tau2, ICC, group
/// counts, observations, marginal/conditional R2).
std::string mixed_report(const MixedFit& fit, const MixedDesign& D,
                         ResidualMode mode = ResidualMode::latent_logistic,
                         double supplied_sigma2 = 0.0, bool csv = false);

} // namespace regscope
