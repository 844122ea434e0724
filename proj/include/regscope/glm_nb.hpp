#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace regscope {

/// Count-model design: intercept column first, y nonnegative integers.
struct DesignMatrix {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> names; // one label per column

    static DesignMatrix from_csv(const std::string& path, const std::string& response_column,
                                 const std::vector<std::string>& feature_columns);
};

struct GlmFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    Eigen::VectorXd z;
    Eigen::VectorXd p_values;
    Eigen::MatrixXd ci95; // p x 2, beta -+ 1.96 se
    std::vector<std::string> names;
    double alpha = 1.0; // NB2 dispersion; 0 selects the Poisson family
    double loglik = 0.0;
    double deviance = 0.0;
    int iterations = 0;
    bool converged = false;
    double last_deviance_change = 0.0;
    std::vector<double> deviance_trace; // one entry per IRLS iteration
    std::vector<std::string> separation_suspects; // binary columns with |beta| > 20
    std::size_t n_obs = 0;
    double y_sum = 0.0; // cheap fingerprint so model comparisons can be checked
};

/// NB2 log-likelihood (variance mu + alpha*mu^2, log link) maximized for
/// fixed alpha by iteratively reweighted least squares with step-halving.
/// alpha = 0 selects the Poisson family. The weighted system is solved by
/// column-pivoted QR; rank deficiency throws Error{RankDeficient} naming the
/// collinear columns. Non-convergence returns the last iterate with
/// converged = false.
GlmFit fit_nb_glm(const DesignMatrix& D, double alpha = 1.0, double tol = 1e-8,
                  int max_iter = 100);

/// Profile-likelihood search for alpha on a log grid with golden-section
/// refinement; returns the fit at the selected alpha.
GlmFit fit_nb_glm_profile_alpha(const DesignMatrix& D, double alpha_lo = 1e-3,
                                double alpha_hi = 10.0, double tol = 1e-8, int max_iter = 100);

double nb2_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double alpha);
double nb2_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double alpha);

/// Cox-Snell pseudo-R^2: 1 - exp((2/n) (ll_null - ll_full)).
/// Throws Error{MismatchedModels} when the fits disagree on n or y.
double pseudo_r2_cs(const GlmFit& fit, const GlmFit& null_fit, std::size_t n);

/// Multiplicative effect of a coefficient as a percentage change.
double exp_effect(double coef);
/// One-decimal rendering with sign, e.g. "+48.9%".
std::string format_effect(double coef);

struct SummaryOptions {
    bool csv = false;
};

/// Coefficient table: name, coef, std_err, z, p, ci_low, ci_high, exp_effect.
/// A non-converged fit gets a warning banner.
std::string summarize(const GlmFit& fit, const SummaryOptions& options = {});

} // namespace regscope
