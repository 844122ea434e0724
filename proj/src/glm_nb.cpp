#include "regscope/glm_nb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "regscope/errors.hpp"
#include "regscope/text.hpp"

namespace regscope {

DesignMatrix DesignMatrix::from_csv(const std::string& path, const std::string& response_column,
                                    const std::vector<std::string>& feature_columns) {
    auto lines = read_lines(path);
    std::size_t first = 0;
    while (first < lines.size() && (lines[first].empty() || lines[first][0] == '#')) ++first;
    if (first >= lines.size()) throw Error(ErrorCode::SchemaViolation, path + ": empty design CSV");

    auto header = split_csv(lines[first]);
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < header.size(); ++i) pos[std::string(trim(header[i]))] = i;
    if (!pos.count(response_column))
        throw Error(ErrorCode::SchemaViolation, path + ": missing response " + response_column);
    for (const auto& f : feature_columns)
        if (!pos.count(f)) throw Error(ErrorCode::SchemaViolation, path + ": missing column " + f);

    std::vector<std::vector<double>> rows;
    for (std::size_t li = first + 1; li < lines.size(); ++li) {
        if (lines[li].empty() || lines[li][0] == '#') continue;
        auto fields = split_csv(lines[li]);
        std::vector<double> row;
        row.push_back(std::stod(fields.at(pos.at(response_column))));
        for (const auto& f : feature_columns) row.push_back(std::stod(fields.at(pos.at(f))));
        rows.push_back(std::move(row));
    }
    DesignMatrix D;
    auto n = static_cast<Eigen::Index>(rows.size());
    auto p = static_cast<Eigen::Index>(feature_columns.size()) + 1;
    D.X.resize(n, p);
    D.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        D.y(i) = rows[static_cast<std::size_t>(i)][0];
        D.X(i, 0) = 1.0;
        for (Eigen::Index j = 1; j < p; ++j)
            D.X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    D.names.push_back("Intercept");
    for (const auto& f : feature_columns) D.names.push_back(f);
    return D;
}

double nb2_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double alpha) {
    double ll = 0.0;
    if (alpha <= 0.0) {
        for (Eigen::Index i = 0; i < y.size(); ++i)
            ll += y(i) * std::log(mu(i)) - mu(i) - std::lgamma(y(i) + 1.0);
        return ll;
    }
    double theta = 1.0 / alpha;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        ll += std::lgamma(y(i) + theta) - std::lgamma(theta) - std::lgamma(y(i) + 1.0) +
              theta * std::log(theta / (theta + mu(i))) +
              y(i) * std::log(mu(i) / (theta + mu(i)));
    }
    return ll;
}

double nb2_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double alpha) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double yi = y(i), mui = mu(i);
        double term = yi > 0 ? yi * std::log(yi / mui) : 0.0;
        if (alpha <= 0.0) {
            dev += 2.0 * (term - (yi - mui));
        } else {
            double theta = 1.0 / alpha;
            dev += 2.0 * (term - (yi + theta) * std::log((yi + theta) / (mui + theta)));
        }
    }
    return dev;
}

namespace {

double norm_sf2(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); } // two-sided p

struct Irls {
    Eigen::VectorXd beta;
    Eigen::MatrixXd cov;
    double deviance = 0.0;
    int iterations = 0;
    bool converged = false;
    double last_change = 0.0;
    std::vector<double> trace;
};

Irls run_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
              const std::vector<std::string>& names, double alpha, double tol, int max_iter) {
    const auto n = X.rows();
    const auto p = X.cols();
    if (n <= p)
        throw Error(ErrorCode::InvalidArgument,
                    "need more observations than columns (" + std::to_string(n) + " x " +
                        std::to_string(p) + ")");

    Irls state;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd mu = Eigen::VectorXd::Ones(n);
    double dev = nb2_deviance(y, mu, alpha);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
    for (int iter = 1; iter <= max_iter; ++iter) {
        // Working response and weights for the log link under NB2 variance.
        Eigen::VectorXd w = (mu.array() / (1.0 + alpha * mu.array())).sqrt();
        Eigen::VectorXd z = eta.array() + (y - mu).array() / mu.array();

        Eigen::MatrixXd Xw = w.asDiagonal() * X;
        Eigen::VectorXd zw = w.asDiagonal() * z;
        qr.compute(Xw);
        qr.setThreshold(1e-10);
        if (qr.rank() < p) {
            std::string collinear;
            auto perm = qr.colsPermutation().indices();
            for (Eigen::Index k = qr.rank(); k < p; ++k) {
                if (!collinear.empty()) collinear += ", ";
                collinear += names.at(static_cast<std::size_t>(perm(k)));
            }
            throw Error(ErrorCode::RankDeficient, "collinear columns: " + collinear);
        }
        Eigen::VectorXd step = qr.solve(zw) - beta;

        // Step-halving keeps the deviance non-increasing.
        double new_dev = dev;
        double scale = 1.0;
        bool accepted = false;
        for (int half = 0; half < 40 && !accepted; ++half) {
            Eigen::VectorXd trial = beta + scale * step;
            Eigen::VectorXd trial_eta = X * trial;
            Eigen::VectorXd trial_mu = trial_eta.array().exp();
            new_dev = nb2_deviance(y, trial_mu, alpha);
            if (std::isfinite(new_dev) && new_dev <= dev + 1e-12) {
                beta = trial;
                eta = std::move(trial_eta);
                mu = std::move(trial_mu);
                accepted = true;
            } else {
                scale *= 0.5;
            }
        }
        if (!accepted) break; // no improving step exists; report last iterate

        state.iterations = iter;
        state.trace.push_back(new_dev);
        state.last_change = std::abs(dev - new_dev);
        double denom = std::abs(new_dev) + 0.1;
        bool done = state.last_change / denom < tol;
        dev = new_dev;
        if (done) {
            state.converged = true;
            break;
        }
    }

    state.beta = beta;
    state.deviance = dev;

    // Covariance from the weighted normal equations at convergence, through
    // the final QR factors (never an explicit normal-equation inverse).
    Eigen::VectorXd w = (mu.array() / (1.0 + alpha * mu.array())).sqrt();
    qr.compute((w.asDiagonal() * X).eval());
    qr.setThreshold(1e-10);
    Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    Eigen::MatrixXd cov_permuted = Rinv * Rinv.transpose();
    const auto& perm = qr.colsPermutation();
    state.cov = perm * cov_permuted * perm.transpose();
    return state;
}

} // namespace

GlmFit fit_nb_glm(const DesignMatrix& D, double alpha, double tol, int max_iter) {
    if (alpha < 0) throw Error(ErrorCode::InvalidArgument, "alpha must be nonnegative");
    for (Eigen::Index i = 0; i < D.y.size(); ++i)
        if (D.y(i) < 0 || D.y(i) != std::floor(D.y(i)))
            throw Error(ErrorCode::InvalidArgument, "y must hold nonnegative integers");

    Irls irls = run_irls(D.X, D.y, D.names, alpha, tol, max_iter);

    GlmFit fit;
    fit.beta = irls.beta;
    fit.names = D.names;
    fit.alpha = alpha;
    fit.iterations = irls.iterations;
    fit.converged = irls.converged;
    fit.last_deviance_change = irls.last_change;
    fit.deviance_trace = irls.trace;
    fit.deviance = irls.deviance;
    fit.n_obs = static_cast<std::size_t>(D.y.size());
    fit.y_sum = D.y.sum();

    Eigen::VectorXd mu = (D.X * fit.beta).array().exp();
    fit.loglik = nb2_loglik(D.y, mu, alpha);

    const auto p = D.X.cols();
    fit.se.resize(p);
    fit.z.resize(p);
    fit.p_values.resize(p);
    fit.ci95.resize(p, 2);
    for (Eigen::Index j = 0; j < p; ++j) {
        fit.se(j) = std::sqrt(std::max(0.0, irls.cov(j, j)));
        fit.z(j) = fit.se(j) > 0 ? fit.beta(j) / fit.se(j) : 0.0;
        fit.p_values(j) = norm_sf2(fit.z(j));
        fit.ci95(j, 0) = fit.beta(j) - 1.96 * fit.se(j);
        fit.ci95(j, 1) = fit.beta(j) + 1.96 * fit.se(j);
    }

    // Perfect-separation heuristic: runaway coefficients on binary columns.
    for (Eigen::Index j = 0; j < p; ++j) {
        bool binary = true;
        for (Eigen::Index i = 0; i < D.X.rows() && binary; ++i)
            binary = D.X(i, j) == 0.0 || D.X(i, j) == 1.0;
        if (binary && std::abs(fit.beta(j)) > 20.0)
            fit.separation_suspects.push_back(D.names.at(static_cast<std::size_t>(j)));
    }
    return fit;
}

GlmFit fit_nb_glm_profile_alpha(const DesignMatrix& D, double alpha_lo, double alpha_hi,
                                double tol, int max_iter) {
    auto profile = [&](double log_alpha) {
        return fit_nb_glm(D, std::exp(log_alpha), tol, max_iter).loglik;
    };

    // Coarse log grid, then golden-section refinement around the best point.
    const int grid_points = 13;
    double lo = std::log(alpha_lo), hi = std::log(alpha_hi);
    double best_x = lo, best_ll = -1e300;
    for (int i = 0; i < grid_points; ++i) {
        double x = lo + (hi - lo) * i / (grid_points - 1);
        double ll = profile(x);
        if (ll > best_ll) {
            best_ll = ll;
            best_x = x;
        }
    }
    double step = (hi - lo) / (grid_points - 1);
    double a = std::max(lo, best_x - step), b = std::min(hi, best_x + step);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = profile(c), fd = profile(d);
    for (int it = 0; it < 40 && (b - a) > 1e-4; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = profile(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = profile(d);
        }
    }
    return fit_nb_glm(D, std::exp((a + b) / 2.0), tol, max_iter);
}

double pseudo_r2_cs(const GlmFit& fit, const GlmFit& null_fit, std::size_t n) {
    if (fit.n_obs != null_fit.n_obs || fit.n_obs != n || fit.y_sum != null_fit.y_sum)
        throw Error(ErrorCode::MismatchedModels, "fits disagree on observations");
    return 1.0 - std::exp((2.0 / static_cast<double>(n)) * (null_fit.loglik - fit.loglik));
}

double exp_effect(double coef) { return (std::exp(coef) - 1.0) * 100.0; }

std::string format_effect(double coef) {
    double pct = exp_effect(coef);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.1f%%", pct);
    return buf;
}

std::string summarize(const GlmFit& fit, const SummaryOptions& options) {
    std::string out;
    if (options.csv) {
        out = "name,coef,std_err,z,p,ci_low,ci_high,exp_effect\n";
        for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
            char buf[256];
            std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g,%.4g,%.4g,%.6g,%.6g,%.1f\n",
                          csv_escape(fit.names.at(static_cast<std::size_t>(j))).c_str(),
                          fit.beta(j), fit.se(j), fit.z(j), fit.p_values(j), fit.ci95(j, 0),
                          fit.ci95(j, 1), exp_effect(fit.beta(j)));
            out += buf;
        }
        return out;
    }
    if (!fit.converged)
        out += "WARNING: estimator did not converge; estimates are the last iterate\n";
    if (!fit.separation_suspects.empty()) {
        out += "WARNING: separation suspected on:";
        for (const auto& name : fit.separation_suspects) out += " " + name;
        out += "\n";
    }
    char head[160];
    std::snprintf(head, sizeof head, "%-26s %10s %9s %8s %8s %9s %9s %9s\n", "", "coef",
                  "std err", "z", "P>|z|", "[0.025", "0.975]", "effect");
    out += head;
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%-26s %10.4f %9.3f %8.3f %8.3f %9.3f %9.3f %9s\n",
                      fit.names.at(static_cast<std::size_t>(j)).c_str(), fit.beta(j), fit.se(j),
                      fit.z(j), fit.p_values(j), fit.ci95(j, 0), fit.ci95(j, 1),
                      format_effect(fit.beta(j)).c_str());
        out += buf;
    }
    return out;
}

} // namespace regscope
