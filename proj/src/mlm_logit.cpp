#include "regscope/mlm_logit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "regscope/errors.hpp"
#include "regscope/glm_nb.hpp"

namespace regscope {

int MixedDesign::n_reg_groups() const {
    return g_reg.empty() ? 0 : *std::max_element(g_reg.begin(), g_reg.end()) + 1;
}
int MixedDesign::n_tld_groups() const {
    return g_tld.empty() ? 0 : *std::max_element(g_tld.begin(), g_tld.end()) + 1;
}

namespace {

constexpr double kLogTauMin = -23.0; // tau2 ~ 1e-10: the zero boundary
constexpr double kLogTauMax = 5.0;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double log1pexp(double x) { return x > 35.0 ? x : std::log1p(std::exp(x)); }

/// Laplace objective evaluator. The random effects are parameterized as
/// u = s .* v with s the per-group prior sd, which keeps the inner system
/// well conditioned as tau2 approaches zero:
///   l(theta) = l_data(u-hat) - v-hat'v-hat/2 - log det(M)/2,
///   M = I + S Z'WZ S.
class LaplaceObjective {
public:
    LaplaceObjective(const MixedDesign& D) : D_(D), q1_(D.n_reg_groups()), q2_(D.n_tld_groups()) {
        v_warm_ = Eigen::VectorXd::Zero(q1_ + q2_);
    }

    int dim() const { return static_cast<int>(D_.X.cols()) + 2; }

    /// theta = (beta, log tau2_reg, log tau2_tld); returns the objective and
    /// leaves the converged modes in v_warm_.
    double operator()(const Eigen::VectorXd& theta) {
        const auto n = D_.X.rows();
        const auto p = D_.X.cols();
        const int q = q1_ + q2_;
        const double sd_reg = std::exp(0.5 * theta(p));
        const double sd_tld = std::exp(0.5 * theta(p + 1));

        Eigen::VectorXd s(q);
        s.head(q1_).setConstant(sd_reg);
        s.tail(q2_).setConstant(sd_tld);

        Eigen::VectorXd xb = D_.X * theta.head(p);
        Eigen::VectorXd v = v_warm_;

        auto joint = [&](const Eigen::VectorXd& vv, Eigen::VectorXd& eta_out) {
            double ll = 0.0;
            eta_out.resize(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                int jr = D_.g_reg[static_cast<std::size_t>(i)];
                int jt = q1_ + D_.g_tld[static_cast<std::size_t>(i)];
                double eta = xb(i) + s(jr) * vv(jr) + s(jt) * vv(jt);
                eta_out(i) = eta;
                ll += D_.y(i) * eta - log1pexp(eta);
            }
            return ll - 0.5 * vv.squaredNorm();
        };

        Eigen::VectorXd eta;
        double fv = joint(v, eta);

        // Inner Newton for the joint mode; M is reassembled each step.
        Eigen::MatrixXd M(q, q);
        Eigen::LLT<Eigen::MatrixXd> llt;
        for (int it = 0; it < 50; ++it) {
            Eigen::VectorXd grad = -v;
            M.setIdentity();
            for (Eigen::Index i = 0; i < n; ++i) {
                int jr = D_.g_reg[static_cast<std::size_t>(i)];
                int jt = q1_ + D_.g_tld[static_cast<std::size_t>(i)];
                double pi = sigmoid(eta(i));
                double w = pi * (1.0 - pi);
                double r = D_.y(i) - pi;
                grad(jr) += s(jr) * r;
                grad(jt) += s(jt) * r;
                M(jr, jr) += s(jr) * s(jr) * w;
                M(jt, jt) += s(jt) * s(jt) * w;
                M(jr, jt) += s(jr) * s(jt) * w;
                M(jt, jr) += s(jr) * s(jt) * w;
            }
            if (grad.lpNorm<Eigen::Infinity>() < 1e-10) break;
            llt.compute(M);
            Eigen::VectorXd dir = llt.solve(grad);
            double step = 1.0;
            for (int half = 0; half < 30; ++half) {
                Eigen::VectorXd cand = v + step * dir;
                Eigen::VectorXd cand_eta;
                double fc = joint(cand, cand_eta);
                if (std::isfinite(fc) && fc >= fv - 1e-12) {
                    v = cand;
                    eta = std::move(cand_eta);
                    fv = fc;
                    break;
                }
                step *= 0.5;
            }
        }

        // Final curvature at the mode for the determinant term.
        M.setIdentity();
        for (Eigen::Index i = 0; i < n; ++i) {
            int jr = D_.g_reg[static_cast<std::size_t>(i)];
            int jt = q1_ + D_.g_tld[static_cast<std::size_t>(i)];
            double pi = sigmoid(eta(i));
            double w = pi * (1.0 - pi);
            M(jr, jr) += s(jr) * s(jr) * w;
            M(jt, jt) += s(jt) * s(jt) * w;
            M(jr, jt) += s(jr) * s(jt) * w;
            M(jt, jr) += s(jr) * s(jt) * w;
        }
        llt.compute(M);
        double logdet = 0.0;
        for (int j = 0; j < q; ++j) logdet += 2.0 * std::log(llt.matrixL()(j, j));

        v_warm_ = v;
        return fv - 0.5 * logdet;
    }

    Eigen::VectorXd modes_u(const Eigen::VectorXd& theta) {
        const auto p = D_.X.cols();
        (*this)(theta);
        Eigen::VectorXd u = v_warm_;
        u.head(q1_) *= std::exp(0.5 * theta(p));
        u.tail(q2_) *= std::exp(0.5 * theta(p + 1));
        return u;
    }

    int q1() const { return q1_; }
    int q2() const { return q2_; }

private:
    const MixedDesign& D_;
    int q1_, q2_;
    Eigen::VectorXd v_warm_;
};

Eigen::VectorXd clamp_theta(Eigen::VectorXd theta, Eigen::Index p) {
    theta(p) = std::clamp(theta(p), kLogTauMin, kLogTauMax);
    theta(p + 1) = std::clamp(theta(p + 1), kLogTauMin, kLogTauMax);
    return theta;
}

Eigen::VectorXd numeric_gradient(LaplaceObjective& objective, const Eigen::VectorXd& theta,
                                 Eigen::Index p) {
    Eigen::VectorXd grad(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        double h = 1e-5 * (1.0 + std::abs(theta(j)));
        Eigen::VectorXd up = theta, down = theta;
        up(j) += h;
        down(j) -= h;
        if (j >= p) {
            up(j) = std::min(up(j), kLogTauMax);
            down(j) = std::max(down(j), kLogTauMin);
        }
        double fu = objective(up), fd = objective(down);
        grad(j) = (fu - fd) / (up(j) - down(j));
    }
    return grad;
}

/// Plain logistic IRLS; the outer optimizer starts from its estimates.
Eigen::VectorXd logistic_start(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const std::vector<std::string>& names) {
    const auto p = X.cols();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
    for (int it = 0; it < 25; ++it) {
        Eigen::VectorXd eta = X * beta;
        Eigen::VectorXd mu = eta.unaryExpr([](double e) { return sigmoid(e); });
        Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).cwiseMax(1e-10).sqrt();
        Eigen::VectorXd z = eta.array() + (y - mu).array() / w.array().square();
        qr.compute((w.asDiagonal() * X).eval());
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
        Eigen::VectorXd next = qr.solve((w.asDiagonal() * z).eval());
        if ((next - beta).lpNorm<Eigen::Infinity>() < 1e-8) {
            beta = next;
            break;
        }
        beta = next;
    }
    return beta;
}

} // namespace

MixedFit fit_mixed_logit(const MixedDesign& D, double tol, int max_outer) {
    const auto n = D.X.rows();
    const auto p = D.X.cols();
    if (D.y.size() != n || static_cast<Eigen::Index>(D.g_reg.size()) != n ||
        static_cast<Eigen::Index>(D.g_tld.size()) != n)
        throw Error(ErrorCode::InvalidArgument, "design arrays disagree on length");
    const int q1 = D.n_reg_groups(), q2 = D.n_tld_groups();
    if (q1 < 2 || q2 < 2)
        throw Error(ErrorCode::InvalidArgument, "each grouping factor needs at least 2 groups");
    std::vector<int> seen_reg(static_cast<std::size_t>(q1), 0), seen_tld(static_cast<std::size_t>(q2), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        int r = D.g_reg[static_cast<std::size_t>(i)], t = D.g_tld[static_cast<std::size_t>(i)];
        if (r < 0 || r >= q1 || t < 0 || t >= q2)
            throw Error(ErrorCode::InvalidArgument, "group index out of range");
        seen_reg[static_cast<std::size_t>(r)] = 1;
        seen_tld[static_cast<std::size_t>(t)] = 1;
    }
    if (std::count(seen_reg.begin(), seen_reg.end(), 1) != q1 ||
        std::count(seen_tld.begin(), seen_tld.end(), 1) != q2)
        throw Error(ErrorCode::InvalidArgument, "empty group in factor");

    LaplaceObjective objective(D);

    Eigen::VectorXd theta(p + 2);
    theta.head(p) = logistic_start(D.X, D.y, D.names);
    theta(p) = std::log(0.1);
    theta(p + 1) = std::log(0.1);

    MixedFit fit;
    fit.names = D.names;

    // Gradient components that push a clamped variance further outside the
    // box do not count against convergence.
    auto projected_inf_norm = [&](const Eigen::VectorXd& g, const Eigen::VectorXd& th) {
        double m = 0.0;
        for (Eigen::Index j = 0; j < g.size(); ++j) {
            if (j >= p) {
                if (th(j) <= kLogTauMin + 1e-9 && g(j) > 0) continue;
                if (th(j) >= kLogTauMax - 1e-9 && g(j) < 0) continue;
            }
            m = std::max(m, std::abs(g(j)));
        }
        return m;
    };

    // BFGS on f = -objective with Armijo backtracking and box-clamped
    // log-variances. Accepted steps are monotone by construction.
    double f = -objective(theta);
    fit.objective_trace.push_back(-f);
    Eigen::VectorXd grad = -numeric_gradient(objective, theta, p);
    Eigen::MatrixXd Binv = Eigen::MatrixXd::Identity(p + 2, p + 2);

    bool converged = false;
    int iter = 0;
    int flat_steps = 0;
    for (; iter < max_outer; ++iter) {
        if (projected_inf_norm(grad, theta) < tol * std::max(1.0, std::abs(f))) {
            converged = true;
            break;
        }
        Eigen::VectorXd dir = -(Binv * grad);
        if (dir.dot(grad) >= 0) { // reset on a non-descent direction
            Binv.setIdentity();
            dir = -grad;
        }
        double step = 1.0;
        double f_new = f;
        Eigen::VectorXd theta_new = theta;
        bool accepted = false;
        for (int half = 0; half < 40; ++half) {
            theta_new = clamp_theta(theta + step * dir, p);
            f_new = -objective(theta_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * dir.dot(grad) + 1e-13) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No improving step exists at working precision.
            converged =
                projected_inf_norm(grad, theta) < std::sqrt(tol) * std::max(1.0, std::abs(f));
            break;
        }

        Eigen::VectorXd grad_new = -numeric_gradient(objective, theta_new, p);
        Eigen::VectorXd sk = theta_new - theta;
        Eigen::VectorXd yk = grad_new - grad;
        double sy = sk.dot(yk);
        if (sy > 1e-12) {
            Eigen::VectorXd By = Binv * yk;
            double yBy = yk.dot(By);
            Binv += ((sy + yBy) / (sy * sy)) * (sk * sk.transpose()) -
                    (By * sk.transpose() + sk * By.transpose()) / sy;
        }
        double improvement = f - f_new;
        theta = theta_new;
        f = f_new;
        grad = grad_new;
        fit.objective_trace.push_back(-f);

        // A variance crawling to the zero boundary improves the objective by
        // ever smaller amounts without ever meeting the gradient test; a run
        // of numerically flat accepted steps is convergence.
        flat_steps = improvement <= 1e-11 * std::max(1.0, std::abs(f)) ? flat_steps + 1 : 0;
        if (flat_steps >= 3) {
            converged = true;
            break;
        }
        if (sk.lpNorm<Eigen::Infinity>() < 1e-12) {
            converged =
                projected_inf_norm(grad, theta) < std::sqrt(tol) * std::max(1.0, std::abs(f));
            break;
        }
    }
    fit.outer_iterations = iter;
    fit.converged = converged;
    fit.loglik = -f;

    fit.tau2_reg = std::exp(theta(p));
    fit.tau2_tld = std::exp(theta(p + 1));
    fit.boundary_reg = fit.tau2_reg < 1e-6;
    fit.boundary_tld = fit.tau2_tld < 1e-6;
    if (fit.boundary_reg) fit.tau2_reg = 0.0;
    if (fit.boundary_tld) fit.tau2_tld = 0.0;

    fit.beta = theta.head(p);

    // Empirical-Bayes modes; the factor means move into the intercept so the
    // reported intercepts average to zero without changing any linear
    // predictor.
    Eigen::VectorXd u = objective.modes_u(theta);
    fit.u_reg = u.head(q1);
    fit.u_tld = u.tail(q2);
    bool has_intercept = (D.X.col(0).array() == 1.0).all();
    if (has_intercept) {
        double m_reg = fit.u_reg.mean(), m_tld = fit.u_tld.mean();
        fit.u_reg.array() -= m_reg;
        fit.u_tld.array() -= m_tld;
        fit.beta(0) += m_reg + m_tld;
    }

    // Observed information of the Laplace objective. Boundary variance rows
    // are held fixed: the curvature there is one-sided and meaningless.
    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index j = 0; j < p; ++j) free_idx.push_back(j);
    if (!fit.boundary_reg) free_idx.push_back(p);
    if (!fit.boundary_tld) free_idx.push_back(p + 1);
    const auto m = static_cast<Eigen::Index>(free_idx.size());
    Eigen::MatrixXd H(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = a; b < m; ++b) {
            Eigen::Index ja = free_idx[static_cast<std::size_t>(a)];
            Eigen::Index jb = free_idx[static_cast<std::size_t>(b)];
            double ha = 1e-4 * (1.0 + std::abs(theta(ja)));
            double hb = 1e-4 * (1.0 + std::abs(theta(jb)));
            auto at = [&](double da, double db) {
                Eigen::VectorXd t = theta;
                t(ja) += da;
                t(jb) += db;
                return objective(clamp_theta(std::move(t), p));
            };
            double val = (at(ha, hb) - at(ha, -hb) - at(-ha, hb) + at(-ha, -hb)) / (4 * ha * hb);
            H(a, b) = -val; // observed information = -Hessian of the loglik
            H(b, a) = -val;
        }
    }
    Eigen::MatrixXd cov = H.completeOrthogonalDecomposition().pseudoInverse();

    fit.se = Eigen::VectorXd::Zero(p);
    fit.z = Eigen::VectorXd::Zero(p);
    fit.p_values = Eigen::VectorXd::Ones(p);
    fit.ci95.resize(p, 2);
    for (Eigen::Index j = 0; j < p; ++j) {
        fit.se(j) = std::sqrt(std::max(0.0, cov(j, j)));
        fit.z(j) = fit.se(j) > 0 ? fit.beta(j) / fit.se(j) : 0.0;
        fit.p_values(j) = std::erfc(std::abs(fit.z(j)) / std::sqrt(2.0));
        fit.ci95(j, 0) = fit.beta(j) - 1.96 * fit.se(j);
        fit.ci95(j, 1) = fit.beta(j) + 1.96 * fit.se(j);
    }
    return fit;
}

double icc(double tau2_reg, double tau2_tld, ResidualMode mode, double supplied_sigma2) {
    if (tau2_reg < 0 || tau2_tld < 0)
        throw Error(ErrorCode::InvalidArgument, "variances must be nonnegative");
    double sigma2 = mode == ResidualMode::latent_logistic
                        ? std::numbers::pi * std::numbers::pi / 3.0
                        : supplied_sigma2;
    double denom = tau2_reg + tau2_tld + sigma2;
    if (denom == 0.0) throw Error(ErrorCode::AllZeroVariances, "ICC denominator is zero");
    return (tau2_reg + tau2_tld) / denom;
}

std::pair<double, double> r2_nakagawa(const MixedFit& fit, const MixedDesign& D, ResidualMode mode,
                                      double supplied_sigma2) {
    double sigma2 = mode == ResidualMode::latent_logistic
                        ? std::numbers::pi * std::numbers::pi / 3.0
                        : supplied_sigma2;
    Eigen::VectorXd fixed = D.X * fit.beta;
    double mean = fixed.mean();
    double var_f = fixed.size() > 1
                       ? (fixed.array() - mean).square().sum() / static_cast<double>(fixed.size() - 1)
                       : 0.0;
    double tau = fit.tau2_reg + fit.tau2_tld;
    double denom = var_f + tau + sigma2;
    if (denom == 0.0) throw Error(ErrorCode::AllZeroVariances, "variance total is zero");
    return {var_f / denom, (var_f + tau) / denom};
}

std::vector<std::pair<std::string, double>> extract_random_effects(const MixedFit& fit,
                                                                   GroupFactor factor,
                                                                   const MixedDesign& D,
                                                                   bool anonymize) {
    const Eigen::VectorXd& u = factor == GroupFactor::registrar ? fit.u_reg : fit.u_tld;
    const auto& labels = factor == GroupFactor::registrar ? D.reg_labels : D.tld_labels;
    const char* prefix = factor == GroupFactor::registrar ? "Reg_" : "TLD_";

    std::vector<std::pair<std::string, double>> out;
    for (Eigen::Index j = 0; j < u.size(); ++j) {
        std::string label;
        if (!anonymize && static_cast<std::size_t>(j) < labels.size())
            label = labels[static_cast<std::size_t>(j)];
        else
            label = prefix + std::to_string(j + 1);
        out.emplace_back(std::move(label), u(j));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

std::string mixed_report(const MixedFit& fit, const MixedDesign& D, ResidualMode mode,
                         double supplied_sigma2, bool csv) {
    auto [marginal, conditional] = r2_nakagawa(fit, D, mode, supplied_sigma2);
    double icc_value = icc(fit.tau2_reg, fit.tau2_tld, mode, supplied_sigma2);
    double sigma2 = mode == ResidualMode::latent_logistic
                        ? std::numbers::pi * std::numbers::pi / 3.0
                        : supplied_sigma2;

    std::string out;
    char buf[256];
    if (csv) {
        out += "name,coef,std_err,z,p,ci_low,ci_high\n";
        for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g,%.4g,%.4g,%.6g,%.6g\n",
                          fit.names.at(static_cast<std::size_t>(j)).c_str(), fit.beta(j),
                          fit.se(j), fit.z(j), fit.p_values(j), fit.ci95(j, 0), fit.ci95(j, 1));
            out += buf;
        }
        std::snprintf(buf, sizeof buf,
                      "sigma2,%.6g\ntau2_tld,%.6g\ntau2_reg,%.6g\nicc,%.6g\nn_registrar,%d\n"
                      "n_tld,%d\nobservations,%ld\nr2_marginal,%.6g\nr2_conditional,%.6g\n",
                      sigma2, fit.tau2_tld, fit.tau2_reg, icc_value, D.n_reg_groups(),
                      D.n_tld_groups(), static_cast<long>(D.y.size()), marginal, conditional);
        out += buf;
        return out;
    }

    if (!fit.converged) out += "WARNING: outer optimization did not converge\n";
    std::snprintf(buf, sizeof buf, "%-26s %10s %19s %8s\n", "", "Coef", "CI", "P>|z|");
    out += buf;
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
        char ci[64];
        std::snprintf(ci, sizeof ci, "%.2f - %.2f", fit.ci95(j, 0), fit.ci95(j, 1));
        std::snprintf(buf, sizeof buf, "%-26s %10.3f %19s %8.3f\n",
                      fit.names.at(static_cast<std::size_t>(j)).c_str(), fit.beta(j), ci,
                      fit.p_values(j));
        out += buf;
    }
    out += "\nRandom Effects\n";
    std::snprintf(buf, sizeof buf,
                  "sigma^2          %8.3f\ntau00 TLD        %8.3f%s\ntau00 Registrar  %8.3f%s\n"
                  "ICC              %8.3f\nN Registrar      %8d\nN TLD            %8d\n"
                  "Observations     %8ld\nMarginal R2 / Conditional R2  %.3f / %.3f\n",
                  sigma2, fit.tau2_tld, fit.boundary_tld ? " (boundary)" : "", fit.tau2_reg,
                  fit.boundary_reg ? " (boundary)" : "", icc_value, D.n_reg_groups(),
                  D.n_tld_groups(), static_cast<long>(D.y.size()), marginal, conditional);
    out += buf;
    return out;
}

} // namespace regscope
