#pragma once

// Test-side oracles, written independently of the library estimators they
// check. Nothing here touches the IRLS or Laplace code paths under test.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

/// Plain Poisson IRLS via damped normal equations (LDLT), nothing shared
/// with the library's QR-based fitter.
inline Eigen::VectorXd poisson_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    int max_iter = 200, double tol = 1e-12) {
    const auto p = X.cols();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd eta = X * beta;
        Eigen::VectorXd mu = eta.array().exp();
        Eigen::VectorXd z = eta.array() + (y - mu).array() / mu.array();
        Eigen::MatrixXd XtWX = X.transpose() * mu.asDiagonal() * X;
        Eigen::VectorXd XtWz = X.transpose() * (mu.array() * z.array()).matrix();
        Eigen::VectorXd next = XtWX.ldlt().solve(XtWz);
        if ((next - beta).lpNorm<Eigen::Infinity>() < tol) return next;
        beta = next;
    }
    return beta;
}

/// Plain logistic IRLS, same independence rules.
inline Eigen::VectorXd logistic_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     int max_iter = 200, double tol = 1e-12) {
    const auto p = X.cols();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd eta = X * beta;
        Eigen::VectorXd mu = eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
        Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).cwiseMax(1e-12);
        Eigen::VectorXd z = eta.array() + (y - mu).array() / w.array();
        Eigen::MatrixXd XtWX = X.transpose() * w.asDiagonal() * X;
        Eigen::VectorXd XtWz = X.transpose() * (w.array() * z.array()).matrix();
        Eigen::VectorXd next = XtWX.ldlt().solve(XtWz);
        if ((next - beta).lpNorm<Eigen::Infinity>() < tol) return next;
        beta = next;
    }
    return beta;
}

/// Standard Nelder-Mead maximizer.
inline Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                   Eigen::VectorXd x0, double scale = 0.1, int max_iter = 4000,
                                   double tol = 1e-10) {
    const auto n = x0.size();
    std::vector<Eigen::VectorXd> simplex;
    std::vector<double> value;
    simplex.push_back(x0);
    value.push_back(f(x0));
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::VectorXd v = x0;
        v(j) += scale * (1.0 + std::abs(x0(j)));
        simplex.push_back(v);
        value.push_back(f(v));
    }
    auto order = [&] {
        for (std::size_t i = 1; i < simplex.size(); ++i)
            for (std::size_t j = i; j > 0 && value[j] > value[j - 1]; --j) {
                std::swap(value[j], value[j - 1]);
                std::swap(simplex[j], simplex[j - 1]);
            }
    };
    order();
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(value.front() - value.back()) < tol) break;
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i];
        centroid /= static_cast<double>(n);
        Eigen::VectorXd worst = simplex.back();
        Eigen::VectorXd reflect = centroid + (centroid - worst);
        double fr = f(reflect);
        if (fr > value.front()) {
            Eigen::VectorXd expand = centroid + 2.0 * (centroid - worst);
            double fe = f(expand);
            simplex.back() = fe > fr ? expand : reflect;
            value.back() = std::max(fe, fr);
        } else if (fr > value[value.size() - 2]) {
            simplex.back() = reflect;
            value.back() = fr;
        } else {
            Eigen::VectorXd contract = centroid + 0.5 * (worst - centroid);
            double fc = f(contract);
            if (fc > value.back()) {
                simplex.back() = contract;
                value.back() = fc;
            } else {
                for (std::size_t i = 1; i < simplex.size(); ++i) {
                    simplex[i] = simplex.front() + 0.5 * (simplex[i] - simplex.front());
                    value[i] = f(simplex[i]);
                }
            }
        }
        order();
    }
    return simplex.front();
}

// --- Crossed random-intercept logistic oracle --------------------------------

struct CrossedData {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<int> g_reg;
    std::vector<int> g_tld;
    int q1 = 0;
    int q2 = 0;
};

/// Physicists' Gauss-Hermite rule (weight e^{-x^2}) by Golub-Welsch.
inline void gauss_hermite(int k, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i + 1 < k; ++i) {
        double b = std::sqrt((i + 1) / 2.0);
        J(i, i + 1) = b;
        J(i + 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    nodes = es.eigenvalues();
    weights.resize(k);
    const double sqrt_pi = std::sqrt(std::acos(-1.0));
    for (int i = 0; i < k; ++i) {
        double v0 = es.eigenvectors()(0, i);
        weights(i) = sqrt_pi * v0 * v0;
    }
}

namespace detail {

inline double log1pexp(double x) { return x > 35.0 ? x : std::log1p(std::exp(x)); }

/// Joint mode and per-dimension posterior scales for the adaptive rule.
inline void joint_mode(const CrossedData& d, const Eigen::VectorXd& beta, double t_reg,
                       double t_tld, Eigen::VectorXd& u_hat, Eigen::VectorXd& sigma) {
    const int q = d.q1 + d.q2;
    const auto n = d.X.rows();
    Eigen::VectorXd xb = d.X * beta;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd dinv(q);
    dinv.head(d.q1).setConstant(1.0 / t_reg);
    dinv.tail(d.q2).setConstant(1.0 / t_tld);

    Eigen::MatrixXd H(q, q);
    for (int newton = 0; newton < 100; ++newton) {
        Eigen::VectorXd grad = -(dinv.array() * u.array()).matrix();
        H = dinv.asDiagonal();
        for (Eigen::Index i = 0; i < n; ++i) {
            int a = d.g_reg[static_cast<std::size_t>(i)];
            int b = d.q1 + d.g_tld[static_cast<std::size_t>(i)];
            double eta = xb(i) + u(a) + u(b);
            double p = 1.0 / (1.0 + std::exp(-eta));
            double w = p * (1.0 - p);
            grad(a) += d.y(i) - p;
            grad(b) += d.y(i) - p;
            H(a, a) += w;
            H(b, b) += w;
            H(a, b) += w;
            H(b, a) += w;
        }
        if (grad.lpNorm<Eigen::Infinity>() < 1e-11) break;
        u += H.ldlt().solve(grad);
    }
    u_hat = u;
    Eigen::MatrixXd Hinv = H.inverse();
    sigma = Hinv.diagonal().cwiseSqrt();
}

} // namespace detail

/// Adaptive product Gauss-Hermite marginal log-likelihood over the full
/// (q1+q2)-dimensional random-effect space. The tensor-grid sum is evaluated
/// exactly by enumerating every registrar node configuration and collapsing
/// the TLD dimensions analytically (the integrand couples the two sides only
/// through cell sums).
inline double ghq_loglik(const CrossedData& d, const Eigen::VectorXd& beta, double tau2_reg,
                         double tau2_tld, int k) {
    const int q1 = d.q1, q2 = d.q2;
    Eigen::VectorXd nodes, weights;
    gauss_hermite(k, nodes, weights);

    Eigen::VectorXd u_hat, sigma;
    detail::joint_mode(d, beta, tau2_reg, tau2_tld, u_hat, sigma);

    // Per-cell observation lists.
    Eigen::VectorXd xb = d.X * beta;
    std::vector<std::vector<std::vector<std::pair<double, double>>>> cells(
        static_cast<std::size_t>(q1),
        std::vector<std::vector<std::pair<double, double>>>(static_cast<std::size_t>(q2)));
    for (Eigen::Index i = 0; i < d.X.rows(); ++i)
        cells[static_cast<std::size_t>(d.g_reg[static_cast<std::size_t>(i)])]
             [static_cast<std::size_t>(d.g_tld[static_cast<std::size_t>(i)])]
                 .emplace_back(xb(i), d.y(i));

    // Node values per dimension and cached cell log-likelihood contributions:
    // cell_ll[j][t][a][b] for registrar node a, TLD node b.
    auto dim_value = [&](int dim, int node) {
        return u_hat(dim) + std::sqrt(2.0) * sigma(dim) * nodes(node);
    };
    std::vector<std::vector<std::vector<std::vector<double>>>> cell_ll(
        static_cast<std::size_t>(q1));
    for (int j = 0; j < q1; ++j) {
        cell_ll[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(q2));
        for (int t = 0; t < q2; ++t) {
            auto& table = cell_ll[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)];
            table.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k), 0.0));
            const auto& obs = cells[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)];
            if (obs.empty()) continue;
            for (int a = 0; a < k; ++a) {
                double uj = dim_value(j, a);
                for (int b = 0; b < k; ++b) {
                    double s = uj + dim_value(q1 + t, b);
                    double ll = 0.0;
                    for (const auto& [ci, yi] : obs) ll += yi * (ci + s) - detail::log1pexp(ci + s);
                    table[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = ll;
                }
            }
        }
    }

    const double log2pi = std::log(2.0 * std::acos(-1.0));
    auto prior_term = [&](int dim, int node, double tau2) {
        double u = dim_value(dim, node);
        double w = nodes(node);
        return -0.5 * u * u / tau2 - 0.5 * (log2pi + std::log(tau2)) + w * w +
               std::log(weights(node));
    };
    std::vector<std::vector<double>> reg_part(static_cast<std::size_t>(q1)),
        tld_part(static_cast<std::size_t>(q2));
    for (int j = 0; j < q1; ++j) {
        reg_part[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(k));
        for (int a = 0; a < k; ++a)
            reg_part[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)] =
                prior_term(j, a, tau2_reg);
    }
    for (int t = 0; t < q2; ++t) {
        tld_part[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(k));
        for (int b = 0; b < k; ++b)
            tld_part[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)] =
                prior_term(q1 + t, b, tau2_tld);
    }

    // Enumerate registrar node configurations; TLD dimensions collapse to a
    // per-TLD logsumexp given the configuration.
    std::vector<int> config(static_cast<std::size_t>(q1), 0);
    double best = -1e300;
    std::vector<double> terms;
    std::vector<double> tld_buf(static_cast<std::size_t>(k));
    for (;;) {
        double term = 0.0;
        for (int j = 0; j < q1; ++j)
            term += reg_part[static_cast<std::size_t>(j)]
                            [static_cast<std::size_t>(config[static_cast<std::size_t>(j)])];
        for (int t = 0; t < q2; ++t) {
            double m = -1e300;
            for (int b = 0; b < k; ++b) {
                double v = tld_part[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)];
                for (int j = 0; j < q1; ++j)
                    v += cell_ll[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)]
                                [static_cast<std::size_t>(config[static_cast<std::size_t>(j)])]
                                [static_cast<std::size_t>(b)];
                tld_buf[static_cast<std::size_t>(b)] = v;
                m = std::max(m, v);
            }
            double acc = 0.0;
            for (int b = 0; b < k; ++b) acc += std::exp(tld_buf[static_cast<std::size_t>(b)] - m);
            term += m + std::log(acc);
        }
        terms.push_back(term);
        best = std::max(best, term);

        int pos = 0;
        while (pos < q1 && ++config[static_cast<std::size_t>(pos)] == k) {
            config[static_cast<std::size_t>(pos)] = 0;
            ++pos;
        }
        if (pos == q1) break;
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - best);
    double log_sum = best + std::log(acc);

    double log_jacobian = 0.0;
    for (int j = 0; j < q1 + q2; ++j) log_jacobian += 0.5 * std::log(2.0) + std::log(sigma(j));
    return log_sum + log_jacobian;
}

struct GhqFit {
    Eigen::VectorXd beta;
    double tau2_reg = 0.0;
    double tau2_tld = 0.0;
    double loglik = 0.0;
    Eigen::VectorXd se; // fixed effects only
};

/// Direct maximizer of the quadrature log-likelihood; SEs from a numerical
/// Hessian of the quadrature objective.
inline GhqFit ghq_fit(const CrossedData& d, const Eigen::VectorXd& beta0, int k) {
    const auto p = d.X.cols();
    auto objective = [&](const Eigen::VectorXd& theta) {
        double t_reg = std::exp(std::clamp(theta(p), -12.0, 4.0));
        double t_tld = std::exp(std::clamp(theta(p + 1), -12.0, 4.0));
        return ghq_loglik(d, theta.head(p), t_reg, t_tld, k);
    };
    Eigen::VectorXd theta0(p + 2);
    theta0.head(p) = beta0;
    theta0(p) = std::log(0.1);
    theta0(p + 1) = std::log(0.1);
    Eigen::VectorXd theta = nelder_mead(objective, theta0, 0.25, 3000, 1e-9);
    // One refinement pass from the incumbent.
    theta = nelder_mead(objective, theta, 0.05, 2000, 1e-10);

    GhqFit fit;
    fit.beta = theta.head(p);
    fit.tau2_reg = std::exp(std::clamp(theta(p), -12.0, 4.0));
    fit.tau2_tld = std::exp(std::clamp(theta(p + 1), -12.0, 4.0));
    fit.loglik = objective(theta);

    const auto m = p + 2;
    Eigen::MatrixXd H(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        double ha = 1e-4 * (1.0 + std::abs(theta(a)));
        for (Eigen::Index b = a; b < m; ++b) {
            double hb = 1e-4 * (1.0 + std::abs(theta(b)));
            auto at = [&](double da, double db) {
                Eigen::VectorXd t = theta;
                t(a) += da;
                t(b) += db;
                return objective(t);
            };
            double v = (at(ha, hb) - at(ha, -hb) - at(-ha, hb) + at(-ha, -hb)) / (4 * ha * hb);
            H(a, b) = -v;
            H(b, a) = -v;
        }
    }
    Eigen::MatrixXd cov = H.inverse();
    fit.se.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) fit.se(j) = std::sqrt(std::max(0.0, cov(j, j)));
    return fit;
}

// --- Synthetic data ------------------------------------------------------------

struct NbSim {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd beta_true;
    std::vector<std::string> names;
};

/// NB2 counts over a design shaped like the production one: intercept plus
/// ten binary and four numeric predictors.
inline NbSim simulate_nb(std::uint64_t seed, int n = 1066, double alpha = 1.0) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::uniform_real_distribution<double> price(0.0, 10.0), discount(0.0, 3.0),
        bulk(0.0, 5000.0), uptime(0.0, 20000.0);

    const int p = 15;
    NbSim sim;
    sim.X.resize(n, p);
    sim.beta_true.resize(p);
    sim.beta_true << 2.4, 1.11, 0.63, -1.67, -0.50, -0.07, 1.61, 0.05, 0.26, -1.34, -1.21,
        -0.0003, -0.068, 0.40, -0.0001;
    sim.names = {"Intercept", "b1", "b2", "b3", "b4", "b5", "b6", "b7", "b8", "b9", "b10",
                 "bulk", "price", "discount", "uptime"};
    sim.y.resize(n);
    for (int i = 0; i < n; ++i) {
        sim.X(i, 0) = 1.0;
        for (int j = 1; j <= 10; ++j) sim.X(i, j) = coin(rng) ? 1.0 : 0.0;
        sim.X(i, 11) = bulk(rng);
        sim.X(i, 12) = price(rng);
        sim.X(i, 13) = discount(rng);
        sim.X(i, 14) = uptime(rng);
        double mu = std::exp(sim.X.row(i).dot(sim.beta_true));
        double lambda = mu;
        if (alpha > 0) {
            std::gamma_distribution<double> gamma(1.0 / alpha, alpha * mu);
            lambda = gamma(rng);
        }
        std::poisson_distribution<long> pois(std::max(lambda, 1e-12));
        sim.y(i) = static_cast<double>(pois(rng));
    }
    return sim;
}

struct MixedSim {
    CrossedData data;
    Eigen::VectorXd beta_true;
    double tau2_reg = 0.0;
    double tau2_tld = 0.0;
};

/// Crossed-design Bernoulli outcomes with known variance components.
inline MixedSim simulate_mixed(std::uint64_t seed, int n, int q1, int q2, double tau2_reg,
                               double tau2_tld) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> reg_pick(0, q1 - 1), tld_pick(0, q2 - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    MixedSim sim;
    sim.tau2_reg = tau2_reg;
    sim.tau2_tld = tau2_tld;
    sim.beta_true.resize(3);
    sim.beta_true << 0.3, 0.8, -0.5;

    Eigen::VectorXd u_reg(q1), u_tld(q2);
    for (int j = 0; j < q1; ++j) u_reg(j) = gauss(rng) * std::sqrt(tau2_reg);
    for (int t = 0; t < q2; ++t) u_tld(t) = gauss(rng) * std::sqrt(tau2_tld);

    sim.data.q1 = q1;
    sim.data.q2 = q2;
    sim.data.X.resize(n, 3);
    sim.data.y.resize(n);
    sim.data.g_reg.resize(static_cast<std::size_t>(n));
    sim.data.g_tld.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Round-robin over cells keeps every group populated.
        int jr = i % q1;
        int jt = (i / q1) % q2;
        sim.data.g_reg[static_cast<std::size_t>(i)] = jr;
        sim.data.g_tld[static_cast<std::size_t>(i)] = jt;
        sim.data.X(i, 0) = 1.0;
        sim.data.X(i, 1) = coin(rng) ? 1.0 : 0.0;
        sim.data.X(i, 2) = gauss(rng);
        double eta = sim.data.X.row(i).dot(sim.beta_true) + u_reg(jr) + u_tld(jt);
        sim.data.y(i) = unif(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    }
    return sim;
}

} // namespace oracle
