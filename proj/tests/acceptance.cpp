// Acceptance suite: one pass/fail line per criterion. Returns the number of
// failed criteria, so a zero exit is a fully green run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fixture_corpus.hpp"
#include "oracles.hpp"
#include "regscope/classify.hpp"
#include "regscope/glm_nb.hpp"
#include "regscope/mlm_logit.hpp"
#include "regscope/regdata.hpp"
#include "regscope/sampler.hpp"
#include "regscope/uptime.hpp"

using namespace regscope;

namespace {

int failures = 0;

void report(int number, const char* name, bool ok, const std::string& detail = "") {
    std::printf("%s  criterion %2d  %s%s%s\n", ok ? "PASS" : "FAIL", number, name,
                detail.empty() ? "" : ": ", detail.c_str());
    if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const PublicSuffixRuleSet& rules() {
    static PublicSuffixRuleSet set = PublicSuffixRuleSet::from_file(
        std::string(REGSCOPE_SOURCE_DIR) + "/data/public_suffix_list.dat");
    return set;
}

// 1. Exponentiated-coefficient interpretation of the published count model.
void criterion_effect_interpretation() {
    auto start = std::chrono::steady_clock::now();
    const std::vector<std::pair<double, double>> cases = {
        {0.3979, 49.0},  {1.6080, 401.0}, {-1.0053, -63.0}, {-1.2143, -70.0}, {1.1134, 205.0},
        {0.6323, 88.0},  {-1.6688, -81.0}, {0.2609, 30.0},  {-1.3446, -74.0},
    };
    bool ok = true;
    std::string detail;
    for (const auto& [coef, narrative] : cases) {
        double effect = exp_effect(coef);
        if (std::abs(effect - narrative) > 2.0) {
            ok = false;
            detail += " " + std::to_string(coef) + "->" + std::to_string(effect);
        }
    }
    double elapsed = seconds_since(start);
    if (elapsed >= 1.0) {
        ok = false;
        detail += " runtime " + std::to_string(elapsed) + "s";
    }
    report(1, "effect interpretation within 2pp of the narrative", ok, detail);
}

// 2. Odds arithmetic of the domain-level model.
void criterion_odds_arithmetic() {
    double ten_dollar = exp_effect(0.013 * 10.0);
    double restriction = exp_effect(-0.210);
    bool ok = std::abs(ten_dollar - 13.8) <= 0.1 && std::abs(restriction - (-19.0)) <= 0.5;
    char buf[96];
    std::snprintf(buf, sizeof buf, "+%.2f%% and %.2f%%", ten_dollar, restriction);
    report(2, "odds arithmetic (13.8% / about -19%)", ok, buf);
}

// 3. Estimator recovery over 100 seeded synthetic count datasets.
void criterion_nb_recovery() {
    const int seeds = 100;
    std::size_t covered = 0, total = 0;
    bool monotone = true, fast = true, all_converged = true;
    double worst_fit_s = 0.0;
    for (int seed = 1; seed <= seeds; ++seed) {
        auto sim = oracle::simulate_nb(static_cast<std::uint64_t>(seed), 1066, 1.0);
        auto start = std::chrono::steady_clock::now();
        auto fit = fit_nb_glm(DesignMatrix{sim.X, sim.y, sim.names}, 1.0);
        double elapsed = seconds_since(start);
        worst_fit_s = std::max(worst_fit_s, elapsed);
        if (elapsed >= 10.0) fast = false;
        if (!fit.converged) all_converged = false;
        for (std::size_t i = 1; i < fit.deviance_trace.size(); ++i)
            if (fit.deviance_trace[i] > fit.deviance_trace[i - 1] + 1e-9) monotone = false;
        for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
            ++total;
            if (sim.beta_true(j) >= fit.ci95(j, 0) && sim.beta_true(j) <= fit.ci95(j, 1))
                ++covered;
        }
    }
    double coverage = 100.0 * static_cast<double>(covered) / static_cast<double>(total);
    bool ok = coverage >= 90.0 && coverage <= 99.0 && fast && monotone && all_converged;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "coverage %.1f%% over %zu intervals, slowest fit %.2fs, deviance %s", coverage,
                  total, worst_fit_s, monotone ? "monotone" : "NOT monotone");
    report(3, "NB-GLM 95% CI coverage in [90,99] over 100 seeds", ok, buf);
}

// 4. Laplace fit against the adaptive quadrature oracle on the crossed fixture.
void criterion_mixed_oracle() {
    auto start = std::chrono::steady_clock::now();
    auto sim = oracle::simulate_mixed(42, 400, 4, 5, 0.25, 0.09);
    MixedDesign D;
    D.X = sim.data.X;
    D.y = sim.data.y;
    D.g_reg = sim.data.g_reg;
    D.g_tld = sim.data.g_tld;
    D.names = {"Intercept", "flag", "score"};

    auto fit = fit_mixed_logit(D);
    double ghq_at_fit = oracle::ghq_loglik(sim.data, fit.beta, fit.tau2_reg, fit.tau2_tld, 12);
    auto oracle_fit = oracle::ghq_fit(sim.data, oracle::logistic_irls(D.X, D.y), 10);

    double loglik_gap = std::abs(fit.loglik - ghq_at_fit);
    double rel_reg = std::abs(fit.tau2_reg - oracle_fit.tau2_reg) / oracle_fit.tau2_reg;
    double rel_tld = std::abs(fit.tau2_tld - oracle_fit.tau2_tld) / oracle_fit.tau2_tld;
    bool beta_ok = true;
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
        if (std::abs(fit.beta(j) - oracle_fit.beta(j)) > 2.0 * oracle_fit.se(j)) beta_ok = false;
    double elapsed = seconds_since(start);

    bool ok = fit.converged && loglik_gap <= 1e-2 && rel_reg <= 0.25 && rel_tld <= 0.25 &&
              beta_ok && elapsed < 60.0;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "loglik gap %.2e, tau2 rel err (%.1f%%, %.1f%%), beta within 2 oracle SEs: %s, "
                  "%.1fs",
                  loglik_gap, 100 * rel_reg, 100 * rel_tld, beta_ok ? "yes" : "no", elapsed);
    report(4, "mixed-logit matches the quadrature oracle", ok, buf);
}

// 5. Degenerate reductions of both estimators.
void criterion_degenerate() {
    auto nb = oracle::simulate_nb(101, 400, 0.0);
    auto fit = fit_nb_glm(DesignMatrix{nb.X, nb.y, nb.names}, 0.0, 1e-12, 200);
    double poisson_gap = (fit.beta - oracle::poisson_irls(nb.X, nb.y)).lpNorm<Eigen::Infinity>();

    auto mixed = oracle::simulate_mixed(2024, 1500, 4, 5, 0.0, 0.0);
    MixedDesign D;
    D.X = mixed.data.X;
    D.y = mixed.data.y;
    D.g_reg = mixed.data.g_reg;
    D.g_tld = mixed.data.g_tld;
    D.names = {"Intercept", "flag", "score"};
    auto mfit = fit_mixed_logit(D);
    double logistic_gap = (mfit.beta - oracle::logistic_irls(D.X, D.y)).lpNorm<Eigen::Infinity>();

    bool ok = poisson_gap < 1e-6 && logistic_gap < 1e-4;
    char buf[120];
    std::snprintf(buf, sizeof buf, "poisson gap %.2e, logistic gap %.2e (tau2 = %.1e, %.1e)",
                  poisson_gap, logistic_gap, mfit.tau2_reg, mfit.tau2_tld);
    report(5, "alpha->0 and tau2=0 reductions", ok, buf);
}

// 6. The probing schedule, offset for offset.
void criterion_schedule() {
    auto s = build_schedule(30);
    const std::vector<Duration> lead = {Duration{0}, minutes(5),  minutes(15), minutes(30),
                                        hours(1),    hours(2),    hours(3),    hours(4),
                                        hours(5),    hours(6),    hours(12),   hours(24),
                                        hours(36),   hours(48)};
    bool ok = s.offsets.size() == 70;
    for (std::size_t i = 0; i < lead.size() && ok; ++i) ok = s.offsets[i] == lead[i];
    for (std::size_t i = 14; i < s.offsets.size() && ok; ++i)
        ok = s.offsets[i] == hours(60) + hours(12) * static_cast<std::int64_t>(i - 14);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu offsets", s.offsets.size());
    report(6, "probe schedule is exactly the published one", ok, buf);
}

// 7. Hand-labeled classification fixture, partition, and shuffle invariance.
void criterion_classifier() {
    auto corpus = fixture::make_labeled_corpus(rules());
    auto reference = classify_corpus(corpus.inputs, corpus.params);

    bool labels_ok = reference.classified.size() == corpus.inputs.size();
    for (const auto& c : reference.classified)
        if (corpus.expected.at(c.domain.registered_part) != c.label) labels_ok = false;

    std::size_t count_sum = 0;
    for (const auto& [label, count] : reference.counts) count_sum += count;
    bool partition_ok = count_sum == corpus.inputs.size();

    bool shuffle_ok = true;
    std::mt19937 shuffler(1234);
    for (int round = 0; round < 50 && shuffle_ok; ++round) {
        auto shuffled = corpus.inputs;
        std::shuffle(shuffled.begin(), shuffled.end(), shuffler);
        auto summary = classify_corpus(shuffled, corpus.params);
        for (std::size_t i = 0; i < summary.classified.size(); ++i) {
            if (summary.classified[i].domain.ascii_name !=
                    reference.classified[i].domain.ascii_name ||
                summary.classified[i].label != reference.classified[i].label)
                shuffle_ok = false;
        }
    }
    bool ok = labels_ok && partition_ok && shuffle_ok;
    char buf[160];
    std::snprintf(buf, sizeof buf, "labels %s, partition %s, 50 shuffles %s",
                  labels_ok ? "exact" : "WRONG", partition_ok ? "complete" : "BROKEN",
                  shuffle_ok ? "invariant" : "UNSTABLE");
    report(7, "classifier determinism and funnel audit", ok, buf);
}

// 8. Sampling determinism and hand-computed quotas.
void criterion_sampling() {
    std::map<int, std::vector<DomainName>> pool;
    for (int reg : {1, 2, 3}) {
        std::vector<DomainName> stratum;
        for (int i = 0; i < 50; ++i)
            stratum.push_back(normalize_domain(
                "s" + std::to_string(reg) + "d" + std::to_string(i) + ".com", rules()));
        pool[reg] = std::move(stratum);
    }
    MarketShareTable shares;
    shares.shares = {{1, 0.5}, {2, 0.3}, {3, 0.2}};

    auto reference = stratified_sample(pool, shares, 20, 9001);
    bool identical = true;
    for (int run = 0; run < 10 && identical; ++run) {
        auto again = stratified_sample(pool, shares, 20, 9001);
        if (again.size() != reference.size()) identical = false;
        for (std::size_t i = 0; i < reference.size() && identical; ++i)
            if (again[i].ascii_name != reference[i].ascii_name) identical = false;
    }

    struct Case {
        std::map<int, double> shares;
        std::size_t n;
        std::map<int, std::size_t> expected;
    };
    std::map<int, std::size_t> pool_sizes = {{1, 100}, {2, 100}, {3, 100}, {4, 100}};
    const std::vector<Case> cases = {
        {{{1, 0.5}, {2, 0.5}}, 10, {{1, 5}, {2, 5}}},
        {{{1, 0.6}, {2, 0.4}}, 5, {{1, 3}, {2, 2}}},
        {{{1, 0.65}, {2, 0.35}}, 7, {{1, 5}, {2, 2}}},
        {{{1, 1.0 / 3}, {2, 1.0 / 3}, {3, 1.0 / 3}}, 10, {{1, 4}, {2, 3}, {3, 3}}},
        {{{1, 0.519}, {2, 0.346}, {3, 0.135}}, 11, {{1, 6}, {2, 4}, {3, 1}}},
    };
    bool quotas_ok = true;
    for (const auto& c : cases)
        if (apportion_quotas(c.shares, pool_sizes, c.n) != c.expected) quotas_ok = false;

    bool ok = identical && quotas_ok;
    char buf[120];
    std::snprintf(buf, sizeof buf, "10 runs %s, 5 hand-computed quota tables %s",
                  identical ? "byte-identical" : "DIVERGED", quotas_ok ? "match" : "MISMATCH");
    report(8, "stratified sampling determinism and quotas", ok, buf);
}

// 9. Total parsing over the recorded registration-data corpus.
void criterion_parsers() {
    DocumentStore store(std::string(REGSCOPE_SOURCE_DIR) + "/tests/fixtures/store");
    std::size_t documents = 0, parse_failures = 0, pairs = 0, disagreements = 0;
    for (const auto& name : store.domains()) {
        auto domain = normalize_domain(name, rules());
        std::optional<RegistrationRecord> whois_rec, rdap_rec;
        for (const auto& doc : store.all(domain)) {
            ++documents;
            try {
                auto rec = parse_registration_document(doc);
                if (doc.protocol == RegProtocol::whois) whois_rec = rec;
                else rdap_rec = rec;
            } catch (...) {
                ++parse_failures;
            }
        }
        if (whois_rec && rdap_rec) {
            ++pairs;
            auto holds = [](const RegistrationRecord& r) {
                std::set<EppStatus> h;
                for (const auto& s : r.statuses)
                    if (is_hold(s)) h.insert(s);
                return h;
            };
            if (whois_rec->created_at != rdap_rec->created_at ||
                whois_rec->registrar.iana_id != rdap_rec->registrar.iana_id ||
                holds(*whois_rec) != holds(*rdap_rec))
                ++disagreements;
        }
    }
    bool ok = documents > 0 && parse_failures == 0 && pairs > 0 && disagreements == 0;
    char buf[140];
    std::snprintf(buf, sizeof buf, "%zu documents, %zu failures, %zu pairs, %zu disagreements",
                  documents, parse_failures, pairs, disagreements);
    report(9, "registration-data parser robustness and pair agreement", ok, buf);
}

// 10. Cox-Snell identities at machine-level tolerance.
void criterion_cox_snell() {
    GlmFit fit, null_fit;
    fit.n_obs = null_fit.n_obs = 1000;
    fit.y_sum = null_fit.y_sum = 42.0;
    null_fit.loglik = -700.0;

    fit.loglik = null_fit.loglik;
    double zero = pseudo_r2_cs(fit, null_fit, 1000);
    fit.loglik = null_fit.loglik + 500.0; // n/2
    double characteristic = pseudo_r2_cs(fit, null_fit, 1000);

    bool ok = std::abs(zero) <= 1e-9 &&
              std::abs(characteristic - (1.0 - std::exp(-1.0))) <= 1e-9;
    char buf[96];
    std::snprintf(buf, sizeof buf, "null gap -> %.1e, n/2 gap -> %.10f", zero, characteristic);
    report(10, "Cox-Snell identity checks", ok, buf);
}

} // namespace

int main() {
    criterion_effect_interpretation();
    criterion_odds_arithmetic();
    criterion_nb_recovery();
    criterion_mixed_oracle();
    criterion_degenerate();
    criterion_schedule();
    criterion_classifier();
    criterion_sampling();
    criterion_parsers();
    criterion_cox_snell();
    std::printf("%s: %d of 10 criteria failed\n", failures == 0 ? "OK" : "FAILED", failures);
    return failures;
}
