#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "regscope/feed.hpp"
#include "regscope/uptime.hpp"

namespace regscope::cli {

/// Pipeline configuration: a JSON document plus flag overrides
/// (flags > file > defaults). Relative paths resolve against the config
/// file's directory; every referenced path must exist at load.
struct PipelineConfig {
    struct FeedInput {
        std::string path;
        FeedSource source = FeedSource::other;
    };
    std::vector<FeedInput> feeds;
    std::string shortener_list;
    std::string subdomain_provider_list;
    std::vector<std::string> benign_filters; // blocklist files applied to the benign pool
    std::string public_suffix_list;
    std::string registrar_aliases;
    std::string payment_groups;
    std::string document_store;
    std::string probe_timeline;
    std::string notified_domains;
    std::string snapshot_dir;
    std::string market_share_report;
    std::string benign_pool;
    std::vector<int> covered_registrars;

    int window_days = 90;
    int monitor_days = 30;
    std::uint64_t seed = 0;
    std::size_t sample_n = 0;
    bool live = false;
    bool zscore = false;
    CensorMode censoring = CensorMode::capped;
    double glm_alpha = 1.0;
    std::optional<double> residual_sigma2; // unset selects the latent-logistic convention
    std::vector<std::string> resolvers;

    std::string out_dir = "out";
    std::string config_digest; // FNV-1a of the effective configuration
};

struct Overrides {
    std::optional<std::string> mode; // "live" | "fixture"
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

PipelineConfig load_config(const std::string& path, const Overrides& overrides = {});

/// Entry point shared by the binary and the tests. argv follows
/// `regscope <subcommand> --config <path> [--mode ...] [--seed ...] [--out ...]`.
/// Exit codes: 0 success, 1 usage, 2 input/schema, 3 convergence/quality.
int run(int argc, const char* const* argv);

} // namespace regscope::cli
