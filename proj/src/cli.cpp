#include "regscope/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "regscope/classify.hpp"
#include "regscope/dnsprobe.hpp"
#include "regscope/errors.hpp"
#include "regscope/features.hpp"
#include "regscope/glm_nb.hpp"
#include "regscope/mlm_logit.hpp"
#include "regscope/regdata.hpp"
#include "regscope/sampler.hpp"
#include "regscope/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace regscope::cli {

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string resolve(const fs::path& base, const std::string& path) {
    if (path.empty()) return path;
    fs::path p(path);
    return p.is_absolute() ? p.string() : (base / p).lexically_normal().string();
}

void require_exists(const std::string& path, const char* what) {
    if (path.empty()) return;
    if (!fs::exists(path))
        throw Error(ErrorCode::Io, std::string(what) + " path does not exist: " + path);
}

} // namespace

PipelineConfig load_config(const std::string& path, const Overrides& overrides) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded())
        throw Error(ErrorCode::SchemaViolation, "config is not valid JSON: " + path);
    fs::path base = fs::absolute(fs::path(path)).parent_path();

    PipelineConfig config;
    const json paths = j.value("paths", json::object());
    for (const auto& feed : paths.value("feeds", json::array())) {
        PipelineConfig::FeedInput input;
        input.path = resolve(base, feed.value("path", ""));
        input.source = feed_source_from_string(feed.value("source", "other"));
        config.feeds.push_back(std::move(input));
    }
    config.shortener_list = resolve(base, paths.value("shortener_list", ""));
    config.subdomain_provider_list = resolve(base, paths.value("subdomain_provider_list", ""));
    for (const auto& f : paths.value("benign_filters", json::array()))
        config.benign_filters.push_back(resolve(base, f.get<std::string>()));
    config.public_suffix_list = resolve(base, paths.value("public_suffix_list", ""));
    config.registrar_aliases = resolve(base, paths.value("registrar_aliases", ""));
    config.payment_groups = resolve(base, paths.value("payment_groups", ""));
    config.document_store = resolve(base, paths.value("document_store", ""));
    config.probe_timeline = resolve(base, paths.value("probe_timeline", ""));
    config.notified_domains = resolve(base, paths.value("notified_domains", ""));
    config.snapshot_dir = resolve(base, paths.value("snapshot_dir", ""));
    config.market_share_report = resolve(base, paths.value("market_share_report", ""));
    config.benign_pool = resolve(base, paths.value("benign_pool", ""));
    for (const auto& id : paths.value("covered_registrars", json::array()))
        config.covered_registrars.push_back(id.get<int>());

    config.window_days = j.value("window_days", 90);
    config.monitor_days = j.value("monitor_days", 30);
    config.seed = j.value("seed", 0ull);
    config.sample_n = j.value("sample_n", 0ull);
    config.live = j.value("mode", "fixture") == std::string("live");
    config.zscore = j.value("scaling", "raw") == std::string("zscore");
    config.censoring =
        j.value("censoring", "capped") == std::string("dropped") ? CensorMode::dropped
                                                                 : CensorMode::capped;
    config.glm_alpha = j.value("glm_alpha", 1.0);
    if (j.contains("residual_sigma2") && !j["residual_sigma2"].is_null())
        config.residual_sigma2 = j["residual_sigma2"].get<double>();
    for (const auto& r : j.value("resolvers", json::array()))
        config.resolvers.push_back(r.get<std::string>());
    config.out_dir = resolve(base, j.value("out", "out"));

    if (overrides.mode) config.live = *overrides.mode == "live";
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.out_dir) config.out_dir = *overrides.out_dir;

    if (config.window_days <= 0 || config.monitor_days <= 0)
        throw Error(ErrorCode::SchemaViolation, "window_days and monitor_days must be positive");
    if (config.glm_alpha < 0)
        throw Error(ErrorCode::SchemaViolation, "glm_alpha must be nonnegative");

    for (const auto& feed : config.feeds) require_exists(feed.path, "feed");
    require_exists(config.shortener_list, "shortener_list");
    require_exists(config.subdomain_provider_list, "subdomain_provider_list");
    for (const auto& f : config.benign_filters) require_exists(f, "benign_filter");
    require_exists(config.public_suffix_list, "public_suffix_list");
    require_exists(config.registrar_aliases, "registrar_aliases");
    require_exists(config.payment_groups, "payment_groups");
    require_exists(config.probe_timeline, "probe_timeline");
    require_exists(config.notified_domains, "notified_domains");
    require_exists(config.snapshot_dir, "snapshot_dir");
    require_exists(config.market_share_report, "market_share_report");
    require_exists(config.benign_pool, "benign_pool");

    // Digest of the effective configuration, recorded into every artifact.
    json effective = j;
    effective["mode"] = config.live ? "live" : "fixture";
    effective["seed"] = config.seed;
    config.config_digest = hex64(fnv1a64(effective.dump()));
    return config;
}

namespace {

// --- Artifact plumbing -------------------------------------------------------

std::string meta_line(const PipelineConfig& config) {
    json meta;
    meta["type"] = "meta";
    meta["tool_version"] = kToolVersion;
    meta["seed"] = config.seed;
    meta["config_digest"] = config.config_digest;
    return meta.dump();
}

std::string meta_comment(const PipelineConfig& config) {
    return std::string("# tool_version=") + kToolVersion + " seed=" + std::to_string(config.seed) +
           " config_digest=" + config.config_digest;
}

/// Artifacts are append-only: each run of a stage writes a fresh vNNN
/// directory next to the previous ones.
fs::path next_version_dir(const PipelineConfig& config, const std::string& stage) {
    fs::path root = fs::path(config.out_dir) / stage;
    fs::create_directories(root);
    int max_v = 0;
    for (const auto& entry : fs::directory_iterator(root)) {
        std::string name = entry.path().filename().string();
        if (name.size() == 4 && name[0] == 'v') max_v = std::max(max_v, std::atoi(name.c_str() + 1));
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "v%03d", max_v + 1);
    fs::path dir = root / buf;
    fs::create_directories(dir);
    return dir;
}

fs::path latest_version_dir(const PipelineConfig& config, const std::string& stage) {
    fs::path root = fs::path(config.out_dir) / stage;
    if (!fs::exists(root))
        throw Error(ErrorCode::Io, "no artifacts for stage '" + stage + "' under " + config.out_dir);
    int max_v = 0;
    for (const auto& entry : fs::directory_iterator(root)) {
        std::string name = entry.path().filename().string();
        if (name.size() == 4 && name[0] == 'v') max_v = std::max(max_v, std::atoi(name.c_str() + 1));
    }
    if (max_v == 0)
        throw Error(ErrorCode::Io, "no artifacts for stage '" + stage + "' under " + config.out_dir);
    char buf[16];
    std::snprintf(buf, sizeof buf, "v%03d", max_v);
    return root / buf;
}

std::vector<json> read_ndjson(const fs::path& path) {
    std::vector<json> out;
    for (const auto& line : read_lines(path.string())) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        if (j.is_object() && j.value("type", "") == "meta") continue;
        out.push_back(std::move(j));
    }
    return out;
}

struct Context {
    PipelineConfig config;
    PublicSuffixRuleSet rules;
    RegistrarAliasTable aliases;

    explicit Context(PipelineConfig cfg)
        : config(std::move(cfg)),
          rules(PublicSuffixRuleSet::from_file(config.public_suffix_list)),
          aliases(config.registrar_aliases.empty()
                      ? RegistrarAliasTable{}
                      : RegistrarAliasTable::from_file(config.registrar_aliases)) {}
};

// --- Stages --------------------------------------------------------------------

int stage_ingest(const Context& ctx) {
    const auto& config = ctx.config;
    if (config.feeds.empty()) throw Error(ErrorCode::SchemaViolation, "config lists no feeds");

    std::vector<std::pair<DomainName, Timestamp>> observations;
    std::map<std::string, std::string> source_of; // registered part -> first feed seen
    std::size_t malformed_total = 0, ip_hosts = 0;
    for (const auto& feed : config.feeds) {
        auto parsed = parse_feed_file(feed.path, feed.source);
        malformed_total += parsed.malformed_count;
        if (parsed.empty_feed_warning)
            std::cerr << "warning: feed " << feed.path << " produced no valid records\n";
        for (const auto& entry : parsed.entries) {
            try {
                auto domain = to_registered_domain(entry, ctx.rules);
                observations.emplace_back(domain, entry.listed_at);
                source_of.emplace(domain.registered_part, to_string(entry.source));
            } catch (const Error& e) {
                if (e.code() == ErrorCode::IpLiteralHost) ++ip_hosts;
                else ++malformed_total;
            }
        }
    }
    auto earliest = dedupe_earliest(observations);

    std::vector<ExclusionList> lists;
    if (!config.shortener_list.empty())
        lists.push_back(ExclusionList::from_file(config.shortener_list,
                                                 ExclusionKind::url_shortener, ctx.rules));
    if (!config.subdomain_provider_list.empty())
        lists.push_back(ExclusionList::from_file(config.subdomain_provider_list,
                                                 ExclusionKind::subdomain_provider, ctx.rules));

    std::vector<DomainName> domains;
    for (const auto& [domain, _] : earliest) domains.push_back(domain);
    auto partition = apply_exclusions(domains, lists);

    std::map<std::string, std::string> verdict;
    for (const auto& d : partition.kept) verdict[d.registered_part] = "none";
    for (const auto& d : partition.excluded_shortener) verdict[d.registered_part] = "shortener";
    for (const auto& d : partition.excluded_subdomain_provider)
        verdict[d.registered_part] = "subdomain_provider";

    auto dir = next_version_dir(config, "ingest");
    std::string out = meta_line(config) + "\n";
    for (const auto& [domain, listed_at] : earliest) {
        json j;
        j["domain"] = domain.registered_part;
        j["tld"] = domain.tld;
        j["listed_at"] = format_timestamp(listed_at);
        j["source"] = source_of.at(domain.registered_part);
        j["exclusion"] = verdict.at(domain.registered_part);
        out += j.dump() + "\n";
    }
    write_file((dir / "domains.ndjson").string(), out);

    json summary;
    summary["unique_domains"] = earliest.size();
    summary["kept"] = partition.kept.size();
    summary["excluded_shortener"] = partition.excluded_shortener.size();
    summary["excluded_subdomain_provider"] = partition.excluded_subdomain_provider.size();
    summary["malformed_lines"] = malformed_total;
    summary["ip_literal_hosts"] = ip_hosts;
    write_file((dir / "summary.json").string(), summary.dump(2) + "\n");
    std::cout << "ingest: " << earliest.size() << " unique domains -> " << dir.string() << "\n";
    return 0;
}

int stage_regdata(Context& ctx) {
    const auto& config = ctx.config;
    auto ingest = read_ndjson(latest_version_dir(config, "ingest") / "domains.ndjson");
    if (config.document_store.empty())
        throw Error(ErrorCode::SchemaViolation, "config has no document_store");

    DocumentStore store(config.document_store);
    RegistrationFetcher fetcher(store);
    FetchMode mode = config.live ? FetchMode::live : FetchMode::fixture;

    auto dir = next_version_dir(config, "regdata");
    std::string out = meta_line(config) + "\n";
    std::size_t fetched = 0, missing = 0;
    for (const auto& row : ingest) {
        if (row.value("exclusion", "none") != "none") continue; // excluded domains skip fetching
        auto domain = normalize_domain(row.at("domain").get<std::string>(), ctx.rules);
        auto listed_at = parse_timestamp(row.at("listed_at").get<std::string>());
        json j;
        j["domain"] = domain.registered_part;
        try {
            auto doc = fetcher.fetch(domain, mode, listed_at);
            auto rec = parse_registration_document(doc);
            auto family = ctx.aliases.family(rec.registrar.iana_id);
            j["created_at"] = rec.created_at ? format_timestamp(*rec.created_at) : "";
            j["registrar_iana"] = family.iana_id;
            j["registrar_iana_raw"] = rec.registrar.iana_id;
            j["registrar_name"] =
                family.display_name.empty() ? rec.registrar.display_name : family.display_name;
            auto statuses = json::array();
            for (const auto& s : rec.statuses) statuses.push_back(to_string(s));
            j["statuses"] = statuses;
            j["queried_at"] = format_timestamp(rec.queried_at);
            j["protocol"] = to_string(rec.protocol);
            j["parse_ok"] = rec.parse_ok && !whois_no_match(doc.body);
            ++fetched;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NotFoundInStore) throw;
            j["created_at"] = "";
            j["registrar_iana"] = kUnknownIanaId;
            j["parse_ok"] = false;
            ++missing;
        }
        out += j.dump() + "\n";
    }
    write_file((dir / "registrations.ndjson").string(), out);
    std::cout << "regdata: " << fetched << " records (" << missing << " without documents) -> "
              << dir.string() << "\n";
    return 0;
}

int stage_probe(const Context& ctx) {
    const auto& config = ctx.config;
    auto ingest = read_ndjson(latest_version_dir(config, "ingest") / "domains.ndjson");

    std::set<std::string> notified;
    if (!config.notified_domains.empty())
        for (const auto& line : read_lines(config.notified_domains)) {
            auto t = trim(line);
            if (!t.empty() && t.front() != '#')
                notified.insert(normalize_domain(t, ctx.rules).registered_part);
        }

    std::optional<ProbeFixtureStore> timeline;
    std::optional<LiveResolver> resolver;
    std::optional<DocumentStore> store;
    std::optional<RegistrationFetcher> fetcher;
    if (config.live) {
        if (config.resolvers.size() < 2)
            throw Error(ErrorCode::SchemaViolation, "live probing needs two resolver addresses");
        resolver.emplace(config.resolvers);
        // Registration data is re-fetched on the probe schedule so hold
        // statuses track the DNS observations.
        if (!config.document_store.empty()) {
            store.emplace(config.document_store);
            fetcher.emplace(*store);
        }
    } else {
        if (config.probe_timeline.empty())
            throw Error(ErrorCode::SchemaViolation, "fixture probing needs a probe_timeline");
        timeline = ProbeFixtureStore::from_ndjson(config.probe_timeline);
    }

    auto schedule = build_schedule(config.monitor_days);
    auto dir = next_version_dir(config, "probe");
    std::string out = meta_line(config) + "\n";
    std::size_t probes = 0;
    for (const auto& row : ingest) {
        if (row.value("exclusion", "none") != "none") continue;
        auto domain = normalize_domain(row.at("domain").get<std::string>(), ctx.rules);
        auto listed_at = *parse_timestamp(row.at("listed_at").get<std::string>());
        for (Duration offset : schedule.offsets) {
            ProbeResult r;
            r.domain = domain;
            r.offset = offset;
            r.probed_at = listed_at + offset;
            r.notified = notified.count(domain.registered_part) > 0;
            if (config.live) {
                r.dns_outcome = resolver->query_a(domain);
                if (fetcher) {
                    try {
                        auto rec = parse_registration_document(
                            fetcher->fetch(domain, FetchMode::live));
                        for (const auto& s : rec.statuses)
                            if (is_hold(s)) r.holds.insert(s);
                    } catch (const Error&) {
                        // DNS outcome stands on its own when the fetch fails.
                    }
                }
            } else {
                try {
                    auto rec = timeline->at_or_before(domain.registered_part, r.probed_at);
                    r.dns_outcome = rec.outcome;
                    r.holds = rec.holds;
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::NotFoundInStore) throw;
                    continue; // replay gap: no recorded state yet
                }
            }
            out += probe_result_to_json(r) + "\n";
            ++probes;
        }
    }
    write_file((dir / "probes.ndjson").string(), out);
    std::cout << "probe: " << probes << " probe records -> " << dir.string() << "\n";
    return 0;
}

struct JoinedInputs {
    std::vector<CorpusInput> corpus;
    std::map<std::string, Timestamp> listed;
    std::map<std::string, int> registrar; // family iana per domain
};

JoinedInputs join_corpus(const Context& ctx) {
    const auto& config = ctx.config;
    auto ingest = read_ndjson(latest_version_dir(config, "ingest") / "domains.ndjson");
    auto regdata = read_ndjson(latest_version_dir(config, "regdata") / "registrations.ndjson");
    auto probe_lines = read_lines((latest_version_dir(config, "probe") / "probes.ndjson").string());

    std::map<std::string, RegistrationRecord> registrations;
    std::map<std::string, int> registrar;
    for (const auto& row : regdata) {
        RegistrationRecord rec;
        auto name = row.at("domain").get<std::string>();
        rec.domain = normalize_domain(name, ctx.rules);
        auto created = row.value("created_at", "");
        if (!created.empty()) rec.created_at = parse_timestamp(created);
        rec.registrar.iana_id = row.value("registrar_iana", kUnknownIanaId);
        rec.parse_ok = row.value("parse_ok", false);
        if (!rec.parse_ok) rec.created_at.reset();
        registrations[name] = rec;
        registrar[name] = rec.registrar.iana_id;
    }

    std::map<std::string, std::vector<ProbeResult>> probes;
    for (const auto& line : probe_lines) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        if (j.is_object() && j.value("type", "") == "meta") continue;
        auto r = probe_result_from_json(line, ctx.rules);
        probes[r.domain.registered_part].push_back(std::move(r));
    }
    for (auto& [_, v] : probes)
        std::sort(v.begin(), v.end(),
                  [](const ProbeResult& a, const ProbeResult& b) { return a.offset < b.offset; });

    JoinedInputs joined;
    for (const auto& row : ingest) {
        CorpusInput input;
        auto name = row.at("domain").get<std::string>();
        input.domain = normalize_domain(name, ctx.rules);
        input.listed_at = *parse_timestamp(row.at("listed_at").get<std::string>());
        auto verdict = row.value("exclusion", "none");
        input.exclusion = verdict == "shortener" ? ExclusionVerdict::shortener
                          : verdict == "subdomain_provider" ? ExclusionVerdict::subdomain_provider
                                                            : ExclusionVerdict::none;
        if (auto it = registrations.find(name); it != registrations.end()) input.reg = it->second;
        else input.reg.domain = input.domain;
        if (auto it = probes.find(name); it != probes.end()) input.probes = it->second;
        joined.listed[name] = input.listed_at;
        joined.corpus.push_back(std::move(input));
    }
    joined.registrar = std::move(registrar);
    return joined;
}

int stage_classify(const Context& ctx) {
    const auto& config = ctx.config;
    auto joined = join_corpus(ctx);

    ClassifyParams params;
    params.window_days = config.window_days;
    params.monitor_days = config.monitor_days;
    for (int id : config.covered_registrars)
        params.covered_registrars.insert(ctx.aliases.family(id).iana_id);

    auto summary = classify_corpus(joined.corpus, params);

    auto dir = next_version_dir(config, "classify");
    std::string out = meta_line(config) + "\n";
    std::map<Label, std::string> per_label;
    for (const auto& c : summary.classified) {
        auto line = classified_to_json(c) + "\n";
        out += line;
        auto& bucket = per_label[c.label];
        if (bucket.empty()) bucket = meta_line(config) + "\n";
        bucket += line;
    }
    write_file((dir / "classified.ndjson").string(), out);
    fs::create_directories(dir / "labels");
    for (const auto& [label, content] : per_label)
        write_file((dir / "labels" / (to_string(label) + ".ndjson")).string(), content);

    json counts;
    for (const auto& [label, count] : summary.counts) counts[to_string(label)] = count;
    write_file((dir / "counts.json").string(), counts.dump(2) + "\n");
    std::cout << "classify: " << summary.classified.size() << " domains";
    if (summary.counts.count(Label::MaliciouslyRegistered))
        std::cout << ", " << summary.counts.at(Label::MaliciouslyRegistered)
                  << " maliciously registered";
    std::cout << " -> " << dir.string() << "\n";
    return 0;
}

int stage_uptime(const Context& ctx) {
    const auto& config = ctx.config;
    auto joined = join_corpus(ctx);
    auto classified = read_ndjson(latest_version_dir(config, "classify") / "classified.ndjson");

    std::set<std::string> malicious;
    for (const auto& row : classified)
        if (row.at("label").get<std::string>() == "MaliciouslyRegistered")
            malicious.insert(row.at("domain").get<std::string>());

    Duration horizon = days(config.monitor_days);
    std::map<std::pair<int, std::string>, std::vector<UptimeRecord>> groups;
    auto dir = next_version_dir(config, "uptime");
    std::string out = meta_line(config) + "\n";
    for (const auto& input : joined.corpus) {
        const auto& name = input.domain.registered_part;
        if (!malicious.count(name) || input.probes.empty()) continue;
        auto record = compute_uptime(input.listed_at, input.probes, horizon);
        json j;
        j["domain"] = name;
        j["uptime_s"] = record.uptime.secs;
        j["censored"] = record.censored;
        j["notified"] = record.notified;
        out += j.dump() + "\n";
        groups[{joined.registrar.count(name) ? joined.registrar.at(name) : kUnknownIanaId,
                input.domain.tld}]
            .push_back(std::move(record));
    }
    write_file((dir / "uptimes.ndjson").string(), out);

    auto table = build_uptime_table(groups, config.censoring);
    write_file((dir / "uptime_table.csv").string(),
               meta_comment(config) + "\n" + uptime_table_to_csv(table));
    std::cout << "uptime: " << table.size() << " registrar-TLD medians -> " << dir.string() << "\n";
    return 0;
}

int stage_sample(const Context& ctx) {
    const auto& config = ctx.config;
    if (config.benign_pool.empty())
        throw Error(ErrorCode::SchemaViolation, "config has no benign_pool");
    if (config.market_share_report.empty())
        throw Error(ErrorCode::SchemaViolation, "config has no market_share_report");
    if (config.sample_n == 0)
        throw Error(ErrorCode::SchemaViolation, "config has no sample_n");

    std::vector<ExclusionList> filters;
    for (const auto& f : config.benign_filters)
        filters.push_back(ExclusionList::from_file(f, ExclusionKind::url_shortener, ctx.rules));

    std::map<int, std::vector<DomainName>> pool;
    std::map<std::string, json> rows;
    std::size_t filtered = 0;
    for (const auto& row : read_ndjson(fs::path(config.benign_pool))) {
        auto domain = normalize_domain(row.at("domain").get<std::string>(), ctx.rules);
        bool blocked = false;
        for (const auto& f : filters)
            if (f.contains(domain)) blocked = true;
        if (blocked) {
            ++filtered;
            continue;
        }
        int family = ctx.aliases.family(row.value("registrar_iana", kUnknownIanaId)).iana_id;
        pool[family].push_back(domain);
        auto stored = row;
        stored["registrar_iana"] = family;
        rows[domain.registered_part] = std::move(stored);
    }

    auto shares = load_market_shares(config.market_share_report);
    // Shares are reported per raw IANA ID; collapse to families.
    MarketShareTable family_shares;
    family_shares.as_of = shares.as_of;
    for (const auto& [id, share] : shares.shares)
        family_shares.shares[ctx.aliases.family(id).iana_id] += share;

    auto sample = stratified_sample(pool, family_shares, config.sample_n, config.seed);

    auto dir = next_version_dir(config, "sample");
    std::string out = meta_line(config) + "\n";
    for (const auto& domain : sample) out += rows.at(domain.registered_part).dump() + "\n";
    write_file((dir / "benign_sample.ndjson").string(), out);
    std::cout << "sample: " << sample.size() << " benign domains (" << filtered
              << " filtered by blocklists) -> " << dir.string() << "\n";
    return 0;
}

struct UptimeMedians {
    std::map<std::pair<int, std::string>, double> notified;
    std::map<std::pair<int, std::string>, double> not_notified;
};

UptimeMedians load_uptime_medians(const Context& ctx) {
    UptimeMedians medians;
    auto table =
        uptime_table_from_csv((latest_version_dir(ctx.config, "uptime") / "uptime_table.csv").string());
    for (const auto& row : table) {
        auto key = std::make_pair(row.registrar_iana, row.tld);
        if (row.filter == NotifiedFilter::notified)
            medians.notified[key] = static_cast<double>(row.median.secs);
        else if (row.filter == NotifiedFilter::not_notified)
            medians.not_notified[key] = static_cast<double>(row.median.secs);
    }
    return medians;
}

int stage_features(const Context& ctx) {
    const auto& config = ctx.config;
    if (config.snapshot_dir.empty())
        throw Error(ErrorCode::SchemaViolation, "config has no snapshot_dir");
    auto store = SnapshotStore::load_snapshots(config.snapshot_dir);
    auto payments = config.payment_groups.empty() ? PaymentGroups::defaults()
                                                  : PaymentGroups::from_file(config.payment_groups);
    auto medians = load_uptime_medians(ctx);

    auto classified = read_ndjson(latest_version_dir(config, "classify") / "classified.ndjson");
    auto regdata = read_ndjson(latest_version_dir(config, "regdata") / "registrations.ndjson");
    std::map<std::string, std::pair<int, std::optional<Timestamp>>> registration; // family, created
    for (const auto& row : regdata) {
        std::optional<Timestamp> created;
        auto text = row.value("created_at", "");
        if (!text.empty()) created = parse_timestamp(text);
        registration[row.at("domain").get<std::string>()] = {
            row.value("registrar_iana", kUnknownIanaId), created};
    }

    auto engineer = [&](const DomainName& domain, int family,
                        Timestamp created) -> DomainFeatures {
        const auto& snap = store.nearest_prior(family, domain.tld, created);
        auto key = std::make_pair(family, domain.tld);
        std::optional<double> up_n, up_nn;
        if (auto it = medians.notified.find(key); it != medians.notified.end()) up_n = it->second;
        if (auto it = medians.not_notified.find(key); it != medians.not_notified.end())
            up_nn = it->second;
        return DomainFeatures{domain, family, domain.tld,
                              aggregate(snap, up_n, up_nn, payments)};
    };

    std::vector<DomainFeatures> malicious;
    std::vector<std::string> unjoinable;
    std::vector<std::tuple<std::string, FeatureSnapshot>> attribute_rows;
    for (const auto& row : classified) {
        if (row.at("label").get<std::string>() != "MaliciouslyRegistered") continue;
        auto name = row.at("domain").get<std::string>();
        auto domain = normalize_domain(name, ctx.rules);
        auto it = registration.find(name);
        if (it == registration.end() || !it->second.second) {
            unjoinable.push_back(name);
            continue;
        }
        try {
            malicious.push_back(engineer(domain, it->second.first, *it->second.second));
            attribute_rows.emplace_back(
                name, store.nearest_prior(it->second.first, domain.tld, *it->second.second));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::MissingCoverage) throw;
            unjoinable.push_back(name);
        }
    }
    if (!unjoinable.empty()) {
        std::string joined_names;
        for (const auto& n : unjoinable) joined_names += (joined_names.empty() ? "" : ", ") + n;
        throw Error(ErrorCode::JoinFailure, "domains without snapshot coverage: " + joined_names);
    }

    auto dir = next_version_dir(config, "features");
    auto count_rows = build_count_table(malicious);
    write_file((dir / "count_table.csv").string(),
               meta_comment(config) + "\n" + count_table_to_csv(count_rows));

    // Plot-ready attribute extract per malicious domain.
    {
        std::string out = meta_comment(config) +
                          "\ndomain,price_register,price_renewal,price_transfer,discount_register,"
                          "discount_renewal,discount_transfer,free_dns,free_whois_privacy,free_api,"
                          "free_bulk_search,free_email_forward,free_email_account,free_ssl_cert,"
                          "free_dnssec,free_web_hosting\n";
        for (const auto& [name, snap] : attribute_rows) {
            out += csv_escape(name);
            for (const char* col : {"price_register", "price_renewal", "price_transfer",
                                    "discount_register", "discount_renewal", "discount_transfer"})
                out += "," + format_double(snap.get(col));
            auto flag = [&](bool b) { out += b ? ",1" : ",0"; };
            flag(snap.flag("free_dns"));
            flag(snap.get("price_whois_privacy") == 0.0);
            flag(snap.flag("free_api"));
            flag(snap.get("free_bulk_search_number") > 0.0);
            flag(snap.flag("free_email_forward"));
            flag(snap.flag("free_email_account"));
            flag(snap.flag("free_ssl_cert"));
            flag(snap.flag("free_dnssec"));
            flag(snap.flag("free_web_hosting"));
            out += "\n";
        }
        write_file((dir / "domain_attributes.csv").string(), out);
    }

    // Domain-level rows need the benign sample; Model 1 alone does not.
    bool have_sample = fs::exists(fs::path(config.out_dir) / "sample");
    if (have_sample) {
        std::vector<DomainFeatures> benign;
        auto sample = read_ndjson(latest_version_dir(config, "sample") / "benign_sample.ndjson");
        for (const auto& row : sample) {
            auto domain = normalize_domain(row.at("domain").get<std::string>(), ctx.rules);
            int family = ctx.aliases.family(row.value("registrar_iana", kUnknownIanaId)).iana_id;
            auto created = parse_timestamp(row.value("created_at", ""));
            if (!created)
                throw Error(ErrorCode::JoinFailure,
                            "benign domain without created_at: " + domain.registered_part);
            benign.push_back(engineer(domain, family, *created));
        }
        auto domain_rows = build_domain_rows(malicious, benign);
        // Raw predictor values; z-scoring (when configured) happens at model
        // assembly in fit-mlm so the artifact stays in natural units.
        write_file((dir / "domain_rows.csv").string(),
                   meta_comment(config) + "\n" + domain_rows_to_csv(domain_rows));
    }
    std::cout << "features: " << count_rows.size() << " registrar-TLD rows ("
              << malicious.size() << " malicious domains"
              << (have_sample ? ", benign sample joined" : "") << ") -> " << dir.string() << "\n";
    return 0;
}

int stage_fit_glm(const Context& ctx) {
    const auto& config = ctx.config;
    auto design_path = latest_version_dir(config, "features") / "count_table.csv";
    auto D = DesignMatrix::from_csv(design_path.string(), "malicious", engineered_feature_names());

    auto fit = fit_nb_glm(D, config.glm_alpha);
    DesignMatrix null_design{Eigen::MatrixXd::Ones(D.X.rows(), 1), D.y, {"Intercept"}};
    auto null_fit = fit_nb_glm(null_design, config.glm_alpha);
    double r2 = pseudo_r2_cs(fit, null_fit, fit.n_obs);

    auto dir = next_version_dir(config, "fit-glm");
    write_file((dir / "glm_coefficients.csv").string(),
               meta_comment(config) + "\n" + summarize(fit, {.csv = true}));
    char head[512];
    std::snprintf(head, sizeof head,
                  "Model: GLM\nModel Family: NegativeBinomial\nLink Function: Log\n"
                  "Method: IRLS\nNo. Observations: %zu\nDf Residuals: %ld\nDf Model: %ld\n"
                  "Scale: %.4f\nLog-Likelihood: %.4f\nDeviance: %.4f\nNo. Iterations: %d\n"
                  "Pseudo R-squ. (CS): %.4f\n\n",
                  fit.n_obs, static_cast<long>(D.X.rows() - D.X.cols()),
                  static_cast<long>(D.X.cols() - 1), fit.alpha, fit.loglik, fit.deviance,
                  fit.iterations, r2);
    write_file((dir / "glm_summary.txt").string(), head + summarize(fit));
    std::cout << "fit-glm: " << fit.n_obs << " rows, pseudo R2 (CS) " << r2 << " -> "
              << dir.string() << "\n";
    if (!fit.converged) {
        std::cerr << "fit-glm: estimator did not converge\n";
        return 3;
    }
    return 0;
}

int stage_fit_mlm(const Context& ctx) {
    const auto& config = ctx.config;
    auto rows_path = latest_version_dir(config, "features") / "domain_rows.csv";
    if (!fs::exists(rows_path))
        throw Error(ErrorCode::Io, "no domain_rows.csv: run `sample` before `features`");

    // Assemble the crossed design from the CSV.
    auto lines = read_lines(rows_path.string());
    std::size_t first = 0;
    while (first < lines.size() && (lines[first].empty() || lines[first][0] == '#')) ++first;
    auto header = split_csv(lines[first]);
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < header.size(); ++i) pos[header[i]] = i;
    const auto& feature_names = engineered_feature_names();

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = first + 1; i < lines.size(); ++i)
        if (!lines[i].empty() && lines[i][0] != '#') rows.push_back(split_csv(lines[i]));

    std::map<std::string, int> reg_index, tld_index;
    for (const auto& row : rows) {
        reg_index.emplace(row.at(pos.at("registrar_iana")), 0);
        tld_index.emplace(row.at(pos.at("tld")), 0);
    }
    int next = 0;
    for (auto& [_, idx] : reg_index) idx = next++;
    next = 0;
    for (auto& [_, idx] : tld_index) idx = next++;

    MixedDesign D;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(feature_names.size()) + 1;
    D.X.resize(n, p);
    D.y.resize(n);
    D.g_reg.resize(rows.size());
    D.g_tld.resize(rows.size());
    D.names.push_back("Intercept");
    for (const auto& f : feature_names) D.names.push_back(f);
    for (const auto& [label, idx] : reg_index) {
        (void)idx;
        D.reg_labels.push_back(label);
    }
    for (const auto& [label, idx] : tld_index) {
        (void)idx;
        D.tld_labels.push_back(label);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        D.y(i) = std::stod(row.at(pos.at("malicious")));
        D.X(i, 0) = 1.0;
        for (std::size_t j = 0; j < feature_names.size(); ++j)
            D.X(i, static_cast<Eigen::Index>(j) + 1) = std::stod(row.at(pos.at(feature_names[j])));
        D.g_reg[static_cast<std::size_t>(i)] = reg_index.at(row.at(pos.at("registrar_iana")));
        D.g_tld[static_cast<std::size_t>(i)] = tld_index.at(row.at(pos.at("tld")));
    }
    if (config.zscore) {
        for (Eigen::Index j = 1; j < p; ++j) {
            bool binary = true;
            for (Eigen::Index i = 0; i < n && binary; ++i)
                binary = D.X(i, j) == 0.0 || D.X(i, j) == 1.0;
            if (binary) continue;
            double mean = D.X.col(j).mean();
            double sd = std::sqrt((D.X.col(j).array() - mean).square().sum() /
                                  std::max<double>(1.0, static_cast<double>(n - 1)));
            if (sd > 0) D.X.col(j) = (D.X.col(j).array() - mean) / sd;
        }
    }

    auto fit = fit_mixed_logit(D);
    auto mode = config.residual_sigma2 ? ResidualMode::supplied : ResidualMode::latent_logistic;
    double sigma2 = config.residual_sigma2.value_or(0.0);

    auto dir = next_version_dir(config, "fit-mlm");
    write_file((dir / "mlm_report.txt").string(), mixed_report(fit, D, mode, sigma2));
    write_file((dir / "mlm_report.csv").string(),
               meta_comment(config) + "\n" + mixed_report(fit, D, mode, sigma2, true));
    for (auto factor : {GroupFactor::registrar, GroupFactor::tld}) {
        std::string out = meta_comment(config) + "\nlabel,group,intercept\n";
        auto anon = extract_random_effects(fit, factor, D);
        auto named = extract_random_effects(fit, factor, D, false);
        for (std::size_t i = 0; i < anon.size(); ++i)
            out += anon[i].first + "," + csv_escape(named[i].first) + "," +
                   format_double(anon[i].second) + "\n";
        write_file((dir / (factor == GroupFactor::registrar ? "random_effects_registrar.csv"
                                                            : "random_effects_tld.csv"))
                       .string(),
                   out);
    }
    std::cout << "fit-mlm: " << n << " rows, " << D.n_reg_groups() << " registrars, "
              << D.n_tld_groups() << " TLDs -> " << dir.string() << "\n";
    if (!fit.converged) {
        std::cerr << "fit-mlm: outer optimization did not converge\n";
        return 3;
    }
    return 0;
}

int stage_report(const Context& ctx) {
    const auto& config = ctx.config;
    auto dir = next_version_dir(config, "report");

    // Effect table from the count-model coefficients.
    {
        auto path = latest_version_dir(config, "fit-glm") / "glm_coefficients.csv";
        auto lines = read_lines(path.string());
        std::string out = meta_comment(config) + "\nname,coef,exp_effect_pct,effect\n";
        bool header_seen = false;
        for (const auto& line : lines) {
            if (line.empty() || line[0] == '#') continue;
            if (!header_seen) {
                header_seen = true;
                continue;
            }
            auto f = split_csv(line);
            double coef = std::stod(f.at(1));
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s,%.6g,%.1f,%s\n", csv_escape(f.at(0)).c_str(), coef,
                          exp_effect(coef), format_effect(coef).c_str());
            out += buf;
        }
        write_file((dir / "effects.csv").string(), out);
    }

    fs::create_directories(dir / "plots");
    auto features_dir = latest_version_dir(config, "features");

    // Price and discount distributions per malicious domain.
    {
        auto lines = read_lines((features_dir / "domain_attributes.csv").string());
        std::string prices = meta_comment(config) + "\ndomain,kind,value\n";
        std::string discounts = meta_comment(config) + "\ndomain,kind,value\n";
        std::string free_counts;
        std::map<std::string, std::size_t> free_tally;
        const std::vector<std::string> free_names = {
            "free_dns",          "free_whois_privacy", "free_api",
            "free_bulk_search",  "free_email_forward", "free_email_account",
            "free_ssl_cert",     "free_dnssec",        "free_web_hosting"};
        bool header_seen = false;
        std::map<std::string, std::size_t> pos;
        for (const auto& line : lines) {
            if (line.empty() || line[0] == '#') continue;
            auto f = split_csv(line);
            if (!header_seen) {
                header_seen = true;
                for (std::size_t i = 0; i < f.size(); ++i) pos[f[i]] = i;
                continue;
            }
            const auto& domain = f.at(pos.at("domain"));
            for (const char* kind : {"register", "renewal", "transfer"}) {
                prices += csv_escape(domain) + "," + kind + "," +
                          f.at(pos.at(std::string("price_") + kind)) + "\n";
                discounts += csv_escape(domain) + "," + kind + "," +
                             f.at(pos.at(std::string("discount_") + kind)) + "\n";
            }
            for (const auto& name : free_names)
                if (f.at(pos.at(name)) == "1") ++free_tally[name];
        }
        write_file((dir / "plots" / "prices.csv").string(), prices);
        write_file((dir / "plots" / "discounts.csv").string(), discounts);
        free_counts = meta_comment(config) + "\nfeature,registrations\n";
        for (const auto& name : free_names)
            free_counts += name + "," + std::to_string(free_tally[name]) + "\n";
        write_file((dir / "plots" / "free_features.csv").string(), free_counts);
    }

    // Uptime CDFs for notified and not-notified domains.
    {
        auto uptimes = read_ndjson(latest_version_dir(config, "uptime") / "uptimes.ndjson");
        std::vector<double> notified, not_notified;
        for (const auto& row : uptimes)
            (row.value("notified", false) ? notified : not_notified)
                .push_back(row.at("uptime_s").get<double>());
        std::string out = meta_comment(config) + "\ngroup,uptime_s,cum_fraction\n";
        auto emit = [&](const char* group, std::vector<double> values) {
            std::sort(values.begin(), values.end());
            for (std::size_t i = 0; i < values.size(); ++i) {
                out += std::string(group) + "," + format_double(values[i]) + "," +
                       format_double(static_cast<double>(i + 1) /
                                     static_cast<double>(values.size())) +
                       "\n";
            }
        };
        emit("notified", notified);
        emit("not_notified", not_notified);
        write_file((dir / "plots" / "uptime_cdf.csv").string(), out);
    }

    // Histogram of malicious counts per registrar-TLD pair.
    {
        auto lines = read_lines((features_dir / "count_table.csv").string());
        std::map<long, std::size_t> hist;
        bool header_seen = false;
        std::map<std::string, std::size_t> pos;
        for (const auto& line : lines) {
            if (line.empty() || line[0] == '#') continue;
            auto f = split_csv(line);
            if (!header_seen) {
                header_seen = true;
                for (std::size_t i = 0; i < f.size(); ++i) pos[f[i]] = i;
                continue;
            }
            ++hist[std::stol(f.at(pos.at("malicious")))];
        }
        std::string out = meta_comment(config) + "\nmalicious_count,pairs\n";
        for (const auto& [count, pairs] : hist)
            out += std::to_string(count) + "," + std::to_string(pairs) + "\n";
        write_file((dir / "plots" / "count_hist.csv").string(), out);
    }

    std::cout << "report: effect table and plot data -> " << dir.string() << "\n";
    return 0;
}

int error_exit_code(const Error& e) {
    switch (e.code()) {
    case ErrorCode::RankDeficient:
        return 3;
    default:
        return 2;
    }
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"regscope: measurement and regression toolkit for maliciously registered domains"};
    app.require_subcommand(1);

    std::string config_path, mode, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "pipeline configuration JSON")->required();
    app.add_option("--mode", mode, "live or fixture")->check(CLI::IsMember({"live", "fixture"}));
    app.add_option("--seed", seed, "override the pipeline seed")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--out", out_dir, "artifact output directory");

    const std::vector<std::string> stages = {"ingest",  "regdata", "probe",   "classify",
                                             "uptime",  "sample",  "features", "fit-glm",
                                             "fit-mlm", "report"};
    std::map<std::string, CLI::App*> subs;
    for (const auto& name : stages) {
        subs[name] = app.add_subcommand(name);
        subs[name]->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        Overrides overrides;
        if (!mode.empty()) overrides.mode = mode;
        if (seed_set) overrides.seed = seed;
        if (!out_dir.empty()) overrides.out_dir = out_dir;
        Context ctx(load_config(config_path, overrides));

        for (const auto& name : stages) {
            if (!subs.at(name)->parsed()) continue;
            if (name == "ingest") return stage_ingest(ctx);
            if (name == "regdata") return stage_regdata(ctx);
            if (name == "probe") return stage_probe(ctx);
            if (name == "classify") return stage_classify(ctx);
            if (name == "uptime") return stage_uptime(ctx);
            if (name == "sample") return stage_sample(ctx);
            if (name == "features") return stage_features(ctx);
            if (name == "fit-glm") return stage_fit_glm(ctx);
            if (name == "fit-mlm") return stage_fit_mlm(ctx);
            if (name == "report") return stage_report(ctx);
        }
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return error_exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace regscope::cli
