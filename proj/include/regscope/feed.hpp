#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "regscope/domain.hpp"
#include "regscope/time.hpp"

namespace regscope {

enum class FeedSource { APWG, PhishTank, OpenPhish, other };

FeedSource feed_source_from_string(std::string_view s);
std::string to_string(FeedSource s);

/// One blocklist observation: an absolute URL plus the instant it was listed.
struct BlocklistEntry {
    std::string url;
    FeedSource source = FeedSource::other;
    Timestamp listed_at;
};

struct FeedParseResult {
    std::vector<BlocklistEntry> entries;
    std::size_t malformed_count = 0;
    bool empty_feed_warning = false; // zero valid records is a warning, not an error
};

/// Feed files are `listed_at,url` CSV lines. Defanged `hxxp`/`hxxps` schemes
/// are reversed; bracketed-dot defanging is counted as malformed. Malformed
/// lines are skipped and counted. Throws Error{Io} for unreadable files.
FeedParseResult parse_feed_file(const std::string& path, FeedSource source);

/// Host component of an absolute URL, with userinfo and port stripped.
/// Returns empty when the URL has no host.
std::string url_host(std::string_view url);

bool is_ip_literal(std::string_view host);

/// Registered domain of the entry's URL host.
/// Throws Error{IpLiteralHost} for IP hosts; propagates normalize_domain errors.
DomainName to_registered_domain(const BlocklistEntry& entry, const PublicSuffixRuleSet& rules);

enum class ExclusionKind { url_shortener, subdomain_provider };

/// Curated registered-domain lists; membership is on registered_part equality.
struct ExclusionList {
    ExclusionKind kind;
    std::set<std::string> domains; // registered parts

    static ExclusionList from_file(const std::string& path, ExclusionKind kind,
                                   const PublicSuffixRuleSet& rules);
    bool contains(const DomainName& d) const { return domains.count(d.registered_part) > 0; }
};

struct ExclusionPartition {
    std::vector<DomainName> kept;
    std::vector<DomainName> excluded_shortener;
    std::vector<DomainName> excluded_subdomain_provider;
};

/// Each input lands in exactly one bucket; shortener lists take precedence
/// over provider lists when a domain appears in both.
ExclusionPartition apply_exclusions(const std::vector<DomainName>& domains,
                                    const std::vector<ExclusionList>& lists);

/// Earliest listing instant per domain; defines t0 for the registration window
/// and for uptime measurement.
std::map<DomainName, Timestamp> dedupe_earliest(
    const std::vector<std::pair<DomainName, Timestamp>>& entries);

} // namespace regscope
