#include "regscope/feed.hpp"

#include <algorithm>
#include <cctype>

#include "regscope/errors.hpp"
#include "regscope/text.hpp"

namespace regscope {

FeedSource feed_source_from_string(std::string_view s) {
    if (iequals_ascii(s, "apwg")) return FeedSource::APWG;
    if (iequals_ascii(s, "phishtank")) return FeedSource::PhishTank;
    if (iequals_ascii(s, "openphish")) return FeedSource::OpenPhish;
    return FeedSource::other;
}

std::string to_string(FeedSource s) {
    switch (s) {
    case FeedSource::APWG: return "APWG";
    case FeedSource::PhishTank: return "PhishTank";
    case FeedSource::OpenPhish: return "OpenPhish";
    case FeedSource::other: return "other";
    }
    return "other";
}

namespace {

/// Reverses scheme-level defanging only. Returns false when the URL carries
/// bracketed-dot defanging, which we refuse to guess about.
bool refang(std::string& url) {
    if (url.find("[.]") != std::string::npos || url.find("(.)") != std::string::npos)
        return false;
    if (istarts_with_ascii(url, "hxxps://"))
        url = "https://" + url.substr(8);
    else if (istarts_with_ascii(url, "hxxp://"))
        url = "http://" + url.substr(7);
    return true;
}

} // namespace

std::string url_host(std::string_view url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) return "";
    std::string_view rest = url.substr(scheme_end + 3);
    auto end = rest.find_first_of("/?#");
    std::string_view authority = end == std::string_view::npos ? rest : rest.substr(0, end);
    auto at = authority.rfind('@');
    if (at != std::string_view::npos) authority = authority.substr(at + 1);
    if (!authority.empty() && authority.front() == '[') {
        auto close = authority.find(']');
        if (close == std::string_view::npos) return "";
        return std::string(authority.substr(0, close + 1));
    }
    auto colon = authority.find(':');
    if (colon != std::string_view::npos) authority = authority.substr(0, colon);
    return std::string(authority);
}

bool is_ip_literal(std::string_view host) {
    if (host.empty()) return false;
    if (host.front() == '[') return true; // IPv6
    auto labels = split(host, '.');
    if (labels.size() != 4) return false;
    for (const auto& l : labels) {
        if (l.empty() || l.size() > 3) return false;
        for (char c : l)
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        if (std::stoi(l) > 255) return false;
    }
    return true;
}

FeedParseResult parse_feed_file(const std::string& path, FeedSource source) {
    FeedParseResult result;
    for (const auto& raw : read_lines(path)) {
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto comma = line.find(',');
        if (comma == std::string_view::npos) {
            ++result.malformed_count;
            continue;
        }
        auto when = parse_timestamp(line.substr(0, comma));
        std::string url(trim(line.substr(comma + 1))); // URLs may embed commas only after the host
        if (!when || url.empty() || !refang(url) || url_host(url).empty()) {
            ++result.malformed_count;
            continue;
        }
        result.entries.push_back(BlocklistEntry{std::move(url), source, *when});
    }
    result.empty_feed_warning = result.entries.empty();
    return result;
}

DomainName to_registered_domain(const BlocklistEntry& entry, const PublicSuffixRuleSet& rules) {
    std::string host = url_host(entry.url);
    if (host.empty()) throw Error(ErrorCode::MalformedName, "URL without host: " + entry.url);
    if (is_ip_literal(host)) throw Error(ErrorCode::IpLiteralHost, host);
    return normalize_domain(host, rules);
}

ExclusionList ExclusionList::from_file(const std::string& path, ExclusionKind kind,
                                       const PublicSuffixRuleSet& rules) {
    ExclusionList list{kind, {}};
    for (const auto& raw : read_lines(path)) {
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        list.domains.insert(normalize_domain(line, rules).registered_part);
    }
    return list;
}

ExclusionPartition apply_exclusions(const std::vector<DomainName>& domains,
                                    const std::vector<ExclusionList>& lists) {
    ExclusionPartition out;
    for (const auto& d : domains) {
        bool shortener = false, provider = false;
        for (const auto& list : lists) {
            if (!list.contains(d)) continue;
            (list.kind == ExclusionKind::url_shortener ? shortener : provider) = true;
        }
        if (shortener)
            out.excluded_shortener.push_back(d);
        else if (provider)
            out.excluded_subdomain_provider.push_back(d);
        else
            out.kept.push_back(d);
    }
    return out;
}

std::map<DomainName, Timestamp> dedupe_earliest(
    const std::vector<std::pair<DomainName, Timestamp>>& entries) {
    std::map<DomainName, Timestamp> out;
    for (const auto& [domain, at] : entries) {
        auto [it, inserted] = out.emplace(domain, at);
        if (!inserted && at < it->second) it->second = at;
    }
    return out;
}

} // namespace regscope
