#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "regscope/domain.hpp"
#include "regscope/time.hpp"

namespace regscope {

enum class DnsOutcome { answered, nxdomain, servfail, timeout };

std::string to_string(DnsOutcome o);
std::optional<DnsOutcome> dns_outcome_from_string(std::string_view s);

/// One scheduled measurement of a blocklisted domain.
struct ProbeResult {
    DomainName domain;
    Duration offset;            // nominal offset since listed_at, >= 0
    DnsOutcome dns_outcome = DnsOutcome::timeout;
    std::set<EppStatus> holds;  // clientHold/serverHold observed at this probe
    bool notified = false;
    Timestamp probed_at;        // actual wall-clock instant
};

/// The mitigation criterion: an authoritative NXDOMAIN answer or an EPP hold.
/// servfail/timeout are unknown, never mitigation.
bool is_dns_mitigated(DnsOutcome outcome, const std::set<EppStatus>& statuses);

namespace dnswire {
/// Wire-format A query with RD set.
std::vector<std::uint8_t> encode_query(std::uint16_t id, const std::string& ascii_name);
/// Outcome class from a response buffer; nullopt when the buffer is not a
/// response to `id` (wrong id, not a response, or too short).
std::optional<DnsOutcome> parse_response(const std::vector<std::uint8_t>& buf, std::uint16_t id);
} // namespace dnswire

/// Live resolver: queries each configured recursive resolver once per probe;
/// disagreement resolves to the non-error answer (answered > nxdomain >
/// servfail > timeout). Throws Error{ResolverUnreachable} when every resolver
/// fails at the transport level.
class LiveResolver {
public:
    explicit LiveResolver(std::vector<std::string> resolver_ips, int timeout_ms = 3000);
    DnsOutcome query_a(const DomainName& domain) const;

private:
    std::vector<std::string> resolvers_;
    int timeout_ms_;
};

/// Recorded DNS answers keyed by domain and instant, for replay. A probe at
/// instant t sees the latest record at or before t.
class ProbeFixtureStore {
public:
    struct Record {
        Timestamp at;
        DnsOutcome outcome;
        std::set<EppStatus> holds;
    };

    static ProbeFixtureStore from_ndjson(const std::string& path);
    void add(const std::string& registered_part, Record record);

    /// Throws Error{NotFoundInStore} when no record exists at or before `at`.
    Record at_or_before(const std::string& registered_part, Timestamp at) const;
    bool has(const std::string& registered_part) const;

private:
    std::map<std::string, std::vector<Record>> records_; // sorted by time per domain
};

enum class ProbeMode { live, fixture };

/// NDJSON probe log round-trip.
std::string probe_result_to_json(const ProbeResult& r);
ProbeResult probe_result_from_json(const std::string& line, const PublicSuffixRuleSet& rules);

} // namespace regscope
