#include "regscope/dnsprobe.hpp"

#include <algorithm>
#include <cstring>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <json.hpp>

#include "regscope/errors.hpp"
#include "regscope/text.hpp"

namespace regscope {

std::string to_string(DnsOutcome o) {
    switch (o) {
    case DnsOutcome::answered: return "answered";
    case DnsOutcome::nxdomain: return "nxdomain";
    case DnsOutcome::servfail: return "servfail";
    case DnsOutcome::timeout: return "timeout";
    }
    return "timeout";
}

std::optional<DnsOutcome> dns_outcome_from_string(std::string_view s) {
    if (s == "answered") return DnsOutcome::answered;
    if (s == "nxdomain") return DnsOutcome::nxdomain;
    if (s == "servfail") return DnsOutcome::servfail;
    if (s == "timeout") return DnsOutcome::timeout;
    return std::nullopt;
}

bool is_dns_mitigated(DnsOutcome outcome, const std::set<EppStatus>& statuses) {
    return outcome == DnsOutcome::nxdomain || any_hold(statuses);
}

namespace dnswire {

std::vector<std::uint8_t> encode_query(std::uint16_t id, const std::string& ascii_name) {
    std::vector<std::uint8_t> buf;
    buf.push_back(static_cast<std::uint8_t>(id >> 8));
    buf.push_back(static_cast<std::uint8_t>(id & 0xff));
    buf.push_back(0x01); // RD
    buf.push_back(0x00);
    buf.push_back(0x00); buf.push_back(0x01); // QDCOUNT = 1
    for (int i = 0; i < 6; ++i) buf.push_back(0x00); // AN/NS/AR counts

    for (const auto& label : split(ascii_name, '.')) {
        buf.push_back(static_cast<std::uint8_t>(label.size()));
        for (char c : label) buf.push_back(static_cast<std::uint8_t>(c));
    }
    buf.push_back(0x00);          // root
    buf.push_back(0x00); buf.push_back(0x01); // QTYPE A
    buf.push_back(0x00); buf.push_back(0x01); // QCLASS IN
    return buf;
}

std::optional<DnsOutcome> parse_response(const std::vector<std::uint8_t>& buf, std::uint16_t id) {
    if (buf.size() < 12) return std::nullopt;
    std::uint16_t rid = static_cast<std::uint16_t>((buf[0] << 8) | buf[1]);
    if (rid != id) return std::nullopt;
    if (!(buf[2] & 0x80)) return std::nullopt; // QR must be set
    std::uint8_t rcode = buf[3] & 0x0f;
    switch (rcode) {
    case 0: return DnsOutcome::answered;  // NOERROR (with or without records)
    case 3: return DnsOutcome::nxdomain;  // authoritative name error
    default: return DnsOutcome::servfail; // SERVFAIL, REFUSED, FORMERR, ...
    }
}

} // namespace dnswire

LiveResolver::LiveResolver(std::vector<std::string> resolver_ips, int timeout_ms)
    : resolvers_(std::move(resolver_ips)), timeout_ms_(timeout_ms) {}

namespace {

std::optional<DnsOutcome> query_one(const std::string& resolver_ip, const DomainName& domain,
                                    int timeout_ms) {
    int fd = socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) return std::nullopt;
    struct sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(53);
    if (inet_pton(AF_INET, resolver_ip.c_str(), &addr.sin_addr) != 1) {
        close(fd);
        return std::nullopt;
    }
    struct timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
    setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);

    std::uint16_t id = static_cast<std::uint16_t>(0x517a ^ fnv1a64(domain.ascii_name));
    auto query = dnswire::encode_query(id, domain.ascii_name);
    if (sendto(fd, query.data(), query.size(), 0, reinterpret_cast<sockaddr*>(&addr),
               sizeof addr) < 0) {
        close(fd);
        return std::nullopt;
    }
    std::vector<std::uint8_t> buf(1500);
    ssize_t n = recv(fd, buf.data(), buf.size(), 0);
    close(fd);
    if (n <= 0) return DnsOutcome::timeout;
    buf.resize(static_cast<std::size_t>(n));
    return dnswire::parse_response(buf, id);
}

int outcome_rank(DnsOutcome o) {
    switch (o) {
    case DnsOutcome::answered: return 0;
    case DnsOutcome::nxdomain: return 1;
    case DnsOutcome::servfail: return 2;
    case DnsOutcome::timeout: return 3;
    }
    return 3;
}

} // namespace

DnsOutcome LiveResolver::query_a(const DomainName& domain) const {
    std::optional<DnsOutcome> best;
    bool any_reachable = false;
    for (const auto& ip : resolvers_) {
        auto outcome = query_one(ip, domain, timeout_ms_);
        if (!outcome) continue;
        any_reachable = true;
        if (!best || outcome_rank(*outcome) < outcome_rank(*best)) best = outcome;
    }
    if (!any_reachable)
        throw Error(ErrorCode::ResolverUnreachable, "all resolvers failed for " + domain.ascii_name);
    return *best;
}

// --- ProbeFixtureStore ---------------------------------------------------------

ProbeFixtureStore ProbeFixtureStore::from_ndjson(const std::string& path) {
    ProbeFixtureStore store;
    for (const auto& line : read_lines(path)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        if (j.contains("type") && j["type"] == "meta") continue;
        Record rec;
        auto at = parse_timestamp(j.at("at").get<std::string>());
        if (!at) throw Error(ErrorCode::SchemaViolation, "bad timestamp in " + path);
        rec.at = *at;
        auto outcome = dns_outcome_from_string(j.at("dns").get<std::string>());
        if (!outcome) throw Error(ErrorCode::SchemaViolation, "bad dns outcome in " + path);
        rec.outcome = *outcome;
        for (const auto& h : j.value("holds", nlohmann::json::array()))
            rec.holds.insert(parse_epp_status(h.get<std::string>()));
        store.add(j.at("domain").get<std::string>(), std::move(rec));
    }
    return store;
}

void ProbeFixtureStore::add(const std::string& registered_part, Record record) {
    auto& v = records_[registered_part];
    v.push_back(std::move(record));
    std::sort(v.begin(), v.end(), [](const Record& a, const Record& b) { return a.at < b.at; });
}

bool ProbeFixtureStore::has(const std::string& registered_part) const {
    return records_.count(registered_part) > 0;
}

ProbeFixtureStore::Record ProbeFixtureStore::at_or_before(const std::string& registered_part,
                                                          Timestamp at) const {
    auto it = records_.find(registered_part);
    if (it == records_.end())
        throw Error(ErrorCode::NotFoundInStore, "no recorded probes for " + registered_part);
    const Record* best = nullptr;
    for (const auto& rec : it->second) {
        if (rec.at > at) break;
        best = &rec;
    }
    if (!best)
        throw Error(ErrorCode::NotFoundInStore,
                    "no recorded probe at or before " + format_timestamp(at) + " for " + registered_part);
    return *best;
}

// --- Probe log NDJSON ----------------------------------------------------------

std::string probe_result_to_json(const ProbeResult& r) {
    nlohmann::json j;
    j["domain"] = r.domain.registered_part;
    j["offset_s"] = r.offset.secs;
    j["dns"] = to_string(r.dns_outcome);
    auto holds = nlohmann::json::array();
    for (const auto& h : r.holds) holds.push_back(to_string(h));
    j["holds"] = holds;
    j["notified"] = r.notified;
    j["probed_at"] = format_timestamp(r.probed_at);
    return j.dump();
}

ProbeResult probe_result_from_json(const std::string& line, const PublicSuffixRuleSet& rules) {
    nlohmann::json j = nlohmann::json::parse(line);
    ProbeResult r;
    r.domain = normalize_domain(j.at("domain").get<std::string>(), rules);
    r.offset = Duration{j.at("offset_s").get<std::int64_t>()};
    auto outcome = dns_outcome_from_string(j.at("dns").get<std::string>());
    if (!outcome) throw Error(ErrorCode::SchemaViolation, "bad dns outcome: " + line);
    r.dns_outcome = *outcome;
    for (const auto& h : j.value("holds", nlohmann::json::array()))
        r.holds.insert(parse_epp_status(h.get<std::string>()));
    r.notified = j.value("notified", false);
    if (auto at = parse_timestamp(j.value("probed_at", ""))) r.probed_at = *at;
    return r;
}

} // namespace regscope
