#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "regscope/domain.hpp"
#include "regscope/time.hpp"

namespace regscope {

enum class RegProtocol { whois, rdap, fixture };

std::string to_string(RegProtocol p);

/// Registration facts recovered from WHOIS text or an RDAP document.
/// Unknown fields stay at their defaults; parse_ok is false only when no
/// recognized key was found at all.
struct RegistrationRecord {
    DomainName domain;
    std::optional<Timestamp> created_at;
    RegistrarKey registrar;
    std::set<EppStatus> statuses;
    Timestamp queried_at;
    RegProtocol protocol = RegProtocol::fixture;
    bool parse_ok = true;
};

/// Verbatim response body, persisted for replay.
struct RawRegistrationDocument {
    DomainName domain;
    std::string body;
    RegProtocol protocol = RegProtocol::whois;
    Timestamp fetched_at;
};

/// Filesystem-backed store of raw registration documents:
///   <root>/<registered_part>/<fetched_at>.whois.txt
///   <root>/<registered_part>/<fetched_at>.rdap.json
/// fetched_at uses the basic ISO form (20230814T021109Z). One writer, many
/// readers.
class DocumentStore {
public:
    explicit DocumentStore(std::string root) : root_(std::move(root)) {}

    void put(const RawRegistrationDocument& doc);

    /// Document whose fetched_at is nearest `at` (ties prefer RDAP). Without
    /// `at`, the most recent document. Throws Error{NotFoundInStore}.
    RawRegistrationDocument nearest(const DomainName& domain,
                                    std::optional<Timestamp> at = std::nullopt) const;

    std::vector<RawRegistrationDocument> all(const DomainName& domain) const;
    std::vector<std::string> domains() const;
    const std::string& root() const { return root_; }

private:
    std::string root_;
    mutable std::mutex write_mutex_;
};

// --- Parsing -----------------------------------------------------------------

/// Registration-data keys recognized in WHOIS text. The defaults cover the
/// ICANN-mandated labels; per-TLD dialects (e.g. the .uk registry) add their
/// own key spellings.
struct WhoisKeySet {
    std::vector<std::string> creation_keys;
    std::vector<std::string> iana_keys;
    std::vector<std::string> status_keys;
    std::vector<std::string> registrar_keys;
};

class WhoisPatternTable {
public:
    static WhoisPatternTable with_defaults();
    void add_dialect(const std::string& tld, WhoisKeySet keys);
    const WhoisKeySet& for_tld(const std::string& tld) const;

private:
    WhoisKeySet default_keys_;
    std::map<std::string, WhoisKeySet> per_tld_;
};

/// Total over arbitrary text: unknown fields default to UNKNOWN and a body
/// with no recognized key at all yields parse_ok = false, never a throw.
RegistrationRecord parse_whois_text(const RawRegistrationDocument& doc,
                                    const WhoisPatternTable& patterns = WhoisPatternTable::with_defaults());

/// Parses an RDAP domain object. Throws Error{MalformedDocument} when the body
/// is not JSON or lacks objectClassName "domain".
RegistrationRecord parse_rdap_document(const RawRegistrationDocument& doc);

RegistrationRecord parse_registration_document(const RawRegistrationDocument& doc,
                                               const WhoisPatternTable& patterns = WhoisPatternTable::with_defaults());

// --- Fetching ----------------------------------------------------------------

enum class FetchMode { live, fixture };

/// Per-endpoint token bucket. Live fetchers take one token per request and
/// sleep until one is available.
class TokenBucket {
public:
    TokenBucket(double tokens_per_second, double burst)
        : rate_(tokens_per_second), burst_(burst), tokens_(burst),
          last_(std::chrono::steady_clock::now()) {}

    /// Blocks until a token is available. Returns the wait in milliseconds.
    long acquire();

private:
    double rate_, burst_, tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

/// Transport seams so the referral logic is testable without sockets.
struct WhoisTransport {
    virtual ~WhoisTransport() = default;
    /// Raw response of `query` against `server` on TCP 43.
    virtual std::string query(const std::string& server, const std::string& query_text) = 0;
};

struct RdapTransport {
    virtual ~RdapTransport() = default;
    struct Response {
        int status = 0;
        std::string body;
    };
    virtual Response get_domain(const std::string& name) = 0;
};

std::unique_ptr<WhoisTransport> make_socket_whois_transport(int timeout_ms = 10000);
std::unique_ptr<RdapTransport> make_http_rdap_transport(const std::string& base_url,
                                                        int timeout_ms = 10000);

struct FetcherConfig {
    std::string rdap_base_url = "https://rdap.org";
    std::string whois_root_server = "whois.iana.org";
    int max_referral_hops = 3;
    int retries = 2;
    double rate_per_endpoint = 2.0; // requests per second
};

/// Obtains registration data. Live mode tries RDAP first and falls back to
/// the WHOIS referral chain; every live response is persisted to the store
/// before it is returned. Fixture mode replays the store.
class RegistrationFetcher {
public:
    RegistrationFetcher(DocumentStore& store, FetcherConfig config = {});

    /// Injectable transports for tests.
    void set_transports(std::unique_ptr<WhoisTransport> whois, std::unique_ptr<RdapTransport> rdap);

    RawRegistrationDocument fetch(const DomainName& domain, FetchMode mode,
                                  std::optional<Timestamp> at = std::nullopt);

private:
    RawRegistrationDocument fetch_live(const DomainName& domain);

    DocumentStore& store_;
    FetcherConfig config_;
    std::unique_ptr<WhoisTransport> whois_;
    std::unique_ptr<RdapTransport> rdap_;
    std::map<std::string, std::unique_ptr<TokenBucket>> buckets_;
    std::mutex bucket_mutex_;
    std::function<Timestamp()> clock_;

public:
    void set_clock(std::function<Timestamp()> clock) { clock_ = std::move(clock); }
};

/// Registry "no match" markers (domain not registered).
bool whois_no_match(std::string_view body);

} // namespace regscope
