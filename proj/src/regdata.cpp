#include "regscope/regdata.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <thread>

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <json.hpp>
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#endif

#include "regscope/errors.hpp"
#include "regscope/text.hpp"

namespace fs = std::filesystem;

namespace regscope {

std::string to_string(RegProtocol p) {
    switch (p) {
    case RegProtocol::whois: return "whois";
    case RegProtocol::rdap: return "rdap";
    case RegProtocol::fixture: return "fixture";
    }
    return "fixture";
}

// --- DocumentStore -----------------------------------------------------------

void DocumentStore::put(const RawRegistrationDocument& doc) {
    std::lock_guard lock(write_mutex_);
    fs::path dir = fs::path(root_) / doc.domain.registered_part;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string());
    std::string ext = doc.protocol == RegProtocol::rdap ? ".rdap.json" : ".whois.txt";
    write_file((dir / (format_timestamp_basic(doc.fetched_at) + ext)).string(), doc.body);
}

std::vector<RawRegistrationDocument> DocumentStore::all(const DomainName& domain) const {
    std::vector<RawRegistrationDocument> docs;
    fs::path dir = fs::path(root_) / domain.registered_part;
    if (!fs::exists(dir)) return docs;
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& path : paths) {
        std::string name = path.filename().string();
        RawRegistrationDocument doc;
        doc.domain = domain;
        if (name.size() > 10 && name.ends_with(".whois.txt")) {
            doc.protocol = RegProtocol::whois;
            name.resize(name.size() - 10);
        } else if (name.size() > 10 && name.ends_with(".rdap.json")) {
            doc.protocol = RegProtocol::rdap;
            name.resize(name.size() - 10);
        } else {
            continue;
        }
        auto when = parse_timestamp(name);
        if (!when) continue;
        doc.fetched_at = *when;
        doc.body = read_file(path.string());
        docs.push_back(std::move(doc));
    }
    return docs;
}

RawRegistrationDocument DocumentStore::nearest(const DomainName& domain,
                                               std::optional<Timestamp> at) const {
    auto docs = all(domain);
    if (docs.empty())
        throw Error(ErrorCode::NotFoundInStore, domain.registered_part + " in " + root_);
    if (!at) return docs.back();
    const RawRegistrationDocument* best = nullptr;
    std::int64_t best_gap = 0;
    for (const auto& doc : docs) {
        std::int64_t gap = std::llabs(doc.fetched_at.secs - at->secs);
        bool better = !best || gap < best_gap ||
                      (gap == best_gap && doc.protocol == RegProtocol::rdap &&
                       best->protocol != RegProtocol::rdap);
        if (better) {
            best = &doc;
            best_gap = gap;
        }
    }
    return *best;
}

std::vector<std::string> DocumentStore::domains() const {
    std::vector<std::string> out;
    if (!fs::exists(root_)) return out;
    for (const auto& entry : fs::directory_iterator(root_))
        if (entry.is_directory()) out.push_back(entry.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

// --- WHOIS parsing -----------------------------------------------------------

WhoisPatternTable WhoisPatternTable::with_defaults() {
    WhoisPatternTable table;
    table.default_keys_ = WhoisKeySet{
        {"Creation Date:", "Created Date:", "Registered On:", "created:"},
        {"Registrar IANA ID:", "Sponsoring Registrar IANA ID:"},
        {"Domain Status:", "Status:"},
        {"Registrar:", "Sponsoring Registrar:"},
    };
    // .uk registry dialect: "    Registered on: 28-Oct-2008"
    table.per_tld_["uk"] = WhoisKeySet{
        {"Registered on:", "Creation Date:"},
        {"Registrar IANA ID:"},
        {"Registration status:", "Domain Status:"},
        {"Registrar:"},
    };
    return table;
}

void WhoisPatternTable::add_dialect(const std::string& tld, WhoisKeySet keys) {
    per_tld_[tld] = std::move(keys);
}

const WhoisKeySet& WhoisPatternTable::for_tld(const std::string& tld) const {
    auto it = per_tld_.find(tld);
    if (it != per_tld_.end()) return it->second;
    // Multi-label suffixes fall back to their rightmost label (co.uk -> uk).
    auto dot = tld.rfind('.');
    if (dot != std::string::npos) {
        it = per_tld_.find(tld.substr(dot + 1));
        if (it != per_tld_.end()) return it->second;
    }
    return default_keys_;
}

bool whois_no_match(std::string_view body) {
    static const char* markers[] = {
        "no match for", "not found", "no data found", "no entries found",
        "the queried object does not exist", "domain not found",
    };
    std::string lowered = to_lower_ascii(body.substr(0, 512));
    for (const char* m : markers)
        if (lowered.find(m) != std::string::npos) return true;
    return false;
}

namespace {

std::optional<std::string> match_key(std::string_view line, const std::vector<std::string>& keys) {
    std::string_view t = trim(line);
    for (const auto& key : keys)
        if (istarts_with_ascii(t, key)) return std::string(trim(t.substr(key.size())));
    return std::nullopt;
}

} // namespace

RegistrationRecord parse_whois_text(const RawRegistrationDocument& doc,
                                    const WhoisPatternTable& patterns) {
    const WhoisKeySet& keys = patterns.for_tld(doc.domain.tld);
    RegistrationRecord rec;
    rec.domain = doc.domain;
    rec.queried_at = doc.fetched_at;
    rec.protocol = RegProtocol::whois;

    bool any_key = false;
    std::size_t start = 0;
    const std::string& body = doc.body;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        if (i != body.size() && body[i] != '\n') continue;
        std::string_view line(body.data() + start, i - start);
        start = i + 1;
        if (auto value = match_key(line, keys.creation_keys)) {
            any_key = true;
            if (!rec.created_at) rec.created_at = parse_timestamp(*value);
        } else if (auto id_text = match_key(line, keys.iana_keys)) {
            any_key = true;
            int id = 0;
            for (char c : *id_text) {
                if (!std::isdigit(static_cast<unsigned char>(c))) break;
                id = id * 10 + (c - '0');
            }
            if (id > 0) rec.registrar.iana_id = id;
        } else if (auto status = match_key(line, keys.status_keys)) {
            any_key = true;
            if (!status->empty()) rec.statuses.insert(parse_epp_status(*status));
        } else if (auto name = match_key(line, keys.registrar_keys)) {
            any_key = true;
            if (rec.registrar.display_name.empty()) rec.registrar.display_name = *name;
        }
    }
    rec.parse_ok = any_key;
    return rec;
}

RegistrationRecord parse_rdap_document(const RawRegistrationDocument& doc) {
    nlohmann::json j = nlohmann::json::parse(doc.body, nullptr, false);
    if (j.is_discarded())
        throw Error(ErrorCode::MalformedDocument, "invalid JSON for " + doc.domain.ascii_name);
    if (!j.is_object() || j.value("objectClassName", "") != "domain")
        throw Error(ErrorCode::MalformedDocument,
                    "missing objectClassName \"domain\" for " + doc.domain.ascii_name);

    RegistrationRecord rec;
    rec.domain = doc.domain;
    rec.queried_at = doc.fetched_at;
    rec.protocol = RegProtocol::rdap;

    for (const auto& event : j.value("events", nlohmann::json::array())) {
        if (event.value("eventAction", "") == "registration") {
            rec.created_at = parse_timestamp(event.value("eventDate", ""));
            break;
        }
    }
    for (const auto& status : j.value("status", nlohmann::json::array()))
        if (status.is_string()) rec.statuses.insert(rdap_status_to_epp(status.get<std::string>()));

    for (const auto& entity : j.value("entities", nlohmann::json::array())) {
        auto roles = entity.value("roles", nlohmann::json::array());
        bool is_registrar =
            std::any_of(roles.begin(), roles.end(),
                        [](const nlohmann::json& r) { return r.is_string() && r == "registrar"; });
        if (!is_registrar) continue;
        for (const auto& pid : entity.value("publicIds", nlohmann::json::array())) {
            if (pid.value("type", "") == "IANA Registrar ID") {
                const auto& ident = pid["identifier"];
                if (ident.is_string()) rec.registrar.iana_id = std::atoi(ident.get<std::string>().c_str());
                else if (ident.is_number()) rec.registrar.iana_id = ident.get<int>();
            }
        }
        // vcardArray: ["vcard", [["fn", {}, "text", "NameSilo, LLC"], ...]]
        auto vcard = entity.value("vcardArray", nlohmann::json::array());
        if (vcard.size() == 2 && vcard[1].is_array()) {
            for (const auto& prop : vcard[1]) {
                if (prop.is_array() && prop.size() >= 4 && prop[0] == "fn" && prop[3].is_string())
                    rec.registrar.display_name = prop[3].get<std::string>();
            }
        }
    }
    return rec;
}

RegistrationRecord parse_registration_document(const RawRegistrationDocument& doc,
                                               const WhoisPatternTable& patterns) {
    return doc.protocol == RegProtocol::rdap ? parse_rdap_document(doc)
                                             : parse_whois_text(doc, patterns);
}

// --- TokenBucket ---------------------------------------------------------------

long TokenBucket::acquire() {
    std::unique_lock lock(mutex_);
    auto now = std::chrono::steady_clock::now();
    double elapsed = std::chrono::duration<double>(now - last_).count();
    tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
    last_ = now;
    if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return 0;
    }
    double wait_s = (1.0 - tokens_) / rate_;
    tokens_ = 0.0;
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
    return static_cast<long>(wait_s * 1000);
}

// --- Transports -----------------------------------------------------------------

namespace {

class SocketWhoisTransport : public WhoisTransport {
public:
    explicit SocketWhoisTransport(int timeout_ms) : timeout_ms_(timeout_ms) {}

    std::string query(const std::string& server, const std::string& query_text) override {
        struct addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        struct addrinfo* res = nullptr;
        if (getaddrinfo(server.c_str(), "43", &hints, &res) != 0)
            throw Error(ErrorCode::NetworkTimeout, "resolve " + server);
        int fd = -1;
        for (auto* p = res; p; p = p->ai_next) {
            fd = socket(p->ai_family, p->ai_socktype, p->ai_protocol);
            if (fd < 0) continue;
            struct timeval tv{timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000};
            setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
            setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
            if (connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
            close(fd);
            fd = -1;
        }
        freeaddrinfo(res);
        if (fd < 0) throw Error(ErrorCode::NetworkTimeout, "connect " + server);

        std::string request = query_text + "\r\n";
        if (send(fd, request.data(), request.size(), 0) < 0) {
            close(fd);
            throw Error(ErrorCode::NetworkTimeout, "send to " + server);
        }
        std::string body;
        char buf[4096];
        ssize_t n;
        while ((n = recv(fd, buf, sizeof buf, 0)) > 0) body.append(buf, static_cast<std::size_t>(n));
        close(fd);
        if (body.empty()) throw Error(ErrorCode::NetworkTimeout, "empty response from " + server);
        return body;
    }

private:
    int timeout_ms_;
};

#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
class HttpRdapTransport : public RdapTransport {
public:
    HttpRdapTransport(std::string base_url, int timeout_ms)
        : base_url_(std::move(base_url)), timeout_ms_(timeout_ms) {}

    Response get_domain(const std::string& name) override {
        httplib::Client client(base_url_);
        client.set_connection_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
        client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
        client.set_follow_location(true);
        auto result = client.Get("/domain/" + name);
        if (!result) throw Error(ErrorCode::NetworkTimeout, "RDAP GET " + name);
        return Response{result->status, result->body};
    }

private:
    std::string base_url_;
    int timeout_ms_;
};
#endif

} // namespace

std::unique_ptr<WhoisTransport> make_socket_whois_transport(int timeout_ms) {
    return std::make_unique<SocketWhoisTransport>(timeout_ms);
}

std::unique_ptr<RdapTransport> make_http_rdap_transport(const std::string& base_url, int timeout_ms) {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
    return std::make_unique<HttpRdapTransport>(base_url, timeout_ms);
#else
    (void)base_url;
    (void)timeout_ms;
    return nullptr;
#endif
}

// --- RegistrationFetcher ----------------------------------------------------------

RegistrationFetcher::RegistrationFetcher(DocumentStore& store, FetcherConfig config)
    : store_(store), config_(std::move(config)) {
    clock_ = [] {
        return Timestamp{std::chrono::duration_cast<std::chrono::seconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count()};
    };
}

void RegistrationFetcher::set_transports(std::unique_ptr<WhoisTransport> whois,
                                         std::unique_ptr<RdapTransport> rdap) {
    whois_ = std::move(whois);
    rdap_ = std::move(rdap);
}

RawRegistrationDocument RegistrationFetcher::fetch(const DomainName& domain, FetchMode mode,
                                                   std::optional<Timestamp> at) {
    if (mode == FetchMode::fixture) return store_.nearest(domain, at);
    RawRegistrationDocument doc = fetch_live(domain);
    store_.put(doc);
    return doc;
}

namespace {

/// Referral target from a WHOIS body ("Registrar WHOIS Server: whois.x.com"
/// or "refer: whois.x.com").
std::optional<std::string> whois_referral(const std::string& body) {
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        if (i != body.size() && body[i] != '\n') continue;
        std::string_view line = trim(std::string_view(body.data() + start, i - start));
        start = i + 1;
        for (std::string_view key : {"Registrar WHOIS Server:", "Whois Server:", "refer:", "ReferralServer:"}) {
            if (!istarts_with_ascii(line, key)) continue;
            std::string server(trim(line.substr(key.size())));
            if (auto pos = server.find("://"); pos != std::string::npos) server = server.substr(pos + 3);
            if (auto pos = server.find('/'); pos != std::string::npos) server = server.substr(0, pos);
            if (!server.empty()) return server;
        }
    }
    return std::nullopt;
}

} // namespace

RawRegistrationDocument RegistrationFetcher::fetch_live(const DomainName& domain) {
    if (!whois_) whois_ = make_socket_whois_transport();
    if (!rdap_) rdap_ = make_http_rdap_transport(config_.rdap_base_url);

    auto bucket_for = [this](const std::string& endpoint) -> TokenBucket& {
        std::lock_guard lock(bucket_mutex_);
        auto& slot = buckets_[endpoint];
        if (!slot) slot = std::make_unique<TokenBucket>(config_.rate_per_endpoint, 2.0);
        return *slot;
    };

    RawRegistrationDocument doc;
    doc.domain = domain;
    doc.fetched_at = clock_();

    // RDAP first: structured and cheap to parse correctly.
    if (rdap_) {
        for (int attempt = 0; attempt <= config_.retries; ++attempt) {
            try {
                bucket_for(config_.rdap_base_url).acquire();
                auto response = rdap_->get_domain(domain.registered_part);
                if (response.status == 429)
                    throw Error(ErrorCode::RateLimited, config_.rdap_base_url);
                if (response.status >= 200 && response.status < 300) {
                    doc.protocol = RegProtocol::rdap;
                    doc.body = std::move(response.body);
                    return doc;
                }
                if (response.status == 404) break; // fall through to WHOIS
            } catch (const Error& e) {
                if (e.code() == ErrorCode::RateLimited) throw;
                if (attempt == config_.retries) break;
            }
        }
    }

    // WHOIS referral chain, bounded by max_referral_hops referral follows.
    std::string server = config_.whois_root_server;
    for (int hop = 0;; ++hop) {
        std::string body;
        bool got = false;
        for (int attempt = 0; attempt <= config_.retries && !got; ++attempt) {
            try {
                bucket_for(server).acquire();
                body = whois_->query(server, domain.registered_part);
                got = true;
            } catch (const Error&) {
                if (attempt == config_.retries) throw;
            }
        }
        auto referral = whois_referral(body);
        if (!referral || *referral == server) {
            doc.protocol = RegProtocol::whois;
            doc.body = std::move(body);
            return doc;
        }
        if (hop + 1 >= config_.max_referral_hops)
            throw Error(ErrorCode::NetworkTimeout,
                        "referral hop limit reached at " + server + " for " + domain.ascii_name);
        server = *referral;
    }
}

} // namespace regscope
