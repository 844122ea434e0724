#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "regscope/errors.hpp"
#include "regscope/feed.hpp"

using namespace regscope;

namespace {

const PublicSuffixRuleSet& rules() {
    static PublicSuffixRuleSet set =
        PublicSuffixRuleSet::from_file(std::string(REGSCOPE_SOURCE_DIR) + "/data/public_suffix_list.dat");
    return set;
}

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << content;
    return path.string();
}

} // namespace

TEST_SUITE("feed") {

TEST_CASE("parse_feed_file reverses defanged schemes and counts malformed lines") {
    auto path = write_temp("feed_basic.csv",
                           "2023-08-14T02:11:09Z,hxxps://support-fb.sh/login\n"
                           "2023-08-14T03:00:00Z,https://chase03.com/login\n"
                           "no comma here\n"
                           "2023-08-14T04:00:00Z,hxxp://usps.bar/track\n");
    auto result = parse_feed_file(path, FeedSource::PhishTank);
    CHECK(result.entries.size() == 3);
    CHECK(result.malformed_count == 1);
    CHECK_FALSE(result.empty_feed_warning);
    CHECK(result.entries[0].url == "https://support-fb.sh/login");
    CHECK(url_host(result.entries[0].url) == "support-fb.sh");
    CHECK(result.entries[2].url == "http://usps.bar/track");
    CHECK(result.entries[0].source == FeedSource::PhishTank);
    CHECK(format_timestamp(result.entries[0].listed_at) == "2023-08-14T02:11:09Z");
}

TEST_CASE("bracketed-dot defanging is malformed") {
    auto path = write_temp("feed_bracket.csv",
                           "2023-08-14T02:11:09Z,hxxps://evil[.]com/x\n"
                           "2023-08-14T02:12:00Z,https://fine.com/x\n");
    auto result = parse_feed_file(path, FeedSource::APWG);
    CHECK(result.entries.size() == 1);
    CHECK(result.malformed_count == 1);
}

TEST_CASE("empty feed is a warning, unreadable file an error") {
    auto path = write_temp("feed_empty.csv", "# nothing\n");
    auto result = parse_feed_file(path, FeedSource::OpenPhish);
    CHECK(result.entries.empty());
    CHECK(result.empty_feed_warning);
    CHECK_THROWS_AS(parse_feed_file("/nonexistent/feed.csv", FeedSource::APWG), Error);
}

TEST_CASE("url_host strips userinfo, port, path, query") {
    CHECK(url_host("https://a.b.chase03.com/login") == "a.b.chase03.com");
    CHECK(url_host("http://user:pw@host.com:8080/x?y=1#z") == "host.com");
    CHECK(url_host("https://[2001:db8::1]/x") == "[2001:db8::1]");
    CHECK(url_host("not-a-url") == "");
}

TEST_CASE("to_registered_domain reduces hosts to registered parts") {
    BlocklistEntry weebly{"https://attsecure0.weebly.com", FeedSource::APWG, {}};
    CHECK(to_registered_domain(weebly, rules()).registered_part == "weebly.com");

    BlocklistEntry deep{"https://a.b.chase03.com/login", FeedSource::APWG, {}};
    CHECK(to_registered_domain(deep, rules()).registered_part == "chase03.com");

    BlocklistEntry ip{"http://198.51.100.7/x", FeedSource::APWG, {}};
    try {
        to_registered_domain(ip, rules());
        FAIL("expected IpLiteralHost");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IpLiteralHost);
    }
}

TEST_CASE("apply_exclusions partitions every input exactly once") {
    ExclusionList shorteners{ExclusionKind::url_shortener, {"bit.ly", "t.co"}};
    ExclusionList providers{ExclusionKind::subdomain_provider, {"000webhostapp.com", "weebly.com"}};

    std::vector<DomainName> domains = {
        normalize_domain("bit.ly", rules()),
        normalize_domain("000webhostapp.com", rules()),
        normalize_domain("chase03.com", rules()),
        normalize_domain("sub.weebly.com", rules()),
    };
    auto part = apply_exclusions(domains, {shorteners, providers});
    CHECK(part.kept.size() == 1);
    CHECK(part.kept[0].registered_part == "chase03.com");
    CHECK(part.excluded_shortener.size() == 1);
    CHECK(part.excluded_subdomain_provider.size() == 2);
    CHECK(part.kept.size() + part.excluded_shortener.size() +
              part.excluded_subdomain_provider.size() ==
          domains.size());
}

TEST_CASE("apply_exclusions is order-independent") {
    ExclusionList shorteners{ExclusionKind::url_shortener, {"bit.ly"}};
    std::vector<DomainName> fwd = {normalize_domain("bit.ly", rules()),
                                   normalize_domain("x.com", rules()),
                                   normalize_domain("y.org", rules())};
    std::vector<DomainName> rev(fwd.rbegin(), fwd.rend());
    auto a = apply_exclusions(fwd, {shorteners});
    auto b = apply_exclusions(rev, {shorteners});
    auto names = [](std::vector<DomainName> v) {
        std::set<std::string> out;
        for (auto& d : v) out.insert(d.ascii_name);
        return out;
    };
    CHECK(names(a.kept) == names(b.kept));
    CHECK(names(a.excluded_shortener) == names(b.excluded_shortener));
}

TEST_CASE("dedupe_earliest keeps the minimum listing time") {
    auto d = normalize_domain("chase03.com", rules());
    auto d2 = normalize_domain("usps.bar", rules());
    Timestamp t9 = make_timestamp(2023, 8, 14, 9), t10 = make_timestamp(2023, 8, 14, 10);
    auto dedup = dedupe_earliest({{d, t10}, {d, t9}, {d2, t10}});
    CHECK(dedup.size() == 2);
    CHECK(dedup.at(d) == t9);
    CHECK(dedup.at(d2) == t10);
    for (const auto& [domain, at] : dedup)
        for (const auto& [in_domain, in_at] : {std::pair{d, t10}, {d, t9}, {d2, t10}})
            if (domain == in_domain) CHECK(at <= in_at);
}

TEST_CASE("exclusion list file loads registered parts") {
    auto path = write_temp("shorteners.txt", "# curated\nbit.ly\nt.co\n");
    auto list = ExclusionList::from_file(path, ExclusionKind::url_shortener, rules());
    CHECK(list.domains.size() == 2);
    CHECK(list.contains(normalize_domain("x.bit.ly", rules())));
}

} // TEST_SUITE
