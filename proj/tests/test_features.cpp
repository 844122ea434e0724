#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "regscope/errors.hpp"
#include "regscope/features.hpp"
#include "regscope/text.hpp"

using namespace regscope;

namespace {

const PublicSuffixRuleSet& rules() {
    static PublicSuffixRuleSet set =
        PublicSuffixRuleSet::from_file(std::string(REGSCOPE_SOURCE_DIR) + "/data/public_suffix_list.dat");
    return set;
}

struct RowSpec {
    int registrar;
    std::string tld;
    std::string as_of;
    std::map<std::string, double> overrides;
};

std::string snapshot_csv(const std::vector<RowSpec>& rows) {
    std::string out = "registrar_iana,registrar_name,tld,as_of";
    for (const auto& col : snapshot_schema()) out += "," + col.name;
    out += "\n";
    for (const auto& row : rows) {
        out += std::to_string(row.registrar) + ",r" + std::to_string(row.registrar) + "," +
               row.tld + "," + row.as_of;
        for (const auto& col : snapshot_schema()) {
            auto it = row.overrides.find(col.name);
            double v = it == row.overrides.end() ? 0.0 : it->second;
            out += "," + format_double(v);
        }
        out += "\n";
    }
    return out;
}

DomainFeatures df(const char* name, int registrar, const char* tld, EngineeredFeatures f) {
    return DomainFeatures{normalize_domain(name, rules()), registrar, tld, f};
}

} // namespace

TEST_SUITE("features") {

TEST_CASE("schema holds every named column exactly once") {
    const auto& schema = snapshot_schema();
    CHECK(schema.size() == 71); // 46 registration + 25 proactive
    std::set<std::string> names;
    for (const auto& col : schema) names.insert(col.name);
    CHECK(names.size() == schema.size());
    CHECK(names.count("free_api") == 1);
    CHECK(names.count("payment_yoomoney") == 1);
    CHECK(names.count("term_limit_per_customer_transfer") == 1);
    CHECK(names.count("restriction_content_restrictions") == 1);
    CHECK(names.count("phone_operational_validated") == 1);
    int restrictions = 0, payments = 0;
    for (const auto& col : schema) {
        if (col.name.rfind("restriction_", 0) == 0) ++restrictions;
        if (col.name.rfind("payment_", 0) == 0) ++payments;
    }
    CHECK(restrictions == 14);
    CHECK(payments == 24);
}

TEST_CASE("snapshot store nearest-prior lookup") {
    auto content = snapshot_csv({
        {1479, "top", "2023-09-09", {{"price_register", 1.09}}},
        {1479, "top", "2023-09-11", {{"price_register", 1.29}}},
    });
    auto store = SnapshotStore::from_csv_content(content, "test");
    CHECK(store.size() == 2);
    auto& hit = store.nearest_prior(1479, "top", *parse_timestamp("2023-09-10"));
    CHECK(hit.get("price_register") == doctest::Approx(1.09));
    auto& exact = store.nearest_prior(1479, "top", *parse_timestamp("2023-09-11"));
    CHECK(exact.get("price_register") == doctest::Approx(1.29));
    try {
        store.nearest_prior(1479, "top", *parse_timestamp("2023-09-08"));
        FAIL("expected MissingCoverage");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingCoverage);
    }
    CHECK_THROWS_AS(store.nearest_prior(1636, "online", *parse_timestamp("2023-09-10")), Error);
}

TEST_CASE("snapshot schema violations are fatal") {
    std::string missing = "registrar_iana,tld,as_of,free_api\n1479,top,2023-09-09,1\n";
    CHECK_THROWS_AS(SnapshotStore::from_csv_content(missing, "test"), Error);

    auto dup = snapshot_csv({
        {1479, "top", "2023-09-09", {}},
        {1479, "top", "2023-09-09", {}},
    });
    try {
        SnapshotStore::from_csv_content(dup, "test");
        FAIL("expected OverlappingSnapshots");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OverlappingSnapshots);
    }

    auto negative = snapshot_csv({{1479, "top", "2023-09-09", {{"price_register", -4.0}}}});
    CHECK_THROWS_AS(SnapshotStore::from_csv_content(negative, "test"), Error);
}

TEST_CASE("aggregate folds payment groups into binary indicators") {
    auto content = snapshot_csv({{1479, "top", "2023-09-09",
                                  {{"payment_alipay", 1}, {"price_register", 1.09}}}});
    auto store = SnapshotStore::from_csv_content(content, "test");
    auto f = aggregate(store.nearest_prior(1479, "top", *parse_timestamp("2023-09-10")),
                       std::nullopt, std::nullopt);
    CHECK(f.payment_digital_wallet);
    CHECK_FALSE(f.payment_crypto);
    CHECK_FALSE(f.payment_transfer);
    CHECK(f.price_register == doctest::Approx(1.09));
}

TEST_CASE("aggregate counts restrictions and prevention") {
    std::map<std::string, double> overrides = {
        {"restriction_id_required", 1},
        {"restriction_local_presence", 1},
        {"restriction_content_restrictions", 1},
        {"office365_prevention", 1},
        {"facebook_warning", 1},
        {"api_create_account", 1},
        {"email_operational_validated", 1},
    };
    auto store = SnapshotStore::from_csv_content(
        snapshot_csv({{1479, "top", "2023-09-09", overrides}}), "test");
    const auto& snap = store.nearest_prior(1479, "top", *parse_timestamp("2023-09-09"));
    auto f = aggregate(snap, std::nullopt, std::nullopt);
    CHECK(f.restrictions == 3);
    CHECK(f.prevention == 2);
    CHECK(f.api);
    CHECK(f.email_phone_validated);

    auto b = aggregate(snap, std::nullopt, std::nullopt, PaymentGroups::defaults(),
                       CompositeMode::booleans);
    CHECK(b.restrictions == 1);
    CHECK(b.prevention == 1);

    // all-false snapshot: empty counts
    auto zero_store =
        SnapshotStore::from_csv_content(snapshot_csv({{1479, "top", "2023-09-09", {}}}), "test");
    auto z = aggregate(zero_store.nearest_prior(1479, "top", *parse_timestamp("2023-09-09")),
                       std::nullopt, std::nullopt);
    CHECK(z.restrictions == 0);
    CHECK(z.prevention == 0);
    CHECK_FALSE(z.api);
}

TEST_CASE("aggregate bounds hold on arbitrary snapshots") {
    for (int mask = 0; mask < 8; ++mask) {
        std::map<std::string, double> overrides;
        int i = 0;
        for (const auto& col : snapshot_schema()) {
            if (col.kind == FeatureKind::boolean) overrides[col.name] = (mask >> (i++ % 3)) & 1;
            if (i > 40) break;
        }
        auto store = SnapshotStore::from_csv_content(
            snapshot_csv({{1, "top", "2023-09-09", overrides}}), "test");
        auto f = aggregate(store.nearest_prior(1, "top", *parse_timestamp("2023-09-09")),
                           std::nullopt, std::nullopt);
        CHECK(f.restrictions >= 0);
        CHECK(f.restrictions <= 14);
        CHECK(f.prevention >= 0);
        CHECK(f.prevention <= 6);
        // aggregate is idempotent: same snapshot, same result
        auto again = aggregate(store.nearest_prior(1, "top", *parse_timestamp("2023-09-09")),
                               std::nullopt, std::nullopt);
        CHECK(f.as_vector() == again.as_vector());
    }
}

TEST_CASE("uptime predictor averages the available medians") {
    auto store =
        SnapshotStore::from_csv_content(snapshot_csv({{1479, "top", "2023-09-09", {}}}), "test");
    const auto& snap = store.nearest_prior(1479, "top", *parse_timestamp("2023-09-09"));
    CHECK(aggregate(snap, 4200.0, 3660.0).uptime_s == doctest::Approx(3930.0));
    CHECK(aggregate(snap, 4200.0, std::nullopt).uptime_s == doctest::Approx(4200.0));
    CHECK(aggregate(snap, std::nullopt, 3660.0).uptime_s == doctest::Approx(3660.0));
}

TEST_CASE("build_count_table counts per pair and reduces features") {
    EngineeredFeatures cheap;
    cheap.price_register = 1.0;
    cheap.free_dns = true;
    EngineeredFeatures pricey;
    pricey.price_register = 9.0;
    pricey.free_dns = false;

    auto rows = build_count_table({
        df("a1.top", 1479, "top", cheap),
        df("a2.top", 1479, "top", pricey),
        df("a3.top", 1479, "top", cheap),
        df("b1.com", 146, "com", pricey),
    });
    REQUIRE(rows.size() == 2);
    const auto& godaddy = rows[0]; // map order: 146 before 1479
    CHECK(godaddy.registrar_iana == 146);
    CHECK(godaddy.malicious_count == 1);
    const auto& namesilo = rows[1];
    CHECK(namesilo.malicious_count == 3);
    CHECK(namesilo.features.free_dns);                               // modal 2/3
    CHECK(namesilo.features.price_register == doctest::Approx(1.0)); // lower median of {1,9,1}

    std::size_t total = 0;
    for (const auto& r : rows) total += r.malicious_count;
    CHECK(total == 4);
}

TEST_CASE("build_domain_rows unions with labels and rejects duplicates") {
    EngineeredFeatures f;
    auto rows = build_domain_rows({df("m1.top", 1479, "top", f), df("m2.com", 146, "com", f)},
                                  {df("b1.top", 1479, "top", f), df("b2.com", 1068, "com", f),
                                   df("b3.xyz", 1068, "xyz", f)});
    REQUIRE(rows.size() == 5);
    std::size_t malicious = 0;
    for (const auto& r : rows) malicious += r.malicious ? 1 : 0;
    CHECK(malicious == 2);
    // deterministic (registrar, tld, domain) order
    CHECK(rows[0].registrar_iana == 146);
    CHECK(std::is_sorted(rows.begin(), rows.end(), [](const FeatureRow& a, const FeatureRow& b) {
        return std::tie(a.registrar_iana, a.tld, a.domain.ascii_name) <
               std::tie(b.registrar_iana, b.tld, b.domain.ascii_name);
    }));

    try {
        build_domain_rows({df("same.top", 1479, "top", f)}, {df("same.top", 1479, "top", f)});
        FAIL("expected DuplicateDomain");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DuplicateDomain);
    }
}

TEST_CASE("payment groups load from file and validate methods") {
    auto groups = PaymentGroups::from_file(std::string(REGSCOPE_SOURCE_DIR) +
                                           "/data/payment_groups.csv");
    CHECK(groups.members("crypto").size() == 2);
    CHECK(groups.members("transfer").size() == 6);
    CHECK(groups.members("digital_wallet").size() == 13);
    CHECK(groups.members("unknown").empty());
    // Grouped methods cover everything except cc, dinersclub, paypal.
    std::set<std::string> grouped;
    for (const char* g : {"crypto", "transfer", "digital_wallet"})
        for (const auto& m : groups.members(g)) grouped.insert(m);
    CHECK(grouped.size() == 21);
    CHECK(grouped.count("payment_cc") == 0);
    CHECK(grouped.count("payment_paypal") == 0);
    CHECK(grouped.count("payment_dinersclub") == 0);
}

TEST_CASE("design CSVs carry the model feature names") {
    EngineeredFeatures f;
    f.price_register = 1.09;
    auto csv = count_table_to_csv(build_count_table({df("a1.top", 1479, "top", f)}));
    CHECK(csv.find("registrar_iana,tld,malicious") == 0);
    for (const auto& name : engineered_feature_names())
        CHECK(csv.find(name) != std::string::npos);
    auto domain_csv =
        domain_rows_to_csv(build_domain_rows({df("a1.top", 1479, "top", f)}, {}));
    CHECK(domain_csv.find("domain,registrar_iana,tld,malicious") == 0);
}

} // TEST_SUITE
