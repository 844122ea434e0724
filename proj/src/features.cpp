#include "regscope/features.hpp"

#include <algorithm>
#include <filesystem>
#include <unordered_map>

#include "regscope/errors.hpp"
#include "regscope/text.hpp"

namespace fs = std::filesystem;

namespace regscope {

namespace {

std::vector<FeatureColumn> make_schema() {
    std::vector<FeatureColumn> cols;
    auto b = [&](const char* n) { cols.push_back({n, FeatureKind::boolean}); };
    auto num = [&](const char* n) { cols.push_back({n, FeatureKind::numeric}); };

    // Registration attributes.
    b("free_api");
    b("api_create_account");
    b("api_register_domain");
    b("free_dns");
    b("free_dnssec");
    b("free_email_account");
    b("free_email_forward");
    b("free_web_hosting");
    b("free_ssl_cert");
    num("free_bulk_search_number");
    b("bulk_discount");
    for (const char* method :
         {"payment_alipay", "payment_applepay", "payment_banktransfer", "payment_bitcoin",
          "payment_cashinperson", "payment_cc", "payment_check", "payment_dinersclub",
          "payment_dwolla", "payment_giropay", "payment_googlewallet", "payment_moneyorder",
          "payment_neteller", "payment_payeer", "payment_paypal", "payment_payza",
          "payment_qiwi", "payment_skril", "payment_topcoin", "payment_webmoney",
          "payment_westernunion", "payment_worldpay", "payment_yandexmoney", "payment_yoomoney"})
        b(method);
    num("price_register");
    num("price_renewal");
    num("price_transfer");
    num("price_whois_privacy");
    num("discount_register");
    num("discount_renewal");
    num("discount_transfer");
    b("term_new_customer_only_register");
    b("term_new_customer_only_transfer");
    num("term_limit_per_customer_register");
    num("term_limit_per_customer_transfer");

    // Proactive verification and restrictions.
    b("email_syntactically_validated");
    b("phone_syntactically_validated");
    b("address_syntactically_validated");
    b("email_operational_validated");
    b("phone_operational_validated");
    b("random_warning");
    b("random_prevention");
    b("office365_warning");
    b("office365_prevention");
    b("facebook_warning");
    b("facebook_prevention");
    for (const char* r :
         {"restriction_not_available", "restriction_local_presence", "restriction_community_ties",
          "restriction_age_restriction", "restriction_infrastructure", "restriction_group_ties",
          "restriction_commitment_required", "restriction_id_required", "restriction_region_ties",
          "restriction_professionals_only", "restriction_certain_nationals_prohibited",
          "restriction_org_or_affiliates_only", "restriction_exclusive_registrar",
          "restriction_content_restrictions"})
        b(r);
    return cols;
}

const std::vector<const char*>& prevention_columns() {
    static const std::vector<const char*> cols = {
        "random_warning",    "random_prevention",    "office365_warning",
        "office365_prevention", "facebook_warning", "facebook_prevention"};
    return cols;
}

} // namespace

const std::vector<FeatureColumn>& snapshot_schema() {
    static const std::vector<FeatureColumn> schema = make_schema();
    return schema;
}

std::size_t snapshot_column_index(const std::string& name) {
    static const std::unordered_map<std::string, std::size_t> index = [] {
        std::unordered_map<std::string, std::size_t> m;
        const auto& schema = snapshot_schema();
        for (std::size_t i = 0; i < schema.size(); ++i) m[schema[i].name] = i;
        return m;
    }();
    auto it = index.find(name);
    if (it == index.end())
        throw Error(ErrorCode::SchemaViolation, "unknown feature column " + name);
    return it->second;
}

// --- SnapshotStore -------------------------------------------------------------

SnapshotStore SnapshotStore::load_snapshots(const std::string& dir) {
    if (!fs::exists(dir)) throw Error(ErrorCode::Io, "snapshot directory missing: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    SnapshotStore store;
    for (const auto& file : files) {
        SnapshotStore part = from_csv_content(read_file(file.string()), file.string());
        for (auto& [key, snaps] : part.by_key_)
            for (auto& snap : snaps) store.insert(std::move(snap), file.string());
    }
    return store;
}

SnapshotStore SnapshotStore::from_csv_content(const std::string& content, const std::string& origin) {
    SnapshotStore store;
    std::vector<std::string> lines;
    {
        std::size_t start = 0;
        for (std::size_t i = 0; i <= content.size(); ++i) {
            if (i == content.size() || content[i] == '\n') {
                std::size_t end = i;
                if (end > start && content[end - 1] == '\r') --end;
                if (end > start) lines.emplace_back(content.substr(start, end - start));
                start = i + 1;
            }
        }
    }
    if (lines.empty()) return store;

    std::size_t first = 0;
    while (first < lines.size() && (lines[first].empty() || lines[first][0] == '#')) ++first;
    if (first == lines.size()) return store;

    auto header = split_csv(lines[first]);
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < header.size(); ++i) pos[std::string(trim(header[i]))] = i;

    for (const char* required : {"registrar_iana", "tld", "as_of"})
        if (!pos.count(required))
            throw Error(ErrorCode::SchemaViolation,
                        origin + ": missing key column " + required);
    const auto& schema = snapshot_schema();
    for (const auto& col : schema)
        if (!pos.count(col.name))
            throw Error(ErrorCode::SchemaViolation, origin + ": missing column " + col.name);

    for (std::size_t li = first + 1; li < lines.size(); ++li) {
        if (lines[li].empty() || lines[li][0] == '#') continue;
        auto fields = split_csv(lines[li]);
        if (fields.size() < header.size())
            throw Error(ErrorCode::SchemaViolation,
                        origin + ": row " + std::to_string(li + 1) + " has too few fields");
        FeatureSnapshot snap;
        snap.registrar.iana_id = std::stoi(fields[pos.at("registrar_iana")]);
        if (pos.count("registrar_name"))
            snap.registrar.display_name = fields[pos.at("registrar_name")];
        snap.tld = to_lower_ascii(trim(fields[pos.at("tld")]));
        auto as_of = parse_timestamp(fields[pos.at("as_of")]);
        if (!as_of)
            throw Error(ErrorCode::SchemaViolation,
                        origin + ": bad as_of in row " + std::to_string(li + 1));
        snap.as_of = *as_of;
        snap.values.resize(schema.size());
        for (std::size_t ci = 0; ci < schema.size(); ++ci) {
            std::string_view text = trim(fields[pos.at(schema[ci].name)]);
            double v;
            if (schema[ci].kind == FeatureKind::boolean) {
                if (text == "1" || iequals_ascii(text, "true") || iequals_ascii(text, "t")) v = 1.0;
                else if (text == "0" || iequals_ascii(text, "false") || iequals_ascii(text, "f") ||
                         text.empty())
                    v = 0.0;
                else
                    throw Error(ErrorCode::SchemaViolation,
                                origin + ": bad boolean '" + std::string(text) + "' for " +
                                    schema[ci].name);
            } else {
                v = text.empty() ? 0.0 : std::stod(std::string(text));
            }
            snap.values[ci] = v;
        }
        for (const char* price : {"price_register", "price_renewal", "price_transfer",
                                  "price_whois_privacy", "discount_register", "discount_renewal",
                                  "discount_transfer"})
            if (snap.get(price) < 0)
                throw Error(ErrorCode::SchemaViolation,
                            origin + ": negative " + std::string(price));
        store.insert(std::move(snap), origin);
    }
    return store;
}

void SnapshotStore::insert(FeatureSnapshot snapshot, const std::string& origin) {
    auto key = std::make_pair(snapshot.registrar.iana_id, snapshot.tld);
    auto& snaps = by_key_[key];
    for (const auto& existing : snaps)
        if (existing.as_of == snapshot.as_of)
            throw Error(ErrorCode::OverlappingSnapshots,
                        origin + ": duplicate snapshot for registrar " +
                            std::to_string(key.first) + ", tld " + key.second + ", " +
                            format_date(snapshot.as_of));
    snaps.push_back(std::move(snapshot));
    std::sort(snaps.begin(), snaps.end(),
              [](const FeatureSnapshot& a, const FeatureSnapshot& b) { return a.as_of < b.as_of; });
    ++count_;
}

const FeatureSnapshot& SnapshotStore::nearest_prior(int registrar_iana, const std::string& tld,
                                                    Timestamp date) const {
    auto it = by_key_.find({registrar_iana, tld});
    if (it == by_key_.end())
        throw Error(ErrorCode::MissingCoverage,
                    "no snapshots for registrar " + std::to_string(registrar_iana) + ", tld " + tld);
    const FeatureSnapshot* best = nullptr;
    for (const auto& snap : it->second) {
        if (snap.as_of > date) break;
        best = &snap;
    }
    if (!best)
        throw Error(ErrorCode::MissingCoverage,
                    "no snapshot at or before " + format_date(date) + " for registrar " +
                        std::to_string(registrar_iana) + ", tld " + tld);
    return *best;
}

bool SnapshotStore::covers(int registrar_iana, const std::string& tld) const {
    return by_key_.count({registrar_iana, tld}) > 0;
}

std::vector<std::pair<int, std::string>> SnapshotStore::keys() const {
    std::vector<std::pair<int, std::string>> out;
    for (const auto& [key, _] : by_key_) out.push_back(key);
    return out;
}

// --- PaymentGroups -------------------------------------------------------------

PaymentGroups PaymentGroups::from_file(const std::string& path) {
    PaymentGroups groups;
    bool header_seen = false;
    for (const auto& raw : read_lines(path)) {
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_csv(line);
        if (fields.size() < 2) continue;
        if (!header_seen && iequals_ascii(trim(fields[0]), "method")) {
            header_seen = true;
            continue;
        }
        std::string method(trim(fields[0])), group(trim(fields[1]));
        snapshot_column_index(method); // validates the method name
        groups.groups_[group].push_back(method);
    }
    return groups;
}

PaymentGroups PaymentGroups::defaults() {
    PaymentGroups groups;
    groups.groups_["crypto"] = {"payment_bitcoin", "payment_topcoin"};
    groups.groups_["transfer"] = {"payment_banktransfer", "payment_giropay",
                                  "payment_westernunion", "payment_moneyorder", "payment_check",
                                  "payment_cashinperson"};
    groups.groups_["digital_wallet"] = {
        "payment_alipay",  "payment_applepay", "payment_dwolla", "payment_googlewallet",
        "payment_neteller", "payment_payeer",   "payment_payza",  "payment_qiwi",
        "payment_skril",   "payment_webmoney", "payment_worldpay", "payment_yandexmoney",
        "payment_yoomoney"};
    return groups;
}

const std::vector<std::string>& PaymentGroups::members(const std::string& group) const {
    static const std::vector<std::string> empty;
    auto it = groups_.find(group);
    return it == groups_.end() ? empty : it->second;
}

// --- aggregate -----------------------------------------------------------------

std::vector<double> EngineeredFeatures::as_vector() const {
    return {free_dns ? 1.0 : 0.0,
            free_web_host ? 1.0 : 0.0,
            free_ssl_cert ? 1.0 : 0.0,
            static_cast<double>(restrictions),
            static_cast<double>(prevention),
            api ? 1.0 : 0.0,
            payment_digital_wallet ? 1.0 : 0.0,
            payment_crypto ? 1.0 : 0.0,
            payment_transfer ? 1.0 : 0.0,
            email_phone_validated ? 1.0 : 0.0,
            free_bulk_search_number,
            price_register,
            discount_register,
            uptime_s};
}

const std::vector<std::string>& engineered_feature_names() {
    static const std::vector<std::string> names = {
        "Free DNS",        "Free Web host",    "Free SSL cert",   "Restrictions",
        "Prevention",      "API",              "Payment digital wallet", "Payment crypto",
        "Payment transfer", "EmailPhone validated", "Free bulk search", "Price register",
        "Discount register", "Uptime"};
    return names;
}

EngineeredFeatures aggregate(const FeatureSnapshot& snapshot, std::optional<double> uptime_notified_s,
                             std::optional<double> uptime_not_notified_s,
                             const PaymentGroups& payments, CompositeMode mode) {
    EngineeredFeatures f;
    f.free_dns = snapshot.flag("free_dns");
    f.free_web_host = snapshot.flag("free_web_hosting");
    f.free_ssl_cert = snapshot.flag("free_ssl_cert");

    int restrictions = 0;
    for (const auto& col : snapshot_schema())
        if (col.name.rfind("restriction_", 0) == 0 && snapshot.flag(col.name)) ++restrictions;
    int prevention = 0;
    for (const char* col : prevention_columns())
        if (snapshot.flag(col)) ++prevention;
    if (mode == CompositeMode::booleans) {
        restrictions = restrictions > 0 ? 1 : 0;
        prevention = prevention > 0 ? 1 : 0;
    }
    f.restrictions = restrictions;
    f.prevention = prevention;

    f.api = snapshot.flag("api_create_account") || snapshot.flag("api_register_domain");
    auto any_of_group = [&](const std::string& group) {
        for (const auto& method : payments.members(group))
            if (snapshot.flag(method)) return true;
        return false;
    };
    f.payment_digital_wallet = any_of_group("digital_wallet");
    f.payment_crypto = any_of_group("crypto");
    f.payment_transfer = any_of_group("transfer");
    f.email_phone_validated =
        snapshot.flag("email_operational_validated") || snapshot.flag("phone_operational_validated");
    f.free_bulk_search_number = snapshot.get("free_bulk_search_number");
    f.price_register = snapshot.get("price_register");
    f.discount_register = snapshot.get("discount_register");

    if (uptime_notified_s && uptime_not_notified_s)
        f.uptime_s = (*uptime_notified_s + *uptime_not_notified_s) / 2.0;
    else if (uptime_notified_s)
        f.uptime_s = *uptime_notified_s;
    else if (uptime_not_notified_s)
        f.uptime_s = *uptime_not_notified_s;
    else
        f.uptime_s = 0.0;
    return f;
}

// --- pair-level reduction --------------------------------------------------------

namespace {

double lower_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

double modal_flag(const std::vector<double>& v) {
    std::size_t trues = 0;
    for (double x : v)
        if (x != 0.0) ++trues;
    return trues * 2 >= v.size() ? 1.0 : 0.0; // ties resolve to true
}

EngineeredFeatures reduce_features(const std::vector<const EngineeredFeatures*>& group) {
    auto column = [&](auto member) {
        std::vector<double> v;
        v.reserve(group.size());
        for (const auto* g : group) v.push_back(static_cast<double>(g->*member));
        return v;
    };
    EngineeredFeatures out;
    out.free_dns = modal_flag(column(&EngineeredFeatures::free_dns)) != 0.0;
    out.free_web_host = modal_flag(column(&EngineeredFeatures::free_web_host)) != 0.0;
    out.free_ssl_cert = modal_flag(column(&EngineeredFeatures::free_ssl_cert)) != 0.0;
    out.restrictions = static_cast<int>(lower_median(column(&EngineeredFeatures::restrictions)));
    out.prevention = static_cast<int>(lower_median(column(&EngineeredFeatures::prevention)));
    out.api = modal_flag(column(&EngineeredFeatures::api)) != 0.0;
    out.payment_digital_wallet =
        modal_flag(column(&EngineeredFeatures::payment_digital_wallet)) != 0.0;
    out.payment_crypto = modal_flag(column(&EngineeredFeatures::payment_crypto)) != 0.0;
    out.payment_transfer = modal_flag(column(&EngineeredFeatures::payment_transfer)) != 0.0;
    out.email_phone_validated =
        modal_flag(column(&EngineeredFeatures::email_phone_validated)) != 0.0;
    out.free_bulk_search_number = lower_median(column(&EngineeredFeatures::free_bulk_search_number));
    out.price_register = lower_median(column(&EngineeredFeatures::price_register));
    out.discount_register = lower_median(column(&EngineeredFeatures::discount_register));
    out.uptime_s = lower_median(column(&EngineeredFeatures::uptime_s));
    return out;
}

} // namespace

std::vector<CountRow> build_count_table(const std::vector<DomainFeatures>& malicious) {
    std::map<std::pair<int, std::string>, std::vector<const EngineeredFeatures*>> groups;
    for (const auto& d : malicious) groups[{d.registrar_iana, d.tld}].push_back(&d.features);

    std::vector<CountRow> rows;
    for (const auto& [key, feats] : groups) {
        CountRow row;
        row.registrar_iana = key.first;
        row.tld = key.second;
        row.malicious_count = feats.size();
        row.features = reduce_features(feats);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<FeatureRow> build_domain_rows(const std::vector<DomainFeatures>& malicious,
                                          const std::vector<DomainFeatures>& benign) {
    std::vector<FeatureRow> rows;
    std::set<std::string> seen;
    auto add = [&](const DomainFeatures& d, bool label) {
        if (!seen.insert(d.domain.registered_part).second)
            throw Error(ErrorCode::DuplicateDomain, d.domain.registered_part);
        rows.push_back(FeatureRow{d.domain, d.registrar_iana, d.tld, label, d.features});
    };
    for (const auto& d : malicious) add(d, true);
    for (const auto& d : benign) add(d, false);
    std::sort(rows.begin(), rows.end(), [](const FeatureRow& a, const FeatureRow& b) {
        return std::tie(a.registrar_iana, a.tld, a.domain.ascii_name) <
               std::tie(b.registrar_iana, b.tld, b.domain.ascii_name);
    });
    return rows;
}

// --- CSV output ------------------------------------------------------------------

namespace {

std::string feature_header() {
    std::string out;
    for (const auto& name : engineered_feature_names()) out += "," + csv_escape(name);
    return out;
}

std::string feature_fields(const EngineeredFeatures& f) {
    std::string out;
    for (double v : f.as_vector()) out += "," + format_double(v);
    return out;
}

} // namespace

std::string count_table_to_csv(const std::vector<CountRow>& rows) {
    std::string out = "registrar_iana,tld,malicious" + feature_header() + "\n";
    for (const auto& r : rows)
        out += std::to_string(r.registrar_iana) + "," + csv_escape(r.tld) + "," +
               std::to_string(r.malicious_count) + feature_fields(r.features) + "\n";
    return out;
}

std::string domain_rows_to_csv(const std::vector<FeatureRow>& rows) {
    std::string out = "domain,registrar_iana,tld,malicious" + feature_header() + "\n";
    for (const auto& r : rows)
        out += csv_escape(r.domain.registered_part) + "," + std::to_string(r.registrar_iana) + "," +
               csv_escape(r.tld) + "," + (r.malicious ? "1" : "0") + feature_fields(r.features) +
               "\n";
    return out;
}

} // namespace regscope
