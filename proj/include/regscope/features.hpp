#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "regscope/domain.hpp"
#include "regscope/time.hpp"

namespace regscope {

enum class FeatureKind { boolean, numeric };

struct FeatureColumn {
    std::string name;
    FeatureKind kind;
};

/// Column schema of a feature snapshot: 46 registration attributes followed
/// by 25 proactive verification/restriction indicators.
const std::vector<FeatureColumn>& snapshot_schema();
std::size_t snapshot_column_index(const std::string& name);

/// Daily registrar/TLD attribute snapshot. Values are stored in schema order;
/// booleans as 0/1.
struct FeatureSnapshot {
    RegistrarKey registrar;
    std::string tld;
    Timestamp as_of;
    std::vector<double> values;

    double get(const std::string& name) const { return values.at(snapshot_column_index(name)); }
    bool flag(const std::string& name) const { return get(name) != 0.0; }
};

/// Nearest-prior lookup over loaded snapshots, keyed by (registrar, tld).
class SnapshotStore {
public:
    /// Loads every *.csv under dir. Throws Error{SchemaViolation} for a
    /// missing column and Error{OverlappingSnapshots} for duplicate
    /// (registrar, tld, as_of) keys.
    static SnapshotStore load_snapshots(const std::string& dir);
    static SnapshotStore from_csv_content(const std::string& content, const std::string& origin);

    /// Nearest snapshot with as_of <= date. Throws Error{MissingCoverage}.
    const FeatureSnapshot& nearest_prior(int registrar_iana, const std::string& tld,
                                         Timestamp date) const;
    bool covers(int registrar_iana, const std::string& tld) const;
    std::vector<std::pair<int, std::string>> keys() const;
    std::size_t size() const { return count_; }

private:
    void insert(FeatureSnapshot snapshot, const std::string& origin);

    std::map<std::pair<int, std::string>, std::vector<FeatureSnapshot>> by_key_;
    std::size_t count_ = 0;
};

/// Payment-method grouping for the composite payment indicators, loaded from
/// a `method,group` CSV.
class PaymentGroups {
public:
    static PaymentGroups from_file(const std::string& path);
    static PaymentGroups defaults();

    const std::vector<std::string>& members(const std::string& group) const;

private:
    std::map<std::string, std::vector<std::string>> groups_;
};

/// The 14 model predictors.
struct EngineeredFeatures {
    bool free_dns = false;
    bool free_web_host = false;
    bool free_ssl_cert = false;
    int restrictions = 0; // count of true restriction_* flags, 0..14
    int prevention = 0;   // count of true *_warning/*_prevention flags, 0..6
    bool api = false;
    bool payment_digital_wallet = false;
    bool payment_crypto = false;
    bool payment_transfer = false;
    bool email_phone_validated = false;
    double free_bulk_search_number = 0.0;
    double price_register = 0.0;
    double discount_register = 0.0;
    double uptime_s = 0.0;

    std::vector<double> as_vector() const;
};

/// Column labels of the engineered predictors, in model order.
const std::vector<std::string>& engineered_feature_names();

/// Composite-mode switch: counts follow the summed-indicator definition;
/// boolean mode collapses the composites to any-true.
enum class CompositeMode { counts, booleans };

/// Collapses one snapshot into the model predictors. The uptime predictor is
/// the arithmetic mean of whichever of the notified / not-notified medians
/// are available; a single value passes through.
EngineeredFeatures aggregate(const FeatureSnapshot& snapshot,
                             std::optional<double> uptime_notified_s,
                             std::optional<double> uptime_not_notified_s,
                             const PaymentGroups& payments = PaymentGroups::defaults(),
                             CompositeMode mode = CompositeMode::counts);

/// One registrar-TLD observation for the count model.
struct CountRow {
    int registrar_iana;
    std::string tld;
    std::size_t malicious_count = 0;
    EngineeredFeatures features;
};

struct DomainFeatures {
    DomainName domain;
    int registrar_iana;
    std::string tld;
    EngineeredFeatures features;
};

/// Pair-level reduction of per-domain features: one row per registrar-TLD
/// pair, count of malicious domains, modal value for booleans and median for
/// numerics. Inputs are already feature-joined; the joining stage raises
/// Error{JoinFailure} listing any domain it could not join.
std::vector<CountRow> build_count_table(const std::vector<DomainFeatures>& malicious);

/// Model-ready labeled row.
struct FeatureRow {
    DomainName domain;
    int registrar_iana;
    std::string tld;
    bool malicious = false;
    EngineeredFeatures features;
};

/// Union of malicious and benign rows ordered by (registrar, tld, domain).
/// Throws Error{DuplicateDomain} when a domain appears in both inputs.
std::vector<FeatureRow> build_domain_rows(const std::vector<DomainFeatures>& malicious,
                                          const std::vector<DomainFeatures>& benign);

std::string count_table_to_csv(const std::vector<CountRow>& rows);
std::string domain_rows_to_csv(const std::vector<FeatureRow>& rows);

} // namespace regscope
