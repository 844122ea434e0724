#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "regscope/psl.hpp"

namespace regscope {

/// Normalized domain name. ascii_name is lowercase punycode with no trailing
/// dot; registered_part is the registrable domain (one label below the
/// matched public suffix); tld is the matched public-suffix label set.
struct DomainName {
    std::string ascii_name;
    std::string registered_part;
    std::string tld;

    friend auto operator<=>(const DomainName& a, const DomainName& b) {
        return a.ascii_name <=> b.ascii_name;
    }
    friend bool operator==(const DomainName& a, const DomainName& b) {
        return a.ascii_name == b.ascii_name;
    }
};

/// Lowercases, strips one trailing dot, punycodes non-ASCII labels, validates
/// LDH label syntax, and computes the registered part by longest-matching
/// public-suffix rule.
/// Throws Error{MalformedName} or Error{NoPublicSuffix}.
DomainName normalize_domain(std::string_view raw, const PublicSuffixRuleSet& rules);

namespace detail {
/// RFC 3492 punycode for a single label of Unicode code points.
std::string punycode_encode(const std::vector<char32_t>& codepoints);
/// Decodes UTF-8; returns nullopt on invalid sequences.
std::optional<std::vector<char32_t>> utf8_decode(std::string_view s);
} // namespace detail

// --- Registrars ------------------------------------------------------------

inline constexpr int kUnknownIanaId = 0;

/// A registrar family. Several IANA IDs may map to one family (resellers and
/// regional arms share a brand); iana_id holds the family-canonical ID.
struct RegistrarKey {
    int iana_id = kUnknownIanaId;
    std::string display_name;

    bool known() const { return iana_id != kUnknownIanaId; }

    friend auto operator<=>(const RegistrarKey& a, const RegistrarKey& b) {
        return a.iana_id <=> b.iana_id;
    }
    friend bool operator==(const RegistrarKey& a, const RegistrarKey& b) {
        return a.iana_id == b.iana_id;
    }
};

/// Maps member IANA IDs to registrar families. Loaded from a CSV of
/// `iana_id,family_name` rows; the canonical ID of a family is its smallest
/// member ID.
class RegistrarAliasTable {
public:
    static RegistrarAliasTable from_file(const std::string& path);
    static RegistrarAliasTable from_rows(const std::vector<std::pair<int, std::string>>& rows);

    /// Family key for a raw IANA ID. IDs absent from the table form their own
    /// single-member family with an empty display name.
    RegistrarKey family(int iana_id) const;

    std::size_t family_count() const;

private:
    std::map<int, std::string> member_to_family_;   // iana -> family name
    std::map<std::string, int> family_canonical_;   // family name -> min iana
};

// --- EPP statuses -----------------------------------------------------------

enum class EppStatusCode { clientHold, serverHold, ok, other };

struct EppStatus {
    EppStatusCode code = EppStatusCode::other;
    std::string text; // original token for `other`; canonical camelCase otherwise

    friend auto operator<=>(const EppStatus&, const EppStatus&) = default;
};

EppStatus make_epp_status(EppStatusCode code);

/// Total function: trims, keeps the first whitespace-separated token (WHOIS
/// status lines append an icann.org URL), matches case-insensitively, and
/// preserves unknown tokens as `other`.
EppStatus parse_epp_status(std::string_view raw);

/// RDAP status vocabulary uses spaced lowercase words ("client hold").
EppStatus rdap_status_to_epp(std::string_view rdap_value);

std::string to_string(const EppStatus& status);

bool is_hold(const EppStatus& status);
bool any_hold(const std::set<EppStatus>& statuses);

} // namespace regscope
