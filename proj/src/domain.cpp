#include "regscope/domain.hpp"

#include <algorithm>
#include <cctype>

#include "regscope/errors.hpp"
#include "regscope/text.hpp"

namespace regscope {

namespace detail {

std::optional<std::vector<char32_t>> utf8_decode(std::string_view s) {
    std::vector<char32_t> out;
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        char32_t cp = 0;
        int extra = 0;
        if (c < 0x80) {
            cp = c;
        } else if ((c & 0xE0) == 0xC0) {
            cp = c & 0x1F;
            extra = 1;
        } else if ((c & 0xF0) == 0xE0) {
            cp = c & 0x0F;
            extra = 2;
        } else if ((c & 0xF8) == 0xF0) {
            cp = c & 0x07;
            extra = 3;
        } else {
            return std::nullopt;
        }
        if (extra > 0 && i + static_cast<std::size_t>(extra) >= s.size()) return std::nullopt;
        for (int k = 1; k <= extra; ++k) {
            unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return std::nullopt;
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (cp > 0x10FFFF) return std::nullopt;
        out.push_back(cp);
        i += 1 + extra;
    }
    return out;
}

namespace {

constexpr char32_t kBase = 36, kTmin = 1, kTmax = 26, kSkew = 38, kDamp = 700;
constexpr char32_t kInitialBias = 72, kInitialN = 128;

char encode_digit(char32_t d) {
    return d < 26 ? static_cast<char>('a' + d) : static_cast<char>('0' + d - 26);
}

char32_t adapt(char32_t delta, char32_t numpoints, bool firsttime) {
    delta = firsttime ? delta / kDamp : delta / 2;
    delta += delta / numpoints;
    char32_t k = 0;
    while (delta > ((kBase - kTmin) * kTmax) / 2) {
        delta /= kBase - kTmin;
        k += kBase;
    }
    return k + ((kBase - kTmin + 1) * delta) / (delta + kSkew);
}

} // namespace

std::string punycode_encode(const std::vector<char32_t>& input) {
    std::string output;
    char32_t n = kInitialN, delta = 0, bias = kInitialBias;

    for (char32_t cp : input)
        if (cp < 0x80) output += static_cast<char>(cp);
    char32_t basic = static_cast<char32_t>(output.size());
    char32_t handled = basic;
    if (basic > 0) output += '-';

    while (handled < input.size()) {
        char32_t m = 0x110000;
        for (char32_t cp : input)
            if (cp >= n && cp < m) m = cp;
        delta += (m - n) * (handled + 1);
        n = m;
        for (char32_t cp : input) {
            if (cp < n) ++delta;
            if (cp == n) {
                char32_t q = delta;
                for (char32_t k = kBase;; k += kBase) {
                    char32_t t = k <= bias ? kTmin : (k >= bias + kTmax ? kTmax : k - bias);
                    if (q < t) break;
                    output += encode_digit(t + (q - t) % (kBase - t));
                    q = (q - t) / (kBase - t);
                }
                output += encode_digit(q);
                bias = adapt(delta, handled + 1, handled == basic);
                delta = 0;
                ++handled;
            }
        }
        ++delta;
        ++n;
    }
    return output;
}

} // namespace detail

namespace {

bool is_ldh(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
}

/// One label to its ASCII form: case-folds ASCII, punycodes anything else.
std::string label_to_ascii(std::string_view label) {
    bool ascii = true;
    for (char c : label)
        if (static_cast<unsigned char>(c) >= 0x80) ascii = false;
    std::string lowered = to_lower_ascii(label);
    if (ascii) return lowered;
    auto cps = detail::utf8_decode(lowered);
    if (!cps) throw Error(ErrorCode::MalformedName, "invalid UTF-8 in label");
    return "xn--" + detail::punycode_encode(*cps);
}

} // namespace

DomainName normalize_domain(std::string_view raw, const PublicSuffixRuleSet& rules) {
    std::string_view input = trim(raw);
    if (input.empty()) throw Error(ErrorCode::MalformedName, "empty name");
    if (input.back() == '.') input.remove_suffix(1); // one trailing dot allowed
    if (input.empty()) throw Error(ErrorCode::MalformedName, "only a dot");

    std::string ascii;
    for (const auto& part : split(input, '.')) {
        if (part.empty())
            throw Error(ErrorCode::MalformedName, "empty label in '" + std::string(raw) + "'");
        std::string label = label_to_ascii(part);
        if (label.size() > 63)
            throw Error(ErrorCode::MalformedName, "label over 63 octets: " + label);
        for (char c : label)
            if (!is_ldh(c))
                throw Error(ErrorCode::MalformedName,
                            std::string("illegal character '") + c + "' in " + label);
        if (label.front() == '-' || label.back() == '-')
            throw Error(ErrorCode::MalformedName, "hyphen at label edge: " + label);
        if (!ascii.empty()) ascii += '.';
        ascii += label;
    }
    if (ascii.size() > 253)
        throw Error(ErrorCode::MalformedName, "name exceeds 253 octets");

    auto suffix = rules.public_suffix(ascii);
    if (!suffix)
        throw Error(ErrorCode::NoPublicSuffix, "no suffix rule for " + ascii);
    if (*suffix == ascii)
        throw Error(ErrorCode::NoPublicSuffix, ascii + " is itself a public suffix");
    if (ascii.size() < suffix->size() + 2 || ascii[ascii.size() - suffix->size() - 1] != '.')
        throw Error(ErrorCode::NoPublicSuffix, "suffix mismatch for " + ascii);

    // Registered part = matched suffix plus exactly one more label.
    std::size_t cut = ascii.size() - suffix->size() - 2; // last char of the extra label
    while (cut > 0 && ascii[cut] != '.') --cut;
    std::string registered = ascii[cut] == '.' ? ascii.substr(cut + 1) : ascii.substr(cut);

    DomainName out;
    out.ascii_name = std::move(ascii);
    out.registered_part = std::move(registered);
    out.tld = std::move(*suffix);
    return out;
}

// --- RegistrarAliasTable -----------------------------------------------------

RegistrarAliasTable RegistrarAliasTable::from_file(const std::string& path) {
    std::vector<std::pair<int, std::string>> rows;
    for (const auto& raw : read_lines(path)) {
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_csv(line);
        if (fields.size() < 2) continue;
        std::string_view id_text = trim(fields[0]);
        if (iequals_ascii(id_text, "iana_id")) continue; // header
        rows.emplace_back(std::stoi(std::string(id_text)), std::string(trim(fields[1])));
    }
    return from_rows(rows);
}

RegistrarAliasTable RegistrarAliasTable::from_rows(
    const std::vector<std::pair<int, std::string>>& rows) {
    RegistrarAliasTable table;
    for (const auto& [id, family] : rows) {
        table.member_to_family_[id] = family;
        auto it = table.family_canonical_.find(family);
        if (it == table.family_canonical_.end() || id < it->second)
            table.family_canonical_[family] = id;
    }
    return table;
}

RegistrarKey RegistrarAliasTable::family(int iana_id) const {
    if (iana_id == kUnknownIanaId) return RegistrarKey{};
    auto it = member_to_family_.find(iana_id);
    if (it == member_to_family_.end()) return RegistrarKey{iana_id, ""};
    return RegistrarKey{family_canonical_.at(it->second), it->second};
}

std::size_t RegistrarAliasTable::family_count() const { return family_canonical_.size(); }

// --- EPP statuses -------------------------------------------------------------

EppStatus make_epp_status(EppStatusCode code) {
    switch (code) {
    case EppStatusCode::clientHold: return {code, "clientHold"};
    case EppStatusCode::serverHold: return {code, "serverHold"};
    case EppStatusCode::ok: return {code, "ok"};
    case EppStatusCode::other: return {code, ""};
    }
    return {EppStatusCode::other, ""};
}

EppStatus parse_epp_status(std::string_view raw) {
    std::string_view token = trim(raw);
    auto space = token.find_first_of(" \t");
    if (space != std::string_view::npos) token = token.substr(0, space);
    if (token.empty()) return {EppStatusCode::other, ""};
    if (iequals_ascii(token, "clienthold")) return make_epp_status(EppStatusCode::clientHold);
    if (iequals_ascii(token, "serverhold")) return make_epp_status(EppStatusCode::serverHold);
    if (iequals_ascii(token, "ok")) return make_epp_status(EppStatusCode::ok);
    return {EppStatusCode::other, std::string(token)};
}

EppStatus rdap_status_to_epp(std::string_view rdap_value) {
    std::string_view v = trim(rdap_value);
    if (iequals_ascii(v, "client hold")) return make_epp_status(EppStatusCode::clientHold);
    if (iequals_ascii(v, "server hold")) return make_epp_status(EppStatusCode::serverHold);
    if (iequals_ascii(v, "active")) return make_epp_status(EppStatusCode::ok);
    return {EppStatusCode::other, std::string(v)};
}

std::string to_string(const EppStatus& status) {
    if (status.code == EppStatusCode::other) return status.text;
    return make_epp_status(status.code).text;
}

bool is_hold(const EppStatus& status) {
    return status.code == EppStatusCode::clientHold || status.code == EppStatusCode::serverHold;
}

bool any_hold(const std::set<EppStatus>& statuses) {
    return std::any_of(statuses.begin(), statuses.end(), [](const EppStatus& s) { return is_hold(s); });
}

} // namespace regscope
