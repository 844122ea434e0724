#include "regscope/psl.hpp"

#include "regscope/errors.hpp"
#include "regscope/text.hpp"

namespace regscope {

PublicSuffixRuleSet PublicSuffixRuleSet::from_file(const std::string& path) {
    return from_lines(read_lines(path));
}

PublicSuffixRuleSet PublicSuffixRuleSet::from_lines(const std::vector<std::string>& lines) {
    PublicSuffixRuleSet set;
    for (const auto& raw : lines) {
        std::string_view line = trim(raw);
        if (line.empty()) continue;
        if (line.substr(0, 2) == "//" || line.front() == '#') {
            auto pos = line.find("Version:");
            if (pos != std::string_view::npos && set.version_.empty())
                set.version_ = std::string(trim(line.substr(pos + 8)));
            continue;
        }
        std::string rule = to_lower_ascii(line.substr(0, line.find_first_of(" \t")));
        set.rules_.push_back(rule);
        if (rule.front() == '!') {
            set.exception_.insert(rule.substr(1));
        } else if (rule.rfind("*.", 0) == 0) {
            set.wildcard_.insert(rule.substr(2));
        } else {
            set.plain_.insert(rule);
        }
    }
    return set;
}

std::optional<std::string> PublicSuffixRuleSet::public_suffix(std::string_view ascii_name) const {
    if (ascii_name.empty()) return std::nullopt;

    // Candidate suffixes from longest to shortest, by label boundary.
    std::vector<std::size_t> starts; // index of each label start
    starts.push_back(0);
    for (std::size_t i = 0; i < ascii_name.size(); ++i)
        if (ascii_name[i] == '.') starts.push_back(i + 1);

    // Exception rules prevail over everything else.
    for (std::size_t s : starts) {
        std::string cand(ascii_name.substr(s));
        if (exception_.count(cand)) {
            auto dot = cand.find('.');
            if (dot == std::string::npos) return std::nullopt; // "!tld" would leave no suffix
            return cand.substr(dot + 1);
        }
    }

    // Otherwise the prevailing rule is the one with the most labels; scanning
    // longest-first returns it directly.
    for (std::size_t s : starts) {
        std::string cand(ascii_name.substr(s));
        if (plain_.count(cand)) return cand;
        auto dot = cand.find('.');
        if (dot != std::string::npos && wildcard_.count(cand.substr(dot + 1))) return cand;
    }

    // Implicit "*" rule: the rightmost label is the public suffix.
    return std::string(ascii_name.substr(starts.back()));
}

} // namespace regscope
