#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace regscope {

/// Public-suffix rules with `*` wildcard and `!` exception semantics.
/// The rule file ships as a pinned snapshot so registered-part extraction is
/// reproducible across runs.
class PublicSuffixRuleSet {
public:
    static PublicSuffixRuleSet from_file(const std::string& path);
    static PublicSuffixRuleSet from_lines(const std::vector<std::string>& lines);

    /// Longest-match public suffix for an already-normalized lowercase ASCII
    /// name. Falls back to the rightmost label when no rule matches (the
    /// implicit `*` rule). Returns nullopt for an empty input.
    std::optional<std::string> public_suffix(std::string_view ascii_name) const;

    std::size_t rule_count() const { return rules_.size(); }
    const std::string& version() const { return version_; }

private:
    struct Rule {
        bool wildcard = false;
        bool exception = false;
    };

    // Keyed by the rule text without markers; "*." prefixed keys keep the star.
    std::unordered_set<std::string> plain_;
    std::unordered_set<std::string> wildcard_;  // stored without the "*." prefix
    std::unordered_set<std::string> exception_; // stored without the "!" prefix
    std::vector<std::string> rules_;
    std::string version_;
};

} // namespace regscope
