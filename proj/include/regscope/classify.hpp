#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "regscope/dnsprobe.hpp"
#include "regscope/regdata.hpp"
#include "regscope/time.hpp"

namespace regscope {

enum class Label {
    MaliciouslyRegistered,
    ExcludedShortener,
    ExcludedSubdomainProvider,
    NotDnsMitigated,
    RegistrationTooOld,
    NoRegistrationData,
    RegistrarNotCovered,
};

std::string to_string(Label l);
std::optional<Label> label_from_string(std::string_view s);

enum class ExclusionVerdict { none, shortener, subdomain_provider };

struct ClassifiedDomain {
    DomainName domain;
    Timestamp listed_at;
    Label label;
    std::vector<std::pair<std::string, std::string>> evidence; // (rule, value)
};

struct ClassifyParams {
    int window_days = 90;
    int monitor_days = 30;
    Duration created_after_slack = hours(24); // feed clock skew allowance
    /// Empty set disables coverage filtering.
    std::set<int> covered_registrars;
};

/// First-match rule order: exclusion lists, missing registration data,
/// registration outside the window, no DNS mitigation inside the monitoring
/// period, registrar coverage, and finally MaliciouslyRegistered. Evidence
/// carries both the window and the mitigation facts regardless of which rule
/// fired. Probes must be sorted by offset and belong to the domain
/// (Error{InconsistentInput} otherwise).
ClassifiedDomain classify(const DomainName& domain, Timestamp listed_at,
                          ExclusionVerdict exclusion, const RegistrationRecord& reg,
                          const std::vector<ProbeResult>& probes,
                          const ClassifyParams& params = {});

struct CorpusInput {
    DomainName domain;
    Timestamp listed_at;
    ExclusionVerdict exclusion = ExclusionVerdict::none;
    RegistrationRecord reg;
    std::vector<ProbeResult> probes;
};

struct CorpusSummary {
    std::map<Label, std::size_t> counts;
    std::vector<ClassifiedDomain> classified; // ordered by domain
};

CorpusSummary classify_corpus(const std::vector<CorpusInput>& inputs,
                              const ClassifyParams& params = {});

std::string classified_to_json(const ClassifiedDomain& c);
ClassifiedDomain classified_from_json(const std::string& line, const PublicSuffixRuleSet& rules);

} // namespace regscope
