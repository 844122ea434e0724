#include "regscope/classify.hpp"

#include <algorithm>

#include <json.hpp>

#include "regscope/errors.hpp"
#include "regscope/text.hpp"

namespace regscope {

std::string to_string(Label l) {
    switch (l) {
    case Label::MaliciouslyRegistered: return "MaliciouslyRegistered";
    case Label::ExcludedShortener: return "ExcludedShortener";
    case Label::ExcludedSubdomainProvider: return "ExcludedSubdomainProvider";
    case Label::NotDnsMitigated: return "NotDnsMitigated";
    case Label::RegistrationTooOld: return "RegistrationTooOld";
    case Label::NoRegistrationData: return "NoRegistrationData";
    case Label::RegistrarNotCovered: return "RegistrarNotCovered";
    }
    return "NoRegistrationData";
}

std::optional<Label> label_from_string(std::string_view s) {
    for (Label l : {Label::MaliciouslyRegistered, Label::ExcludedShortener,
                    Label::ExcludedSubdomainProvider, Label::NotDnsMitigated,
                    Label::RegistrationTooOld, Label::NoRegistrationData,
                    Label::RegistrarNotCovered})
        if (to_string(l) == s) return l;
    return std::nullopt;
}

namespace {

/// Whole UTC calendar days between two instants, listing minus creation.
std::int64_t age_in_days(Timestamp created, Timestamp listed) {
    return (listed.secs - created.secs) / 86400;
}

} // namespace

ClassifiedDomain classify(const DomainName& domain, Timestamp listed_at,
                          ExclusionVerdict exclusion, const RegistrationRecord& reg,
                          const std::vector<ProbeResult>& probes, const ClassifyParams& params) {
    for (const auto& probe : probes)
        if (probe.domain.registered_part != domain.registered_part)
            throw Error(ErrorCode::InconsistentInput,
                        "probe for " + probe.domain.registered_part + " given to " +
                            domain.registered_part);

    ClassifiedDomain out;
    out.domain = domain;
    out.listed_at = listed_at;

    // Facts are gathered up front so evidence carries the window and the
    // mitigation outcome no matter which rule decides the label.
    bool window_ok = false;
    if (reg.created_at) {
        std::int64_t age = age_in_days(*reg.created_at, listed_at);
        bool too_old = age > params.window_days;
        bool created_after = reg.created_at->secs > listed_at.secs + params.created_after_slack.secs;
        window_ok = !too_old && !created_after;
        out.evidence.emplace_back("created_at", format_timestamp(*reg.created_at));
        out.evidence.emplace_back("age_days", std::to_string(age));
    } else {
        out.evidence.emplace_back("created_at", "UNKNOWN");
    }

    std::optional<Duration> first_mitigated;
    Duration monitor = days(params.monitor_days);
    for (const auto& probe : probes) {
        if (probe.offset > monitor) break;
        if (is_dns_mitigated(probe.dns_outcome, probe.holds)) {
            first_mitigated = probe.offset;
            break;
        }
    }
    out.evidence.emplace_back("first_mitigated_offset_s",
                              first_mitigated ? std::to_string(first_mitigated->secs) : "none");

    // First-match rule order.
    if (exclusion == ExclusionVerdict::shortener) {
        out.label = Label::ExcludedShortener;
        out.evidence.emplace_back("exclusion", "url_shortener");
        return out;
    }
    if (exclusion == ExclusionVerdict::subdomain_provider) {
        out.label = Label::ExcludedSubdomainProvider;
        out.evidence.emplace_back("exclusion", "subdomain_provider");
        return out;
    }
    if (!reg.created_at) {
        out.label = Label::NoRegistrationData;
        return out;
    }
    if (!window_ok) {
        out.label = Label::RegistrationTooOld;
        return out;
    }
    if (!first_mitigated) {
        out.label = Label::NotDnsMitigated;
        return out;
    }
    if (!params.covered_registrars.empty() &&
        params.covered_registrars.count(reg.registrar.iana_id) == 0) {
        out.label = Label::RegistrarNotCovered;
        out.evidence.emplace_back("registrar_iana", std::to_string(reg.registrar.iana_id));
        return out;
    }
    out.label = Label::MaliciouslyRegistered;
    return out;
}

CorpusSummary classify_corpus(const std::vector<CorpusInput>& inputs, const ClassifyParams& params) {
    CorpusSummary summary;
    for (const auto& input : inputs)
        summary.classified.push_back(
            classify(input.domain, input.listed_at, input.exclusion, input.reg, input.probes, params));
    std::sort(summary.classified.begin(), summary.classified.end(),
              [](const ClassifiedDomain& a, const ClassifiedDomain& b) {
                  return a.domain.ascii_name < b.domain.ascii_name;
              });
    for (const auto& c : summary.classified) ++summary.counts[c.label];
    return summary;
}

std::string classified_to_json(const ClassifiedDomain& c) {
    nlohmann::json j;
    j["domain"] = c.domain.registered_part;
    j["tld"] = c.domain.tld;
    j["listed_at"] = format_timestamp(c.listed_at);
    j["label"] = to_string(c.label);
    auto ev = nlohmann::json::array();
    for (const auto& [rule, value] : c.evidence) ev.push_back({{"rule", rule}, {"value", value}});
    j["evidence"] = ev;
    return j.dump();
}

ClassifiedDomain classified_from_json(const std::string& line, const PublicSuffixRuleSet& rules) {
    nlohmann::json j = nlohmann::json::parse(line);
    ClassifiedDomain c;
    c.domain = normalize_domain(j.at("domain").get<std::string>(), rules);
    if (auto at = parse_timestamp(j.value("listed_at", ""))) c.listed_at = *at;
    auto label = label_from_string(j.at("label").get<std::string>());
    if (!label) throw Error(ErrorCode::SchemaViolation, "bad label: " + line);
    c.label = *label;
    for (const auto& ev : j.value("evidence", nlohmann::json::array()))
        c.evidence.emplace_back(ev.value("rule", ""), ev.value("value", ""));
    return c;
}

} // namespace regscope
