#pragma once

// Hand-labeled 12-domain classification fixture. Every expected label was
// derived by hand from the rule order before any implementation ran:
// exclusions, then missing registration data, then the registration window,
// then DNS mitigation, then registrar coverage.

#include <map>
#include <string>
#include <vector>

#include "regscope/classify.hpp"

namespace fixture {

struct LabeledCorpus {
    std::vector<regscope::CorpusInput> inputs;
    std::map<std::string, regscope::Label> expected; // registered_part -> label
    regscope::ClassifyParams params;
};

inline LabeledCorpus make_labeled_corpus(const regscope::PublicSuffixRuleSet& rules) {
    using namespace regscope;
    LabeledCorpus corpus;
    corpus.params.window_days = 90;
    corpus.params.monitor_days = 30;
    corpus.params.covered_registrars = {1479, 1636, 1068, 1923, 146, 3775, 1861};

    auto dn = [&](const char* name) { return normalize_domain(name, rules); };
    auto reg = [&](const char* name, const char* created, int iana) {
        RegistrationRecord r;
        r.domain = dn(name);
        if (created) r.created_at = parse_timestamp(created);
        r.registrar.iana_id = iana;
        r.protocol = RegProtocol::fixture;
        return r;
    };
    auto probe = [&](const char* name, Duration offset, DnsOutcome outcome,
                     std::set<EppStatus> holds = {}, Timestamp probed_at = {}) {
        ProbeResult p;
        p.domain = dn(name);
        p.offset = offset;
        p.dns_outcome = outcome;
        p.holds = std::move(holds);
        p.probed_at = probed_at;
        return p;
    };
    auto add = [&](CorpusInput input, Label expected_label) {
        corpus.expected[input.domain.registered_part] = expected_label;
        corpus.inputs.push_back(std::move(input));
    };
    std::set<EppStatus> client_hold = {make_epp_status(EppStatusCode::clientHold)};
    std::set<EppStatus> server_hold = {make_epp_status(EppStatusCode::serverHold)};

    // 1. Registered one day before listing, NXDOMAIN four hours in.
    {
        Timestamp listed = *parse_timestamp("2024-06-05T15:22:03Z");
        add({dn("chase03.com"), listed, ExclusionVerdict::none,
             reg("chase03.com", "2024-06-04T15:22:03Z", 1479),
             {probe("chase03.com", Duration{0}, DnsOutcome::answered, {}, listed + minutes(2)),
              probe("chase03.com", hours(4), DnsOutcome::nxdomain)}},
            Label::MaliciouslyRegistered);
    }
    // 2. Registered in 2008, DNS intact: compromised content, not a malicious
    //    registration.
    {
        Timestamp listed = *parse_timestamp("2024-07-14T09:00:00Z");
        add({dn("landpmullen.co.uk"), listed, ExclusionVerdict::none,
             reg("landpmullen.co.uk", "2008-10-28T00:00:00Z", 0),
             {probe("landpmullen.co.uk", Duration{0}, DnsOutcome::answered, {}, listed),
              probe("landpmullen.co.uk", hours(24), DnsOutcome::answered)}},
            Label::RegistrationTooOld);
    }
    // 3. 100 days old with an early clientHold: the window rule precedes the
    //    mitigation rule.
    {
        Timestamp listed = *parse_timestamp("2023-10-01T00:00:00Z");
        add({dn("oldreg-hold.com"), listed, ExclusionVerdict::none,
             reg("oldreg-hold.com", "2023-06-23T00:00:00Z", 1479),
             {probe("oldreg-hold.com", hours(2), DnsOutcome::answered, client_hold)}},
            Label::RegistrationTooOld);
    }
    // 4. Never mitigated inside the monitoring month; a later NXDOMAIN at day
    //    31 does not count.
    {
        Timestamp listed = *parse_timestamp("2023-09-10T12:00:00Z");
        add({dn("nevermitigated.xyz"), listed, ExclusionVerdict::none,
             reg("nevermitigated.xyz", "2023-09-05T12:00:00Z", 1068),
             {probe("nevermitigated.xyz", Duration{0}, DnsOutcome::answered, {}, listed),
              probe("nevermitigated.xyz", hours(48), DnsOutcome::answered),
              probe("nevermitigated.xyz", days(31), DnsOutcome::nxdomain)}},
            Label::NotDnsMitigated);
    }
    // 5. URL shortener.
    add({dn("bit.ly"), *parse_timestamp("2023-08-14T02:11:09Z"), ExclusionVerdict::shortener,
         RegistrationRecord{}, {}},
        Label::ExcludedShortener);
    // 6. Subdomain provider.
    add({dn("000webhostapp.com"), *parse_timestamp("2023-08-14T02:11:09Z"),
         ExclusionVerdict::subdomain_provider, RegistrationRecord{}, {}},
        Label::ExcludedSubdomainProvider);
    // 7. No registration data, despite an early NXDOMAIN.
    {
        Timestamp listed = *parse_timestamp("2023-09-01T00:00:00Z");
        add({dn("noreg.top"), listed, ExclusionVerdict::none, reg("noreg.top", nullptr, 1479),
             {probe("noreg.top", hours(1), DnsOutcome::nxdomain)}},
            Label::NoRegistrationData);
    }
    // 8. Passes every substantive rule but its registrar has no feature
    //    coverage.
    {
        Timestamp listed = *parse_timestamp("2023-09-15T00:00:00Z");
        add({dn("uncovered.shop"), listed, ExclusionVerdict::none,
             reg("uncovered.shop", "2023-09-14T00:00:00Z", 9999),
             {probe("uncovered.shop", hours(3), DnsOutcome::nxdomain)}},
            Label::RegistrarNotCovered);
    }
    // 9. Already on serverHold at the first scan, probed three minutes after
    //    listing.
    {
        Timestamp listed = *parse_timestamp("2023-10-05T08:00:00Z");
        add({dn("fastdown.info"), listed, ExclusionVerdict::none,
             reg("fastdown.info", "2023-10-04T20:00:00Z", 1923),
             {probe("fastdown.info", Duration{0}, DnsOutcome::answered, server_hold,
                    listed + minutes(3))}},
            Label::MaliciouslyRegistered);
    }
    // 10. Registered exactly 90 days before listing: inside the window.
    {
        Timestamp listed = *parse_timestamp("2023-12-01T00:00:00Z");
        add({dn("boundary90.net"), listed, ExclusionVerdict::none,
             reg("boundary90.net", "2023-09-02T00:00:00Z", 1068),
             {probe("boundary90.net", hours(12), DnsOutcome::nxdomain)}},
            Label::MaliciouslyRegistered);
    }
    // 11. Feed clock skew: created twelve hours after listing, within slack.
    {
        Timestamp listed = *parse_timestamp("2023-11-20T00:00:00Z");
        add({dn("skew.site"), listed, ExclusionVerdict::none,
             reg("skew.site", "2023-11-20T12:00:00Z", 1636),
             {probe("skew.site", hours(6), DnsOutcome::nxdomain)}},
            Label::MaliciouslyRegistered);
    }
    // 12. Created three days after listing: beyond slack, outside the window.
    {
        Timestamp listed = *parse_timestamp("2023-11-25T00:00:00Z");
        add({dn("futurereg.online"), listed, ExclusionVerdict::none,
             reg("futurereg.online", "2023-11-28T00:00:00Z", 1636),
             {probe("futurereg.online", hours(6), DnsOutcome::nxdomain)}},
            Label::RegistrationTooOld);
    }
    return corpus;
}

} // namespace fixture
