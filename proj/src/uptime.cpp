#include "regscope/uptime.hpp"

#include <algorithm>

#include "regscope/errors.hpp"
#include "regscope/text.hpp"

namespace regscope {

ProbeSchedule build_schedule(int horizon_days) {
    if (horizon_days < 3)
        throw Error(ErrorCode::InvalidArgument, "schedule horizon must be at least 3 days");
    ProbeSchedule s;
    s.offsets = {Duration{0}, minutes(5),  minutes(15), minutes(30), hours(1),
                 hours(2),    hours(3),    hours(4),    hours(5),    hours(6),
                 hours(12),   hours(24),   hours(36),   hours(48)};
    Duration horizon = days(horizon_days);
    for (Duration t = hours(60); t <= horizon; t = t + hours(12)) s.offsets.push_back(t);
    return s;
}

UptimeRecord compute_uptime(Timestamp listed_at, const std::vector<ProbeResult>& probes,
                            Duration horizon) {
    if (probes.empty()) throw Error(ErrorCode::NoProbes, "no probes supplied");

    UptimeRecord rec;
    rec.domain = probes.front().domain;
    rec.notified = std::any_of(probes.begin(), probes.end(),
                               [](const ProbeResult& p) { return p.notified; });

    for (const auto& probe : probes) {
        if (probe.offset > horizon) break;
        if (!is_dns_mitigated(probe.dns_outcome, probe.holds)) continue;
        if (probe.offset.secs == 0) {
            // Already mitigated at the first scan: the wall-clock delay from
            // listing to that measurement approximates the mitigation time.
            Duration delay = probe.probed_at - listed_at;
            rec.uptime = delay.secs > 0 ? delay : Duration{0};
        } else {
            rec.uptime = probe.offset;
        }
        rec.censored = false;
        return rec;
    }
    rec.uptime = horizon;
    rec.censored = true;
    return rec;
}

std::string to_string(NotifiedFilter f) {
    switch (f) {
    case NotifiedFilter::notified: return "notified";
    case NotifiedFilter::not_notified: return "not_notified";
    case NotifiedFilter::all: return "all";
    }
    return "all";
}

Duration aggregate_median(const std::vector<UptimeRecord>& records, NotifiedFilter filter,
                          CensorMode censor) {
    std::vector<std::int64_t> values;
    for (const auto& rec : records) {
        if (filter == NotifiedFilter::notified && !rec.notified) continue;
        if (filter == NotifiedFilter::not_notified && rec.notified) continue;
        if (rec.censored && censor == CensorMode::dropped) continue;
        values.push_back(rec.uptime.secs);
    }
    if (values.empty()) throw Error(ErrorCode::EmptyGroup, "no uptimes after filtering");
    std::sort(values.begin(), values.end());
    return Duration{values[(values.size() - 1) / 2]}; // lower middle
}

std::vector<UptimeTableRow> build_uptime_table(
    const std::map<std::pair<int, std::string>, std::vector<UptimeRecord>>& groups,
    CensorMode censor) {
    std::vector<UptimeTableRow> rows;
    for (const auto& [key, records] : groups) {
        for (NotifiedFilter f : {NotifiedFilter::notified, NotifiedFilter::not_notified,
                                 NotifiedFilter::all}) {
            UptimeTableRow row;
            row.registrar_iana = key.first;
            row.tld = key.second;
            row.filter = f;
            row.n = 0;
            row.censored_n = 0;
            for (const auto& rec : records) {
                if (f == NotifiedFilter::notified && !rec.notified) continue;
                if (f == NotifiedFilter::not_notified && rec.notified) continue;
                ++row.n;
                if (rec.censored) ++row.censored_n;
            }
            if (row.n == 0) continue; // empty groups are omitted, not zero-filled
            if (censor == CensorMode::dropped && row.n == row.censored_n) continue;
            row.median = aggregate_median(records, f, censor);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string uptime_table_to_csv(const std::vector<UptimeTableRow>& rows) {
    std::string out = "registrar_iana,tld,notified_filter,median_uptime_s,n,censored_n\n";
    for (const auto& r : rows) {
        out += std::to_string(r.registrar_iana) + "," + csv_escape(r.tld) + "," +
               to_string(r.filter) + "," + std::to_string(r.median.secs) + "," +
               std::to_string(r.n) + "," + std::to_string(r.censored_n) + "\n";
    }
    return out;
}

std::vector<UptimeTableRow> uptime_table_from_csv(const std::string& path) {
    std::vector<UptimeTableRow> rows;
    bool header_seen = false;
    for (const auto& raw : read_lines(path)) {
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        auto f = split_csv(line);
        if (f.size() < 6) throw Error(ErrorCode::SchemaViolation, "bad uptime table row: " + std::string(line));
        UptimeTableRow row;
        row.registrar_iana = std::stoi(f[0]);
        row.tld = f[1];
        if (f[2] == "notified") row.filter = NotifiedFilter::notified;
        else if (f[2] == "not_notified") row.filter = NotifiedFilter::not_notified;
        else row.filter = NotifiedFilter::all;
        row.median = Duration{std::stoll(f[3])};
        row.n = static_cast<std::size_t>(std::stoull(f[4]));
        row.censored_n = static_cast<std::size_t>(std::stoull(f[5]));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace regscope
