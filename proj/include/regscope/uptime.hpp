#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "regscope/dnsprobe.hpp"
#include "regscope/time.hpp"

namespace regscope {

/// Probe offsets since blocklisting: dense over the first two days, then
/// twelve-hourly out to the horizon.
struct ProbeSchedule {
    std::vector<Duration> offsets; // strictly increasing, first element 0
};

/// Throws Error{InvalidArgument} when horizon_days < 3.
ProbeSchedule build_schedule(int horizon_days = 30);

/// Time from blocklisting to the first probe that satisfies the mitigation
/// criterion. Censored records carry uptime = horizon.
struct UptimeRecord {
    DomainName domain;
    Duration uptime;
    bool censored = false;
    bool notified = false;
};

/// Probes must be sorted by offset and non-empty (Error{NoProbes} otherwise).
/// When the offset-0 probe is already mitigated, the uptime is the actual
/// wall-clock delay between listing and that first measurement.
UptimeRecord compute_uptime(Timestamp listed_at, const std::vector<ProbeResult>& probes,
                            Duration horizon);

enum class NotifiedFilter { notified, not_notified, all };
enum class CensorMode { capped, dropped };

std::string to_string(NotifiedFilter f);

/// Median uptime with the lower-middle convention for even counts. Censored
/// records enter at the horizon value in capped mode and are dropped
/// otherwise. Throws Error{EmptyGroup} when nothing survives the filter.
Duration aggregate_median(const std::vector<UptimeRecord>& records, NotifiedFilter filter,
                          CensorMode censor = CensorMode::capped);

/// Per registrar-TLD medians for each filter, as written to the uptime table:
/// registrar_iana,tld,notified_filter,median_uptime_s,n,censored_n
struct UptimeTableRow {
    int registrar_iana;
    std::string tld;
    NotifiedFilter filter;
    Duration median;
    std::size_t n = 0;
    std::size_t censored_n = 0;
};

std::vector<UptimeTableRow> build_uptime_table(
    const std::map<std::pair<int, std::string>, std::vector<UptimeRecord>>& groups,
    CensorMode censor = CensorMode::capped);

std::string uptime_table_to_csv(const std::vector<UptimeTableRow>& rows);
std::vector<UptimeTableRow> uptime_table_from_csv(const std::string& path);

} // namespace regscope
