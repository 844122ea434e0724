#include "regscope/sampler.hpp"

#include <algorithm>

#include "regscope/errors.hpp"
#include "regscope/text.hpp"

namespace regscope {

MarketShareTable load_market_shares(const std::string& path) {
    MarketShareTable table;
    std::map<int, long long> counts;
    long long total = 0;
    bool header_seen = false;
    for (const auto& raw : read_lines(path)) {
        std::string_view line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '#') {
            auto pos = line.find("as_of:");
            if (pos != std::string_view::npos) table.as_of = std::string(trim(line.substr(pos + 6)));
            continue;
        }
        auto fields = split_csv(line);
        if (!header_seen && fields.size() >= 2 && iequals_ascii(trim(fields[0]), "registrar_iana")) {
            header_seen = true;
            continue;
        }
        if (fields.size() < 2)
            throw Error(ErrorCode::SchemaViolation, path + ": expected registrar_iana,domain_count");
        int iana = std::stoi(std::string(trim(fields[0])));
        long long count = std::stoll(std::string(trim(fields[1])));
        if (count < 0)
            throw Error(ErrorCode::NegativeCount,
                        path + ": registrar " + std::to_string(iana) + " has count " +
                            std::to_string(count));
        counts[iana] += count;
        total += count;
    }
    if (total == 0) throw Error(ErrorCode::EmptyReport, path + ": no positive domain counts");
    for (const auto& [iana, count] : counts)
        table.shares[iana] = static_cast<double>(count) / static_cast<double>(total);
    return table;
}

std::map<int, std::size_t> apportion_quotas(const std::map<int, double>& shares,
                                            const std::map<int, std::size_t>& pool_sizes,
                                            std::size_t n) {
    // Strata eligible for apportionment: positive share and a nonempty pool.
    struct Stratum {
        int key;
        double share;
        std::size_t pool;
    };
    std::vector<Stratum> strata;
    for (const auto& [key, share] : shares) {
        auto it = pool_sizes.find(key);
        std::size_t pool = it == pool_sizes.end() ? 0 : it->second;
        if (share > 0 && pool > 0) strata.push_back({key, share, pool});
    }

    std::map<int, std::size_t> quotas;
    std::vector<bool> capped(strata.size(), false);
    std::size_t remaining = n;

    // Redistribution loop: apportion the remainder over uncapped strata until
    // every quota fits its pool.
    while (remaining > 0) {
        double share_sum = 0;
        std::size_t open = 0;
        for (std::size_t i = 0; i < strata.size(); ++i)
            if (!capped[i]) {
                share_sum += strata[i].share;
                ++open;
            }
        if (open == 0) throw Error(ErrorCode::InsufficientPool, "total pool below sample size");

        // Largest remainder over the open strata.
        struct Part {
            std::size_t idx;
            std::size_t floor_q;
            double remainder;
        };
        std::vector<Part> parts;
        std::size_t floor_total = 0;
        for (std::size_t i = 0; i < strata.size(); ++i) {
            if (capped[i]) continue;
            double ideal = remaining * strata[i].share / share_sum;
            auto floor_q = static_cast<std::size_t>(ideal);
            parts.push_back({i, floor_q, ideal - static_cast<double>(floor_q)});
            floor_total += floor_q;
        }
        std::sort(parts.begin(), parts.end(), [&](const Part& a, const Part& b) {
            if (a.remainder != b.remainder) return a.remainder > b.remainder;
            if (strata[a.idx].share != strata[b.idx].share)
                return strata[a.idx].share > strata[b.idx].share; // share-descending tie-break
            return strata[a.idx].key < strata[b.idx].key;
        });
        std::size_t leftover = remaining - floor_total;
        std::map<std::size_t, std::size_t> round; // idx -> quota this round
        for (auto& part : parts) {
            std::size_t q = part.floor_q + (leftover > 0 ? 1 : 0);
            if (leftover > 0) --leftover;
            round[part.idx] = q;
        }

        // Cap at pool size; whatever does not fit goes around again.
        remaining = 0;
        for (const auto& [idx, q] : round) {
            std::size_t have = quotas[strata[idx].key];
            std::size_t room = strata[idx].pool - have;
            std::size_t take = std::min(q, room);
            quotas[strata[idx].key] = have + take;
            remaining += q - take;
            if (have + take == strata[idx].pool) capped[idx] = true;
        }
    }
    return quotas;
}

namespace detail {

std::uint64_t SplitMix64::next() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t SplitMix64::bounded(std::uint64_t bound) {
    if (bound == 0) return 0;
    std::uint64_t threshold = (0 - bound) % bound; // 2^64 mod bound
    for (;;) {
        std::uint64_t x = next();
        if (x >= threshold) return x % bound;
    }
}

} // namespace detail

std::vector<DomainName> stratified_sample(
    const std::map<int, std::vector<DomainName>>& pool_by_registrar,
    const MarketShareTable& shares, std::size_t n, std::uint64_t seed) {
    std::map<int, std::size_t> pool_sizes;
    std::size_t total_pool = 0, sampleable = 0;
    for (const auto& [key, domains] : pool_by_registrar) {
        pool_sizes[key] = domains.size();
        auto it = shares.shares.find(key);
        if (it != shares.shares.end() && it->second > 0 && !domains.empty()) {
            total_pool += domains.size();
            ++sampleable;
        }
    }
    if (n < sampleable)
        throw Error(ErrorCode::InvalidArgument,
                    "sample size " + std::to_string(n) + " below " + std::to_string(sampleable) +
                        " sampleable strata");
    if (total_pool < n)
        throw Error(ErrorCode::InsufficientPool,
                    "pool of " + std::to_string(total_pool) + " cannot yield " + std::to_string(n));

    auto quotas = apportion_quotas(shares.shares, pool_sizes, n);

    std::vector<DomainName> sample;
    for (const auto& [key, quota] : quotas) {
        if (quota == 0) continue;
        // Deterministic per-stratum stream regardless of processing order.
        detail::SplitMix64 rng{seed ^ (0xd1b54a32d192ed03ull * static_cast<std::uint64_t>(key + 1))};
        std::vector<DomainName> stratum = pool_by_registrar.at(key);
        std::sort(stratum.begin(), stratum.end());
        // Partial Fisher-Yates: the first `quota` slots become the selection.
        for (std::size_t i = 0; i < quota; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.bounded(stratum.size() - i));
            std::swap(stratum[i], stratum[j]);
        }
        sample.insert(sample.end(), stratum.begin(), stratum.begin() + static_cast<long>(quota));
    }
    std::sort(sample.begin(), sample.end());
    return sample;
}

} // namespace regscope
