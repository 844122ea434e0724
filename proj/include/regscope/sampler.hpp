#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "regscope/domain.hpp"

namespace regscope {

/// Registrar market shares derived from per-registrar domain counts.
struct MarketShareTable {
    std::map<int, double> shares; // registrar iana -> fraction of covered mass
    std::string as_of;            // month, when the report states one
};

/// CSV columns: registrar_iana,domain_count. An optional `# as_of: YYYY-MM`
/// comment is honored. Throws Error{NegativeCount} and Error{EmptyReport}.
MarketShareTable load_market_shares(const std::string& path);

/// Largest-remainder apportionment of n by share with share-descending
/// tie-break. Strata whose quota exceeds their pool are capped and the
/// surplus is redistributed over the remaining strata by share.
/// pool_sizes and shares are keyed alike; strata missing from the pool get 0.
std::map<int, std::size_t> apportion_quotas(const std::map<int, double>& shares,
                                            const std::map<int, std::size_t>& pool_sizes,
                                            std::size_t n);

/// Deterministic stratified sample: per-stratum quotas by largest remainder,
/// uniform without-replacement selection inside each stratum under a seeded
/// generator. Identical (pool, shares, n, seed) give an identical sample.
/// Throws Error{InsufficientPool} when the total pool is smaller than n and
/// Error{InvalidArgument} when n is below the number of sampleable strata.
std::vector<DomainName> stratified_sample(
    const std::map<int, std::vector<DomainName>>& pool_by_registrar,
    const MarketShareTable& shares, std::size_t n, std::uint64_t seed);

namespace detail {
/// splitmix64; the statewide generator every sampling decision derives from.
struct SplitMix64 {
    std::uint64_t state;
    std::uint64_t next();
    /// Uniform draw in [0, bound) by rejection (no modulo bias).
    std::uint64_t bounded(std::uint64_t bound);
};
} // namespace detail

} // namespace regscope
