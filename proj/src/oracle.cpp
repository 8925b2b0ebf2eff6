// Brute-force frequent itemsets straight from the definitions. Shares nothing
// with the mining pipelines beyond the value types.

#include <algorithm>

#include "nestmine/error.hpp"
#include "nestmine/miner.hpp"

namespace nestmine {

std::vector<FrequentItemset> bruteforce_oracle(const TransactionSet &ts, const MiningParams &params)
{
    std::vector<Value> universe;
    for (const auto &[tid, items] : ts.transactions)
        for (const auto &i : items.elements()) universe.push_back(i);
    std::sort(universe.begin(), universe.end());
    universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
    if (universe.size() > 20)
        fail(Errc::ResourceLimit, "oracle enumerates at most 20 items, data has " + std::to_string(universe.size()));

    std::vector<std::uint32_t> masks;
    for (const auto &[tid, items] : ts.transactions) {
        std::uint32_t m = 0;
        for (std::size_t k = 0; k < universe.size(); ++k)
            if (items.contains(universe[k])) m |= std::uint32_t{1} << k;
        masks.push_back(m);
    }

    std::vector<FrequentItemset> out;
    if (ts.n <= 0) return out;
    const std::uint32_t total = std::uint32_t{1} << universe.size();
    for (std::uint32_t s = 1; s < total; ++s) {
        std::int64_t count = 0;
        for (auto m : masks)
            if ((m & s) == s) ++count;
        Rational sup(count, ts.n);
        bool frequent = params.threshold_mode == ThresholdMode::Strict ? sup > params.minsup : sup >= params.minsup;
        if (!frequent || count == 0) continue;
        Value::Elements elems;
        for (std::size_t k = 0; k < universe.size(); ++k)
            if (s & (std::uint32_t{1} << k)) elems.push_back(universe[k]);
        out.push_back({Value::set(std::move(elems)), sup});
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace nestmine
