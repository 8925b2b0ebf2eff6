#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "nestmine/relation.hpp"
#include "nestmine/value.hpp"

namespace nestmine {

enum class ThresholdMode : std::uint8_t { Strict, Inclusive };

std::string_view to_string(ThresholdMode m);
ThresholdMode parse_threshold_mode(std::string_view text);

struct MiningParams
{
    Rational minsup{3, 10};
    Rational minconf{6, 10};
    std::int64_t n = 0; ///< bound from the source relation when a session opens
    ThresholdMode threshold_mode = ThresholdMode::Strict;

    /// Throws InvalidValue unless 0 < minsup, minconf <= 1.
    void validate() const;
    friend bool operator==(const MiningParams &, const MiningParams &) = default;
};

/// `value > threshold` in strict mode, `>=` in inclusive mode.
bool passes(const Rational &value, const Rational &threshold, ThresholdMode mode);

struct TransactionSet
{
    std::int64_t n = 0; ///< transaction count before any filtering
    std::vector<std::pair<Value, Value>> transactions; ///< (tid, item set)
};

/// Groups a flat (tid, item) relation, or takes a nested one as is. n = distinct tids.
TransactionSet transactions_from(const NestedRelation &r, std::string_view tid = "tid", std::string_view item = "item");

struct FrequentItemset
{
    Value itemset;
    Rational sup;

    friend bool operator==(const FrequentItemset &, const FrequentItemset &) = default;
    friend bool operator<(const FrequentItemset &a, const FrequentItemset &b) { return a.itemset < b.itemset; }
};

struct Rule
{
    Value body;
    Value head;
    Rational sup;
    Rational conf;

    friend bool operator==(const Rule &, const Rule &) = default;
    friend bool operator<(const Rule &a, const Rule &b)
    {
        return a.body != b.body ? a.body < b.body : a.head < b.head;
    }
};

struct ItemsetConstraints
{
    std::size_t size_lo = 1;
    std::optional<std::size_t> size_hi;
    std::vector<Value> must_contain;
    std::vector<Value> must_not_contain;
    std::optional<Value> universe; ///< itemsets must be subsets of this set

    bool admits(const Value &itemset) const;
    bool trivial() const;
    /// True when the item-level parts admit `item` (universe and must_not_contain).
    bool admits_item(const Value &item) const;

    friend bool operator==(const ItemsetConstraints &, const ItemsetConstraints &) = default;
};

inline constexpr std::uint64_t kDefaultPowersetCap = 10'000'000;

/// Independent ground truth: tries every non-empty subset of the item universe
/// against every transaction. ResourceLimit above 20 distinct items.
std::vector<FrequentItemset> bruteforce_oracle(const TransactionSet &ts, const MiningParams &params);

struct NaiveCounts
{
    std::size_t powerset_rows = 0; ///< (tid, itemset) pairs
    std::size_t distinct_itemsets = 0;
    std::size_t frequent = 0;
};

/// Powerset of every transaction, counted and thresholded. ResourceLimit when
/// the number of generated subsets would exceed `cap`.
std::vector<FrequentItemset> naive_frequent_itemsets(const TransactionSet &ts, const MiningParams &params,
                                                     NaiveCounts *counts = nullptr,
                                                     std::uint64_t cap = kDefaultPowersetCap);

/// Level-wise candidate generation. Item-level constraints shrink the item
/// universe and no level above size_hi is generated; the result equals the
/// naive output filtered by `constraints`.
std::vector<FrequentItemset> apriori_frequent_itemsets(const TransactionSet &ts, const MiningParams &params,
                                                       const ItemsetConstraints &constraints = {});

/// Support of one itemset by direct counting.
Rational count_support(const TransactionSet &ts, const Value &itemset);

using SupportLookup = std::function<Rational(const Value &itemset)>;

/// Every (body, superset) with body a proper non-empty subset of a frequent
/// superset, subject to the constraints. A body without a known support is
/// resolved through `recount`, or raises MissingSubsetSupport when none is given.
std::vector<Rule> rules_from_itemsets(const std::vector<FrequentItemset> &freq, const MiningParams &params,
                                      const ItemsetConstraints &head = {}, const ItemsetConstraints &body = {},
                                      const SupportLookup &recount = {});

/// Rules from explicit body and superset candidates (b ⊂ s, conf threshold).
std::vector<Rule> rules_from_pairs(const std::vector<FrequentItemset> &bodies,
                                   const std::vector<FrequentItemset> &supersets, const MiningParams &params);

} // namespace nestmine
