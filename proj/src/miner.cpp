#include "nestmine/miner.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "nestmine/error.hpp"

namespace nestmine {

std::string_view to_string(ThresholdMode m) { return m == ThresholdMode::Strict ? "strict" : "inclusive"; }

ThresholdMode parse_threshold_mode(std::string_view text)
{
    if (text == "strict") return ThresholdMode::Strict;
    if (text == "inclusive") return ThresholdMode::Inclusive;
    fail(Errc::InvalidValue, "threshold mode must be strict or inclusive, got '" + std::string(text) + "'");
}

void MiningParams::validate() const
{
    if (minsup <= 0 || minsup > 1) fail(Errc::InvalidValue, "minsup must lie in (0,1], got " + to_string(minsup));
    if (minconf <= 0 || minconf > 1) fail(Errc::InvalidValue, "minconf must lie in (0,1], got " + to_string(minconf));
    if (n < 0) fail(Errc::InvalidValue, "negative transaction count");
}

bool passes(const Rational &value, const Rational &threshold, ThresholdMode mode)
{
    return mode == ThresholdMode::Strict ? value > threshold : value >= threshold;
}

TransactionSet transactions_from(const NestedRelation &r, std::string_view tid, std::string_view item)
{
    std::size_t ti = r.schema().require(tid);
    std::size_t ii = r.schema().require(item);
    std::map<Value, Value::Elements> groups;
    for (const auto &t : r.tuples()) {
        auto &g = groups[t[ti]];
        if (t[ii].is_set())
            for (const auto &e : t[ii].elements()) g.push_back(e);
        else
            g.push_back(t[ii]);
    }
    TransactionSet ts;
    ts.n = static_cast<std::int64_t>(groups.size());
    for (auto &[k, items] : groups) ts.transactions.emplace_back(k, Value::set(std::move(items)));
    return ts;
}

bool ItemsetConstraints::admits_item(const Value &item) const
{
    if (universe && !universe->contains(item)) return false;
    return std::find(must_not_contain.begin(), must_not_contain.end(), item) == must_not_contain.end();
}

bool ItemsetConstraints::admits(const Value &itemset) const
{
    std::size_t k = itemset.size();
    if (k < size_lo || (size_hi && k > *size_hi)) return false;
    for (const auto &e : itemset.elements())
        if (!admits_item(e)) return false;
    for (const auto &m : must_contain)
        if (!itemset.contains(m)) return false;
    return true;
}

bool ItemsetConstraints::trivial() const
{
    return size_lo <= 1 && !size_hi && must_contain.empty() && must_not_contain.empty() && !universe;
}

std::vector<FrequentItemset> naive_frequent_itemsets(const TransactionSet &ts, const MiningParams &params,
                                                     NaiveCounts *counts, std::uint64_t cap)
{
    std::uint64_t total = 0;
    for (const auto &[tid, items] : ts.transactions) {
        std::size_t w = items.size();
        if (w >= 63 || (std::uint64_t{1} << w) - 1 > cap - total)
            fail(Errc::ResourceLimit, "powerset materialization exceeds " + std::to_string(cap) + " subsets");
        total += (std::uint64_t{1} << w) - 1;
    }

    std::map<Value, std::int64_t> support;
    for (const auto &[tid, items] : ts.transactions) {
        auto elems = items.elements();
        const std::uint64_t limit = std::uint64_t{1} << elems.size();
        for (std::uint64_t mask = 1; mask < limit; ++mask) {
            Value::Elements sub;
            for (std::size_t i = 0; i < elems.size(); ++i)
                if (mask & (std::uint64_t{1} << i)) sub.push_back(elems[i]);
            ++support[Value::set(std::move(sub))];
        }
    }

    std::vector<FrequentItemset> out;
    for (const auto &[itemset, count] : support) {
        Rational sup(count, ts.n);
        if (passes(sup, params.minsup, params.threshold_mode)) out.push_back({itemset, sup});
    }
    if (counts) *counts = {static_cast<std::size_t>(total), support.size(), out.size()};
    return out;
}

namespace {

using Itemset = std::vector<int>;

bool contains_all(const std::vector<int> &transaction, const Itemset &c)
{
    return std::includes(transaction.begin(), transaction.end(), c.begin(), c.end());
}

} // namespace

std::vector<FrequentItemset> apriori_frequent_itemsets(const TransactionSet &ts, const MiningParams &params,
                                                       const ItemsetConstraints &constraints)
{
    std::vector<FrequentItemset> out;
    if (ts.n <= 0) return out;

    std::vector<Value> items;
    for (const auto &[tid, set] : ts.transactions)
        for (const auto &e : set.elements())
            if (constraints.admits_item(e)) items.push_back(e);
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());

    std::vector<std::vector<int>> rows;
    for (const auto &[tid, set] : ts.transactions) {
        std::vector<int> row;
        for (const auto &e : set.elements()) {
            auto it = std::lower_bound(items.begin(), items.end(), e);
            if (it != items.end() && *it == e) row.push_back(static_cast<int>(it - items.begin()));
        }
        rows.push_back(std::move(row));
    }

    auto emit = [&](const Itemset &c, std::int64_t count) {
        Value::Elements elems;
        for (int i : c) elems.push_back(items[i]);
        Value v = Value::set(std::move(elems));
        if (constraints.admits(v)) out.push_back({std::move(v), Rational(count, ts.n)});
    };
    auto frequent = [&](std::int64_t count) {
        return passes(Rational(count, ts.n), params.minsup, params.threshold_mode);
    };

    std::size_t hi = constraints.size_hi.value_or(items.size());
    std::vector<Itemset> level;
    {
        std::vector<std::int64_t> counts(items.size(), 0);
        for (const auto &row : rows)
            for (int i : row) ++counts[i];
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (!frequent(counts[i])) continue;
            level.push_back({static_cast<int>(i)});
            if (hi >= 1) emit(level.back(), counts[i]);
        }
    }

    for (std::size_t k = 2; k <= hi && level.size() >= 2; ++k) {
        std::set<Itemset> prev(level.begin(), level.end());
        std::vector<Itemset> candidates;
        for (std::size_t a = 0; a < level.size(); ++a) {
            for (std::size_t b = a + 1; b < level.size(); ++b) {
                if (!std::equal(level[a].begin(), level[a].end() - 1, level[b].begin())) break;
                Itemset c = level[a];
                c.push_back(level[b].back());
                bool closed = true;
                for (std::size_t drop = 0; drop + 2 < c.size() && closed; ++drop) {
                    Itemset sub;
                    for (std::size_t j = 0; j < c.size(); ++j)
                        if (j != drop) sub.push_back(c[j]);
                    closed = prev.count(sub) > 0;
                }
                if (closed) candidates.push_back(std::move(c));
            }
        }
        std::vector<Itemset> next;
        for (auto &c : candidates) {
            std::int64_t count = 0;
            for (const auto &row : rows)
                if (contains_all(row, c)) ++count;
            if (!frequent(count)) continue;
            emit(c, count);
            next.push_back(std::move(c));
        }
        level = std::move(next);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Rational count_support(const TransactionSet &ts, const Value &itemset)
{
    if (ts.n <= 0) fail(Errc::DivisionByZero, "support over zero transactions");
    std::int64_t count = 0;
    for (const auto &[tid, items] : ts.transactions)
        if (is_subset(itemset, items)) ++count;
    return Rational(count, ts.n);
}

std::vector<Rule> rules_from_itemsets(const std::vector<FrequentItemset> &freq, const MiningParams &params,
                                      const ItemsetConstraints &head, const ItemsetConstraints &body,
                                      const SupportLookup &recount)
{
    std::map<Value, Rational> sup;
    for (const auto &f : freq) sup.emplace(f.itemset, f.sup);

    std::vector<Rule> out;
    for (const auto &f : freq) {
        auto elems = f.itemset.elements();
        if (elems.size() < 2) continue;
        if (elems.size() > 24) fail(Errc::ResourceLimit, "itemset too wide for subset enumeration");
        const std::uint64_t full = (std::uint64_t{1} << elems.size()) - 1;
        for (std::uint64_t mask = 1; mask < full; ++mask) {
            Value::Elements b, h;
            for (std::size_t i = 0; i < elems.size(); ++i)
                ((mask >> i) & 1 ? b : h).push_back(elems[i]);
            Value bv = Value::set(std::move(b));
            Value hv = Value::set(std::move(h));
            if (!body.admits(bv) || !head.admits(hv)) continue;
            Rational bsup;
            if (auto it = sup.find(bv); it != sup.end()) bsup = it->second;
            else if (recount) bsup = recount(bv);
            else fail(Errc::MissingSubsetSupport, "no support known for body " + render(bv));
            if (bsup.numerator() == 0) fail(Errc::DivisionByZero, "body " + render(bv) + " has zero support");
            Rational conf = f.sup / bsup;
            if (passes(conf, params.minconf, params.threshold_mode)) out.push_back({bv, hv, f.sup, conf});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Rule> rules_from_pairs(const std::vector<FrequentItemset> &bodies,
                                   const std::vector<FrequentItemset> &supersets, const MiningParams &params)
{
    std::map<Value, Rational> body_sup;
    for (const auto &b : bodies) body_sup.emplace(b.itemset, b.sup);

    std::vector<Rule> out;
    auto consider = [&](const Value &b, const Rational &bsup, const FrequentItemset &s) {
        if (bsup.numerator() == 0) fail(Errc::DivisionByZero, "body " + render(b) + " has zero support");
        Rational conf = s.sup / bsup;
        if (passes(conf, params.minconf, params.threshold_mode))
            out.push_back({b, set_difference(s.itemset, b), s.sup, conf});
    };
    for (const auto &s : supersets) {
        auto elems = s.itemset.elements();
        if (elems.size() <= 16 && (std::uint64_t{1} << elems.size()) <= 4 * bodies.size() + 16) {
            const std::uint64_t full = (std::uint64_t{1} << elems.size()) - 1;
            for (std::uint64_t mask = 1; mask < full; ++mask) {
                Value::Elements b;
                for (std::size_t i = 0; i < elems.size(); ++i)
                    if ((mask >> i) & 1) b.push_back(elems[i]);
                Value bv = Value::set(std::move(b));
                if (auto it = body_sup.find(bv); it != body_sup.end()) consider(bv, it->second, s);
            }
        } else {
            for (const auto &[b, bsup] : body_sup)
                if (b.size() < s.itemset.size() && is_subset(b, s.itemset)) consider(b, bsup, s);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace nestmine
