#pragma once

#include <string>
#include <vector>

#include "nestmine/io.hpp"
#include "nestmine/miner.hpp"
#include "nestmine/query_tree.hpp"

namespace nestmine::testing {

inline std::string data_path(const std::string &name) { return std::string(NESTMINE_DATA_DIR) + "/" + name; }

inline NestedRelation purchase() { return load_transactions_csv({data_path("purchase.csv")}); }
inline NestedRelation new_purchase() { return load_transactions_csv({data_path("newpurchase.csv")}); }

inline Value items(const std::string &letters)
{
    Value::Elements e;
    for (char c : letters) e.push_back(Value(std::string(1, c)));
    return Value::set(std::move(e));
}

inline MiningParams params(Rational minsup, Rational minconf)
{
    MiningParams p;
    p.minsup = minsup;
    p.minconf = minconf;
    return p;
}

/// Rules output relation as (body letters, head letters, sup, conf) tuples.
inline NestedRelation rules_relation(const std::vector<std::tuple<std::string, std::string, Rational, Rational>> &rows)
{
    Schema s{{"BD", Type::set_of(ScalarKind::String)},
             {"HD", Type::set_of(ScalarKind::String)},
             {"sup", ScalarKind::Rational},
             {"conf", ScalarKind::Rational}};
    std::vector<Tuple> t;
    for (const auto &[b, h, sup, conf] : rows) t.push_back({items(b), items(h), Value(sup), Value(conf)});
    return make_relation(s, t);
}

/// Small random (tid, item) relation with items "a".."h".
NestedRelation random_transactions(std::uint64_t seed, std::size_t max_items = 8, std::size_t max_trans = 12);

/// Random minsup in {1/10 .. 1/2}.
Rational random_minsup(std::uint64_t seed);

} // namespace nestmine::testing
