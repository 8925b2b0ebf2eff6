#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "nestmine/error.hpp"
#include "nestmine/ops.hpp"

using namespace nestmine;
using namespace nestmine::testing;

namespace {

std::vector<Binding> tid_item_bindings() { return {{"tid", attr("tid")}, {"item", attr("item")}}; }

NestedRelation r2() { return nest(project(purchase(), tid_item_bindings()), {"tid"}); }

NestedRelation r4() { return powerset_macro(r2(), "item", "itemset"); }

NestedRelation r5() { return grouping(r4(), {"itemset"}, {{AggFn::Count, "tid", ""}}); }

NestedRelation r7()
{
    ParamEnv env{4, Rational(3, 10), Rational(6, 10)};
    auto r6 = select(r5(), attr("count_tid") > param("n") * param("minsup"), env);
    return project(r6, {{"freq_itemset", attr("itemset")}, {"sup", attr("count_tid") / param("n")}}, env);
}

} // namespace

TEST(Select, ThresholdOnCountTable)
{
    ParamEnv env{4, Rational(3, 10), Rational(6, 10)};
    auto r = select(r5(), attr("count_tid") > param("n") * param("minsup"), env);
    EXPECT_EQ(r.size(), 7u);
    auto sets = r.column("itemset");
    std::vector<Value> want{items("B"), items("BC"), items("BCJ"), items("BJ"), items("C"), items("CJ"), items("J")};
    EXPECT_EQ(sets, want);
    EXPECT_EQ(select(r5(), always(true)), r5());
}

TEST(Select, WidthFilterRemovesSingleItemTransaction)
{
    auto nested = nest(project(new_purchase(), tid_item_bindings()), {"tid"});
    auto counted = project(nested, {{"tid", attr("tid")}, {"item", attr("item")}, {"count_item", card(attr("item"))}});
    auto kept = select(counted, attr("count_item") >= lit(2));
    EXPECT_EQ(kept.size(), 3u);
    EXPECT_EQ(kept.column("tid"), (std::vector<Value>{1, 2, 4}));
}

TEST(Project, StepOneAndSupport)
{
    EXPECT_EQ(project(purchase(), tid_item_bindings()).size(), 10u);
    auto f = r7();
    EXPECT_EQ(f.size(), 7u);
    for (const auto &v : f.column("sup")) EXPECT_TRUE(v == Value(Rational(1, 2)) || v == Value(Rational(1)));
    auto one = project(make_relation({{"x", ScalarKind::Int}}, {{1}, {2}, {3}}), {{"k", lit(1)}});
    EXPECT_EQ(one.size(), 1u);
}

TEST(Nest, PurchaseByTid)
{
    Schema s{{"tid", ScalarKind::Int}, {"item", Type::set_of(ScalarKind::String)}};
    auto want = make_relation(s, {{1, items("HJ")}, {2, items("BCJ")}, {3, items("JS")}, {4, items("BCJ")}});
    EXPECT_EQ(r2(), want);
    auto np = nest(project(new_purchase(), tid_item_bindings()), {"tid"});
    EXPECT_EQ(np, make_relation(s, {{1, items("HS")}, {2, items("BCHJ")}, {3, items("J")}, {4, items("BCJ")}}));
}

TEST(Nest, DistinctKeysGiveSingletons)
{
    auto r = make_relation({{"k", ScalarKind::Int}, {"v", ScalarKind::String}}, {{1, "a"}, {2, "b"}});
    for (const auto &v : nest(r, {"k"}).column("v")) EXPECT_EQ(v.size(), 1u);
}

TEST(Nest, EachAttributeNestedIndependently)
{
    auto r = make_relation({{"k", ScalarKind::Int}, {"a", ScalarKind::String}, {"b", ScalarKind::Int}},
                           {{1, "x", 1}, {1, "y", 1}, {2, "z", 3}});
    auto n = nest(r, {"k"});
    EXPECT_EQ(n.schema().to_string(), "(k:int, a:set<string>, b:set<int>)");
    EXPECT_EQ(n.tuples()[0][2], Value::set({1}));
    EXPECT_THROW(nest(r, {"missing"}), Error);
}

TEST(Unnest, PowersetRowsOfPurchase)
{
    auto r3 = project(r2(), {{"tid", attr("tid")}, {"itemset", powerset(attr("item"))}});
    auto r4a = unnest(r3, "itemset");
    EXPECT_EQ(r4a.size(), 20u);
    EXPECT_EQ(r4(), r4a);
    EXPECT_THROW(unnest(r3, "tid"), Error);
}

TEST(Unnest, EmptySetYieldsNothing)
{
    auto r = make_relation({{"k", ScalarKind::Int}, {"s", Type::set_of(ScalarKind::Int)}},
                           {{1, Value::empty_set()}, {2, Value::set({7})}});
    EXPECT_EQ(unnest(r, "s").size(), 1u);
}

TEST(Grouping, CountTable)
{
    auto r = r5();
    EXPECT_EQ(r.schema().to_string(), "(itemset:set<string>, count_tid:int)");
    std::map<std::string, std::int64_t> want{{"B", 2}, {"C", 2}, {"H", 1},  {"J", 4},  {"S", 1},  {"BC", 2},
                                             {"BJ", 2}, {"CJ", 2}, {"HJ", 1}, {"JS", 1}, {"BCJ", 2}};
    ASSERT_EQ(r.size(), want.size());
    for (const auto &t : r.tuples()) {
        std::string key;
        for (const auto &e : t[0].elements()) key += e.as_string();
        EXPECT_EQ(t[1].as_int(), want.at(key)) << key;
    }
}

TEST(Grouping, Aggregates)
{
    auto r = make_relation({{"g", ScalarKind::String}, {"x", ScalarKind::Int}}, {{"a", 1}, {"a", 2}, {"b", 5}});
    auto out = grouping(r, {"g"},
                        {{AggFn::Sum, "x", ""}, {AggFn::Min, "x", ""}, {AggFn::Max, "x", ""}, {AggFn::Average, "x", "avg"}});
    EXPECT_EQ(out.schema().to_string(), "(g:string, sum_x:int, min_x:int, max_x:int, avg:rational)");
    EXPECT_EQ(out.tuples()[0][4], Value(Rational(3, 2)));
    auto all = grouping(r, {"g", "x"}, {{AggFn::Count, "x", ""}});
    for (const auto &v : all.column("count_x")) EXPECT_EQ(v, Value(1));
    auto sets = make_relation({{"s", Type::set_of(ScalarKind::Int)}}, {{Value::set({1})}});
    EXPECT_THROW(grouping(sets, {}, {{AggFn::Sum, "s", ""}}), Error);
}

TEST(Join, SubsetJoinOfFrequentItemsets)
{
    auto f = r7();
    auto j = join(f, "A", f, "B", subset(attr("A.freq_itemset"), attr("B.freq_itemset")));
    EXPECT_EQ(j.size(), 12u);
    EXPECT_EQ(j.schema()[0].name, "A.freq_itemset");
    EXPECT_TRUE(join(f, "A", f, "B", always(false)).empty());
}

TEST(Join, CaqBranches)
{
    Schema s{{"freq_itemset", Type::set_of(ScalarKind::String)}, {"sup", ScalarKind::Rational}};
    Rational q(1, 4), h(1, 2);
    auto a = make_relation(s, {{items("HS"), q}, {items("CH"), q}, {items("BH"), q}, {items("HJ"), q},
                               {items("BC"), h}, {items("CJ"), h}, {items("BJ"), h}});
    auto b = make_relation(s, {{items("BCHJ"), q}});
    EXPECT_EQ(join(a, "A", b, "B", subset(attr("A.freq_itemset"), attr("B.freq_itemset"))).size(), 6u);
}

TEST(SetOps, Laws)
{
    auto f = r7();
    EXPECT_EQ(set_union(f, f), f);
    EXPECT_TRUE(set_difference(f, f).empty());
    EXPECT_EQ(set_intersection(f, f), f);
    auto a = make_relation({{"x", ScalarKind::Int}}, {{1}, {2}});
    auto b = make_relation({{"y", ScalarKind::Int}}, {{1}, {2}, {3}});
    EXPECT_EQ(product(a, b).size(), 6u);
    EXPECT_THROW(set_union(a, b), Error);
    EXPECT_THROW(product(a, a), Error);
    EXPECT_EQ(product(a, "L", a, "R").size(), 4u);
}

TEST(PowersetMacro, SingleItemTransaction)
{
    Schema s{{"tid", ScalarKind::Int}, {"item", Type::set_of(ScalarKind::String)}};
    EXPECT_EQ(powerset_macro(make_relation(s, {{1, items("J")}}), "item", "itemset").size(), 1u);
}

TEST(Properties, AlgebraLaws)
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        auto flat = random_transactions(rng(), 6, 8);
        // nest then unnest is the identity on duplicate-free flat relations
        EXPECT_EQ(unnest(nest(flat, {"tid"}), "item"), flat);

        auto nested = nest(flat, {"tid"});
        auto composed = unnest(project(nested, {{"tid", attr("tid")}, {"itemset", powerset(attr("item"))}}), "itemset");
        EXPECT_EQ(powerset_macro(nested, "item", "itemset"), composed);

        // group counts add up to the input cardinality
        auto g = grouping(composed, {"itemset"}, {{AggFn::Count, "tid", ""}});
        std::int64_t total = 0;
        for (const auto &v : g.column("count_tid")) total += v.as_int();
        EXPECT_EQ(total, static_cast<std::int64_t>(composed.size()));

        // counts agree with direct subset tests
        auto ts = transactions_from(flat);
        for (const auto &t : g.tuples()) {
            std::int64_t direct = 0;
            for (const auto &[tid, set] : ts.transactions)
                if (is_subset(t[0], set)) ++direct;
            EXPECT_EQ(t[1].as_int(), direct);
        }

        // select fusion
        Predicate p1 = attr("count_tid") >= lit(2);
        Predicate p2 = card(attr("itemset")) <= lit(2);
        EXPECT_EQ(select(select(g, p1), p2), select(g, p1 && p2));

        // join is select over product
        auto small = select(g, card(attr("itemset")) <= lit(2));
        Predicate jp = subset(attr("A.itemset"), attr("B.itemset"));
        auto j = join(small, "A", small, "B", jp);
        auto prod = product(small, "A", small, "B");
        EXPECT_EQ(j, select(prod, jp));
        for (const auto &t : j.tuples()) EXPECT_TRUE(prod.contains(t));

        // operators leave their inputs untouched
        auto before = canonical_render(flat);
        (void)select(flat, always(false));
        EXPECT_EQ(canonical_render(flat), before);
    }
}
