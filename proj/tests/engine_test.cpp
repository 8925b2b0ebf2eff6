#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <thread>

#include "fixtures.hpp"
#include "nestmine/engine.hpp"
#include "nestmine/error.hpp"

using namespace nestmine;
using namespace nestmine::testing;

namespace {

NestedRelation fig1b()
{
    Rational h(1, 2), one(1);
    return rules_relation({{"B", "C", h, one},
                           {"B", "J", h, one},
                           {"B", "CJ", h, one},
                           {"C", "B", h, one},
                           {"C", "J", h, one},
                           {"C", "BJ", h, one},
                           {"BC", "J", h, one},
                           {"BJ", "C", h, one},
                           {"CJ", "B", h, one}});
}

QueryTree classic(Rational minsup = Rational(3, 10), Rational minconf = Rational(6, 10))
{
    return build_classic_tree("Purchase", params(minsup, minconf));
}

Session classic_session(const QueryTree &t)
{
    return Session("s", per_node_plan(t), {{"Purchase", purchase()}});
}

QueryTree caq()
{
    CAQSpec s;
    s.body.card = {2, 2};
    s.head.card = {2, 2};
    return build_caq_tree("NewPurchase", s, params(Rational(1, 10), Rational(2, 10)));
}

std::vector<std::pair<int, int>> edges(const QueryTree &t)
{
    std::set<std::pair<int, int>> out;
    for (int id : t.topo_order())
        for (int c : t.node(id).children) out.insert({c, id});
    return {out.begin(), out.end()};
}

std::vector<int> ids(const PauseReport &r)
{
    std::vector<int> out;
    for (auto [id, rows] : r.materialized) out.push_back(id);
    return out;
}

PhysicalPlan plan_named(const QueryTree &t, const std::string &signature)
{
    for (auto &p : enumerate_plans(t))
        if (p.signature() == signature) return p;
    ADD_FAILURE() << "no plan " << signature;
    return {};
}

Errc code_of(const std::function<void()> &f)
{
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return Errc::InvalidValue;
}

} // namespace

TEST(Open, AllPending)
{
    auto s = classic_session(classic());
    auto states = s.states();
    EXPECT_EQ(states.size(), 14u);
    for (auto [id, st] : states) EXPECT_EQ(st, NodeState::Pending) << id;
    EXPECT_EQ(s.n(), 4);
    EXPECT_EQ(s.params().n, 4);
    EXPECT_FALSE(s.finished());
}

TEST(Open, Errors)
{
    auto plan = per_node_plan(classic());
    EXPECT_EQ(code_of([&] { Session("s", plan, {}); }), Errc::UnboundSource);
    EXPECT_EQ(code_of([&] { Session("s", plan, {{"Other", purchase()}}); }), Errc::UnboundSource);
    auto bad = make_relation({{"tid", ScalarKind::Int}, {"thing", ScalarKind::String}}, {});
    EXPECT_EQ(code_of([&] { Session("s", plan, {{"Purchase", bad}}); }), Errc::InvalidTree);
}

TEST(Open, CaqBindsN)
{
    Session s("s", per_node_plan(caq()), {{"NewPurchase", new_purchase()}});
    EXPECT_EQ(s.n(), 4);
}

TEST(Run, UntilTarget)
{
    auto s = classic_session(classic());
    auto r = s.run_until(7);
    EXPECT_EQ(r.reason, PauseReport::Reason::Target);
    EXPECT_EQ(ids(r), (std::vector<int>{1, 2, 3, 4, 5, 6, 7}));
    EXPECT_EQ(s.inspect(5)->rows, 11u);
    EXPECT_EQ(s.inspect(6)->rows, 7u);
    EXPECT_EQ(s.state(8), NodeState::Pending);
    EXPECT_EQ(code_of([&] { s.inspect(8); }), Errc::NotMaterialized);
    EXPECT_EQ(code_of([&] { s.inspect(99); }), Errc::NotMaterialized);

    auto again = s.run_until(7);
    EXPECT_TRUE(again.materialized.empty());

    auto done = s.run_until();
    EXPECT_EQ(done.reason, PauseReport::Reason::Completion);
    EXPECT_EQ(ids(done), (std::vector<int>{8, 9, 10, 11, 12, 13}));
    EXPECT_TRUE(s.finished());
    EXPECT_TRUE(relation_equal(s.result()->relation, fig1b()));
    EXPECT_EQ(code_of([&] { s.run_until(99); }), Errc::InvalidValue);
}

TEST(Run, NextNodeSkipsSources)
{
    auto s = classic_session(classic());
    EXPECT_EQ(s.next_node(), 1);
    for (int i = 0; i < 7; ++i) s.run_until(*s.next_node());
    EXPECT_EQ(s.state(7), NodeState::Materialized);
    EXPECT_EQ(s.state(8), NodeState::Pending);
    EXPECT_EQ(s.next_node(), 8);
    s.resume();
    EXPECT_FALSE(s.next_node());
}

TEST(Run, ObserverSeesEveryEvent)
{
    auto s = classic_session(classic());
    std::vector<std::string> kinds;
    s.set_observer([&](const Event &e) { kinds.push_back(e.kind); });
    s.run_until(2);
    EXPECT_EQ(kinds, (std::vector<std::string>{"run", "materialize", "materialize", "materialize", "target"}));
    EXPECT_EQ(s.events().size(), kinds.size() + 1);
}

TEST(Run, ClassicRowCounts)
{
    auto s = classic_session(classic());
    auto r = s.run_to_completion();
    std::map<int, std::size_t> expected{{1, 10}, {2, 4},  {3, 4},  {4, 20},  {5, 11}, {6, 7}, {7, 7},
                                        {8, 7},  {9, 12}, {10, 12}, {11, 12}, {12, 9}, {13, 9}};
    for (auto [id, rows] : r.materialized)
        if (id != 0) EXPECT_EQ(rows, expected.at(id)) << id;
}

TEST(Inspect, CaqCountItem)
{
    auto t = caq();
    Session s("s", per_node_plan(t), {{"NewPurchase", new_purchase()}});
    int step2 = *t.node_for_step("2");
    s.run_until(step2);
    auto snap = s.inspect(step2);
    std::vector<Tuple> rows(snap->relation.tuples().begin(), snap->relation.tuples().end());
    std::size_t tid = snap->relation.schema().require("tid");
    std::size_t ci = snap->relation.schema().require("count_item");
    std::sort(rows.begin(), rows.end(), [&](const Tuple &a, const Tuple &b) { return a[tid] < b[tid]; });
    std::vector<std::int64_t> counts;
    for (const auto &r : rows) counts.push_back(r[ci].as_int());
    EXPECT_EQ(counts, (std::vector<std::int64_t>{2, 4, 1, 3}));
}

TEST(Inspect, SnapshotsAreImmutable)
{
    auto s = classic_session(classic());
    s.run_to_completion();
    auto before = s.inspect(13);
    auto text = canonical_render(before->relation);
    EXPECT_EQ(canonical_render(s.inspect(13)->relation), text);
    s.set_param("minconf", Rational(1, 10));
    s.resume();
    EXPECT_EQ(canonical_render(before->relation), text);
    EXPECT_GT(s.inspect(13)->produced_at, before->produced_at);
}

TEST(SetParam, BeforeFirstUse)
{
    auto s = classic_session(classic());
    s.run_until(5);
    auto inv = s.set_param("minsup", Rational(1, 2));
    EXPECT_TRUE(inv.invalidated.empty());
    auto r = s.resume();
    EXPECT_EQ(ids(r), (std::vector<int>{6, 7, 8, 9, 10, 11, 12, 13}));
    auto fi = s.inspect(7)->relation;
    ASSERT_EQ(fi.size(), 1u);
    EXPECT_EQ(fi.tuples()[0][0], items("J"));
    EXPECT_EQ(s.result()->rows, 0u);
}

TEST(SetParam, MinconfInvalidatesTail)
{
    auto s = classic_session(classic());
    s.run_to_completion();
    auto inv = s.set_param("minconf", Rational(1, 2));
    EXPECT_EQ(inv.invalidated, (std::vector<int>{12, 13}));
    EXPECT_EQ(s.state(11), NodeState::Materialized);
    EXPECT_EQ(s.state(12), NodeState::Invalidated);
    EXPECT_EQ(code_of([&] { s.inspect(12); }), Errc::NotMaterialized);
    auto r = s.resume();
    EXPECT_EQ(ids(r), (std::vector<int>{12, 13}));
    EXPECT_EQ(s.result()->rows, 9u);
    EXPECT_EQ(s.params().minconf, Rational(1, 2));

    auto loose = s.set_param("minconf", Rational(1, 3));
    EXPECT_EQ(loose.invalidated, (std::vector<int>{12, 13}));
    s.resume();
    EXPECT_EQ(s.result()->rows, 12u);
}

TEST(SetParam, MinsupInvalidatesFromThreshold)
{
    auto s = classic_session(classic());
    s.run_to_completion();
    auto inv = s.set_param("minsup", Rational(1, 5));
    EXPECT_EQ(inv.invalidated, (std::vector<int>{6, 7, 8, 9, 10, 11, 12, 13}));
}

TEST(SetParam, Rejects)
{
    auto s = classic_session(classic());
    EXPECT_EQ(code_of([&] { s.set_param("minsup", Rational(0)); }), Errc::InvalidValue);
    EXPECT_EQ(code_of([&] { s.set_param("minsup", Rational(3, 2)); }), Errc::InvalidValue);
    EXPECT_EQ(code_of([&] { s.set_param("minconf", Rational(-1, 2)); }), Errc::InvalidValue);
    EXPECT_EQ(code_of([&] { s.set_param("n", Rational(1, 2)); }), Errc::InvalidValue);
    EXPECT_EQ(s.params().minsup, Rational(3, 10));
    s.set_param("minsup", Rational(1));
    EXPECT_EQ(s.params().minsup, Rational(1));
}

TEST(Breakpoints, PauseAtEveryEdge)
{
    auto t = classic();
    auto s = classic_session(t);
    auto es = edges(t);
    EXPECT_EQ(es.size(), 13u);
    for (auto [c, p] : es) s.set_breakpoint(c, p, true);
    auto r = s.run_until();
    int pauses = 0;
    while (r.reason == PauseReport::Reason::Breakpoint) {
        ++pauses;
        ASSERT_TRUE(r.at);
        EXPECT_EQ(s.state(r.at->child), NodeState::Materialized);
        EXPECT_NE(s.state(r.at->parent), NodeState::Materialized);
        r = s.resume();
    }
    EXPECT_EQ(pauses, 13);
    EXPECT_EQ(r.reason, PauseReport::Reason::Completion);
    EXPECT_TRUE(relation_equal(s.result()->relation, fig1b()));
}

TEST(Breakpoints, TreeBreakpointsAndEdits)
{
    auto t = classic();
    t.breakpoints.push_back({5, 6, true});
    auto s = classic_session(t);
    auto r = s.run_until();
    EXPECT_EQ(r.reason, PauseReport::Reason::Breakpoint);
    EXPECT_EQ(s.state(5), NodeState::Materialized);
    EXPECT_EQ(s.state(6), NodeState::Pending);
    s.set_param("minsup", Rational(1, 2));
    r = s.resume();
    EXPECT_EQ(r.reason, PauseReport::Reason::Completion);
    EXPECT_EQ(s.result()->rows, 0u);

    EXPECT_EQ(code_of([&] { s.set_breakpoint(3, 9, true); }), Errc::InvalidValue);
    EXPECT_EQ(code_of([&] { s.set_breakpoint(3, 99, true); }), Errc::InvalidValue);
}

TEST(Breakpoints, InvalidationRearms)
{
    auto t = classic();
    auto s = classic_session(t);
    s.set_breakpoint(11, 12, true);
    EXPECT_EQ(s.run_until().reason, PauseReport::Reason::Breakpoint);
    EXPECT_EQ(s.resume().reason, PauseReport::Reason::Completion);
    s.set_param("minconf", Rational(1, 2));
    EXPECT_EQ(s.resume().reason, PauseReport::Reason::Breakpoint);
    EXPECT_EQ(s.resume().reason, PauseReport::Reason::Completion);
    s.set_breakpoint(11, 12, false);
    s.set_param("minconf", Rational(1, 3));
    EXPECT_EQ(s.resume().reason, PauseReport::Reason::Completion);
}

TEST(Cancel, StopsFurtherRuns)
{
    auto s = classic_session(classic());
    s.run_until(3);
    s.cancel();
    EXPECT_TRUE(s.cancelled());
    auto before = s.states();
    EXPECT_EQ(code_of([&] { s.resume(); }), Errc::Cancelled);
    EXPECT_EQ(s.states(), before);
    EXPECT_EQ(s.inspect(3)->rows, 4u);
}

TEST(Cancel, FromAnotherThread)
{
    auto t = build_classic_tree("R", params(Rational(1, 10), Rational(1, 10)));
    auto big = synthetic_transactions(7, 400, 14, 10);
    Session s("s", per_node_plan(t), {{"R", big}});
    std::thread runner([&] {
        try {
            s.run_to_completion();
        } catch (const Error &) {
        }
    });
    s.cancel();
    runner.join();
    auto states = s.states();
    auto after = s.states();
    EXPECT_EQ(states, after);
    EXPECT_EQ(code_of([&] { s.resume(); }), Errc::Cancelled);
}

TEST(AtomicSpans, AprioriRuleGenPlan)
{
    auto t = classic();
    auto s = Session("s", plan_named(t, "FrequentItemsets=Apriori RuleGeneration=RuleGen"), {{"Purchase", purchase()}});
    for (int id : {2, 3, 4, 5, 6, 8, 9, 10, 11, 12}) EXPECT_EQ(s.state(id), NodeState::Elided) << id;
    auto r = s.run_to_completion();
    EXPECT_EQ(ids(r), (std::vector<int>{1, 7, 13}));
    EXPECT_EQ(s.inspect(7)->rows, 7u);
    EXPECT_TRUE(relation_equal(s.result()->relation, fig1b()));
    EXPECT_EQ(code_of([&] { s.inspect(4); }), Errc::NotMaterialized);

    auto inv = s.set_param("minconf", Rational(1, 2));
    EXPECT_EQ(inv.invalidated, (std::vector<int>{13}));
    inv = s.set_param("minsup", Rational(1, 2));
    EXPECT_EQ(inv.invalidated, (std::vector<int>{7}));
}

TEST(AtomicSpans, BreakpointsInsideRejected)
{
    auto t = classic();
    auto plan = plan_named(t, "FrequentItemsets=Apriori RuleGeneration=OperatorPipeline");
    plan.tree.breakpoints.push_back({4, 5, true});
    EXPECT_EQ(code_of([&] { Session("s", plan, {{"Purchase", purchase()}}); }), Errc::InvalidTree);
    plan.tree.breakpoints.back().enabled = false;
    Session s("s", plan, {{"Purchase", purchase()}});
    EXPECT_EQ(code_of([&] { s.set_breakpoint(3, 4, true); }), Errc::InvalidTree);

    s.set_breakpoint(1, 2, true);
    auto r = s.run_until();
    EXPECT_EQ(r.reason, PauseReport::Reason::Breakpoint);
    EXPECT_EQ(s.state(1), NodeState::Materialized);
    EXPECT_EQ(s.state(7), NodeState::Pending);
    r = s.resume();
    EXPECT_TRUE(relation_equal(s.result()->relation, fig1b()));
}

TEST(Trace, Classic)
{
    auto snaps = trace_all(per_node_plan(classic()), {{"Purchase", purchase()}});
    ASSERT_EQ(snaps.size(), 13u);
    for (std::size_t i = 0; i < snaps.size(); ++i) EXPECT_EQ(snaps[i]->node, static_cast<int>(i + 1));
    EXPECT_EQ(snaps[3]->rows, 20u);
    EXPECT_TRUE(relation_equal(snaps.back()->relation, fig1b()));
}

TEST(Trace, Caq)
{
    auto t = caq();
    auto snaps = trace_all(per_node_plan(t), {{"NewPurchase", new_purchase()}});
    std::map<int, std::size_t> rows;
    for (const auto &s : snaps) rows[s->node] = s->rows;
    EXPECT_EQ(rows.at(*t.node_for_step("3")), 3u);
    EXPECT_EQ(rows.at(9), 17u);
    EXPECT_EQ(rows.at(*t.node_for_step("7a")), 7u);
    EXPECT_EQ(rows.at(*t.node_for_step("7b")), 1u);
    EXPECT_EQ(rows.at(t.root()), 6u);
}

TEST(Trace, EmptyData)
{
    auto empty = make_relation(purchase().schema(), {});
    auto snaps = trace_all(per_node_plan(classic()), {{"Purchase", empty}});
    EXPECT_EQ(snaps.size(), 13u);
    for (const auto &s : snaps) EXPECT_EQ(s->rows, 0u) << s->node;
}

TEST(Events, Log)
{
    auto s = classic_session(classic());
    s.run_until(5);
    s.set_param("minsup", Rational(1, 2));
    auto log = s.event_log();
    EXPECT_NE(log.find(" open - n=4\n"), std::string::npos) << log;
    EXPECT_NE(log.find(" materialize 5 rows=11\n"), std::string::npos) << log;
    EXPECT_NE(log.find(" set_param - minsup=1/2 invalidated\n"), std::string::npos) << log;
    auto events = s.events();
    EXPECT_TRUE(std::is_sorted(events.begin(), events.end(),
                               [](const Event &a, const Event &b) { return a.at < b.at; }));
    EXPECT_EQ(to_string(events.front()).size(), log.find('\n'));
    EXPECT_EQ(to_string(events.front())[10], 'T');
}

TEST(EngineProperty, PauseTransparency)
{
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto data = random_transactions(seed);
        auto t = build_classic_tree("R", params(random_minsup(seed), Rational(1, 2)));
        auto plan = per_node_plan(t);
        auto expected = execute(plan, {{"R", data}});
        std::mt19937_64 rng(seed);
        Session s("s", plan, {{"R", data}});
        for (auto [c, p] : edges(t))
            if (rng() % 3 == 0) s.set_breakpoint(c, p, true);
        auto r = s.run_until();
        while (r.reason != PauseReport::Reason::Completion) r = s.resume();
        ASSERT_TRUE(relation_equal(expected, s.result()->relation)) << seed;
    }
}

TEST(EngineProperty, InvalidationSoundness)
{
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto data = random_transactions(seed);
        Rational sup0 = random_minsup(seed), sup1 = random_minsup(seed + 1000);
        Rational conf1(static_cast<std::int64_t>(seed % 9 + 1), 10);
        CAQSpec spec;
        spec.body.card = {1, 2};
        spec.head.card = {1, 1};
        for (const auto &t : {build_classic_tree("R", params(sup0, Rational(1, 2))),
                              build_caq_tree("R", spec, params(sup0, Rational(1, 2)))}) {
            auto fresh_tree = t;
            fresh_tree.meta.params.minsup = sup1;
            fresh_tree.meta.params.minconf = conf1;
            auto expected = execute(per_node_plan(fresh_tree), {{"R", data}});
            for (const auto &plan : enumerate_plans(t)) {
                Session s("s", plan, {{"R", data}});
                s.run_until(static_cast<int>(seed % t.nodes().size()));
                s.set_param("minsup", sup1);
                s.run_to_completion();
                s.set_param("minconf", conf1);
                s.run_to_completion();
                ASSERT_TRUE(relation_equal(expected, s.result()->relation))
                    << "seed " << seed << " plan " << plan.signature();
            }
        }
    }
}

TEST(EngineProperty, MinconfRecomputesExactlyTheConfidenceTail)
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto t = build_classic_tree("R", params(random_minsup(seed), Rational(1, 2)));
        Session s("s", per_node_plan(t), {{"R", random_transactions(seed)}});
        s.run_to_completion();
        s.set_param("minconf", Rational(static_cast<std::int64_t>(seed % 9 + 1), 10));
        EXPECT_EQ(ids(s.resume()), (std::vector<int>{12, 13}));
    }
}

TEST(EngineProperty, Deterministic)
{
    auto a = trace_all(per_node_plan(caq()), {{"NewPurchase", new_purchase()}});
    auto b = trace_all(per_node_plan(caq()), {{"NewPurchase", new_purchase()}});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i]->node, b[i]->node);
        EXPECT_EQ(canonical_render(a[i]->relation), canonical_render(b[i]->relation));
    }
}
