#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "nestmine/dsl.hpp"
#include "nestmine/engine.hpp"
#include "nestmine/io.hpp"
#include "nestmine/ops.hpp"

using namespace nestmine;

namespace {

std::string data_dir = NESTMINE_DATA_DIR;

struct Check
{
    bool ok = true;
    std::ostringstream why;
    std::string fault;

    void expect(bool cond, const std::string &what)
    {
        if (!cond && ok) fault = what;
        ok = ok && cond;
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

NestedRelation load(const std::string &file) { return load_transactions_csv({data_dir + "/" + file}); }

std::string read(const std::string &file)
{
    std::ifstream in(data_dir + "/" + file);
    return {std::istreambuf_iterator<char>(in), {}};
}

Value letters(const std::string &s)
{
    Value::Elements e;
    for (char c : s) e.push_back(Value(std::string(1, c)));
    return Value::set(std::move(e));
}

std::string letters_of(const Value &set)
{
    std::string out;
    for (const auto &e : set.elements()) out += e.as_string();
    return out;
}

MiningParams params(Rational minsup, Rational minconf)
{
    MiningParams p;
    p.minsup = minsup;
    p.minconf = minconf;
    return p;
}

/// (body, head) -> (sup, conf) read from a rules relation.
std::map<std::pair<std::string, std::string>, std::pair<Rational, Rational>> rule_map(const NestedRelation &r)
{
    const Schema &s = r.schema();
    std::size_t bd = s.require("BD"), hd = s.require("HD"), sup = s.require("sup"), conf = s.require("conf");
    std::map<std::pair<std::string, std::string>, std::pair<Rational, Rational>> out;
    for (const auto &t : r.tuples())
        out[{letters_of(t[bd]), letters_of(t[hd])}] = {t[sup].as_rational(), t[conf].as_rational()};
    return out;
}

std::map<std::pair<std::string, std::string>, std::pair<Rational, Rational>> rule_map(const std::vector<Rule> &rules)
{
    std::map<std::pair<std::string, std::string>, std::pair<Rational, Rational>> out;
    for (const auto &r : rules) out[{letters_of(r.body), letters_of(r.head)}] = {r.sup, r.conf};
    return out;
}

NestedRelation reference(const QueryTree &t, const SourceData &data)
{
    const MiningParams &p = t.meta.params;
    return evaluate(t, data, ParamEnv{bind_n(t, data), p.minsup, p.minconf});
}

/// Random (tid, item) data: at most 8 items, at most 12 transactions.
NestedRelation random_data(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::size_t m = 1 + rng() % 8, n = 1 + rng() % 12;
    std::vector<Tuple> rows;
    for (std::size_t t = 1; t <= n; ++t) {
        bool any = false;
        for (std::size_t i = 0; i < m; ++i)
            if (rng() % 2) {
                rows.push_back({Value(static_cast<std::int64_t>(t)), Value(std::string(1, static_cast<char>('a' + i)))});
                any = true;
            }
        if (!any) rows.push_back({Value(static_cast<std::int64_t>(t)), Value(std::string("a"))});
    }
    return make_relation({{"tid", ScalarKind::Int}, {"item", ScalarKind::String}}, std::move(rows));
}

MiningParams random_params(std::uint64_t seed)
{
    std::mt19937_64 rng(seed * 7919 + 17);
    auto p = params(Rational(static_cast<std::int64_t>(1 + rng() % 5), 10), Rational(static_cast<std::int64_t>(1 + rng() % 9), 10));
    if (rng() % 3 == 0) p.threshold_mode = ThresholdMode::Inclusive;
    return p;
}

/// Classic, MINE RULE and constrained-query trees over source R.
std::vector<QueryTree> template_trees(const MiningParams &p)
{
    std::vector<QueryTree> out;
    out.push_back(build_classic_tree("R", p));
    MineRuleOptions mr;
    mr.width = WidthFilter{CmpOp::Le, 6};
    out.push_back(build_mine_rule_tree("R", p, mr));
    CAQSpec caq;
    caq.body.card = {2, 2};
    caq.head.card = {2, 2};
    out.push_back(build_caq_tree("R", caq, p));
    CAQSpec loose;
    loose.body.card = {1, 2};
    loose.head.card = {1, 1};
    loose.width_pruning = false;
    out.push_back(build_caq_tree("R", loose, p));
    return out;
}

/*----- criteria --------------------------------------------------------------------------------------------------*/

Check classic_rules()
{
    Check c;
    auto t0 = Clock::now();
    QueryTree tree = build_classic_tree("Purchase", params(Rational(3, 10), Rational(6, 10)));
    SourceData data{{"Purchase", load("purchase.csv")}};
    auto e = optimize(tree, stats_from(transactions_from(data.at("Purchase"))), default_rules());
    NestedRelation result = execute(e.plans[e.chosen], data);
    double elapsed = seconds_since(t0);

    std::set<std::pair<std::string, std::string>> expected{{"B", "C"}, {"B", "CJ"}, {"B", "J"},  {"BC", "J"}, {"BJ", "C"},
                                                           {"C", "B"}, {"C", "BJ"}, {"C", "J"},  {"CJ", "B"}};
    auto got = rule_map(result);
    std::set<std::pair<std::string, std::string>> keys;
    for (const auto &[k, v] : got) {
        keys.insert(k);
        c.expect(v.first == Rational(1, 2) && v.second == Rational(1), "sup/conf differ for " + k.first + "->" + k.second);
    }
    c.expect(keys == expected && result.size() == 9, std::to_string(result.size()) + " rules instead of the 9 expected");
    auto ts = transactions_from(data.at("Purchase"));
    auto p = params(Rational(3, 10), Rational(6, 10));
    c.expect(got == rule_map(rules_from_itemsets(bruteforce_oracle(ts, p), p)), "differs from the brute-force oracle");
    c.expect(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
    c.why << "9 rules, sup 1/2, conf 1, " << static_cast<int>(elapsed * 1000) << " ms";
    return c;
}

Check classic_trace()
{
    Check c;
    QueryTree tree = build_classic_tree("Purchase", params(Rational(3, 10), Rational(6, 10)));
    auto snaps = trace_all(per_node_plan(tree), {{"Purchase", load("purchase.csv")}});
    std::map<std::string, std::size_t> rows;
    for (const auto &s : snaps) rows[tree.node(s->node).step] = s->rows;
    std::map<std::string, std::size_t> expected{{"1", 10}, {"2", 4},   {"4", 20},  {"5", 11}, {"6", 7}, {"7", 7},
                                                {"9", 12}, {"10", 12}, {"12", 9}, {"13", 9}};
    for (const auto &[step, n] : expected) {
        auto it = rows.find(step);
        c.expect(it != rows.end() && it->second == n,
                 "step " + step + " has " + (it == rows.end() ? std::string("no") : std::to_string(it->second)) + " rows");
    }
    c.why << "steps 1,2,4,5,6,7,9,10,12,13 = 10,4,20,11,7,7,12,12,9,9";
    return c;
}

Check caq_rules()
{
    Check c;
    QuerySpec spec = parse_query(read("caq.q"));
    QueryTree tree = build_tree(spec);
    NestedRelation np = load("newpurchase.csv");
    SourceData data{{spec.source, np}};

    auto e = optimize(tree, stats_from(transactions_from(np)), default_rules());
    auto got = rule_map(execute(e.plans[e.chosen], data));
    Rational q(1, 4), h(1, 2), one(1);
    std::map<std::pair<std::string, std::string>, std::pair<Rational, Rational>> expected{
        {{"BC", "HJ"}, {q, h}}, {{"BH", "CJ"}, {q, one}}, {{"BJ", "CH"}, {q, h}},
        {{"CH", "BJ"}, {q, one}}, {{"CJ", "BH"}, {q, h}}, {{"HJ", "BC"}, {q, one}}};
    c.expect(got == expected, std::to_string(got.size()) + " rules or wrong sup/conf");

    // independent: every 2+2 split of a frequent 4-itemset from the brute-force oracle
    auto ts = transactions_from(np);
    auto p = spec.params;
    std::map<std::pair<std::string, std::string>, std::pair<Rational, Rational>> oracle;
    auto all = bruteforce_oracle(ts, p);
    std::map<Value, Rational> sup;
    for (const auto &f : all) sup[f.itemset] = f.sup;
    for (const auto &f : all) {
        if (f.itemset.size() != 4) continue;
        std::vector<Value> el(f.itemset.elements().begin(), f.itemset.elements().end());
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = i + 1; j < 4; ++j) {
                Value body = Value::set({el[i], el[j]});
                Value head = set_difference(f.itemset, body);
                Rational conf = f.sup / sup.at(body);
                if (passes(conf, p.minconf, p.threshold_mode)) oracle[{letters_of(body), letters_of(head)}] = {f.sup, conf};
            }
    }
    c.expect(got == oracle, "differs from the brute-force oracle");

    Session s("caq", per_node_plan(tree), data);
    s.run_to_completion();
    auto step = [&](const char *label) { return s.inspect(*tree.node_for_step(label)); };
    auto step2 = step("2");
    std::vector<std::pair<std::int64_t, std::int64_t>> counts;
    std::size_t tid = step2->relation.schema().require("tid"), ci = step2->relation.schema().require("count_item");
    for (const auto &t : step2->relation.tuples()) counts.emplace_back(t[tid].as_int(), t[ci].as_int());
    std::sort(counts.begin(), counts.end());
    std::vector<std::int64_t> ci_values;
    for (auto [k, v] : counts) ci_values.push_back(v);
    c.expect(ci_values == std::vector<std::int64_t>{2, 4, 1, 3}, "count_item column differs");
    bool tid3 = false;
    auto step3 = step("3");
    for (const auto &t : step3->relation.tuples())
        if (t[step3->relation.schema().require("tid")].as_int() == 3) tid3 = true;
    c.expect(!tid3 && step3->rows == 3, "transaction 3 survived the width filter");
    c.expect(s.inspect(tree.span_of(*tree.node_for_step("4"))->top)->rows == 17, "frequent itemset count is not 17");
    auto a = step("7a");
    c.expect(a->rows == 7, "branch A does not hold 7 itemsets");
    for (const auto &t : a->relation.tuples()) c.expect(t[0].size() == 2, "branch A holds a non-pair");
    auto b = step("7b");
    c.expect(b->rows == 1 && b->relation.tuples()[0][0] == letters("BCHJ"), "branch B is not {{B,C,H,J}}");
    c.why << "6 rules, sup 1/4, BJ->CH conf 1/2; count_item 2,4,1,3; 17 itemsets; branches 7 and 1";
    return c;
}

Check mine_rule_query()
{
    Check c;
    MineRuleAst ast = parse_mine_rule(read("fig4.mr"));
    QueryTree tree = compile(ast);
    NestedRelation purchase = load("purchase.csv");
    SourceData data{{ast.source, purchase}};
    auto e = optimize(tree, stats_from(transactions_from(purchase)), default_rules());
    NestedRelation result = execute(e.plans[e.chosen], data);
    auto got = rule_map(result);
    c.expect(result.size() == 13, std::to_string(result.size()) + " rules instead of 13");
    for (const auto &[k, v] : got) c.expect(k.second.size() == 1, "head " + k.second + " is not a singleton");
    auto ts = transactions_from(purchase);
    std::int64_t widest = 0;
    for (const auto &[tid, set] : ts.transactions) widest = std::max<std::int64_t>(widest, static_cast<std::int64_t>(set.size()));
    c.expect(widest <= 6, "a transaction is wider than 6");
    auto p = params(ast.support, ast.confidence);
    std::vector<Rule> singles;
    for (auto &r : rules_from_itemsets(bruteforce_oracle(ts, p), p))
        if (r.head.size() == 1) singles.push_back(r);
    c.expect(got == rule_map(singles), "differs from the brute-force oracle");
    c.why << "13 rules, singleton heads, widest transaction " << widest;
    return c;
}

Check plan_equivalence()
{
    Check c;
    auto t0 = Clock::now();
    std::size_t runs = 0;
    for (std::uint64_t seed = 0; seed < 200 && c.ok; ++seed) {
        SourceData data{{"R", random_data(seed)}};
        for (const auto &base : template_trees(random_params(seed))) {
            auto expected = reference(base, data);
            for (const auto &t : {base, apply_rewrites(base, rule_catalog()).tree})
                for (const auto &plan : enumerate_plans(t)) {
                    ++runs;
                    c.expect(relation_equal(expected, execute(plan, data)),
                             "seed " + std::to_string(seed) + " plan " + plan.signature() + " differs; ");
                }
        }
    }
    double elapsed = seconds_since(t0);
    c.expect(elapsed < 60, "took " + std::to_string(elapsed) + " s");
    c.why << runs << " plan executions over 200 datasets, " << static_cast<int>(elapsed * 1000) << " ms";
    return c;
}

Check rewrite_soundness()
{
    Check c;
    std::size_t fired = 0;
    for (std::uint64_t seed = 0; seed < 200 && c.ok; ++seed) {
        SourceData data{{"R", random_data(seed)}};
        for (const auto &base : template_trees(random_params(seed))) {
            auto expected = reference(base, data);
            for (const auto &rule : rule_catalog()) {
                auto r = apply_rewrites(base, {rule});
                fired += r.trace.size();
                c.expect(relation_equal(expected, reference(r.tree, data)),
                         rule.name + " changes the output at seed " + std::to_string(seed) + "; ");
            }
        }
    }
    c.why << rule_catalog().size() << " rules, " << fired << " applications checked";
    return c;
}

Check oracle_equivalence()
{
    Check c;
    for (std::uint64_t seed = 0; seed < 200 && c.ok; ++seed) {
        auto ts = transactions_from(random_data(seed));
        auto p = random_params(seed);
        auto truth = bruteforce_oracle(ts, p);
        std::string at = " at seed " + std::to_string(seed);
        c.expect(naive_frequent_itemsets(ts, p) == truth, "naive differs" + at);
        c.expect(apriori_frequent_itemsets(ts, p) == truth, "Apriori differs" + at);
        std::mt19937_64 rng(seed);
        ItemsetConstraints k;
        k.size_lo = 1 + rng() % 2;
        k.size_hi = k.size_lo + rng() % 3;
        if (rng() % 2) k.must_not_contain = {Value(std::string(1, static_cast<char>('a' + rng() % 8)))};
        std::vector<FrequentItemset> filtered;
        for (const auto &f : truth)
            if (k.admits(f.itemset)) filtered.push_back(f);
        c.expect(apriori_frequent_itemsets(ts, p, k) == filtered, "constrained Apriori differs" + at);

        std::set<Value> sets;
        for (const auto &f : truth) sets.insert(f.itemset);
        for (const auto &f : truth) {
            if (f.itemset.size() < 2) continue;
            for (const auto &e : f.itemset.elements())
                c.expect(sets.count(set_difference(f.itemset, Value::set({e}))) == 1, "downward closure fails" + at);
        }
    }
    c.why << "naive, Apriori and constrained Apriori equal the oracle on 200 datasets";
    return c;
}

Check breakpoint_contract()
{
    Check c;
    std::vector<std::pair<QueryTree, SourceData>> cases;
    cases.emplace_back(build_classic_tree("Purchase", params(Rational(3, 10), Rational(6, 10))),
                       SourceData{{"Purchase", load("purchase.csv")}});
    QuerySpec caq = parse_query(read("caq.q"));
    cases.emplace_back(build_tree(caq), SourceData{{caq.source, load("newpurchase.csv")}});
    for (std::uint64_t seed = 0; seed < 20; ++seed)
        for (auto &t : template_trees(random_params(seed))) cases.emplace_back(std::move(t), SourceData{{"R", random_data(seed)}});

    std::size_t pauses = 0;
    for (const auto &[tree, data] : cases) {
        PhysicalPlan plan = per_node_plan(tree);
        for (const auto &n : plan.tree.nodes())
            for (int child : n.children) plan.tree.breakpoints.push_back({child, n.id, true});
        Session s("bp", plan, data);
        auto r = s.run_until();
        for (; r.reason == PauseReport::Reason::Breakpoint; r = s.run_until()) ++pauses;
        c.expect(relation_equal(s.result()->relation, execute(per_node_plan(tree), data)), "paused run differs; ");
    }

    Session edit("edit", per_node_plan(cases[0].first), cases[0].second);
    edit.run_until(*cases[0].first.node_for_step("5"));
    edit.set_param("minsup", Rational(1, 2));
    edit.resume();
    auto fi = edit.inspect(*cases[0].first.node_for_step("7"));
    c.expect(fi->rows == 1 && fi->relation.tuples()[0][0] == letters("J"), "frequent sets at minsup 1/2 are not {J}");
    c.expect(edit.result()->rows == 0, "rules remain at minsup 1/2");

    Session done("done", per_node_plan(cases[0].first), cases[0].second);
    done.run_to_completion();
    auto inv = done.set_param("minconf", Rational(7, 10));
    c.expect(inv.invalidated.size() == 2, std::to_string(inv.invalidated.size()) + " nodes invalidated by minconf");
    c.why << pauses << " pauses over " << cases.size() << " runs; minsup 1/2 gives {J} and 0 rules; minconf invalidates "
          << inv.invalidated.size();
    return c;
}

Check algebra_laws()
{
    Check c;
    Schema xs{{"x", Type::set_of(ScalarKind::Int)}};
    for (std::size_t k = 0; k <= 20; ++k) {
        Value::Elements e;
        for (std::size_t i = 0; i < k; ++i) e.push_back(Value(static_cast<std::int64_t>(i)));
        Value p = eval_expr(powerset(attr("x")), {Value::set(std::move(e))}, xs);
        c.expect(p.size() == (std::size_t{1} << k) - 1, "|P(S)| wrong for |S| = " + std::to_string(k));
    }
    for (std::uint64_t seed = 0; seed < 200 && c.ok; ++seed) {
        auto flat = random_data(seed);
        std::string at = " at seed " + std::to_string(seed);
        c.expect(unnest(nest(flat, {"tid"}), "item") == flat, "nest/unnest round trip fails" + at);
        auto rows = powerset_macro(nest(flat, {"tid"}), "item", "itemset");
        auto g = grouping(rows, {"itemset"}, {{AggFn::Count, "tid", ""}});
        std::int64_t total = 0;
        for (const auto &v : g.column("count_tid")) total += v.as_int();
        c.expect(total == static_cast<std::int64_t>(rows.size()), "group counts do not add up" + at);
        auto small = select(g, card(attr("itemset")) <= lit(Value(std::int64_t{2})));
        Predicate jp = subset(attr("A.itemset"), attr("B.itemset"));
        c.expect(join(small, "A", small, "B", jp) == select(product(small, "A", small, "B"), jp),
                 "join differs from select over product" + at);
    }
    c.why << "powerset sizes to 20; nest/unnest, group sums, join = select(product) on 200 datasets";
    return c;
}

Check cost_ordering()
{
    Check c;
    Stats wide{1000, 50, 20, {}};
    auto p = params(Rational(1, 50), Rational(1, 2));
    CAQSpec caq;
    caq.body.card = {2, 2};
    caq.head.card = {2, 2};
    for (const auto &tree : {build_classic_tree("R", p), build_mine_rule_tree("R", p, {}), build_caq_tree("R", caq, p)}) {
        auto chosen = choose_plan(enumerate_plans(tree), wide);
        bool apriori = false;
        for (std::size_t i = 0; i < chosen.tree.spans.size(); ++i)
            if (chosen.tree.spans[i].kind == ModuleKind::FrequentItemsets) {
                auto a = chosen.span_algorithm(i);
                apriori = a && (*a == Algorithm::Apriori || *a == Algorithm::ConstrainedApriori);
            }
        c.expect(apriori, "chose " + chosen.signature() + "; ");
    }
    auto t0 = Clock::now();
    SourceData data{{"R", synthetic_transactions(3, 1000, 50, 4)}};
    std::size_t plans = 0;
    try {
        for (const auto &plan : enumerate_plans(build_classic_tree("R", p))) {
            execute(plan, data);
            ++plans;
        }
    } catch (const Error &e) {
        c.expect(false, std::string("narrow data: ") + e.what());
    }
    c.why << "Apriori-family chosen at n=1000 m=50 w=20; " << plans << " plans ran at w=4 in "
          << static_cast<int>(seconds_since(t0) * 1000) << " ms";
    return c;
}

} // namespace

int main(int argc, char **argv)
{
    if (argc > 1) data_dir = argv[1];
    std::vector<std::pair<std::string, std::function<Check()>>> criteria{
        {"classic-rules", classic_rules},
        {"classic-trace", classic_trace},
        {"caq-rules", caq_rules},
        {"mine-rule-query", mine_rule_query},
        {"plan-equivalence", plan_equivalence},
        {"rewrite-soundness", rewrite_soundness},
        {"oracle-equivalence", oracle_equivalence},
        {"breakpoint-contract", breakpoint_contract},
        {"algebra-laws", algebra_laws},
        {"cost-ordering", cost_ordering},
    };
    int failed = 0;
    for (const auto &[name, run] : criteria) {
        Check c;
        try {
            c = run();
        } catch (const std::exception &e) {
            c.ok = false;
            c.fault = std::string("threw ") + e.what();
        }
        failed += !c.ok;
        std::cout << (c.ok ? "PASS " : "FAIL ") << name << "  " << (c.ok ? c.why.str() : c.fault) << std::endl;
    }
    return failed ? 1 : 0;
}
