#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "nestmine/dsl.hpp"

using namespace nestmine;
using namespace nestmine::testing;

namespace {

std::string slurp(const std::string &name)
{
    std::ifstream in(data_path(name));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
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

const char *kReserved[] = {"and", "in", "notin", "subset", "subseteq", "itemset", "count", "from", "with", "n"};

std::string random_ident(std::mt19937_64 &rng)
{
    static const std::string first = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
    static const std::string rest = first + "0123456789";
    for (;;) {
        std::string s(1, first[rng() % first.size()]);
        for (std::size_t n = rng() % 6; n > 0; --n) s += rest[rng() % rest.size()];
        std::string low = s;
        for (auto &c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (std::none_of(std::begin(kReserved), std::end(kReserved), [&](const char *k) { return low == k; })) return s;
    }
}

Rational random_threshold(std::mt19937_64 &rng)
{
    std::int64_t q = 1 + static_cast<std::int64_t>(rng() % 20);
    return Rational(1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(q)), q);
}

CardRange random_range(std::mt19937_64 &rng)
{
    CardRange r;
    r.lo = rng() % 5;
    if (rng() % 2) r.hi = rng() % 7;
    return r;
}

Value random_item(std::mt19937_64 &rng, bool numeric)
{
    if (numeric) return Value(static_cast<std::int64_t>(rng() % 100));
    return Value(random_ident(rng));
}

MineRuleAst random_mine_rule(std::mt19937_64 &rng)
{
    MineRuleAst a;
    a.name = random_ident(rng);
    a.body = random_range(rng);
    a.head = random_range(rng);
    a.body_attr = random_ident(rng);
    a.head_attr = rng() % 3 ? a.body_attr : random_ident(rng);
    a.source = random_ident(rng);
    a.group_by = random_ident(rng);
    if (rng() % 2) {
        const CmpOp ops[] = {CmpOp::Le, CmpOp::Ge, CmpOp::Eq};
        a.having = WidthFilter{ops[rng() % 3], static_cast<std::int64_t>(rng() % 10)};
    }
    a.support = random_threshold(rng);
    a.confidence = random_threshold(rng);
    return a;
}

CaqAst random_caq(std::mt19937_64 &rng)
{
    CaqAst a;
    a.s1 = random_ident(rng);
    do a.s2 = random_ident(rng);
    while (a.s2 == a.s1);
    for (std::size_t n = 1 + rng() % 5; n > 0; --n) {
        CaqConstraint c;
        c.var = static_cast<int>(rng() % 2);
        switch (rng() % 5) {
        case 0:
            c.kind = CaqConstraint::Kind::Itemset;
            c.op = rng() % 2 ? CmpOp::Subset : CmpOp::SubsetEq;
            break;
        case 1: {
            c.kind = CaqConstraint::Kind::Card;
            const CmpOp ops[] = {CmpOp::Eq, CmpOp::Le, CmpOp::Ge, CmpOp::Lt, CmpOp::Gt};
            c.op = ops[rng() % 5];
            c.k = static_cast<std::int64_t>(rng() % 6);
            break;
        }
        case 2: {
            c.kind = CaqConstraint::Kind::SubsetOf;
            c.op = rng() % 2 ? CmpOp::Subset : CmpOp::SubsetEq;
            Value::Elements items;
            bool numeric = rng() % 4 == 0;
            for (std::size_t k = rng() % 4; k > 0; --k) items.push_back(random_item(rng, numeric));
            c.items = Value::set(std::move(items));
            break;
        }
        case 3:
            c.kind = CaqConstraint::Kind::Contains;
            c.op = CmpOp::In;
            c.items = random_item(rng, rng() % 4 == 0);
            break;
        default:
            c.kind = CaqConstraint::Kind::NotContains;
            c.op = CmpOp::NotIn;
            c.items = random_item(rng, rng() % 4 == 0);
            break;
        }
        a.constraints.push_back(std::move(c));
    }
    if (rng() % 2) a.source = random_ident(rng);
    if (rng() % 2) a.support = random_threshold(rng);
    if (rng() % 2) a.confidence = random_threshold(rng);
    return a;
}

MineRuleOptions fig4_options()
{
    MineRuleOptions o;
    o.width = WidthFilter{CmpOp::Le, 6};
    o.head = {1, 1};
    o.body = {1, std::nullopt};
    return o;
}

CAQSpec pairs()
{
    CAQSpec s;
    s.body.card = {2, 2};
    s.head.card = {2, 2};
    return s;
}

} // namespace

TEST(MineRule, Fig4Query)
{
    auto ast = parse_mine_rule(slurp("fig4.mr"));
    EXPECT_EQ(ast.name, "SimpleAssociations");
    EXPECT_EQ(ast.body, (CardRange{1, std::nullopt}));
    EXPECT_EQ(ast.head, (CardRange{1, 1}));
    EXPECT_EQ(ast.body_attr, "item");
    EXPECT_EQ(ast.source, "Purchase");
    EXPECT_EQ(ast.group_by, "transaction");
    ASSERT_TRUE(ast.having);
    EXPECT_EQ(ast.having->op, CmpOp::Le);
    EXPECT_EQ(ast.having->k, 6);
    EXPECT_EQ(ast.support, Rational(1, 10));
    EXPECT_EQ(ast.confidence, Rational(2, 10));

    auto tree = compile(ast);
    EXPECT_EQ(tree, build_mine_rule_tree("Purchase", params(Rational(1, 10), Rational(2, 10)), fig4_options()));
}

TEST(MineRule, EndToEnd)
{
    auto tree = compile(parse_mine_rule(slurp("fig4.mr")));
    auto reference = build_mine_rule_tree("Purchase", params(Rational(1, 10), Rational(2, 10)), fig4_options());
    SourceData d{{"Purchase", purchase()}};
    ParamEnv env{bind_n(tree, d), Rational(1, 10), Rational(2, 10)};
    auto out = evaluate(tree, d, env);
    EXPECT_EQ(out.size(), 13u);
    EXPECT_TRUE(relation_equal(out, evaluate(reference, d, env)));
}

TEST(MineRule, OptionalClauses)
{
    auto ast = parse_mine_rule("mine rule R as select distinct 1..n item as body, 1..1 item as head "
                               "from Purchase group by tid extracting rules with support: 1/4, confidence: 0.5");
    EXPECT_FALSE(ast.having);
    EXPECT_EQ(ast.support, Rational(1, 4));
    EXPECT_EQ(ast.confidence, Rational(1, 2));
    EXPECT_NO_THROW(parse_mine_rule("MINE RULE R AS SELECT DISTINCT 1..2 item AS BODY, 1..1 item AS HEAD, CONFIDENCE "
                                    "FROM P GROUP BY tid HAVING COUNT(*) >= 2 "
                                    "EXTRACTING RULES WITH SUPPORT: 0.1, CONFIDENCE: 0.2"));
}

TEST(MineRule, SyntaxErrors)
{
    try {
        parse_mine_rule("MINE RULE X AS SELECT");
        FAIL();
    } catch (const SyntaxErrorAt &e) {
        EXPECT_EQ(e.code(), Errc::SyntaxError);
        EXPECT_EQ(e.line(), 1u);
        EXPECT_EQ(e.column(), 22u);
        EXPECT_EQ(e.found(), "end of input");
        EXPECT_EQ(e.expected(), (std::vector<std::string>{"DISTINCT"}));
    }
    try {
        parse_mine_rule("MINE RULE X AS\nSELECT DISTINCT 1..n item AS BODY, 1..1 item AS HEAD\nFROM P\nGROUP BY t\n"
                        "HAVING COUNT(*) < 6\nEXTRACTING RULES WITH SUPPORT: 0.1, CONFIDENCE: 0.2");
        FAIL();
    } catch (const SyntaxErrorAt &e) {
        EXPECT_EQ(e.line(), 5u);
        EXPECT_EQ(e.column(), 17u);
    }
    EXPECT_EQ(code_of([] { parse_mine_rule(slurp("fig4.mr") + " WHERE x"); }), Errc::SyntaxError);
    EXPECT_EQ(code_of([] { parse_mine_rule("MINE RULE X AS SELECT DISTINCT 1..n item AS BODY @"); }),
              Errc::SyntaxError);
    EXPECT_EQ(code_of([] { parse_mine_rule("MINE RULE X AS SELECT DISTINCT 99999999999999999999..n"); }),
              Errc::SyntaxError);
}

TEST(MineRule, CompileErrors)
{
    auto text = slurp("fig4.mr");
    auto bad_head = text;
    bad_head.replace(bad_head.find("1..1"), 4, "2..1");
    EXPECT_EQ(code_of([&] { compile(parse_mine_rule(bad_head)); }), Errc::InfeasibleConstraint);
    auto zero = text;
    zero.replace(zero.find("SUPPORT: 0.1"), 12, "SUPPORT: 0");
    EXPECT_EQ(code_of([&] { compile(parse_mine_rule(zero)); }), Errc::InvalidValue);
    auto mixed = text;
    mixed.replace(mixed.find("1..1 item"), 9, "1..1 cust");
    EXPECT_EQ(code_of([&] { compile(parse_mine_rule(mixed)); }), Errc::InvalidValue);
}

TEST(Caq, PaperQuery)
{
    auto ast = parse_caq(slurp("caq.q"));
    EXPECT_EQ(ast.s1, "X1");
    EXPECT_EQ(ast.s2, "X2");
    ASSERT_EQ(ast.constraints.size(), 4u);
    EXPECT_EQ(ast.constraints[0].kind, CaqConstraint::Kind::Itemset);
    EXPECT_EQ(ast.constraints[2].kind, CaqConstraint::Kind::Card);
    EXPECT_EQ(ast.constraints[2].k, 2);
    EXPECT_EQ(ast.constraints[3].var, 1);
    EXPECT_EQ(ast.source, "NewPurchase");
    EXPECT_EQ(ast.support, Rational(1, 10));
    EXPECT_EQ(ast.confidence, Rational(1, 5));

    auto spec = spec_of(ast);
    EXPECT_EQ(spec.caq, pairs());
    auto tree = compile(ast);
    EXPECT_EQ(tree, build_caq_tree("NewPurchase", pairs(), params(Rational(1, 10), Rational(2, 10))));
    ASSERT_TRUE(tree.node_for_step("6a"));
    ASSERT_TRUE(tree.node_for_step("6b"));
    EXPECT_NE(describe_op(tree.node(*tree.node_for_step("6b")).op).find("= 4"), std::string::npos);

    SourceData d{{"NewPurchase", new_purchase()}};
    ParamEnv env{bind_n(tree, d), Rational(1, 10), Rational(2, 10)};
    EXPECT_EQ(evaluate(tree, d, env).size(), 6u);
}

TEST(Caq, SmallForms)
{
    auto one = parse_caq("{(S1,S2) | count(S1) = 1}");
    ASSERT_EQ(one.constraints.size(), 1u);
    EXPECT_FALSE(one.source);
    EXPECT_FALSE(one.support);

    try {
        parse_caq("{(S1) | count(S1) = 1}");
        FAIL();
    } catch (const SyntaxErrorAt &e) {
        EXPECT_EQ(e.column(), 5u);
        EXPECT_EQ(e.expected(), (std::vector<std::string>{"','"}));
    }
    EXPECT_EQ(code_of([] { parse_caq("{(S1,S2) | sum(S1) = 2}"); }), Errc::UnknownConstraint);
    EXPECT_EQ(code_of([] { parse_caq("{(S1,S2) | count(S3) = 2}"); }), Errc::SyntaxError);
    EXPECT_EQ(code_of([] { parse_caq("{(S1,S1) | count(S1) = 2}"); }), Errc::SyntaxError);
    EXPECT_EQ(code_of([] { parse_caq("{(S1,S2) | count(S1) = 2"); }), Errc::SyntaxError);
    EXPECT_EQ(code_of([] { parse_caq("{(S1,S2) | 'B' ∈ S1 ∧ }"); }), Errc::SyntaxError);
}

TEST(Caq, ItemConstraints)
{
    auto ast = parse_caq("{(A, B) | 'J' ∈ B and 'S' notin A and A ⊂ {'B', 'C', 'H'} and count(B) <= 2 "
                         "and count(A) > 1}\nWITH CONFIDENCE: 1/3");
    auto spec = spec_of(ast);
    EXPECT_EQ(spec.caq.head.must_contain, (std::vector<Value>{Value(std::string("J"))}));
    EXPECT_EQ(spec.caq.body.must_not_contain, (std::vector<Value>{Value(std::string("S"))}));
    EXPECT_EQ(spec.caq.body.subset_of, items("BCH"));
    EXPECT_EQ(spec.caq.body.card, (CardRange{2, 2}));
    EXPECT_EQ(spec.caq.head.card, (CardRange{1, 2}));
    EXPECT_EQ(spec.params.minconf, Rational(1, 3));
    EXPECT_EQ(spec.params.minsup, MiningParams{}.minsup);

    EXPECT_EQ(code_of([] { spec_of(parse_caq("{(A,B) | count(A) > 2 and count(A) < 3}")); }),
              Errc::InfeasibleConstraint);
    EXPECT_EQ(code_of([] { spec_of(parse_caq("{(A,B) | count(A) <= 0}")); }), Errc::InfeasibleConstraint);
}

TEST(Query, Dispatch)
{
    EXPECT_EQ(parse_query(slurp("fig4.mr")).kind, TemplateKind::MineRule);
    EXPECT_EQ(parse_query("\n  " + slurp("caq.q")).kind, TemplateKind::CAQ);
    auto o = apply_overrides(parse_query(slurp("caq.q")), {Rational(1, 2), std::nullopt, ThresholdMode::Inclusive, "R"});
    EXPECT_EQ(o.params.minsup, Rational(1, 2));
    EXPECT_EQ(o.params.minconf, Rational(1, 5));
    EXPECT_EQ(o.params.threshold_mode, ThresholdMode::Inclusive);
    EXPECT_EQ(o.source, "R");
}

TEST(Query, Json)
{
    auto classic = query_from_json(nlohmann::json{{"template", "classic"}, {"minsup", "0.3"}, {"minconf", 0.6}});
    EXPECT_EQ(classic.kind, TemplateKind::Classic);
    EXPECT_EQ(classic.params.minsup, Rational(3, 10));
    EXPECT_EQ(classic.params.minconf, Rational(3, 5));
    EXPECT_EQ(build_tree(classic), build_classic_tree("Purchase", params(Rational(3, 10), Rational(6, 10))));

    auto caq = query_from_json(nlohmann::json{{"query", slurp("caq.q")}, {"minconf", "1/2"}});
    EXPECT_EQ(caq.kind, TemplateKind::CAQ);
    EXPECT_EQ(caq.params.minconf, Rational(1, 2));
    EXPECT_EQ(query_from_json(to_json(caq)), caq);

    auto mr = parse_query(slurp("fig4.mr"));
    EXPECT_EQ(query_from_json(to_json(mr)), mr);

    auto spec = query_from_json(nlohmann::json::parse(R"({"template":"caq","body":{"lo":2,"hi":2,"must_contain":["B"]},
        "head":{"lo":1,"hi":null,"subset_of":["C","H","J"]},"width_pruning":false})"));
    EXPECT_EQ(spec.caq.body.must_contain, (std::vector<Value>{Value(std::string("B"))}));
    EXPECT_EQ(spec.caq.head.subset_of, items("CHJ"));
    EXPECT_FALSE(spec.caq.width_pruning);
    EXPECT_EQ(query_from_json(to_json(spec)), spec);

    EXPECT_EQ(code_of([] { query_from_json(nlohmann::json{{"template", "classic"}, {"bogus", 1}}); }),
              Errc::InvalidValue);
    EXPECT_EQ(code_of([] { query_from_json(nlohmann::json{{"template", "other"}}); }), Errc::InvalidValue);
    EXPECT_EQ(code_of([] { query_from_json(nlohmann::json{{"template", "classic"}, {"width_pruning", true}}); }),
              Errc::InvalidValue);
    EXPECT_EQ(code_of([] { query_from_json(nlohmann::json{{"query", "MINE"}}); }), Errc::SyntaxError);
    EXPECT_EQ(code_of([] { build_tree(query_from_json(nlohmann::json{{"minsup", 0}})); }), Errc::InvalidValue);
    EXPECT_EQ(code_of([] { query_from_json(nlohmann::json::array()); }), Errc::InvalidValue);
}

TEST(Render, KnownText)
{
    auto ast = parse_mine_rule(slurp("fig4.mr"));
    EXPECT_EQ(render(ast), "MINE RULE SimpleAssociations AS\n"
                           "SELECT DISTINCT 1..n item AS BODY, 1..1 item AS HEAD, SUPPORT, CONFIDENCE\n"
                           "FROM Purchase\n"
                           "GROUP BY transaction\n"
                           "HAVING COUNT(*) <= 6\n"
                           "EXTRACTING RULES WITH SUPPORT: 0.1, CONFIDENCE: 0.2\n");
    auto caq = parse_caq(slurp("caq.q"));
    EXPECT_EQ(render(caq, SyntaxStyle{true}),
              "{(X1, X2) | X1 ⊂ itemset ∧ X2 ⊂ itemset ∧ count(X1) = 2 ∧ count(X2) = 2}\n"
              "FROM NewPurchase\nWITH SUPPORT: 0.1, CONFIDENCE: 0.2\n");
    caq.support = Rational(1, 3);
    EXPECT_NE(render(caq).find("SUPPORT: 1/3"), std::string::npos);
}

TEST(DslProperty, RoundTrip)
{
    std::mt19937_64 rng(20261017);
    for (int i = 0; i < 1000; ++i) {
        auto mr = random_mine_rule(rng);
        ASSERT_EQ(parse_mine_rule(render(mr)), mr) << render(mr);
        auto caq = random_caq(rng);
        ASSERT_EQ(parse_caq(render(caq)), caq) << render(caq);
        ASSERT_EQ(parse_caq(render(caq, SyntaxStyle{true})), caq) << render(caq, SyntaxStyle{true});
    }
}

TEST(DslProperty, ArbitraryBytes)
{
    std::mt19937_64 rng(7);
    std::vector<std::string> seeds{slurp("fig4.mr"), slurp("caq.q")};
    auto attempt = [](const std::string &text) {
        for (auto parse : {+[](std::string_view t) { parse_mine_rule(t); }, +[](std::string_view t) { parse_caq(t); },
                           +[](std::string_view t) { parse_query(t); }}) {
            try {
                parse(text);
            } catch (const Error &) {
            }
        }
    };
    for (int i = 0; i < 3000; ++i) {
        std::string text;
        if (i % 2) {
            text = seeds[rng() % 2];
            for (std::size_t k = 1 + rng() % 6; k > 0 && !text.empty(); --k) {
                std::size_t at = rng() % text.size();
                switch (rng() % 3) {
                case 0: text[at] = static_cast<char>(rng() % 256); break;
                case 1: text.erase(at, 1 + rng() % 8); break;
                default: text.insert(at, 1, static_cast<char>(rng() % 256)); break;
                }
            }
        } else {
            std::size_t n = i % 100 == 0 ? 65536 : rng() % 200;
            for (std::size_t k = 0; k < n; ++k) text += static_cast<char>(rng() % 256);
        }
        ASSERT_NO_FATAL_FAILURE(attempt(text));
    }
    std::string deep(65536, '{');
    attempt(deep);
    std::string long_conj = "{(A,B) | count(A) = 1";
    while (long_conj.size() < 65000) long_conj += " and count(B) >= 1";
    EXPECT_NO_THROW(parse_caq(long_conj + "}"));
}
