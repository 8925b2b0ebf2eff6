#include <algorithm>

#include "nestmine/error.hpp"
#include "nestmine/query_tree.hpp"

namespace nestmine {

namespace {

Predicate threshold(const std::string &count, ThresholdMode mode)
{
    Expr bound = param("n") * param("minsup");
    return mode == ThresholdMode::Strict ? attr(count) > bound : attr(count) >= bound;
}

Predicate conf_threshold(ThresholdMode mode)
{
    return mode == ThresholdMode::Strict ? attr("conf") > param("minconf") : attr("conf") >= param("minconf");
}

std::vector<Binding> pass(std::initializer_list<const char *> names)
{
    std::vector<Binding> out;
    for (const char *n : names) out.emplace_back(n, attr(n));
    return out;
}

int add_data_prep(QueryTree &t, const std::string &source, const std::string &step)
{
    int s = t.add(op::Source{source}, {}, "0");
    return t.add(op::Project{pass({"tid", "item"})}, {s}, step);
}

/// Powerset, unnest, count, threshold, support; `input` yields (tid, item:set).
int add_fi(QueryTree &t, int input, ThresholdMode mode, const std::vector<std::string> &steps)
{
    auto step = [&](std::size_t i) { return steps.size() == 1 ? steps[0] : steps[i]; };
    int p = t.add(op::Project{{{"tid", attr("tid")}, {"itemset", powerset(attr("item"))}}}, {input}, step(0));
    int u = t.add(op::Unnest{"itemset"}, {p}, step(1));
    int g = t.add(op::Grouping{{"itemset"}, {{AggFn::Count, "tid", ""}}}, {u}, step(2));
    int s = t.add(op::Select{threshold("count_tid", mode)}, {g}, step(3));
    return t.add(op::Project{{{"freq_itemset", attr("itemset")}, {"sup", attr("count_tid") / param("n")}}}, {s},
                 step(4));
}

/// Subset join through the confidence filter; `a` and `b` yield (freq_itemset, sup).
int add_rulegen(QueryTree &t, int a, int b, ThresholdMode mode, const std::vector<std::string> &steps)
{
    auto step = [&](std::size_t i) { return steps.size() == 1 ? steps[0] : steps[i]; };
    int j = t.add(op::Join{subset(attr("A.freq_itemset"), attr("B.freq_itemset"))}, {a, b}, step(0));
    int p = t.add(op::Project{{{"BD", attr("A.freq_itemset")},
                               {"BD_sup", attr("A.sup")},
                               {"sp", attr("B.freq_itemset")},
                               {"sp_sup", attr("B.sup")}}},
                  {j}, step(1));
    auto with_conf = pass({"BD", "BD_sup", "sp", "sp_sup"});
    with_conf.emplace_back("conf", attr("sp_sup") / attr("BD_sup"));
    int c = t.add(op::Project{with_conf}, {p}, step(2));
    int s = t.add(op::Select{conf_threshold(mode)}, {c}, step(3));
    return t.add(op::Project{{{"BD", attr("BD")},
                              {"HD", attr("sp") - attr("BD")},
                              {"sup", attr("sp_sup")},
                              {"conf", attr("conf")}}},
                 {s}, step(4));
}

void check_range(const CardRange &r, const char *what)
{
    if (r.lo < 1) fail(Errc::InfeasibleConstraint, std::string(what) + " cardinality must be at least 1");
    if (r.hi && *r.hi < r.lo)
        fail(Errc::InfeasibleConstraint, std::string(what) + " cardinality range " + to_string(r) + " is empty");
}

/// Conjunction of range checks on `e`; empty when the range is vacuous.
std::vector<Predicate> range_preds(const Expr &e, const CardRange &r)
{
    std::vector<Predicate> out;
    if (r.exact()) {
        out.push_back(eq(e, lit(Value(static_cast<std::int64_t>(r.lo)))));
        return out;
    }
    if (r.lo > 1) out.push_back(e >= lit(Value(static_cast<std::int64_t>(r.lo))));
    if (r.hi) out.push_back(e <= lit(Value(static_cast<std::int64_t>(*r.hi))));
    return out;
}

std::vector<Predicate> item_preds(const Expr &set, const SetConstraints &c)
{
    std::vector<Predicate> out;
    for (const auto &v : c.must_contain) out.push_back(member(lit(v), set));
    for (const auto &v : c.must_not_contain) out.push_back(not_member(lit(v), set));
    if (c.subset_of) {
        if (c.subset_of->elements().empty()) out.push_back(always(false));
        else out.push_back(subseteq(set, lit(*c.subset_of)));
    }
    return out;
}

Predicate all_of(const std::vector<Predicate> &parts)
{
    return parts.empty() ? always(true) : conjunction(parts);
}

std::optional<std::size_t> sum_hi(const CardRange &a, const CardRange &b)
{
    if (a.hi && b.hi) return *a.hi + *b.hi;
    return std::nullopt;
}

void check_set_constraints(const SetConstraints &c, const char *what)
{
    check_range(c.card, what);
    for (const auto &m : c.must_contain) {
        if (std::find(c.must_not_contain.begin(), c.must_not_contain.end(), m) != c.must_not_contain.end())
            fail(Errc::InfeasibleConstraint, std::string(what) + " must both contain and exclude " + render(m));
        if (c.subset_of && !c.subset_of->contains(m))
            fail(Errc::InfeasibleConstraint,
                 std::string(what) + " must contain " + render(m) + " outside its allowed items");
    }
    if (c.card.hi && c.must_contain.size() > *c.card.hi)
        fail(Errc::InfeasibleConstraint, std::string(what) + " must contain more items than its cardinality allows");
}

} // namespace

QueryTree build_classic_tree(std::string source, const MiningParams &params)
{
    QueryTree t;
    t.meta.kind = TemplateKind::Classic;
    t.meta.params = params;
    int prep = add_data_prep(t, source, "1");
    int nest = t.add(op::Nest{{"tid"}}, {prep}, "2");
    int fi = add_fi(t, nest, params.threshold_mode, {"3", "4", "5", "6", "7"});
    int ren = t.add(op::Rename{{"A", "B"}}, {fi}, "8");
    int root = add_rulegen(t, ren, ren, params.threshold_mode, {"9", "10", "11", "12", "13"});
    t.set_root(root);
    return annotate_modules(std::move(t));
}

QueryTree build_mine_rule_tree(std::string source, const MiningParams &params, const MineRuleOptions &opts)
{
    check_range(opts.head, "head");
    check_range(opts.body, "body");
    if (opts.width && opts.width->op != CmpOp::Le && opts.width->op != CmpOp::Ge && opts.width->op != CmpOp::Eq &&
        opts.width->op != CmpOp::Lt && opts.width->op != CmpOp::Gt)
        fail(Errc::InfeasibleConstraint, "transaction width filter needs a scalar comparison");

    QueryTree t;
    t.meta.kind = TemplateKind::MineRule;
    t.meta.params = params;
    int prep = add_data_prep(t, source, "1");
    int below_fi = t.add(op::Nest{{"tid"}}, {prep}, "1");
    if (opts.width) {
        auto b = pass({"tid", "item"});
        b.emplace_back("count_item", card(attr("item")));
        int c = t.add(op::Project{b}, {below_fi}, "2");
        below_fi = t.add(op::Select{cmp(opts.width->op, attr("count_item"), lit(Value(opts.width->k)))}, {c}, "3");
        t.meta.width_upper = opts.width->op != CmpOp::Ge && opts.width->op != CmpOp::Gt;
    }
    int fi = add_fi(t, below_fi, params.threshold_mode, {"4"});
    int ren = t.add(op::Rename{{"A", "B"}}, {fi}, "5");
    int root = add_rulegen(t, ren, ren, params.threshold_mode, {"6"});

    auto head_preds = range_preds(card(attr("HD")), opts.head);
    auto body_preds = range_preds(card(attr("BD")), opts.body);
    if (!head_preds.empty() || !body_preds.empty()) {
        auto b = pass({"BD", "HD", "sup", "conf"});
        std::vector<Predicate> preds;
        if (!head_preds.empty()) {
            b.emplace_back("HD_count", card(attr("HD")));
            for (auto &p : range_preds(attr("HD_count"), opts.head)) preds.push_back(p);
        }
        if (!body_preds.empty()) {
            b.emplace_back("BD_count", card(attr("BD")));
            for (auto &p : range_preds(attr("BD_count"), opts.body)) preds.push_back(p);
        }
        int c = t.add(op::Project{b}, {root}, "7");
        int s = t.add(op::Select{conjunction(preds)}, {c}, "8");
        root = t.add(op::Project{pass({"BD", "HD", "sup", "conf"})}, {s}, "9");
    }
    t.set_root(root);

    t.meta.fi_constraints.size_lo = opts.body.lo;
    t.meta.fi_constraints.size_hi = sum_hi(opts.body, opts.head);
    return annotate_modules(std::move(t));
}

QueryTree build_caq_tree(std::string source, const CAQSpec &spec, const MiningParams &params)
{
    check_set_constraints(spec.body, "body");
    check_set_constraints(spec.head, "head");
    for (const auto &m : spec.body.must_contain)
        if (std::find(spec.head.must_contain.begin(), spec.head.must_contain.end(), m) != spec.head.must_contain.end())
            fail(Errc::InfeasibleConstraint, "body and head are disjoint but both must contain " + render(m));

    QueryTree t;
    t.meta.kind = TemplateKind::CAQ;
    t.meta.params = params;
    const CardRange &bc = spec.body.card;
    const CardRange &hc = spec.head.card;
    const CardRange sp{bc.lo + hc.lo, sum_hi(bc, hc)};

    int prep = add_data_prep(t, source, "1");
    int nest = t.add(op::Nest{{"tid"}}, {prep}, "1");
    auto cb = pass({"tid", "item"});
    cb.emplace_back("count_item", card(attr("item")));
    int below_fi = t.add(op::Project{cb}, {nest}, "2");
    if (spec.width_pruning && bc.lo >= 2)
        below_fi = t.add(op::Select{attr("count_item") >= lit(Value(static_cast<std::int64_t>(bc.lo)))}, {below_fi},
                         "3");
    int fi = add_fi(t, below_fi, params.threshold_mode, {"4"});
    auto nb = pass({"freq_itemset", "sup"});
    nb.emplace_back("num_of_items", card(attr("freq_itemset")));
    int sized = t.add(op::Project{nb}, {fi}, "5");

    auto a_preds = range_preds(attr("num_of_items"), bc);
    for (auto &p : item_preds(attr("freq_itemset"), spec.body)) a_preds.push_back(p);
    int sel_a = t.add(op::Select{all_of(a_preds)}, {sized}, "6a");

    auto b_preds = range_preds(attr("num_of_items"), sp);
    std::vector<Value> sp_contains = spec.body.must_contain;
    sp_contains.insert(sp_contains.end(), spec.head.must_contain.begin(), spec.head.must_contain.end());
    for (const auto &v : sp_contains) b_preds.push_back(member(lit(v), attr("freq_itemset")));
    int sel_b = t.add(op::Select{all_of(b_preds)}, {sized}, "6b");

    int pa = t.add(op::Project{pass({"freq_itemset", "sup"})}, {sel_a}, "7a");
    int pb = t.add(op::Project{pass({"freq_itemset", "sup"})}, {sel_b}, "7b");
    int ra = t.add(op::Rename{{"A"}}, {pa}, "8");
    int rb = t.add(op::Rename{{"B"}}, {pb}, "8");
    int root = add_rulegen(t, ra, rb, params.threshold_mode, {"8"});

    bool head_range_implied = hc.vacuous() || (bc.exact() && hc.exact());
    if (!head_range_implied || spec.head.has_item_constraints()) {
        auto b = pass({"BD", "HD", "sup", "conf"});
        b.emplace_back("HD_count", card(attr("HD")));
        auto preds = range_preds(attr("HD_count"), hc);
        for (auto &p : item_preds(attr("HD"), spec.head)) preds.push_back(p);
        int c = t.add(op::Project{b}, {root}, "9");
        int s = t.add(op::Select{all_of(preds)}, {c}, "9");
        root = t.add(op::Project{pass({"BD", "HD", "sup", "conf"})}, {s}, "9");
    }
    t.set_root(root);

    ItemsetConstraints &fc = t.meta.fi_constraints;
    fc.size_lo = bc.lo;
    fc.size_hi = sp.hi;
    if (spec.body.subset_of && spec.head.subset_of) fc.universe = set_union(*spec.body.subset_of, *spec.head.subset_of);
    for (const auto &v : spec.body.must_not_contain)
        if (std::find(spec.head.must_not_contain.begin(), spec.head.must_not_contain.end(), v) !=
            spec.head.must_not_contain.end())
            fc.must_not_contain.push_back(v);
    return annotate_modules(std::move(t));
}

std::string to_string(const CardRange &r)
{
    return std::to_string(r.lo) + ".." + (r.hi ? std::to_string(*r.hi) : std::string("n"));
}

} // namespace nestmine
