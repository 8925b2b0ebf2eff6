#include <algorithm>
#include <set>

#include "nestmine/query_tree.hpp"

namespace nestmine {

namespace {

struct Match
{
    std::vector<int> nodes;
    std::vector<int> inputs;
    int top = 0;
};

const expr::AttrRef *as_attr(const Expr &e) { return std::get_if<expr::AttrRef>(&e.node().v); }

bool single_parent(const QueryTree &t, int id) { return t.parents(id).size() == 1; }

std::optional<ThresholdMode> threshold_mode_of(const Predicate &p, const std::string &count, const Expr &bound)
{
    const auto *c = std::get_if<pred::Compare>(&p.node().v);
    if (!c || !(c->lhs == attr(count)) || !(c->rhs == bound)) return std::nullopt;
    if (c->op == CmpOp::Gt) return ThresholdMode::Strict;
    if (c->op == CmpOp::Ge) return ThresholdMode::Inclusive;
    return std::nullopt;
}

/// Checks the (powerset project, unnest, grouping, threshold) quartet and fills names.
bool match_fi_core(const op::Project &pw, const op::Unnest &un, const op::Grouping &gr, const op::Select &th,
                   FISpanShape &shape)
{
    if (pw.bindings.size() != 2) return false;
    const auto *tid = as_attr(pw.bindings[0].second);
    if (!tid || tid->name != pw.bindings[0].first) return false;
    const auto *ps = std::get_if<expr::Powerset>(&pw.bindings[1].second.node().v);
    if (!ps) return false;
    const auto *item = as_attr(ps->arg);
    if (!item) return false;
    shape.tid = tid->name;
    shape.item = item->name;
    shape.itemset = pw.bindings[1].first;
    if (un.attr != shape.itemset) return false;
    if (gr.by != std::vector<std::string>{shape.itemset} || gr.aggs.size() != 1) return false;
    if (gr.aggs[0].fn != AggFn::Count || gr.aggs[0].target != shape.tid) return false;
    shape.count = gr.aggs[0].output_name();
    auto mode = threshold_mode_of(th.pred, shape.count, param("n") * param("minsup"));
    if (!mode) return false;
    shape.mode = *mode;
    return true;
}

std::optional<std::pair<FISpanShape, Match>> match_fi(const QueryTree &t, int top)
{
    const auto *sup = std::get_if<op::Project>(&t.node(top).op);
    if (!sup || sup->bindings.size() != 2 || t.node(top).children.size() != 1) return std::nullopt;
    FISpanShape shape;
    Match m;
    m.top = top;
    m.nodes.push_back(top);

    int below = t.node(top).children[0];
    int powerset_node = -1;
    if (const auto *f = std::get_if<op::Fused>(&t.node(below).op)) {
        if (!single_parent(t, below) || !match_fi_core(f->powerset, f->unnest, f->group, f->threshold, shape))
            return std::nullopt;
        shape.fused = below;
        m.nodes.push_back(below);
        powerset_node = below;
    } else {
        int sel = below;
        const auto *th = std::get_if<op::Select>(&t.node(sel).op);
        if (!th || !single_parent(t, sel)) return std::nullopt;
        int grp = t.node(sel).children[0];
        const auto *gr = std::get_if<op::Grouping>(&t.node(grp).op);
        if (!gr || !single_parent(t, grp)) return std::nullopt;
        int un = t.node(grp).children[0];
        const auto *u = std::get_if<op::Unnest>(&t.node(un).op);
        if (!u || !single_parent(t, un)) return std::nullopt;
        int pw = t.node(un).children[0];
        const auto *p = std::get_if<op::Project>(&t.node(pw).op);
        if (!p || !single_parent(t, pw)) return std::nullopt;
        if (!match_fi_core(*p, *u, *gr, *th, shape)) return std::nullopt;
        m.nodes.insert(m.nodes.end(), {sel, grp, un, pw});
        powerset_node = pw;
    }

    const auto *fa = as_attr(sup->bindings[0].second);
    if (!fa || fa->name != shape.itemset) return std::nullopt;
    shape.freq = sup->bindings[0].first;
    shape.sup = sup->bindings[1].first;
    if (!(sup->bindings[1].second == attr(shape.count) / param("n"))) return std::nullopt;

    int input = t.node(powerset_node).children[0];
    if (const auto *n = std::get_if<op::Nest>(&t.node(input).op);
        n && n->by == std::vector<std::string>{shape.tid} && single_parent(t, input)) {
        m.nodes.push_back(input);
        shape.input_flat = true;
        input = t.node(input).children[0];
    }
    shape.input = input;
    m.inputs = {input};
    return std::make_pair(shape, m);
}

std::optional<std::pair<RuleGenShape, Match>> match_rulegen(const QueryTree &t, int top)
{
    const PlanNode &fin = t.node(top);
    if (!std::holds_alternative<op::Project>(fin.op) || fin.children.size() != 1) return std::nullopt;
    int sel = fin.children[0];
    const auto *s = std::get_if<op::Select>(&t.node(sel).op);
    if (!s || !single_parent(t, sel)) return std::nullopt;
    int conf = t.node(sel).children[0];
    if (!std::holds_alternative<op::Project>(t.node(conf).op) || !single_parent(t, conf)) return std::nullopt;
    int pairs = t.node(conf).children[0];
    const auto *pp = std::get_if<op::Project>(&t.node(pairs).op);
    if (!pp || !single_parent(t, pairs) || pp->bindings.size() != 4) return std::nullopt;
    int join = t.node(pairs).children[0];
    const auto *j = std::get_if<op::Join>(&t.node(join).op);
    if (!j || !single_parent(t, join)) return std::nullopt;

    const auto *bd = as_attr(pp->bindings[0].second);
    const auto *bs = as_attr(pp->bindings[1].second);
    if (!bd || !bs) return std::nullopt;
    std::string pa = j->role_a + ".";
    if (!bd->name.starts_with(pa) || !bs->name.starts_with(pa)) return std::nullopt;
    std::string f = bd->name.substr(pa.size());
    std::string sp = bs->name.substr(pa.size());
    std::string a_f = j->role_a + "." + f, b_f = j->role_b + "." + f;

    if (!(j->pred == subset(attr(a_f), attr(b_f)))) return std::nullopt;
    op::Project want_pairs{{{"BD", attr(a_f)},
                            {"BD_sup", attr(j->role_a + "." + sp)},
                            {"sp", attr(b_f)},
                            {"sp_sup", attr(j->role_b + "." + sp)}}};
    if (!(*pp == want_pairs)) return std::nullopt;
    op::Project want_conf{{{"BD", attr("BD")},
                           {"BD_sup", attr("BD_sup")},
                           {"sp", attr("sp")},
                           {"sp_sup", attr("sp_sup")},
                           {"conf", attr("sp_sup") / attr("BD_sup")}}};
    if (!(std::get<op::Project>(t.node(conf).op) == want_conf)) return std::nullopt;
    auto mode = threshold_mode_of(s->pred, "conf", param("minconf"));
    if (!mode) return std::nullopt;
    op::Project want_final{{{"BD", attr("BD")},
                            {"HD", attr("sp") - attr("BD")},
                            {"sup", attr("sp_sup")},
                            {"conf", attr("conf")}}};
    if (!(std::get<op::Project>(fin.op) == want_final)) return std::nullopt;

    Match m;
    m.top = top;
    m.nodes = {top, sel, conf, pairs, join};
    RuleGenShape shape;
    shape.mode = *mode;
    shape.freq = f;
    shape.sup = sp;
    std::vector<int> side_inputs;
    for (int c : t.node(join).children) {
        int input = c;
        if (std::holds_alternative<op::Rename>(t.node(c).op)) {
            auto ps = t.parents(c);
            if (ps == std::vector<int>{join}) {
                if (std::find(m.nodes.begin(), m.nodes.end(), c) == m.nodes.end()) m.nodes.push_back(c);
                input = t.node(c).children[0];
            }
        }
        side_inputs.push_back(input);
    }
    shape.input_a = side_inputs[0];
    shape.input_b = side_inputs[1];
    for (int i : side_inputs)
        if (std::find(m.inputs.begin(), m.inputs.end(), i) == m.inputs.end()) m.inputs.push_back(i);
    return std::make_pair(shape, m);
}

ModuleSpan to_span(ModuleKind kind, Match m, std::vector<std::string> params)
{
    std::sort(m.nodes.begin(), m.nodes.end());
    return {kind, std::move(m.nodes), std::move(params), m.top, std::move(m.inputs)};
}

} // namespace

std::optional<FISpanShape> fi_shape(const QueryTree &tree, const ModuleSpan &span)
{
    if (span.kind != ModuleKind::FrequentItemsets) return std::nullopt;
    auto m = match_fi(tree, span.top);
    if (!m) return std::nullopt;
    auto nodes = m->second.nodes;
    std::sort(nodes.begin(), nodes.end());
    if (nodes != span.nodes) return std::nullopt;
    return m->first;
}

std::optional<RuleGenShape> rulegen_shape(const QueryTree &tree, const ModuleSpan &span)
{
    if (span.kind != ModuleKind::RuleGeneration) return std::nullopt;
    auto m = match_rulegen(tree, span.top);
    if (!m) return std::nullopt;
    auto nodes = m->second.nodes;
    std::sort(nodes.begin(), nodes.end());
    if (nodes != span.nodes) return std::nullopt;
    return m->first;
}

QueryTree annotate_modules(QueryTree tree)
{
    tree.spans.clear();
    if (tree.nodes().empty()) return tree;
    std::set<int> claimed;
    std::vector<ModuleSpan> fi, rg;
    const auto order = tree.topo_order();

    auto free = [&](const Match &m) {
        return std::none_of(m.nodes.begin(), m.nodes.end(), [&](int id) { return claimed.count(id) > 0; });
    };
    for (int id : order) {
        if (auto m = match_fi(tree, id); m && free(m->second)) {
            claimed.insert(m->second.nodes.begin(), m->second.nodes.end());
            fi.push_back(to_span(ModuleKind::FrequentItemsets, m->second, {"minsup"}));
        }
    }
    for (int id : order) {
        if (auto m = match_rulegen(tree, id); m && free(m->second)) {
            claimed.insert(m->second.nodes.begin(), m->second.nodes.end());
            rg.push_back(to_span(ModuleKind::RuleGeneration, m->second, {"minconf"}));
        }
    }

    std::vector<ModuleSpan> prep;
    for (int id : order) {
        if (!std::holds_alternative<op::Source>(tree.node(id).op)) continue;
        for (int p : tree.parents(id)) {
            if (claimed.count(p) || !std::holds_alternative<op::Project>(tree.node(p).op)) continue;
            std::vector<int> chain{p};
            int cur = p;
            for (;;) {
                auto ps = tree.parents(cur);
                if (ps.size() != 1 || claimed.count(ps[0])) break;
                const Op &o = tree.node(ps[0]).op;
                if (!std::holds_alternative<op::Select>(o) && !std::holds_alternative<op::Project>(o) &&
                    !std::holds_alternative<op::Nest>(o))
                    break;
                cur = ps[0];
                chain.push_back(cur);
            }
            bool feeds_fi = std::any_of(fi.begin(), fi.end(), [&](const ModuleSpan &s) {
                return std::find(s.inputs.begin(), s.inputs.end(), cur) != s.inputs.end();
            });
            if (!feeds_fi) {
                chain.resize(1);
                auto ps = tree.parents(p);
                if (ps.size() == 1 && !claimed.count(ps[0]) && std::holds_alternative<op::Nest>(tree.node(ps[0]).op))
                    chain.push_back(ps[0]);
            }
            claimed.insert(chain.begin(), chain.end());
            Match m{chain, {id}, chain.back()};
            prep.push_back(to_span(ModuleKind::DataPreparation, m, {}));
        }
    }

    for (auto *group : {&prep, &fi, &rg})
        for (auto &s : *group) tree.spans.push_back(std::move(s));
    return tree;
}

} // namespace nestmine
