#include <algorithm>
#include <set>

#include "nestmine/error.hpp"
#include "nestmine/optimizer.hpp"

namespace nestmine {

namespace {

using Applied = std::optional<std::pair<QueryTree, std::vector<int>>>;

std::vector<Predicate> conjuncts(const Predicate &p)
{
    if (const auto *a = std::get_if<pred::And>(&p.node().v)) {
        auto out = conjuncts(a->lhs);
        auto rhs = conjuncts(a->rhs);
        out.insert(out.end(), rhs.begin(), rhs.end());
        return out;
    }
    if (const auto *c = std::get_if<pred::Const>(&p.node().v); c && c->value) return {};
    return {p};
}

/// Points every reference to `from` at `to`, except inside `to` itself.
void redirect(QueryTree &t, int from, int to)
{
    for (const auto &n : t.nodes()) {
        if (n.id == to) continue;
        auto &ch = t.node_mut(n.id).children;
        std::replace(ch.begin(), ch.end(), from, to);
    }
    if (t.root() == from) t.set_root(to);
}

int add_keep_root(QueryTree &t, Op op, std::vector<int> children, std::string step)
{
    int root = t.root();
    int id = t.add(std::move(op), std::move(children), std::move(step));
    t.set_root(root);
    return id;
}

bool pass_through(const op::Project &p, const std::string &name)
{
    return std::any_of(p.bindings.begin(), p.bindings.end(), [&](const Binding &b) {
        const auto *a = std::get_if<expr::AttrRef>(&b.second.node().v);
        return b.first == name && a && a->name == name;
    });
}

Applied select_fusion(const QueryTree &in)
{
    for (int id : in.topo_order()) {
        const auto *outer = std::get_if<op::Select>(&in.node(id).op);
        if (!outer) continue;
        int c = in.node(id).children[0];
        const auto *inner = std::get_if<op::Select>(&in.node(c).op);
        if (!inner || in.parents(c) != std::vector<int>{id}) continue;
        QueryTree t = in;
        auto &n = t.node_mut(id);
        n.op = op::Select{inner->pred && outer->pred};
        n.children = in.node(c).children;
        t.remove(c);
        return std::make_pair(std::move(t), std::vector<int>{id, c});
    }
    return std::nullopt;
}

Applied select_below_project(const QueryTree &in)
{
    for (int id : in.topo_order()) {
        const auto *s = std::get_if<op::Select>(&in.node(id).op);
        if (!s) continue;
        int c = in.node(id).children[0];
        const auto *p = std::get_if<op::Project>(&in.node(c).op);
        if (!p || in.parents(c) != std::vector<int>{id}) continue;
        auto names = referenced_attributes(s->pred);
        if (!std::all_of(names.begin(), names.end(), [&](const std::string &a) { return pass_through(*p, a); }))
            continue;
        QueryTree t = in;
        std::swap(t.node_mut(id).op, t.node_mut(c).op);
        std::swap(t.node_mut(id).step, t.node_mut(c).step);
        return std::make_pair(std::move(t), std::vector<int>{id, c});
    }
    return std::nullopt;
}

Applied select_below_join(const QueryTree &in)
{
    for (int id : in.topo_order()) {
        const auto *s = std::get_if<op::Select>(&in.node(id).op);
        if (!s) continue;
        int j = in.node(id).children[0];
        const auto *join = std::get_if<op::Join>(&in.node(j).op);
        if (!join || in.parents(j) != std::vector<int>{id}) continue;
        for (std::size_t side : {0u, 1u}) {
            std::string prefix = (side == 0 ? join->role_a : join->role_b) + ".";
            std::vector<Predicate> local, rest;
            for (const auto &p : conjuncts(s->pred)) {
                auto names = referenced_attributes(p);
                bool one_side = !names.empty() && std::all_of(names.begin(), names.end(), [&](const std::string &n) {
                                    return n.starts_with(prefix);
                                });
                (one_side ? local : rest).push_back(p);
            }
            if (local.empty()) continue;
            std::vector<std::pair<std::string, Expr>> strip;
            for (const auto &p : local)
                for (const auto &n : referenced_attributes(p)) strip.emplace_back(n, attr(n.substr(prefix.size())));

            QueryTree t = in;
            int input = in.node(j).children[side];
            int pushed = add_keep_root(t, op::Select{substitute(conjunction(local), strip)}, {input}, in.node(id).step);
            t.node_mut(j).children[side] = pushed;
            if (rest.empty()) {
                redirect(t, id, j);
                t.remove(id);
            } else {
                t.node_mut(id).op = op::Select{conjunction(rest)};
            }
            return std::make_pair(std::move(t), std::vector<int>{id, j, pushed});
        }
    }
    return std::nullopt;
}

Applied fuse_powerset_prune(const QueryTree &in)
{
    for (const auto &span : in.spans) {
        auto shape = fi_shape(in, span);
        if (!shape || shape->fused) continue;
        int sel = in.node(span.top).children[0];
        int grp = in.node(sel).children[0];
        int un = in.node(grp).children[0];
        int pw = in.node(un).children[0];
        QueryTree t = in;
        op::Fused f{std::get<op::Project>(in.node(pw).op), std::get<op::Unnest>(in.node(un).op),
                    std::get<op::Grouping>(in.node(grp).op), std::get<op::Select>(in.node(sel).op), {}};
        auto &n = t.node_mut(sel);
        n.op = std::move(f);
        n.children = in.node(pw).children;
        const std::string &lo = in.node(pw).step, &hi = in.node(sel).step;
        n.step = lo == hi ? lo : lo + "-" + hi;
        for (int gone : {grp, un, pw}) t.remove(gone);
        return std::make_pair(std::move(t), std::vector<int>{pw, un, grp, sel});
    }
    return std::nullopt;
}

std::optional<std::int64_t> int_literal(const Expr &e)
{
    const auto *c = std::get_if<expr::Const>(&e.node().v);
    if (!c || c->value.kind() != ValueKind::Int) return std::nullopt;
    return c->value.as_int();
}

/// Whether some conjunct bounds transaction width from below by at least `lo`.
bool width_floor(const Predicate &p, const std::string &item, std::size_t lo)
{
    for (const auto &part : conjuncts(p)) {
        const auto *c = std::get_if<pred::Compare>(&part.node().v);
        if (!c) continue;
        if (!(c->lhs == attr("count_item")) && !(c->lhs == card(attr(item)))) continue;
        auto k = int_literal(c->rhs);
        if (!k) continue;
        auto need = static_cast<std::int64_t>(lo);
        if ((c->op == CmpOp::Ge || c->op == CmpOp::Eq) && *k >= need) return true;
        if (c->op == CmpOp::Gt && *k >= need - 1) return true;
    }
    return false;
}

bool computes_count_item(const QueryTree &t, int id)
{
    for (;;) {
        const Op &o = t.node(id).op;
        if (const auto *p = std::get_if<op::Project>(&o))
            return std::any_of(p->bindings.begin(), p->bindings.end(),
                               [](const Binding &b) { return b.first == "count_item"; });
        if (!std::holds_alternative<op::Select>(o)) return false;
        id = t.node(id).children[0];
    }
}

Applied push_cardinality_constraint(const QueryTree &in)
{
    const ItemsetConstraints &fc = in.meta.fi_constraints;
    for (const auto &span : in.spans) {
        auto shape = fi_shape(in, span);
        if (!shape) continue;

        if (shape->fused) {
            auto c = std::get<op::Fused>(in.node(*shape->fused).op).constraints;
            auto before = c;
            c.size_lo = std::max(c.size_lo, fc.size_lo);
            if (fc.size_hi) c.size_hi = c.size_hi ? std::min(*c.size_hi, *fc.size_hi) : *fc.size_hi;
            if (!(c == before)) {
                QueryTree t = in;
                std::get<op::Fused>(t.node_mut(*shape->fused).op).constraints = c;
                return std::make_pair(std::move(t), std::vector<int>{*shape->fused});
            }
        }
        if (fc.size_lo < 2) continue;

        // the edge (below, above) where the filter goes
        int above = shape->fused ? *shape->fused : -1;
        if (above < 0) {
            above = in.node(span.top).children[0];
            for (int i = 0; i < 3; ++i) above = in.node(above).children[0];
        }
        int below = in.node(above).children[0];

        bool present = false;
        for (int cur = below;;) {
            const PlanNode &n = in.node(cur);
            if (const auto *s = std::get_if<op::Select>(&n.op); s && width_floor(s->pred, shape->item, fc.size_lo)) {
                present = true;
                break;
            }
            if (n.children.size() != 1 || std::holds_alternative<op::Source>(n.op)) break;
            if (!std::holds_alternative<op::Select>(n.op) && !std::holds_alternative<op::Project>(n.op)) break;
            cur = n.children[0];
        }
        if (present) continue;

        Expr width = computes_count_item(in, below) ? attr("count_item") : card(attr(shape->item));
        QueryTree t = in;
        int s = add_keep_root(t, op::Select{width >= lit(Value(static_cast<std::int64_t>(fc.size_lo)))}, {below}, "3");
        t.node_mut(above).children[0] = s;
        return std::make_pair(std::move(t), std::vector<int>{below, s, above});
    }
    return std::nullopt;
}

Applied push_item_constraint(const QueryTree &in)
{
    if (in.meta.width_upper) return std::nullopt;
    const ItemsetConstraints &fc = in.meta.fi_constraints;
    bool any_item = fc.universe || !fc.must_not_contain.empty() || !fc.must_contain.empty();
    if (!any_item) return std::nullopt;

    bool fused_seen = false;
    for (const auto &span : in.spans) {
        auto shape = fi_shape(in, span);
        if (!shape || !shape->fused) continue;
        fused_seen = true;
        auto c = std::get<op::Fused>(in.node(*shape->fused).op).constraints;
        auto before = c;
        if (fc.universe) c.universe = c.universe ? set_intersection(*c.universe, *fc.universe) : *fc.universe;
        for (const auto &v : fc.must_not_contain)
            if (std::find(c.must_not_contain.begin(), c.must_not_contain.end(), v) == c.must_not_contain.end())
                c.must_not_contain.push_back(v);
        for (const auto &v : fc.must_contain)
            if (std::find(c.must_contain.begin(), c.must_contain.end(), v) == c.must_contain.end())
                c.must_contain.push_back(v);
        if (!(c == before)) {
            QueryTree t = in;
            std::get<op::Fused>(t.node_mut(*shape->fused).op).constraints = c;
            return std::make_pair(std::move(t), std::vector<int>{*shape->fused});
        }
    }
    if (fused_seen || (!fc.universe && fc.must_not_contain.empty())) return std::nullopt;

    const std::string &item = in.meta.item_attr;
    std::vector<Predicate> parts;
    if (fc.universe) parts.push_back(member(attr(item), lit(*fc.universe)));
    if (!fc.must_not_contain.empty()) parts.push_back(not_member(attr(item), lit(Value::set(fc.must_not_contain))));
    Predicate filter = conjunction(parts);

    for (int id : in.topo_order()) {
        const PlanNode &n = in.node(id);
        const auto *p = std::get_if<op::Project>(&n.op);
        if (!p || n.children.size() != 1 || !std::holds_alternative<op::Source>(in.node(n.children[0]).op)) continue;
        if (!pass_through(*p, item)) continue;
        auto ps = in.parents(id);
        bool done = std::any_of(ps.begin(), ps.end(), [&](int q) {
            const auto *s = std::get_if<op::Select>(&in.node(q).op);
            return s && s->pred == filter;
        });
        if (done || ps.empty()) continue;
        QueryTree t = in;
        int s = add_keep_root(t, op::Select{filter}, {id}, n.step);
        for (int q : ps) std::replace(t.node_mut(q).children.begin(), t.node_mut(q).children.end(), id, s);
        return std::make_pair(std::move(t), std::vector<int>{id, s});
    }
    return std::nullopt;
}

std::vector<RewriteRule> build_catalog()
{
    return {
        {"select-fusion", "a conjunction filters exactly the rows both selections keep", true, select_fusion},
        {"select-below-project", "the predicate reads only attributes the projection copies", true,
         select_below_project},
        {"select-below-join", "a conjunct over one side's attributes rejects the same pairs before pairing", true,
         select_below_join},
        {"fuse-powerset-prune", "the fused node evaluates the same four operators in sequence", false,
         fuse_powerset_prune},
        {"push-cardinality-constraint",
         "transactions narrower than the smallest observable itemset support none of them; n stays bound", true,
         push_cardinality_constraint},
        {"push-item-constraint", "items no observable itemset may contain cannot change observable supports", true,
         push_item_constraint},
        {"group-by-pullup", "identity", false, [](const QueryTree &) -> Applied { return std::nullopt; }},
    };
}

} // namespace

const std::vector<RewriteRule> &rule_catalog()
{
    static const std::vector<RewriteRule> catalog = build_catalog();
    return catalog;
}

std::vector<RewriteRule> default_rules()
{
    std::vector<RewriteRule> out;
    for (const auto &r : rule_catalog())
        if (r.enabled_by_default) out.push_back(r);
    return out;
}

std::vector<RewriteRule> rules_named(const std::vector<std::string> &names)
{
    std::vector<RewriteRule> out;
    for (const auto &n : names) {
        auto it = std::find_if(rule_catalog().begin(), rule_catalog().end(),
                               [&](const RewriteRule &r) { return r.name == n; });
        if (it == rule_catalog().end()) fail(Errc::InvalidValue, "unknown rewrite rule '" + n + "'");
        out.push_back(*it);
    }
    return out;
}

RewriteResult apply_rewrites(const QueryTree &tree, const std::vector<RewriteRule> &rules)
{
    RewriteResult out{tree, {}};
    std::size_t steps = 0;
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto &rule : rules) {
            while (auto r = rule.apply(out.tree)) {
                QueryTree next = annotate_modules(std::move(r->first));
                std::erase_if(next.breakpoints, [&](const Breakpoint &b) {
                    if (!next.has_node(b.child) || !next.has_node(b.parent)) return true;
                    const auto &ch = next.node(b.parent).children;
                    return std::find(ch.begin(), ch.end(), b.child) == ch.end();
                });
                out.tree = std::move(next);
                out.trace.push_back({rule.name, std::move(r->second)});
                changed = true;
                if (++steps > 10000) fail(Errc::InvalidTree, "rewrites did not reach a fixed point");
            }
        }
    }
    return out;
}

} // namespace nestmine
