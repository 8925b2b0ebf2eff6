#include "nestmine/query_tree.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "nestmine/error.hpp"

namespace nestmine {

namespace {

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t expected_arity(const Op &op)
{
    return std::visit(overloaded{
                          [](const op::Source &) -> std::size_t { return 0; },
                          [](const op::Join &) -> std::size_t { return 2; },
                          [](const op::SetOp &) -> std::size_t { return 2; },
                          [](const auto &) -> std::size_t { return 1; },
                      },
                      op);
}

} // namespace

std::string_view op_name(const Op &op, bool glyphs)
{
    return std::visit(overloaded{
                          [&](const op::Source &) -> std::string_view { return glyphs ? "source" : "source"; },
                          [&](const op::Select &) -> std::string_view { return glyphs ? "σ" : "sel"; },
                          [&](const op::Project &) -> std::string_view { return glyphs ? "π" : "proj"; },
                          [&](const op::Nest &) -> std::string_view { return glyphs ? "Γ" : "nest"; },
                          [&](const op::Unnest &) -> std::string_view { return glyphs ? "η" : "unnest"; },
                          [&](const op::Grouping &) -> std::string_view { return glyphs ? "⊛" : "group"; },
                          [&](const op::Join &) -> std::string_view { return glyphs ? "⋈" : "join"; },
                          [&](const op::SetOp &s) -> std::string_view {
                              switch (s.kind) {
                              case SetOpKind::Union: return glyphs ? "∪" : "union";
                              case SetOpKind::Difference: return glyphs ? "−" : "diff";
                              case SetOpKind::Intersection: return glyphs ? "∩" : "intersect";
                              case SetOpKind::Product: return glyphs ? "×" : "product";
                              }
                              return "?";
                          },
                          [&](const op::Rename &) -> std::string_view { return glyphs ? "ρ" : "rename"; },
                          [&](const op::Fused &) -> std::string_view { return glyphs ? "℘σ" : "fused"; },
                      },
                      op);
}

std::string_view to_string(ModuleKind k)
{
    switch (k) {
    case ModuleKind::DataPreparation: return "DataPreparation";
    case ModuleKind::FrequentItemsets: return "FrequentItemsets";
    case ModuleKind::RuleGeneration: return "RuleGeneration";
    }
    return "?";
}

std::string_view to_string(TemplateKind k)
{
    switch (k) {
    case TemplateKind::Custom: return "custom";
    case TemplateKind::Classic: return "classic";
    case TemplateKind::MineRule: return "minerule";
    case TemplateKind::CAQ: return "caq";
    }
    return "?";
}

TemplateKind parse_template_kind(std::string_view text)
{
    if (text == "classic") return TemplateKind::Classic;
    if (text == "minerule") return TemplateKind::MineRule;
    if (text == "caq") return TemplateKind::CAQ;
    if (text == "custom") return TemplateKind::Custom;
    fail(Errc::InvalidValue, "unknown template '" + std::string(text) + "' (classic, minerule, caq)");
}

/*----- QueryTree ------------------------------------------------------------------------------------------------------*/

const PlanNode &QueryTree::node(int id) const
{
    for (const auto &n : nodes_)
        if (n.id == id) return n;
    fail(Errc::InvalidTree, "no node " + std::to_string(id));
}

PlanNode &QueryTree::node_mut(int id)
{
    for (auto &n : nodes_)
        if (n.id == id) return n;
    fail(Errc::InvalidTree, "no node " + std::to_string(id));
}

bool QueryTree::has_node(int id) const
{
    return std::any_of(nodes_.begin(), nodes_.end(), [&](const PlanNode &n) { return n.id == id; });
}

int QueryTree::add(Op op, std::vector<int> children, std::string step)
{
    int id = 0;
    for (const auto &n : nodes_) id = std::max(id, n.id + 1);
    nodes_.push_back({id, std::move(op), std::move(children), std::move(step)});
    root_ = id;
    return id;
}

void QueryTree::remove(int id)
{
    std::erase_if(nodes_, [&](const PlanNode &n) { return n.id == id; });
    std::erase_if(breakpoints, [&](const Breakpoint &b) { return b.child == id || b.parent == id; });
}

std::vector<int> QueryTree::parents(int id) const
{
    std::vector<int> out;
    for (const auto &n : nodes_)
        if (std::find(n.children.begin(), n.children.end(), id) != n.children.end()) out.push_back(n.id);
    return out;
}

std::vector<int> QueryTree::topo_order() const
{
    std::vector<int> out;
    std::set<int> seen;
    std::function<void(int, int)> visit = [&](int id, int depth) {
        if (depth > 10000) fail(Errc::InvalidTree, "cycle through node " + std::to_string(id));
        if (seen.count(id)) return;
        for (int c : node(id).children) visit(c, depth + 1);
        if (seen.insert(id).second) out.push_back(id);
    };
    if (!nodes_.empty()) visit(root_, 0);
    return out;
}

std::optional<int> QueryTree::node_for_step(std::string_view step) const
{
    std::optional<int> best;
    for (int id : topo_order())
        if (node(id).step == step) best = id;
    return best;
}

const ModuleSpan *QueryTree::span_of(int id) const
{
    for (const auto &s : spans)
        if (std::find(s.nodes.begin(), s.nodes.end(), id) != s.nodes.end()) return &s;
    return nullptr;
}

/*----- typing and evaluation ------------------------------------------------------------------------------------------*/

namespace {

Schema op_schema(const Op &op, const std::vector<const Schema *> &in, const SourceSchemas &sources)
{
    return std::visit(
        overloaded{
            [&](const op::Source &x) -> Schema {
                auto it = sources.find(x.relation);
                if (it == sources.end()) fail(Errc::UnboundSource, "relation '" + x.relation + "' is not loaded");
                return it->second;
            },
            [&](const op::Select &x) -> Schema {
                typecheck(x.pred, *in[0]);
                return *in[0];
            },
            [&](const op::Project &x) -> Schema { return project_schema(*in[0], x.bindings); },
            [&](const op::Nest &x) -> Schema { return nest_schema(*in[0], x.by); },
            [&](const op::Unnest &x) -> Schema { return unnest_schema(*in[0], x.attr); },
            [&](const op::Grouping &x) -> Schema { return grouping_schema(*in[0], x.by, x.aggs); },
            [&](const op::Join &x) -> Schema {
                Schema s = join_schema(*in[0], x.role_a, *in[1], x.role_b);
                typecheck(x.pred, s);
                return s;
            },
            [&](const op::SetOp &x) -> Schema {
                if (x.kind == SetOpKind::Product) return join_schema(*in[0], "", *in[1], "");
                if (*in[0] != *in[1])
                    fail(Errc::SchemaMismatch,
                         "set operator needs identical schemas, got " + in[0]->to_string() + " and " + in[1]->to_string());
                return *in[0];
            },
            [&](const op::Rename &) -> Schema { return *in[0]; },
            [&](const op::Fused &x) -> Schema {
                Schema s = project_schema(*in[0], x.powerset.bindings);
                s = unnest_schema(s, x.unnest.attr);
                s = grouping_schema(s, x.group.by, x.group.aggs);
                typecheck(x.threshold.pred, s);
                s.require(x.unnest.attr);
                return s;
            },
        },
        op);
}

} // namespace

std::map<int, Schema> infer_schemas(const QueryTree &tree, const SourceSchemas &sources)
{
    std::map<int, Schema> out;
    for (int id : tree.topo_order()) {
        const PlanNode &n = tree.node(id);
        if (n.children.size() != expected_arity(n.op))
            fail(Errc::InvalidTree, "node " + std::to_string(id) + " has " + std::to_string(n.children.size()) +
                                        " children, " + std::string(op_name(n.op, false)) + " takes " +
                                        std::to_string(expected_arity(n.op)));
        std::vector<const Schema *> in;
        for (int c : n.children) in.push_back(&out.at(c));
        out.emplace(id, op_schema(n.op, in, sources));
    }
    return out;
}

std::vector<Defect> validate_tree(const QueryTree &tree, const SourceSchemas &sources)
{
    std::vector<Defect> out;
    std::set<int> ids;
    for (const auto &n : tree.nodes()) {
        if (!ids.insert(n.id).second) out.push_back({n.id, "DuplicateId", "node id used twice"});
    }
    if (!tree.nodes().empty() && !ids.count(tree.root())) out.push_back({tree.root(), "UnknownNode", "root missing"});
    for (const auto &n : tree.nodes()) {
        for (int c : n.children)
            if (!ids.count(c)) out.push_back({n.id, "UnknownNode", "child " + std::to_string(c) + " does not exist"});
        if (n.children.size() != expected_arity(n.op))
            out.push_back({n.id, "Arity", std::string(op_name(n.op, false)) + " takes " +
                                              std::to_string(expected_arity(n.op)) + " children"});
        if (const auto *r = std::get_if<op::Rename>(&n.op); r && r->roles.empty())
            out.push_back({n.id, "Arity", "rename without roles"});
    }
    if (!out.empty()) return out;

    std::map<int, Schema> schemas;
    std::vector<int> order;
    try {
        order = tree.topo_order();
    } catch (const Error &e) {
        out.push_back({-1, std::string(to_string(e.code())), e.what()});
        return out;
    }
    for (int id : order) {
        const PlanNode &n = tree.node(id);
        std::vector<const Schema *> in;
        bool missing = false;
        for (int c : n.children) {
            auto it = schemas.find(c);
            if (it == schemas.end()) missing = true;
            else in.push_back(&it->second);
        }
        if (missing) continue;
        try {
            schemas.emplace(id, op_schema(n.op, in, sources));
        } catch (const Error &e) {
            out.push_back({id, std::string(to_string(e.code())), e.what()});
        }
    }

    for (const auto &b : tree.breakpoints) {
        if (!ids.count(b.parent) || !ids.count(b.child)) {
            out.push_back({b.parent, "BadBreakpoint", "breakpoint edge references a missing node"});
            continue;
        }
        const auto &ch = tree.node(b.parent).children;
        if (std::find(ch.begin(), ch.end(), b.child) == ch.end())
            out.push_back({b.parent, "BadBreakpoint",
                           "no edge " + std::to_string(b.child) + "->" + std::to_string(b.parent)});
    }

    std::map<int, std::size_t> owner;
    for (std::size_t s = 0; s < tree.spans.size(); ++s) {
        const auto &span = tree.spans[s];
        for (int id : span.nodes) {
            if (!ids.count(id)) {
                out.push_back({id, "UnknownNode", "module span covers a missing node"});
                continue;
            }
            if (auto [it, fresh] = owner.emplace(id, s); !fresh)
                out.push_back({id, "SpanOverlap", "node belongs to more than one module span"});
        }
        for (int id : span.nodes) {
            if (id == span.top || !ids.count(id)) continue;
            auto ps = tree.parents(id);
            bool inside = std::any_of(ps.begin(), ps.end(), [&](int p) {
                return std::find(span.nodes.begin(), span.nodes.end(), p) != span.nodes.end();
            });
            if (!inside) out.push_back({id, "SpanGap", "module span is not contiguous"});
        }
    }
    return out;
}

NestedRelation eval_op(const Op &op, const std::vector<const NestedRelation *> &in, const ParamEnv &env)
{
    return std::visit(
        overloaded{
            [&](const op::Source &x) -> NestedRelation {
                fail(Errc::UnboundSource, "source '" + x.relation + "' has no input");
            },
            [&](const op::Select &x) { return select(*in[0], x.pred, env); },
            [&](const op::Project &x) { return project(*in[0], x.bindings, env); },
            [&](const op::Nest &x) { return nest(*in[0], x.by); },
            [&](const op::Unnest &x) { return unnest(*in[0], x.attr); },
            [&](const op::Grouping &x) { return grouping(*in[0], x.by, x.aggs); },
            [&](const op::Join &x) { return join(*in[0], x.role_a, *in[1], x.role_b, x.pred, env); },
            [&](const op::SetOp &x) -> NestedRelation {
                switch (x.kind) {
                case SetOpKind::Union: return set_union(*in[0], *in[1]);
                case SetOpKind::Difference: return set_difference(*in[0], *in[1]);
                case SetOpKind::Intersection: return set_intersection(*in[0], *in[1]);
                case SetOpKind::Product: return product(*in[0], *in[1]);
                }
                fail(Errc::InvalidTree, "unknown set operator");
            },
            [&](const op::Rename &) { return *in[0]; },
            [&](const op::Fused &x) {
                NestedRelation r = project(*in[0], x.powerset.bindings, env);
                r = unnest(r, x.unnest.attr);
                r = grouping(r, x.group.by, x.group.aggs);
                r = select(r, x.threshold.pred, env);
                if (x.constraints.trivial()) return r;
                std::size_t idx = r.schema().require(x.unnest.attr);
                std::vector<Tuple> keep;
                for (const auto &t : r.tuples())
                    if (x.constraints.admits(t[idx])) keep.push_back(t);
                return NestedRelation(r.schema(), std::move(keep), NestedRelation::trusted);
            },
        },
        op);
}

std::map<int, NestedRelation> evaluate_all(const QueryTree &tree, const SourceData &data, const ParamEnv &env)
{
    std::map<int, NestedRelation> out;
    for (int id : tree.topo_order()) {
        const PlanNode &n = tree.node(id);
        if (const auto *s = std::get_if<op::Source>(&n.op)) {
            auto it = data.find(s->relation);
            if (it == data.end()) fail(Errc::UnboundSource, "relation '" + s->relation + "' is not loaded");
            out.emplace(id, it->second);
            continue;
        }
        std::vector<const NestedRelation *> in;
        for (int c : n.children) in.push_back(&out.at(c));
        out.emplace(id, eval_op(n.op, in, env));
    }
    return out;
}

NestedRelation evaluate(const QueryTree &tree, const SourceData &data, const ParamEnv &env)
{
    return evaluate_all(tree, data, env).at(tree.root());
}

std::int64_t bind_n(const QueryTree &tree, const SourceData &data)
{
    for (int id : tree.topo_order()) {
        const auto *s = std::get_if<op::Source>(&tree.node(id).op);
        if (!s) continue;
        auto it = data.find(s->relation);
        if (it == data.end()) return 0;
        const NestedRelation &r = it->second;
        auto idx = r.schema().index_of(tree.meta.tid_attr);
        if (!idx) return static_cast<std::int64_t>(r.size());
        std::set<Value> tids;
        for (const auto &t : r.tuples()) tids.insert(t[*idx]);
        return static_cast<std::int64_t>(tids.size());
    }
    return 0;
}

/*----- rendering ------------------------------------------------------------------------------------------------------*/

namespace {

std::string join_names(const std::vector<std::string> &names)
{
    std::string out;
    for (const auto &n : names) out += (out.empty() ? "" : ", ") + n;
    return out;
}

std::string describe_bindings(const std::vector<Binding> &bindings, SyntaxStyle style)
{
    std::string out;
    for (const auto &[name, e] : bindings) {
        if (!out.empty()) out += ", ";
        const auto *a = std::get_if<expr::AttrRef>(&e.node().v);
        if (a && a->name == name) out += name;
        else out += name + " = " + to_string(e, style);
    }
    return out;
}

std::string describe_aggs(const op::Grouping &g)
{
    std::string out;
    for (const auto &a : g.aggs) {
        if (!out.empty()) out += ", ";
        out += std::string(to_string(a.fn)) + " " + a.target;
        if (a.output_name() != std::string(to_string(a.fn)) + "_" + a.target) out += " as " + a.output_name();
    }
    return out;
}

std::string describe_constraints(const ItemsetConstraints &c)
{
    std::vector<std::string> parts;
    if (c.size_lo > 1 || c.size_hi)
        parts.push_back("size " + std::to_string(c.size_lo) + ".." + (c.size_hi ? std::to_string(*c.size_hi) : "n"));
    for (const auto &v : c.must_contain) parts.push_back("contains " + render(v));
    for (const auto &v : c.must_not_contain) parts.push_back("excludes " + render(v));
    if (c.universe) parts.push_back("within " + render(*c.universe));
    return join_names(parts);
}

} // namespace

std::string describe_op(const Op &op, SyntaxStyle style)
{
    std::string name(op_name(op, style.glyphs));
    return std::visit(
        overloaded{
            [&](const op::Source &x) { return name + " " + x.relation; },
            [&](const op::Select &x) { return name + "[" + to_string(x.pred, style) + "]"; },
            [&](const op::Project &x) { return name + "[" + describe_bindings(x.bindings, style) + "]"; },
            [&](const op::Nest &x) { return name + "[" + join_names(x.by) + "]"; },
            [&](const op::Unnest &x) { return name + "[" + x.attr + "]"; },
            [&](const op::Grouping &x) { return name + "[" + join_names(x.by) + "; " + describe_aggs(x) + "]"; },
            [&](const op::Join &x) {
                return name + "[" + to_string(x.pred, style) + "] as " + x.role_a + ", " + x.role_b;
            },
            [&](const op::SetOp &) { return name; },
            [&](const op::Rename &x) { return name + "[" + join_names(x.roles) + "]"; },
            [&](const op::Fused &x) {
                std::string c = describe_constraints(x.constraints);
                return name + "[" + describe_bindings(x.powerset.bindings, style) + "; " + describe_aggs(x.group) +
                       "; " + to_string(x.threshold.pred, style) + (c.empty() ? "" : "; " + c) + "]";
            },
        },
        op);
}

std::string explain_tree(const QueryTree &tree, SyntaxStyle style)
{
    std::string out;
    std::set<int> printed;
    std::function<void(int, int)> walk = [&](int id, int depth) {
        const PlanNode &n = tree.node(id);
        out += std::string(static_cast<std::size_t>(depth) * 2, ' ');
        out += "[" + std::to_string(id) + "] ";
        if (!printed.insert(id).second) {
            out += "(shared, see above)\n";
            return;
        }
        out += describe_op(n.op, style);
        if (!n.step.empty()) out += "  step " + n.step;
        if (const ModuleSpan *s = tree.span_of(id)) out += "  {" + std::string(to_string(s->kind)) + "}";
        out += "\n";
        for (int c : n.children) walk(c, depth + 1);
    };
    if (!tree.nodes().empty()) walk(tree.root(), 0);
    if (!tree.spans.empty()) {
        out += "modules:\n";
        for (const auto &s : tree.spans) {
            out += "  " + std::string(to_string(s.kind)) + ":";
            for (int id : s.nodes) out += " " + std::to_string(id);
            if (!s.params.empty()) out += "  (" + join_names(s.params) + ")";
            out += "\n";
        }
    }
    if (!tree.breakpoints.empty()) {
        out += "breakpoints:";
        for (const auto &b : tree.breakpoints)
            out += " " + std::to_string(b.child) + "->" + std::to_string(b.parent) + (b.enabled ? "" : "(off)");
        out += "\n";
    }
    return out;
}

} // namespace nestmine
