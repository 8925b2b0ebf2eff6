#include "nestmine/engine.hpp"

#include <algorithm>
#include <ctime>
#include <sstream>

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

void add_params(std::vector<std::string> &out, const std::vector<std::string> &more)
{
    for (const auto &p : more)
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
}

std::vector<FrequentItemset> itemsets_of(const NestedRelation &r, const std::string &freq, const std::string &sup)
{
    std::size_t fi = r.schema().require(freq), si = r.schema().require(sup);
    std::vector<FrequentItemset> out;
    for (const auto &t : r.tuples()) out.push_back({t[fi], t[si].as_number()});
    return out;
}

Type scalar_of(const Type &t) { return t.is_set() ? t.element() : t; }

} // namespace

std::string_view to_string(NodeState s)
{
    switch (s) {
    case NodeState::Pending: return "pending";
    case NodeState::Materialized: return "materialized";
    case NodeState::Invalidated: return "invalidated";
    case NodeState::Elided: return "elided";
    }
    return "?";
}

std::string_view to_string(PauseReport::Reason r)
{
    switch (r) {
    case PauseReport::Reason::Target: return "target";
    case PauseReport::Reason::Breakpoint: return "breakpoint";
    case PauseReport::Reason::Completion: return "completion";
    case PauseReport::Reason::Cancelled: return "cancelled";
    }
    return "?";
}

std::string to_string(const Event &e)
{
    auto secs = std::chrono::system_clock::to_time_t(e.at);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(e.at.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    std::ostringstream out;
    out << buf << '.' << std::setfill('0') << std::setw(3) << ms << "Z " << e.kind << ' '
        << (e.node < 0 ? std::string("-") : std::to_string(e.node));
    if (!e.detail.empty()) out << ' ' << e.detail;
    return out.str();
}

std::vector<std::string> op_params(const Op &op)
{
    std::vector<std::string> out;
    auto bindings = [&](const std::vector<Binding> &bs) {
        for (const auto &b : bs) add_params(out, referenced_params(b.second));
    };
    std::visit(overloaded{
                   [&](const op::Select &s) { add_params(out, referenced_params(s.pred)); },
                   [&](const op::Project &p) { bindings(p.bindings); },
                   [&](const op::Join &j) { add_params(out, referenced_params(j.pred)); },
                   [&](const op::Fused &f) {
                       bindings(f.powerset.bindings);
                       add_params(out, referenced_params(f.threshold.pred));
                   },
                   [](const auto &) {},
               },
               op);
    return out;
}

PhysicalPlan per_node_plan(const QueryTree &tree) { return enumerate_plans(tree, Catalog::standard(), 1).front(); }

Session::Session(std::string id, PhysicalPlan plan, SourceData data)
    : id_(std::move(id)), plan_(std::move(plan)), data_(std::move(data))
{
    const QueryTree &t = plan_.tree;
    SourceSchemas schemas;
    for (const auto &n : t.nodes()) {
        if (const auto *s = std::get_if<op::Source>(&n.op)) {
            auto it = data_.find(s->relation);
            if (it == data_.end()) fail(Errc::UnboundSource, "relation '" + s->relation + "' is not loaded");
            schemas.emplace(s->relation, it->second.schema());
        }
    }
    if (auto defects = validate_tree(t, schemas); !defects.empty()) {
        std::string msg;
        for (const auto &d : defects)
            msg += (msg.empty() ? "" : "; ") + std::string("node ") + std::to_string(d.node) + ": " + d.code + " " +
                   d.message;
        fail(Errc::InvalidTree, msg);
    }
    n_ = bind_n(t, data_);
    params_ = t.meta.params;
    params_.n = n_;

    std::set<int> claimed;
    for (std::size_t i = 0; i < t.spans.size(); ++i) {
        auto algo = plan_.span_algorithm(i);
        if (!algo || !is_atomic(*algo)) continue;
        const ModuleSpan &s = t.spans[i];
        Unit u{s.top, {}, s.inputs, i};
        for (int id : s.nodes)
            if (id != s.top) u.interior.push_back(id);
        claimed.insert(s.nodes.begin(), s.nodes.end());
        units_.push_back(std::move(u));
    }
    for (int id : t.topo_order()) {
        if (claimed.count(id)) continue;
        units_.push_back({id, {}, t.node(id).children, std::nullopt});
    }
    for (std::size_t i = 0; i < units_.size(); ++i) {
        unit_index_[units_[i].top] = i;
        states_[units_[i].top] = NodeState::Pending;
        for (int id : units_[i].interior) {
            unit_index_[id] = i;
            states_[id] = NodeState::Elided;
        }
    }
    check_breakpoints(t.breakpoints);
    breakpoints_ = t.breakpoints;
    log("open", -1, "n=" + std::to_string(n_));
}

void Session::check_breakpoints(const std::vector<Breakpoint> &bps) const
{
    for (const auto &b : bps) {
        if (!b.enabled) continue;
        auto c = unit_index_.find(b.child), p = unit_index_.find(b.parent);
        if (c != unit_index_.end() && p != unit_index_.end() && c->second == p->second)
            fail(Errc::InvalidTree, "breakpoint " + std::to_string(b.child) + "->" + std::to_string(b.parent) +
                                        " lies inside a span that runs as one step");
    }
}

void Session::log(std::string kind, int node, std::string detail)
{
    Observer observer;
    Event e{std::chrono::system_clock::now(), std::move(kind), node, std::move(detail)};
    {
        std::unique_lock lock(state_mutex_);
        events_.push_back(e);
        observer = observer_;
    }
    if (observer) observer(e);
}

void Session::set_observer(Observer observer)
{
    std::unique_lock lock(state_mutex_);
    observer_ = std::move(observer);
}

std::optional<int> Session::next_node() const
{
    std::shared_lock lock(state_mutex_);
    for (int top : order_for(plan_.tree.root())) {
        if (std::holds_alternative<op::Source>(plan_.tree.node(top).op)) continue;
        if (states_.at(top) != NodeState::Materialized) return top;
    }
    return std::nullopt;
}

MiningParams Session::params() const
{
    std::shared_lock lock(state_mutex_);
    return params_;
}

NodeState Session::state(int node) const
{
    std::shared_lock lock(state_mutex_);
    auto it = states_.find(node);
    if (it == states_.end()) fail(Errc::InvalidValue, "no node " + std::to_string(node) + " in the plan");
    return it->second;
}

std::map<int, NodeState> Session::states() const
{
    std::shared_lock lock(state_mutex_);
    return states_;
}

bool Session::finished() const
{
    std::shared_lock lock(state_mutex_);
    return states_.at(plan_.tree.root()) == NodeState::Materialized;
}

const Session::Unit &Session::unit_of(int node) const
{
    auto it = unit_index_.find(node);
    if (it == unit_index_.end()) fail(Errc::InvalidValue, "no node " + std::to_string(node) + " in the plan");
    return units_[it->second];
}

std::vector<int> Session::order_for(int target) const
{
    std::set<int> needed;
    std::vector<int> stack{unit_of(target).top};
    while (!stack.empty()) {
        int top = stack.back();
        stack.pop_back();
        if (!needed.insert(top).second) continue;
        for (int in : unit_of(top).inputs) stack.push_back(unit_of(in).top);
    }
    std::vector<int> out;
    for (int id : plan_.tree.topo_order())
        if (needed.count(id)) out.push_back(id);
    return out;
}

std::optional<Breakpoint> Session::pending_break(const Unit &u) const
{
    auto inside = [&](int id) {
        return id == u.top || std::find(u.interior.begin(), u.interior.end(), id) != u.interior.end();
    };
    for (const auto &b : breakpoints_)
        if (b.enabled && inside(b.parent) && !inside(b.child) && !consumed_.count({b.child, b.parent})) return b;
    return std::nullopt;
}

NestedRelation Session::compute(const Unit &u, const ParamEnv &env) const
{
    const QueryTree &t = plan_.tree;
    auto input = [&](int id) -> const NestedRelation & { return snapshots_.at(id)->relation; };
    if (!u.span) {
        const PlanNode &n = t.node(u.top);
        if (const auto *s = std::get_if<op::Source>(&n.op)) return data_.at(s->relation);
        std::vector<const NestedRelation *> in;
        for (int c : n.children) in.push_back(&input(c));
        return eval_op(n.op, in, env);
    }

    const ModuleSpan &span = t.spans[*u.span];
    Algorithm algo = *plan_.span_algorithm(*u.span);
    MiningParams mp = params_;
    mp.minsup = env.minsup;
    mp.minconf = env.minconf;
    mp.n = env.n;

    if (span.kind == ModuleKind::FrequentItemsets) {
        auto shape = fi_shape(t, span);
        if (!shape) fail(Errc::NoAlgorithmApplicable, "span at node " + std::to_string(span.top) + " lost its shape");
        const NestedRelation &rel = input(shape->input);
        TransactionSet ts = transactions_from(rel, shape->tid, shape->item);
        ts.n = env.n;
        mp.threshold_mode = shape->mode;
        auto found =
            apriori_frequent_itemsets(ts, mp, span_constraints(t, *shape, algo == Algorithm::ConstrainedApriori));
        Type item = scalar_of(rel.schema()[rel.schema().require(shape->item)].type);
        Schema s{{shape->freq, Type::set_of(item)}, {shape->sup, ScalarKind::Rational}};
        std::vector<Tuple> rows;
        for (auto &f : found) rows.push_back({std::move(f.itemset), Value(f.sup)});
        return NestedRelation(std::move(s), std::move(rows), NestedRelation::trusted);
    }

    auto shape = rulegen_shape(t, span);
    if (!shape) fail(Errc::NoAlgorithmApplicable, "span at node " + std::to_string(span.top) + " lost its shape");
    const NestedRelation &a = input(shape->input_a);
    const NestedRelation &b = input(shape->input_b);
    mp.threshold_mode = shape->mode;
    auto rules = rules_from_pairs(itemsets_of(a, shape->freq, shape->sup), itemsets_of(b, shape->freq, shape->sup), mp);
    Type set = a.schema()[a.schema().require(shape->freq)].type;
    Schema s{{"BD", set}, {"HD", set}, {"sup", ScalarKind::Rational}, {"conf", ScalarKind::Rational}};
    std::vector<Tuple> rows;
    for (auto &r : rules) rows.push_back({std::move(r.body), std::move(r.head), Value(r.sup), Value(r.conf)});
    return make_relation(std::move(s), std::move(rows));
}

PauseReport Session::run_until(std::optional<int> target, bool honor_breakpoints)
{
    if (cancelled_) fail(Errc::Cancelled, "session " + id_ + " was cancelled");
    std::unique_lock run(run_mutex_, std::try_to_lock);
    if (!run.owns_lock()) fail(Errc::SessionBusy, "session " + id_ + " is running");

    int goal = target ? unit_of(*target).top : plan_.tree.root();
    PauseReport report;
    report.reason = target ? PauseReport::Reason::Target : PauseReport::Reason::Completion;
    log("run", goal);
    for (int top : order_for(goal)) {
        if (cancelled_) {
            report.reason = PauseReport::Reason::Cancelled;
            log("cancelled", top);
            return report;
        }
        {
            std::shared_lock lock(state_mutex_);
            if (states_.at(top) == NodeState::Materialized) continue;
        }
        const Unit &u = unit_of(top);
        if (honor_breakpoints) {
            if (auto b = pending_break(u)) {
                {
                    std::unique_lock lock(state_mutex_);
                    consumed_.insert({b->child, b->parent});
                }
                report.reason = PauseReport::Reason::Breakpoint;
                report.at = b;
                log("pause", top, "breakpoint " + std::to_string(b->child) + "->" + std::to_string(b->parent));
                return report;
            }
        }
        ParamEnv env;
        {
            std::shared_lock lock(state_mutex_);
            env = ParamEnv{n_, params_.minsup, params_.minconf};
        }
        NestedRelation rel;
        try {
            rel = compute(u, env);
        } catch (const Error &e) {
            log("error", top, e.what());
            throw;
        }
        std::size_t rows = rel.size();
        {
            std::unique_lock lock(state_mutex_);
            auto snap = std::make_shared<const Snapshot>(Snapshot{top, std::move(rel), rows, ++counter_});
            snapshots_[top] = std::move(snap);
            states_[top] = NodeState::Materialized;
        }
        if (!std::holds_alternative<op::Source>(plan_.tree.node(top).op)) report.materialized.emplace_back(top, rows);
        log("materialize", top, "rows=" + std::to_string(rows));
    }
    log(std::string(to_string(report.reason)), goal);
    return report;
}

SnapshotPtr Session::inspect(int node) const
{
    std::shared_lock lock(state_mutex_);
    auto st = states_.find(node);
    if (st == states_.end()) fail(Errc::NotMaterialized, "node " + std::to_string(node) + " is not in the plan");
    if (st->second != NodeState::Materialized)
        fail(Errc::NotMaterialized, "node " + std::to_string(node) + " is " + std::string(to_string(st->second)));
    return snapshots_.at(node);
}

std::vector<SnapshotPtr> Session::snapshots() const
{
    std::shared_lock lock(state_mutex_);
    std::vector<SnapshotPtr> out;
    for (const auto &[id, s] : snapshots_)
        if (states_.at(id) == NodeState::Materialized) out.push_back(s);
    std::sort(out.begin(), out.end(), [](const SnapshotPtr &a, const SnapshotPtr &b) {
        return a->produced_at < b->produced_at;
    });
    return out;
}

SnapshotPtr Session::result() const { return inspect(plan_.tree.root()); }

InvalidationReport Session::set_param(std::string_view name, const Rational &value)
{
    std::unique_lock run(run_mutex_, std::try_to_lock);
    if (!run.owns_lock()) fail(Errc::SessionBusy, "session " + id_ + " is running");
    if (name != "minsup" && name != "minconf")
        fail(Errc::InvalidValue, "parameter '" + std::string(name) + "' cannot be edited (minsup, minconf)");
    if (value <= 0 || value > 1)
        fail(Errc::InvalidValue, std::string(name) + " must lie in (0,1], got " + to_string(value));

    const QueryTree &t = plan_.tree;
    std::vector<bool> affected(units_.size(), false);
    for (int id : t.topo_order()) {
        std::size_t ui = unit_index_.at(id);
        auto ps = op_params(t.node(id).op);
        if (std::find(ps.begin(), ps.end(), name) != ps.end()) affected[ui] = true;
    }
    for (int id : t.topo_order()) {
        std::size_t ui = unit_index_.at(id);
        if (units_[ui].top != id) continue;
        for (int in : units_[ui].inputs)
            if (affected[unit_index_.at(in)]) affected[ui] = true;
    }

    InvalidationReport report;
    {
        std::unique_lock lock(state_mutex_);
        (name == "minsup" ? params_.minsup : params_.minconf) = value;
        for (int id : t.topo_order()) {
            std::size_t ui = unit_index_.at(id);
            if (!affected[ui] || units_[ui].top != id) continue;
            if (states_[id] != NodeState::Materialized) continue;
            std::erase_if(consumed_, [&](const auto &edge) { return unit_index_.at(edge.second) == ui; });
            states_[id] = NodeState::Invalidated;
            snapshots_.erase(id);
            report.invalidated.push_back(id);
        }
    }
    std::string detail = std::string(name) + "=" + to_string(value) + " invalidated";
    for (int id : report.invalidated) detail += " " + std::to_string(id);
    log("set_param", -1, detail);
    return report;
}

void Session::set_breakpoint(int child, int parent, bool enabled)
{
    std::unique_lock run(run_mutex_, std::try_to_lock);
    if (!run.owns_lock()) fail(Errc::SessionBusy, "session " + id_ + " is running");
    const QueryTree &t = plan_.tree;
    if (!t.has_node(parent) || !t.has_node(child)) fail(Errc::InvalidValue, "breakpoint names an unknown node");
    const auto &ch = t.node(parent).children;
    if (std::find(ch.begin(), ch.end(), child) == ch.end())
        fail(Errc::InvalidValue,
             "no edge " + std::to_string(child) + "->" + std::to_string(parent) + " in the plan");
    check_breakpoints({{child, parent, enabled}});
    std::unique_lock lock(state_mutex_);
    auto it = std::find_if(breakpoints_.begin(), breakpoints_.end(),
                           [&](const Breakpoint &b) { return b.child == child && b.parent == parent; });
    if (it == breakpoints_.end()) breakpoints_.push_back({child, parent, enabled});
    else it->enabled = enabled;
    consumed_.erase({child, parent});
}

std::vector<Breakpoint> Session::breakpoints() const
{
    std::shared_lock lock(state_mutex_);
    return breakpoints_;
}

void Session::cancel()
{
    cancelled_ = true;
    log("cancel", -1);
}

std::vector<Event> Session::events() const
{
    std::shared_lock lock(state_mutex_);
    return events_;
}

std::string Session::event_log() const
{
    std::string out;
    for (const auto &e : events()) out += to_string(e) + "\n";
    return out;
}

std::vector<SnapshotPtr> trace_all(const PhysicalPlan &plan, const SourceData &data)
{
    Session s("trace", plan, data);
    s.run_to_completion();
    auto all = s.snapshots();
    std::erase_if(all, [&](const SnapshotPtr &p) {
        return std::holds_alternative<op::Source>(plan.tree.node(p->node).op);
    });
    return all;
}

NestedRelation execute(const PhysicalPlan &plan, const SourceData &data)
{
    Session s("execute", plan, data);
    s.run_to_completion();
    return s.result()->relation;
}

} // namespace nestmine
