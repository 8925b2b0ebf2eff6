#include "nestmine/optimizer.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "nestmine/error.hpp"

namespace nestmine {

namespace {

constexpr std::pair<Algorithm, std::string_view> kAlgorithmNames[] = {
    {Algorithm::Scan, "Scan"},
    {Algorithm::ScanFilter, "ScanFilter"},
    {Algorithm::HashGroup, "HashGroup"},
    {Algorithm::NestedLoopJoin, "NestedLoopJoin"},
    {Algorithm::NaivePowerset, "NaivePowerset"},
    {Algorithm::Apriori, "Apriori"},
    {Algorithm::ConstrainedApriori, "ConstrainedApriori"},
    {Algorithm::OperatorPipeline, "OperatorPipeline"},
    {Algorithm::RuleGen, "RuleGen"},
};

Cost to_cost(const Rational &r) { return Cost(r.numerator()) / Cost(r.denominator()); }

Cost pow2(std::int64_t k)
{
    boost::multiprecision::cpp_int v = 1;
    v <<= static_cast<unsigned>(std::max<std::int64_t>(k, 0));
    return Cost(v);
}

Cost binomial(std::int64_t m, std::int64_t k)
{
    if (k < 0 || k > m) return 0;
    boost::multiprecision::cpp_int v = 1;
    for (std::int64_t i = 1; i <= k; ++i) v = v * (m - k + i) / i;
    return Cost(v);
}

/// Largest k with (w/m)^k > minsup; w when every itemset of a full-width transaction qualifies.
std::int64_t frequent_level(const Stats &s, const Rational &minsup)
{
    if (s.m <= 0 || s.w <= 0) return 0;
    if (s.w >= s.m) return s.w;
    Cost ratio = Cost(s.w) / Cost(s.m), p = 1, ms = to_cost(minsup);
    std::int64_t k = 0;
    while (k < s.w) {
        p *= ratio;
        if (!(p > ms)) break;
        ++k;
    }
    return k;
}

/// Candidates counted per level, bounded by the subsets one transaction can hold, plus a scan for generation.
Cost level_sum(std::int64_t m, std::int64_t w, std::int64_t top, std::int64_t n)
{
    Cost total = Cost(n) * Cost(m);
    for (std::int64_t k = 1; k <= top; ++k) total += std::min(binomial(m, k), binomial(w, k)) * Cost(n);
    return total;
}

/// Estimated frequent-itemset count.
Cost frequent_estimate(const Stats &s, const Rational &minsup)
{
    Cost total = 0;
    for (std::int64_t k = 1; k <= std::min(s.w, frequent_level(s, minsup)); ++k) total += binomial(s.m, k);
    return total;
}

std::int64_t admitted_items(const Stats &s, const ItemsetConstraints &c)
{
    if (s.item_counts.empty()) {
        std::int64_t m = s.m - static_cast<std::int64_t>(c.must_not_contain.size());
        if (c.universe) m = std::min<std::int64_t>(m, static_cast<std::int64_t>(c.universe->size()));
        return std::max<std::int64_t>(m, 0);
    }
    std::int64_t m = 0;
    for (const auto &[item, count] : s.item_counts)
        if (c.admits_item(item)) ++m;
    return m;
}

class RowEstimator
{
  public:
    RowEstimator(const QueryTree &t, const Stats &s) : t_(t), s_(s) {}

    Cost rows(int id)
    {
        if (auto it = memo_.find(id); it != memo_.end()) return it->second;
        Cost r = compute(id);
        memo_.emplace(id, r);
        return r;
    }

  private:
    Cost flat_rows() const
    {
        std::int64_t total = 0;
        for (const auto &[item, count] : s_.item_counts) total += count;
        return total > 0 ? Cost(total) : Cost(s_.n * s_.w);
    }

    Cost compute(int id)
    {
        const PlanNode &n = t_.node(id);
        auto in = [&](std::size_t i) { return rows(n.children[i]); };
        if (const auto *span = t_.span_of(id); span && span->kind == ModuleKind::FrequentItemsets && span->top == id)
            return frequent_estimate(s_, t_.meta.params.minsup);
        return std::visit(
            [&](const auto &o) -> Cost {
                using T = std::decay_t<decltype(o)>;
                if constexpr (std::is_same_v<T, op::Source>) return flat_rows();
                else if constexpr (std::is_same_v<T, op::Nest>) return std::min(in(0), Cost(s_.n));
                else if constexpr (std::is_same_v<T, op::Unnest>) {
                    const auto *p = std::get_if<op::Project>(&t_.node(n.children[0]).op);
                    bool powerset_input = p && std::any_of(p->bindings.begin(), p->bindings.end(), [&](const Binding &b) {
                                              return b.first == o.attr &&
                                                     std::holds_alternative<expr::Powerset>(b.second.node().v);
                                          });
                    return in(0) * (powerset_input ? pow2(s_.w) - 1 : Cost(std::max<std::int64_t>(s_.w, 1)));
                } else if constexpr (std::is_same_v<T, op::Fused>)
                    return frequent_estimate(s_, t_.meta.params.minsup);
                else if constexpr (std::is_same_v<T, op::Join>) return in(0) * in(1);
                else if constexpr (std::is_same_v<T, op::SetOp>) {
                    switch (o.kind) {
                    case SetOpKind::Union: return in(0) + in(1);
                    case SetOpKind::Difference: return in(0);
                    case SetOpKind::Intersection: return std::min(in(0), in(1));
                    case SetOpKind::Product: return in(0) * in(1);
                    }
                    return 0;
                } else return in(0);
            },
            n.op);
    }

    const QueryTree &t_;
    const Stats &s_;
    std::map<int, Cost> memo_;
};

Cost node_cost(const QueryTree &t, int id, RowEstimator &est)
{
    const PlanNode &n = t.node(id);
    if (std::holds_alternative<op::Source>(n.op)) return est.rows(id);
    if (n.children.size() == 2) return est.rows(n.children[0]) * est.rows(n.children[1]);
    if (std::holds_alternative<op::Fused>(n.op)) return est.rows(n.children[0]);
    return n.children.empty() ? Cost(0) : est.rows(n.children[0]);
}

std::string cost_text(const Cost &c)
{
    auto num = boost::multiprecision::numerator(c);
    auto den = boost::multiprecision::denominator(c);
    return den == 1 ? num.str() : num.str() + "/" + den.str();
}

} // namespace

std::string_view to_string(Algorithm a)
{
    for (const auto &[k, v] : kAlgorithmNames)
        if (k == a) return v;
    return "?";
}

Algorithm parse_algorithm(std::string_view text)
{
    for (const auto &[k, v] : kAlgorithmNames)
        if (v == text) return k;
    fail(Errc::InvalidValue, "unknown algorithm '" + std::string(text) + "'");
}

bool is_atomic(Algorithm a)
{
    return a == Algorithm::Apriori || a == Algorithm::ConstrainedApriori || a == Algorithm::RuleGen;
}

Catalog Catalog::standard()
{
    Catalog c;
    c.entries = {
        {"source", {Algorithm::Scan}},
        {"sel", {Algorithm::ScanFilter}},
        {"proj", {Algorithm::ScanFilter}},
        {"nest", {Algorithm::HashGroup}},
        {"unnest", {Algorithm::ScanFilter}},
        {"group", {Algorithm::HashGroup}},
        {"join", {Algorithm::NestedLoopJoin}},
        {"union", {Algorithm::HashGroup}},
        {"diff", {Algorithm::HashGroup}},
        {"intersect", {Algorithm::HashGroup}},
        {"product", {Algorithm::NestedLoopJoin}},
        {"rename", {Algorithm::Scan}},
        {"fused", {Algorithm::NaivePowerset}},
        {std::string(to_string(ModuleKind::FrequentItemsets)),
         {Algorithm::NaivePowerset, Algorithm::Apriori, Algorithm::ConstrainedApriori}},
        {std::string(to_string(ModuleKind::RuleGeneration)), {Algorithm::OperatorPipeline, Algorithm::RuleGen}},
    };
    return c;
}

std::optional<Algorithm> PhysicalPlan::span_algorithm(std::size_t span) const
{
    for (const auto &c : choices)
        if (c.target == AlgoChoice::Target::Span && c.id == static_cast<int>(span)) return c.algorithm;
    return std::nullopt;
}

std::optional<Algorithm> PhysicalPlan::node_algorithm(int id) const
{
    for (const auto &c : choices)
        if (c.target == AlgoChoice::Target::Node && c.id == id) return c.algorithm;
    return std::nullopt;
}

std::string PhysicalPlan::signature() const
{
    std::string out;
    auto add = [&](const std::string &s) {
        if (!out.empty()) out += ' ';
        out += s;
    };
    for (const auto &c : choices)
        if (c.target == AlgoChoice::Target::Span)
            add(std::string(to_string(tree.spans.at(c.id).kind)) + "=" + std::string(to_string(c.algorithm)));
    if (out.empty())
        for (const auto &c : choices) add(std::to_string(c.id) + "=" + std::string(to_string(c.algorithm)));
    return out;
}

Stats stats_from(const TransactionSet &ts)
{
    Stats s;
    s.n = ts.n;
    for (const auto &[tid, items] : ts.transactions) {
        s.w = std::max<std::int64_t>(s.w, static_cast<std::int64_t>(items.size()));
        for (const auto &e : items.elements()) ++s.item_counts[e];
    }
    s.m = static_cast<std::int64_t>(s.item_counts.size());
    return s;
}

ItemsetConstraints span_constraints(const QueryTree &tree, const FISpanShape &shape, bool include_tree_constraints)
{
    ItemsetConstraints c;
    if (shape.fused) c = std::get<op::Fused>(tree.node(*shape.fused).op).constraints;
    if (!include_tree_constraints) return c;
    const ItemsetConstraints &t = tree.meta.fi_constraints;
    c.size_lo = std::max(c.size_lo, t.size_lo);
    if (t.size_hi) c.size_hi = c.size_hi ? std::min(*c.size_hi, *t.size_hi) : *t.size_hi;
    for (const auto &v : t.must_contain)
        if (std::find(c.must_contain.begin(), c.must_contain.end(), v) == c.must_contain.end())
            c.must_contain.push_back(v);
    for (const auto &v : t.must_not_contain)
        if (std::find(c.must_not_contain.begin(), c.must_not_contain.end(), v) == c.must_not_contain.end())
            c.must_not_contain.push_back(v);
    if (t.universe) c.universe = c.universe ? set_intersection(*c.universe, *t.universe) : *t.universe;
    return c;
}

std::vector<PhysicalPlan> enumerate_plans(const QueryTree &tree, const Catalog &catalog, std::size_t max_plans)
{
    if (max_plans == 0) fail(Errc::InvalidValue, "max_plans must be at least 1");
    auto lookup = [&](std::string_view key, const std::string &what) {
        auto it = catalog.entries.find(key);
        if (it == catalog.entries.end() || it->second.empty())
            fail(Errc::NoAlgorithmApplicable, "no algorithm for " + what);
        return it->second;
    };

    std::vector<std::pair<AlgoChoice, std::vector<Algorithm>>> slots;
    std::set<int> in_span;
    for (std::size_t i = 0; i < tree.spans.size(); ++i) {
        const ModuleSpan &s = tree.spans[i];
        if (s.kind == ModuleKind::DataPreparation) continue;
        auto options = lookup(to_string(s.kind), std::string(to_string(s.kind)) + " span at node " +
                                                     std::to_string(s.top));
        bool shaped = s.kind == ModuleKind::FrequentItemsets ? fi_shape(tree, s).has_value()
                                                             : rulegen_shape(tree, s).has_value();
        if (!shaped) std::erase_if(options, is_atomic);
        if (options.empty())
            fail(Errc::NoAlgorithmApplicable, "no per-node algorithm for span at node " + std::to_string(s.top));
        slots.push_back({{AlgoChoice::Target::Span, static_cast<int>(i), options.front()}, options});
        in_span.insert(s.nodes.begin(), s.nodes.end());
    }
    for (int id : tree.topo_order()) {
        if (in_span.count(id)) continue;
        std::string key(op_name(tree.node(id).op, false));
        slots.push_back({{AlgoChoice::Target::Node, id, Algorithm::Scan},
                         lookup(key, "node " + std::to_string(id) + " (" + key + ")")});
    }

    std::vector<PhysicalPlan> plans;
    std::vector<std::size_t> pick(slots.size(), 0);
    for (;;) {
        PhysicalPlan p{tree, {}, 0};
        for (std::size_t i = 0; i < slots.size(); ++i) {
            AlgoChoice c = slots[i].first;
            c.algorithm = slots[i].second[pick[i]];
            p.choices.push_back(c);
        }
        plans.push_back(std::move(p));
        if (plans.size() >= max_plans) break;
        std::size_t i = 0;
        for (; i < slots.size(); ++i) {
            if (++pick[i] < slots[i].second.size()) break;
            pick[i] = 0;
        }
        if (i == slots.size()) break;
    }
    return plans;
}

Cost span_cost(const QueryTree &tree, std::size_t span, Algorithm a, const Stats &stats)
{
    const ModuleSpan &s = tree.spans.at(span);
    RowEstimator est(tree, stats);
    const Rational &minsup = tree.meta.params.minsup;
    std::int64_t level = frequent_level(stats, minsup);
    switch (a) {
    case Algorithm::NaivePowerset: return Cost(stats.n) * (pow2(stats.w) - 1);
    case Algorithm::Apriori: return level_sum(stats.m, stats.w, std::min(stats.w, level + 1), stats.n);
    case Algorithm::ConstrainedApriori: {
        ItemsetConstraints c;
        if (auto shape = fi_shape(tree, s)) c = span_constraints(tree, *shape, true);
        std::int64_t top = std::min(stats.w, level + 1);
        if (c.size_hi) top = std::min<std::int64_t>(top, static_cast<std::int64_t>(*c.size_hi));
        return level_sum(admitted_items(stats, c), stats.w, top, stats.n);
    }
    case Algorithm::OperatorPipeline:
    case Algorithm::RuleGen: {
        Cost a_rows = 0, b_rows = 0;
        if (auto shape = rulegen_shape(tree, s)) {
            a_rows = est.rows(shape->input_a);
            b_rows = est.rows(shape->input_b);
        } else {
            for (int id : s.nodes)
                if (tree.node(id).children.size() == 2) {
                    a_rows = est.rows(tree.node(id).children[0]);
                    b_rows = est.rows(tree.node(id).children[1]);
                }
        }
        if (a == Algorithm::OperatorPipeline) return 2 * a_rows * b_rows;
        return b_rows * std::min(pow2(std::min(stats.w, level)), a_rows);
    }
    default: {
        Cost total = 0;
        for (int id : s.nodes) total += node_cost(tree, id, est);
        return total;
    }
    }
}

Cost estimate_cost(const PhysicalPlan &plan, const Stats &stats, const CostModel &model)
{
    RowEstimator est(plan.tree, stats);
    Cost total = 0;
    for (const auto &c : plan.choices) {
        if (c.target == AlgoChoice::Target::Span) total += span_cost(plan.tree, c.id, c.algorithm, stats);
        else total += node_cost(plan.tree, c.id, est);
    }
    return total * model.scale;
}

PhysicalPlan choose_plan(std::vector<PhysicalPlan> plans, const Stats &stats, const CostModel &model)
{
    if (plans.empty()) fail(Errc::EmptyPlanSet, "no plans to choose from");
    for (auto &p : plans) p.cost = estimate_cost(p, stats, model);
    auto best = std::min_element(plans.begin(), plans.end(), [](const PhysicalPlan &a, const PhysicalPlan &b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        return a.signature() < b.signature();
    });
    return *best;
}

Explanation optimize(const QueryTree &tree, const Stats &stats, const std::vector<RewriteRule> &rules,
                     const Catalog &catalog, std::size_t max_plans)
{
    Explanation e;
    e.rewritten = apply_rewrites(tree, rules);
    e.plans = enumerate_plans(e.rewritten.tree, catalog, max_plans);
    for (auto &p : e.plans) p.cost = estimate_cost(p, stats);
    auto chosen = choose_plan(e.plans, stats);
    for (std::size_t i = 0; i < e.plans.size(); ++i)
        if (e.plans[i].choices == chosen.choices) {
            e.chosen = i;
            break;
        }
    return e;
}

std::string render_explanation(const Explanation &e, SyntaxStyle style)
{
    std::ostringstream out;
    out << explain_tree(e.rewritten.tree, style);
    out << "rewrites:\n";
    if (e.rewritten.trace.empty()) out << "  (none)\n";
    for (std::size_t i = 0; i < e.rewritten.trace.size(); ++i) {
        const auto &s = e.rewritten.trace[i];
        out << "  " << i + 1 << ". " << s.rule << " [";
        for (std::size_t j = 0; j < s.nodes.size(); ++j) out << (j ? ", " : "") << s.nodes[j];
        out << "]\n";
    }
    out << "plans:\n";
    std::size_t width = 4;
    for (const auto &p : e.plans) width = std::max(width, cost_text(p.cost).size());
    for (std::size_t i = 0; i < e.plans.size(); ++i) {
        std::string c = cost_text(e.plans[i].cost);
        out << (i == e.chosen ? "* " : "  ") << i << "  " << c << std::string(width - c.size(), ' ') << "  "
            << e.plans[i].signature() << "\n";
    }
    out << "chosen: " << e.chosen << "\n";
    return out.str();
}

} // namespace nestmine
