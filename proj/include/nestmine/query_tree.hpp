#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nestmine/expr.hpp"
#include "nestmine/miner.hpp"
#include "nestmine/ops.hpp"
#include "nestmine/relation.hpp"

namespace nestmine {

enum class SetOpKind : std::uint8_t { Union, Difference, Intersection, Product };

namespace op {

struct Source
{
    std::string relation;
    friend bool operator==(const Source &, const Source &) = default;
};
struct Select
{
    Predicate pred;
    friend bool operator==(const Select &, const Select &) = default;
};
struct Project
{
    std::vector<Binding> bindings;
    friend bool operator==(const Project &, const Project &) = default;
};
struct Nest
{
    std::vector<std::string> by;
    friend bool operator==(const Nest &, const Nest &) = default;
};
struct Unnest
{
    std::string attr;
    friend bool operator==(const Unnest &, const Unnest &) = default;
};
struct Grouping
{
    std::vector<std::string> by;
    std::vector<AggregateSpec> aggs;
    friend bool operator==(const Grouping &, const Grouping &) = default;
};
/// Children are (A side, B side); output attributes are qualified by the roles.
struct Join
{
    Predicate pred;
    std::string role_a = "A";
    std::string role_b = "B";
    friend bool operator==(const Join &, const Join &) = default;
};
struct SetOp
{
    SetOpKind kind;
    friend bool operator==(const SetOp &, const SetOp &) = default;
};
/// Names the aliases under which parents read this input; the relation passes through.
struct Rename
{
    std::vector<std::string> roles;
    friend bool operator==(const Rename &, const Rename &) = default;
};
/// Powerset generation fused with the support threshold and itemset constraints:
/// evaluates as powerset project, unnest, grouping, select, then drops rows whose
/// itemset violates `constraints`.
struct Fused
{
    Project powerset;
    Unnest unnest;
    Grouping group;
    Select threshold;
    ItemsetConstraints constraints;
    friend bool operator==(const Fused &, const Fused &) = default;
};

} // namespace op

using Op = std::variant<op::Source, op::Select, op::Project, op::Nest, op::Unnest, op::Grouping, op::Join, op::SetOp,
                        op::Rename, op::Fused>;

std::string_view op_name(const Op &op, bool glyphs = true);

struct PlanNode
{
    int id = 0;
    Op op;
    std::vector<int> children;
    std::string step; ///< figure step label; nodes boxed together share one

    friend bool operator==(const PlanNode &, const PlanNode &) = default;
};

enum class ModuleKind : std::uint8_t { DataPreparation, FrequentItemsets, RuleGeneration };

std::string_view to_string(ModuleKind k);

struct ModuleSpan
{
    ModuleKind kind;
    std::vector<int> nodes; ///< ascending ids
    std::vector<std::string> params;
    int top = 0;            ///< node whose output leaves the span
    std::vector<int> inputs; ///< nodes outside the span feeding it

    friend bool operator==(const ModuleSpan &, const ModuleSpan &) = default;
};

struct Breakpoint
{
    int child = 0;
    int parent = 0;
    bool enabled = true;

    friend bool operator==(const Breakpoint &, const Breakpoint &) = default;
};

struct CardRange
{
    std::size_t lo = 1;
    std::optional<std::size_t> hi; ///< none = unbounded

    bool vacuous() const { return lo <= 1 && !hi; }
    bool exact() const { return hi && *hi == lo; }
    friend bool operator==(const CardRange &, const CardRange &) = default;
};

std::string to_string(const CardRange &r);

/// Constraints on one set variable of a constrained association query.
struct SetConstraints
{
    CardRange card;
    std::vector<Value> must_contain;
    std::vector<Value> must_not_contain;
    std::optional<Value> subset_of;

    bool has_item_constraints() const { return !must_contain.empty() || !must_not_contain.empty() || subset_of; }
    friend bool operator==(const SetConstraints &, const SetConstraints &) = default;
};

struct CAQSpec
{
    SetConstraints body;
    SetConstraints head;
    bool width_pruning = true;

    friend bool operator==(const CAQSpec &, const CAQSpec &) = default;
};

struct WidthFilter
{
    CmpOp op = CmpOp::Le;
    std::int64_t k = 0;
    friend bool operator==(const WidthFilter &, const WidthFilter &) = default;
};

struct MineRuleOptions
{
    std::optional<WidthFilter> width;
    CardRange head{1, 1};
    CardRange body{1, std::nullopt};
    friend bool operator==(const MineRuleOptions &, const MineRuleOptions &) = default;
};

enum class TemplateKind : std::uint8_t { Custom, Classic, MineRule, CAQ };

std::string_view to_string(TemplateKind k);
TemplateKind parse_template_kind(std::string_view text);

struct TreeMeta
{
    TemplateKind kind = TemplateKind::Custom;
    std::string tid_attr = "tid";
    std::string item_attr = "item";
    MiningParams params;
    /// Restrictions on frequent itemsets that no consumer in the tree can observe.
    ItemsetConstraints fi_constraints;
    /// A transaction-width filter bounds widths from above (item pushdown would change it).
    bool width_upper = false;

    friend bool operator==(const TreeMeta &, const TreeMeta &) = default;
};

class QueryTree
{
  public:
    QueryTree() = default;

    const std::vector<PlanNode> &nodes() const noexcept { return nodes_; }
    const PlanNode &node(int id) const;
    PlanNode &node_mut(int id);
    bool has_node(int id) const;
    int root() const noexcept { return root_; }
    void set_root(int id) { root_ = id; }

    /// Appends a node with id max+1.
    int add(Op op, std::vector<int> children, std::string step = {});
    void remove(int id);
    std::vector<int> parents(int id) const;
    /// Nodes in the root's subtree, children before parents (A branch before B).
    std::vector<int> topo_order() const;

    std::vector<ModuleSpan> spans;
    std::vector<Breakpoint> breakpoints;
    TreeMeta meta;

    /// Topmost node carrying the step label.
    std::optional<int> node_for_step(std::string_view step) const;
    const ModuleSpan *span_of(int id) const;

    /// Same nodes, root, spans and breakpoints.
    friend bool operator==(const QueryTree &, const QueryTree &) = default;

  private:
    std::vector<PlanNode> nodes_;
    int root_ = 0;
};

QueryTree build_classic_tree(std::string source, const MiningParams &params);
/// InfeasibleConstraint when a range has hi < lo or lo < 1.
QueryTree build_mine_rule_tree(std::string source, const MiningParams &params, const MineRuleOptions &opts);
QueryTree build_caq_tree(std::string source, const CAQSpec &spec, const MiningParams &params);

/// Recomputes module spans by pattern; idempotent.
QueryTree annotate_modules(QueryTree tree);

/// Extracted shape of a recognized frequent-itemset span.
struct FISpanShape
{
    int input = 0;            ///< node feeding the span
    bool input_flat = false;  ///< span starts with Nest over a flat (tid, item) input
    std::string tid;
    std::string item;
    std::string itemset;      ///< intermediate attribute (itemset)
    std::string count;        ///< count_tid
    std::string freq;         ///< freq_itemset
    std::string sup;          ///< sup
    ThresholdMode mode = ThresholdMode::Strict;
    std::optional<int> fused; ///< fused node id when present
};
std::optional<FISpanShape> fi_shape(const QueryTree &tree, const ModuleSpan &span);

struct RuleGenShape
{
    int input_a = 0;
    int input_b = 0;
    std::string freq = "freq_itemset"; ///< itemset attribute on both inputs
    std::string sup = "sup";
    ThresholdMode mode = ThresholdMode::Strict;
};
std::optional<RuleGenShape> rulegen_shape(const QueryTree &tree, const ModuleSpan &span);

struct Defect
{
    int node = -1;
    std::string code;
    std::string message;
};

using SourceSchemas = std::map<std::string, Schema, std::less<>>;
using SourceData = std::map<std::string, NestedRelation, std::less<>>;

/// Never throws. Checks arity, typing bottom-up, breakpoint edges and span layout.
std::vector<Defect> validate_tree(const QueryTree &tree, const SourceSchemas &sources);

/// Output schema of every node; throws the typing errors.
std::map<int, Schema> infer_schemas(const QueryTree &tree, const SourceSchemas &sources);

/// Reference semantics of one operator.
NestedRelation eval_op(const Op &op, const std::vector<const NestedRelation *> &inputs, const ParamEnv &env);

/// Evaluates every node of the tree by the reference operators.
std::map<int, NestedRelation> evaluate_all(const QueryTree &tree, const SourceData &data, const ParamEnv &env);
NestedRelation evaluate(const QueryTree &tree, const SourceData &data, const ParamEnv &env);

/// Distinct tid count of the source relation (0 when absent or empty).
std::int64_t bind_n(const QueryTree &tree, const SourceData &data);

std::string describe_op(const Op &op, SyntaxStyle style = {});
/// Indented listing from the root with node ids, step labels and module tags.
std::string explain_tree(const QueryTree &tree, SyntaxStyle style = {});

} // namespace nestmine
