#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "nestmine/query_tree.hpp"

namespace nestmine {

/*----- rewrites -------------------------------------------------------------------------------------------------------*/

struct RewriteStep
{
    std::string rule;
    std::vector<int> nodes; ///< nodes matched or created
};

struct RewriteRule
{
    std::string name;
    std::string soundness;
    bool enabled_by_default = true;
    /// One application at the first match in topological order, or nothing.
    std::function<std::optional<std::pair<QueryTree, std::vector<int>>>(const QueryTree &)> apply;
};

/// select-fusion, select-below-project, select-below-join, fuse-powerset-prune,
/// push-cardinality-constraint, push-item-constraint, group-by-pullup (identity).
const std::vector<RewriteRule> &rule_catalog();
/// Catalog entries that are enabled by default.
std::vector<RewriteRule> default_rules();
/// InvalidValue for unknown names.
std::vector<RewriteRule> rules_named(const std::vector<std::string> &names);

struct RewriteResult
{
    QueryTree tree;
    std::vector<RewriteStep> trace;
};

/// Applies the rules in order until none matches; spans are recomputed after every step.
RewriteResult apply_rewrites(const QueryTree &tree, const std::vector<RewriteRule> &rules);

/*----- physical plans -------------------------------------------------------------------------------------------------*/

enum class Algorithm : std::uint8_t {
    Scan,
    ScanFilter,
    HashGroup,
    NestedLoopJoin,
    NaivePowerset,
    Apriori,
    ConstrainedApriori,
    OperatorPipeline,
    RuleGen,
};

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);
/// True for algorithms that evaluate a span in one step, without intermediate node results.
bool is_atomic(Algorithm a);

struct AlgoChoice
{
    enum class Target : std::uint8_t { Node, Span };
    Target target = Target::Node;
    int id = 0; ///< node id, or index into tree.spans
    Algorithm algorithm = Algorithm::ScanFilter;

    friend bool operator==(const AlgoChoice &, const AlgoChoice &) = default;
};

/// Algorithms per operator name (op_name without glyphs) and per module kind name.
struct Catalog
{
    std::map<std::string, std::vector<Algorithm>, std::less<>> entries;

    static Catalog standard();
};

using Cost = boost::multiprecision::cpp_rational;

struct PhysicalPlan
{
    QueryTree tree;
    std::vector<AlgoChoice> choices;
    Cost cost = 0;

    /// Algorithm chosen for the span, when the span has a span-level choice.
    std::optional<Algorithm> span_algorithm(std::size_t span) const;
    std::optional<Algorithm> node_algorithm(int id) const;
    /// Stable text of the choices, e.g. "FrequentItemsets=Apriori RuleGeneration=RuleGen".
    std::string signature() const;
};

struct Stats
{
    std::int64_t n = 0; ///< transactions
    std::int64_t m = 0; ///< distinct items
    std::int64_t w = 0; ///< widest transaction
    std::map<Value, std::int64_t> item_counts;
};

Stats stats_from(const TransactionSet &ts);

inline constexpr std::size_t kDefaultMaxPlans = 64;

/// Cartesian product of the applicable choices. Spans of kind FrequentItemsets and
/// RuleGeneration take a span-level choice; every other node takes a node-level one.
/// NoAlgorithmApplicable when the catalog has nothing for a node or span.
std::vector<PhysicalPlan> enumerate_plans(const QueryTree &tree, const Catalog &catalog = Catalog::standard(),
                                          std::size_t max_plans = kDefaultMaxPlans);

struct CostModel
{
    Cost scale = 1; ///< multiplies every formula
};

Cost estimate_cost(const PhysicalPlan &plan, const Stats &stats, const CostModel &model = {});
/// Estimated cost of one span under an algorithm.
Cost span_cost(const QueryTree &tree, std::size_t span, Algorithm a, const Stats &stats);

/// Fills in costs and returns the cheapest; ties go to the smaller signature. EmptyPlanSet on an empty list.
PhysicalPlan choose_plan(std::vector<PhysicalPlan> plans, const Stats &stats, const CostModel &model = {});

/// Constraints a constrained miner may apply inside the span: the fused node's and the tree's.
ItemsetConstraints span_constraints(const QueryTree &tree, const FISpanShape &shape, bool include_tree_constraints);

struct Explanation
{
    RewriteResult rewritten;
    std::vector<PhysicalPlan> plans; ///< with costs
    std::size_t chosen = 0;
};

Explanation optimize(const QueryTree &tree, const Stats &stats, const std::vector<RewriteRule> &rules,
                     const Catalog &catalog = Catalog::standard(), std::size_t max_plans = kDefaultMaxPlans);

/// Rewrite trace, plan table and chosen plan as stable text.
std::string render_explanation(const Explanation &e, SyntaxStyle style = {});

} // namespace nestmine
