#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nestmine/error.hpp"
#include "nestmine/query_tree.hpp"

namespace nestmine {

/// SyntaxError carrying the 1-based position and the tokens that would have been accepted.
class SyntaxErrorAt : public Error
{
  public:
    SyntaxErrorAt(std::size_t line, std::size_t column, std::vector<std::string> expected, std::string found);

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::vector<std::string> &expected() const noexcept { return expected_; }
    const std::string &found() const noexcept { return found_; }

  private:
    std::size_t line_, column_;
    std::vector<std::string> expected_;
    std::string found_;
};

struct MineRuleAst
{
    std::string name;
    CardRange body;
    CardRange head{1, 1};
    std::string body_attr = "item";
    std::string head_attr = "item";
    std::string source;
    std::string group_by;
    std::optional<WidthFilter> having; ///< HAVING COUNT(*) op k
    Rational support{1, 10};
    Rational confidence{2, 10};

    friend bool operator==(const MineRuleAst &, const MineRuleAst &) = default;
};

struct CaqConstraint
{
    enum class Kind : std::uint8_t {
        Itemset,     ///< X ⊂ itemset; every candidate satisfies it
        Card,        ///< count(X) op k
        SubsetOf,    ///< X ⊆ {items}
        Contains,    ///< item ∈ X
        NotContains, ///< item ∉ X
    };
    Kind kind = Kind::Card;
    int var = 0; ///< 0 = first pair variable, 1 = second
    CmpOp op = CmpOp::Eq;
    std::int64_t k = 0;
    Value items; ///< set for SubsetOf, single item for Contains/NotContains

    friend bool operator==(const CaqConstraint &, const CaqConstraint &) = default;
};

struct CaqAst
{
    std::string s1 = "S1";
    std::string s2 = "S2";
    std::vector<CaqConstraint> constraints;
    std::optional<std::string> source;
    std::optional<Rational> support;
    std::optional<Rational> confidence;

    friend bool operator==(const CaqAst &, const CaqAst &) = default;
};

MineRuleAst parse_mine_rule(std::string_view text);
/// UnknownConstraint for an aggregate other than count.
CaqAst parse_caq(std::string_view text);

std::string render(const MineRuleAst &ast);
std::string render(const CaqAst &ast, SyntaxStyle style = {});

/// Template choice and everything needed to build its tree.
struct QuerySpec
{
    TemplateKind kind = TemplateKind::Classic;
    std::string source = "Purchase";
    MiningParams params;
    MineRuleOptions mine_rule;
    CAQSpec caq;
    bool source_given = false; ///< false when the name is only a default

    friend bool operator==(const QuerySpec &, const QuerySpec &) = default;
};

struct QueryOverrides
{
    std::optional<Rational> minsup;
    std::optional<Rational> minconf;
    std::optional<ThresholdMode> mode;
    std::optional<std::string> source;
};

QuerySpec spec_of(const MineRuleAst &ast);
/// InfeasibleConstraint when card constraints on one variable leave no size.
QuerySpec spec_of(const CaqAst &ast);
QuerySpec apply_overrides(QuerySpec spec, const QueryOverrides &o);

/// InvalidValue for bad thresholds, InfeasibleConstraint for empty ranges.
QueryTree build_tree(const QuerySpec &spec);

QueryTree compile(const MineRuleAst &ast, const QueryOverrides &o = {});
QueryTree compile(const CaqAst &ast, const QueryOverrides &o = {});

/// MINE RULE text or a CAQ comprehension, told apart by the first token.
QuerySpec parse_query(std::string_view text);

/// {"template": "classic"|"minerule"|"caq", "source", "minsup", "minconf", "threshold_mode",
///  "width": {"op","k"}, "body"/"head": {"lo","hi", "must_contain", "must_not_contain", "subset_of"},
///  "width_pruning"} or {"query": "<text>"} with the same threshold keys as overrides.
/// Thresholds are "p/q" or decimal strings, or JSON numbers.
QuerySpec query_from_json(const nlohmann::json &j);
nlohmann::json to_json(const QuerySpec &spec);
/// "p/q" or decimal string, or a JSON number; InvalidValue otherwise.
Rational threshold_from_json(const nlohmann::json &j, std::string_view key);

} // namespace nestmine
