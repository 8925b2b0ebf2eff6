#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nestmine/value.hpp"

namespace nestmine {

enum class ArithOp : std::uint8_t { Add, Sub, Mul, Div };

/// Scalar, set and membership comparison operators. Eq/Ne apply to scalars and
/// sets alike; Subset is strict, SubsetEq permits equality.
enum class CmpOp : std::uint8_t { Lt, Le, Eq, Ne, Ge, Gt, Subset, SubsetEq, Superset, SupersetEq, In, NotIn };

struct ExprNode;
struct PredNode;

/// Immutable expression handle. Copies share the node.
class Expr
{
  public:
    explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
    const ExprNode &node() const { return *node_; }

    friend bool operator==(const Expr &a, const Expr &b);

  private:
    std::shared_ptr<const ExprNode> node_;
};

class Predicate
{
  public:
    explicit Predicate(std::shared_ptr<const PredNode> node) : node_(std::move(node)) {}
    const PredNode &node() const { return *node_; }

    friend bool operator==(const Predicate &a, const Predicate &b);

  private:
    std::shared_ptr<const PredNode> node_;
};

namespace expr {

/// Attribute reference; `path` {"A","freq_itemset"} names the attribute "A.freq_itemset".
struct AttrRef
{
    std::vector<std::string> path;
    std::string name;
};
struct Const
{
    Value value;
    Type type;
};
/// Mining parameter: `n` (int), `minsup`, `minconf` (rational).
struct Param
{
    std::string name;
};
/// Sub on two sets is set difference.
struct Binary
{
    ArithOp op;
    Expr lhs;
    Expr rhs;
};
/// All non-empty subsets of the argument.
struct Powerset
{
    Expr arg;
};
struct Cardinality
{
    Expr arg;
};

} // namespace expr

struct ExprNode
{
    std::variant<expr::AttrRef, expr::Const, expr::Param, expr::Binary, expr::Powerset, expr::Cardinality> v;
};

namespace pred {

struct Const
{
    bool value;
};
struct Compare
{
    CmpOp op;
    Expr lhs;
    Expr rhs;
};
struct And
{
    Predicate lhs;
    Predicate rhs;
};
struct Or
{
    Predicate lhs;
    Predicate rhs;
};
struct Not
{
    Predicate arg;
};

} // namespace pred

struct PredNode
{
    std::variant<pred::Const, pred::Compare, pred::And, pred::Or, pred::Not> v;
};

/*----- construction ---------------------------------------------------------------------------------------------------*/

Expr attr(std::string_view dotted_name);
Expr lit(Value v);
Expr lit(Value v, Type t);
Expr param(std::string_view name);
Expr powerset(Expr arg);
Expr card(Expr arg);
Expr set_diff(Expr lhs, Expr rhs);
Expr operator+(Expr lhs, Expr rhs);
Expr operator-(Expr lhs, Expr rhs);
Expr operator*(Expr lhs, Expr rhs);
Expr operator/(Expr lhs, Expr rhs);

Predicate cmp(CmpOp op, Expr lhs, Expr rhs);
Predicate operator<(Expr lhs, Expr rhs);
Predicate operator<=(Expr lhs, Expr rhs);
Predicate operator>(Expr lhs, Expr rhs);
Predicate operator>=(Expr lhs, Expr rhs);
Predicate eq(Expr lhs, Expr rhs);
Predicate ne(Expr lhs, Expr rhs);
Predicate subset(Expr lhs, Expr rhs);
Predicate subseteq(Expr lhs, Expr rhs);
Predicate supset(Expr lhs, Expr rhs);
Predicate supseteq(Expr lhs, Expr rhs);
Predicate member(Expr element, Expr set);
Predicate not_member(Expr element, Expr set);
Predicate always(bool value);
Predicate operator&&(Predicate lhs, Predicate rhs);
Predicate operator||(Predicate lhs, Predicate rhs);
Predicate operator!(Predicate arg);

/// Left-fold of `parts` with AND; TRUE when empty.
Predicate conjunction(const std::vector<Predicate> &parts);

/*----- typing and evaluation ------------------------------------------------------------------------------------------*/

/// Throws UnknownAttribute or KindMismatch; a successful check guarantees that
/// evaluation against conforming tuples cannot hit a kind error.
Type typecheck(const Expr &e, const Schema &s);
void typecheck(const Predicate &p, const Schema &s);

/// Type of a mining parameter name; throws UnknownAttribute for unknown names.
Type param_type(std::string_view name);

struct ParamEnv
{
    std::int64_t n = 0;
    Rational minsup{0};
    Rational minconf{0};

    Value lookup(std::string_view name) const;
};

/// Upper bound on the subsets Powerset may emit for one value (ResourceLimit beyond).
inline constexpr std::size_t kMaxPowersetInput = 24;

Value eval_expr(const Expr &e, const Tuple &t, const Schema &s, const ParamEnv &env = {});
bool eval_predicate(const Predicate &p, const Tuple &t, const Schema &s, const ParamEnv &env = {});

/// One side of a join binding: attributes are addressed as `<role>.<name>`.
struct RoleTuple
{
    std::string_view role;
    const Tuple &tuple;
    const Schema &schema;
};
bool eval_predicate(const Predicate &p, const RoleTuple &a, const RoleTuple &b, const ParamEnv &env = {});

/// Attribute names (joined paths) referenced anywhere in the expression/predicate.
std::vector<std::string> referenced_attributes(const Expr &e);
std::vector<std::string> referenced_attributes(const Predicate &p);
/// Parameter names referenced anywhere.
std::vector<std::string> referenced_params(const Expr &e);
std::vector<std::string> referenced_params(const Predicate &p);

/// Replaces attribute references by expressions (used by rewrites that move
/// predicates through projections). Names missing from `with` are kept.
Expr substitute(const Expr &e, const std::vector<std::pair<std::string, Expr>> &with);
Predicate substitute(const Predicate &p, const std::vector<std::pair<std::string, Expr>> &with);

/*----- aggregates -----------------------------------------------------------------------------------------------------*/

enum class AggFn : std::uint8_t { Count, Sum, Min, Max, Average };

std::string_view to_string(AggFn fn);

struct AggregateSpec
{
    AggFn fn;
    std::string target;
    std::string output; ///< empty means `<function>_<target>`

    std::string output_name() const;
    friend bool operator==(const AggregateSpec &, const AggregateSpec &) = default;
};

/*----- text syntax ----------------------------------------------------------------------------------------------------*/

struct SyntaxStyle
{
    bool glyphs = false; ///< ℘, ⊂, ∈, ≤ ... instead of P, subset, in, <=
};

std::string to_string(const Expr &e, SyntaxStyle style = {});
std::string to_string(const Predicate &p, SyntaxStyle style = {});
std::string_view to_string(CmpOp op, SyntaxStyle style = {});

/// Parses the textual syntax (ASCII keywords or glyphs); throws SyntaxError.
Expr parse_expr(std::string_view text);
Predicate parse_predicate(std::string_view text);

} // namespace nestmine
