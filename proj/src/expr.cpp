#include "nestmine/expr.hpp"

#include <algorithm>

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

Expr make(expr::AttrRef n) { return Expr(std::make_shared<const ExprNode>(ExprNode{std::move(n)})); }
Expr make(expr::Const n) { return Expr(std::make_shared<const ExprNode>(ExprNode{std::move(n)})); }
Expr make(expr::Param n) { return Expr(std::make_shared<const ExprNode>(ExprNode{std::move(n)})); }
Expr make(expr::Binary n) { return Expr(std::make_shared<const ExprNode>(ExprNode{std::move(n)})); }
Expr make(expr::Powerset n) { return Expr(std::make_shared<const ExprNode>(ExprNode{std::move(n)})); }
Expr make(expr::Cardinality n) { return Expr(std::make_shared<const ExprNode>(ExprNode{std::move(n)})); }

template <class N>
Predicate make_pred(N n)
{
    return Predicate(std::make_shared<const PredNode>(PredNode{std::move(n)}));
}

Type infer_type(const Value &v)
{
    switch (v.kind()) {
    case ValueKind::Int: return ScalarKind::Int;
    case ValueKind::Rational: return ScalarKind::Rational;
    case ValueKind::String: return ScalarKind::String;
    case ValueKind::Date: return ScalarKind::Date;
    case ValueKind::Set:
        if (v.elements().empty()) fail(Errc::KindMismatch, "cannot infer the element type of an empty set literal");
        return Type::set_of(infer_type(v.elements().front()));
    }
    fail(Errc::KindMismatch, "unreachable");
}

} // namespace

/*----- construction ---------------------------------------------------------------------------------------------------*/

Expr attr(std::string_view dotted_name)
{
    expr::AttrRef ref;
    ref.name = std::string(dotted_name);
    std::size_t start = 0;
    for (std::size_t i = 0; i <= dotted_name.size(); ++i) {
        if (i == dotted_name.size() || dotted_name[i] == '.') {
            ref.path.emplace_back(dotted_name.substr(start, i - start));
            start = i + 1;
        }
    }
    return make(std::move(ref));
}

Expr lit(Value v)
{
    Type t = infer_type(v);
    return make(expr::Const{std::move(v), std::move(t)});
}

Expr lit(Value v, Type t)
{
    if (!conforms(v, t)) fail(Errc::KindMismatch, "literal " + render(v) + " is not a " + t.to_string());
    return make(expr::Const{std::move(v), std::move(t)});
}

Expr param(std::string_view name)
{
    (void)param_type(name);
    return make(expr::Param{std::string(name)});
}

Expr powerset(Expr arg) { return make(expr::Powerset{std::move(arg)}); }
Expr card(Expr arg) { return make(expr::Cardinality{std::move(arg)}); }
Expr set_diff(Expr lhs, Expr rhs) { return make(expr::Binary{ArithOp::Sub, std::move(lhs), std::move(rhs)}); }
Expr operator+(Expr lhs, Expr rhs) { return make(expr::Binary{ArithOp::Add, std::move(lhs), std::move(rhs)}); }
Expr operator-(Expr lhs, Expr rhs) { return make(expr::Binary{ArithOp::Sub, std::move(lhs), std::move(rhs)}); }
Expr operator*(Expr lhs, Expr rhs) { return make(expr::Binary{ArithOp::Mul, std::move(lhs), std::move(rhs)}); }
Expr operator/(Expr lhs, Expr rhs) { return make(expr::Binary{ArithOp::Div, std::move(lhs), std::move(rhs)}); }

Predicate cmp(CmpOp op, Expr lhs, Expr rhs) { return make_pred(pred::Compare{op, std::move(lhs), std::move(rhs)}); }
Predicate operator<(Expr lhs, Expr rhs) { return cmp(CmpOp::Lt, std::move(lhs), std::move(rhs)); }
Predicate operator<=(Expr lhs, Expr rhs) { return cmp(CmpOp::Le, std::move(lhs), std::move(rhs)); }
Predicate operator>(Expr lhs, Expr rhs) { return cmp(CmpOp::Gt, std::move(lhs), std::move(rhs)); }
Predicate operator>=(Expr lhs, Expr rhs) { return cmp(CmpOp::Ge, std::move(lhs), std::move(rhs)); }
Predicate eq(Expr lhs, Expr rhs) { return cmp(CmpOp::Eq, std::move(lhs), std::move(rhs)); }
Predicate ne(Expr lhs, Expr rhs) { return cmp(CmpOp::Ne, std::move(lhs), std::move(rhs)); }
Predicate subset(Expr lhs, Expr rhs) { return cmp(CmpOp::Subset, std::move(lhs), std::move(rhs)); }
Predicate subseteq(Expr lhs, Expr rhs) { return cmp(CmpOp::SubsetEq, std::move(lhs), std::move(rhs)); }
Predicate supset(Expr lhs, Expr rhs) { return cmp(CmpOp::Superset, std::move(lhs), std::move(rhs)); }
Predicate supseteq(Expr lhs, Expr rhs) { return cmp(CmpOp::SupersetEq, std::move(lhs), std::move(rhs)); }
Predicate member(Expr element, Expr set) { return cmp(CmpOp::In, std::move(element), std::move(set)); }
Predicate not_member(Expr element, Expr set) { return cmp(CmpOp::NotIn, std::move(element), std::move(set)); }
Predicate always(bool value) { return make_pred(pred::Const{value}); }
Predicate operator&&(Predicate lhs, Predicate rhs) { return make_pred(pred::And{std::move(lhs), std::move(rhs)}); }
Predicate operator||(Predicate lhs, Predicate rhs) { return make_pred(pred::Or{std::move(lhs), std::move(rhs)}); }
Predicate operator!(Predicate arg) { return make_pred(pred::Not{std::move(arg)}); }

Predicate conjunction(const std::vector<Predicate> &parts)
{
    if (parts.empty()) return always(true);
    Predicate out = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) out = out && parts[i];
    return out;
}

/*----- structural equality --------------------------------------------------------------------------------------------*/

bool operator==(const Expr &a, const Expr &b)
{
    if (&a.node() == &b.node()) return true;
    if (a.node().v.index() != b.node().v.index()) return false;
    return std::visit(
        overloaded{
            [&](const expr::AttrRef &x) { return x.name == std::get<expr::AttrRef>(b.node().v).name; },
            [&](const expr::Const &x) {
                const auto &y = std::get<expr::Const>(b.node().v);
                return x.value == y.value && x.type == y.type;
            },
            [&](const expr::Param &x) { return x.name == std::get<expr::Param>(b.node().v).name; },
            [&](const expr::Binary &x) {
                const auto &y = std::get<expr::Binary>(b.node().v);
                return x.op == y.op && x.lhs == y.lhs && x.rhs == y.rhs;
            },
            [&](const expr::Powerset &x) { return x.arg == std::get<expr::Powerset>(b.node().v).arg; },
            [&](const expr::Cardinality &x) { return x.arg == std::get<expr::Cardinality>(b.node().v).arg; },
        },
        a.node().v);
}

bool operator==(const Predicate &a, const Predicate &b)
{
    if (&a.node() == &b.node()) return true;
    if (a.node().v.index() != b.node().v.index()) return false;
    return std::visit(overloaded{
                          [&](const pred::Const &x) { return x.value == std::get<pred::Const>(b.node().v).value; },
                          [&](const pred::Compare &x) {
                              const auto &y = std::get<pred::Compare>(b.node().v);
                              return x.op == y.op && x.lhs == y.lhs && x.rhs == y.rhs;
                          },
                          [&](const pred::And &x) {
                              const auto &y = std::get<pred::And>(b.node().v);
                              return x.lhs == y.lhs && x.rhs == y.rhs;
                          },
                          [&](const pred::Or &x) {
                              const auto &y = std::get<pred::Or>(b.node().v);
                              return x.lhs == y.lhs && x.rhs == y.rhs;
                          },
                          [&](const pred::Not &x) { return x.arg == std::get<pred::Not>(b.node().v).arg; },
                      },
                      a.node().v);
}

/*----- typing ---------------------------------------------------------------------------------------------------------*/

Type param_type(std::string_view name)
{
    if (name == "n") return ScalarKind::Int;
    if (name == "minsup" || name == "minconf") return ScalarKind::Rational;
    fail(Errc::UnknownAttribute, "unknown parameter '$" + std::string(name) + "'");
}

namespace {

bool is_numeric(const Type &t)
{
    return !t.is_set() && (t.scalar() == ScalarKind::Int || t.scalar() == ScalarKind::Rational);
}

/// Scalars of the same kind, or an int/rational mix.
bool scalars_comparable(const Type &a, const Type &b)
{
    if (a.is_set() || b.is_set()) return false;
    return a == b || (is_numeric(a) && is_numeric(b));
}

std::string_view op_name(ArithOp op)
{
    switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
    }
    return "?";
}

[[noreturn]] void kind_mismatch(std::string_view op, const Type &a, const Type &b)
{
    fail(Errc::KindMismatch, "operator '" + std::string(op) + "' on " + a.to_string() + " and " + b.to_string());
}

} // namespace

Type typecheck(const Expr &e, const Schema &s)
{
    return std::visit(
        overloaded{
            [&](const expr::AttrRef &x) -> Type { return s[s.require(x.name)].type; },
            [&](const expr::Const &x) -> Type { return x.type; },
            [&](const expr::Param &x) -> Type { return param_type(x.name); },
            [&](const expr::Binary &x) -> Type {
                Type l = typecheck(x.lhs, s);
                Type r = typecheck(x.rhs, s);
                if (x.op == ArithOp::Sub && l.is_set() && r.is_set()) {
                    if (!(l == r)) kind_mismatch("-", l, r);
                    return l;
                }
                if (!is_numeric(l) || !is_numeric(r)) kind_mismatch(op_name(x.op), l, r);
                if (x.op == ArithOp::Div) return ScalarKind::Rational;
                return (l.scalar() == ScalarKind::Int && r.scalar() == ScalarKind::Int) ? ScalarKind::Int
                                                                                        : ScalarKind::Rational;
            },
            [&](const expr::Powerset &x) -> Type {
                Type a = typecheck(x.arg, s);
                if (!a.is_set()) fail(Errc::KindMismatch, "powerset of non-set " + a.to_string());
                return Type::set_of(a);
            },
            [&](const expr::Cardinality &x) -> Type {
                Type a = typecheck(x.arg, s);
                if (!a.is_set()) fail(Errc::KindMismatch, "cardinality of non-set " + a.to_string());
                return ScalarKind::Int;
            },
        },
        e.node().v);
}

void typecheck(const Predicate &p, const Schema &s)
{
    std::visit(overloaded{
                   [&](const pred::Const &) {},
                   [&](const pred::Compare &x) {
                       Type l = typecheck(x.lhs, s);
                       Type r = typecheck(x.rhs, s);
                       switch (x.op) {
                       case CmpOp::Lt:
                       case CmpOp::Le:
                       case CmpOp::Ge:
                       case CmpOp::Gt:
                           if (!scalars_comparable(l, r)) kind_mismatch(to_string(x.op), l, r);
                           break;
                       case CmpOp::Eq:
                       case CmpOp::Ne:
                           if (!(scalars_comparable(l, r) || (l.is_set() && l == r)))
                               kind_mismatch(to_string(x.op), l, r);
                           break;
                       case CmpOp::Subset:
                       case CmpOp::SubsetEq:
                       case CmpOp::Superset:
                       case CmpOp::SupersetEq:
                           if (!(l.is_set() && l == r)) kind_mismatch(to_string(x.op), l, r);
                           break;
                       case CmpOp::In:
                       case CmpOp::NotIn:
                           if (l.is_set() || !r.is_set() || r.element().is_set() || !(l == r.element()))
                               kind_mismatch(to_string(x.op), l, r);
                           break;
                       }
                   },
                   [&](const pred::And &x) {
                       typecheck(x.lhs, s);
                       typecheck(x.rhs, s);
                   },
                   [&](const pred::Or &x) {
                       typecheck(x.lhs, s);
                       typecheck(x.rhs, s);
                   },
                   [&](const pred::Not &x) { typecheck(x.arg, s); },
               },
               p.node().v);
}

/*----- evaluation -----------------------------------------------------------------------------------------------------*/

Value ParamEnv::lookup(std::string_view name) const
{
    if (name == "n") return Value(n);
    if (name == "minsup") return Value(minsup);
    if (name == "minconf") return Value(minconf);
    fail(Errc::UnknownAttribute, "unknown parameter '$" + std::string(name) + "'");
}

namespace {

Value arith(ArithOp op, const Value &l, const Value &r)
{
    if (op == ArithOp::Sub && l.is_set()) return set_difference(l, r);
    if (op == ArithOp::Div) {
        Rational d = r.as_number();
        if (d.numerator() == 0) fail(Errc::DivisionByZero, "division of " + render(l) + " by zero");
        return Value(l.as_number() / d);
    }
    if (l.kind() == ValueKind::Int && r.kind() == ValueKind::Int) {
        std::int64_t a = l.as_int(), b = r.as_int();
        switch (op) {
        case ArithOp::Add: return Value(a + b);
        case ArithOp::Sub: return Value(a - b);
        case ArithOp::Mul: return Value(a * b);
        case ArithOp::Div: break;
        }
    }
    Rational a = l.as_number(), b = r.as_number();
    switch (op) {
    case ArithOp::Add: return Value(a + b);
    case ArithOp::Sub: return Value(a - b);
    case ArithOp::Mul: return Value(a * b);
    case ArithOp::Div: break;
    }
    fail(Errc::KindMismatch, "unreachable arithmetic");
}

Value powerset_of(const Value &s)
{
    auto elems = s.elements();
    if (elems.size() > kMaxPowersetInput)
        fail(Errc::ResourceLimit, "powerset of a " + std::to_string(elems.size()) + "-element set exceeds 2^" +
                                      std::to_string(kMaxPowersetInput));
    Value::Elements subsets;
    subsets.reserve((std::size_t{1} << elems.size()) - 1);
    Value::Elements prefix;
    // depth-first in lexicographic order, so the result needs no sort
    auto walk = [&](auto &self, std::size_t from) -> void {
        for (std::size_t i = from; i < elems.size(); ++i) {
            prefix.push_back(elems[i]);
            subsets.push_back(Value::sorted_set(prefix));
            self(self, i + 1);
            prefix.pop_back();
        }
    };
    walk(walk, 0);
    return Value::sorted_set(std::move(subsets));
}

int compare_scalars(const Value &l, const Value &r)
{
    if (l.is_numeric() && r.is_numeric() && l.kind() != r.kind()) {
        Rational a = l.as_number(), b = r.as_number();
        return a < b ? -1 : (b < a ? 1 : 0);
    }
    auto c = l <=> r;
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

bool compare(CmpOp op, const Value &l, const Value &r)
{
    switch (op) {
    case CmpOp::Lt: return compare_scalars(l, r) < 0;
    case CmpOp::Le: return compare_scalars(l, r) <= 0;
    case CmpOp::Gt: return compare_scalars(l, r) > 0;
    case CmpOp::Ge: return compare_scalars(l, r) >= 0;
    case CmpOp::Eq: return l.is_set() ? l == r : compare_scalars(l, r) == 0;
    case CmpOp::Ne: return l.is_set() ? l != r : compare_scalars(l, r) != 0;
    case CmpOp::Subset: return l.size() < r.size() && is_subset(l, r);
    case CmpOp::SubsetEq: return is_subset(l, r);
    case CmpOp::Superset: return r.size() < l.size() && is_subset(r, l);
    case CmpOp::SupersetEq: return is_subset(r, l);
    case CmpOp::In: return r.contains(l);
    case CmpOp::NotIn: return !r.contains(l);
    }
    return false;
}

} // namespace

Value eval_expr(const Expr &e, const Tuple &t, const Schema &s, const ParamEnv &env)
{
    return std::visit(overloaded{
                          [&](const expr::AttrRef &x) -> Value { return t[s.require(x.name)]; },
                          [&](const expr::Const &x) -> Value { return x.value; },
                          [&](const expr::Param &x) -> Value { return env.lookup(x.name); },
                          [&](const expr::Binary &x) -> Value {
                              return arith(x.op, eval_expr(x.lhs, t, s, env), eval_expr(x.rhs, t, s, env));
                          },
                          [&](const expr::Powerset &x) -> Value { return powerset_of(eval_expr(x.arg, t, s, env)); },
                          [&](const expr::Cardinality &x) -> Value {
                              return Value(static_cast<std::int64_t>(eval_expr(x.arg, t, s, env).size()));
                          },
                      },
                      e.node().v);
}

bool eval_predicate(const Predicate &p, const Tuple &t, const Schema &s, const ParamEnv &env)
{
    return std::visit(overloaded{
                          [&](const pred::Const &x) { return x.value; },
                          [&](const pred::Compare &x) {
                              return compare(x.op, eval_expr(x.lhs, t, s, env), eval_expr(x.rhs, t, s, env));
                          },
                          [&](const pred::And &x) {
                              return eval_predicate(x.lhs, t, s, env) && eval_predicate(x.rhs, t, s, env);
                          },
                          [&](const pred::Or &x) {
                              return eval_predicate(x.lhs, t, s, env) || eval_predicate(x.rhs, t, s, env);
                          },
                          [&](const pred::Not &x) { return !eval_predicate(x.arg, t, s, env); },
                      },
                      p.node().v);
}

bool eval_predicate(const Predicate &p, const RoleTuple &a, const RoleTuple &b, const ParamEnv &env)
{
    std::vector<Attribute> attrs;
    Tuple joined;
    for (const RoleTuple *side : {&a, &b}) {
        for (std::size_t i = 0; i < side->schema.size(); ++i) {
            std::string name = side->role.empty() ? side->schema[i].name
                                                  : std::string(side->role) + "." + side->schema[i].name;
            attrs.push_back({std::move(name), side->schema[i].type});
            joined.push_back(side->tuple[i]);
        }
    }
    return eval_predicate(p, joined, Schema(std::move(attrs)), env);
}

/*----- traversal ------------------------------------------------------------------------------------------------------*/

namespace {

void collect(const Expr &e, std::vector<std::string> *attrs, std::vector<std::string> *params)
{
    std::visit(overloaded{
                   [&](const expr::AttrRef &x) {
                       if (attrs) attrs->push_back(x.name);
                   },
                   [&](const expr::Const &) {},
                   [&](const expr::Param &x) {
                       if (params) params->push_back(x.name);
                   },
                   [&](const expr::Binary &x) {
                       collect(x.lhs, attrs, params);
                       collect(x.rhs, attrs, params);
                   },
                   [&](const expr::Powerset &x) { collect(x.arg, attrs, params); },
                   [&](const expr::Cardinality &x) { collect(x.arg, attrs, params); },
               },
               e.node().v);
}

void collect(const Predicate &p, std::vector<std::string> *attrs, std::vector<std::string> *params)
{
    std::visit(overloaded{
                   [&](const pred::Const &) {},
                   [&](const pred::Compare &x) {
                       collect(x.lhs, attrs, params);
                       collect(x.rhs, attrs, params);
                   },
                   [&](const pred::And &x) {
                       collect(x.lhs, attrs, params);
                       collect(x.rhs, attrs, params);
                   },
                   [&](const pred::Or &x) {
                       collect(x.lhs, attrs, params);
                       collect(x.rhs, attrs, params);
                   },
                   [&](const pred::Not &x) { collect(x.arg, attrs, params); },
               },
               p.node().v);
}

std::vector<std::string> uniq(std::vector<std::string> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

} // namespace

std::vector<std::string> referenced_attributes(const Expr &e)
{
    std::vector<std::string> out;
    collect(e, &out, nullptr);
    return uniq(std::move(out));
}

std::vector<std::string> referenced_attributes(const Predicate &p)
{
    std::vector<std::string> out;
    collect(p, &out, nullptr);
    return uniq(std::move(out));
}

std::vector<std::string> referenced_params(const Expr &e)
{
    std::vector<std::string> out;
    collect(e, nullptr, &out);
    return uniq(std::move(out));
}

std::vector<std::string> referenced_params(const Predicate &p)
{
    std::vector<std::string> out;
    collect(p, nullptr, &out);
    return uniq(std::move(out));
}

Expr substitute(const Expr &e, const std::vector<std::pair<std::string, Expr>> &with)
{
    return std::visit(overloaded{
                          [&](const expr::AttrRef &x) -> Expr {
                              for (const auto &[name, replacement] : with)
                                  if (name == x.name) return replacement;
                              return e;
                          },
                          [&](const expr::Const &) -> Expr { return e; },
                          [&](const expr::Param &) -> Expr { return e; },
                          [&](const expr::Binary &x) -> Expr {
                              return make(expr::Binary{x.op, substitute(x.lhs, with), substitute(x.rhs, with)});
                          },
                          [&](const expr::Powerset &x) -> Expr { return powerset(substitute(x.arg, with)); },
                          [&](const expr::Cardinality &x) -> Expr { return card(substitute(x.arg, with)); },
                      },
                      e.node().v);
}

Predicate substitute(const Predicate &p, const std::vector<std::pair<std::string, Expr>> &with)
{
    return std::visit(overloaded{
                          [&](const pred::Const &) -> Predicate { return p; },
                          [&](const pred::Compare &x) -> Predicate {
                              return cmp(x.op, substitute(x.lhs, with), substitute(x.rhs, with));
                          },
                          [&](const pred::And &x) -> Predicate {
                              return substitute(x.lhs, with) && substitute(x.rhs, with);
                          },
                          [&](const pred::Or &x) -> Predicate {
                              return substitute(x.lhs, with) || substitute(x.rhs, with);
                          },
                          [&](const pred::Not &x) -> Predicate { return !substitute(x.arg, with); },
                      },
                      p.node().v);
}

/*----- aggregates -----------------------------------------------------------------------------------------------------*/

std::string_view to_string(AggFn fn)
{
    switch (fn) {
    case AggFn::Count: return "count";
    case AggFn::Sum: return "sum";
    case AggFn::Min: return "min";
    case AggFn::Max: return "max";
    case AggFn::Average: return "average";
    }
    return "?";
}

std::string AggregateSpec::output_name() const
{
    if (!output.empty()) return output;
    return std::string(to_string(fn)) + "_" + target;
}

} // namespace nestmine
