#include "nestmine/ops.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "nestmine/error.hpp"

namespace nestmine {

namespace {

std::vector<std::size_t> indices_of(const Schema &s, const std::vector<std::string> &names)
{
    std::vector<std::size_t> out;
    out.reserve(names.size());
    for (const auto &n : names) out.push_back(s.require(n));
    return out;
}

Tuple pick(const Tuple &t, const std::vector<std::size_t> &idx)
{
    Tuple out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(t[i]);
    return out;
}

void require_same_schema(const NestedRelation &a, const NestedRelation &b, std::string_view op)
{
    if (a.schema() != b.schema())
        fail(Errc::SchemaMismatch, std::string(op) + " needs identical schemas, got " + a.schema().to_string() +
                                       " and " + b.schema().to_string());
}

Type agg_type(const AggregateSpec &agg, const Type &target)
{
    if (agg.fn == AggFn::Count) return ScalarKind::Int;
    if (target.is_set())
        fail(Errc::KindMismatch, std::string(to_string(agg.fn)) + " needs a scalar target, '" + agg.target + "' is " +
                                     target.to_string());
    switch (agg.fn) {
    case AggFn::Sum:
    case AggFn::Average:
        if (target.scalar() != ScalarKind::Int && target.scalar() != ScalarKind::Rational)
            fail(Errc::KindMismatch,
                 std::string(to_string(agg.fn)) + " needs a numeric target, '" + agg.target + "' is " +
                     target.to_string());
        return agg.fn == AggFn::Average ? Type(ScalarKind::Rational) : target;
    default: return target;
    }
}

Value aggregate(const AggregateSpec &agg, const std::vector<Value> &values)
{
    switch (agg.fn) {
    case AggFn::Count: return Value(static_cast<std::int64_t>(values.size()));
    case AggFn::Min: return *std::min_element(values.begin(), values.end());
    case AggFn::Max: return *std::max_element(values.begin(), values.end());
    case AggFn::Sum:
    case AggFn::Average: {
        Rational sum = 0;
        for (const auto &v : values) sum += v.as_number();
        if (agg.fn == AggFn::Average) return Value(sum / static_cast<std::int64_t>(values.size()));
        if (values.front().kind() == ValueKind::Int) return Value(sum.numerator());
        return Value(sum);
    }
    }
    return Value();
}

} // namespace

Schema qualify(const Schema &s, std::string_view role)
{
    if (role.empty()) return s;
    std::vector<Attribute> attrs;
    for (const auto &a : s) attrs.push_back({std::string(role) + "." + a.name, a.type});
    return Schema(std::move(attrs));
}

Schema project_schema(const Schema &s, const std::vector<Binding> &bindings)
{
    std::vector<Attribute> attrs;
    for (const auto &[name, e] : bindings) attrs.push_back({name, typecheck(e, s)});
    return Schema(std::move(attrs));
}

Schema nest_schema(const Schema &s, const std::vector<std::string> &by)
{
    auto key = indices_of(s, by);
    std::vector<Attribute> attrs;
    for (auto i : key) attrs.push_back(s[i]);
    bool any = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (std::find(key.begin(), key.end(), i) != key.end()) continue;
        attrs.push_back({s[i].name, Type::set_of(s[i].type)});
        any = true;
    }
    if (!any) fail(Errc::SchemaMismatch, "nest needs at least one attribute outside the grouping key");
    return Schema(std::move(attrs));
}

Schema unnest_schema(const Schema &s, std::string_view attr)
{
    std::size_t idx = s.require(attr);
    if (!s[idx].type.is_set())
        fail(Errc::KindMismatch, "unnest of scalar attribute '" + std::string(attr) + "'");
    std::vector<Attribute> attrs(s.begin(), s.end());
    attrs[idx].type = s[idx].type.element();
    return Schema(std::move(attrs));
}

Schema grouping_schema(const Schema &s, const std::vector<std::string> &by, const std::vector<AggregateSpec> &aggs)
{
    std::vector<Attribute> attrs;
    for (auto i : indices_of(s, by)) attrs.push_back(s[i]);
    for (const auto &agg : aggs) attrs.push_back({agg.output_name(), agg_type(agg, s[s.require(agg.target)].type)});
    return Schema(std::move(attrs));
}

Schema join_schema(const Schema &a, std::string_view role_a, const Schema &b, std::string_view role_b)
{
    std::vector<Attribute> attrs;
    for (const auto &x : qualify(a, role_a)) attrs.push_back(x);
    for (const auto &x : qualify(b, role_b)) attrs.push_back(x);
    return Schema(std::move(attrs));
}

NestedRelation select(const NestedRelation &r, const Predicate &p, const ParamEnv &env)
{
    typecheck(p, r.schema());
    std::vector<Tuple> out;
    for (const auto &t : r.tuples())
        if (eval_predicate(p, t, r.schema(), env)) out.push_back(t);
    return NestedRelation(r.schema(), std::move(out), NestedRelation::trusted);
}

NestedRelation project(const NestedRelation &r, const std::vector<Binding> &bindings, const ParamEnv &env)
{
    Schema out_schema = project_schema(r.schema(), bindings);
    std::vector<Tuple> out;
    out.reserve(r.size());
    for (const auto &t : r.tuples()) {
        Tuple o;
        o.reserve(bindings.size());
        for (const auto &b : bindings) o.push_back(eval_expr(b.second, t, r.schema(), env));
        out.push_back(std::move(o));
    }
    return NestedRelation(std::move(out_schema), std::move(out), NestedRelation::trusted);
}

NestedRelation nest(const NestedRelation &r, const std::vector<std::string> &by)
{
    Schema out_schema = nest_schema(r.schema(), by);
    auto key = indices_of(r.schema(), by);
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < r.schema().size(); ++i)
        if (std::find(key.begin(), key.end(), i) == key.end()) rest.push_back(i);

    std::map<Tuple, std::vector<Value::Elements>> groups;
    for (const auto &t : r.tuples()) {
        auto &sets = groups[pick(t, key)];
        sets.resize(rest.size());
        for (std::size_t j = 0; j < rest.size(); ++j) sets[j].push_back(t[rest[j]]);
    }
    std::vector<Tuple> out;
    for (auto &[k, sets] : groups) {
        Tuple o = k;
        for (auto &s : sets) o.push_back(Value::set(std::move(s)));
        out.push_back(std::move(o));
    }
    return NestedRelation(std::move(out_schema), std::move(out), NestedRelation::trusted);
}

NestedRelation unnest(const NestedRelation &r, std::string_view attr)
{
    Schema out_schema = unnest_schema(r.schema(), attr);
    std::size_t idx = r.schema().require(attr);
    std::vector<Tuple> out;
    for (const auto &t : r.tuples()) {
        for (const auto &e : t[idx].elements()) {
            Tuple o = t;
            o[idx] = e;
            out.push_back(std::move(o));
        }
    }
    return NestedRelation(std::move(out_schema), std::move(out), NestedRelation::trusted);
}

NestedRelation grouping(const NestedRelation &r, const std::vector<std::string> &by,
                        const std::vector<AggregateSpec> &aggs)
{
    Schema out_schema = grouping_schema(r.schema(), by, aggs);
    auto key = indices_of(r.schema(), by);
    std::vector<std::size_t> targets;
    for (const auto &agg : aggs) targets.push_back(r.schema().require(agg.target));

    std::map<Tuple, std::vector<std::vector<Value>>> groups;
    for (const auto &t : r.tuples()) {
        auto &cols = groups[pick(t, key)];
        cols.resize(aggs.size());
        for (std::size_t j = 0; j < aggs.size(); ++j) cols[j].push_back(t[targets[j]]);
    }
    std::vector<Tuple> out;
    for (auto &[k, cols] : groups) {
        Tuple o = k;
        for (std::size_t j = 0; j < aggs.size(); ++j) o.push_back(aggregate(aggs[j], cols[j]));
        out.push_back(std::move(o));
    }
    return NestedRelation(std::move(out_schema), std::move(out), NestedRelation::trusted);
}

NestedRelation join(const NestedRelation &a, std::string_view role_a, const NestedRelation &b,
                    std::string_view role_b, const Predicate &p, const ParamEnv &env)
{
    Schema out_schema = join_schema(a.schema(), role_a, b.schema(), role_b);
    typecheck(p, out_schema);
    std::vector<Tuple> out;
    Tuple joined;
    for (const auto &ta : a.tuples()) {
        for (const auto &tb : b.tuples()) {
            joined.assign(ta.begin(), ta.end());
            joined.insert(joined.end(), tb.begin(), tb.end());
            if (eval_predicate(p, joined, out_schema, env)) out.push_back(joined);
        }
    }
    return NestedRelation(std::move(out_schema), std::move(out), NestedRelation::trusted);
}

NestedRelation set_union(const NestedRelation &a, const NestedRelation &b)
{
    require_same_schema(a, b, "union");
    std::vector<Tuple> out(a.tuples().begin(), a.tuples().end());
    out.insert(out.end(), b.tuples().begin(), b.tuples().end());
    return NestedRelation(a.schema(), std::move(out), NestedRelation::trusted);
}

NestedRelation set_difference(const NestedRelation &a, const NestedRelation &b)
{
    require_same_schema(a, b, "difference");
    std::vector<Tuple> out;
    for (const auto &t : a.tuples())
        if (!b.contains(t)) out.push_back(t);
    return NestedRelation(a.schema(), std::move(out), NestedRelation::trusted);
}

NestedRelation set_intersection(const NestedRelation &a, const NestedRelation &b)
{
    require_same_schema(a, b, "intersection");
    std::vector<Tuple> out;
    for (const auto &t : a.tuples())
        if (b.contains(t)) out.push_back(t);
    return NestedRelation(a.schema(), std::move(out), NestedRelation::trusted);
}

NestedRelation product(const NestedRelation &a, std::string_view role_a, const NestedRelation &b,
                       std::string_view role_b)
{
    Schema out_schema = join_schema(a.schema(), role_a, b.schema(), role_b);
    std::vector<Tuple> out;
    out.reserve(a.size() * b.size());
    for (const auto &ta : a.tuples()) {
        for (const auto &tb : b.tuples()) {
            Tuple o(ta.begin(), ta.end());
            o.insert(o.end(), tb.begin(), tb.end());
            out.push_back(std::move(o));
        }
    }
    return NestedRelation(std::move(out_schema), std::move(out), NestedRelation::trusted);
}

NestedRelation product(const NestedRelation &a, const NestedRelation &b) { return product(a, "", b, ""); }

NestedRelation powerset_macro(const NestedRelation &r, std::string_view set_attr, std::string_view out_attr)
{
    std::size_t idx = r.schema().require(set_attr);
    if (!r.schema()[idx].type.is_set())
        fail(Errc::KindMismatch, "powerset of scalar attribute '" + std::string(set_attr) + "'");
    std::vector<Binding> bindings;
    for (const auto &a : r.schema())
        if (a.name != set_attr) bindings.emplace_back(a.name, attr(a.name));
    bindings.emplace_back(std::string(out_attr), powerset(attr(set_attr)));
    return unnest(project(r, bindings), out_attr);
}

} // namespace nestmine
