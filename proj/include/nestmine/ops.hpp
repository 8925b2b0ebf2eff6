#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nestmine/expr.hpp"
#include "nestmine/relation.hpp"

namespace nestmine {

/// Reference implementations of the algebra. All operators are pure; outputs
/// are freshly built set-semantic relations.

using Binding = std::pair<std::string, Expr>;

NestedRelation select(const NestedRelation &r, const Predicate &p, const ParamEnv &env = {});
NestedRelation project(const NestedRelation &r, const std::vector<Binding> &bindings, const ParamEnv &env = {});

/// Each attribute outside `by` becomes its own set-valued attribute.
NestedRelation nest(const NestedRelation &r, const std::vector<std::string> &by);
/// An empty set yields no output tuple.
NestedRelation unnest(const NestedRelation &r, std::string_view attr);
NestedRelation grouping(const NestedRelation &r, const std::vector<std::string> &by,
                        const std::vector<AggregateSpec> &aggs);

/// Output attributes are named `<role>.<attr>`.
NestedRelation join(const NestedRelation &a, std::string_view role_a, const NestedRelation &b,
                    std::string_view role_b, const Predicate &p, const ParamEnv &env = {});

NestedRelation set_union(const NestedRelation &a, const NestedRelation &b);
NestedRelation set_difference(const NestedRelation &a, const NestedRelation &b);
NestedRelation set_intersection(const NestedRelation &a, const NestedRelation &b);
/// Unqualified product; attribute names must be disjoint.
NestedRelation product(const NestedRelation &a, const NestedRelation &b);
NestedRelation product(const NestedRelation &a, std::string_view role_a, const NestedRelation &b,
                       std::string_view role_b);

/// unnest(project(r, others + (out_attr, P(set_attr))), out_attr)
NestedRelation powerset_macro(const NestedRelation &r, std::string_view set_attr, std::string_view out_attr);

/// Attribute names prefixed with `<role>.`; empty role leaves them unchanged.
Schema qualify(const Schema &s, std::string_view role);

/// Output schema of the operators without evaluating them (throws like the operators).
Schema project_schema(const Schema &s, const std::vector<Binding> &bindings);
Schema nest_schema(const Schema &s, const std::vector<std::string> &by);
Schema unnest_schema(const Schema &s, std::string_view attr);
Schema grouping_schema(const Schema &s, const std::vector<std::string> &by, const std::vector<AggregateSpec> &aggs);
Schema join_schema(const Schema &a, std::string_view role_a, const Schema &b, std::string_view role_b);

} // namespace nestmine
