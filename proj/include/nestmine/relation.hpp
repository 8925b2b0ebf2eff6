#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nestmine/value.hpp"

namespace nestmine {

/// A set-semantic relation whose attributes may be set-valued. Tuples are kept
/// sorted under the total order on values and duplicate-free, so two relations
/// are equal exactly when their schemas and tuple vectors are equal.
/// Immutable after construction.
class NestedRelation
{
  public:
    struct trusted_t
    {};
    /// Skips the conformance check; callers guarantee every row fits `schema`.
    static constexpr trusted_t trusted{};

    NestedRelation() = default;
    explicit NestedRelation(Schema schema) : schema_(std::move(schema)) {}
    NestedRelation(Schema schema, std::vector<Tuple> rows, trusted_t);

    const Schema &schema() const noexcept { return schema_; }
    std::span<const Tuple> tuples() const noexcept { return tuples_; }
    std::size_t size() const noexcept { return tuples_.size(); }
    bool empty() const noexcept { return tuples_.empty(); }
    bool contains(const Tuple &t) const;

    /// Values of one attribute, in tuple order.
    std::vector<Value> column(std::string_view name) const;

    friend bool operator==(const NestedRelation &, const NestedRelation &) = default;

  private:
    Schema schema_;
    std::vector<Tuple> tuples_;
};

/// Validates every row against `schema`; duplicates collapse.
/// Throws SchemaMismatch naming the first offending row and attribute.
NestedRelation make_relation(Schema schema, std::vector<Tuple> rows);

bool relation_equal(const NestedRelation &a, const NestedRelation &b);

/// Header line of `name:type` fields, then one tuple per line; fields are
/// TAB-separated and every line ends with '\n'.
std::string canonical_render(const NestedRelation &r);

/// Inverse of canonical_render.
NestedRelation parse_canonical(std::string_view text);

} // namespace nestmine
