#include "nestmine/relation.hpp"

#include <algorithm>

#include "nestmine/error.hpp"

namespace nestmine {

NestedRelation::NestedRelation(Schema schema, std::vector<Tuple> rows, trusted_t)
    : schema_(std::move(schema)), tuples_(std::move(rows))
{
    std::sort(tuples_.begin(), tuples_.end());
    tuples_.erase(std::unique(tuples_.begin(), tuples_.end()), tuples_.end());
}

bool NestedRelation::contains(const Tuple &t) const { return std::binary_search(tuples_.begin(), tuples_.end(), t); }

std::vector<Value> NestedRelation::column(std::string_view name) const
{
    std::size_t i = schema_.require(name);
    std::vector<Value> out;
    out.reserve(tuples_.size());
    for (const auto &t : tuples_) out.push_back(t[i]);
    return out;
}

NestedRelation make_relation(Schema schema, std::vector<Tuple> rows)
{
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != schema.size())
            fail(Errc::SchemaMismatch, "row " + std::to_string(r) + " has arity " + std::to_string(rows[r].size()) +
                                           ", schema " + schema.to_string() + " expects " +
                                           std::to_string(schema.size()));
        for (std::size_t a = 0; a < schema.size(); ++a)
            if (!conforms(rows[r][a], schema[a].type))
                fail(Errc::SchemaMismatch, "row " + std::to_string(r) + ", attribute '" + schema[a].name + "': value " +
                                               render(rows[r][a]) + " is not a " + schema[a].type.to_string());
    }
    return NestedRelation(std::move(schema), std::move(rows), NestedRelation::trusted);
}

bool relation_equal(const NestedRelation &a, const NestedRelation &b) { return a == b; }

std::string canonical_render(const NestedRelation &r)
{
    std::string out;
    const Schema &s = r.schema();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += '\t';
        out += s[i].name + ":" + s[i].type.to_string();
    }
    out += '\n';
    for (const auto &t : r.tuples()) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i) out += '\t';
            out += render(t[i]);
        }
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i < line.size() && line[i] == '\\') {
            ++i;
            continue;
        }
        if (i == line.size() || line[i] == '\t') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

} // namespace

NestedRelation parse_canonical(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    if (lines.empty()) fail(Errc::ParseError, "canonical relation text has no header");
    std::vector<Attribute> attrs;
    if (!lines.front().empty()) {
        for (auto field : split_fields(lines.front())) {
            auto colon = field.find(':');
            if (colon == std::string_view::npos) fail(Errc::ParseError, "header field without type");
            attrs.push_back({std::string(field.substr(0, colon)), Type::parse(field.substr(colon + 1))});
        }
    }
    Schema schema(std::move(attrs));
    std::vector<Tuple> rows;
    for (std::size_t l = 1; l < lines.size(); ++l) {
        auto fields = split_fields(lines[l]);
        if (schema.size() == 0 && lines[l].empty()) {
            rows.emplace_back();
            continue;
        }
        if (fields.size() != schema.size())
            fail(Errc::ParseError, "line " + std::to_string(l + 1) + " has " + std::to_string(fields.size()) +
                                       " fields, expected " + std::to_string(schema.size()));
        Tuple t;
        for (std::size_t i = 0; i < fields.size(); ++i) t.push_back(parse_value(fields[i], schema[i].type));
        rows.push_back(std::move(t));
    }
    return make_relation(std::move(schema), std::move(rows));
}

} // namespace nestmine
