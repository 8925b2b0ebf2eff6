#include "nestmine/io.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "nestmine/error.hpp"

namespace nestmine {

namespace {

std::vector<std::vector<std::string>> split_csv(std::string_view text, char delim)
{
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
            any = true;
        } else if (c == delim) {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) fail(Errc::ParseError, "unterminated quoted field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <class F>
bool parses(const std::vector<std::vector<std::string>> &rows, std::size_t col, F f)
{
    for (const auto &r : rows) {
        try {
            f(r[col]);
        } catch (const Error &) {
            return false;
        }
    }
    return true;
}

Type infer_column(const std::vector<std::vector<std::string>> &rows, std::size_t col)
{
    if (rows.empty()) return ScalarKind::String;
    auto is_int = [](const std::string &s) {
        if (s.empty()) fail(Errc::ParseError, "empty");
        std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
        if (i == s.size()) fail(Errc::ParseError, "sign only");
        for (; i < s.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) fail(Errc::ParseError, "not an int");
        parse_rational(s);
    };
    if (parses(rows, col, is_int)) return ScalarKind::Int;
    if (parses(rows, col, [](const std::string &s) { parse_rational(s); })) return ScalarKind::Rational;
    if (parses(rows, col, [](const std::string &s) { parse_date(s); })) return ScalarKind::Date;
    if (std::all_of(rows.begin(), rows.end(), [&](const auto &r) { return r[col].starts_with("{"); })) {
        Type elem = ScalarKind::String;
        for (ScalarKind k : {ScalarKind::Int, ScalarKind::Rational, ScalarKind::Date}) {
            Type t = Type::set_of(k);
            if (parses(rows, col, [&](const std::string &s) { parse_value(s, t); })) {
                elem = k;
                break;
            }
        }
        return Type::set_of(elem);
    }
    return ScalarKind::String;
}

Value parse_cell(const std::string &cell, const Type &t)
{
    if (!t.is_set() && t.scalar() == ScalarKind::String) return Value(cell);
    return parse_value(cell, t);
}

std::string csv_quote(const std::string &s, char delim)
{
    if (s.find_first_of(std::string{delim, '"', '\n', '\r'}) == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string cell_text(const Value &v) { return v.kind() == ValueKind::String ? v.as_string() : render(v); }

/// Display width in code points.
std::size_t width(const std::string &s)
{
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

} // namespace

NestedRelation parse_transactions_csv(std::string_view text, const DatasetConfig &cfg)
{
    auto rows = split_csv(text, cfg.delimiter);
    std::vector<std::string> names;
    std::vector<std::optional<Type>> declared;
    if (cfg.header) {
        if (rows.empty()) fail(Errc::ParseError, "row 0: missing header");
        for (const auto &h : rows.front()) {
            auto colon = h.find(':');
            if (colon != std::string::npos) {
                names.push_back(h.substr(0, colon));
                try {
                    declared.push_back(Type::parse(std::string_view(h).substr(colon + 1)));
                } catch (const Error &e) {
                    fail(Errc::ParseError, "row 0, column '" + names.back() + "': " + e.what());
                }
            } else {
                names.push_back(h);
                declared.emplace_back();
            }
        }
        rows.erase(rows.begin());
    } else {
        std::size_t arity = rows.empty() ? 0 : rows.front().size();
        for (std::size_t i = 0; i < arity; ++i) {
            names.push_back("c" + std::to_string(i + 1));
            declared.emplace_back();
        }
    }
    for (std::size_t i = 0; i < names.size(); ++i)
        if (auto it = cfg.types.find(names[i]); it != cfg.types.end()) declared[i] = it->second;
    for (const auto &need : {cfg.tid_column, cfg.item_column})
        if (std::find(names.begin(), names.end(), need) == names.end())
            fail(Errc::MissingColumn, "column '" + need + "' not found");

    for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r].size() != names.size())
            fail(Errc::ParseError, "row " + std::to_string(r + 1) + ": " + std::to_string(rows[r].size()) +
                                       " fields, header has " + std::to_string(names.size()));

    std::vector<Attribute> attrs;
    for (std::size_t i = 0; i < names.size(); ++i)
        attrs.push_back({names[i], declared[i] ? *declared[i] : infer_column(rows, i)});
    Schema schema(std::move(attrs));

    std::vector<Tuple> tuples;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Tuple t;
        for (std::size_t i = 0; i < names.size(); ++i) {
            try {
                t.push_back(parse_cell(rows[r][i], schema[i].type));
            } catch (const Error &e) {
                fail(Errc::ParseError, "row " + std::to_string(r + 1) + ", column '" + names[i] + "': " + e.what());
            }
        }
        tuples.push_back(std::move(t));
    }
    return make_relation(std::move(schema), std::move(tuples));
}

NestedRelation load_transactions_csv(const DatasetConfig &cfg)
{
    std::ifstream in(cfg.path, std::ios::binary);
    if (!in) fail(Errc::ParseError, "cannot read '" + cfg.path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_transactions_csv(ss.str(), cfg);
}

NestedRelation with_standard_columns(const NestedRelation &r, const DatasetConfig &cfg)
{
    std::vector<Attribute> attrs(r.schema().begin(), r.schema().end());
    for (auto &a : attrs) {
        if (a.name == cfg.tid_column) a.name = "tid";
        else if (a.name == cfg.item_column) a.name = "item";
        else if (a.name == "tid" || a.name == "item")
            fail(Errc::SchemaMismatch, "column " + a.name + " clashes with the renamed tid/item columns");
    }
    return NestedRelation(Schema(std::move(attrs)), std::vector<Tuple>(r.tuples().begin(), r.tuples().end()),
                          NestedRelation::trusted);
}

OutputFormat parse_output_format(std::string_view text)
{
    if (text == "table") return OutputFormat::Table;
    if (text == "csv") return OutputFormat::Csv;
    if (text == "json") return OutputFormat::Json;
    fail(Errc::InvalidValue, "unknown format '" + std::string(text) + "' (table, csv, json)");
}

std::string to_csv(const NestedRelation &r, char delimiter)
{
    std::string out;
    const Schema &s = r.schema();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += delimiter;
        out += csv_quote(s[i].name + ":" + s[i].type.to_string(), delimiter);
    }
    out += '\n';
    for (const auto &t : r.tuples()) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i) out += delimiter;
            out += csv_quote(cell_text(t[i]), delimiter);
        }
        out += '\n';
    }
    return out;
}

std::string to_table(const NestedRelation &r)
{
    const Schema &s = r.schema();
    std::vector<std::vector<std::string>> cells;
    std::vector<std::size_t> w(s.size(), 0);
    std::vector<std::string> head;
    for (std::size_t i = 0; i < s.size(); ++i) {
        head.push_back(s[i].name);
        w[i] = width(s[i].name);
    }
    for (const auto &t : r.tuples()) {
        std::vector<std::string> row;
        for (std::size_t i = 0; i < t.size(); ++i) {
            row.push_back(render_pretty(t[i]));
            w[i] = std::max(w[i], width(row.back()));
        }
        cells.push_back(std::move(row));
    }
    auto line = [&](const std::vector<std::string> &row) {
        std::string out;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += "  ";
            out += row[i];
            if (i + 1 < row.size()) out += std::string(w[i] - width(row[i]), ' ');
        }
        return out + "\n";
    };
    std::string out = line(head);
    std::vector<std::string> rule;
    for (auto x : w) rule.push_back(std::string(x, '-'));
    out += line(rule);
    for (const auto &row : cells) out += line(row);
    out += "(" + std::to_string(r.size()) + (r.size() == 1 ? " row)\n" : " rows)\n");
    return out;
}

nlohmann::json to_json(const Value &v)
{
    switch (v.kind()) {
    case ValueKind::Int: return v.as_int();
    case ValueKind::Rational:
        return {{"num", v.as_rational().numerator()}, {"den", v.as_rational().denominator()}};
    case ValueKind::String: return v.as_string();
    case ValueKind::Date: return to_string(v.as_date());
    case ValueKind::Set: {
        auto arr = nlohmann::json::array();
        for (const auto &e : v.elements()) arr.push_back(to_json(e));
        return arr;
    }
    }
    return nullptr;
}

nlohmann::json to_json(const NestedRelation &r)
{
    nlohmann::json schema = nlohmann::json::array();
    for (const auto &a : r.schema()) schema.push_back({{"name", a.name}, {"type", a.type.to_string()}});
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &t : r.tuples()) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto &v : t) row.push_back(to_json(v));
        rows.push_back(std::move(row));
    }
    return {{"schema", std::move(schema)}, {"rows", std::move(rows)}};
}

std::string format_relation(const NestedRelation &r, OutputFormat format)
{
    switch (format) {
    case OutputFormat::Table: return to_table(r);
    case OutputFormat::Csv: return to_csv(r);
    case OutputFormat::Json: return to_json(r).dump(2) + "\n";
    }
    return {};
}

NestedRelation synthetic_transactions(std::uint64_t seed, std::size_t n, std::size_t m, std::size_t w)
{
    if (m == 0 || w == 0 || w > m) fail(Errc::InvalidValue, "synthetic data needs 1 <= w <= m");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> width_dist(1, w);
    std::vector<std::size_t> pool(m);
    for (std::size_t i = 0; i < m; ++i) pool[i] = i;
    auto name = [&](std::size_t i) {
        std::string s = std::to_string(i);
        std::size_t digits = std::to_string(m - 1).size();
        return "i" + std::string(digits - s.size(), '0') + s;
    };
    std::vector<Tuple> rows;
    for (std::size_t t = 1; t <= n; ++t) {
        std::shuffle(pool.begin(), pool.end(), rng);
        std::size_t k = width_dist(rng);
        for (std::size_t j = 0; j < k; ++j) rows.push_back({Value(static_cast<std::int64_t>(t)), Value(name(pool[j]))});
    }
    return make_relation({{"tid", ScalarKind::Int}, {"item", ScalarKind::String}}, std::move(rows));
}

} // namespace nestmine
