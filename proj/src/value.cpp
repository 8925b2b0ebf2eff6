#include "nestmine/value.hpp"

#include <algorithm>
#include <ostream>
#include <charconv>
#include <chrono>
#include <sstream>

#include "nestmine/error.hpp"

namespace nestmine {

std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::UnknownAttribute: return "UnknownAttribute";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::DivisionByZero: return "DivisionByZero";
    case Errc::InfeasibleConstraint: return "InfeasibleConstraint";
    case Errc::ResourceLimit: return "ResourceLimit";
    case Errc::MissingSubsetSupport: return "MissingSubsetSupport";
    case Errc::NoAlgorithmApplicable: return "NoAlgorithmApplicable";
    case Errc::EmptyPlanSet: return "EmptyPlanSet";
    case Errc::UnboundSource: return "UnboundSource";
    case Errc::NotMaterialized: return "NotMaterialized";
    case Errc::InvalidValue: return "InvalidValue";
    case Errc::SessionBusy: return "SessionBusy";
    case Errc::Cancelled: return "Cancelled";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnknownConstraint: return "UnknownConstraint";
    case Errc::ParseError: return "ParseError";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::InvalidTree: return "InvalidTree";
    }
    return "Unknown";
}

/*======================================================================================================================
 * Rationals and dates
 *====================================================================================================================*/

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::int64_t parse_int(std::string_view s, std::string_view what)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        fail(Errc::InvalidValue, "not an integer " + std::string(what) + ": '" + std::string(s) + "'");
    return out;
}

} // namespace

Rational parse_rational(std::string_view text)
{
    std::string_view s = trim(text);
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        auto num = parse_int(s.substr(0, slash), "numerator");
        auto den = parse_int(s.substr(slash + 1), "denominator");
        if (den == 0) fail(Errc::DivisionByZero, "rational with zero denominator: " + std::string(s));
        return Rational(num, den);
    }
    if (auto dot = s.find('.'); dot != std::string_view::npos) {
        bool negative = !s.empty() && s.front() == '-';
        std::string_view whole = s.substr(0, dot);
        std::string_view frac = s.substr(dot + 1);
        if (frac.size() > 17 || frac.empty())
            fail(Errc::InvalidValue, "unsupported decimal: '" + std::string(s) + "'");
        std::int64_t scale = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
        std::int64_t w = (whole.empty() || whole == "-" || whole == "+") ? 0 : parse_int(whole, "decimal");
        std::int64_t f = parse_int(frac, "decimal");
        if (f < 0) fail(Errc::InvalidValue, "malformed decimal: '" + std::string(s) + "'");
        std::int64_t magnitude = (w < 0 ? -w : w) * scale + f;
        return Rational(negative ? -magnitude : magnitude, scale);
    }
    return Rational(parse_int(s, "rational"));
}

std::string to_string(const Rational &r)
{
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

std::string to_decimal(const Rational &r, int digits)
{
    __int128 num = r.numerator();
    __int128 den = r.denominator();
    bool negative = num < 0;
    if (negative) num = -num;
    __int128 scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    __int128 scaled = (num * scale * 2 + den) / (den * 2); // round half up
    auto whole = static_cast<std::int64_t>(scaled / scale);
    auto frac = static_cast<std::int64_t>(scaled % scale);
    std::string out = (negative && scaled != 0 ? "-" : "") + std::to_string(whole);
    if (frac != 0) {
        std::string f = std::to_string(frac);
        f.insert(0, static_cast<std::size_t>(digits) - f.size(), '0');
        while (!f.empty() && f.back() == '0') f.pop_back();
        out += "." + f;
    }
    return out;
}

Date make_date(int year, unsigned month, unsigned day)
{
    std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok() || year < 0 || year > 9999)
        fail(Errc::InvalidValue, "invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) + "-" +
                                     std::to_string(day));
    return Date{year, static_cast<std::uint8_t>(month), static_cast<std::uint8_t>(day)};
}

Date parse_date(std::string_view text)
{
    std::string_view s = trim(text);
    auto split = [&](char sep) {
        std::vector<std::string_view> parts;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= s.size(); ++i) {
            if (i == s.size() || s[i] == sep) {
                parts.push_back(s.substr(start, i - start));
                start = i + 1;
            }
        }
        return parts;
    };
    if (s.find('-') != std::string_view::npos) {
        auto p = split('-');
        if (p.size() == 3)
            return make_date(static_cast<int>(parse_int(p[0], "year")), static_cast<unsigned>(parse_int(p[1], "month")),
                             static_cast<unsigned>(parse_int(p[2], "day")));
    } else if (s.find('/') != std::string_view::npos) {
        auto p = split('/');
        if (p.size() == 3)
            return make_date(static_cast<int>(parse_int(p[2], "year")), static_cast<unsigned>(parse_int(p[1], "month")),
                             static_cast<unsigned>(parse_int(p[0], "day")));
    }
    fail(Errc::InvalidValue, "unrecognized date '" + std::string(s) + "'");
}

std::string to_string(const Date &d)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", d.year, unsigned{d.month}, unsigned{d.day});
    return buf;
}

/*======================================================================================================================
 * Types
 *====================================================================================================================*/

std::string_view to_string(ScalarKind k)
{
    switch (k) {
    case ScalarKind::Int: return "int";
    case ScalarKind::Rational: return "rational";
    case ScalarKind::String: return "string";
    case ScalarKind::Date: return "date";
    }
    return "?";
}

Type Type::set_of(Type element)
{
    Type t;
    t.element_ = std::make_shared<const Type>(std::move(element));
    return t;
}

ScalarKind Type::scalar() const
{
    if (is_set()) fail(Errc::KindMismatch, "set type " + to_string() + " has no scalar kind");
    return scalar_;
}

const Type &Type::element() const
{
    if (!is_set()) fail(Errc::KindMismatch, "scalar type " + to_string() + " has no element type");
    return *element_;
}

int Type::depth() const noexcept { return is_set() ? 1 + element_->depth() : 0; }

std::string Type::to_string() const
{
    if (is_set()) return "set<" + element_->to_string() + ">";
    return std::string(nestmine::to_string(scalar_));
}

Type Type::parse(std::string_view text)
{
    std::string_view s = trim(text);
    if (s.starts_with("set<") && s.ends_with(">")) return set_of(parse(s.substr(4, s.size() - 5)));
    if (s == "int") return ScalarKind::Int;
    if (s == "rational") return ScalarKind::Rational;
    if (s == "string") return ScalarKind::String;
    if (s == "date") return ScalarKind::Date;
    fail(Errc::InvalidValue, "unknown type '" + std::string(s) + "'");
}

bool operator==(const Type &a, const Type &b)
{
    if (a.is_set() != b.is_set()) return false;
    if (a.is_set()) return *a.element_ == *b.element_;
    return a.scalar_ == b.scalar_;
}

/*======================================================================================================================
 * Values
 *====================================================================================================================*/

Value Value::set(Elements elements)
{
    if (!elements.empty()) {
        ValueKind k = elements.front().kind();
        for (const auto &e : elements)
            if (e.kind() != k) fail(Errc::KindMismatch, "set elements mix kinds");
    }
    std::sort(elements.begin(), elements.end());
    elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
    Value v;
    v.v_ = std::make_shared<const Elements>(std::move(elements));
    return v;
}

Value Value::sorted_set(Elements elements)
{
    Value v;
    v.v_ = std::make_shared<const Elements>(std::move(elements));
    return v;
}

std::int64_t Value::as_int() const
{
    if (auto p = std::get_if<std::int64_t>(&v_)) return *p;
    fail(Errc::KindMismatch, "value " + render(*this) + " is not an int");
}

const Rational &Value::as_rational() const
{
    if (auto p = std::get_if<Rational>(&v_)) return *p;
    fail(Errc::KindMismatch, "value " + render(*this) + " is not a rational");
}

Rational Value::as_number() const
{
    if (auto p = std::get_if<std::int64_t>(&v_)) return Rational(*p);
    return as_rational();
}

const std::string &Value::as_string() const
{
    if (auto p = std::get_if<std::string>(&v_)) return *p;
    fail(Errc::KindMismatch, "value " + render(*this) + " is not a string");
}

Date Value::as_date() const
{
    if (auto p = std::get_if<Date>(&v_)) return *p;
    fail(Errc::KindMismatch, "value " + render(*this) + " is not a date");
}

std::span<const Value> Value::elements() const
{
    if (auto p = std::get_if<std::shared_ptr<const Elements>>(&v_)) return **p;
    fail(Errc::KindMismatch, "value " + render(*this) + " is not a set");
}

bool Value::contains(const Value &element) const
{
    auto es = elements();
    return std::binary_search(es.begin(), es.end(), element);
}

std::strong_ordering operator<=>(const Value &a, const Value &b)
{
    if (a.v_.index() != b.v_.index()) return a.v_.index() <=> b.v_.index();
    switch (a.kind()) {
    case ValueKind::Int: return std::get<0>(a.v_) <=> std::get<0>(b.v_);
    case ValueKind::Rational: {
        const auto &x = std::get<1>(a.v_);
        const auto &y = std::get<1>(b.v_);
        if (x == y) return std::strong_ordering::equal;
        return x < y ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    case ValueKind::String: return std::get<2>(a.v_).compare(std::get<2>(b.v_)) <=> 0;
    case ValueKind::Date: return std::get<3>(a.v_) <=> std::get<3>(b.v_);
    case ValueKind::Set: {
        const auto &x = *std::get<4>(a.v_);
        const auto &y = *std::get<4>(b.v_);
        if (&x == &y) return std::strong_ordering::equal;
        return std::lexicographical_compare_three_way(x.begin(), x.end(), y.begin(), y.end());
    }
    }
    return std::strong_ordering::equal;
}

namespace {

void escape_into(std::string &out, const std::string &s)
{
    if (s.empty()) {
        out += "\"\"";
        return;
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        switch (c) {
        case ' ':
            if (i == 0 || i + 1 == s.size()) out += '\\';
            out += ' ';
            break;
        case '\\': out += "\\\\"; break;
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        case ',': out += "\\,"; break;
        case '{': out += "\\{"; break;
        case '}': out += "\\}"; break;
        case '"': out += "\\\""; break;
        default: out += c;
        }
    }
}

void render_into(std::string &out, const Value &v, bool pretty)
{
    switch (v.kind()) {
    case ValueKind::Int: out += std::to_string(v.as_int()); break;
    case ValueKind::Rational:
        out += to_string(v.as_rational());
        if (pretty && v.as_rational().denominator() != 1) out += " (" + to_decimal(v.as_rational()) + ")";
        break;
    case ValueKind::String: escape_into(out, v.as_string()); break;
    case ValueKind::Date: out += to_string(v.as_date()); break;
    case ValueKind::Set: {
        out += '{';
        bool first = true;
        for (const auto &e : v.elements()) {
            if (!first) out += ',';
            first = false;
            render_into(out, e, false);
        }
        out += '}';
        break;
    }
    }
}

} // namespace

std::string render(const Value &v)
{
    std::string out;
    render_into(out, v, false);
    return out;
}

std::string render_pretty(const Value &v)
{
    std::string out;
    render_into(out, v, true);
    return out;
}

bool conforms(const Value &v, const Type &t)
{
    if (t.is_set()) {
        if (!v.is_set()) return false;
        for (const auto &e : v.elements())
            if (!conforms(e, t.element())) return false;
        return true;
    }
    switch (t.scalar()) {
    case ScalarKind::Int: return v.kind() == ValueKind::Int;
    case ScalarKind::Rational: return v.kind() == ValueKind::Rational;
    case ScalarKind::String: return v.kind() == ValueKind::String;
    case ScalarKind::Date: return v.kind() == ValueKind::Date;
    }
    return false;
}

namespace {

std::string unescape(std::string_view s)
{
    if (s == "\"\"") return {};
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            char c = s[++i];
            out += c == 't' ? '\t' : c == 'n' ? '\n' : c;
        } else {
            out += s[i];
        }
    }
    return out;
}

} // namespace

Value parse_value(std::string_view text, const Type &t)
{
    if (t.is_set()) {
        std::string_view s = trim(text);
        if (s.size() < 2 || s.front() != '{' || s.back() != '}')
            fail(Errc::InvalidValue, "expected a set literal, got '" + std::string(s) + "'");
        s = s.substr(1, s.size() - 2);
        Value::Elements elems;
        if (s.empty()) return Value::set(std::move(elems));
        int depth = 0;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= s.size(); ++i) {
            if (i < s.size() && s[i] == '\\') {
                ++i;
                continue;
            }
            if (i == s.size() || (s[i] == ',' && depth == 0)) {
                std::size_t b = start, e = i;
                while (b < e && s[b] == ' ') ++b;
                auto escaped = [&](std::size_t pos) {
                    std::size_t k = 0;
                    while (pos > b + k && s[pos - 1 - k] == '\\') ++k;
                    return k % 2 == 1;
                };
                while (e > b && s[e - 1] == ' ' && !escaped(e - 1)) --e;
                elems.push_back(parse_value(s.substr(b, e - b), t.element()));
                start = i + 1;
            } else if (s[i] == '{') {
                ++depth;
            } else if (s[i] == '}') {
                --depth;
            }
        }
        return Value::set(std::move(elems));
    }
    switch (t.scalar()) {
    case ScalarKind::Int: return Value(parse_int(text, "value"));
    case ScalarKind::Rational: return Value(parse_rational(text));
    case ScalarKind::String: return Value(unescape(text));
    case ScalarKind::Date: return Value(parse_date(text));
    }
    fail(Errc::InvalidValue, "unreachable");
}

bool is_subset(const Value &a, const Value &b)
{
    auto x = a.elements();
    auto y = b.elements();
    return std::includes(y.begin(), y.end(), x.begin(), x.end());
}

Value set_difference(const Value &a, const Value &b)
{
    auto x = a.elements();
    auto y = b.elements();
    Value::Elements out;
    std::set_difference(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
    return Value::set(std::move(out));
}

Value set_union(const Value &a, const Value &b)
{
    auto x = a.elements();
    auto y = b.elements();
    Value::Elements out;
    std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
    return Value::set(std::move(out));
}

Value set_intersection(const Value &a, const Value &b)
{
    auto x = a.elements();
    auto y = b.elements();
    Value::Elements out;
    std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
    return Value::set(std::move(out));
}

/*======================================================================================================================
 * Schema
 *====================================================================================================================*/

Schema::Schema(std::vector<Attribute> attributes) : attributes_(std::move(attributes))
{
    for (std::size_t i = 0; i < attributes_.size(); ++i)
        for (std::size_t j = i + 1; j < attributes_.size(); ++j)
            if (attributes_[i].name == attributes_[j].name)
                fail(Errc::SchemaMismatch, "duplicate attribute name '" + attributes_[i].name + "'");
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const
{
    for (std::size_t i = 0; i < attributes_.size(); ++i)
        if (attributes_[i].name == name) return i;
    return std::nullopt;
}

std::size_t Schema::require(std::string_view name) const
{
    if (auto i = index_of(name)) return *i;
    fail(Errc::UnknownAttribute, "attribute '" + std::string(name) + "' not in schema " + to_string());
}

std::string Schema::to_string() const
{
    std::string out = "(";
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
        if (i) out += ", ";
        out += attributes_[i].name + ":" + attributes_[i].type.to_string();
    }
    return out + ")";
}

std::ostream &operator<<(std::ostream &os, const Value &v) { return os << render(v); }

} // namespace nestmine
