#include "nestmine/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace nestmine {

namespace {

std::string join(const std::vector<std::string> &parts, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? std::string(sep) : "") + parts[i];
    return out;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    for (auto &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

/*----- lexer ----------------------------------------------------------------------------------------------------------*/

enum class Tok : std::uint8_t { Ident, Int, Decimal, String, Sym, End };

struct Token
{
    Tok kind = Tok::End;
    std::string text; ///< symbols are normalized to their ASCII spelling
    std::size_t line = 1, column = 1;
};

std::string describe(const Token &t)
{
    switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::String: return "'" + t.text + "'";
    default: return "'" + t.text + "'";
    }
}

struct Glyph
{
    std::string_view utf8;
    std::string_view ascii;
};

constexpr Glyph kGlyphs[] = {
    {"⊂", "subset"}, {"⊆", "subseteq"}, {"∈", "in"}, {"∉", "notin"}, {"≤", "<="}, {"≥", ">="}, {"∧", "and"},
};

std::vector<Token> lex(std::string_view src)
{
    std::vector<Token> out;
    std::size_t i = 0, line = 1, col = 1;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i) {
            unsigned char c = static_cast<unsigned char>(src[i]);
            if (c == '\n') {
                ++line;
                col = 1;
            } else if ((c & 0xC0) != 0x80) {
                ++col;
            }
        }
    };
    auto error = [&](std::string found) -> SyntaxErrorAt { return SyntaxErrorAt(line, col, {"a token"}, found); };

    while (i < src.size()) {
        unsigned char c = static_cast<unsigned char>(src[i]);
        if (std::isspace(c)) {
            advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        std::string_view rest = src.substr(i);
        if (std::isalpha(c) || c == '_') {
            std::size_t n = 1;
            while (n < rest.size() && (std::isalnum(static_cast<unsigned char>(rest[n])) || rest[n] == '_')) ++n;
            t.kind = Tok::Ident;
            t.text = rest.substr(0, n);
            advance(n);
        } else if (std::isdigit(c)) {
            std::size_t n = 1;
            while (n < rest.size() && std::isdigit(static_cast<unsigned char>(rest[n]))) ++n;
            t.kind = Tok::Int;
            if (n + 1 < rest.size() && rest[n] == '.' && std::isdigit(static_cast<unsigned char>(rest[n + 1]))) {
                ++n;
                while (n < rest.size() && std::isdigit(static_cast<unsigned char>(rest[n]))) ++n;
                t.kind = Tok::Decimal;
            }
            t.text = rest.substr(0, n);
            advance(n);
        } else if (c == '\'' || c == '"') {
            auto close = rest.find(static_cast<char>(c), 1);
            if (close == std::string_view::npos) throw error("unterminated string");
            t.kind = Tok::String;
            t.text = rest.substr(1, close - 1);
            advance(close + 1);
        } else if (rest.starts_with("..") || rest.starts_with("<=") || rest.starts_with(">=")) {
            t.kind = Tok::Sym;
            t.text = rest.substr(0, 2);
            advance(2);
        } else if (std::string_view("(){},|:*=<>/").find(static_cast<char>(c)) != std::string_view::npos) {
            t.kind = Tok::Sym;
            t.text = rest.substr(0, 1);
            advance(1);
        } else {
            auto g = std::find_if(std::begin(kGlyphs), std::end(kGlyphs),
                                  [&](const Glyph &g) { return rest.starts_with(g.utf8); });
            if (g == std::end(kGlyphs)) {
                std::string found = std::isprint(c) ? std::string(1, static_cast<char>(c)) : "byte " + std::to_string(c);
                throw error("'" + found + "'");
            }
            t.kind = std::isalpha(static_cast<unsigned char>(g->ascii[0])) ? Tok::Ident : Tok::Sym;
            t.text = g->ascii;
            advance(g->utf8.size());
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.line = line;
    end.column = col;
    out.push_back(end);
    return out;
}

/*----- parser ---------------------------------------------------------------------------------------------------------*/

class Parser
{
  public:
    explicit Parser(std::string_view src) : toks_(lex(src)) {}

    const Token &peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
    bool at_end() const { return peek().kind == Tok::End; }
    const Token &next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

    [[noreturn]] void expected(std::vector<std::string> what) const
    {
        throw SyntaxErrorAt(peek().line, peek().column, std::move(what), describe(peek()));
    }

    bool is_kw(std::string_view kw, std::size_t ahead = 0) const
    {
        return peek(ahead).kind == Tok::Ident && lower(peek(ahead).text) == lower(kw);
    }
    bool is_sym(std::string_view s, std::size_t ahead = 0) const
    {
        return peek(ahead).kind == Tok::Sym && peek(ahead).text == s;
    }

    bool accept_kw(std::string_view kw)
    {
        if (!is_kw(kw)) return false;
        ++pos_;
        return true;
    }
    bool accept_sym(std::string_view s)
    {
        if (!is_sym(s)) return false;
        ++pos_;
        return true;
    }
    void kw(std::string_view k)
    {
        if (!accept_kw(k)) expected({std::string(k)});
    }
    void sym(std::string_view s)
    {
        if (!accept_sym(s)) expected({"'" + std::string(s) + "'"});
    }

    std::string ident(std::string_view what = "identifier")
    {
        if (peek().kind != Tok::Ident) expected({std::string(what)});
        return toks_[pos_++].text;
    }

    std::int64_t integer()
    {
        if (peek().kind != Tok::Int) expected({"integer"});
        const auto &t = peek();
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{}) throw SyntaxErrorAt(t.line, t.column, {"integer that fits 64 bits"}, describe(t));
        ++pos_;
        return v;
    }

    Rational number()
    {
        const auto &t = peek();
        if (t.kind == Tok::Decimal) {
            ++pos_;
            if (t.text.size() > 18) throw SyntaxErrorAt(t.line, t.column, {"shorter decimal"}, describe(t));
            return parse_rational(t.text);
        }
        std::int64_t num = integer();
        if (!accept_sym("/")) return Rational(num);
        const auto &d = peek();
        std::int64_t den = integer();
        if (den == 0) throw SyntaxErrorAt(d.line, d.column, {"non-zero denominator"}, describe(d));
        return Rational(num, den);
    }

    CardRange range()
    {
        CardRange r;
        r.lo = static_cast<std::size_t>(integer());
        sym("..");
        if (accept_kw("n")) return r;
        if (peek().kind != Tok::Int) expected({"integer", "n"});
        r.hi = static_cast<std::size_t>(integer());
        return r;
    }

    CmpOp cmp(bool strict_allowed)
    {
        if (accept_sym("<=")) return CmpOp::Le;
        if (accept_sym(">=")) return CmpOp::Ge;
        if (accept_sym("=")) return CmpOp::Eq;
        if (strict_allowed) {
            if (accept_sym("<")) return CmpOp::Lt;
            if (accept_sym(">")) return CmpOp::Gt;
            expected({"'='", "'<='", "'>='", "'<'", "'>'"});
        }
        expected({"'='", "'<='", "'>='"});
    }

    void end()
    {
        if (!at_end()) expected({"end of input"});
    }

  private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

Value item_value(const Token &t)
{
    if (t.kind == Tok::Int) {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{}) throw SyntaxErrorAt(t.line, t.column, {"item"}, describe(t));
        return Value(v);
    }
    return Value(t.text);
}

bool is_item_token(const Token &t) { return t.kind == Tok::String || t.kind == Tok::Int || t.kind == Tok::Ident; }

/*----- rendering helpers ----------------------------------------------------------------------------------------------*/

std::string render_number(const Rational &r)
{
    std::int64_t den = r.denominator();
    int twos = 0, fives = 0;
    while (den % 2 == 0) den /= 2, ++twos;
    while (den % 5 == 0) den /= 5, ++fives;
    int digits = std::max(twos, fives);
    if (den != 1 || digits == 0 || digits > 17) return to_string(r);
    std::int64_t scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    std::int64_t scaled = r.numerator() * (scale / r.denominator());
    bool negative = scaled < 0;
    std::uint64_t mag = negative ? -static_cast<std::uint64_t>(scaled) : static_cast<std::uint64_t>(scaled);
    std::string frac = std::to_string(mag % static_cast<std::uint64_t>(scale));
    frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
    return (negative ? "-" : "") + std::to_string(mag / static_cast<std::uint64_t>(scale)) + "." + frac;
}

std::string render_range(const CardRange &r)
{
    return std::to_string(r.lo) + ".." + (r.hi ? std::to_string(*r.hi) : std::string("n"));
}

std::string render_item(const Value &v)
{
    if (v.kind() == ValueKind::Int) return std::to_string(v.as_int());
    const std::string &s = v.as_string();
    return s.find('\'') == std::string::npos ? "'" + s + "'" : "\"" + s + "\"";
}

std::string cmp_text(CmpOp op, SyntaxStyle style) { return std::string(to_string(op, style)); }

Rational json_rational(const nlohmann::json &j, std::string_view key)
{
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_number()) return parse_rational(j.dump());
    fail(Errc::InvalidValue, std::string(key) + " must be a number or a \"p/q\" string");
}

Value json_item(const nlohmann::json &j)
{
    if (j.is_string()) return Value(j.get<std::string>());
    if (j.is_number_integer()) return Value(j.get<std::int64_t>());
    fail(Errc::InvalidValue, "items must be strings or integers");
}

std::vector<Value> json_items(const nlohmann::json &j, std::string_view key)
{
    if (!j.is_array()) fail(Errc::InvalidValue, std::string(key) + " must be an array");
    std::vector<Value> out;
    for (const auto &e : j) out.push_back(json_item(e));
    return out;
}

CmpOp json_cmp(const std::string &s)
{
    if (s == "<=" || s == "≤") return CmpOp::Le;
    if (s == ">=" || s == "≥") return CmpOp::Ge;
    if (s == "=") return CmpOp::Eq;
    fail(Errc::InvalidValue, "width op must be <=, >= or =, got '" + s + "'");
}

CardRange json_range(const nlohmann::json &j, CardRange r)
{
    if (j.contains("lo")) {
        if (!j["lo"].is_number_integer() || j["lo"].get<std::int64_t>() < 0)
            fail(Errc::InvalidValue, "lo must be a non-negative integer");
        r.lo = j["lo"].get<std::size_t>();
    }
    if (j.contains("hi")) {
        if (j["hi"].is_null()) r.hi.reset();
        else if (!j["hi"].is_number_integer() || j["hi"].get<std::int64_t>() < 0)
            fail(Errc::InvalidValue, "hi must be a non-negative integer or null");
        else r.hi = j["hi"].get<std::size_t>();
    }
    return r;
}

void check_keys(const nlohmann::json &j, std::initializer_list<std::string_view> allowed, std::string_view where)
{
    if (!j.is_object()) fail(Errc::InvalidValue, std::string(where) + " must be an object");
    for (const auto &[k, v] : j.items())
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            fail(Errc::InvalidValue, "unknown key '" + k + "' in " + std::string(where));
}

nlohmann::json range_json(const CardRange &r)
{
    return {{"lo", r.lo}, {"hi", r.hi ? nlohmann::json(*r.hi) : nlohmann::json(nullptr)}};
}

nlohmann::json items_json(const std::vector<Value> &items)
{
    auto out = nlohmann::json::array();
    for (const auto &v : items) out.push_back(v.kind() == ValueKind::Int ? nlohmann::json(v.as_int()) : nlohmann::json(v.as_string()));
    return out;
}

} // namespace

SyntaxErrorAt::SyntaxErrorAt(std::size_t line, std::size_t column, std::vector<std::string> expected, std::string found)
    : Error(Errc::SyntaxError, std::to_string(line) + ":" + std::to_string(column) + ": expected " +
                                   join(expected, " or ") + ", found " + found),
      line_(line), column_(column), expected_(std::move(expected)), found_(std::move(found))
{}

/*----- MINE RULE ------------------------------------------------------------------------------------------------------*/

MineRuleAst parse_mine_rule(std::string_view text)
{
    Parser p(text);
    MineRuleAst ast;
    p.kw("MINE");
    p.kw("RULE");
    ast.name = p.ident("rule set name");
    p.kw("AS");
    p.kw("SELECT");
    p.kw("DISTINCT");
    ast.body = p.range();
    ast.body_attr = p.ident("attribute");
    p.kw("AS");
    p.kw("BODY");
    p.sym(",");
    ast.head = p.range();
    ast.head_attr = p.ident("attribute");
    p.kw("AS");
    p.kw("HEAD");
    if (p.accept_sym(",")) {
        if (p.accept_kw("SUPPORT")) {
            if (p.accept_sym(",")) p.kw("CONFIDENCE");
        } else if (!p.accept_kw("CONFIDENCE")) {
            p.expected({"SUPPORT", "CONFIDENCE"});
        }
    }
    p.kw("FROM");
    ast.source = p.ident("relation name");
    p.kw("GROUP");
    p.kw("BY");
    ast.group_by = p.ident("attribute");
    if (p.accept_kw("HAVING")) {
        p.kw("COUNT");
        p.sym("(");
        p.sym("*");
        p.sym(")");
        WidthFilter w;
        w.op = p.cmp(false);
        w.k = p.integer();
        ast.having = w;
    }
    p.kw("EXTRACTING");
    p.kw("RULES");
    p.kw("WITH");
    p.kw("SUPPORT");
    p.sym(":");
    ast.support = p.number();
    p.sym(",");
    p.kw("CONFIDENCE");
    p.sym(":");
    ast.confidence = p.number();
    p.end();
    return ast;
}

std::string render(const MineRuleAst &a)
{
    std::string out = "MINE RULE " + a.name + " AS\n";
    out += "SELECT DISTINCT " + render_range(a.body) + " " + a.body_attr + " AS BODY, " + render_range(a.head) + " " +
           a.head_attr + " AS HEAD, SUPPORT, CONFIDENCE\n";
    out += "FROM " + a.source + "\n";
    out += "GROUP BY " + a.group_by + "\n";
    if (a.having) out += "HAVING COUNT(*) " + cmp_text(a.having->op, {}) + " " + std::to_string(a.having->k) + "\n";
    out += "EXTRACTING RULES WITH SUPPORT: " + render_number(a.support) + ", CONFIDENCE: " +
           render_number(a.confidence) + "\n";
    return out;
}

/*----- CAQ ------------------------------------------------------------------------------------------------------------*/

CaqAst parse_caq(std::string_view text)
{
    Parser p(text);
    CaqAst ast;
    p.sym("{");
    p.sym("(");
    ast.s1 = p.ident("pair variable");
    p.sym(",");
    ast.s2 = p.ident("pair variable");
    if (ast.s1 == ast.s2) p.expected({"a second variable distinct from " + ast.s1});
    p.sym(")");
    p.sym("|");

    auto variable = [&]() {
        if (p.peek().kind == Tok::Ident && p.peek().text == ast.s1) return p.ident(), 0;
        if (p.peek().kind == Tok::Ident && p.peek().text == ast.s2) return p.ident(), 1;
        p.expected({ast.s1, ast.s2});
    };

    do {
        CaqConstraint c;
        if (p.peek().kind == Tok::Ident && p.is_sym("(", 1)) {
            std::string fn = p.ident();
            if (lower(fn) != "count") fail(Errc::UnknownConstraint, "unknown constraint '" + fn + "' (count)");
            p.sym("(");
            c.var = variable();
            p.sym(")");
            c.kind = CaqConstraint::Kind::Card;
            c.op = p.cmp(true);
            c.k = p.integer();
        } else if (p.peek().kind == Tok::Ident && (p.peek().text == ast.s1 || p.peek().text == ast.s2) &&
                   (p.is_kw("subset", 1) || p.is_kw("subseteq", 1))) {
            c.var = variable();
            c.op = p.accept_kw("subset") ? CmpOp::Subset : (p.kw("subseteq"), CmpOp::SubsetEq);
            if (p.accept_kw("itemset")) {
                c.kind = CaqConstraint::Kind::Itemset;
            } else {
                c.kind = CaqConstraint::Kind::SubsetOf;
                p.sym("{");
                Value::Elements items;
                if (!p.is_sym("}")) {
                    do {
                        if (!is_item_token(p.peek())) p.expected({"item"});
                        items.push_back(item_value(p.next()));
                    } while (p.accept_sym(","));
                }
                p.sym("}");
                c.items = Value::set(std::move(items));
            }
        } else if (is_item_token(p.peek()) && (p.is_kw("in", 1) || p.is_kw("notin", 1))) {
            c.items = item_value(p.next());
            c.kind = p.accept_kw("in") ? CaqConstraint::Kind::Contains : (p.kw("notin"), CaqConstraint::Kind::NotContains);
            c.op = c.kind == CaqConstraint::Kind::Contains ? CmpOp::In : CmpOp::NotIn;
            c.var = variable();
        } else {
            p.expected({"count(...)", ast.s1 + " subset ...", "item in " + ast.s1});
        }
        ast.constraints.push_back(std::move(c));
    } while (p.accept_kw("and"));
    p.sym("}");

    if (p.accept_kw("FROM")) ast.source = p.ident("relation name");
    if (p.accept_kw("WITH")) {
        if (p.accept_kw("SUPPORT")) {
            p.sym(":");
            ast.support = p.number();
            if (p.accept_sym(",")) {
                p.kw("CONFIDENCE");
                p.sym(":");
                ast.confidence = p.number();
            }
        } else {
            p.kw("CONFIDENCE");
            p.sym(":");
            ast.confidence = p.number();
        }
    }
    p.end();
    return ast;
}

std::string render(const CaqAst &a, SyntaxStyle style)
{
    std::string out = "{(" + a.s1 + ", " + a.s2 + ") | ";
    std::vector<std::string> parts;
    for (const auto &c : a.constraints) {
        const std::string &v = c.var == 0 ? a.s1 : a.s2;
        switch (c.kind) {
        case CaqConstraint::Kind::Itemset: parts.push_back(v + " " + cmp_text(c.op, style) + " itemset"); break;
        case CaqConstraint::Kind::Card:
            parts.push_back("count(" + v + ") " + cmp_text(c.op, style) + " " + std::to_string(c.k));
            break;
        case CaqConstraint::Kind::SubsetOf: {
            std::vector<std::string> items;
            for (const auto &i : c.items.elements()) items.push_back(render_item(i));
            parts.push_back(v + " " + cmp_text(c.op, style) + " {" + join(items, ", ") + "}");
            break;
        }
        case CaqConstraint::Kind::Contains:
        case CaqConstraint::Kind::NotContains:
            parts.push_back(render_item(c.items) + " " + cmp_text(c.op, style) + " " + v);
            break;
        }
    }
    out += join(parts, style.glyphs ? " ∧ " : " and ") + "}\n";
    if (a.source) out += "FROM " + *a.source + "\n";
    if (a.support && a.confidence)
        out += "WITH SUPPORT: " + render_number(*a.support) + ", CONFIDENCE: " + render_number(*a.confidence) + "\n";
    else if (a.support) out += "WITH SUPPORT: " + render_number(*a.support) + "\n";
    else if (a.confidence) out += "WITH CONFIDENCE: " + render_number(*a.confidence) + "\n";
    return out;
}

/*----- compile --------------------------------------------------------------------------------------------------------*/

QuerySpec spec_of(const MineRuleAst &a)
{
    if (a.body_attr != a.head_attr)
        fail(Errc::InvalidValue, "BODY and HEAD range over different attributes (" + a.body_attr + ", " + a.head_attr + ")");
    QuerySpec s;
    s.kind = TemplateKind::MineRule;
    s.source = a.source;
    s.source_given = true;
    s.params.minsup = a.support;
    s.params.minconf = a.confidence;
    s.mine_rule.width = a.having;
    s.mine_rule.body = a.body;
    s.mine_rule.head = a.head;
    return s;
}

QuerySpec spec_of(const CaqAst &a)
{
    QuerySpec s;
    s.kind = TemplateKind::CAQ;
    if (a.source) {
        s.source = *a.source;
        s.source_given = true;
    }
    if (a.support) s.params.minsup = *a.support;
    if (a.confidence) s.params.minconf = *a.confidence;

    struct Bounds
    {
        std::int64_t lo = 1;
        std::optional<std::int64_t> hi;
        void cap(std::int64_t h) { hi = hi ? std::min(*hi, h) : h; }
    };
    Bounds bounds[2];
    SetConstraints *sides[2] = {&s.caq.body, &s.caq.head};
    for (const auto &c : a.constraints) {
        SetConstraints &side = *sides[c.var];
        Bounds &b = bounds[c.var];
        switch (c.kind) {
        case CaqConstraint::Kind::Itemset: break;
        case CaqConstraint::Kind::Card:
            switch (c.op) {
            case CmpOp::Eq: b.lo = std::max(b.lo, c.k), b.cap(c.k); break;
            case CmpOp::Le: b.cap(c.k); break;
            case CmpOp::Lt: b.cap(c.k - 1); break;
            case CmpOp::Ge: b.lo = std::max(b.lo, c.k); break;
            case CmpOp::Gt: b.lo = std::max(b.lo, c.k + 1); break;
            default: fail(Errc::InvalidValue, "unsupported cardinality comparison");
            }
            break;
        case CaqConstraint::Kind::SubsetOf: {
            Value set = c.items;
            if (side.subset_of) {
                Value::Elements both;
                for (const auto &i : set.elements())
                    if (side.subset_of->contains(i)) both.push_back(i);
                set = Value::set(std::move(both));
            }
            side.subset_of = set;
            if (c.op == CmpOp::Subset) b.cap(static_cast<std::int64_t>(c.items.elements().size()) - 1);
            break;
        }
        case CaqConstraint::Kind::Contains:
            if (std::find(side.must_contain.begin(), side.must_contain.end(), c.items) == side.must_contain.end())
                side.must_contain.push_back(c.items);
            break;
        case CaqConstraint::Kind::NotContains:
            if (std::find(side.must_not_contain.begin(), side.must_not_contain.end(), c.items) ==
                side.must_not_contain.end())
                side.must_not_contain.push_back(c.items);
            break;
        }
    }
    for (int v = 0; v < 2; ++v) {
        const Bounds &b = bounds[v];
        const std::string &name = v == 0 ? a.s1 : a.s2;
        if (b.hi && (*b.hi < 1 || *b.hi < b.lo))
            fail(Errc::InfeasibleConstraint, "no cardinality satisfies the constraints on " + name);
        sides[v]->card.lo = static_cast<std::size_t>(b.lo);
        if (b.hi) sides[v]->card.hi = static_cast<std::size_t>(*b.hi);
        std::sort(sides[v]->must_contain.begin(), sides[v]->must_contain.end());
        std::sort(sides[v]->must_not_contain.begin(), sides[v]->must_not_contain.end());
    }
    return s;
}

QuerySpec apply_overrides(QuerySpec spec, const QueryOverrides &o)
{
    if (o.minsup) spec.params.minsup = *o.minsup;
    if (o.minconf) spec.params.minconf = *o.minconf;
    if (o.mode) spec.params.threshold_mode = *o.mode;
    if (o.source) {
        spec.source = *o.source;
        spec.source_given = true;
    }
    return spec;
}

QueryTree build_tree(const QuerySpec &spec)
{
    spec.params.validate();
    switch (spec.kind) {
    case TemplateKind::Classic: return build_classic_tree(spec.source, spec.params);
    case TemplateKind::MineRule: return build_mine_rule_tree(spec.source, spec.params, spec.mine_rule);
    case TemplateKind::CAQ: return build_caq_tree(spec.source, spec.caq, spec.params);
    case TemplateKind::Custom: break;
    }
    fail(Errc::InvalidValue, "custom trees have no query spec");
}

QueryTree compile(const MineRuleAst &ast, const QueryOverrides &o) { return build_tree(apply_overrides(spec_of(ast), o)); }
QueryTree compile(const CaqAst &ast, const QueryOverrides &o) { return build_tree(apply_overrides(spec_of(ast), o)); }

QuerySpec parse_query(std::string_view text)
{
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{') return spec_of(parse_caq(text));
    return spec_of(parse_mine_rule(text));
}

QuerySpec query_from_json(const nlohmann::json &j)
{
    QuerySpec s;
    if (!j.is_object()) fail(Errc::InvalidValue, "query spec must be a JSON object");
    if (j.contains("query")) {
        check_keys(j, {"query", "source", "minsup", "minconf", "threshold_mode"}, "query spec");
        if (!j["query"].is_string()) fail(Errc::InvalidValue, "query must be a string");
        s = parse_query(j["query"].get<std::string>());
    } else {
        check_keys(j, {"template", "source", "minsup", "minconf", "threshold_mode", "width", "body", "head", "width_pruning"},
                   "query spec");
        if (j.contains("template")) {
            if (!j["template"].is_string()) fail(Errc::InvalidValue, "template must be a string");
            s.kind = parse_template_kind(j["template"].get<std::string>());
            if (s.kind == TemplateKind::Custom) fail(Errc::InvalidValue, "custom trees have no query spec");
        }
        if (s.kind == TemplateKind::MineRule) {
            s.mine_rule.body = {1, std::nullopt};
            s.mine_rule.head = {1, 1};
        }
        if (j.contains("width")) {
            if (s.kind != TemplateKind::MineRule) fail(Errc::InvalidValue, "width applies to the minerule template");
            const auto &w = j["width"];
            if (!w.is_null()) {
                check_keys(w, {"op", "k"}, "width");
                if (!w.contains("op") || !w["op"].is_string() || !w.contains("k") || !w["k"].is_number_integer())
                    fail(Errc::InvalidValue, "width needs a string op and an integer k");
                s.mine_rule.width = WidthFilter{json_cmp(w["op"].get<std::string>()), w["k"].get<std::int64_t>()};
            }
        }
        for (const char *side : {"body", "head"}) {
            if (!j.contains(side)) continue;
            const auto &b = j[side];
            if (s.kind == TemplateKind::MineRule) {
                check_keys(b, {"lo", "hi"}, side);
                CardRange &r = std::string_view(side) == "body" ? s.mine_rule.body : s.mine_rule.head;
                r = json_range(b, r);
            } else if (s.kind == TemplateKind::CAQ) {
                check_keys(b, {"lo", "hi", "must_contain", "must_not_contain", "subset_of"}, side);
                SetConstraints &c = std::string_view(side) == "body" ? s.caq.body : s.caq.head;
                c.card = json_range(b, c.card);
                if (b.contains("must_contain")) c.must_contain = json_items(b["must_contain"], "must_contain");
                if (b.contains("must_not_contain"))
                    c.must_not_contain = json_items(b["must_not_contain"], "must_not_contain");
                if (b.contains("subset_of") && !b["subset_of"].is_null())
                    c.subset_of = Value::set(json_items(b["subset_of"], "subset_of"));
            } else {
                fail(Errc::InvalidValue, std::string(side) + " applies to the minerule and caq templates");
            }
        }
        if (j.contains("width_pruning")) {
            if (s.kind != TemplateKind::CAQ || !j["width_pruning"].is_boolean())
                fail(Errc::InvalidValue, "width_pruning is a boolean of the caq template");
            s.caq.width_pruning = j["width_pruning"].get<bool>();
        }
    }
    QueryOverrides o;
    if (j.contains("source")) {
        if (!j["source"].is_string() || j["source"].get<std::string>().empty())
            fail(Errc::InvalidValue, "source must be a non-empty string");
        o.source = j["source"].get<std::string>();
    }
    if (j.contains("minsup")) o.minsup = json_rational(j["minsup"], "minsup");
    if (j.contains("minconf")) o.minconf = json_rational(j["minconf"], "minconf");
    if (j.contains("threshold_mode")) {
        if (!j["threshold_mode"].is_string()) fail(Errc::InvalidValue, "threshold_mode must be a string");
        o.mode = parse_threshold_mode(j["threshold_mode"].get<std::string>());
    }
    return apply_overrides(std::move(s), o);
}

Rational threshold_from_json(const nlohmann::json &j, std::string_view key) { return json_rational(j, key); }

nlohmann::json to_json(const QuerySpec &s)
{
    nlohmann::json j{{"template", std::string(to_string(s.kind))},
                     {"minsup", to_string(s.params.minsup)},
                     {"minconf", to_string(s.params.minconf)},
                     {"threshold_mode", std::string(to_string(s.params.threshold_mode))}};
    if (s.source_given) j["source"] = s.source;
    if (s.kind == TemplateKind::MineRule) {
        j["width"] = s.mine_rule.width ? nlohmann::json{{"op", cmp_text(s.mine_rule.width->op, {})},
                                                        {"k", s.mine_rule.width->k}}
                                       : nlohmann::json(nullptr);
        j["body"] = range_json(s.mine_rule.body);
        j["head"] = range_json(s.mine_rule.head);
    } else if (s.kind == TemplateKind::CAQ) {
        for (auto [name, c] : {std::pair{"body", &s.caq.body}, std::pair{"head", &s.caq.head}}) {
            auto side = range_json(c->card);
            side["must_contain"] = items_json(c->must_contain);
            side["must_not_contain"] = items_json(c->must_not_contain);
            side["subset_of"] = c->subset_of ? items_json({c->subset_of->elements().begin(), c->subset_of->elements().end()})
                                             : nlohmann::json(nullptr);
            j[name] = side;
        }
        j["width_pruning"] = s.caq.width_pruning;
    }
    return j;
}

} // namespace nestmine
