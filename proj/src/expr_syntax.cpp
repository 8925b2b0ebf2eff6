// Textual syntax for expressions and predicates.
//
//   expr    := term (('+' | '-') term)*
//   term    := factor (('*' | '/') factor)*
//   factor  := attr | '$'param | number | 'string' | rational(p/q) | date(yyyy-mm-dd)
//            | set-literal [':' type] | P(expr) | V(expr) | '(' expr ')'
//   pred    := conj ('or' conj)*
//   conj    := neg ('and' neg)*
//   neg     := 'not' neg | 'true' | 'false' | '(' pred ')' | expr cmp expr
//   cmp     := < <= = != >= > subset subseteq supset supseteq in notin  (or ⊂ ⊆ ⊃ ⊇ ∈ ∉ ≤ ≥ ≠)

#include <cctype>

#include "nestmine/error.hpp"
#include "nestmine/expr.hpp"

namespace nestmine {

namespace {

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool is_plain_name(std::string_view name)
{
    if (name.empty()) return false;
    bool at_segment_start = true;
    for (char c : name) {
        if (c == '.') {
            if (at_segment_start) return false;
            at_segment_start = true;
            continue;
        }
        if (at_segment_start ? !is_ident_start(c) : !is_ident_char(c)) return false;
        at_segment_start = false;
    }
    return !at_segment_start;
}

std::string quote_string(const std::string &s)
{
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "''";
        else out += c;
    }
    return out + "'";
}

std::string literal(const Value &v, const Type &t, bool annotate);

std::string literal_elements(const Value &v, const Type &t)
{
    std::string out = "{";
    bool first = true;
    for (const auto &e : v.elements()) {
        if (!first) out += ", ";
        first = false;
        out += literal(e, t.element(), false);
    }
    return out + "}";
}

bool inferable(const Value &v, const Type &t)
{
    if (!t.is_set()) return true;
    if (v.elements().empty()) return false;
    for (const auto &e : v.elements())
        if (!inferable(e, t.element())) return false;
    return true;
}

std::string literal(const Value &v, const Type &t, bool annotate)
{
    switch (v.kind()) {
    case ValueKind::Int: return std::to_string(v.as_int());
    case ValueKind::Rational: return "rational(" + to_string(v.as_rational()) + ")";
    case ValueKind::String: return quote_string(v.as_string());
    case ValueKind::Date: return "date(" + to_string(v.as_date()) + ")";
    case ValueKind::Set: {
        std::string out = literal_elements(v, t);
        if (annotate && !inferable(v, t)) out += ":" + t.to_string();
        return out;
    }
    }
    return "?";
}

int precedence(const Expr &e)
{
    if (const auto *b = std::get_if<expr::Binary>(&e.node().v))
        return (b->op == ArithOp::Add || b->op == ArithOp::Sub) ? 1 : 2;
    return 3;
}

void render_expr(std::string &out, const Expr &e, SyntaxStyle style)
{
    std::visit(overloaded{
                   [&](const expr::AttrRef &x) {
                       if (is_plain_name(x.name)) out += x.name;
                       else out += "`" + x.name + "`";
                   },
                   [&](const expr::Const &x) {
                       // Sets with an empty member need the annotation to re-parse;
                       // the parenthesis keeps ':' from binding to a comparison.
                       out += literal(x.value, x.type, true);
                   },
                   [&](const expr::Param &x) { out += "$" + x.name; },
                   [&](const expr::Binary &x) {
                       int p = precedence(e);
                       bool lp = precedence(x.lhs) < p;
                       bool rp = precedence(x.rhs) <= p;
                       if (lp) out += "(";
                       render_expr(out, x.lhs, style);
                       if (lp) out += ")";
                       switch (x.op) {
                       case ArithOp::Add: out += " + "; break;
                       case ArithOp::Sub: out += " - "; break;
                       case ArithOp::Mul: out += " * "; break;
                       case ArithOp::Div: out += " / "; break;
                       }
                       if (rp) out += "(";
                       render_expr(out, x.rhs, style);
                       if (rp) out += ")";
                   },
                   [&](const expr::Powerset &x) {
                       out += style.glyphs ? "℘(" : "P(";
                       render_expr(out, x.arg, style);
                       out += ")";
                   },
                   [&](const expr::Cardinality &x) {
                       out += "V(";
                       render_expr(out, x.arg, style);
                       out += ")";
                   },
               },
               e.node().v);
}

int pred_precedence(const Predicate &p)
{
    if (std::holds_alternative<pred::Or>(p.node().v)) return 1;
    if (std::holds_alternative<pred::And>(p.node().v)) return 2;
    if (std::holds_alternative<pred::Not>(p.node().v)) return 3;
    return 4;
}

void render_pred(std::string &out, const Predicate &p, SyntaxStyle style)
{
    auto child = [&](const Predicate &c, bool parens) {
        if (parens) out += "(";
        render_pred(out, c, style);
        if (parens) out += ")";
    };
    std::visit(overloaded{
                   [&](const pred::Const &x) { out += x.value ? "true" : "false"; },
                   [&](const pred::Compare &x) {
                       render_expr(out, x.lhs, style);
                       out += " ";
                       out += to_string(x.op, style);
                       out += " ";
                       render_expr(out, x.rhs, style);
                   },
                   [&](const pred::And &x) {
                       child(x.lhs, pred_precedence(x.lhs) < 2);
                       out += style.glyphs ? " ∧ " : " and ";
                       child(x.rhs, pred_precedence(x.rhs) <= 2);
                   },
                   [&](const pred::Or &x) {
                       child(x.lhs, pred_precedence(x.lhs) < 1);
                       out += style.glyphs ? " ∨ " : " or ";
                       child(x.rhs, pred_precedence(x.rhs) <= 1);
                   },
                   [&](const pred::Not &x) {
                       out += style.glyphs ? "¬" : "not ";
                       child(x.arg, pred_precedence(x.arg) < 3);
                   },
               },
               p.node().v);
}

/*----- parsing --------------------------------------------------------------------------------------------------------*/

class Parser
{
  public:
    explicit Parser(std::string_view text) : s_(text) {}

    Expr parse_whole_expr()
    {
        Expr e = expr();
        expect_end();
        return e;
    }

    Predicate parse_whole_pred()
    {
        Predicate p = predicate();
        expect_end();
        return p;
    }

  private:
    static constexpr int kMaxDepth = 200;

    struct DepthGuard
    {
        Parser &p;
        explicit DepthGuard(Parser &parser) : p(parser)
        {
            if (++p.depth_ > kMaxDepth) p.error("nesting deeper than 200 levels");
        }
        ~DepthGuard() { --p.depth_; }
    };

    [[noreturn]] void error(const std::string &expected) const
    {
        fail(Errc::SyntaxError, "at offset " + std::to_string(pos_) + ": expected " + expected);
    }

    void skip_ws()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool at_end()
    {
        skip_ws();
        return pos_ >= s_.size();
    }

    void expect_end()
    {
        if (!at_end()) error("end of input");
    }

    bool accept(std::string_view tok)
    {
        skip_ws();
        if (s_.substr(pos_).starts_with(tok)) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    /// Keyword match that does not swallow a prefix of a longer identifier.
    bool accept_word(std::string_view word)
    {
        skip_ws();
        if (!s_.substr(pos_).starts_with(word)) return false;
        std::size_t end = pos_ + word.size();
        if (end < s_.size() && (is_ident_char(s_[end]) || s_[end] == '.')) return false;
        pos_ = end;
        return true;
    }

    void expect(std::string_view tok)
    {
        if (!accept(tok)) error("'" + std::string(tok) + "'");
    }

    std::string identifier()
    {
        skip_ws();
        std::size_t start = pos_;
        if (pos_ < s_.size() && s_[pos_] == '`') {
            auto close = s_.find('`', pos_ + 1);
            if (close == std::string_view::npos) error("closing '`'");
            pos_ = close + 1;
            return std::string(s_.substr(start + 1, close - start - 1));
        }
        if (pos_ >= s_.size() || !is_ident_start(s_[pos_])) error("identifier");
        while (pos_ < s_.size() &&
               (is_ident_char(s_[pos_]) || (s_[pos_] == '.' && pos_ + 1 < s_.size() && is_ident_start(s_[pos_ + 1]))))
            ++pos_;
        return std::string(s_.substr(start, pos_ - start));
    }

    Predicate predicate()
    {
        DepthGuard g(*this);
        Predicate p = conj();
        while (accept_word("or") || accept("∨")) p = p || conj();
        return p;
    }

    Predicate conj()
    {
        Predicate p = neg();
        while (accept_word("and") || accept("∧")) p = p && neg();
        return p;
    }

    Predicate neg()
    {
        DepthGuard g(*this);
        if (accept_word("not") || accept("¬")) return !neg();
        if (accept_word("true")) return always(true);
        if (accept_word("false")) return always(false);
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '(') {
            std::size_t saved = pos_;
            try {
                ++pos_;
                Predicate inner = predicate();
                expect(")");
                return inner;
            } catch (const Error &) {
                pos_ = saved;
            }
        }
        Expr lhs = expr();
        CmpOp op = cmp_op();
        Expr rhs = expr();
        return cmp(op, std::move(lhs), std::move(rhs));
    }

    CmpOp cmp_op()
    {
        if (accept("<=") || accept("≤")) return CmpOp::Le;
        if (accept(">=") || accept("≥")) return CmpOp::Ge;
        if (accept("!=") || accept("≠")) return CmpOp::Ne;
        if (accept("<")) return CmpOp::Lt;
        if (accept(">")) return CmpOp::Gt;
        if (accept("=")) return CmpOp::Eq;
        if (accept("⊆")) return CmpOp::SubsetEq;
        if (accept("⊂")) return CmpOp::Subset;
        if (accept("⊇")) return CmpOp::SupersetEq;
        if (accept("⊃")) return CmpOp::Superset;
        if (accept("∉")) return CmpOp::NotIn;
        if (accept("∈")) return CmpOp::In;
        if (accept_word("subseteq")) return CmpOp::SubsetEq;
        if (accept_word("subset")) return CmpOp::Subset;
        if (accept_word("supseteq")) return CmpOp::SupersetEq;
        if (accept_word("supset")) return CmpOp::Superset;
        if (accept_word("notin")) return CmpOp::NotIn;
        if (accept_word("in")) return CmpOp::In;
        error("comparison operator");
    }

    Expr expr()
    {
        DepthGuard g(*this);
        Expr e = term();
        for (;;) {
            if (accept("+")) e = std::move(e) + term();
            else if (peek_binary_minus()) e = std::move(e) - term();
            else return e;
        }
    }

    bool peek_binary_minus()
    {
        return accept("-") || accept("−");
    }

    Expr term()
    {
        Expr e = factor();
        for (;;) {
            if (accept("*")) e = std::move(e) * factor();
            else if (accept("/")) e = std::move(e) / factor();
            else return e;
        }
    }

    Value number_value()
    {
        skip_ws();
        std::size_t start = pos_;
        if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
        bool digits = false;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
            digits = true;
        }
        bool decimal = false;
        if (digits && pos_ + 1 < s_.size() && s_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1]))) {
            decimal = true;
            ++pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }
        if (!digits) error("number");
        std::string_view text = s_.substr(start, pos_ - start);
        try {
            if (decimal) return Value(parse_rational(text));
            return Value(parse_rational(text).numerator());
        } catch (const Error &) {
            error("number in range");
        }
    }

    std::string string_body()
    {
        expect("'");
        std::string out;
        for (;;) {
            if (pos_ >= s_.size()) error("closing quote");
            char c = s_[pos_++];
            if (c == '\'') {
                if (pos_ < s_.size() && s_[pos_] == '\'') {
                    out += '\'';
                    ++pos_;
                    continue;
                }
                return out;
            }
            out += c;
        }
    }

    std::string until_close_paren()
    {
        std::size_t close = s_.find(')', pos_);
        if (close == std::string_view::npos) error("')'");
        std::string out(s_.substr(pos_, close - pos_));
        pos_ = close + 1;
        return out;
    }

    Value literal_value()
    {
        DepthGuard g(*this);
        skip_ws();
        if (pos_ >= s_.size()) error("literal");
        char c = s_[pos_];
        if (c == '\'') return Value(string_body());
        if (c == '{') {
            ++pos_;
            Value::Elements elems;
            if (!accept("}")) {
                do elems.push_back(literal_value());
                while (accept(","));
                expect("}");
            }
            try {
                return Value::set(std::move(elems));
            } catch (const Error &) {
                error("set elements of one kind");
            }
        }
        if (accept_word("rational")) {
            expect("(");
            try {
                return Value(parse_rational(until_close_paren()));
            } catch (const Error &) {
                error("rational p/q");
            }
        }
        if (accept_word("date")) {
            expect("(");
            try {
                return Value(parse_date(until_close_paren()));
            } catch (const Error &) {
                error("date yyyy-mm-dd");
            }
        }
        return number_value();
    }

    Type type_annotation()
    {
        skip_ws();
        std::size_t start = pos_;
        int depth = 0;
        while (pos_ < s_.size()) {
            char c = s_[pos_];
            if (c == '<') ++depth;
            else if (c == '>') {
                if (depth == 0) break;
                if (--depth == 0) {
                    ++pos_;
                    break;
                }
            } else if (!is_ident_char(c)) break;
            ++pos_;
        }
        try {
            return Type::parse(s_.substr(start, pos_ - start));
        } catch (const Error &) {
            error("type");
        }
    }

    Expr factor()
    {
        DepthGuard g(*this);
        skip_ws();
        if (pos_ >= s_.size()) error("expression");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            expect(")");
            return e;
        }
        if (c == '$') {
            ++pos_;
            std::string name = identifier();
            try {
                return param(name);
            } catch (const Error &) {
                error("known parameter ($n, $minsup, $minconf)");
            }
        }
        if (c == '\'' || c == '{' || std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
            Value v = literal_value();
            if (v.is_set()) {
                skip_ws();
                if (pos_ < s_.size() && s_[pos_] == ':') {
                    ++pos_;
                    Type t = type_annotation();
                    if (!conforms(v, t)) error("literal matching its type annotation");
                    return lit(std::move(v), std::move(t));
                }
                if (!inferable_value(v)) error("type annotation for a set literal with an empty member");
            }
            return lit(std::move(v));
        }
        if (accept("℘")) return powerset(call_arg());
        std::size_t saved = pos_;
        if (accept_word("rational") || accept_word("date")) {
            pos_ = saved;
            return lit(literal_value());
        }
        std::string name = identifier();
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '(') {
            if (name == "P") return powerset(call_arg());
            if (name == "V") return card(call_arg());
            error("function P or V");
        }
        if (name.starts_with("r.") && name.size() > 2) name = name.substr(2);
        return attr(name);
    }

    static bool inferable_value(const Value &v)
    {
        if (!v.is_set()) return true;
        if (v.elements().empty()) return false;
        for (const auto &e : v.elements())
            if (!inferable_value(e)) return false;
        return true;
    }

    Expr call_arg()
    {
        expect("(");
        Expr e = expr();
        expect(")");
        return e;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

} // namespace

std::string_view to_string(CmpOp op, SyntaxStyle style)
{
    switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return style.glyphs ? "≤" : "<=";
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return style.glyphs ? "≠" : "!=";
    case CmpOp::Ge: return style.glyphs ? "≥" : ">=";
    case CmpOp::Gt: return ">";
    case CmpOp::Subset: return style.glyphs ? "⊂" : "subset";
    case CmpOp::SubsetEq: return style.glyphs ? "⊆" : "subseteq";
    case CmpOp::Superset: return style.glyphs ? "⊃" : "supset";
    case CmpOp::SupersetEq: return style.glyphs ? "⊇" : "supseteq";
    case CmpOp::In: return style.glyphs ? "∈" : "in";
    case CmpOp::NotIn: return style.glyphs ? "∉" : "notin";
    }
    return "?";
}

std::string to_string(const Expr &e, SyntaxStyle style)
{
    std::string out;
    render_expr(out, e, style);
    return out;
}

std::string to_string(const Predicate &p, SyntaxStyle style)
{
    std::string out;
    render_pred(out, p, style);
    return out;
}

Expr parse_expr(std::string_view text) { return Parser(text).parse_whole_expr(); }
Predicate parse_predicate(std::string_view text) { return Parser(text).parse_whole_pred(); }

} // namespace nestmine
