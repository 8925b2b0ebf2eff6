#pragma once

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/rational.hpp>

namespace nestmine {

using Rational = boost::rational<std::int64_t>;

/// Parses "3/10", "0.3", "-2" or "1" into an exact rational.
Rational parse_rational(std::string_view text);
/// "p/q", or "p" when the denominator is 1.
std::string to_string(const Rational &r);
/// Decimal rendering with at most `digits` fractional digits, trailing zeros trimmed.
std::string to_decimal(const Rational &r, int digits = 6);

struct Date
{
    std::int32_t year = 1970;
    std::uint8_t month = 1;
    std::uint8_t day = 1;

    friend auto operator<=>(const Date &, const Date &) = default;
};

/// Throws InvalidValue unless (year, month, day) is a valid calendar date.
Date make_date(int year, unsigned month, unsigned day);
/// Accepts ISO `yyyy-mm-dd` and the `dd/mm/yyyy` layout of the sample tables.
Date parse_date(std::string_view text);
std::string to_string(const Date &d);

enum class ScalarKind : std::uint8_t { Int, Rational, String, Date };

std::string_view to_string(ScalarKind k);

/// Attribute type: a scalar kind or set-of(type), arbitrarily nested.
class Type
{
  public:
    Type(ScalarKind kind) : scalar_(kind) {} // NOLINT(google-explicit-constructor)

    static Type set_of(Type element);

    bool is_set() const noexcept { return element_ != nullptr; }
    ScalarKind scalar() const;
    const Type &element() const;
    int depth() const noexcept;

    std::string to_string() const;
    static Type parse(std::string_view text);

    friend bool operator==(const Type &a, const Type &b);

  private:
    Type() = default;

    ScalarKind scalar_ = ScalarKind::Int;
    std::shared_ptr<const Type> element_;
};

class Value;
using Tuple = std::vector<Value>;

enum class ValueKind : std::uint8_t { Int, Rational, String, Date, Set };

/// A scalar or a finite set of values. Sets are stored sorted and duplicate-free
/// under the artifact-wide total order, so structural equality is plain element
/// equality and set equality ignores construction order.
class Value
{
  public:
    using Elements = std::vector<Value>;

    Value() : v_(std::int64_t{0}) {}
    Value(std::int64_t i) : v_(i) {}             // NOLINT(google-explicit-constructor)
    Value(int i) : v_(std::int64_t{i}) {}        // NOLINT(google-explicit-constructor)
    Value(const Rational &r) : v_(r) {}          // NOLINT(google-explicit-constructor)
    Value(std::string s) : v_(std::move(s)) {}   // NOLINT(google-explicit-constructor)
    Value(const char *s) : v_(std::string(s)) {} // NOLINT(google-explicit-constructor)
    Value(Date d) : v_(d) {}                     // NOLINT(google-explicit-constructor)

    /// Canonicalizes `elements`; throws KindMismatch when elements mix kinds.
    static Value set(Elements elements);
    static Value set(std::initializer_list<Value> elements) { return set(Elements(elements)); }
    static Value empty_set() { return set(Elements{}); }
    /// Elements already strictly ascending and of one kind.
    static Value sorted_set(Elements elements);

    ValueKind kind() const noexcept { return static_cast<ValueKind>(v_.index()); }
    bool is_set() const noexcept { return kind() == ValueKind::Set; }
    bool is_numeric() const noexcept { return kind() == ValueKind::Int || kind() == ValueKind::Rational; }

    std::int64_t as_int() const;
    const Rational &as_rational() const;
    /// Int or Rational coerced to Rational.
    Rational as_number() const;
    const std::string &as_string() const;
    Date as_date() const;
    std::span<const Value> elements() const;
    std::size_t size() const { return elements().size(); }
    bool contains(const Value &element) const;

    friend std::strong_ordering operator<=>(const Value &a, const Value &b);
    friend bool operator==(const Value &a, const Value &b) { return (a <=> b) == 0; }

  private:
    std::variant<std::int64_t, Rational, std::string, Date, std::shared_ptr<const Elements>> v_;
};

/// Canonical text of a value: sets as `{a,b}` sorted, rationals as `p/q`,
/// strings with `\` escapes for the characters the formats reserve.
std::string render(const Value &v);
/// Like render(), but rationals show as `p/q (decimal)`.
std::string render_pretty(const Value &v);
std::ostream &operator<<(std::ostream &os, const Value &v);

bool conforms(const Value &v, const Type &t);

/// Parses the canonical text of one value of type `t` (inverse of render()).
Value parse_value(std::string_view text, const Type &t);

bool is_subset(const Value &a, const Value &b);
Value set_difference(const Value &a, const Value &b);
Value set_union(const Value &a, const Value &b);
Value set_intersection(const Value &a, const Value &b);

struct Attribute
{
    std::string name;
    Type type;

    friend bool operator==(const Attribute &, const Attribute &) = default;
};

/// Ordered attribute list with unique names.
class Schema
{
  public:
    Schema() = default;
    Schema(std::vector<Attribute> attributes);            // NOLINT(google-explicit-constructor)
    Schema(std::initializer_list<Attribute> attributes) : Schema(std::vector<Attribute>(attributes)) {}

    std::size_t size() const noexcept { return attributes_.size(); }
    const Attribute &operator[](std::size_t i) const { return attributes_[i]; }
    std::span<const Attribute> attributes() const noexcept { return attributes_; }
    auto begin() const noexcept { return attributes_.begin(); }
    auto end() const noexcept { return attributes_.end(); }

    std::optional<std::size_t> index_of(std::string_view name) const;
    /// Throws UnknownAttribute.
    std::size_t require(std::string_view name) const;
    bool contains(std::string_view name) const { return index_of(name).has_value(); }

    std::string to_string() const;

    friend bool operator==(const Schema &, const Schema &) = default;

  private:
    std::vector<Attribute> attributes_;
};

} // namespace nestmine
