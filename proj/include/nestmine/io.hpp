#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "nestmine/relation.hpp"

namespace nestmine {

struct DatasetConfig
{
    std::string path;
    std::string tid_column = "tid";
    std::string item_column = "item";
    /// Declared column types; other columns are inferred (int, rational, date, set, string).
    std::map<std::string, Type, std::less<>> types;
    char delimiter = ',';
    bool header = true;
};

/// Throws ParseError naming row and column, MissingColumn for absent tid/item columns.
NestedRelation load_transactions_csv(const DatasetConfig &cfg);
NestedRelation parse_transactions_csv(std::string_view text, const DatasetConfig &cfg);

/// Renames the configured tid and item columns to tid and item, which the query templates read.
NestedRelation with_standard_columns(const NestedRelation &r, const DatasetConfig &cfg);

enum class OutputFormat : std::uint8_t { Table, Csv, Json };

OutputFormat parse_output_format(std::string_view text);

/// CSV with a `name:type` header; reloads losslessly through parse_transactions_csv.
std::string to_csv(const NestedRelation &r, char delimiter = ',');
std::string to_table(const NestedRelation &r);
nlohmann::json to_json(const Value &v);
nlohmann::json to_json(const NestedRelation &r);
std::string format_relation(const NestedRelation &r, OutputFormat format);

/// Random (tid:int, item:string) transactions: `n` tids, `m` items, widths uniform in [1, w].
NestedRelation synthetic_transactions(std::uint64_t seed, std::size_t n, std::size_t m, std::size_t w);

} // namespace nestmine
