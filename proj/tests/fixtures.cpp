#include "fixtures.hpp"

#include <random>

namespace nestmine::testing {

NestedRelation random_transactions(std::uint64_t seed, std::size_t max_items, std::size_t max_trans)
{
    std::mt19937_64 rng(seed);
    std::size_t m = std::uniform_int_distribution<std::size_t>(1, max_items)(rng);
    std::size_t n = std::uniform_int_distribution<std::size_t>(1, max_trans)(rng);
    std::vector<Tuple> rows;
    for (std::size_t t = 1; t <= n; ++t) {
        bool any = false;
        for (std::size_t i = 0; i < m; ++i) {
            if (rng() % 2) {
                rows.push_back({Value(static_cast<std::int64_t>(t)), Value(std::string(1, static_cast<char>('a' + i)))});
                any = true;
            }
        }
        if (!any) rows.push_back({Value(static_cast<std::int64_t>(t)), Value(std::string(1, 'a'))});
    }
    return make_relation({{"tid", ScalarKind::Int}, {"item", ScalarKind::String}}, std::move(rows));
}

Rational random_minsup(std::uint64_t seed)
{
    std::mt19937_64 rng(seed * 7919 + 17);
    return Rational(static_cast<std::int64_t>(1 + rng() % 5), 10);
}

} // namespace nestmine::testing
