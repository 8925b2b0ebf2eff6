#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "nestmine/cli.hpp"
#include "nestmine/dsl.hpp"
#include "nestmine/relation.hpp"

using namespace nestmine;
using namespace nestmine::testing;
namespace fs = std::filesystem;

namespace {

struct Result
{
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args, const std::string &input = {})
{
    std::istringstream in(input);
    std::ostringstream out, err;
    int code = run_cli(args, in, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string &name)
{
    auto dir = fs::temp_directory_path() / ("nestmine_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string purchase_csv() { return data_path("purchase.csv"); }

NestedRelation fig1b()
{
    Rational h(1, 2), one(1);
    return rules_relation({{"B", "C", h, one}, {"B", "CJ", h, one}, {"B", "J", h, one}, {"BC", "J", h, one},
                           {"BJ", "C", h, one}, {"C", "B", h, one}, {"C", "BJ", h, one}, {"C", "J", h, one},
                           {"CJ", "B", h, one}});
}

NestedRelation reingest_rules(const std::string &csv) { return parse_transactions_csv(csv, DatasetConfig{"", "BD", "HD"}); }

std::size_t count(const std::string &text, const std::string &needle)
{
    std::size_t n = 0;
    for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
    return n;
}

} // namespace

TEST(Run, ClassicTable)
{
    auto r = cli({"run", "--data", purchase_csv(), "--template", "classic", "--minsup", "0.3", "--minconf", "0.6"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("BD     HD     sup        conf\n", 0), 0u) << r.out;
    EXPECT_NE(r.out.find("{C,J}  {B}    1/2 (0.5)  1\n(9 rows)\n"), std::string::npos) << r.out;
}

TEST(Run, CsvReingestsLosslessly)
{
    auto r = cli({"run", "--data", purchase_csv(), "--template", "classic", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(reingest_rules(r.out), fig1b());
    EXPECT_NE(r.out.find("1/2"), std::string::npos);

    auto dir = scratch("csv");
    auto file = (dir / "rules.csv").string();
    auto saved = cli({"run", "--data", purchase_csv(), "--template", "classic", "--format", "csv", "--out", file});
    ASSERT_EQ(saved.code, 0) << saved.err;
    EXPECT_TRUE(saved.out.empty());
    std::ifstream in(file);
    EXPECT_EQ(reingest_rules({std::istreambuf_iterator<char>(in), {}}), fig1b());
    fs::remove_all(dir);
}

TEST(Run, JsonFormat)
{
    auto r = cli({"run", "--data", purchase_csv(), "--template", "classic", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["rows"].size(), 9u);
    EXPECT_EQ(j["rows"][0][2], (nlohmann::json{{"num", 1}, {"den", 2}}));
    EXPECT_EQ(j["schema"][0]["type"], "set<string>");
}

TEST(Run, CaqQueryFile)
{
    auto r = cli({"run", "--query-file", data_path("caq.q"), "--data", data_path("newpurchase.csv"), "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    Rational q(1, 4), h(1, 2), one(1);
    EXPECT_EQ(reingest_rules(r.out), rules_relation({{"BC", "HJ", q, h}, {"BH", "CJ", q, one}, {"BJ", "CH", q, h},
                                                     {"CH", "BJ", q, one}, {"CJ", "BH", q, h}, {"HJ", "BC", q, one}}));
}

TEST(Run, MineRuleFileAndTemplateFlags)
{
    auto file = cli({"run", "--query-file", data_path("fig4.mr"), "--data", purchase_csv(), "--format", "csv"});
    ASSERT_EQ(file.code, 0) << file.err;
    auto rules = reingest_rules(file.out);
    EXPECT_EQ(rules.size(), 13u);
    for (const auto &t : rules.tuples()) EXPECT_EQ(t[1].size(), 1u);

    auto flags = cli({"run", "--template", "minerule", "--data", purchase_csv(), "--minsup", "0.1", "--minconf",
                      "0.2", "--width", "<=6", "--body", "1..n", "--head", "1..1", "--format", "csv"});
    ASSERT_EQ(flags.code, 0) << flags.err;
    EXPECT_EQ(reingest_rules(flags.out), rules);
}

TEST(Run, BreakpointsPrintPausedInputs)
{
    auto r = cli({"run", "--data", purchase_csv(), "--template", "classic", "--breakpoints", "5-6,12-13"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("paused at 5->6, node 5:"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("(11 rows)"), std::string::npos);
    EXPECT_NE(r.err.find("paused at 12->13"), std::string::npos);
    EXPECT_NE(r.out.find("(9 rows)"), std::string::npos);
}

TEST(Run, RenamedColumnsAndSynthetic)
{
    auto dir = scratch("cols");
    auto file = (dir / "baskets.csv").string();
    std::ofstream(file) << "basket;sku\n1;a\n1;b\n2;a\n2;b\n3;a\n";
    auto r = cli({"run", "--data", file, "--tid-column", "basket", "--item-column", "sku", "--delimiter", ";",
                  "--template", "classic", "--minsup", "1/2", "--minconf", "1/2", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(reingest_rules(r.out).size(), 2u);
    fs::remove_all(dir);

    auto a = cli({"run", "--synthetic", "30,6,4", "--seed", "7", "--template", "classic", "--format", "csv"});
    auto b = cli({"run", "--synthetic", "30,6,4", "--seed", "7", "--template", "classic", "--format", "csv"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
}

TEST(Run, AllRewriteSettingsAgree)
{
    std::string baseline;
    for (std::string rw : {"default", "none", "fuse-powerset-prune", "select-fusion,push-cardinality-constraint"}) {
        auto r = cli({"run", "--query-file", data_path("caq.q"), "--data", data_path("newpurchase.csv"), "--format",
                      "csv", "--rewrites", rw});
        ASSERT_EQ(r.code, 0) << rw << ": " << r.err;
        if (baseline.empty()) baseline = r.out;
        EXPECT_EQ(r.out, baseline) << rw;
    }
}

TEST(ExitCodes, Golden)
{
    std::string p = purchase_csv();
    struct Case
    {
        std::vector<std::string> args;
        int code;
    };
    std::vector<Case> cases{
        {{"run", "--bogus"}, 2},
        {{}, 2},
        {{"frobnicate"}, 2},
        {{"run", "--data", p}, 2},
        {{"run", "--data", p, "--template", "classic", "--query-file", data_path("caq.q")}, 2},
        {{"run", "--data", p, "--template", "nope"}, 2},
        {{"run", "--data", p, "--template", "classic", "--minsup", "0"}, 2},
        {{"run", "--data", p, "--template", "classic", "--minsup", "abc"}, 2},
        {{"run", "--data", p, "--template", "classic", "--format", "xml"}, 2},
        {{"run", "--data", p, "--template", "caq", "--body", "3..2"}, 2},
        {{"run", "--data", p, "--template", "classic", "--breakpoints", "1-9"}, 2},
        {{"run", "--data", p, "--query-file", "/nonexistent.q"}, 2},
        {{"run", "--template", "classic"}, 2},
        {{"run", "--data", "/nonexistent.csv", "--template", "classic"}, 3},
        {{"run", "--data", p, "--item-column", "sku", "--template", "classic"}, 3},
        {{"run", "--data", data_path("newpurchase.csv"), "--query-file", data_path("fig4.mr"), "--source", "Elsewhere"}, 0},
        {{"run", "--data", p, "--template", "classic"}, 0},
        {{"run", "--help"}, 0},
    };
    for (const auto &c : cases) {
        auto r = cli(c.args);
        std::string joined;
        for (const auto &a : c.args) joined += a + " ";
        EXPECT_EQ(r.code, c.code) << joined << "\n" << r.err;
        if (c.code == 2 && !c.args.empty() && c.args[0] == "run" && c.args.size() == 2)
            EXPECT_NE(r.err.find("Usage:"), std::string::npos) << r.err;
    }

    auto dir = scratch("bad");
    auto bad = (dir / "bad.q").string();
    std::ofstream(bad) << "MINE RULE x AS SELECT";
    auto syntax = cli({"run", "--data", p, "--query-file", bad});
    EXPECT_EQ(syntax.code, 2);
    EXPECT_NE(syntax.err.find("SyntaxError: 1:22"), std::string::npos) << syntax.err;
    auto badcsv = (dir / "bad.csv").string();
    std::ofstream(badcsv) << "tid:int,item\nx,a\n";
    EXPECT_EQ(cli({"run", "--data", badcsv, "--template", "classic"}).code, 3);
    fs::remove_all(dir);

    EXPECT_EQ(exit_code(Errc::ResourceLimit), 4);
    EXPECT_EQ(exit_code(Errc::ParseError), 3);
    EXPECT_EQ(exit_code(Errc::SyntaxError), 2);
}

TEST(Explain, ClassicListingAndPlans)
{
    auto r = cli({"explain", "--template", "classic", "--data", purchase_csv()});
    ASSERT_EQ(r.code, 0) << r.err;
    for (int id = 1; id <= 13; ++id)
        EXPECT_NE(r.out.find("[" + std::to_string(id) + "] "), std::string::npos) << id;
    std::size_t plans = count(r.out, "FrequentItemsets=");
    EXPECT_GE(plans, 3u);
    EXPECT_EQ(count(r.out, "\n* "), 1u);
    EXPECT_NE(r.out.find("chosen: "), std::string::npos);
    EXPECT_NE(r.out.find("rewrites:"), std::string::npos);
}

TEST(Explain, MaxPlansOne)
{
    auto r = cli({"explain", "--template", "classic", "--data", purchase_csv(), "--max-plans", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(count(r.out, "FrequentItemsets="), 1u);
    EXPECT_NE(r.out.find("* 0 "), std::string::npos) << r.out;
}

TEST(Explain, WideStatsChooseApriori)
{
    auto r = cli({"explain", "--template", "classic", "--stats", "1000,50,20"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto star = r.out.find("\n* ");
    ASSERT_NE(star, std::string::npos);
    std::string chosen = r.out.substr(star, r.out.find('\n', star + 1) - star);
    EXPECT_NE(chosen.find("Apriori"), std::string::npos) << chosen;
    EXPECT_EQ(chosen.find("NaivePowerset"), std::string::npos) << chosen;
    EXPECT_NE(r.out.find("statistics n=1000 m=50 w=20"), std::string::npos);
}

TEST(Explain, CaqShowsRewritesAndGlyphs)
{
    auto r = cli({"explain", "--query-file", data_path("caq.q"), "--data", data_path("newpurchase.csv"), "--glyphs",
                  "--rewrites", "fuse-powerset-prune"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("before rewrites:"), std::string::npos);
    EXPECT_NE(r.out.find("1. fuse-powerset-prune"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("℘"), std::string::npos);
    EXPECT_EQ(cli({"explain", "--template", "classic", "--stats", "1,2"}).code, 2);
}

TEST(Trace, ClassicSnapshotFiles)
{
    auto dir = scratch("trace");
    auto r = cli({"trace", "--template", "classic", "--data", purchase_csv(), "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::size_t files = 0;
    for (const auto &e : fs::directory_iterator(dir)) {
        EXPECT_EQ(e.path().extension(), ".snap");
        ++files;
    }
    EXPECT_EQ(files, 13u);
    std::ifstream in(dir / "5.snap");
    auto r5 = parse_canonical(std::string(std::istreambuf_iterator<char>(in), {}));
    EXPECT_EQ(r5.size(), 11u);
    EXPECT_NE(r.out.find("node 5 step 5  11 rows"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("node 13 step 13  9 rows"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Repl, MinsupEditEmptiesOutput)
{
    auto r = cli({"repl", "--template", "classic", "--data", purchase_csv(), "--format", "csv"},
                 "step\nstep\nstep\nstep\nstep\nset minsup 0.5\nresume\nquit\n");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("materialized 5 (11 rows)"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("minsup = 1/2"), std::string::npos);
    auto header = r.out.find("BD:set<string>,HD:set<string>,sup:rational,conf:rational\n");
    ASSERT_NE(header, std::string::npos) << r.out;
    auto rest = r.out.substr(header);
    EXPECT_EQ(rest.substr(rest.find('\n') + 1), "> \n");
    EXPECT_TRUE(r.err.empty()) << r.err;
}

TEST(Repl, ShowUnknownIsNotMaterialized)
{
    auto r = cli({"repl", "--template", "classic", "--data", purchase_csv()}, "show 99\nshow 3\nrun-to 3\nshow 3\n");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(count(r.err, "NotMaterialized"), 2u) << r.err;
    EXPECT_NE(r.out.find("(4 rows)"), std::string::npos) << r.out;
}

TEST(Repl, BreakpointsAndMisc)
{
    auto r = cli({"repl", "--template", "classic", "--data", purchase_csv(), "--breakpoints", "6-7"},
                 "resume\nset minconf 0.7\nunbreak 6-7\nbreak 12-13\nresume\nresume\nstates\nstep\nset n 3\n"
                 "run-to x\nfrob\nhelp\ntree\nevents\n");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("paused at 6->7"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("paused at 12->13"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("13 materialized"), std::string::npos);
    EXPECT_NE(r.out.find("finished"), std::string::npos);
    EXPECT_NE(r.out.find("run-to N"), std::string::npos);
    EXPECT_NE(r.out.find("[13] proj"), std::string::npos);
    EXPECT_NE(r.out.find("pause 7 breakpoint 6->7"), std::string::npos);
    EXPECT_NE(r.err.find("unknown command 'frob'"), std::string::npos);
    EXPECT_EQ(count(r.err, "error: InvalidValue"), 2u) << r.err;
}
