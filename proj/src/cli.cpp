#include "nestmine/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nestmine/dsl.hpp"
#include "nestmine/engine.hpp"
#include "nestmine/io.hpp"
#include "nestmine/session_api.hpp"

namespace nestmine {

namespace {

struct Common
{
    std::string data;
    std::string tid_column = "tid";
    std::string item_column = "item";
    std::string delimiter = ",";
    std::string synthetic; ///< n,m,w
    std::uint64_t seed = 1;
    std::string query_file;
    std::string templ;
    std::string minsup, minconf, mode, source;
    std::string width, body, head;
    bool no_width_pruning = false;
    std::string rewrites = "default";
    std::size_t max_plans = kDefaultMaxPlans;
    bool glyphs = false;
};

struct Loaded
{
    QuerySpec spec;
    QueryTree tree;
    SourceData data;
    NestedRelation relation;
};

std::vector<std::int64_t> int_list(const std::string &text, std::size_t count, const char *what)
{
    std::vector<std::int64_t> out;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoll(part, &used));
            if (used != part.size() || out.back() < 0) throw std::invalid_argument(part);
        } catch (const std::exception &) {
            fail(Errc::InvalidValue, std::string(what) + " expects " + std::to_string(count) + " non-negative integers");
        }
    }
    if (out.size() != count)
        fail(Errc::InvalidValue, std::string(what) + " expects " + std::to_string(count) + " comma-separated integers");
    return out;
}

nlohmann::json range_json(const std::string &text, const char *what)
{
    auto dots = text.find("..");
    if (dots == std::string::npos) fail(Errc::InvalidValue, std::string(what) + " expects lo..hi or lo..n");
    nlohmann::json j;
    j["lo"] = int_list(text.substr(0, dots), 1, what)[0];
    std::string hi = text.substr(dots + 2);
    j["hi"] = hi == "n" ? nlohmann::json(nullptr) : nlohmann::json(int_list(hi, 1, what)[0]);
    return j;
}

std::vector<Breakpoint> breakpoint_list(const std::string &text)
{
    std::vector<Breakpoint> out;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, ',')) {
        auto dash = part.find('-');
        if (dash == std::string::npos) fail(Errc::InvalidValue, "breakpoints are child-parent pairs, got '" + part + "'");
        auto c = int_list(part.substr(0, dash), 1, "breakpoint");
        auto p = int_list(part.substr(dash + 1), 1, "breakpoint");
        out.push_back({static_cast<int>(c[0]), static_cast<int>(p[0]), true});
    }
    return out;
}

std::string read_text(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::InvalidValue, "cannot read query file " + path);
    return {std::istreambuf_iterator<char>(in), {}};
}

QuerySpec spec_from(const Common &c)
{
    if (!c.query_file.empty()) {
        if (!c.width.empty() || !c.body.empty() || !c.head.empty() || c.no_width_pruning)
            fail(Errc::InvalidValue, "--width, --body, --head and --no-width-pruning go with --template");
        QueryOverrides o;
        if (!c.minsup.empty()) o.minsup = parse_rational(c.minsup);
        if (!c.minconf.empty()) o.minconf = parse_rational(c.minconf);
        if (!c.mode.empty()) o.mode = parse_threshold_mode(c.mode);
        if (!c.source.empty()) o.source = c.source;
        return apply_overrides(parse_query(read_text(c.query_file)), o);
    }
    nlohmann::json j{{"template", c.templ}};
    if (!c.minsup.empty()) j["minsup"] = c.minsup;
    if (!c.minconf.empty()) j["minconf"] = c.minconf;
    if (!c.mode.empty()) j["threshold_mode"] = c.mode;
    if (!c.source.empty()) j["source"] = c.source;
    if (!c.width.empty()) {
        auto digit = c.width.find_first_of("0123456789");
        if (digit == std::string::npos || digit == 0) fail(Errc::InvalidValue, "--width expects an operator and a bound, e.g. <=6");
        j["width"] = {{"op", c.width.substr(0, digit)}, {"k", int_list(c.width.substr(digit), 1, "--width")[0]}};
    }
    if (!c.body.empty()) j["body"] = range_json(c.body, "--body");
    if (!c.head.empty()) j["head"] = range_json(c.head, "--head");
    if (c.no_width_pruning) j["width_pruning"] = false;
    return query_from_json(j);
}

NestedRelation load_data(const Common &c)
{
    if (!c.synthetic.empty()) {
        auto nmw = int_list(c.synthetic, 3, "--synthetic");
        return synthetic_transactions(c.seed, nmw[0], nmw[1], nmw[2]);
    }
    DatasetConfig cfg;
    cfg.path = c.data;
    cfg.tid_column = c.tid_column;
    cfg.item_column = c.item_column;
    if (c.delimiter == "\\t" || c.delimiter == "tab") cfg.delimiter = '\t';
    else if (c.delimiter.size() == 1) cfg.delimiter = c.delimiter[0];
    else fail(Errc::InvalidValue, "--delimiter must be one character");
    return with_standard_columns(load_transactions_csv(cfg), cfg);
}

Loaded load(const Common &c, bool need_data = true)
{
    if (c.query_file.empty() == c.templ.empty()) fail(Errc::InvalidValue, "give exactly one of --query-file and --template");
    Loaded l;
    l.spec = spec_from(c);
    l.tree = build_tree(l.spec);
    if (need_data || !c.data.empty() || !c.synthetic.empty()) {
        if (c.data.empty() == c.synthetic.empty()) fail(Errc::InvalidValue, "give exactly one of --data and --synthetic");
        l.relation = load_data(c);
        l.data.emplace(l.spec.source, l.relation);
    }
    return l;
}

std::vector<RewriteRule> rewrites_of(const std::string &text)
{
    if (text == "default") return default_rules();
    if (text == "none") return {};
    std::vector<std::string> names;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, ',')) names.push_back(part);
    return rules_named(names);
}

Stats data_stats(const Loaded &l) { return stats_from(transactions_from(l.relation)); }

void emit(const NestedRelation &r, OutputFormat format, const std::string &path, std::ostream &out)
{
    std::string text = format_relation(r, format);
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file || !(file << text)) fail(Errc::InvalidValue, "cannot write " + path);
}

void add_common(CLI::App *cmd, Common &c)
{
    auto *data = cmd->add_option("--data", c.data, "transactions CSV file");
    auto *synthetic = cmd->add_option("--synthetic", c.synthetic, "random transactions n,m,w instead of --data");
    data->excludes(synthetic);
    cmd->add_option("--seed", c.seed, "seed for --synthetic")->capture_default_str();
    cmd->add_option("--tid-column", c.tid_column, "transaction id column")->capture_default_str();
    cmd->add_option("--item-column", c.item_column, "item column")->capture_default_str();
    cmd->add_option("--delimiter", c.delimiter, "CSV delimiter")->capture_default_str();
    auto *qf = cmd->add_option("--query-file", c.query_file, "MINE RULE or constrained query text");
    auto *tp = cmd->add_option("--template", c.templ, "classic, minerule or caq")
                   ->check(CLI::IsMember({"classic", "minerule", "caq"}));
    qf->excludes(tp);
    cmd->add_option("--minsup", c.minsup, "support threshold, e.g. 0.3 or 3/10");
    cmd->add_option("--minconf", c.minconf, "confidence threshold");
    cmd->add_option("--threshold-mode", c.mode, "strict or inclusive")->check(CLI::IsMember({"strict", "inclusive"}));
    cmd->add_option("--source", c.source, "relation name the data is bound to");
    cmd->add_option("--width", c.width, "minerule transaction width filter, e.g. <=6");
    cmd->add_option("--body", c.body, "body size range lo..hi or lo..n");
    cmd->add_option("--head", c.head, "head size range lo..hi or lo..n");
    cmd->add_flag("--no-width-pruning", c.no_width_pruning, "caq: keep transactions narrower than the rule size");
    cmd->add_option("--rewrites", c.rewrites, "default, none, or a comma list of rule names")->capture_default_str();
    cmd->add_option("--max-plans", c.max_plans, "plans to enumerate")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_flag("--glyphs", c.glyphs, "print operators with mathematical symbols");
}

int cmd_run(const Common &c, const std::string &format_text, const std::string &out_path, const std::string &bps,
            std::ostream &out, std::ostream &err)
{
    OutputFormat format = parse_output_format(format_text);
    Loaded l = load(c);
    NestedRelation result;
    if (bps.empty()) {
        auto e = optimize(l.tree, data_stats(l), rewrites_of(c.rewrites), Catalog::standard(), c.max_plans);
        result = execute(e.plans[e.chosen], l.data);
    } else {
        PhysicalPlan plan = per_node_plan(l.tree);
        plan.tree.breakpoints = breakpoint_list(bps);
        Session s("run", std::move(plan), l.data);
        for (auto r = s.run_until(); r.reason == PauseReport::Reason::Breakpoint; r = s.run_until()) {
            SnapshotPtr snap = s.inspect(r.at->child);
            err << "paused at " << r.at->child << "->" << r.at->parent << ", node " << r.at->child << ":\n"
                << to_table(snap->relation);
        }
        result = s.result()->relation;
    }
    emit(result, format, out_path, out);
    return 0;
}

int cmd_explain(const Common &c, const std::string &stats_text, std::ostream &out)
{
    Loaded l = load(c, stats_text.empty());
    Stats stats;
    if (stats_text.empty()) {
        stats = data_stats(l);
    } else {
        auto nmw = int_list(stats_text, 3, "--stats");
        stats = Stats{nmw[0], nmw[1], nmw[2], {}};
    }
    SyntaxStyle style{c.glyphs};
    auto e = optimize(l.tree, stats, rewrites_of(c.rewrites), Catalog::standard(), c.max_plans);
    if (!e.rewritten.trace.empty()) out << "before rewrites:\n" << explain_tree(l.tree, style) << "\n";
    out << "statistics n=" << stats.n << " m=" << stats.m << " w=" << stats.w << "\n\n";
    out << render_explanation(e, style);
    return 0;
}

int cmd_trace(const Common &c, const std::string &dir, std::ostream &out)
{
    Loaded l = load(c);
    if (!dir.empty()) std::filesystem::create_directories(dir);
    for (const auto &snap : trace_all(per_node_plan(l.tree), l.data)) {
        const PlanNode &n = l.tree.node(snap->node);
        out << "node " << snap->node << (n.step.empty() ? "" : " step " + n.step) << "  " << snap->rows
            << (snap->rows == 1 ? " row\n" : " rows\n");
        if (dir.empty()) continue;
        auto path = std::filesystem::path(dir) / (std::to_string(snap->node) + ".snap");
        std::ofstream file(path, std::ios::binary);
        if (!file || !(file << canonical_render(snap->relation)))
            fail(Errc::InvalidValue, "cannot write " + path.string());
    }
    return 0;
}

void print_report(const PauseReport &r, std::ostream &out)
{
    for (auto [node, rows] : r.materialized)
        out << "materialized " << node << " (" << rows << (rows == 1 ? " row)\n" : " rows)\n");
    switch (r.reason) {
    case PauseReport::Reason::Breakpoint: out << "paused at " << r.at->child << "->" << r.at->parent << "\n"; break;
    case PauseReport::Reason::Cancelled: out << "cancelled\n"; break;
    default: break;
    }
}

constexpr const char *kReplHelp = "commands:\n"
                                  "  step                 materialize the next node\n"
                                  "  run-to N             materialize up to node N\n"
                                  "  resume               run to the end or the next breakpoint\n"
                                  "  show N               print the snapshot of node N\n"
                                  "  set minsup|minconf V change a threshold\n"
                                  "  break C-P / unbreak C-P\n"
                                  "  states, tree, events, help, quit\n";

int cmd_repl(const Common &c, const std::string &bps, const std::string &format_text, std::istream &in,
             std::ostream &out, std::ostream &err)
{
    OutputFormat format = parse_output_format(format_text);
    Loaded l = load(c);
    PhysicalPlan plan = per_node_plan(l.tree);
    if (!bps.empty()) plan.tree.breakpoints = breakpoint_list(bps);
    Session s("repl", std::move(plan), l.data);
    SyntaxStyle style{c.glyphs};
    out << "session over " << l.relation.size() << " rows, n=" << s.n() << "; type help for commands\n";
    auto node_arg = [](std::istringstream &words) {
        int id = 0;
        if (!(words >> id)) fail(Errc::InvalidValue, "expected a node id");
        return id;
    };
    std::string line;
    while (out << "> " << std::flush, std::getline(in, line)) {
        std::istringstream words(line);
        std::string cmd;
        if (!(words >> cmd)) continue;
        try {
            if (cmd == "quit" || cmd == "exit") break;
            if (cmd == "help") {
                out << kReplHelp;
            } else if (cmd == "step") {
                if (auto next = s.next_node()) print_report(s.run_until(*next), out);
                else out << "finished\n";
            } else if (cmd == "run-to") {
                print_report(s.run_until(node_arg(words)), out);
            } else if (cmd == "resume") {
                auto r = s.run_until();
                print_report(r, out);
                if (r.reason == PauseReport::Reason::Completion) out << format_relation(s.result()->relation, format);
            } else if (cmd == "show") {
                out << format_relation(s.inspect(node_arg(words))->relation, format);
            } else if (cmd == "set") {
                std::string name, value;
                if (!(words >> name >> value)) fail(Errc::InvalidValue, "usage: set minsup|minconf VALUE");
                auto r = s.set_param(name, parse_rational(value));
                out << name << " = " << to_string(name == "minsup" ? s.params().minsup : s.params().minconf)
                    << "; invalidated";
                if (r.invalidated.empty()) out << " nothing";
                for (int id : r.invalidated) out << " " << id;
                out << "\n";
            } else if (cmd == "break" || cmd == "unbreak") {
                std::string edge;
                if (!(words >> edge)) fail(Errc::InvalidValue, "usage: " + cmd + " CHILD-PARENT");
                for (const auto &b : breakpoint_list(edge)) s.set_breakpoint(b.child, b.parent, cmd == "break");
            } else if (cmd == "states") {
                for (auto [id, st] : s.states()) out << id << " " << to_string(st) << "\n";
            } else if (cmd == "tree") {
                out << explain_tree(s.plan().tree, style);
            } else if (cmd == "events") {
                out << s.event_log();
            } else {
                err << "unknown command '" << cmd << "'; type help\n";
                continue;
            }
            std::string extra;
            if (words >> extra) err << "ignored trailing input '" << extra << "'\n";
        } catch (const Error &e) {
            err << "error: " << e.what() << "\n";
        }
    }
    out << "\n";
    return 0;
}

int cmd_serve(const std::string &listen, const std::optional<std::string> &token, const std::vector<std::string> &dirs,
              std::size_t max_upload, const std::string &origin, std::ostream &out, std::ostream &err)
{
    auto colon = listen.rfind(':');
    if (colon == std::string::npos) fail(Errc::InvalidValue, "--listen expects host:port");
    int port = static_cast<int>(int_list(listen.substr(colon + 1), 1, "--listen")[0]);
    if (port <= 0 || port > 65535) fail(Errc::InvalidValue, "port out of range");
    ApiConfig cfg;
    cfg.token = token;
    for (const auto &d : dirs) cfg.data_dirs.emplace_back(d);
    cfg.max_upload = max_upload;
    cfg.cors_origin = origin;
    out << "listening on http://" << listen << std::endl;
    if (!serve(listen.substr(0, colon), port, cfg)) {
        err << "cannot listen on " << listen << "\n";
        return 4;
    }
    return 0;
}

} // namespace

int exit_code(Errc code)
{
    switch (code) {
    case Errc::ParseError:
    case Errc::MissingColumn:
    case Errc::UnboundSource:
    case Errc::SchemaMismatch: return 3;
    case Errc::ResourceLimit:
    case Errc::Cancelled:
    case Errc::SessionBusy:
    case Errc::NotMaterialized:
    case Errc::DivisionByZero:
    case Errc::MissingSubsetSupport: return 4;
    case Errc::UnknownAttribute:
    case Errc::KindMismatch:
    case Errc::InfeasibleConstraint:
    case Errc::NoAlgorithmApplicable:
    case Errc::EmptyPlanSet:
    case Errc::InvalidValue:
    case Errc::SyntaxError:
    case Errc::UnknownConstraint:
    case Errc::InvalidTree: return 2;
    }
    return 4;
}

int run_cli(const std::vector<std::string> &args, std::istream &in, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Association rule mining over a nested relational algebra", "nestmine"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every command");

    Common c;
    std::string format = "table", out_path, bps, stats, dir, listen = "127.0.0.1:8080", origin = "*";
    std::optional<std::string> token;
    std::vector<std::string> dirs;
    std::size_t max_upload = 10u << 20;

    auto *run = app.add_subcommand("run", "execute a query and print its result");
    add_common(run, c);
    run->add_option("--format", format, "table, csv or json")->capture_default_str()->check(CLI::IsMember({"table", "csv", "json"}));
    run->add_option("--out", out_path, "write the result to a file");
    run->add_option("--breakpoints", bps, "pause edges child-parent,...; prints each paused input");

    auto *explain = app.add_subcommand("explain", "print the tree, rewrites and plan costs");
    add_common(explain, c);
    explain->add_option("--stats", stats, "cost with n,m,w instead of the data");

    auto *trace = app.add_subcommand("trace", "run node by node and report every intermediate result");
    add_common(trace, c);
    trace->add_option("--out-dir", dir, "write <node-id>.snap files here");

    auto *repl = app.add_subcommand("repl", "step through a query interactively");
    add_common(repl, c);
    repl->add_option("--breakpoints", bps, "pause edges child-parent,...");
    repl->add_option("--format", format, "table, csv or json")->capture_default_str()->check(CLI::IsMember({"table", "csv", "json"}));

    auto *srv = app.add_subcommand("serve", "serve sessions over HTTP");
    srv->add_option("--listen", listen, "host:port")->capture_default_str();
    srv->add_option("--token", token, "require this bearer token");
    srv->add_option("--data-dir", dirs, "directory whose CSV files may be opened by path");
    srv->add_option("--max-upload", max_upload, "upload limit in bytes")->capture_default_str();
    srv->add_option("--cors-origin", origin, "allowed browser origin")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return 0;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(c, format, out_path, bps, out, err);
        if (explain->parsed()) return cmd_explain(c, stats, out);
        if (trace->parsed()) return cmd_trace(c, dir, out);
        if (repl->parsed()) return cmd_repl(c, bps, format, in, out, err);
        return cmd_serve(listen, token, dirs, max_upload, origin, out, err);
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::filesystem::filesystem_error &e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace nestmine
