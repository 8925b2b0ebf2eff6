#include "nestmine/session_api.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <httplib.h>

#include "nestmine/relation.hpp"

namespace nestmine {

using nlohmann::json;

namespace {

ApiResponse json_response(int status, const json &body)
{
    ApiResponse r;
    r.status = status;
    r.body = body.dump();
    return r;
}

ApiResponse error_response(int status, std::string_view code, const std::string &message)
{
    return json_response(status, {{"error", {{"code", code}, {"message", message}}}});
}

ApiResponse error_response(const Error &e, std::optional<int> status = std::nullopt)
{
    auto r = error_response(status.value_or(http_status(e.code())), to_string(e.code()), e.what());
    if (const auto *s = dynamic_cast<const SyntaxErrorAt *>(&e)) {
        auto j = json::parse(r.body);
        j["error"]["line"] = s->line();
        j["error"]["column"] = s->column();
        j["error"]["expected"] = s->expected();
        j["error"]["found"] = s->found();
        r.body = j.dump();
    }
    return r;
}

json parse_body(const ApiRequest &req)
{
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(Errc::InvalidValue, "request body must be a JSON object");
    return j;
}

std::vector<std::string> split_path(const std::string &path)
{
    std::vector<std::string> out;
    std::string part;
    std::istringstream in(path);
    while (std::getline(in, part, '/'))
        if (!part.empty()) out.push_back(part);
    return out;
}

std::optional<int> parse_node(const std::string &text)
{
    if (text.empty() || text.size() > 9 || !std::all_of(text.begin(), text.end(), ::isdigit)) return std::nullopt;
    return std::stoi(text);
}

json params_json(const MiningParams &p)
{
    return {{"minsup", to_string(p.minsup)},
            {"minconf", to_string(p.minconf)},
            {"n", p.n},
            {"threshold_mode", std::string(to_string(p.threshold_mode))}};
}

json breakpoint_json(const Breakpoint &b) { return {{"child", b.child}, {"parent", b.parent}, {"enabled", b.enabled}}; }

json schema_json(const Schema &s)
{
    json out = json::array();
    for (const auto &a : s) out.push_back({{"name", a.name}, {"type", a.type.to_string()}});
    return out;
}

std::string etag_of(const std::string &body)
{
    std::ostringstream out;
    out << '"' << std::hex << std::hash<std::string>{}(body) << '"';
    return out.str();
}

char delimiter_of(const std::string &text)
{
    if (text == "\\t" || text == "tab") return '\t';
    if (text.size() != 1) fail(Errc::InvalidValue, "delimiter must be one character");
    return text[0];
}

} // namespace

int http_status(Errc code)
{
    switch (code) {
    case Errc::SessionBusy:
    case Errc::NotMaterialized:
    case Errc::Cancelled: return 409;
    case Errc::InfeasibleConstraint:
    case Errc::InvalidTree:
    case Errc::NoAlgorithmApplicable:
    case Errc::EmptyPlanSet: return 422;
    case Errc::UnboundSource: return 404;
    case Errc::ResourceLimit:
    case Errc::DivisionByZero:
    case Errc::MissingSubsetSupport: return 500;
    case Errc::SchemaMismatch:
    case Errc::UnknownAttribute:
    case Errc::KindMismatch:
    case Errc::InvalidValue:
    case Errc::SyntaxError:
    case Errc::UnknownConstraint:
    case Errc::ParseError:
    case Errc::MissingColumn: return 400;
    }
    return 500;
}

json to_json(const PauseReport &r)
{
    json mats = json::array();
    for (auto [node, rows] : r.materialized) mats.push_back({{"node", node}, {"rows", rows}});
    return {{"reason", std::string(to_string(r.reason))},
            {"materialized", std::move(mats)},
            {"at", r.at ? breakpoint_json(*r.at) : json(nullptr)}};
}

json to_json(const InvalidationReport &r) { return {{"invalidated", r.invalidated}}; }

json to_json(const Snapshot &s)
{
    json j = to_json(s.relation);
    j["node"] = s.node;
    j["row_count"] = s.rows;
    j["produced_at"] = s.produced_at;
    return j;
}

json tree_json(const QueryTree &tree)
{
    json nodes = json::array(), edges = json::array(), spans = json::array();
    for (int id : tree.topo_order()) {
        const PlanNode &n = tree.node(id);
        const ModuleSpan *span = tree.span_of(id);
        nodes.push_back({{"id", id},
                         {"op", std::string(op_name(n.op, false))},
                         {"label", describe_op(n.op, SyntaxStyle{true})},
                         {"label_ascii", describe_op(n.op)},
                         {"step", n.step},
                         {"children", n.children},
                         {"module", span ? json(std::string(to_string(span->kind))) : json(nullptr)}});
        for (int c : n.children) edges.push_back({{"child", c}, {"parent", id}});
    }
    for (const auto &s : tree.spans)
        spans.push_back({{"kind", std::string(to_string(s.kind))},
                         {"nodes", s.nodes},
                         {"top", s.top},
                         {"inputs", s.inputs},
                         {"params", s.params}});
    return {{"root", tree.root()}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"spans", std::move(spans)}};
}

SessionService::SessionService(ApiConfig config) : config_(std::move(config)) {}

void SessionService::add_dataset(const std::string &name, NestedRelation data)
{
    std::lock_guard lock(mutex_);
    datasets_[name] = Dataset{std::move(data), "upload"};
}

std::shared_ptr<Session> SessionService::session(const std::string &id) const
{
    auto e = entry(id);
    return e ? e->session : nullptr;
}

std::optional<SessionService::Entry> SessionService::entry(const std::string &id) const
{
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return std::nullopt;
    return it->second;
}

ApiResponse SessionService::handle(const ApiRequest &req)
{
    ApiResponse r = [&]() -> ApiResponse {
        if (req.method == "OPTIONS") {
            ApiResponse pre;
            pre.status = 204;
            pre.content_type.clear();
            pre.headers["Access-Control-Allow-Methods"] = "GET, POST, PUT, PATCH, DELETE, OPTIONS";
            pre.headers["Access-Control-Allow-Headers"] = "Authorization, Content-Type, If-None-Match";
            pre.headers["Access-Control-Max-Age"] = "600";
            return pre;
        }
        auto parts = split_path(req.path);
        bool health = parts.size() == 1 && parts[0] == "health";
        if (config_.token && !health) {
            auto auth = req.headers.find("authorization");
            if (auth == req.headers.end() || auth->second != "Bearer " + *config_.token) {
                auto denied = error_response(401, "Unauthorized", "missing or wrong bearer token");
                denied.headers["WWW-Authenticate"] = "Bearer";
                return denied;
            }
        }
        auto method_not_allowed = [&] {
            return error_response(405, "MethodNotAllowed", req.method + " is not supported on " + req.path);
        };
        try {
            if (health) return json_response(200, {{"status", "ok"}});
            if (parts.empty()) return error_response(404, "NotFound", "no route for " + req.path);
            if (parts[0] == "datasets" && parts.size() == 1) {
                if (req.method == "GET") return list_datasets();
                if (req.method == "POST") return post_dataset(req);
                return method_not_allowed();
            }
            if (parts[0] != "sessions") return error_response(404, "NotFound", "no route for " + req.path);
            if (parts.size() == 1) {
                if (req.method == "GET") return list_sessions();
                if (req.method == "POST") return post_session(req);
                return method_not_allowed();
            }
            auto e = entry(parts[1]);
            if (!e) return error_response(404, "NotFound", "no session " + parts[1]);
            Session &s = *e->session;
            if (parts.size() == 2) {
                if (req.method == "GET") return session_resource(parts[1], *e);
                if (req.method == "DELETE") {
                    s.cancel();
                    std::lock_guard lock(mutex_);
                    sessions_.erase(parts[1]);
                    ApiResponse gone;
                    gone.status = 204;
                    gone.content_type.clear();
                    return gone;
                }
                return method_not_allowed();
            }
            const std::string &what = parts[2];
            if (parts.size() == 3) {
                if (what == "run" || what == "resume" || what == "step" || what == "cancel") {
                    if (req.method != "POST") return method_not_allowed();
                    if (what == "run") return run(s, req);
                    if (what == "cancel") {
                        s.cancel();
                        return json_response(200, {{"cancelled", true}});
                    }
                    PauseReport report;
                    if (what == "resume") report = s.resume();
                    else if (auto next = s.next_node()) report = s.run_until(*next);
                    auto j = to_json(report);
                    j["finished"] = s.finished();
                    return json_response(200, j);
                }
                if (what == "params") return req.method == "PATCH" ? patch_params(s, req) : method_not_allowed();
                if (what == "breakpoints") {
                    if (req.method == "PUT") return put_breakpoint(s, req);
                    if (req.method != "GET") return method_not_allowed();
                    json out = json::array();
                    for (const auto &b : s.breakpoints()) out.push_back(breakpoint_json(b));
                    return json_response(200, out);
                }
                if (what == "events") {
                    if (req.method != "GET") return method_not_allowed();
                    ApiResponse log;
                    log.content_type = "text/plain";
                    log.body = s.event_log();
                    return log;
                }
            }
            if (parts.size() == 5 && what == "nodes" && parts[4] == "snapshot") {
                if (req.method != "GET") return method_not_allowed();
                auto node = parse_node(parts[3]);
                if (!node || !s.plan().tree.has_node(*node))
                    return error_response(404, "NotFound", "no node " + parts[3] + " in session " + parts[1]);
                return snapshot(s, *node, req);
            }
            return error_response(404, "NotFound", "no route for " + req.path);
        } catch (const Error &e) {
            return error_response(e);
        } catch (const json::exception &e) {
            return error_response(400, "InvalidValue", e.what());
        }
    }();
    r.headers["Access-Control-Allow-Origin"] = config_.cors_origin;
    r.headers["Access-Control-Expose-Headers"] = "ETag";
    return r;
}

ApiResponse SessionService::post_dataset(const ApiRequest &req)
{
    if (req.body.size() > config_.max_upload)
        return error_response(413, "PayloadTooLarge", "uploads are limited to " + std::to_string(config_.max_upload) + " bytes");
    auto ctype = req.headers.find("content-type");
    bool by_path = ctype != req.headers.end() && ctype->second.find("application/json") != std::string::npos;

    std::map<std::string, std::string> opts = req.query;
    DatasetConfig cfg;
    std::string text, origin = "upload";
    if (by_path) {
        json j = parse_body(req);
        for (const auto &[k, v] : j.items()) {
            if (k != "name" && k != "path" && k != "tid_column" && k != "item_column" && k != "delimiter")
                fail(Errc::InvalidValue, "unknown key '" + k + "'");
            if (!v.is_string()) fail(Errc::InvalidValue, k + " must be a string");
            opts[k] = v.get<std::string>();
        }
        if (!opts.count("path")) fail(Errc::InvalidValue, "path is required");
        namespace fs = std::filesystem;
        fs::path want(opts["path"]);
        std::optional<fs::path> found;
        for (const auto &dir : config_.data_dirs) {
            fs::path root = fs::weakly_canonical(dir);
            fs::path candidate = fs::weakly_canonical(want.is_absolute() ? want : root / want);
            auto rel = candidate.lexically_relative(root);
            if (rel.empty() || *rel.begin() == "..") continue;
            if (fs::is_regular_file(candidate)) {
                found = candidate;
                break;
            }
        }
        if (!found) return error_response(403, "Forbidden", "path is not a file under an allowed data directory");
        if (fs::file_size(*found) > config_.max_upload)
            return error_response(413, "PayloadTooLarge", "file exceeds the upload limit");
        cfg.path = found->string();
        origin = found->string();
        if (!opts.count("name")) opts["name"] = found->stem().string();
    } else {
        text = req.body;
    }
    if (!opts.count("name") || opts["name"].empty()) fail(Errc::InvalidValue, "dataset name is required");
    if (opts.count("tid_column")) cfg.tid_column = opts["tid_column"];
    if (opts.count("item_column")) cfg.item_column = opts["item_column"];
    if (opts.count("delimiter")) cfg.delimiter = delimiter_of(opts["delimiter"]);
    NestedRelation data = with_standard_columns(by_path ? load_transactions_csv(cfg) : parse_transactions_csv(text, cfg), cfg);
    std::int64_t n = transactions_from(data).n;
    json out{{"name", opts["name"]}, {"rows", data.size()}, {"n", n}, {"schema", schema_json(data.schema())}};
    {
        std::lock_guard lock(mutex_);
        datasets_[opts["name"]] = Dataset{std::move(data), origin};
    }
    return json_response(201, out);
}

ApiResponse SessionService::list_datasets() const
{
    std::lock_guard lock(mutex_);
    json out = json::array();
    for (const auto &[name, d] : datasets_)
        out.push_back({{"name", name}, {"rows", d.data.size()}, {"schema", schema_json(d.data.schema())}});
    return json_response(200, out);
}

ApiResponse SessionService::post_session(const ApiRequest &req)
{
    json j = parse_body(req);
    for (const auto &[k, v] : j.items())
        if (k != "dataset" && k != "query" && k != "plan" && k != "breakpoints")
            fail(Errc::InvalidValue, "unknown key '" + k + "'");
    if (!j.contains("dataset") || !j["dataset"].is_string()) fail(Errc::InvalidValue, "dataset must name an uploaded dataset");
    if (!j.contains("query") || !j["query"].is_object()) fail(Errc::InvalidValue, "query must be an object");
    std::string plan_kind = j.value("plan", std::string("per_node"));
    if (plan_kind != "per_node" && plan_kind != "optimized")
        fail(Errc::InvalidValue, "plan must be per_node or optimized");
    std::vector<Breakpoint> bps;
    if (j.contains("breakpoints")) {
        if (!j["breakpoints"].is_array()) fail(Errc::InvalidValue, "breakpoints must be an array");
        for (const auto &b : j["breakpoints"]) {
            if (!b.is_object() || !b.contains("child") || !b.contains("parent"))
                fail(Errc::InvalidValue, "a breakpoint needs child and parent");
            bps.push_back({b["child"].get<int>(), b["parent"].get<int>(), b.value("enabled", true)});
        }
    }
    QuerySpec spec = query_from_json(j["query"]);

    std::string name = j["dataset"].get<std::string>();
    NestedRelation data;
    {
        std::lock_guard lock(mutex_);
        auto it = datasets_.find(name);
        if (it == datasets_.end()) return error_response(404, "NotFound", "no dataset " + name);
        data = it->second.data;
    }

    try {
        QueryTree tree = build_tree(spec);
        SourceData sources{{spec.source, data}};
        Stats stats = stats_from(transactions_from(data));
        PhysicalPlan plan;
        if (plan_kind == "optimized") {
            auto e = optimize(tree, stats, default_rules());
            plan = e.plans[e.chosen];
        } else {
            plan = per_node_plan(tree);
            plan.cost = estimate_cost(plan, stats);
        }
        for (const auto &b : bps) {
            const auto &t = plan.tree;
            if (!t.has_node(b.parent) || !t.has_node(b.child))
                fail(Errc::InvalidTree, "breakpoint names an unknown node");
            const auto &ch = t.node(b.parent).children;
            if (std::find(ch.begin(), ch.end(), b.child) == ch.end())
                fail(Errc::InvalidTree, "no edge " + std::to_string(b.child) + "->" + std::to_string(b.parent));
            plan.tree.breakpoints.push_back(b);
        }
        std::string id;
        {
            std::lock_guard lock(mutex_);
            id = "s" + std::to_string(next_id_++);
        }
        auto session = std::make_shared<Session>(id, std::move(plan), std::move(sources));
        if (config_.on_event) session->set_observer([cb = config_.on_event, id](const Event &e) { cb(id, e); });
        Entry e{session, name, spec, plan_kind};
        {
            std::lock_guard lock(mutex_);
            sessions_[id] = e;
        }
        auto r = session_resource(id, e);
        r.status = 201;
        r.headers["Location"] = "/sessions/" + id;
        return r;
    } catch (const Error &e) {
        if (e.code() == Errc::InvalidValue) return error_response(e, 422);
        throw;
    }
}

ApiResponse SessionService::list_sessions() const
{
    std::lock_guard lock(mutex_);
    json out = json::array();
    for (const auto &[id, e] : sessions_)
        out.push_back({{"id", id},
                       {"dataset", e.dataset},
                       {"template", std::string(to_string(e.spec.kind))},
                       {"finished", e.session->finished()},
                       {"cancelled", e.session->cancelled()}});
    return json_response(200, out);
}

ApiResponse SessionService::session_resource(const std::string &id, const Entry &e) const
{
    const Session &s = *e.session;
    const PhysicalPlan &plan = s.plan();
    json tree = tree_json(plan.tree);
    auto states = s.states();
    for (auto &n : tree["nodes"]) {
        int node = n["id"].get<int>();
        n["state"] = std::string(to_string(states.at(node)));
        n["rows"] = nullptr;
        if (states.at(node) == NodeState::Materialized) {
            try {
                n["rows"] = s.inspect(node)->rows;
            } catch (const Error &) {
                n["state"] = std::string(to_string(s.state(node)));
            }
        }
    }
    json bps = json::array();
    for (const auto &b : s.breakpoints()) bps.push_back(breakpoint_json(b));
    tree["breakpoints"] = std::move(bps);
    auto next = s.next_node();
    return json_response(200, {{"id", id},
                               {"dataset", e.dataset},
                               {"query", to_json(e.spec)},
                               {"params", params_json(s.params())},
                               {"plan", {{"kind", e.plan_kind}, {"signature", plan.signature()}, {"cost", plan.cost.str()}}},
                               {"tree", std::move(tree)},
                               {"finished", s.finished()},
                               {"cancelled", s.cancelled()},
                               {"next_node", next ? json(*next) : json(nullptr)}});
}

ApiResponse SessionService::run(Session &s, const ApiRequest &req)
{
    json j = parse_body(req);
    for (const auto &[k, v] : j.items())
        if (k != "until") fail(Errc::InvalidValue, "unknown key '" + k + "'");
    json until = j.value("until", json("breakpoint"));
    PauseReport report;
    if (until.is_number_integer()) report = s.run_until(until.get<int>());
    else if (until == "breakpoint") report = s.run_until();
    else if (until == "end") report = s.run_to_completion();
    else fail(Errc::InvalidValue, "until must be a node id, \"breakpoint\" or \"end\"");
    auto out = to_json(report);
    out["finished"] = s.finished();
    return json_response(200, out);
}

ApiResponse SessionService::snapshot(Session &s, int node, const ApiRequest &req) const
{
    SnapshotPtr snap = s.inspect(node);
    auto format = req.query.find("format");
    std::string f = format == req.query.end() ? "json" : format->second;
    ApiResponse r;
    if (f == "json") {
        r.body = to_json(*snap).dump();
    } else if (f == "text") {
        r.content_type = "text/plain";
        r.body = canonical_render(snap->relation);
    } else {
        fail(Errc::InvalidValue, "format must be json or text");
    }
    r.headers["ETag"] = etag_of(f + "\n" + r.body);
    r.headers["Cache-Control"] = "no-cache";
    auto match = req.headers.find("if-none-match");
    if (match != req.headers.end() && match->second == r.headers["ETag"]) {
        r.status = 304;
        r.body.clear();
    }
    return r;
}

ApiResponse SessionService::patch_params(Session &s, const ApiRequest &req)
{
    json j = parse_body(req);
    if (j.empty()) fail(Errc::InvalidValue, "give minsup or minconf");
    for (const auto &[k, v] : j.items())
        if (k != "minsup" && k != "minconf") fail(Errc::InvalidValue, "unknown parameter '" + k + "'");
    std::vector<std::pair<std::string, Rational>> changes;
    for (const char *k : {"minsup", "minconf"})
        if (j.contains(k)) changes.emplace_back(k, threshold_from_json(j[k], k));
    std::set<int> all;
    for (const auto &[k, v] : changes) {
        if (v <= Rational(0) || v > Rational(1)) fail(Errc::InvalidValue, k + " must lie in (0, 1]");
    }
    for (const auto &[k, v] : changes)
        for (int id : s.set_param(k, v).invalidated) all.insert(id);
    InvalidationReport report{{all.begin(), all.end()}};
    auto out = to_json(report);
    out["params"] = params_json(s.params());
    return json_response(200, out);
}

ApiResponse SessionService::put_breakpoint(Session &s, const ApiRequest &req)
{
    json j = parse_body(req);
    if (!j.contains("child") || !j.contains("parent") || !j["child"].is_number_integer() ||
        !j["parent"].is_number_integer())
        fail(Errc::InvalidValue, "child and parent must be node ids");
    bool enabled = j.value("enabled", true);
    s.set_breakpoint(j["child"].get<int>(), j["parent"].get<int>(), enabled);
    json out = json::array();
    for (const auto &b : s.breakpoints()) out.push_back(breakpoint_json(b));
    return json_response(200, out);
}

void mount(httplib::Server &server, SessionService &service)
{
    auto handler = [&service](const httplib::Request &req, httplib::Response &res) {
        ApiRequest r;
        r.method = req.method;
        r.path = req.path;
        for (const auto &[k, v] : req.params) r.query.emplace(k, v);
        for (const auto &[k, v] : req.headers) {
            std::string name = k;
            std::transform(name.begin(), name.end(), name.begin(), ::tolower);
            r.headers.emplace(name, v);
        }
        r.body = req.body;
        if (req.is_multipart_form_data()) {
            r.body.clear();
            r.headers.erase("content-type");
            bool have_file = false;
            for (const auto &[field, part] : req.files) {
                if (!part.filename.empty() && !have_file) {
                    r.body = part.content;
                    have_file = true;
                    if (!r.query.count("name")) r.query["name"] = std::filesystem::path(part.filename).stem().string();
                } else if (part.filename.empty()) {
                    r.query[field] = part.content;
                }
            }
        }
        ApiResponse out = service.handle(r);
        res.status = out.status;
        for (const auto &[k, v] : out.headers) res.set_header(k, v);
        if (!out.content_type.empty()) res.set_content(out.body, out.content_type);
    };
    server.Get(".*", handler);
    server.Post(".*", handler);
    server.Put(".*", handler);
    server.Patch(".*", handler);
    server.Delete(".*", handler);
    server.Options(".*", handler);
}

bool serve(const std::string &host, int port, const ApiConfig &config)
{
    SessionService service(config);
    httplib::Server server;
    server.set_payload_max_length(config.max_upload + (64u << 10));
    mount(server, service);
    return server.listen(host, port);
}

} // namespace nestmine
