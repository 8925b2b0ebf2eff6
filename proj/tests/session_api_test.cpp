#include <condition_variable>
#include <fstream>
#include <future>
#include <random>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "fixtures.hpp"
#include "nestmine/session_api.hpp"

using namespace nestmine;
using namespace nestmine::testing;
using nlohmann::json;

namespace {

std::string read_file(const std::string &path)
{
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), {}};
}

ApiRequest request(std::string method, std::string path, const json &body = nullptr)
{
    ApiRequest r{std::move(method), std::move(path), {}, {}, {}};
    if (!body.is_null()) {
        r.body = body.dump();
        r.headers["content-type"] = "application/json";
    }
    return r;
}

struct Api
{
    SessionService service;

    explicit Api(ApiConfig cfg = {}) : service(std::move(cfg))
    {
        service.add_dataset("purchase", purchase());
        service.add_dataset("newpurchase", new_purchase());
    }

    ApiResponse call(std::string method, std::string path, const json &body = nullptr)
    {
        return service.handle(request(std::move(method), std::move(path), body));
    }

    std::string open(const json &query, const std::string &dataset = "purchase", json extra = json::object())
    {
        extra["dataset"] = dataset;
        extra["query"] = query;
        auto r = call("POST", "/sessions", extra);
        EXPECT_EQ(r.status, 201) << r.body;
        return r.json()["id"].get<std::string>();
    }
};

json classic_query() { return {{"template", "classic"}, {"minsup", "3/10"}, {"minconf", "6/10"}}; }

json caq_query()
{
    return {{"template", "caq"},
            {"source", "NewPurchase"},
            {"minsup", "1/10"},
            {"minconf", "2/10"},
            {"body", {{"lo", 2}, {"hi", 2}}},
            {"head", {{"lo", 2}, {"hi", 2}}}};
}

std::map<int, std::string> node_states(const json &resource)
{
    std::map<int, std::string> out;
    for (const auto &n : resource["tree"]["nodes"]) out[n["id"].get<int>()] = n["state"].get<std::string>();
    return out;
}

std::vector<std::pair<int, std::size_t>> materialized(const json &report)
{
    std::vector<std::pair<int, std::size_t>> out;
    for (const auto &m : report["materialized"]) out.emplace_back(m["node"].get<int>(), m["rows"].get<std::size_t>());
    return out;
}

/// Holds a run at its first materialization until released.
struct Gate
{
    std::mutex m;
    std::condition_variable cv;
    bool entered = false, released = false;

    void hold()
    {
        std::unique_lock lock(m);
        if (entered) return;
        entered = true;
        cv.notify_all();
        cv.wait(lock, [&] { return released; });
    }
    void wait_entered()
    {
        std::unique_lock lock(m);
        cv.wait(lock, [&] { return entered; });
    }
    void release()
    {
        std::lock_guard lock(m);
        released = true;
        cv.notify_all();
    }
};

} // namespace

TEST(Sessions, CreateClassic)
{
    Api api;
    auto r = api.call("POST", "/sessions", {{"dataset", "purchase"}, {"query", classic_query()}});
    ASSERT_EQ(r.status, 201) << r.body;
    EXPECT_EQ(r.headers.at("Location"), "/sessions/s1");
    auto j = r.json();
    EXPECT_EQ(j["tree"]["nodes"].size(), 14u);
    for (const auto &n : j["tree"]["nodes"]) {
        EXPECT_EQ(n["state"], "pending");
        EXPECT_TRUE(n["rows"].is_null());
    }
    EXPECT_EQ(j["tree"]["spans"].size(), 3u);
    EXPECT_EQ(j["tree"]["root"], 13);
    EXPECT_EQ(j["tree"]["edges"].size(), 14u);
    EXPECT_EQ(j["params"]["minsup"], "3/10");
    EXPECT_EQ(j["params"]["n"], 4);
    EXPECT_EQ(j["plan"]["kind"], "per_node");
    EXPECT_EQ(j["next_node"], 1);
    EXPECT_FALSE(j["finished"].get<bool>());
}

TEST(Sessions, CreateCaqHasModuleBoxes)
{
    Api api;
    auto id = api.open(caq_query(), "newpurchase");
    auto j = api.call("GET", "/sessions/" + id).json();
    std::vector<std::string> kinds;
    for (const auto &s : j["tree"]["spans"]) kinds.push_back(s["kind"]);
    EXPECT_EQ(kinds, (std::vector<std::string>{"DataPreparation", "FrequentItemsets", "RuleGeneration"}));
    EXPECT_EQ(j["tree"]["nodes"].size(), 22u);
    EXPECT_EQ(j["tree"]["spans"][1]["top"], 9);
}

TEST(Sessions, CreateErrors)
{
    Api api;
    auto minsup0 = classic_query();
    minsup0["minsup"] = 0;
    EXPECT_EQ(api.call("POST", "/sessions", {{"dataset", "purchase"}, {"query", minsup0}}).status, 422);
    auto infeasible = caq_query();
    infeasible["body"] = {{"lo", 3}, {"hi", 2}};
    EXPECT_EQ(api.call("POST", "/sessions", {{"dataset", "newpurchase"}, {"query", infeasible}}).status, 422);
    EXPECT_EQ(api.call("POST", "/sessions", {{"dataset", "nothing"}, {"query", classic_query()}}).status, 404);
    EXPECT_EQ(api.call("POST", "/sessions", {{"dataset", "purchase"}, {"query", {{"template", "zzz"}}}}).status, 400);
    EXPECT_EQ(api.call("POST", "/sessions", {{"dataset", "purchase"}}).status, 400);
    EXPECT_EQ(api.call("POST", "/sessions", {{"dataset", "purchase"}, {"query", classic_query()}, {"x", 1}}).status, 400);
    auto text = api.call("POST", "/sessions", {{"dataset", "purchase"}, {"query", {{"query", "MINE RULE"}}}});
    EXPECT_EQ(text.status, 400);
    EXPECT_EQ(text.json()["error"]["code"], "SyntaxError");
    EXPECT_EQ(text.json()["error"]["line"], 1);
    auto bad_edge = api.call("POST", "/sessions",
                             {{"dataset", "purchase"}, {"query", classic_query()}, {"breakpoints", {{{"child", 1}, {"parent", 9}}}}});
    EXPECT_EQ(bad_edge.status, 422);
    ApiRequest garbage = request("POST", "/sessions");
    garbage.body = "{not json";
    EXPECT_EQ(api.service.handle(garbage).status, 400);
}

TEST(Run, UntilNodeSeven)
{
    Api api;
    auto id = api.open(classic_query());
    auto r = api.call("POST", "/sessions/" + id + "/run", {{"until", 7}});
    ASSERT_EQ(r.status, 200) << r.body;
    auto j = r.json();
    EXPECT_EQ(j["reason"], "target");
    EXPECT_EQ(materialized(j),
              (std::vector<std::pair<int, std::size_t>>{{1, 10}, {2, 4}, {3, 4}, {4, 20}, {5, 11}, {6, 7}, {7, 7}}));
    EXPECT_FALSE(j["finished"].get<bool>());
    auto states = node_states(api.call("GET", "/sessions/" + id).json());
    EXPECT_EQ(states[7], "materialized");
    EXPECT_EQ(states[8], "pending");
}

TEST(Run, UntilEnd)
{
    Api api;
    auto id = api.open(classic_query());
    auto j = api.call("POST", "/sessions/" + id + "/run", {{"until", "end"}}).json();
    EXPECT_EQ(j["reason"], "completion");
    EXPECT_EQ(materialized(j).back(), (std::pair<int, std::size_t>{13, 9}));
    EXPECT_TRUE(j["finished"].get<bool>());
    EXPECT_EQ(api.call("POST", "/sessions/" + id + "/run", {{"until", "sideways"}}).status, 400);
    EXPECT_EQ(api.call("POST", "/sessions/" + id + "/run", {{"until", 99}}).status, 400);
    EXPECT_EQ(api.call("GET", "/sessions/" + id + "/run").status, 405);
}

TEST(Run, StepAdvancesOneNode)
{
    Api api;
    auto id = api.open(classic_query());
    json last;
    for (int i = 0; i < 7; ++i) last = api.call("POST", "/sessions/" + id + "/step").json();
    EXPECT_EQ(materialized(last), (std::vector<std::pair<int, std::size_t>>{{7, 7}}));
    auto res = api.call("GET", "/sessions/" + id).json();
    for (const auto &n : res["tree"]["nodes"])
        if (n["id"] == 7) EXPECT_EQ(n["rows"], 7);
    EXPECT_EQ(res["next_node"], 8);
}

TEST(Snapshot, JsonTextAndEtag)
{
    Api api;
    auto id = api.open(classic_query());
    api.call("POST", "/sessions/" + id + "/run", {{"until", "end"}});
    auto r = api.call("GET", "/sessions/" + id + "/nodes/5/snapshot");
    ASSERT_EQ(r.status, 200) << r.body;
    auto j = r.json();
    EXPECT_EQ(j["rows"].size(), 11u);
    EXPECT_EQ(j["row_count"], 11);
    EXPECT_EQ(j["schema"].size(), 2u);
    auto again = api.call("GET", "/sessions/" + id + "/nodes/5/snapshot");
    EXPECT_EQ(again.headers.at("ETag"), r.headers.at("ETag"));
    EXPECT_EQ(again.body, r.body);

    ApiRequest cond = request("GET", "/sessions/" + id + "/nodes/5/snapshot");
    cond.headers["if-none-match"] = r.headers.at("ETag");
    EXPECT_EQ(api.service.handle(cond).status, 304);

    ApiRequest text = request("GET", "/sessions/" + id + "/nodes/13/snapshot");
    text.query["format"] = "text";
    auto t = api.service.handle(text);
    EXPECT_EQ(t.content_type, "text/plain");
    EXPECT_EQ(parse_canonical(t.body).size(), 9u);
    EXPECT_NE(t.headers.at("ETag"), r.headers.at("ETag"));

    auto rules = api.call("GET", "/sessions/" + id + "/nodes/13/snapshot").json();
    EXPECT_EQ(rules["rows"][0][2], (json{{"num", 1}, {"den", 2}}));
}

TEST(Snapshot, Errors)
{
    Api api;
    auto id = api.open(classic_query());
    auto pending = api.call("GET", "/sessions/" + id + "/nodes/5/snapshot");
    EXPECT_EQ(pending.status, 409);
    EXPECT_EQ(pending.json()["error"]["code"], "NotMaterialized");
    EXPECT_EQ(api.call("GET", "/sessions/" + id + "/nodes/99/snapshot").status, 404);
    EXPECT_EQ(api.call("GET", "/sessions/" + id + "/nodes/x/snapshot").status, 404);
    EXPECT_EQ(api.call("GET", "/sessions/zz/nodes/1/snapshot").status, 404);
    api.call("POST", "/sessions/" + id + "/run", {{"until", 5}});
    ApiRequest fmt = request("GET", "/sessions/" + id + "/nodes/5/snapshot");
    fmt.query["format"] = "xml";
    EXPECT_EQ(api.service.handle(fmt).status, 400);
}

TEST(Params, MinconfAfterCompletionInvalidatesTwo)
{
    Api api;
    auto id = api.open(classic_query());
    api.call("POST", "/sessions/" + id + "/run", {{"until", "end"}});
    auto r = api.call("PATCH", "/sessions/" + id + "/params", {{"minconf", "0.7"}});
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(r.json()["invalidated"], (json{12, 13}));
    EXPECT_EQ(r.json()["params"]["minconf"], "7/10");
    auto states = node_states(api.call("GET", "/sessions/" + id).json());
    EXPECT_EQ(states[12], "invalidated");
    EXPECT_EQ(states[11], "materialized");
}

TEST(Params, MinsupBeforeStepSixGivesNoRules)
{
    Api api;
    auto id = api.open(classic_query());
    api.call("POST", "/sessions/" + id + "/run", {{"until", 5}});
    EXPECT_EQ(api.call("PATCH", "/sessions/" + id + "/params", {{"minsup", 0.5}}).status, 200);
    auto done = api.call("POST", "/sessions/" + id + "/resume").json();
    EXPECT_EQ(done["reason"], "completion");
    EXPECT_EQ(api.call("GET", "/sessions/" + id + "/nodes/13/snapshot").json()["rows"].size(), 0u);
    auto fi = api.call("GET", "/sessions/" + id + "/nodes/7/snapshot").json();
    ASSERT_EQ(fi["rows"].size(), 1u);
    EXPECT_EQ(fi["rows"][0][0], (json{"J"}));
}

TEST(Params, Rejections)
{
    Api api;
    auto id = api.open(classic_query());
    EXPECT_EQ(api.call("PATCH", "/sessions/" + id + "/params", {{"minsup", 0}}).status, 400);
    EXPECT_EQ(api.call("PATCH", "/sessions/" + id + "/params", {{"minsup", "3/2"}}).status, 400);
    EXPECT_EQ(api.call("PATCH", "/sessions/" + id + "/params", {{"n", 3}}).status, 400);
    EXPECT_EQ(api.call("PATCH", "/sessions/" + id + "/params", json::object()).status, 400);
    EXPECT_EQ(api.call("PATCH", "/sessions/" + id + "/params", {{"minsup", true}}).status, 400);
    EXPECT_EQ(api.call("GET", "/sessions/" + id).json()["params"]["minsup"], "3/10");
}

TEST(Sessions, DeleteThenNotFound)
{
    Api api;
    auto id = api.open(classic_query());
    EXPECT_EQ(api.call("DELETE", "/sessions/" + id).status, 204);
    EXPECT_EQ(api.call("GET", "/sessions/" + id).status, 404);
    EXPECT_EQ(api.call("DELETE", "/sessions/" + id).status, 404);
}

TEST(Sessions, ListAndEvents)
{
    Api api;
    api.open(classic_query());
    auto id = api.open(caq_query(), "newpurchase");
    auto list = api.call("GET", "/sessions").json();
    ASSERT_EQ(list.size(), 2u);
    EXPECT_EQ(list[1]["template"], "caq");
    api.call("POST", "/sessions/" + id + "/run", {{"until", 3}});
    auto log = api.call("GET", "/sessions/" + id + "/events");
    EXPECT_EQ(log.content_type, "text/plain");
    EXPECT_NE(log.body.find("materialize 3 rows=4"), std::string::npos) << log.body;
}

TEST(Sessions, CancelFreezes)
{
    Api api;
    auto id = api.open(classic_query());
    api.call("POST", "/sessions/" + id + "/step");
    EXPECT_EQ(api.call("POST", "/sessions/" + id + "/cancel").status, 200);
    auto r = api.call("POST", "/sessions/" + id + "/run", {{"until", "end"}});
    EXPECT_EQ(r.status, 409);
    EXPECT_EQ(r.json()["error"]["code"], "Cancelled");
    EXPECT_TRUE(api.call("GET", "/sessions/" + id).json()["cancelled"].get<bool>());
}

TEST(Breakpoints, PutAndPause)
{
    Api api;
    auto id = api.open(classic_query(), "purchase", {{"breakpoints", {{{"child", 12}, {"parent", 13}}}}});
    auto r = api.call("POST", "/sessions/" + id + "/run");
    EXPECT_EQ(r.json()["reason"], "breakpoint");
    EXPECT_EQ(r.json()["at"]["child"], 12);
    auto put = api.call("PUT", "/sessions/" + id + "/breakpoints", {{"child", 5}, {"parent", 6}, {"enabled", false}});
    ASSERT_EQ(put.status, 200) << put.body;
    EXPECT_EQ(put.json().size(), 2u);
    EXPECT_EQ(api.call("PUT", "/sessions/" + id + "/breakpoints", {{"child", 1}, {"parent", 9}}).status, 400);
    EXPECT_EQ(api.call("GET", "/sessions/" + id + "/breakpoints").json().size(), 2u);
    EXPECT_EQ(api.call("POST", "/sessions/" + id + "/resume").json()["reason"], "completion");
}

TEST(Datasets, UploadAndPaths)
{
    ApiConfig cfg;
    cfg.data_dirs = {NESTMINE_DATA_DIR};
    SessionService service(cfg);
    ApiRequest up = request("POST", "/datasets");
    up.query["name"] = "p";
    up.body = read_file(data_path("purchase.csv"));
    auto r = service.handle(up);
    ASSERT_EQ(r.status, 201) << r.body;
    EXPECT_EQ(r.json()["rows"], 10);
    EXPECT_EQ(r.json()["n"], 4);

    auto byp = service.handle(request("POST", "/datasets", {{"path", "newpurchase.csv"}}));
    ASSERT_EQ(byp.status, 201) << byp.body;
    EXPECT_EQ(byp.json()["name"], "newpurchase");
    EXPECT_EQ(byp.json()["schema"].size(), 7u);
    EXPECT_EQ(service.handle(request("POST", "/datasets", {{"path", "../CMakeLists.txt"}})).status, 403);
    EXPECT_EQ(service.handle(request("POST", "/datasets", {{"path", "/etc/passwd"}})).status, 403);
    EXPECT_EQ(service.handle(request("POST", "/datasets", {{"path", "purchase.csv"}, {"x", "1"}})).status, 400);

    ApiRequest renamed = request("POST", "/datasets");
    renamed.query = {{"name", "r"}, {"tid_column", "basket"}, {"item_column", "sku"}, {"delimiter", ";"}};
    renamed.body = "basket;sku\n1;a\n1;b\n2;a\n";
    ASSERT_EQ(service.handle(renamed).status, 201);
    ApiRequest bad = request("POST", "/datasets");
    bad.query["name"] = "b";
    bad.body = "tid:int,item\nx,a\n";
    auto bad_r = service.handle(bad);
    EXPECT_EQ(bad_r.status, 400);
    EXPECT_EQ(bad_r.json()["error"]["code"], "ParseError");
    ApiRequest unnamed = request("POST", "/datasets");
    unnamed.body = "tid,item\n1,a\n";
    EXPECT_EQ(service.handle(unnamed).status, 400);

    auto list = service.handle(request("GET", "/datasets")).json();
    EXPECT_EQ(list.size(), 3u);

    ApiConfig tiny;
    tiny.max_upload = 16;
    SessionService small(tiny);
    EXPECT_EQ(small.handle(up).status, 413);
}

TEST(Transport, TokenCorsAndRoutes)
{
    ApiConfig cfg;
    cfg.token = "sesame";
    cfg.cors_origin = "http://localhost:5173";
    Api api(cfg);
    auto denied = api.call("GET", "/sessions");
    EXPECT_EQ(denied.status, 401);
    EXPECT_EQ(denied.headers.at("Access-Control-Allow-Origin"), "http://localhost:5173");
    EXPECT_EQ(api.call("GET", "/health").status, 200);
    ApiRequest ok = request("GET", "/sessions");
    ok.headers["authorization"] = "Bearer sesame";
    EXPECT_EQ(api.service.handle(ok).status, 200);
    ok.headers["authorization"] = "Bearer wrong";
    EXPECT_EQ(api.service.handle(ok).status, 401);
    auto pre = api.call("OPTIONS", "/sessions/s1/params");
    EXPECT_EQ(pre.status, 204);
    EXPECT_NE(pre.headers.at("Access-Control-Allow-Methods").find("PATCH"), std::string::npos);

    Api open;
    EXPECT_EQ(open.call("GET", "/nowhere").status, 404);
    EXPECT_EQ(open.call("PUT", "/sessions").status, 405);
}

TEST(Concurrency, PatchDuringRunIsBusy)
{
    Gate gate;
    ApiConfig cfg;
    cfg.on_event = [&](const std::string &, const Event &e) {
        if (e.kind == "materialize") gate.hold();
    };
    Api api(cfg);
    auto id = api.open(classic_query());
    auto running = std::async(std::launch::async, [&] {
        return api.call("POST", "/sessions/" + id + "/run", {{"until", "end"}});
    });
    gate.wait_entered();
    auto patch = api.call("PATCH", "/sessions/" + id + "/params", {{"minsup", "1/2"}});
    auto run2 = api.call("POST", "/sessions/" + id + "/run", {{"until", 3}});
    auto bp = api.call("PUT", "/sessions/" + id + "/breakpoints", {{"child", 5}, {"parent", 6}});
    auto read = api.call("GET", "/sessions/" + id);
    gate.release();
    auto done = running.get();
    EXPECT_EQ(patch.status, 409);
    EXPECT_EQ(patch.json()["error"]["code"], "SessionBusy");
    EXPECT_EQ(run2.status, 409);
    EXPECT_EQ(bp.status, 409);
    EXPECT_EQ(read.status, 200);
    EXPECT_EQ(done.status, 200);
    EXPECT_EQ(materialized(done.json()).back().second, 9u);
    EXPECT_EQ(api.call("GET", "/sessions/" + id).json()["params"]["minsup"], "3/10");
}

TEST(Concurrency, TwoHttpClients)
{
    Gate gate;
    ApiConfig cfg;
    cfg.on_event = [&](const std::string &, const Event &e) {
        if (e.kind == "materialize") gate.hold();
    };
    SessionService service(cfg);
    service.add_dataset("purchase", purchase());
    httplib::Server server;
    mount(server, service);
    int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread loop([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client a("127.0.0.1", port), b("127.0.0.1", port);
    auto created = a.Post("/sessions", json{{"dataset", "purchase"}, {"query", classic_query()}}.dump(), "application/json");
    ASSERT_TRUE(created);
    ASSERT_EQ(created->status, 201);
    std::string id = json::parse(created->body)["id"];

    auto running = std::async(std::launch::async, [&] {
        return a.Post("/sessions/" + id + "/run", R"({"until":"end"})", "application/json");
    });
    gate.wait_entered();
    auto patch = b.Patch("/sessions/" + id + "/params", R"({"minconf":"1/2"})", "application/json");
    gate.release();
    auto run = running.get();
    ASSERT_TRUE(patch);
    ASSERT_TRUE(run);
    EXPECT_EQ(patch->status, 409);
    EXPECT_EQ(run->status, 200);
    EXPECT_EQ(run->get_header_value("Access-Control-Allow-Origin"), "*");

    auto snap1 = b.Get("/sessions/" + id + "/nodes/13/snapshot");
    auto snap2 = a.Get("/sessions/" + id + "/nodes/13/snapshot");
    ASSERT_TRUE(snap1 && snap2);
    EXPECT_EQ(snap1->get_header_value("ETag"), snap2->get_header_value("ETag"));

    httplib::MultipartFormDataItems items{{"file", read_file(data_path("newpurchase.csv")), "newpurchase.csv", "text/csv"}};
    auto upload = b.Post("/datasets", items);
    ASSERT_TRUE(upload);
    EXPECT_EQ(upload->status, 201) << upload->body;
    EXPECT_EQ(json::parse(upload->body)["name"], "newpurchase");

    auto del = a.Delete("/sessions/" + id);
    ASSERT_TRUE(del);
    EXPECT_EQ(del->status, 204);
    EXPECT_EQ(b.Get("/sessions/" + id)->status, 404);
    server.stop();
    loop.join();
}

TEST(Mirror, ApiStatesMatchEngineScripts)
{
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        std::mt19937_64 rng(seed);
        Api api;
        auto id = api.open(classic_query());
        Session direct("d", per_node_plan(build_classic_tree("Purchase", params(Rational(3, 10), Rational(6, 10)))),
                       {{"Purchase", purchase()}});
        for (int step = 0; step < 8; ++step) {
            int op = static_cast<int>(rng() % 4);
            std::string what;
            if (op == 0) {
                auto next = direct.next_node();
                if (next) direct.run_until(*next);
                api.call("POST", "/sessions/" + id + "/step");
                what = "step";
            } else if (op == 1) {
                int k = 1 + static_cast<int>(rng() % 13);
                direct.run_until(k);
                api.call("POST", "/sessions/" + id + "/run", {{"until", k}});
                what = "run " + std::to_string(k);
            } else if (op == 2) {
                Rational v(1 + static_cast<std::int64_t>(rng() % 5), 10);
                std::string name = rng() % 2 ? "minsup" : "minconf";
                auto inv = direct.set_param(name, v);
                auto r = api.call("PATCH", "/sessions/" + id + "/params", {{name, to_string(v)}});
                EXPECT_EQ(r.json()["invalidated"], json(inv.invalidated));
                what = "set " + name;
            } else {
                direct.resume();
                api.call("POST", "/sessions/" + id + "/resume");
                what = "resume";
            }
            std::map<int, std::string> expected;
            for (auto [node, st] : direct.states()) expected[node] = std::string(to_string(st));
            ASSERT_EQ(node_states(api.call("GET", "/sessions/" + id).json()), expected) << "seed " << seed << " " << what;
        }
    }
}
