#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nestmine/dsl.hpp"
#include "nestmine/engine.hpp"
#include "nestmine/io.hpp"

namespace httplib {
class Server;
}

namespace nestmine {

struct ApiConfig
{
    std::optional<std::string> token;             ///< required as "Authorization: Bearer <token>" when set
    std::vector<std::filesystem::path> data_dirs; ///< server-side CSV files allowed by path
    std::size_t max_upload = 10u << 20;
    std::string cors_origin = "*";
    /// Every session event, tagged with the session id.
    std::function<void(const std::string &, const Event &)> on_event;
};

struct ApiRequest
{
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::map<std::string, std::string> headers; ///< lower-case names
    std::string body;
};

struct ApiResponse
{
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::map<std::string, std::string> headers;

    nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// HTTP status for a library error.
int http_status(Errc code);

nlohmann::json to_json(const PauseReport &r);
nlohmann::json to_json(const InvalidationReport &r);
nlohmann::json to_json(const Snapshot &s);
nlohmann::json tree_json(const QueryTree &tree);

/// Datasets and sessions behind the HTTP routes, independent of the transport.
class SessionService
{
  public:
    explicit SessionService(ApiConfig config = {});

    ApiResponse handle(const ApiRequest &req);

    /// Registers a dataset under `name`, replacing an older one.
    void add_dataset(const std::string &name, NestedRelation data);
    std::shared_ptr<Session> session(const std::string &id) const;

  private:
    struct Dataset
    {
        NestedRelation data;
        std::string origin;
    };
    struct Entry
    {
        std::shared_ptr<Session> session;
        std::string dataset;
        QuerySpec spec;
        std::string plan_kind;
    };

    ApiResponse post_dataset(const ApiRequest &req);
    ApiResponse list_datasets() const;
    ApiResponse post_session(const ApiRequest &req);
    ApiResponse list_sessions() const;
    ApiResponse session_resource(const std::string &id, const Entry &e) const;
    ApiResponse run(Session &s, const ApiRequest &req);
    ApiResponse snapshot(Session &s, int node, const ApiRequest &req) const;
    ApiResponse patch_params(Session &s, const ApiRequest &req);
    ApiResponse put_breakpoint(Session &s, const ApiRequest &req);
    std::optional<Entry> entry(const std::string &id) const;

    ApiConfig config_;
    mutable std::mutex mutex_;
    std::map<std::string, Dataset> datasets_;
    std::map<std::string, Entry> sessions_;
    std::uint64_t next_id_ = 1;
};

/// Routes every request of `server` to `service`; multipart uploads pass their first file as the body.
void mount(httplib::Server &server, SessionService &service);

/// Blocks serving on host:port; returns false when the address cannot be bound.
bool serve(const std::string &host, int port, const ApiConfig &config);

} // namespace nestmine
