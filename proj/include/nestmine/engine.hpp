#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "nestmine/optimizer.hpp"

namespace nestmine {

enum class NodeState : std::uint8_t { Pending, Materialized, Invalidated, Elided };

std::string_view to_string(NodeState s);

struct Snapshot
{
    int node = 0;
    NestedRelation relation;
    std::size_t rows = 0;
    std::uint64_t produced_at = 0; ///< materialization counter within the session
};
using SnapshotPtr = std::shared_ptr<const Snapshot>;

struct PauseReport
{
    enum class Reason : std::uint8_t { Target, Breakpoint, Completion, Cancelled };
    Reason reason = Reason::Completion;
    std::vector<std::pair<int, std::size_t>> materialized; ///< (node, rows) in execution order, sources left out
    std::optional<Breakpoint> at;
};

std::string_view to_string(PauseReport::Reason r);

struct InvalidationReport
{
    std::vector<int> invalidated;
};

struct Event
{
    std::chrono::system_clock::time_point at;
    std::string kind;
    int node = -1;
    std::string detail;
};

std::string to_string(const Event &e);

/// Parameters read by an operator ($n, $minsup, $minconf).
std::vector<std::string> op_params(const Op &op);

/// Spans execute per node.
PhysicalPlan per_node_plan(const QueryTree &tree);

class Session
{
  public:
    /// UnboundSource when a source relation is missing; InvalidTree for an invalid plan
    /// or an enabled breakpoint strictly inside a span that runs as one step.
    Session(std::string id, PhysicalPlan plan, SourceData data);

    const std::string &id() const noexcept { return id_; }
    const PhysicalPlan &plan() const noexcept { return plan_; }
    MiningParams params() const;
    std::int64_t n() const noexcept { return n_; }

    NodeState state(int node) const;
    std::map<int, NodeState> states() const;
    bool finished() const;
    bool cancelled() const noexcept { return cancelled_; }

    /// Materializes nodes up to `target` (the root when absent), pausing at enabled
    /// breakpoints when `honor_breakpoints`. SessionBusy while another call runs.
    PauseReport run_until(std::optional<int> target = std::nullopt, bool honor_breakpoints = true);
    PauseReport resume() { return run_until(); }
    PauseReport run_to_completion() { return run_until(std::nullopt, false); }

    /// NotMaterialized unless the node holds a current snapshot.
    SnapshotPtr inspect(int node) const;
    std::vector<SnapshotPtr> snapshots() const; ///< current snapshots in production order
    SnapshotPtr result() const;

    /// minsup or minconf; InvalidValue outside (0,1], SessionBusy while running.
    InvalidationReport set_param(std::string_view name, const Rational &value);
    void set_breakpoint(int child, int parent, bool enabled);
    std::vector<Breakpoint> breakpoints() const;

    /// Stops at the next node boundary; later runs raise Cancelled.
    void cancel();

    std::vector<Event> events() const;
    std::string event_log() const;

    /// Called after every logged event, on the thread that logged it.
    using Observer = std::function<void(const Event &)>;
    void set_observer(Observer observer);

    /// First node of the remaining work, sources skipped; none once finished.
    std::optional<int> next_node() const;

  private:
    struct Unit
    {
        int top = 0;
        std::vector<int> interior; ///< elided nodes
        std::vector<int> inputs;
        std::optional<std::size_t> span; ///< atomic span index
    };

    void log(std::string kind, int node, std::string detail = {});
    NestedRelation compute(const Unit &u, const ParamEnv &env) const;
    const Unit &unit_of(int node) const;
    std::vector<int> order_for(int target) const;
    std::optional<Breakpoint> pending_break(const Unit &u) const;
    void check_breakpoints(const std::vector<Breakpoint> &bps) const;

    std::string id_;
    PhysicalPlan plan_;
    SourceData data_;
    std::int64_t n_ = 0;

    mutable std::shared_mutex state_mutex_; ///< guards everything below except run_mutex_
    std::mutex run_mutex_;
    MiningParams params_;
    std::vector<Unit> units_;
    std::map<int, std::size_t> unit_index_; ///< node -> unit
    std::map<int, NodeState> states_;
    std::map<int, SnapshotPtr> snapshots_;
    std::vector<Breakpoint> breakpoints_;
    std::set<std::pair<int, int>> consumed_;
    std::vector<Event> events_;
    std::uint64_t counter_ = 0;
    Observer observer_;
    std::atomic<bool> cancelled_{false};
};

/// Runs to completion ignoring breakpoints; snapshots of every materialized node except sources.
std::vector<SnapshotPtr> trace_all(const PhysicalPlan &plan, const SourceData &data);

/// Final relation of the plan.
NestedRelation execute(const PhysicalPlan &plan, const SourceData &data);

} // namespace nestmine
