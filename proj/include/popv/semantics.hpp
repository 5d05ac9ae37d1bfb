#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "popv/multiset.hpp"
#include "popv/protocol.hpp"

namespace popv {

class BudgetExceeded : public std::runtime_error {
public:
    explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

class StepError : public std::runtime_error {
public:
    StepError(std::size_t index, const std::string& what)
        : std::runtime_error(what), index(index) {}
    std::size_t index;
};

// Seen set for MFDO semantics; one flag per state.
using Seen = std::vector<char>;
Seen support(const Configuration& c);

struct RunStep {
    int t = 0;
    int64_t k = 1;
    bool operator==(const RunStep& o) const { return t == o.t && k == o.k; }
};

struct Run {
    Configuration start;
    std::vector<RunStep> steps;

    // Number of (transition, multiplicity) pairs after merging equal neighbours.
    std::size_t aggregated_length() const;
    // Expanded sequence of single transitions.
    std::vector<int> flat() const;
    // Merges adjacent equal transitions and drops k = 0 entries.
    void normalize();
    bool operator==(const Run& o) const { return start == o.start && steps == o.steps; }
};

// True when firing t cannot change the configuration.
bool is_effect_free(const Transition& t);

bool enabled(const Protocol& p, const Configuration& c, int t, const Seen* seen = nullptr);
// Fires t in place; caller guarantees enabledness.
void fire(const Protocol& p, Configuration& c, int t, Seen* seen = nullptr);

struct Successor {
    int t;
    Configuration next;
};
std::vector<Successor> enabled_steps(const Protocol& p, const Configuration& c,
                                     const Seen* seen = nullptr);

// Replays the run; throws StepError at the first disabled step.
Configuration apply_run(const Protocol& p, const Run& r, Seen* seen_out = nullptr);
// All intermediate configurations (after each single transition, start included).
std::vector<Configuration> trace_run(const Protocol& p, const Run& r);

int64_t node_budget_default();

struct ReachOptions {
    int64_t msg_cap = -1;      // bound on total messages; required for delayed models
    int64_t per_msg_cap = -1;  // bound on each message type
    int64_t node_budget = node_budget_default();
    // MFDO only: also link every (C, S) to (C, support(C)) with a transition-free
    // edge (t = -1). Models zero-message DO configurations, whose future depends
    // on the agents alone.
    bool reset_seen = false;
    // MFDO only: seen flags are stored per class; a state whose class is seen
    // counts as seen. -1 marks states nobody observes. Empty = one class per state.
    std::vector<int> seen_class;
};

// Explicit reachability graph. Node key = agents | messages | seen flags.
class ReachGraph {
public:
    ReachGraph(std::size_t nq, std::size_t nm, bool with_seen)
        : nq_(nq), nm_(nm), seen_(with_seen), nodes_(nq + nm + (with_seen ? nq : 0)) {}

    std::size_t size() const { return nodes_.size(); }
    std::size_t nq() const { return nq_; }
    std::size_t nm() const { return nm_; }
    bool has_seen() const { return seen_; }

    Configuration config(std::size_t id) const;
    Seen seen(std::size_t id) const;
    const int32_t* key(std::size_t id) const { return nodes_.get(id); }
    int64_t find(const Configuration& c, const Seen* s = nullptr) const;
    std::pair<uint32_t, bool> add(const Configuration& c, const Seen* s = nullptr);
    void set_seen_classes(std::vector<int> cls) { seen_class_ = std::move(cls); }

    struct Edge {
        uint32_t to;
        int t;
    };
    std::vector<std::vector<Edge>> succ;
    std::vector<uint32_t> parent;    // BFS tree; root points to itself
    std::vector<int> parent_t;       // transition used to reach node, -1 for roots
    std::vector<uint32_t> roots;

    // Single-transition path from a root to id, as a run (reset edges skipped).
    Run path_to(uint32_t id) const;

private:
    std::size_t nq_, nm_;
    bool seen_;
    std::vector<int> seen_class_;
    Interner nodes_;

    std::vector<int32_t> key_of(const Configuration& c, const Seen* s) const;
};

ReachGraph reach_graph(const Protocol& p, const std::vector<Configuration>& roots,
                       const ReachOptions& opt = {});
// MFDO roots with explicit seen sets.
ReachGraph reach_graph_seen(const Protocol& p, const std::vector<Configuration>& roots,
                            const std::vector<Seen>& seens, const ReachOptions& opt = {});

struct SccResult {
    std::vector<uint32_t> comp;            // node -> component id
    std::size_t count = 0;
    std::vector<char> is_bottom;           // per component
    std::vector<int> consensus;            // per component: 0, 1, or -1
    std::vector<uint32_t> bottoms() const;
};

// Output consensus of the agents of c: 0, 1, or -1 when mixed or empty.
int consensus_value(const Protocol& p, const Configuration& c);

SccResult bottom_scc_analysis(const ReachGraph& g, const Protocol& p);

// Generic Tarjan over an adjacency list; returns component ids in reverse
// topological order (sinks first).
std::vector<uint32_t> tarjan_scc(const std::vector<std::vector<uint32_t>>& adj, std::size_t& count);

}  // namespace popv
