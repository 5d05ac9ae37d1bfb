#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "popv/counting.hpp"
#include "popv/protocol.hpp"
#include "popv/semantics.hpp"

namespace popv {

struct Verdict {
    bool correct = true;
    // False when the answer only holds up to a size or message bound.
    bool conclusive = true;
    std::string method;            // symbolic | witness-bound | kernel | bounded
    int64_t bound_used = 0;        // largest agent count the verdict covers
    int64_t worst_case_bound = -1; // closed-form bound, for reference
    int64_t largest_checked = -1;
    // Witness, when incorrect.
    std::optional<Multiset> input;  // over the input alphabet
    int expected = -1;              // predicate value on the input
    std::vector<Configuration> offending;
    std::vector<Run> runs;
    std::string detail;
};

enum class CheckMode { Symbolic, Witness, Kernel };

struct CheckOptions {
    CheckMode mode = CheckMode::Symbolic;
    int64_t max_size = -1;      // kernel: largest size swept, -1 = derived bound
    int64_t node_budget = -1;   // per explicit graph, -1 = default
    int64_t msg_cap = -1;       // DT/QT explicit search only
};

// Stable b-consensus configurations. DO: the zero-message variant.
Constraint stable_set(const Protocol& p, int b);

// Protocol on the given states only; transitions touching other states are dropped.
Protocol restrict_states(const Protocol& p, const std::vector<char>& keep);

// Bottom-SCC kernel for one initial configuration.
Verdict check_instance(const Protocol& p, const Configuration& c0, int b,
                       const CheckOptions& opt = {});
// Kernel over every input of exactly n agents.
Verdict check_size(const Protocol& p, const Constraint& pred, int64_t n,
                   const CheckOptions& opt = {});

Verdict check_correct_io(const Protocol& p, const Constraint& pred, const CheckOptions& opt = {});
Verdict check_correct_do(const Protocol& p, const Constraint& pred, const CheckOptions& opt = {});
// Dispatches on the model; PP/IT/MFDO/DT get a bounded kernel sweep.
Verdict check_correct(const Protocol& p, const Constraint& pred, const CheckOptions& opt = {});

struct SaturatedConfig {
    Configuration base;
    Configuration result;
    Run run;  // base ->* result
    std::vector<std::pair<int, int64_t>> emissions;  // (state, messages sent)
};

SaturatedConfig saturate(const Protocol& p, const Configuration& z);
bool flow_check(const Protocol& p, const SaturatedConfig& ms, const Configuration& z_target);

Verdict check_instance_do_sigma2(const Protocol& p, const Multiset& input, int b,
                                 const CheckOptions& opt = {});

// Integer max-flow by shortest augmenting paths (Edmonds-Karp).
class FlowNetwork {
public:
    explicit FlowNetwork(int n) : adj_(n) {}
    void add_edge(int u, int v, int64_t cap);
    int64_t max_flow(int s, int t);

private:
    struct Arc {
        int to;
        int64_t cap;
    };
    std::vector<Arc> arcs_;  // arc i and i^1 are a residual pair
    std::vector<std::vector<int>> adj_;
};

}  // namespace popv
