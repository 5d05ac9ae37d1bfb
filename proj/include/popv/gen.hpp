#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "popv/protocol.hpp"
#include "popv/semantics.hpp"

namespace popv {

// ---- bounded-tape Turing machines -> IO ----

struct TuringMachine {
    std::vector<std::string> states;  // states[0] is the initial state
    int accept = -1;
    int reject = -1;                  // optional
    std::vector<std::string> tape;    // tape[0] is the blank
    struct Rule {
        int q, s, q2, s2, d;  // d in {-1, +1}
    };
    std::vector<Rule> delta;
    int K = 1;

    const Rule* rule(int q, int s) const;
};

TuringMachine parse_tm(const std::string& text);
void validate_tm(const TuringMachine& tm);  // throws std::invalid_argument

struct TmConfig {
    int q = 0;
    int head = 1;             // 1-based cell
    std::vector<int> cells;   // K symbols
    bool operator==(const TmConfig& o) const {
        return q == o.q && head == o.head && cells == o.cells;
    }
};
TmConfig tm_initial(const TuringMachine& tm);
// Direct interpreter; nullopt when no rule applies or the head would leave 1..K.
std::optional<TmConfig> tm_step(const TuringMachine& tm, const TmConfig& c);

struct TmProtocol {
    Protocol p;
    Multiset d0;  // one agent per input symbol
};
TmProtocol tm_to_io(const TuringMachine& tm);

Configuration encode_tm_config(const TuringMachine& tm, const Protocol& pm, const TmConfig& c);
// Agents outside the simulation fragment (observer, success) are ignored.
bool validate_modelling(const Protocol& pm, const Configuration& c);
// Fires the unique 1a, 2a, 1b, 2b sequence from C_c. Throws on a non-modelling input.
std::optional<Configuration> simulate_tm_step(const Protocol& pm, const Configuration& c,
                                              Run* run = nullptr);

// ---- boolean circuits -> DO ----

struct Circuit {
    struct Node {
        std::string name;
        bool input = false;
        bool universal = false;
        std::string op;         // gates: AND OR NOT NAND NOR XOR
        std::vector<int> args;
    };
    std::vector<Node> nodes;
    int output = -1;
    static constexpr int kMaxArity = 3;
};

Circuit parse_circuit(const std::string& text);
void validate_circuit(const Circuit& c);  // throws std::invalid_argument
// Values indexed by node; input entries are read, gate entries are filled in.
bool eval_circuit(const Circuit& c, std::vector<int>& values);
// Exists x forall y: circuit = 1.
bool qbf_exists_forall(const Circuit& c);

Protocol circuit_to_do(const Circuit& c);

// ---- VASS -> +-1-VASS -> DT ----

struct Vass {
    int dim = 1;
    std::vector<std::string> states;
    struct Trans {
        int from;
        std::vector<int64_t> v;
        int to;
    };
    std::vector<Trans> trans;
    struct Query {
        int q0;
        std::vector<int64_t> v0;
        int q;
        std::vector<int64_t> vf;
    };
    std::optional<Query> query;

    bool is_pm1() const;
    int state(const std::string& name) const;  // throws
};

Vass parse_vass(const std::string& text);
std::string print_vass(const Vass& v);

// Brute-force reachability with every counter kept in [0, cap].
bool vass_reachable(const Vass& v, int q0, const std::vector<int64_t>& v0, int q,
                    const std::vector<int64_t>& vf, int64_t cap);

struct Pm1Result {
    Vass vass;
    int r0 = -1, r = -1;
};
Pm1Result vass_to_pm1(const Vass& v, const Vass::Query& q);

struct DtResult {
    Protocol p;
    Configuration c0;
};
DtResult pm1_to_dt(const Vass& v, int r0, int r, bool determinize);
// Round-counter determinization of a nondeterministic DT protocol.
Protocol determinize_dt(const Protocol& p);

}  // namespace popv
