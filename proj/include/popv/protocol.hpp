#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "popv/multiset.hpp"

namespace popv {

enum class Model { PP, IT, IO, QT, DT, DO, MFDO };

std::string model_name(Model m);
Model parse_model(const std::string& s);
bool is_delayed(Model m);

enum class TKind { Pair, Obs, Send, Recv };

// Pair: (a,b) -> (c,d).
// Obs:  agent in a observing b moves to c.
// Send: agent in a emits message b, moves to c.
// Recv: agent in a consumes message b, moves to c.
struct Transition {
    std::string name;
    TKind kind = TKind::Pair;
    int a = 0, b = 0, c = 0, d = 0;
    bool implicit = false;  // identity receive added to make delta_r total

    bool operator==(const Transition& o) const {
        return name == o.name && kind == o.kind && a == o.a && b == o.b && c == o.c &&
               d == o.d && implicit == o.implicit;
    }
};

class Protocol {
public:
    Model model = Model::PP;
    std::vector<std::string> states;
    std::vector<std::string> messages;
    std::vector<std::string> inputs;
    std::vector<int> iota;  // per input symbol
    std::vector<int> out;   // per state
    std::vector<Transition> trans;
    bool nondet = false;

    std::size_t nq() const { return states.size(); }
    std::size_t nm() const { return messages.size(); }

    // Rebuilds name lookups; call after mutating the name lists.
    void index();
    int state(const std::string& name) const;  // throws on unknown
    int message(const std::string& name) const;
    int input(const std::string& name) const;
    int transition(const std::string& name) const;
    std::optional<int> find_state(const std::string& name) const;

    // Adds identity receives for every (q,m) lacking one (DT/DO).
    void complete_receives();

    Configuration empty_config() const { return Configuration(nq(), is_delayed(model) ? nm() : 0); }
    Configuration initial_config(const Multiset& input_counts) const;

    bool operator==(const Protocol& o) const {
        return model == o.model && states == o.states && messages == o.messages &&
               inputs == o.inputs && iota == o.iota && out == o.out && trans == o.trans &&
               nondet == o.nondet;
    }

private:
    std::unordered_map<std::string, int> sidx_, midx_, iidx_, tidx_;
};

struct ValidationReport {
    std::vector<std::string> violations;
    std::vector<std::string> notes;  // non-fatal, e.g. identity completions
    bool ok() const { return violations.empty(); }
};

// Checks p against the restrictions of `as` (defaults to p.model).
ValidationReport validate_protocol(const Protocol& p);
ValidationReport validate_protocol_as(const Protocol& p, Model as);

// Pair view of an immediate transition (Obs q,o,q' becomes (o,q)->(o,q')).
Transition pair_view(const Transition& t);

// Corresponding message-free protocol of a DO protocol. recv_of[i] / send_of[i]
// are the DO receive and send transitions behind MFDO transition i.
struct MfdoImage {
    Protocol mfdo;
    std::vector<int> recv_of;
    std::vector<int> send_of;
    // Seen-set quotient for explicit search: states sending exactly one message
    // share that message's class, silent states get -1, others a class of their own.
    std::vector<int> seen_class;
};
MfdoImage corresponding_mfdo(const Protocol& p);

// Protocol with every observation reversed (q -> q' obs o becomes q' -> q obs o).
Protocol reversed(const Protocol& p);

}  // namespace popv
