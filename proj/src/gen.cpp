#include "popv/gen.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <functional>
#include <set>
#include <sstream>

#include "popv/formats.hpp"

namespace popv {

namespace {

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (std::isspace(static_cast<unsigned char>(c)) || std::string(".:,{}|[]#!?()").find(c) != std::string::npos)
            return false;
    return true;
}

// VASS names may carry dots, which the +-1 split uses for its fresh states.
bool valid_vass_name(const std::string& s) {
    return !s.empty() && (valid_name(s) || s.find_first_of(":,{}|[]#!?() \t") == std::string::npos);
}

struct Line {
    int no;
    std::string text;
};

std::vector<Line> content_lines(const std::string& text) {
    std::vector<Line> out;
    std::istringstream is(text);
    std::string l;
    int no = 0;
    while (std::getline(is, l)) {
        ++no;
        if (!l.empty() && l.back() == '\r') l.pop_back();
        auto h = l.find('#');
        if (h != std::string::npos) l = l.substr(0, h);
        if (l.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back({no, l});
    }
    return out;
}

struct Word {
    std::string s;
    int col;
};

// Words, with a parenthesised group kept as one word.
std::vector<Word> words(const Line& ln) {
    std::vector<Word> out;
    const std::string& s = ln.text;
    std::size_t i = 0;
    while (i < s.size()) {
        if (std::isspace(static_cast<unsigned char>(s[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        if (s[i] == '(') {
            j = s.find(')', i);
            if (j == std::string::npos) throw ParseError(ln.no, int(i) + 1, "unclosed '('");
            ++j;
        } else {
            while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) && s[j] != '(') ++j;
        }
        out.push_back({s.substr(i, j - i), int(i) + 1});
        i = j;
    }
    return out;
}

int find_index(const std::vector<std::string>& v, const std::string& s) {
    auto it = std::find(v.begin(), v.end(), s);
    return it == v.end() ? -1 : int(it - v.begin());
}

std::string fresh(const std::set<std::string>& used, std::string base) {
    while (used.count(base)) base += "_";
    return base;
}

}  // namespace

// ---------------------------------------------------------------- TM

const TuringMachine::Rule* TuringMachine::rule(int q, int s) const {
    for (const auto& r : delta)
        if (r.q == q && r.s == s) return &r;
    return nullptr;
}

TuringMachine parse_tm(const std::string& text) {
    TuringMachine tm;
    struct PendingRule {
        int line;
        std::vector<Word> w;
    };
    std::vector<PendingRule> rules;
    std::string acc, rej;
    int acc_line = 0, rej_line = 0;
    bool have_k = false;
    for (const auto& ln : content_lines(text)) {
        auto colon = ln.text.find(':');
        if (colon == std::string::npos) throw ParseError(ln.no, 1, "expected 'key:'");
        std::string key = ln.text.substr(0, colon);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        Line rest{ln.no, std::string(colon + 1, ' ') + ln.text.substr(colon + 1)};
        auto w = words(rest);
        auto need = [&](std::size_t n) {
            if (w.size() != n)
                throw ParseError(ln.no, int(colon) + 2, "'" + key + "' expects " + std::to_string(n) + " value(s)");
        };
        if (key == "states" || key == "tape") {
            auto& dst = key == "states" ? tm.states : tm.tape;
            for (auto& x : w) {
                if (!valid_name(x.s)) throw ParseError(ln.no, x.col, "bad name '" + x.s + "'");
                if (find_index(dst, x.s) >= 0) throw ParseError(ln.no, x.col, "duplicate '" + x.s + "'");
                dst.push_back(x.s);
            }
        } else if (key == "accept") {
            need(1);
            acc = w[0].s;
            acc_line = ln.no;
        } else if (key == "reject") {
            need(1);
            rej = w[0].s;
            rej_line = ln.no;
        } else if (key == "K") {
            need(1);
            if (!std::all_of(w[0].s.begin(), w[0].s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
                w[0].s.size() > 6)
                throw ParseError(ln.no, w[0].col, "K must be a small positive integer");
            tm.K = std::stoi(w[0].s);
            have_k = true;
        } else if (key == "delta") {
            if (w.size() != 6 || w[2].s != "->")
                throw ParseError(ln.no, int(colon) + 2, "expected 'delta: q s -> q2 s2 L|R'");
            rules.push_back({ln.no, w});
        } else {
            throw ParseError(ln.no, 1, "unknown key '" + key + "'");
        }
    }
    if (tm.states.empty()) throw ParseError(1, 1, "missing 'states:'");
    if (tm.tape.empty()) throw ParseError(1, 1, "missing 'tape:'");
    if (!have_k) throw ParseError(1, 1, "missing 'K:'");
    if (acc.empty()) throw ParseError(1, 1, "missing 'accept:'");
    tm.accept = find_index(tm.states, acc);
    if (tm.accept < 0) throw ParseError(acc_line, 1, "unknown accept state '" + acc + "'");
    if (!rej.empty()) {
        tm.reject = find_index(tm.states, rej);
        if (tm.reject < 0) throw ParseError(rej_line, 1, "unknown reject state '" + rej + "'");
    }
    for (const auto& pr : rules) {
        auto st = [&](const Word& x) {
            int i = find_index(tm.states, x.s);
            if (i < 0) throw ParseError(pr.line, x.col, "unknown state '" + x.s + "'");
            return i;
        };
        auto sy = [&](const Word& x) {
            int i = find_index(tm.tape, x.s);
            if (i < 0) throw ParseError(pr.line, x.col, "unknown tape symbol '" + x.s + "'");
            return i;
        };
        TuringMachine::Rule r{st(pr.w[0]), sy(pr.w[1]), st(pr.w[3]), sy(pr.w[4]), 0};
        if (pr.w[5].s == "L")
            r.d = -1;
        else if (pr.w[5].s == "R")
            r.d = +1;
        else
            throw ParseError(pr.line, pr.w[5].col, "direction must be L or R");
        if (tm.rule(r.q, r.s)) throw ParseError(pr.line, pr.w[0].col, "nondeterministic delta");
        tm.delta.push_back(r);
    }
    validate_tm(tm);
    return tm;
}

void validate_tm(const TuringMachine& tm) {
    if (tm.K < 1) throw std::invalid_argument("K must be at least 1");
    if (tm.states.empty() || tm.tape.empty()) throw std::invalid_argument("empty state set or alphabet");
    if (tm.accept < 0 || tm.accept >= int(tm.states.size())) throw std::invalid_argument("no accept state");
    if (tm.reject == tm.accept) throw std::invalid_argument("accept and reject coincide");
    for (const auto& s : tm.states)
        if (!valid_name(s)) throw std::invalid_argument("bad state name '" + s + "'");
    for (const auto& s : tm.tape)
        if (!valid_name(s)) throw std::invalid_argument("bad tape symbol '" + s + "'");
    std::set<std::pair<int, int>> seen;
    for (const auto& r : tm.delta) {
        if (r.q < 0 || r.q >= int(tm.states.size()) || r.q2 < 0 || r.q2 >= int(tm.states.size()) ||
            r.s < 0 || r.s >= int(tm.tape.size()) || r.s2 < 0 || r.s2 >= int(tm.tape.size()) ||
            (r.d != -1 && r.d != 1))
            throw std::invalid_argument("malformed delta entry");
        if (!seen.insert({r.q, r.s}).second) throw std::invalid_argument("nondeterministic delta");
        if (r.q == tm.accept || r.q == tm.reject)
            throw std::invalid_argument("halting state " + tm.states[r.q] + " has a rule");
    }
}

TmConfig tm_initial(const TuringMachine& tm) {
    TmConfig c;
    c.q = 0;
    c.head = 1;
    c.cells.assign(tm.K, 0);
    return c;
}

std::optional<TmConfig> tm_step(const TuringMachine& tm, const TmConfig& c) {
    const auto* r = tm.rule(c.q, c.cells[c.head - 1]);
    if (!r) return std::nullopt;
    int h = c.head + r->d;
    if (h < 1 || h > tm.K) return std::nullopt;
    TmConfig n = c;
    n.cells[c.head - 1] = r->s2;
    n.q = r->q2;
    n.head = h;
    return n;
}

namespace {

std::string dir_name(int d) { return d > 0 ? "R" : "L"; }
std::string pass_name(const std::string& s, int n) { return "pass." + s + "." + std::to_string(n); }
std::string act_name(const std::string& s, int n) { return "act." + s + "." + std::to_string(n); }
std::string stable_name(const std::string& q, int n) { return "stable." + q + "." + std::to_string(n); }
std::string sw_name(const std::string& q, const std::string& s, int n, int d) {
    return "sw." + q + "." + s + "." + std::to_string(n) + "." + dir_name(d);
}

// Parsed view of a simulation-fragment state name.
struct TmState {
    enum Kind { Other, Pass, Act, Stable, Switch } kind = Other;
    std::string q, sym;
    int n = 0, d = 0;
};

TmState classify(const std::string& name) {
    std::vector<std::string> parts;
    std::stringstream ss(name);
    std::string x;
    while (std::getline(ss, x, '.')) parts.push_back(x);
    TmState st;
    auto num = [](const std::string& s) {
        if (s.empty() || s.size() > 6 || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            return -1;
        return std::stoi(s);
    };
    if (parts.size() == 3 && (parts[0] == "pass" || parts[0] == "act" || parts[0] == "stable")) {
        st.n = num(parts[2]);
        if (st.n < 1) return {};
        if (parts[0] == "stable") {
            st.kind = TmState::Stable;
            st.q = parts[1];
        } else {
            st.kind = parts[0] == "pass" ? TmState::Pass : TmState::Act;
            st.sym = parts[1];
        }
    } else if (parts.size() == 5 && parts[0] == "sw" && (parts[4] == "L" || parts[4] == "R")) {
        st.kind = TmState::Switch;
        st.q = parts[1];
        st.sym = parts[2];
        st.n = num(parts[3]);
        st.d = parts[4] == "R" ? 1 : -1;
        if (st.n < 1) return {};
    }
    return st;
}

bool fragment_transition(const std::string& name) {
    return name.rfind("1a.", 0) == 0 || name.rfind("1b.", 0) == 0 || name.rfind("2a.", 0) == 0 ||
           name.rfind("2b.", 0) == 0;
}

}  // namespace

TmProtocol tm_to_io(const TuringMachine& tm) {
    validate_tm(tm);
    const int K = tm.K;
    Protocol p;
    p.model = Model::IO;
    for (int n = 1; n <= K; ++n)
        for (const auto& s : tm.tape) p.states.push_back(pass_name(s, n));
    for (int n = 1; n <= K; ++n)
        for (const auto& s : tm.tape) p.states.push_back(act_name(s, n));
    for (int n = 1; n <= K; ++n)
        for (const auto& q : tm.states) p.states.push_back(stable_name(q, n));
    for (const auto& q : tm.states)
        for (const auto& s : tm.tape)
            for (int n = 1; n <= K; ++n)
                for (int d : {-1, 1})
                    if (n + d >= 1 && n + d <= K) p.states.push_back(sw_name(q, s, n, d));
    p.states.push_back("observer");
    p.states.push_back("success");
    p.index();

    auto obs = [&](std::string name, const std::string& a, const std::string& b, const std::string& c) {
        Transition t;
        t.name = std::move(name);
        t.kind = TKind::Obs;
        t.a = p.state(a);
        t.b = p.state(b);
        t.c = p.state(c);
        p.trans.push_back(t);
    };
    for (int n = 1; n <= K; ++n)
        for (const auto& s : tm.tape)
            for (const auto& q : tm.states)
                obs("1a." + s + "." + std::to_string(n) + "." + q, pass_name(s, n), stable_name(q, n), act_name(s, n));
    for (int n = 1; n <= K; ++n)
        for (const auto& s : tm.tape)
            for (const auto& q : tm.states)
                for (const auto& s2 : tm.tape)
                    for (int d : {-1, 1})
                        if (n + d >= 1 && n + d <= K)
                            obs("1b." + s + "." + std::to_string(n) + "." + q + "." + s2 + "." + dir_name(d),
                                act_name(s, n), sw_name(q, s2, n, d), pass_name(s2, n));
    for (int qi = 0; qi < int(tm.states.size()); ++qi)
        for (int si = 0; si < int(tm.tape.size()); ++si) {
            const auto* r = tm.rule(qi, si);
            if (!r) continue;
            for (int n = 1; n <= K; ++n)
                if (n + r->d >= 1 && n + r->d <= K)
                    obs("2a." + tm.states[qi] + "." + tm.tape[si] + "." + std::to_string(n),
                        stable_name(tm.states[qi], n), act_name(tm.tape[si], n),
                        sw_name(tm.states[r->q2], tm.tape[r->s2], n, r->d));
        }
    for (const auto& q : tm.states)
        for (const auto& s : tm.tape)
            for (int n = 1; n <= K; ++n)
                for (int d : {-1, 1})
                    if (n + d >= 1 && n + d <= K)
                        obs("2b." + q + "." + s + "." + std::to_string(n) + "." + dir_name(d), sw_name(q, s, n, d),
                            pass_name(s, n), stable_name(q, n + d));
    for (int i = 1; i <= K; ++i)
        obs("obs." + std::to_string(i), "observer", stable_name(tm.states[tm.accept], i), "success");
    for (const auto& q : p.states)
        if (q != "success") obs("att." + q, q, "success", "success");

    for (int i = 1; i <= K; ++i) {
        p.inputs.push_back("cell" + std::to_string(i));
        p.iota.push_back(p.state(pass_name(tm.tape[0], i)));
    }
    p.inputs.push_back("head");
    p.iota.push_back(p.state(stable_name(tm.states[0], 1)));
    p.inputs.push_back("observer");
    p.iota.push_back(p.state("observer"));
    p.out.assign(p.nq(), 0);
    p.out[p.state("success")] = 1;
    p.index();

    TmProtocol r;
    r.p = std::move(p);
    r.d0 = Multiset(std::vector<int32_t>(K + 2, 1));
    return r;
}

Configuration encode_tm_config(const TuringMachine& tm, const Protocol& pm, const TmConfig& c) {
    if (int(c.cells.size()) != tm.K || c.head < 1 || c.head > tm.K)
        throw std::invalid_argument("TM configuration does not fit the tape bound");
    Configuration out = pm.empty_config();
    for (int i = 0; i < tm.K; ++i) out.agents[pm.state(pass_name(tm.tape[c.cells[i]], i + 1))]++;
    out.agents[pm.state(stable_name(tm.states[c.q], c.head))]++;
    return out;
}

bool validate_modelling(const Protocol& pm, const Configuration& c) {
    std::map<int, int64_t> cell;        // n -> agents on pass/act states of cell n
    std::set<int> act_cells;
    std::set<std::pair<std::string, int>> pass_at;  // (symbol, n)
    std::set<int> head_cells;
    std::vector<TmState> sws;
    int64_t heads = 0;
    int K = 0;
    for (std::size_t q = 0; q < pm.nq(); ++q) {
        TmState st = classify(pm.states[q]);
        if (st.kind == TmState::Other) continue;
        K = std::max(K, st.n);
        const int64_t k = c.agents[q];
        if (k == 0) continue;
        switch (st.kind) {
            case TmState::Pass:
                cell[st.n] += k;
                pass_at.insert({st.sym, st.n});
                break;
            case TmState::Act:
                cell[st.n] += k;
                act_cells.insert(st.n);
                break;
            case TmState::Stable:
                heads += k;
                head_cells.insert(st.n);
                break;
            case TmState::Switch:
                heads += k;
                head_cells.insert(st.n);
                sws.push_back(st);
                break;
            default: break;
        }
    }
    // (1) every cell holds exactly one agent
    for (int n = 1; n <= K; ++n)
        if (cell[n] != 1) return false;
    // (2) one head agent
    if (heads != 1) return false;
    // (3) an active cell has the head on it
    for (int n : act_cells)
        if (!head_cells.count(n)) return false;
    // (4) a moving head left a cell that is active or already shows the written symbol
    for (const auto& s : sws)
        if (!act_cells.count(s.n) && !pass_at.count({s.sym, s.n})) return false;
    return true;
}

std::optional<Configuration> simulate_tm_step(const Protocol& pm, const Configuration& c, Run* run) {
    if (!validate_modelling(pm, c)) throw std::invalid_argument("not a modelling configuration");
    for (std::size_t q = 0; q < pm.nq(); ++q) {
        auto k = classify(pm.states[q]).kind;
        if (c.agents[q] && (k == TmState::Act || k == TmState::Switch))
            throw std::invalid_argument("configuration is between two simulated steps");
    }
    static const char* kOrder[] = {"1a.", "2a.", "1b.", "2b."};
    Configuration cur = c;
    Run r;
    r.start = c;
    for (const char* pre : kOrder) {
        int hit = -1;
        for (std::size_t t = 0; t < pm.trans.size(); ++t) {
            const auto& name = pm.trans[t].name;
            if (!fragment_transition(name) || !enabled(pm, cur, int(t))) continue;
            if (name.rfind(pre, 0) != 0)
                throw std::logic_error("unexpected enabled transition " + name);
            if (hit >= 0) throw std::logic_error("two enabled transitions in a modelling configuration");
            hit = int(t);
        }
        if (hit < 0) return std::nullopt;
        fire(pm, cur, hit);
        r.steps.push_back({hit, 1});
    }
    if (run) *run = r;
    return cur;
}

// ---------------------------------------------------------------- circuits

Circuit parse_circuit(const std::string& text) {
    Circuit c;
    struct PendingGate {
        int line;
        int node;
        std::vector<Word> args;
    };
    std::vector<PendingGate> gates;
    std::vector<std::string> names;
    std::string out_name;
    int out_line = 0, out_col = 0;
    for (const auto& ln : content_lines(text)) {
        auto w = words(ln);
        const std::string& kw = w[0].s;
        auto declare = [&](const Word& x) {
            if (!valid_name(x.s)) throw ParseError(ln.no, x.col, "bad node name '" + x.s + "'");
            if (find_index(names, x.s) >= 0) throw ParseError(ln.no, x.col, "duplicate node '" + x.s + "'");
            names.push_back(x.s);
            c.nodes.push_back({});
            c.nodes.back().name = x.s;
            return int(c.nodes.size()) - 1;
        };
        if (kw == "in") {
            if (w.size() != 3 || (w[2].s != "exists" && w[2].s != "forall"))
                throw ParseError(ln.no, w[0].col, "expected 'in <name> exists|forall'");
            int i = declare(w[1]);
            c.nodes[i].input = true;
            c.nodes[i].universal = w[2].s == "forall";
        } else if (kw == "gate") {
            if (w.size() < 4) throw ParseError(ln.no, w[0].col, "expected 'gate <name> <OP> <args>'");
            int i = declare(w[1]);
            static const std::set<std::string> ops = {"AND", "OR", "NOT", "NAND", "NOR", "XOR"};
            if (!ops.count(w[2].s)) throw ParseError(ln.no, w[2].col, "unknown operation '" + w[2].s + "'");
            c.nodes[i].op = w[2].s;
            gates.push_back({ln.no, i, std::vector<Word>(w.begin() + 3, w.end())});
        } else if (kw == "out") {
            if (w.size() != 2) throw ParseError(ln.no, w[0].col, "expected 'out <gate>'");
            if (!out_name.empty()) throw ParseError(ln.no, w[0].col, "duplicate 'out'");
            out_name = w[1].s;
            out_line = ln.no;
            out_col = w[1].col;
        } else {
            throw ParseError(ln.no, w[0].col, "unknown keyword '" + kw + "'");
        }
    }
    for (const auto& g : gates)
        for (const auto& a : g.args) {
            int j = find_index(names, a.s);
            if (j < 0) throw ParseError(g.line, a.col, "unknown node '" + a.s + "'");
            c.nodes[g.node].args.push_back(j);
        }
    if (out_name.empty()) throw ParseError(1, 1, "missing 'out'");
    c.output = find_index(names, out_name);
    if (c.output < 0) throw ParseError(out_line, out_col, "unknown node '" + out_name + "'");
    validate_circuit(c);
    return c;
}

void validate_circuit(const Circuit& c) {
    const int n = int(c.nodes.size());
    if (c.output < 0 || c.output >= n) throw std::invalid_argument("no output gate");
    if (c.nodes[c.output].input) throw std::invalid_argument("the output must be a gate");
    for (const auto& nd : c.nodes) {
        if (nd.input) {
            if (!nd.args.empty()) throw std::invalid_argument("input node with arguments");
            continue;
        }
        const int k = int(nd.args.size());
        if (k < 1 || k > Circuit::kMaxArity)
            throw std::invalid_argument("gate " + nd.name + " has arity " + std::to_string(k));
        if (nd.op == "NOT" && k != 1) throw std::invalid_argument("NOT gate " + nd.name + " needs one argument");
        for (int a : nd.args)
            if (a < 0 || a >= n) throw std::invalid_argument("dangling argument");
    }
    // acyclic
    std::vector<int> color(n, 0);
    std::function<void(int)> dfs = [&](int v) {
        color[v] = 1;
        for (int a : c.nodes[v].args) {
            if (color[a] == 1) throw std::invalid_argument("circuit has a cycle through " + c.nodes[a].name);
            if (color[a] == 0) dfs(a);
        }
        color[v] = 2;
    };
    for (int v = 0; v < n; ++v)
        if (!color[v]) dfs(v);
    // everything feeds the output
    std::vector<char> reach(n, 0);
    std::vector<int> st{c.output};
    reach[c.output] = 1;
    while (!st.empty()) {
        int v = st.back();
        st.pop_back();
        for (int a : c.nodes[v].args)
            if (!reach[a]) reach[a] = 1, st.push_back(a);
    }
    for (int v = 0; v < n; ++v)
        if (!reach[v]) throw std::invalid_argument("node " + c.nodes[v].name + " is not connected to the output");
    for (const auto& nd : c.nodes)
        for (int a : nd.args)
            if (a == c.output) throw std::invalid_argument("the output gate has an outgoing edge");
}

namespace {

constexpr int U = 2;  // unknown value

int apply_op(const std::string& op, const std::vector<int>& in) {
    for (int v : in)
        if (v == U) return U;
    if (op == "NOT") return 1 - in[0];
    int ones = int(std::count(in.begin(), in.end(), 1));
    const int k = int(in.size());
    if (op == "AND") return ones == k;
    if (op == "OR") return ones > 0;
    if (op == "NAND") return ones != k;
    if (op == "NOR") return ones == 0;
    if (op == "XOR") return ones % 2;
    throw std::invalid_argument("unknown operation " + op);
}

char vch(int v) { return v == U ? 'u' : char('0' + v); }

}  // namespace

bool eval_circuit(const Circuit& c, std::vector<int>& values) {
    values.resize(c.nodes.size(), U);
    std::vector<char> done(c.nodes.size(), 0);
    std::function<int(int)> ev = [&](int v) -> int {
        if (c.nodes[v].input) return values[v];
        if (done[v]) return values[v];
        std::vector<int> in;
        for (int a : c.nodes[v].args) in.push_back(ev(a));
        values[v] = apply_op(c.nodes[v].op, in);
        done[v] = 1;
        return values[v];
    };
    return ev(c.output) == 1;
}

bool qbf_exists_forall(const Circuit& c) {
    std::vector<int> ex, un;
    for (int i = 0; i < int(c.nodes.size()); ++i)
        if (c.nodes[i].input) (c.nodes[i].universal ? un : ex).push_back(i);
    if (ex.size() > 20 || un.size() > 20) throw std::invalid_argument("too many inputs for brute force");
    for (uint32_t xm = 0; xm < (1u << ex.size()); ++xm) {
        bool all = true;
        for (uint32_t ym = 0; ym < (1u << un.size()) && all; ++ym) {
            std::vector<int> val(c.nodes.size(), U);
            for (std::size_t i = 0; i < ex.size(); ++i) val[ex[i]] = (xm >> i) & 1;
            for (std::size_t i = 0; i < un.size(); ++i) val[un[i]] = (ym >> i) & 1;
            all = eval_circuit(c, val);
        }
        if (all) return true;
    }
    return false;
}

Protocol circuit_to_do(const Circuit& c) {
    validate_circuit(c);
    const int nn = int(c.nodes.size());
    const int go = c.output;
    Protocol p;
    p.model = Model::DO;

    // State (n, v, args, vo) at base[n] + (v * 3^k + argcode) * 3 + vo.
    std::vector<int> base(nn), pow3(nn);
    for (int n = 0; n < nn; ++n) {
        const int k = int(c.nodes[n].args.size());
        int w = 1;
        for (int i = 0; i < k; ++i) w *= 3;
        pow3[n] = w;
        base[n] = int(p.states.size());
        for (int v = 0; v < 3; ++v)
            for (int code = 0; code < w; ++code)
                for (int vo = 0; vo < 3; ++vo) {
                    std::string name = c.nodes[n].name + "." + vch(v) + ".";
                    if (k == 0) {
                        name += "-";
                    } else {
                        int x = code;
                        std::string a;
                        for (int i = 0; i < k; ++i) a += vch(x % 3), x /= 3;
                        name += a;
                    }
                    p.states.push_back(name + "." + vch(vo));
                }
    }
    const int bot = int(p.states.size());
    p.states.push_back("bot");
    for (int n = 0; n < nn; ++n)
        for (int v = 0; v < 3; ++v) p.messages.push_back(c.nodes[n].name + "." + vch(v));
    const int mbot = int(p.messages.size());
    p.messages.push_back("bot");

    auto sid = [&](int n, int v, int code, int vo) { return base[n] + (v * pow3[n] + code) * 3 + vo; };
    auto arg_at = [&](int code, int i) {
        for (int j = 0; j < i; ++j) code /= 3;
        return code % 3;
    };
    auto set_arg = [&](int code, int i, int val) {
        int w = 1;
        for (int j = 0; j < i; ++j) w *= 3;
        return code - arg_at(code, i) * w + val * w;
    };

    for (int n = 0; n < nn; ++n)
        for (int v = 0; v < 3; ++v)
            for (int code = 0; code < pow3[n]; ++code)
                for (int vo = 0; vo < 3; ++vo) {
                    Transition s;
                    s.kind = TKind::Send;
                    s.a = s.c = sid(n, v, code, vo);
                    s.b = n * 3 + v;
                    s.name = "s." + p.states[s.a];
                    p.trans.push_back(s);
                }
    {
        Transition s;
        s.kind = TKind::Send;
        s.a = s.c = bot;
        s.b = mbot;
        s.name = "s.bot";
        p.trans.push_back(s);
    }

    const auto& nodes = c.nodes;
    for (int n = 0; n < nn; ++n)
        for (int v = 0; v < 3; ++v)
            for (int code = 0; code < pow3[n]; ++code)
                for (int vo = 0; vo < 3; ++vo) {
                    const int from = sid(n, v, code, vo);
                    for (int msg = 0; msg <= mbot; ++msg) {
                        int to;
                        if (msg == mbot) {
                            to = bot;  // (5)
                        } else {
                            const int m = msg / 3, vm = msg % 3;
                            if (nodes[n].input && !nodes[n].universal && m == n && v != U && vm != U && vm != v) {
                                to = bot;  // (6)
                            } else {
                                int v2 = v, code2 = code, vo2 = vo;
                                if (nodes[n].input && v == U) {  // (1)
                                    if (m == n)
                                        v2 = 0;
                                    else if (m == go)
                                        v2 = 1;
                                }
                                if (!nodes[n].input) {  // (2)
                                    bool hit = false;
                                    for (int i = 0; i < int(nodes[n].args.size()); ++i)
                                        if (nodes[n].args[i] == m) code2 = set_arg(code2, i, vm), hit = true;
                                    if (hit) {
                                        std::vector<int> in;
                                        for (int i = 0; i < int(nodes[n].args.size()); ++i) in.push_back(arg_at(code2, i));
                                        v2 = apply_op(nodes[n].op, in);
                                    }
                                }
                                if (m == go && vm != U) vo2 = vm;  // (3), value of n kept
                                if (nodes[n].input && nodes[n].universal && v != U && m == go && vm == 1)
                                    v2 = 1 - v;  // (7)
                                to = sid(n, v2, code2, vo2);
                            }
                        }
                        if (to == from) continue;
                        Transition r;
                        r.kind = TKind::Recv;
                        r.a = from;
                        r.b = msg;
                        r.c = to;
                        r.name = "r." + p.states[from] + "." + p.messages[msg];
                        p.trans.push_back(r);
                    }
                }

    for (int n = 0; n < nn; ++n) {
        p.inputs.push_back(nodes[n].name);
        p.iota.push_back(sid(n, U, pow3[n] - 1, U));  // all-unknown args: code 22..2 in base 3
    }
    p.out.assign(p.nq(), 0);
    for (int n = 0; n < nn; ++n)
        for (int v = 0; v < 3; ++v)
            for (int code = 0; code < pow3[n]; ++code) p.out[sid(n, v, code, 1)] = 1;
    p.index();
    p.complete_receives();
    return p;
}

// ---------------------------------------------------------------- VASS

bool Vass::is_pm1() const {
    for (const auto& t : trans) {
        int nz = 0;
        for (auto x : t.v) {
            if (x == 0) continue;
            if (x != 1 && x != -1) return false;
            ++nz;
        }
        if (nz != 1) return false;
    }
    return true;
}

int Vass::state(const std::string& name) const {
    int i = find_index(states, name);
    if (i < 0) throw std::invalid_argument("unknown VASS state '" + name + "'");
    return i;
}

namespace {

std::vector<int64_t> parse_vec(const Word& w, int line, int dim, bool allow_negative) {
    if (w.s.size() < 2 || w.s.front() != '(' || w.s.back() != ')')
        throw ParseError(line, w.col, "expected a vector '(a,b,...)'");
    std::vector<int64_t> v;
    std::stringstream ss(w.s.substr(1, w.s.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto b = item.find_first_not_of(" \t");
        auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw ParseError(line, w.col, "empty vector component");
        item = item.substr(b, e - b + 1);
        std::size_t pos = 0;
        int64_t x;
        try {
            x = std::stoll(item, &pos);
        } catch (const std::exception&) {
            throw ParseError(line, w.col, "bad integer '" + item + "'");
        }
        if (pos != item.size()) throw ParseError(line, w.col, "bad integer '" + item + "'");
        if (x < 0 && !allow_negative) throw ParseError(line, w.col, "negative counter value");
        v.push_back(x);
    }
    if (int(v.size()) != dim)
        throw ParseError(line, w.col, "vector has " + std::to_string(v.size()) + " components, dim is " + std::to_string(dim));
    return v;
}

}  // namespace

Vass parse_vass(const std::string& text) {
    Vass v;
    bool have_dim = false;
    for (const auto& ln : content_lines(text)) {
        auto w = words(ln);
        const std::string& kw = w[0].s;
        auto st = [&](const Word& x) {
            int i = find_index(v.states, x.s);
            if (i < 0) throw ParseError(ln.no, x.col, "unknown state '" + x.s + "'");
            return i;
        };
        if (kw == "dim") {
            if (w.size() != 2) throw ParseError(ln.no, w[0].col, "expected 'dim <k>'");
            try {
                v.dim = std::stoi(w[1].s);
            } catch (const std::exception&) {
                throw ParseError(ln.no, w[1].col, "bad dimension");
            }
            if (v.dim < 1 || v.dim > 64) throw ParseError(ln.no, w[1].col, "dimension must be in 1..64");
            have_dim = true;
        } else if (kw == "state") {
            if (w.size() < 2) throw ParseError(ln.no, w[0].col, "expected 'state <name>...'");
            for (std::size_t i = 1; i < w.size(); ++i) {
                if (!valid_vass_name(w[i].s)) throw ParseError(ln.no, w[i].col, "bad state name '" + w[i].s + "'");
                if (find_index(v.states, w[i].s) >= 0) throw ParseError(ln.no, w[i].col, "duplicate state");
                v.states.push_back(w[i].s);
            }
        } else if (kw == "trans") {
            if (!have_dim) throw ParseError(ln.no, w[0].col, "'dim' must come first");
            if (w.size() != 4) throw ParseError(ln.no, w[0].col, "expected 'trans q (v) q2'");
            v.trans.push_back({st(w[1]), parse_vec(w[2], ln.no, v.dim, true), st(w[3])});
        } else if (kw == "query") {
            if (!have_dim) throw ParseError(ln.no, w[0].col, "'dim' must come first");
            if (w.size() != 6 || w[3].s != "->") throw ParseError(ln.no, w[0].col, "expected 'query q0 (v0) -> q (v)'");
            if (v.query) throw ParseError(ln.no, w[0].col, "duplicate query");
            v.query = Vass::Query{st(w[1]), parse_vec(w[2], ln.no, v.dim, false), st(w[4]),
                                  parse_vec(w[5], ln.no, v.dim, false)};
        } else {
            throw ParseError(ln.no, w[0].col, "unknown keyword '" + kw + "'");
        }
    }
    if (!have_dim) throw ParseError(1, 1, "missing 'dim'");
    return v;
}

namespace {
std::string vec_str(const std::vector<int64_t>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + ")";
}
}  // namespace

std::string print_vass(const Vass& v) {
    std::ostringstream os;
    os << "dim " << v.dim << "\n";
    for (const auto& s : v.states) os << "state " << s << "\n";
    for (const auto& t : v.trans) os << "trans " << v.states[t.from] << " " << vec_str(t.v) << " " << v.states[t.to] << "\n";
    if (v.query)
        os << "query " << v.states[v.query->q0] << " " << vec_str(v.query->v0) << " -> " << v.states[v.query->q] << " "
           << vec_str(v.query->vf) << "\n";
    return os.str();
}

bool vass_reachable(const Vass& v, int q0, const std::vector<int64_t>& v0, int q,
                    const std::vector<int64_t>& vf, int64_t cap) {
    auto inside = [&](const std::vector<int64_t>& x) {
        for (auto c : x)
            if (c < 0 || c > cap) return false;
        return true;
    };
    if (!inside(v0)) return false;
    using Node = std::pair<int, std::vector<int64_t>>;
    std::set<Node> seen{{q0, v0}};
    std::deque<Node> todo{{q0, v0}};
    while (!todo.empty()) {
        Node cur = todo.front();
        todo.pop_front();
        if (cur.first == q && cur.second == vf) return true;
        for (const auto& t : v.trans) {
            if (t.from != cur.first) continue;
            std::vector<int64_t> nx = cur.second;
            for (int i = 0; i < v.dim; ++i) nx[i] += t.v[i];
            if (!inside(nx)) continue;
            Node n{t.to, nx};
            if (seen.insert(n).second) todo.push_back(n);
        }
    }
    return false;
}

Pm1Result vass_to_pm1(const Vass& v, const Vass::Query& q) {
    if (v.dim < 1) throw std::invalid_argument("VASS dimension must be positive");
    Pm1Result res;
    Vass& o = res.vass;
    o.dim = v.dim;
    o.states = v.states;
    std::set<std::string> used(v.states.begin(), v.states.end());
    auto add_state = [&](const std::string& want) {
        std::string n = fresh(used, want);
        used.insert(n);
        o.states.push_back(n);
        return int(o.states.size()) - 1;
    };
    res.r0 = add_state("r0");
    res.r = add_state("r");

    std::vector<Vass::Trans> todo = v.trans;
    std::vector<int64_t> neg(q.vf.size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -q.vf[i];
    todo.push_back({res.r0, q.v0, q.q0});
    todo.push_back({q.q, neg, res.r});

    for (std::size_t ti = 0; ti < todo.size(); ++ti) {
        const auto& t = todo[ti];
        std::vector<std::vector<int64_t>> steps;
        for (int m = 0; m < v.dim; ++m) {
            const int64_t w = t.v[m];
            for (int64_t k = 0; k < (w < 0 ? -w : w); ++k) {
                std::vector<int64_t> e(v.dim, 0);
                e[m] = w > 0 ? 1 : -1;
                steps.push_back(e);
            }
        }
        if (steps.empty()) {  // zero vector: 1++ then 1--
            std::vector<int64_t> up(v.dim, 0), down(v.dim, 0);
            up[0] = 1;
            down[0] = -1;
            steps = {up, down};
        }
        int cur = t.from;
        for (std::size_t k = 0; k < steps.size(); ++k) {
            int nxt = t.to;
            if (k + 1 < steps.size())
                nxt = add_state(o.states[t.from] + ".t" + std::to_string(ti + 1) + "." + std::to_string(k + 1));
            o.trans.push_back({cur, steps[k], nxt});
            cur = nxt;
        }
    }
    o.query = Vass::Query{res.r0, std::vector<int64_t>(v.dim, 0), res.r, std::vector<int64_t>(v.dim, 0)};
    return res;
}

DtResult pm1_to_dt(const Vass& v, int r0, int r, bool determinize) {
    if (!v.is_pm1()) throw std::invalid_argument("pm1_to_dt needs a +-1-VASS");
    Protocol p;
    p.model = Model::DT;
    p.states = v.states;
    std::set<std::string> used(v.states.begin(), v.states.end());
    auto add = [&](const std::string& want) {
        std::string n = fresh(used, want);
        used.insert(n);
        p.states.push_back(n);
        return int(p.states.size()) - 1;
    };
    const int rT = add(v.states[r] + ".T");
    const int rF = add(v.states[r] + ".F");
    const int top = add("top");
    const int spec = add("bot");
    for (int m = 1; m <= v.dim; ++m) p.messages.push_back("c" + std::to_string(m));
    const int eps = int(p.messages.size());
    p.messages.push_back("eps");
    const int mtop = int(p.messages.size());
    p.messages.push_back("mtop");
    const int poke = int(p.messages.size());
    p.messages.push_back("poke");

    auto send = [&](std::string name, int a, int m, int c) {
        Transition t;
        t.kind = TKind::Send;
        t.name = std::move(name);
        t.a = a;
        t.b = m;
        t.c = c;
        p.trans.push_back(t);
    };
    auto recv = [&](std::string name, int a, int m, int c) {
        Transition t;
        t.kind = TKind::Recv;
        t.name = std::move(name);
        t.a = a;
        t.b = m;
        t.c = c;
        p.trans.push_back(t);
    };
    auto comp = [&](const Vass::Trans& t) {
        for (int m = 0; m < v.dim; ++m)
            if (t.v[m] != 0) return std::pair<int, int>{m, int(t.v[m])};
        return std::pair<int, int>{-1, 0};
    };
    for (std::size_t i = 0; i < v.trans.size(); ++i) {
        auto [m, s] = comp(v.trans[i]);
        if (s > 0) send("inc" + std::to_string(i + 1), v.trans[i].from, m, v.trans[i].to);
    }
    send("guess", r, eps, rF);
    send("flipF", rF, eps, rT);
    send("flipT", rT, eps, rF);
    send("spread", top, mtop, top);
    send("poke", spec, poke, spec);

    const int nv = int(v.states.size());
    for (int q = 0; q < nv; ++q)
        for (int m = 0; m < int(p.messages.size()); ++m) {
            bool any = false;
            if (m < v.dim)
                for (std::size_t i = 0; i < v.trans.size(); ++i) {
                    auto [c, s] = comp(v.trans[i]);
                    if (v.trans[i].from == q && c == m && s < 0) {
                        recv("dec" + std::to_string(i + 1), q, m, v.trans[i].to);
                        any = true;
                    }
                }
            if (!any) recv("fail." + p.states[q] + "." + p.messages[m], q, m, top);
        }
    for (int x : {rT, rF})
        for (int m = 0; m < int(p.messages.size()); ++m) {
            if (m == poke) continue;  // identity
            int to = m == eps ? rT : top;
            if (to != x) recv("fail." + p.states[x] + "." + p.messages[m], x, m, to);
        }
    for (int m = 0; m < int(p.messages.size()); ++m)
        if (m != eps && m != poke) recv("wake." + p.messages[m], spec, m, top);

    p.inputs = {"start", "spectator"};
    p.iota = {r0, spec};
    p.out.assign(p.nq(), 1);
    p.out[rF] = 0;
    p.out[spec] = 0;
    p.index();
    p.complete_receives();
    // Nondeterministic iff some state has two sends or two receives of one message.
    std::map<std::tuple<int, int, int>, int> cnt;
    for (const auto& t : p.trans)
        cnt[{int(t.kind), t.a, t.kind == TKind::Send ? -1 : t.b}]++;
    p.nondet = false;
    for (const auto& kv : cnt)
        if (kv.second > 1) p.nondet = true;

    DtResult res;
    if (determinize) {
        res.p = determinize_dt(p);
    } else {
        res.p = std::move(p);
    }
    Multiset in(std::vector<int32_t>{1, 1});
    res.c0 = res.p.initial_config(in);
    return res;
}

Protocol determinize_dt(const Protocol& p) {
    if (p.model != Model::DT) throw std::invalid_argument("determinize_dt needs a DT protocol");
    const int nq = int(p.nq()), nm = int(p.nm());
    // Options sorted by names: sends by (message, target), receives by target.
    std::vector<std::vector<std::pair<int, int>>> sends(nq);
    std::vector<std::vector<int>> recvs(std::size_t(nq) * nm);
    for (const auto& t : p.trans) {
        if (t.kind == TKind::Send)
            sends[t.a].push_back({t.b, t.c});
        else if (t.kind == TKind::Recv)
            recvs[std::size_t(t.a) * nm + t.b].push_back(t.c);
    }
    std::size_t n = 1;
    for (int q = 0; q < nq; ++q) {
        auto& s = sends[q];
        std::sort(s.begin(), s.end(), [&](auto x, auto y) {
            return std::tie(p.messages[x.first], p.states[x.second]) < std::tie(p.messages[y.first], p.states[y.second]);
        });
        s.erase(std::unique(s.begin(), s.end()), s.end());
        n = std::max(n, s.size());
        for (int m = 0; m < nm; ++m) {
            auto& r = recvs[std::size_t(q) * nm + m];
            if (r.empty()) r.push_back(q);
            std::sort(r.begin(), r.end(), [&](int x, int y) { return p.states[x] < p.states[y]; });
            r.erase(std::unique(r.begin(), r.end()), r.end());
            n = std::max(n, r.size());
        }
    }
    const int N = int(n);
    Protocol d;
    d.model = Model::DT;
    auto sid = [&](int q, int i, int b) { return (q * N + (i - 1)) * 2 + b; };
    for (int q = 0; q < nq; ++q)
        for (int i = 1; i <= N; ++i)
            for (int b = 0; b < 2; ++b) d.states.push_back(p.states[q] + "." + std::to_string(i) + "." + std::to_string(b));
    d.messages = p.messages;
    std::set<std::string> used(p.messages.begin(), p.messages.end());
    const int inc = nm;
    d.messages.push_back(fresh(used, "increment"));
    for (int q = 0; q < nq; ++q)
        for (int i = 1; i <= N; ++i) {
            const auto& s = sends[q];
            if (!s.empty()) {
                const int k = int(s.size());
                const int j = (i % k) + 1;
                Transition t;
                t.kind = TKind::Send;
                t.a = sid(q, i, 0);
                t.b = s[j - 1].first;
                t.c = sid(s[j - 1].second, i, 0);
                t.name = "s." + d.states[t.a];
                d.trans.push_back(t);
            }
            Transition t;
            t.kind = TKind::Send;
            t.a = sid(q, i, 1);
            t.b = inc;
            t.c = sid(q, i, 0);
            t.name = "s." + d.states[t.a];
            d.trans.push_back(t);
        }
    for (int q = 0; q < nq; ++q)
        for (int i = 1; i <= N; ++i)
            for (int b = 0; b < 2; ++b) {
                const int from = sid(q, i, b);
                for (int m = 0; m < nm; ++m) {
                    const auto& r = recvs[std::size_t(q) * nm + m];
                    const int k = int(r.size());
                    const int j = (i % k) + 1;
                    const int to = sid(r[j - 1], i, b);
                    if (to == from) continue;
                    Transition t;
                    t.kind = TKind::Recv;
                    t.a = from;
                    t.b = m;
                    t.c = to;
                    t.name = "r." + d.states[from] + "." + d.messages[m];
                    d.trans.push_back(t);
                }
                Transition t;
                t.kind = TKind::Recv;
                t.a = from;
                t.b = inc;
                t.c = sid(q, (i % N) + 1, 1);
                if (t.c == from) continue;
                t.name = "r." + d.states[from] + "." + d.messages[inc];
                d.trans.push_back(t);
            }
    d.inputs = p.inputs;
    for (int q : p.iota) d.iota.push_back(sid(q, 1, 1));
    for (int q = 0; q < nq; ++q)
        for (int i = 1; i <= N; ++i)
            for (int b = 0; b < 2; ++b) d.out.push_back(p.out[q]);
    d.index();
    d.complete_receives();
    return d;
}

}  // namespace popv
