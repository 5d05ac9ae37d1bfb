#include "popv/formats.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace popv {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

namespace {

struct Tok {
    std::string s;
    int col;
};

std::vector<Tok> split_ws(const std::string& line) {
    std::vector<Tok> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        out.push_back({line.substr(i, j - i), int(i) + 1});
        i = j;
    }
    return out;
}

std::string strip_comment(const std::string& line) {
    auto h = line.find('#');
    return h == std::string::npos ? line : line.substr(0, h);
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string l;
    while (std::getline(is, l)) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
        out.push_back(l);
    }
    return out;
}

int64_t parse_count(const std::string& s, int line, int col) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw ParseError(line, col, "expected a non-negative integer, got '" + s + "'");
    try {
        return std::stoll(s);
    } catch (const std::exception&) {
        throw ParseError(line, col, "integer out of range: " + s);
    }
}

}  // namespace

Protocol parse_protocol(const std::string& text) {
    Protocol p;
    bool have_model = false, have_states = false;
    std::unordered_map<std::string, int> sidx, midx;
    struct Pending {
        int line, col;
        std::string kind, name;
        std::vector<Tok> toks;
    };
    std::vector<Pending> pend;
    std::vector<std::tuple<int, int, std::string, std::string>> inits;  // line col sigma q
    std::vector<std::tuple<int, int, std::string, std::string>> outs;
    auto lines = lines_of(text);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const int ln = int(li) + 1;
        std::string l = strip_comment(lines[li]);
        auto colon = l.find(':');
        auto toks0 = split_ws(l);
        if (toks0.empty()) continue;
        if (colon == std::string::npos) throw ParseError(ln, toks0[0].col, "expected 'key:'");
        std::string key = l.substr(0, colon);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        std::string rest = l.substr(colon + 1);
        auto toks = split_ws(rest);
        for (auto& t : toks) t.col += int(colon) + 1;
        std::string name;
        auto br = key.find('[');
        if (br != std::string::npos) {
            if (key.back() != ']') throw ParseError(ln, 1, "malformed transition name");
            name = key.substr(br + 1, key.size() - br - 2);
            key = key.substr(0, br);
            if (name.empty()) throw ParseError(ln, 1, "empty transition name");
        }
        if (key == "model") {
            if (toks.size() != 1) throw ParseError(ln, int(colon) + 2, "expected one model name");
            try {
                p.model = parse_model(toks[0].s);
            } catch (const std::exception& e) {
                throw ParseError(ln, toks[0].col, e.what());
            }
            have_model = true;
        } else if (key == "states") {
            for (auto& t : toks) {
                if (sidx.count(t.s)) throw ParseError(ln, t.col, "duplicate state '" + t.s + "'");
                sidx[t.s] = int(p.states.size());
                p.states.push_back(t.s);
            }
            have_states = true;
        } else if (key == "messages") {
            for (auto& t : toks) {
                if (midx.count(t.s)) throw ParseError(ln, t.col, "duplicate message '" + t.s + "'");
                midx[t.s] = int(p.messages.size());
                p.messages.push_back(t.s);
            }
        } else if (key == "nondet") {
            if (toks.size() != 1 || (toks[0].s != "true" && toks[0].s != "false"))
                throw ParseError(ln, int(colon) + 2, "expected true or false");
            p.nondet = toks[0].s == "true";
        } else if (key == "init") {
            if (toks.size() != 3 || toks[1].s != "->")
                throw ParseError(ln, int(colon) + 2, "expected 'init: sigma -> q'");
            inits.emplace_back(ln, toks[2].col, toks[0].s, toks[2].s);
        } else if (key == "out") {
            if (toks.size() != 3 || toks[1].s != "=" || (toks[2].s != "0" && toks[2].s != "1"))
                throw ParseError(ln, int(colon) + 2, "expected 'out: q = 0|1'");
            outs.emplace_back(ln, toks[0].col, toks[0].s, toks[2].s);
        } else if (key == "trans" || key == "send" || key == "recv") {
            pend.push_back({ln, int(colon) + 2, key, name, toks});
        } else {
            throw ParseError(ln, 1, "unknown key '" + key + "'");
        }
    }
    if (!have_model) throw ParseError(1, 1, "missing 'model:' line");
    if (!have_states) throw ParseError(1, 1, "missing 'states:' line");

    auto st = [&](const Tok& t, int ln) {
        auto it = sidx.find(t.s);
        if (it == sidx.end()) throw ParseError(ln, t.col, "unknown state '" + t.s + "'");
        return it->second;
    };
    auto msg = [&](const Tok& t, int ln) {
        auto it = midx.find(t.s);
        if (it == midx.end()) throw ParseError(ln, t.col, "unknown message '" + t.s + "'");
        return it->second;
    };
    p.out.assign(p.states.size(), 0);
    for (auto& [ln, col, q, v] : outs) p.out[st({q, col}, ln)] = v == "1";
    std::unordered_map<std::string, int> iidx;
    for (auto& [ln, col, sigma, q] : inits) {
        if (iidx.count(sigma)) throw ParseError(ln, 1, "duplicate input symbol '" + sigma + "'");
        iidx[sigma] = int(p.inputs.size());
        p.inputs.push_back(sigma);
        p.iota.push_back(st({q, col}, ln));
    }
    std::unordered_map<std::string, int> names;
    for (std::size_t i = 0; i < pend.size(); ++i) {
        const auto& d = pend[i];
        Transition t;
        t.name = d.name.empty() ? "t" + std::to_string(i + 1) : d.name;
        if (names.count(t.name))
            throw ParseError(d.line, 1, "duplicate transition name '" + t.name + "'");
        names[t.name] = 1;
        const auto& k = d.toks;
        auto bad = [&](const char* shape) {
            throw ParseError(d.line, d.col, std::string("expected '") + shape + "'");
        };
        if (d.kind == "trans") {
            if (k.size() == 5 && k[1].s == "->" && k[3].s == "obs") {
                t.kind = TKind::Obs;
                t.a = st(k[0], d.line);
                t.c = st(k[2], d.line);
                t.b = st(k[4], d.line);
            } else if (k.size() == 5 && k[2].s == "->") {
                t.kind = TKind::Pair;
                t.a = st(k[0], d.line);
                t.b = st(k[1], d.line);
                t.c = st(k[3], d.line);
                t.d = st(k[4], d.line);
                if ((p.model == Model::IO || p.model == Model::MFDO) && t.a == t.c) {
                    // Observation written in pair form: the initiator is observed.
                    Transition o;
                    o.name = t.name;
                    o.kind = TKind::Obs;
                    o.a = t.b;
                    o.b = t.a;
                    o.c = t.d;
                    t = o;
                }
            } else {
                bad("trans: q1 q2 -> q3 q4' or 'trans: q -> q' obs o");
            }
        } else if (d.kind == "send") {
            if (k.size() != 5 || k[1].s != "->" || k[3].s != "!") bad("send: q -> q' ! m");
            t.kind = TKind::Send;
            t.a = st(k[0], d.line);
            t.c = st(k[2], d.line);
            t.b = msg(k[4], d.line);
        } else {
            if (k.size() != 5 || k[1].s != "?" || k[3].s != "->") bad("recv: q ? m -> q'");
            t.kind = TKind::Recv;
            t.a = st(k[0], d.line);
            t.b = msg(k[2], d.line);
            t.c = st(k[4], d.line);
        }
        p.trans.push_back(t);
    }
    p.index();
    if (p.model == Model::DT || p.model == Model::DO) p.complete_receives();
    return p;
}

Protocol load_protocol(const std::string& path) { return parse_protocol(read_file(path)); }

static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + v[i];
    return s;
}

std::string print_protocol(const Protocol& p) {
    std::ostringstream os;
    os << "model: " << model_name(p.model) << "\n";
    os << "states: " << join(p.states) << "\n";
    if (!p.messages.empty()) os << "messages: " << join(p.messages) << "\n";
    if (p.nondet) os << "nondet: true\n";
    for (std::size_t i = 0; i < p.inputs.size(); ++i)
        os << "init: " << p.inputs[i] << " -> " << p.states[p.iota[i]] << "\n";
    for (std::size_t q = 0; q < p.nq(); ++q) os << "out: " << p.states[q] << " = " << p.out[q] << "\n";
    for (const auto& t : p.trans) {
        if (t.implicit) continue;
        const auto& S = p.states;
        switch (t.kind) {
            case TKind::Pair:
                os << "trans[" << t.name << "]: " << S[t.a] << " " << S[t.b] << " -> " << S[t.c] << " "
                   << S[t.d] << "\n";
                break;
            case TKind::Obs:
                os << "trans[" << t.name << "]: " << S[t.a] << " -> " << S[t.c] << " obs " << S[t.b] << "\n";
                break;
            case TKind::Send:
                os << "send[" << t.name << "]: " << S[t.a] << " -> " << S[t.c] << " ! "
                   << p.messages[t.b] << "\n";
                break;
            case TKind::Recv:
                os << "recv[" << t.name << "]: " << S[t.a] << " ? " << p.messages[t.b] << " -> "
                   << S[t.c] << "\n";
                break;
        }
    }
    return os.str();
}

namespace {

// Parses `{a:1, b | c:2}` into two name->count maps.
std::pair<std::vector<std::pair<std::string, int64_t>>, std::vector<std::pair<std::string, int64_t>>>
parse_braces(const std::string& lit) {
    std::string s = lit;
    auto b = s.find_first_not_of(" \t\n");
    auto e = s.find_last_not_of(" \t\n");
    if (b == std::string::npos || s[b] != '{' || s[e] != '}')
        throw ParseError(1, 1, "configuration literal must be enclosed in braces");
    std::string body = s.substr(b + 1, e - b - 1);
    std::vector<std::pair<std::string, int64_t>> parts[2];
    int side = 0;
    std::size_t i = 0;
    int col0 = int(b) + 2;
    while (i <= body.size()) {
        std::size_t j = body.find_first_of(",|", i);
        if (j == std::string::npos) j = body.size();
        std::string item = body.substr(i, j - i);
        auto ib = item.find_first_not_of(" \t\n");
        if (ib != std::string::npos) {
            auto ie = item.find_last_not_of(" \t\n");
            item = item.substr(ib, ie - ib + 1);
            auto c = item.find(':');
            std::string name = item.substr(0, c);
            name.erase(name.find_last_not_of(" \t") + 1);
            int64_t cnt = 1;
            if (c != std::string::npos) {
                std::string num = item.substr(c + 1);
                num.erase(0, num.find_first_not_of(" \t"));
                cnt = parse_count(num, 1, col0 + int(i + ib + c + 1));
            }
            parts[side].push_back({name, cnt});
        } else if (j < body.size() && body[j] == ',') {
            throw ParseError(1, col0 + int(i), "empty item in configuration literal");
        }
        if (j < body.size() && body[j] == '|') {
            if (side == 1) throw ParseError(1, col0 + int(j), "more than one '|'");
            side = 1;
        }
        i = j + 1;
    }
    return {parts[0], parts[1]};
}

Multiset fill(const std::vector<std::string>& names,
              const std::vector<std::pair<std::string, int64_t>>& items, const char* what) {
    Multiset m(names.size());
    for (const auto& [n, c] : items) {
        auto it = std::find(names.begin(), names.end(), n);
        if (it == names.end()) throw ParseError(1, 1, std::string("unknown ") + what + " '" + n + "'");
        m[it - names.begin()] += int32_t(c);
    }
    return m;
}

}  // namespace

Configuration parse_config(const Protocol& p, const std::string& lit) {
    auto [ag, ms] = parse_braces(lit);
    Configuration c = p.empty_config();
    c.agents = fill(p.states, ag, "state");
    if (!ms.empty()) {
        if (!is_delayed(p.model)) throw ParseError(1, 1, "messages in an immediate-model configuration");
        c.messages = fill(p.messages, ms, "message");
    }
    return c;
}

Multiset parse_multiset(const std::vector<std::string>& names, const std::string& lit) {
    auto [ag, ms] = parse_braces(lit);
    if (!ms.empty()) throw ParseError(1, 1, "unexpected '|' part");
    return fill(names, ag, "name");
}

std::string print_multiset(const std::vector<std::string>& names, const Multiset& m) {
    std::string s = "{";
    bool first = true;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (m[i] == 0) continue;
        s += (first ? "" : ", ") + names[i] + ":" + std::to_string(m[i]);
        first = false;
    }
    return s + "}";
}

std::string print_config(const Protocol& p, const Configuration& c) {
    std::string s = print_multiset(p.states, c.agents);
    if (c.messages.size() > 0) {
        s.pop_back();
        std::string m = print_multiset(p.messages, c.messages);
        s += " | " + m.substr(1);
    }
    return s;
}

Constraint parse_constraint(const std::vector<std::string>& names, const std::string& text) {
    Constraint g(names.size());
    auto lines = lines_of(text);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const int ln = int(li) + 1;
        std::string l = strip_comment(lines[li]);
        if (l.find_first_not_of(" \t") == std::string::npos) continue;
        auto colon = l.find(':');
        std::string key = colon == std::string::npos ? "" : l.substr(0, colon);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        if (key != "cube") throw ParseError(ln, 1, "expected 'cube:'");
        Cube c(names.size());
        std::string rest = l.substr(colon + 1);
        // Clauses: name in [lo, hi|inf], separated by commas outside brackets.
        std::size_t i = 0;
        while (i < rest.size()) {
            std::size_t s0 = rest.find_first_not_of(" \t,", i);
            if (s0 == std::string::npos) break;
            std::size_t rb = rest.find(']', s0);
            if (rb == std::string::npos) throw ParseError(ln, int(colon + 1 + s0) + 1, "missing ']'");
            std::string clause = rest.substr(s0, rb - s0 + 1);
            auto toks = split_ws(clause);
            int col = int(colon + 1 + s0) + 1;
            if (toks.size() < 3 || toks[1].s != "in")
                throw ParseError(ln, col, "expected 'name in [lo, hi]'");
            auto it = std::find(names.begin(), names.end(), toks[0].s);
            if (it == names.end()) throw ParseError(ln, col, "unknown name '" + toks[0].s + "'");
            std::string range = clause.substr(clause.find('[') + 1);
            range.pop_back();
            auto comma = range.find(',');
            if (comma == std::string::npos) throw ParseError(ln, col, "expected '[lo, hi]'");
            auto trim = [](std::string x) {
                x.erase(0, x.find_first_not_of(" \t"));
                x.erase(x.find_last_not_of(" \t") + 1);
                return x;
            };
            std::string lo = trim(range.substr(0, comma)), hi = trim(range.substr(comma + 1));
            std::size_t k = it - names.begin();
            c.L[k] = parse_count(lo, ln, col);
            c.U[k] = hi == "inf" ? INF : parse_count(hi, ln, col);
            i = rb + 1;
        }
        g.add(c);
    }
    return g;
}

std::string print_constraint(const std::vector<std::string>& names, const Constraint& g) {
    std::ostringstream os;
    for (const auto& c : g.cubes()) {
        os << "cube:";
        bool first = true;
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (c.L[i] == 0 && c.U[i] >= INF) continue;
            os << (first ? " " : ", ") << names[i] << " in [" << c.L[i] << ", "
               << (c.U[i] >= INF ? std::string("inf") : std::to_string(c.U[i])) << "]";
            first = false;
        }
        os << "\n";
    }
    return os.str();
}

Run parse_run(const Protocol& p, const std::string& text) {
    Run r;
    bool have_start = false;
    auto lines = lines_of(text);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const int ln = int(li) + 1;
        std::string l = strip_comment(lines[li]);
        auto toks = split_ws(l);
        if (toks.empty()) continue;
        if (toks[0].s.rfind("start:", 0) == 0) {
            try {
                r.start = parse_config(p, l.substr(l.find(':') + 1));
            } catch (const ParseError& e) {
                throw ParseError(ln, e.col, e.what());
            }
            have_start = true;
            continue;
        }
        for (const auto& t : toks) {
            auto caret = t.s.find('^');
            std::string name = t.s.substr(0, caret);
            int64_t k = 1;
            if (caret != std::string::npos) k = parse_count(t.s.substr(caret + 1), ln, t.col);
            int ti;
            try {
                ti = p.transition(name);
            } catch (const std::exception&) {
                throw ParseError(ln, t.col, "unknown transition '" + name + "'");
            }
            r.steps.push_back({ti, k});
        }
    }
    if (!have_start) throw ParseError(1, 1, "missing 'start:' line");
    return r;
}

std::string print_run(const Protocol& p, const Run& r) {
    std::ostringstream os;
    os << "start: " << print_config(p, r.start) << "\n";
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
        os << (i ? " " : "") << p.trans[r.steps[i].t].name;
        if (r.steps[i].k != 1) os << "^" << r.steps[i].k;
    }
    os << "\n";
    return os.str();
}

}  // namespace popv
