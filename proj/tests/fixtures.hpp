#pragma once

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "popv/formats.hpp"
#include "popv/protocol.hpp"
#include "popv/semantics.hpp"

namespace fx {

inline const char* kIoExample = R"(model: IO
states: q1 q2 q3
init: s1 -> q1
init: s3 -> q3
out: q3 = 1
trans: q1 -> q2 obs q1
trans: q2 -> q3 obs q2
trans: q1 -> q3 obs q3
trans: q2 -> q3 obs q3
)";

inline const char* kTwoState = R"(model: IO
states: q0 q1
init: s0 -> q0
init: s1 -> q1
out: q1 = 1
trans: q0 -> q1 obs q1
)";

inline const char* kMfdoAb = R"(model: MFDO
states: a b ab
init: a -> a
init: b -> b
out: ab = 1
trans: a -> ab obs b
trans: b -> ab obs a
)";

inline const char* kDoAb = R"(model: DO
states: a b ab
messages: a b ab
init: a -> a
init: b -> b
out: ab = 1
send: a -> a ! a
send: b -> b ! b
send: ab -> ab ! ab
recv: a ? b -> ab
recv: b ? a -> ab
)";

inline popv::Protocol io_example() { return popv::parse_protocol(kIoExample); }
inline popv::Protocol two_state() { return popv::parse_protocol(kTwoState); }
inline popv::Protocol mfdo_ab() { return popv::parse_protocol(kMfdoAb); }
inline popv::Protocol do_ab() { return popv::parse_protocol(kDoAb); }

inline popv::Configuration conf(const popv::Protocol& p, const std::string& lit) {
    return popv::parse_config(p, lit);
}

inline popv::Multiset ms(std::vector<int32_t> v) { return popv::Multiset(std::move(v)); }

inline popv::Configuration agents(std::vector<int32_t> v) {
    return popv::Configuration(popv::Multiset(std::move(v)), popv::Multiset(0));
}

// All count vectors of dimension d and total n.
inline void compositions(std::size_t d, int n, std::vector<std::vector<int32_t>>& out) {
    std::vector<int32_t> cur(d, 0);
    auto rec = [&](auto&& self, std::size_t i, int left) -> void {
        if (i + 1 == d) {
            cur[i] = left;
            out.push_back(cur);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            cur[i] = v;
            self(self, i + 1, left - v);
        }
    };
    if (d == 0) return;
    rec(rec, 0, n);
}

inline std::vector<std::vector<int32_t>> all_upto(std::size_t d, int n) {
    std::vector<std::vector<int32_t>> out;
    for (int k = 0; k <= n; ++k) compositions(d, k, out);
    return out;
}

// Independent immediate-observation successor function (IO semantics written
// from the definition, not via the library).
inline std::vector<std::vector<int32_t>> io_succ(const popv::Protocol& p,
                                                 const std::vector<int32_t>& c) {
    std::vector<std::vector<int32_t>> out;
    for (const auto& t : p.trans) {
        int q = t.a, o = t.b, q2 = t.c;
        if (q == q2) continue;
        std::vector<int32_t> x = c;
        if (x[q] < 1) continue;
        x[q]--;
        if (x[o] < 1) continue;  // observer must be another agent
        x[q2]++;
        out.push_back(x);
    }
    return out;
}

// Explicit same-size reachability set.
inline std::set<std::vector<int32_t>> io_reach(const popv::Protocol& p, const std::vector<int32_t>& c) {
    std::set<std::vector<int32_t>> seen{c};
    std::vector<std::vector<int32_t>> st{c};
    while (!st.empty()) {
        auto x = st.back();
        st.pop_back();
        for (auto& y : io_succ(p, x))
            if (seen.insert(y).second) st.push_back(y);
    }
    return seen;
}

// MFDO state = counts + seen flags; successors written from the definition.
using MState = std::pair<std::vector<int32_t>, std::vector<char>>;

inline std::vector<MState> mfdo_succ(const popv::Protocol& p, const MState& s) {
    std::vector<MState> out;
    for (const auto& t : p.trans) {
        if (t.a == t.c) continue;
        if (s.first[t.a] < 1 || !s.second[t.b]) continue;
        MState n = s;
        n.first[t.a]--;
        n.first[t.c]++;
        n.second[t.c] = 1;
        out.push_back(n);
    }
    return out;
}

inline std::set<std::vector<int32_t>> mfdo_reach(const popv::Protocol& p, const std::vector<int32_t>& c) {
    std::vector<char> seen0(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) seen0[i] = c[i] > 0;
    std::set<MState> vis{{c, seen0}};
    std::vector<MState> st{{c, seen0}};
    while (!st.empty()) {
        auto x = st.back();
        st.pop_back();
        for (auto& y : mfdo_succ(p, x))
            if (vis.insert(y).second) st.push_back(y);
    }
    std::set<std::vector<int32_t>> out;
    for (auto& [v, s] : vis) out.insert(v);
    return out;
}

// Explicit DO moves with receives only (present messages, actual counts).
// Returns every agent placement seen.
inline std::set<std::vector<int32_t>> receive_only_placements(const popv::Protocol& p,
                                                              const popv::Configuration& from) {
    std::set<std::pair<std::vector<int32_t>, std::vector<int32_t>>> seen;
    std::set<std::vector<int32_t>> out;
    std::vector<popv::Configuration> st{from};
    seen.insert({from.agents.counts(), from.messages.counts()});
    while (!st.empty()) {
        popv::Configuration c = st.back();
        st.pop_back();
        out.insert(c.agents.counts());
        for (const auto& t : p.trans) {
            if (t.kind != popv::TKind::Recv || t.a == t.c) continue;
            if (c.agents[t.a] == 0 || c.messages[t.b] == 0) continue;
            popv::Configuration n = c;
            n.agents[t.a]--;
            n.agents[t.c]++;
            n.messages[t.b]--;
            if (seen.insert({n.agents.counts(), n.messages.counts()}).second) st.push_back(n);
        }
    }
    return out;
}

inline bool receive_only_reach(const popv::Protocol& p, const popv::Configuration& from,
                               const popv::Multiset& target) {
    return receive_only_placements(p, from).count(target.counts()) > 0;
}

// Random IO protocol with nq states and nt distinct transitions.
inline popv::Protocol random_io(std::mt19937_64& rng, int nq, int nt) {
    popv::Protocol p;
    p.model = popv::Model::IO;
    for (int i = 0; i < nq; ++i) p.states.push_back("s" + std::to_string(i));
    p.out.assign(nq, 0);
    for (int i = 0; i < nq; ++i) p.out[i] = int(rng() % 2);
    std::set<std::tuple<int, int, int>> used;
    for (int k = 0; k < nt * 4 && int(p.trans.size()) < nt; ++k) {
        int q = int(rng() % nq), o = int(rng() % nq), q2 = int(rng() % nq);
        if (q == q2) continue;
        bool clash = false;
        for (auto& [a, b, c] : used)
            if (a == q && b == o) clash = true;
        if (clash) continue;
        used.insert({q, o, q2});
        popv::Transition t;
        t.kind = popv::TKind::Obs;
        t.a = q;
        t.b = o;
        t.c = q2;
        t.name = "t" + std::to_string(p.trans.size() + 1);
        p.trans.push_back(t);
    }
    p.inputs = {"x"};
    p.iota = {0};
    p.index();
    return p;
}

inline popv::Protocol random_mfdo(std::mt19937_64& rng, int nq, int nt) {
    popv::Protocol p = random_io(rng, nq, nt);
    p.model = popv::Model::MFDO;
    return p;
}

// Random deterministic DO protocol; every state sends one message.
inline popv::Protocol random_do(std::mt19937_64& rng, int nq, int nm) {
    popv::Protocol p;
    p.model = popv::Model::DO;
    for (int i = 0; i < nq; ++i) p.states.push_back("s" + std::to_string(i));
    for (int i = 0; i < nm; ++i) p.messages.push_back("m" + std::to_string(i));
    p.out.assign(nq, 0);
    for (int i = 0; i < nq; ++i) p.out[i] = int(rng() % 2);
    int k = 0;
    for (int q = 0; q < nq; ++q) {
        popv::Transition t;
        t.kind = popv::TKind::Send;
        t.a = t.c = q;
        t.b = int(rng() % nm);
        t.name = "s" + std::to_string(++k);
        p.trans.push_back(t);
    }
    for (int q = 0; q < nq; ++q)
        for (int m = 0; m < nm; ++m) {
            if (rng() % 3 == 0) continue;
            popv::Transition t;
            t.kind = popv::TKind::Recv;
            t.a = q;
            t.b = m;
            t.c = int(rng() % nq);
            if (t.c == q) continue;
            t.name = "r" + std::to_string(++k);
            p.trans.push_back(t);
        }
    p.inputs = {"x", "y"};
    p.iota = {0, nq > 1 ? 1 : 0};
    p.index();
    p.complete_receives();
    return p;
}

// Random run of up to len single steps (immediate models).
inline popv::Run random_run(const popv::Protocol& p, const popv::Configuration& c0,
                            std::mt19937_64& rng, int len) {
    popv::Run r;
    r.start = c0;
    popv::Configuration c = c0;
    popv::Seen seen = popv::support(c);
    for (int i = 0; i < len; ++i) {
        auto st = popv::enabled_steps(p, c, &seen);
        if (st.empty()) break;
        auto& s = st[rng() % st.size()];
        popv::fire(p, c, s.t, &seen);
        r.steps.push_back({s.t, 1});
    }
    r.normalize();
    return r;
}

}  // namespace fx
