#include "doctest.h"
#include "fixtures.hpp"

using namespace popv;

static bool has_succ(const std::vector<Successor>& v, const Protocol& p, const std::string& t,
                     const Configuration& c) {
    for (const auto& s : v)
        if (p.trans[s.t].name == t && s.next == c) return true;
    return false;
}

TEST_CASE("validate_protocol on the running examples") {
    Protocol io = fx::io_example();
    CHECK(validate_protocol(io).ok());
    CHECK(validate_protocol_as(io, Model::IT).ok());
    CHECK(validate_protocol_as(io, Model::PP).ok());
    CHECK_FALSE(validate_protocol_as(io, Model::DO).ok());

    Protocol d = fx::do_ab();
    CHECK(validate_protocol(d).ok());
    CHECK(validate_protocol_as(d, Model::DT).ok());
    CHECK(validate_protocol_as(d, Model::QT).ok());
    CHECK_FALSE(validate_protocol(d).notes.empty());  // identity completions are flagged

    std::string bad = fx::kDoAb;
    bad.replace(bad.find("send: a -> a ! a"), 16, "send: a -> b ! a");
    auto rep = validate_protocol(parse_protocol(bad));
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].find("sender state changes") != std::string::npos);
}

TEST_CASE("IT restriction") {
    auto p = parse_protocol("model: IT\nstates: a b c\ntrans: a b -> c b\ntrans: a c -> c a\n");
    CHECK(validate_protocol(p).ok() == false);  // (a,a) unwritten keeps a, (a,b) sends a to c
    auto q = parse_protocol(
        "model: IT\nstates: a b\ntrans: a a -> b a\ntrans: a b -> b a\n");
    CHECK(validate_protocol(q).ok());
}

TEST_CASE("enabled_steps") {
    Protocol p = fx::io_example();
    auto st = enabled_steps(p, fx::agents({4, 0, 1}));
    CHECK(has_succ(st, p, "t1", fx::agents({3, 1, 1})));
    CHECK(has_succ(st, p, "t3", fx::agents({3, 0, 2})));
    CHECK(enabled_steps(p, fx::agents({1, 0, 0})).empty());

    Protocol m = fx::mfdo_ab();
    Seen s{1, 1, 0};
    auto ms = enabled_steps(m, fx::agents({1, 1, 0}), &s);
    CHECK(ms.size() == 2);
    CHECK_THROWS(enabled_steps(m, fx::agents({1, 1, 0})));
    CHECK_THROWS(enabled_steps(p, fx::agents({1, 1})));
}

TEST_CASE("apply_run") {
    Protocol p = fx::io_example();
    Run r = parse_run(p, "start: {q1:4, q3:1}\nt3 t1^2 t3 t2 t4\n");
    CHECK(apply_run(p, r) == fx::agents({0, 0, 5}));
    Run e;
    e.start = fx::agents({2, 1, 0});
    CHECK(apply_run(p, e) == e.start);
    Run bad = parse_run(p, "start: {q1:1}\nt1\n");
    CHECK_THROWS_AS(apply_run(p, bad), StepError);

    Protocol m = fx::mfdo_ab();
    Run mr = parse_run(m, "start: {a:1, b:4}\nt2 t1 t2^3\n");
    Seen seen;
    CHECK(apply_run(m, mr, &seen) == fx::agents({0, 0, 5}));
    CHECK(seen == Seen{1, 1, 1});
    Run mbad = parse_run(m, "start: {b:2}\nt2\n");
    CHECK_THROWS_AS(apply_run(m, mbad), StepError);
}

TEST_CASE("reach_graph against an independent BFS") {
    Protocol p = fx::io_example();
    ReachGraph g = reach_graph(p, {fx::agents({4, 0, 1})});
    auto oracle = fx::io_reach(p, {4, 0, 1});
    CHECK(g.size() == oracle.size());
    for (const auto& v : oracle) CHECK(g.find(fx::agents(v)) >= 0);
    CHECK(g.find(fx::agents({0, 0, 5})) >= 0);

    Protocol empty = parse_protocol("model: IO\nstates: q\n");
    ReachGraph g2 = reach_graph(empty, {fx::agents({2})});
    CHECK(g2.size() == 1);
    CHECK(g2.succ[0].empty());

    Run path = g.path_to(uint32_t(g.find(fx::agents({0, 0, 5}))));
    CHECK(apply_run(p, path) == fx::agents({0, 0, 5}));
}

TEST_CASE("DO reach_graph with a message cap and the MFDO image") {
    Protocol d = fx::do_ab();
    ReachOptions o;
    o.msg_cap = 4;
    ReachGraph g = reach_graph(d, {fx::conf(d, "{a:1, b:1}")}, o);
    CHECK(g.find(fx::conf(d, "{ab:2}")) >= 0);
    CHECK_THROWS(reach_graph(d, {fx::conf(d, "{a:1, b:1}")}));

    MfdoImage img = corresponding_mfdo(d);
    CHECK(img.mfdo.trans.size() == 2);
    ReachGraph gm = reach_graph(img.mfdo, {fx::agents({1, 1, 0})});
    bool found = false;
    for (std::size_t i = 0; i < gm.size(); ++i) found |= gm.config(i).agents == fx::ms({0, 0, 2});
    CHECK(found);
}

TEST_CASE("bottom SCC analysis") {
    Protocol p = fx::two_state();
    auto g = reach_graph(p, {fx::agents({1, 1})});
    auto r = bottom_scc_analysis(g, p);
    auto b = r.bottoms();
    REQUIRE(b.size() == 1);
    CHECK(r.consensus[b[0]] == 1);
    for (std::size_t v = 0; v < g.size(); ++v)
        if (r.comp[v] == b[0]) CHECK(g.config(v) == fx::agents({0, 2}));

    Protocol e = parse_protocol("model: IO\nstates: q r\nout: r = 1\n");
    auto ge = reach_graph(e, {fx::agents({2, 0}), fx::agents({0, 2}), fx::agents({1, 1})});
    auto re = bottom_scc_analysis(ge, e);
    CHECK(re.bottoms().size() == 3);

    Protocol io = fx::io_example();
    auto gi = reach_graph(io, {fx::agents({4, 0, 1})});
    auto ri = bottom_scc_analysis(gi, io);
    // Oracle: v is bottom iff everything reachable from v reaches v back.
    std::vector<std::set<uint32_t>> reach(gi.size());
    for (uint32_t v = 0; v < gi.size(); ++v) {
        std::vector<uint32_t> st{v};
        reach[v].insert(v);
        while (!st.empty()) {
            uint32_t x = st.back();
            st.pop_back();
            for (auto e2 : gi.succ[x])
                if (reach[v].insert(e2.to).second) st.push_back(e2.to);
        }
    }
    for (uint32_t v = 0; v < gi.size(); ++v) {
        bool bottom = true;
        for (uint32_t w : reach[v]) bottom &= reach[w].count(v) > 0;
        CHECK(bool(ri.is_bottom[ri.comp[v]]) == bottom);
        if (bottom) CHECK(gi.config(v) == fx::agents({0, 0, 5}));
    }
    CHECK(ri.consensus[ri.comp[gi.find(fx::agents({0, 0, 5}))]] == 1);
}

TEST_CASE("conservation, seen monotonicity, determinism") {
    std::mt19937_64 rng(11);
    for (int it = 0; it < 30; ++it) {
        Protocol p = fx::random_mfdo(rng, 4, 6);
        Configuration c = fx::agents({3, 2, 0, 1});
        Seen s = support(c);
        for (int k = 0; k < 40; ++k) {
            auto st = enabled_steps(p, c, &s);
            if (st.empty()) break;
            Seen before = s;
            fire(p, c, st[rng() % st.size()].t, &s);
            CHECK(c.agents.size() == 6);
            for (std::size_t q = 0; q < 4; ++q) {
                CHECK(s[q] >= before[q]);
                if (c.agents[q] > 0) CHECK(s[q]);
            }
        }
    }
    Protocol d = fx::random_do(rng, 4, 2);
    Configuration c = d.empty_config();
    c.agents[0] = 2;
    c.agents[1] = 1;
    for (int k = 0; k < 50; ++k) {
        auto st = enabled_steps(d, c);
        if (st.empty()) break;
        auto& pick = st[rng() % st.size()];
        int64_t before = c.messages.size();
        c = pick.next;
        CHECK(c.agents.size() == 3);
        CHECK(std::abs(c.messages.size() - before) == 1);
    }
    Protocol io = fx::io_example();
    auto g1 = reach_graph(io, {fx::agents({6, 0, 1})});
    auto g2 = reach_graph(io, {fx::agents({6, 0, 1})});
    REQUIRE(g1.size() == g2.size());
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1.config(i) == g2.config(i));
}

TEST_CASE("node budget") {
    Protocol io = fx::io_example();
    ReachOptions o;
    o.node_budget = 3;
    CHECK_THROWS_AS(reach_graph(io, {fx::agents({6, 0, 1})}, o), BudgetExceeded);
}
