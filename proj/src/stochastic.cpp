#include "popv/stochastic.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "popv/formats.hpp"
#include "popv/semantics.hpp"

namespace popv {

namespace {

uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// Index i with weights[0] + ... + weights[i-1] <= r < ... + weights[i].
template <class W>
std::size_t pick_weighted(const std::vector<W>& weights, uint64_t r) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (r < uint64_t(weights[i])) return i;
        r -= uint64_t(weights[i]);
    }
    throw std::logic_error("weighted pick out of range");
}

struct Tables {
    // send-receive
    std::vector<std::vector<int>> sends;                // per state
    std::vector<std::vector<std::vector<int>>> recv;    // [state][message] -> transitions
    std::vector<std::vector<int>> receivable;           // R(q)
    // uniform pair: [q1 * nq + q2] -> transitions
    std::vector<std::vector<int>> pair;
};

Tables tables(const Protocol& p, Scheduler::Kind kind) {
    Tables t;
    const std::size_t nq = p.nq();
    if (kind == Scheduler::Kind::SendReceive) {
        t.sends.resize(nq);
        t.recv.assign(nq, std::vector<std::vector<int>>(p.nm()));
        t.receivable.resize(nq);
        for (std::size_t i = 0; i < p.trans.size(); ++i) {
            const Transition& x = p.trans[i];
            if (x.kind == TKind::Send) t.sends[x.a].push_back(int(i));
            else if (x.kind == TKind::Recv) t.recv[x.a][x.b].push_back(int(i));
        }
        for (std::size_t q = 0; q < nq; ++q)
            for (std::size_t m = 0; m < p.nm(); ++m)
                if (!t.recv[q][m].empty()) t.receivable[q].push_back(int(m));
    } else {
        t.pair.resize(nq * nq);
        for (std::size_t i = 0; i < p.trans.size(); ++i) {
            const Transition& x = p.trans[i];
            if (x.kind == TKind::Pair || x.kind == TKind::Obs) t.pair[x.a * nq + x.b].push_back(int(i));
        }
    }
    return t;
}

int agent_state(const Configuration& c, uint64_t r) { return int(pick_weighted(c.agents.counts(), r)); }

}  // namespace

Rng::Rng(uint64_t seed, uint64_t stream) {
    uint64_t x = seed + stream * 0x9E3779B97F4A7C15ull;
    for (auto& w : s_) w = splitmix64(x);
}

uint64_t Rng::next() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

uint64_t Rng::below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do x = next();
    while (x >= limit);
    return x % n;
}

double Rng::unit() { return double(next() >> 11) * 0x1.0p-53; }

void check_scheduler(const Protocol& p, const Scheduler& s) {
    if (s.kind == Scheduler::Kind::SendReceive) {
        if (!(s.p > 0 && s.p < 1)) throw std::invalid_argument("send probability must lie in (0,1)");
        if (p.model != Model::QT && p.model != Model::DT && p.model != Model::DO)
            throw std::invalid_argument("the send-receive scheduler drives QT, DT and DO protocols");
    } else if (p.model != Model::PP && p.model != Model::IT && p.model != Model::IO) {
        throw std::invalid_argument("the uniform-pair scheduler drives PP, IT and IO protocols");
    }
}

McSummary mc_run(const Protocol& p, const Configuration& c0, const Scheduler& s, const McOptions& o) {
    check_scheduler(p, s);
    if (c0.agents.dim() != p.nq()) throw std::invalid_argument("configuration does not match the protocol");
    if (o.max_steps < 0) throw std::invalid_argument("max_steps must be non-negative");
    const int64_t n = c0.agents.size();
    if (n == 0) throw std::invalid_argument("empty population");
    if (s.kind == Scheduler::Kind::UniformPair && n < 2)
        throw std::invalid_argument("the uniform-pair scheduler needs two agents");

    const Tables tb = tables(p, s.kind);
    Rng rng(s.seed, o.run_index);
    McSummary m;
    Configuration c = c0;
    if (is_delayed(p.model) && c.messages.dim() != p.nm()) c.messages = Multiset(p.nm());
    int64_t msgs = c.messages.size();
    const std::size_t nq = p.nq();
    if (o.keep_series) {
        m.consensus.reserve(std::size_t(o.max_steps));
        m.message_count.reserve(std::size_t(o.max_steps));
    }
    if (o.window > 0) {
        m.zero_per_window.assign(std::size_t((o.max_steps + o.window - 1) / o.window), 0);
        m.final_window_occupied.assign(nq, 0);
    }
    const int64_t final_from = o.window > 0 ? std::max<int64_t>(1, o.max_steps - o.window + 1) : o.max_steps + 1;
    std::vector<int64_t> rw;  // scratch weights

    for (int64_t step = 1; step <= o.max_steps; ++step) {
        int fired = -1;
        if (s.kind == Scheduler::Kind::SendReceive) {
            const int q = agent_state(c, rng.below(uint64_t(n)));
            if (rng.unit() < s.p) {
                const auto& ss = tb.sends[q];
                if (!ss.empty()) fired = ss[rng.below(ss.size())];
            } else {
                const auto& rq = tb.receivable[q];
                rw.assign(rq.size(), 0);
                int64_t total = 0;
                for (std::size_t i = 0; i < rq.size(); ++i) total += rw[i] = c.messages[rq[i]];
                if (total > 0) {
                    const int msg = rq[pick_weighted(rw, rng.below(uint64_t(total)))];
                    const auto& ts = tb.recv[q][msg];
                    fired = ts[rng.below(ts.size())];
                }
            }
        } else {
            // ordered pair of distinct agents
            const uint64_t i = rng.below(uint64_t(n));
            uint64_t j = rng.below(uint64_t(n - 1));
            if (j >= i) ++j;
            const int q1 = agent_state(c, i), q2 = agent_state(c, j);
            const auto& ts = tb.pair[q1 * nq + q2];
            if (!ts.empty()) fired = ts[rng.below(ts.size())];
        }
        if (fired >= 0) {
            fire(p, c, fired);
            const TKind k = p.trans[fired].kind;
            if (k == TKind::Send) ++msgs;
            else if (k == TKind::Recv) --msgs;
        } else {
            ++m.noops;
        }
        if (msgs == 0) {
            ++m.zero_message_visits;
            if (o.window > 0) ++m.zero_per_window[std::size_t((step - 1) / o.window)];
        }
        if (step >= final_from)
            for (std::size_t q = 0; q < nq; ++q)
                if (c.agents[q]) m.final_window_occupied[q] = 1;
        if (o.keep_series) {
            m.consensus.push_back(int8_t(consensus_value(p, c)));
            m.message_count.push_back(msgs);
        }
        if (o.on_step) o.on_step(step, c);
    }
    m.steps = o.max_steps;
    m.final = c;
    return m;
}

std::string summary_text(const Protocol& p, const McSummary& m) {
    std::ostringstream os;
    os << "steps=" << m.steps << "\n";
    os << "noops=" << m.noops << "\n";
    os << "zero_message_visits=" << m.zero_message_visits << "\n";
    if (!m.message_count.empty()) os << "final_messages=" << m.message_count.back() << "\n";
    os << "final_consensus=" << consensus_value(p, m.final) << "\n";
    os << "final=" << print_config(p, m.final) << "\n";
    if (!m.zero_per_window.empty()) {
        int64_t hit = 0;
        for (auto z : m.zero_per_window) hit += z > 0;
        os << "windows=" << m.zero_per_window.size() << "\n";
        os << "windows_with_zero=" << hit << "\n";
    }
    return os.str();
}

std::string series_csv(const McSummary& m) {
    std::ostringstream os;
    os << "step,messages,consensus\n";
    for (std::size_t i = 0; i < m.message_count.size(); ++i)
        os << i + 1 << "," << m.message_count[i] << "," << int(m.consensus[i]) << "\n";
    return os.str();
}

ConvergenceStats estimate_convergence(const Protocol& p, const Configuration& c0, const Scheduler& s,
                                      int64_t runs, int64_t max_steps, int64_t window) {
    if (runs < 1) throw std::invalid_argument("need at least one run");
    if (window < 1 || window > max_steps) throw std::invalid_argument("window must lie in 1..max_steps");
    ConvergenceStats st;
    st.runs = runs;
    st.max_steps = max_steps;
    st.window = window;
    st.occupied.assign(p.nq(), 0);
    int64_t zero_visits = 0;
    for (int64_t r = 0; r < runs; ++r) {
        McOptions o;
        o.max_steps = max_steps;
        o.run_index = uint64_t(r);
        o.window = window;
        o.keep_series = true;
        McSummary m = mc_run(p, c0, s, o);
        const int8_t last = m.consensus.back();
        bool constant = last >= 0;
        for (int64_t i = max_steps - window; i < max_steps && constant; ++i) constant = m.consensus[i] == last;
        if (constant) ++st.converged[last];
        for (auto z : m.zero_per_window) st.windows_with_zero += z > 0;
        st.windows += int64_t(m.zero_per_window.size());
        zero_visits += m.zero_message_visits;
        for (std::size_t q = 0; q < p.nq(); ++q) st.occupied[q] += m.final_window_occupied[q];
    }
    for (int b = 0; b < 2; ++b) {
        const double f = double(st.converged[b]) / double(runs);
        const double h = 1.96 * std::sqrt(f * (1 - f) / double(runs));
        st.fraction[b] = f;
        st.ci_low[b] = std::max(0.0, f - h);
        st.ci_high[b] = std::min(1.0, f + h);
    }
    for (auto& x : st.occupied) x /= double(runs);
    st.zero_rate = double(zero_visits) / double(runs * max_steps);
    return st;
}

std::string stats_text(const Protocol& p, const ConvergenceStats& st) {
    std::ostringstream os;
    os << "runs=" << st.runs << "\nmax_steps=" << st.max_steps << "\nwindow=" << st.window << "\n";
    for (int b = 0; b < 2; ++b)
        os << "converged_" << b << "=" << st.converged[b] << "\nfraction_" << b << "=" << st.fraction[b]
           << "\nci95_" << b << "=" << st.ci_low[b] << "," << st.ci_high[b] << "\n";
    os << "windows=" << st.windows << "\nwindows_with_zero=" << st.windows_with_zero << "\n";
    os << "zero_rate=" << st.zero_rate << "\n";
    for (std::size_t q = 0; q < p.nq(); ++q) os << "occupied[" << p.states[q] << "]=" << st.occupied[q] << "\n";
    return os.str();
}

Example more_than_half() {
    Example e;
    Protocol& p = e.p;
    p.model = Model::DT;
    p.states = {"q0", "q1", "q2", "bot"};
    p.messages = {"a", "b"};
    p.inputs = {"x", "spectator"};
    p.iota = {2, 3};
    p.out = {0, 0, 1, 0};
    auto add = [&](const std::string& name, TKind k, int a, int b, int c) {
        Transition t;
        t.name = name;
        t.kind = k;
        t.a = a;
        t.b = b;
        t.c = c;
        p.trans.push_back(t);
    };
    add("s0", TKind::Send, 0, 0, 0);
    add("s1", TKind::Send, 1, 1, 0);
    add("s2", TKind::Send, 2, 1, 1);
    add("r0a", TKind::Recv, 0, 0, 0);
    add("r0b", TKind::Recv, 0, 1, 1);
    add("r1a", TKind::Recv, 1, 0, 1);
    add("r1b", TKind::Recv, 1, 1, 2);
    add("r2a", TKind::Recv, 2, 0, 2);
    add("r2b", TKind::Recv, 2, 1, 2);
    p.index();
    e.c0 = p.initial_config(Multiset(std::vector<int32_t>{1, 1}));
    return e;
}

Example qt_send_receive() {
    Example e;
    Protocol& p = e.p;
    p.model = Model::QT;
    p.states = {"q0", "q1"};
    p.messages = {"a"};
    p.inputs = {"x"};
    p.iota = {0};
    p.out = {0, 1};
    Transition s;
    s.name = "send";
    s.kind = TKind::Send;
    s.a = 0;
    s.b = 0;
    s.c = 0;
    Transition r = s;
    r.name = "recv";
    r.kind = TKind::Recv;
    r.c = 1;
    p.trans = {s, r};
    p.index();
    e.c0 = p.initial_config(Multiset(std::vector<int32_t>{2}));
    return e;
}

}  // namespace popv
