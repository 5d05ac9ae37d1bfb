#include "popv/verify.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>

#include "popv/histories.hpp"

namespace popv {

namespace {

int64_t ipow(int64_t b, int e) {
    int64_t r = 1;
    while (e-- > 0) r *= b;
    return r;
}

void compositions(std::size_t d, int64_t n, std::vector<std::vector<int32_t>>& out) {
    if (d == 0) {
        if (n == 0) out.emplace_back();
        return;
    }
    std::vector<int32_t> cur(d, 0);
    auto rec = [&](auto&& self, std::size_t i, int64_t left) -> void {
        if (i + 1 == d) {
            cur[i] = int32_t(left);
            out.push_back(cur);
            return;
        }
        for (int64_t v = left; v >= 0; --v) {
            cur[i] = int32_t(v);
            self(self, i + 1, left - v);
        }
    };
    rec(rec, 0, n);
}

ReachOptions reach_opts(const CheckOptions& opt) {
    ReachOptions ro;
    if (opt.node_budget >= 0) ro.node_budget = opt.node_budget;
    ro.msg_cap = opt.msg_cap;
    return ro;
}

// Explicit graph the kernel runs on. DO is explored on its MFDO image with
// seen-reset edges; delayed models other than DO need a message cap.
struct KernelGraph {
    std::optional<MfdoImage> img;
    std::optional<ReachGraph> g;
    bool bounded = false;
    // Protocol whose transitions label the graph edges.
    const Protocol& explored(const Protocol& p) const { return img ? img->mfdo : p; }
};

KernelGraph build_graph(const Protocol& p, const std::vector<Configuration>& roots,
                        const CheckOptions& opt) {
    KernelGraph k;
    ReachOptions ro = reach_opts(opt);
    switch (p.model) {
        case Model::QT:
            throw std::invalid_argument("correctness verdicts are not defined for QT protocols");
        case Model::DO: {
            k.img = corresponding_mfdo(p);
            std::vector<Configuration> rs;
            for (const auto& c : roots) {
                if (!c.zero_message()) throw std::invalid_argument("DO kernel needs zero-message roots");
                rs.push_back(Configuration(c.agents, Multiset(0)));
            }
            ro.reset_seen = true;
            ro.msg_cap = -1;
            ro.seen_class = k.img->seen_class;
            k.g = reach_graph(k.img->mfdo, rs, ro);
            break;
        }
        case Model::DT: {
            if (ro.msg_cap < 0) {
                int64_t n = roots.empty() ? 0 : roots.front().agents.size();
                ro.msg_cap = 2 * n;
            }
            k.bounded = true;
            k.g = reach_graph(p, roots, ro);
            break;
        }
        default:
            k.g = reach_graph(p, roots, ro);
    }
    return k;
}

// Per node: bit 0 / bit 1 = reaches a bottom SCC in consensus 0 / 1, bit 2 = reaches
// a bottom SCC that is not a consensus.
std::vector<uint8_t> bottom_masks(const ReachGraph& g, const Protocol& p, SccResult& scc) {
    scc = bottom_scc_analysis(g, p);
    std::vector<uint8_t> cm(scc.count, 0);
    std::vector<std::vector<uint32_t>> members(scc.count);
    for (uint32_t v = 0; v < g.size(); ++v) members[scc.comp[v]].push_back(v);
    // Tarjan numbers sinks first, so successors have smaller ids.
    for (uint32_t c = 0; c < scc.count; ++c) {
        if (scc.is_bottom[c]) {
            int cv = scc.consensus[c];
            cm[c] = cv == 0 ? 1 : cv == 1 ? 2 : 4;
            continue;
        }
        for (uint32_t v : members[c])
            for (const auto& e : g.succ[v])
                if (scc.comp[e.to] != c) cm[c] |= cm[scc.comp[e.to]];
    }
    std::vector<uint8_t> out(g.size());
    for (uint32_t v = 0; v < g.size(); ++v) out[v] = cm[scc.comp[v]];
    return out;
}

// BFS path from root to a node of a bottom SCC whose consensus differs from b.
std::pair<Run, uint32_t> offending_path(const ReachGraph& g, const SccResult& scc, uint32_t root,
                                        int b) {
    std::vector<int64_t> par(g.size(), -1);
    std::vector<int> pt(g.size(), -1);
    std::deque<uint32_t> q{root};
    par[root] = root;
    while (!q.empty()) {
        uint32_t v = q.front();
        q.pop_front();
        uint32_t c = scc.comp[v];
        if (scc.is_bottom[c] && scc.consensus[c] != b) {
            std::vector<int> ts;
            for (uint32_t x = v; x != root; x = uint32_t(par[x]))
                if (pt[x] >= 0) ts.push_back(pt[x]);
            Run r;
            r.start = g.config(root);
            for (auto it = ts.rbegin(); it != ts.rend(); ++it) r.steps.push_back({*it, 1});
            r.normalize();
            return {r, v};
        }
        for (const auto& e : g.succ[v])
            if (par[e.to] < 0) {
                par[e.to] = v;
                pt[e.to] = e.t;
                q.push_back(e.to);
            }
    }
    throw std::logic_error("no offending bottom SCC reachable");
}

// Fills the witness of v from a failing root.
void fill_witness(Verdict& v, const Protocol& p, const KernelGraph& k, uint32_t root, int b) {
    SccResult scc;
    bottom_masks(*k.g, k.explored(p), scc);
    auto [run, node] = offending_path(*k.g, scc, root, b);
    if (k.img) {
        Run lifted = lift_mfdo_run(p, *k.img, run);
        lifted.start = Configuration(run.start.agents, p.empty_config().messages);
        v.offending.push_back(apply_run(p, lifted));
        v.runs.push_back(lifted);
    } else {
        v.offending.push_back(k.g->config(node));
        v.runs.push_back(run);
    }
}

int predicate_value(const Constraint& pred, const Multiset& d) { return pred.member(d) ? 1 : 0; }

// Smallest population size (>= 2) with a member, or -1.
int64_t smallest_member_size(const Constraint& g) {
    int64_t best = -1;
    for (const auto& k : g.cubes()) {
        if (!k.nonempty()) continue;
        int64_t n = std::max<int64_t>(2, k.lnorm());
        if (!cube_has_size(k, n)) continue;
        if (best < 0 || n < best) best = n;
    }
    return best;
}

struct Restricted {
    Protocol p;
    std::vector<int> old_of_new;
};

Restricted restrict_reachable(const Protocol& p) {
    auto keep = potentially_reachable_states(p);
    Restricted r{restrict_states(p, keep), {}};
    for (std::size_t q = 0; q < p.nq(); ++q)
        if (keep[q]) r.old_of_new.push_back(int(q));
    return r;
}

Configuration expand(const Protocol& full, const Restricted& r, const Configuration& c) {
    Configuration out = full.empty_config();
    for (std::size_t i = 0; i < r.old_of_new.size(); ++i) out.agents[r.old_of_new[i]] = c.agents[i];
    if (c.messages.dim() == out.messages.dim()) out.messages = c.messages;
    return out;
}

Run expand(const Protocol& full, const Restricted& r, const Run& run) {
    Run out;
    out.start = expand(full, r, run.start);
    for (const auto& s : run.steps) out.steps.push_back({full.transition(r.p.trans[s.t].name), s.k});
    return out;
}

void expand_witness(Verdict& v, const Protocol& full, const Restricted& r) {
    for (auto& c : v.offending) c = expand(full, r, c);
    for (auto& run : v.runs) run = expand(full, r, run);
}

// Sweep sizes lo..hi with the kernel; stops at the first failure.
Verdict sweep(const Protocol& p, const Constraint& pred, int64_t lo, int64_t hi,
              const CheckOptions& opt) {
    Verdict v;
    v.method = "kernel";
    for (int64_t n = lo; n <= hi; ++n) {
        Verdict s = check_size(p, pred, n, opt);
        v.largest_checked = n;
        if (!s.correct) {
            s.largest_checked = n;
            return s;
        }
        if (!s.conclusive) v.conclusive = false;
    }
    v.bound_used = hi;
    return v;
}

// Bound on the l-norm of post*(I_b) intersected with the complement of pre*(Stab_b),
// from the actual norms of I_b and Stab_b and the closure norm bounds.
int64_t witness_bound(int64_t nq, const Constraint& ib, const Constraint& stab) {
    return ib.lnorm() + ipow(nq, 3) + nq * stab.unorm() + nq;
}
int64_t worst_bound(int64_t nq, const Constraint& ib) {
    return ib.lnorm() + ipow(nq, 3) + nq * (nq * nq + ipow(nq, 4)) + nq;
}

bool has_population(const Constraint& g) { return !is_empty_population(g); }

}  // namespace

Constraint stable_set(const Protocol& p, int b) {
    if (p.model != Model::IO && p.model != Model::MFDO && p.model != Model::DO)
        throw std::invalid_argument("stable_set needs an IO, MFDO or DO protocol");
    Constraint nc = complement(consensus_set(p, b));
    Constraint pre = p.model == Model::DO ? pre_star_zm(p, nc) : pre_star(p, nc);
    Constraint st = complement(pre);
    st.canonicalize();
    const int64_t n = int64_t(p.nq());
    if (st.lnorm() > n || st.unorm() > n * n + ipow(n, 4))
        throw std::logic_error("stable set exceeds its norm bounds");
    return st;
}

Protocol restrict_states(const Protocol& p, const std::vector<char>& keep) {
    if (keep.size() != p.nq()) throw std::invalid_argument("restrict_states: wrong mask size");
    std::vector<int> nid(p.nq(), -1);
    Protocol r;
    r.model = p.model;
    r.messages = p.messages;
    r.inputs = p.inputs;
    r.nondet = p.nondet;
    for (std::size_t q = 0; q < p.nq(); ++q)
        if (keep[q]) {
            nid[q] = int(r.states.size());
            r.states.push_back(p.states[q]);
            r.out.push_back(p.out[q]);
        }
    for (int q : p.iota) {
        if (nid[q] < 0) throw std::invalid_argument("restrict_states drops an initial state");
        r.iota.push_back(nid[q]);
    }
    for (const auto& t : p.trans) {
        Transition u = t;
        auto m = [&](int& s) {
            if (nid[s] < 0) return false;
            s = nid[s];
            return true;
        };
        bool ok = true;
        switch (t.kind) {
            case TKind::Pair: ok = m(u.a) && m(u.b) && m(u.c) && m(u.d); break;
            case TKind::Obs: ok = m(u.a) && m(u.b) && m(u.c); break;
            case TKind::Send:
            case TKind::Recv: ok = m(u.a) && m(u.c); break;
        }
        if (ok) r.trans.push_back(u);
    }
    r.index();
    return r;
}

Verdict check_instance(const Protocol& p, const Configuration& c0, int b, const CheckOptions& opt) {
    if (b != 0 && b != 1) throw std::invalid_argument("expected value must be 0 or 1");
    KernelGraph k = build_graph(p, {c0}, opt);
    SccResult scc;
    auto mask = bottom_masks(*k.g, k.explored(p), scc);
    Verdict v;
    v.method = k.bounded ? "bounded" : "kernel";
    v.conclusive = !k.bounded;
    v.expected = b;
    v.bound_used = v.largest_checked = c0.agents.size();
    v.detail = std::to_string(k.g->size()) + " nodes";
    uint32_t root = k.g->roots.front();
    if (mask[root] != (1u << b)) {
        v.correct = false;
        v.conclusive = true;
        fill_witness(v, p, k, root, b);
    }
    return v;
}

Verdict check_size(const Protocol& p, const Constraint& pred, int64_t n, const CheckOptions& opt) {
    if (pred.dim() != p.inputs.size()) throw std::invalid_argument("predicate dimension mismatch");
    std::vector<std::vector<int32_t>> ds;
    compositions(p.inputs.size(), n, ds);
    std::vector<Configuration> roots;
    for (const auto& d : ds) roots.push_back(p.initial_config(Multiset(d)));
    Verdict v;
    v.expected = -1;
    v.bound_used = v.largest_checked = n;
    if (roots.empty()) {
        v.method = "kernel";
        return v;
    }
    KernelGraph k = build_graph(p, roots, opt);
    SccResult scc;
    auto mask = bottom_masks(*k.g, k.explored(p), scc);
    v.method = k.bounded ? "bounded" : "kernel";
    v.conclusive = !k.bounded;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        Configuration c = roots[i];
        if (k.img) c = Configuration(c.agents, Multiset(0));
        Seen sc = support(c);
        int64_t id = k.g->find(c, k.g->has_seen() ? &sc : nullptr);
        if (id < 0) throw std::logic_error("root missing from kernel graph");
        int b = predicate_value(pred, Multiset(ds[i]));
        if (mask[id] != (1u << b)) {
            v.correct = false;
            v.conclusive = true;
            v.input = Multiset(ds[i]);
            v.expected = b;
            fill_witness(v, p, k, uint32_t(id), b);
            return v;
        }
    }
    return v;
}

Verdict check_correct_io(const Protocol& full, const Constraint& pred, const CheckOptions& opt) {
    if (full.model != Model::IO) throw std::invalid_argument("check_correct_io needs an IO protocol");
    if (pred.dim() != full.inputs.size()) throw std::invalid_argument("predicate dimension mismatch");
    Restricted r = restrict_reachable(full);
    const Protocol& p = r.p;
    const int64_t nq = int64_t(p.nq());

    Constraint ib[2], stab[2];
    int64_t bound = 2, worst = 2;
    for (int b = 0; b < 2; ++b) {
        ib[b] = initial_set(p, pred, b);
        stab[b] = stable_set(p, b);
        bound = std::max(bound, witness_bound(nq, ib[b], stab[b]));
        worst = std::max(worst, worst_bound(nq, ib[b]));
    }

    Verdict v;
    if (opt.mode == CheckMode::Symbolic) {
        v.method = "symbolic";
        v.bound_used = bound;
        v.worst_case_bound = worst;
        for (int b = 0; b < 2; ++b) {
            if (!has_population(ib[b])) continue;
            Constraint post = post_star(p, ib[b]);
            Constraint bad = intersect(post, complement(pre_star(p, stab[b])));
            if (!has_population(bad)) continue;
            int64_t n = smallest_member_size(bad);
            Verdict w = check_size(p, pred, n, opt);
            if (w.correct)
                throw std::logic_error("symbolic check found a violation the kernel cannot replay at size " +
                                       std::to_string(n));
            w.method = "symbolic";
            w.bound_used = bound;
            w.worst_case_bound = worst;
            expand_witness(w, full, r);
            return w;
        }
        return v;
    }
    int64_t hi = bound;
    if (opt.mode == CheckMode::Kernel) hi = opt.max_size >= 0 ? opt.max_size : 10;
    else if (opt.max_size >= 0) hi = std::min(hi, opt.max_size);
    v = sweep(p, pred, 2, hi, opt);
    v.method = opt.mode == CheckMode::Witness ? "witness-bound" : "kernel";
    v.bound_used = bound;
    v.worst_case_bound = worst;
    if (v.correct && hi < bound) {
        v.conclusive = false;
        v.detail = "checked sizes 2.." + std::to_string(hi) + " of " + std::to_string(bound);
    }
    expand_witness(v, full, r);
    return v;
}

constexpr int64_t kFallbackSize = 4;

Verdict check_correct_do(const Protocol& full, const Constraint& pred, const CheckOptions& opt) {
    if (full.model != Model::DO) throw std::invalid_argument("check_correct_do needs a DO protocol");
    if (pred.dim() != full.inputs.size()) throw std::invalid_argument("predicate dimension mismatch");
    Restricted r = restrict_reachable(full);
    const Protocol& p = r.p;
    const int64_t nq = int64_t(p.nq());

    Constraint ib[2], stab[2];
    int64_t bound = 2, worst = 2;
    for (int b = 0; b < 2; ++b) {
        ib[b] = initial_set(p, pred, b);
        stab[b] = stable_set(p, b);
        bound = std::max(bound, witness_bound(nq, ib[b], stab[b]));
        worst = std::max(worst, ib[b].lnorm() + ipow(nq, 4) + 2 * ipow(nq, 3));
    }
    Verdict v;
    if (opt.mode == CheckMode::Symbolic) {
        v.method = "symbolic";
        v.bound_used = bound;
        v.worst_case_bound = worst;
        try {
            for (int b = 0; b < 2; ++b) {
                if (!has_population(ib[b])) continue;
                // post_zm*(I_b) meets X iff I_b meets pre_zm*(X), X = complement(pre_zm*(Stab)).
                Constraint x = complement(pre_star_zm(p, stab[b]));
                Constraint bad = intersect(ib[b], pre_star_zm(p, x));
                if (!has_population(bad)) continue;
                int64_t n = smallest_member_size(bad);
                Verdict w = check_size(p, pred, n, opt);
                if (w.correct)
                    throw std::logic_error("symbolic check found a violation the kernel cannot replay at size " +
                                           std::to_string(n));
                w.method = "symbolic";
                w.bound_used = bound;
                w.worst_case_bound = worst;
                expand_witness(w, full, r);
                return w;
            }
            return v;
        } catch (const SoundUnderapprox&) {
            // Support patterns blow up (circuit protocols); fall back to a bounded sweep.
            const int64_t hi = opt.max_size >= 0 ? opt.max_size : kFallbackSize;
            v = sweep(p, pred, 2, hi, opt);
            v.method = "kernel";
            v.bound_used = hi;
            v.worst_case_bound = worst;
            if (v.correct) {
                v.conclusive = false;
                v.detail = "symbolic fixpoint exceeded the cube cap; checked sizes 2.." + std::to_string(hi);
            }
            expand_witness(v, full, r);
            return v;
        }
    }
    int64_t hi = bound;
    if (opt.mode == CheckMode::Kernel) hi = opt.max_size >= 0 ? opt.max_size : 10;
    else if (opt.max_size >= 0) hi = std::min(hi, opt.max_size);
    v = sweep(p, pred, 2, hi, opt);
    v.method = opt.mode == CheckMode::Witness ? "witness-bound" : "kernel";
    v.bound_used = bound;
    v.worst_case_bound = worst;
    if (v.correct && hi < bound) {
        v.conclusive = false;
        v.detail = "checked sizes 2.." + std::to_string(hi) + " of " + std::to_string(bound);
    }
    expand_witness(v, full, r);
    return v;
}

Verdict check_correct(const Protocol& p, const Constraint& pred, const CheckOptions& opt) {
    switch (p.model) {
        case Model::IO: return check_correct_io(p, pred, opt);
        case Model::DO: return check_correct_do(p, pred, opt);
        case Model::QT:
            throw std::invalid_argument("correctness verdicts are not defined for QT protocols");
        default: break;
    }
    int64_t hi = opt.max_size >= 0 ? opt.max_size : 6;
    Verdict v = sweep(p, pred, 2, hi, opt);
    v.method = "bounded";
    if (v.correct) {
        v.conclusive = false;
        v.detail = "BOUNDED: no violation for sizes 2.." + std::to_string(hi);
    }
    return v;
}

// ---- saturation and flow ----

SaturatedConfig saturate(const Protocol& p, const Configuration& z) {
    if (p.model != Model::DO) throw std::invalid_argument("saturate needs a DO protocol");
    if (!z.zero_message()) throw std::invalid_argument("saturate needs a zero-message configuration");
    const std::size_t nq = p.nq();
    const int64_t k = z.agents.size() * int64_t(nq) + int64_t(nq * nq);
    std::vector<int> send_of(nq, -1);
    for (std::size_t i = 0; i < p.trans.size(); ++i)
        if (p.trans[i].kind == TKind::Send && send_of[p.trans[i].a] < 0) send_of[p.trans[i].a] = int(i);

    SaturatedConfig out;
    out.base = z;
    out.run.start = z;
    Configuration c = z;
    std::vector<char> emitted(nq, 0);
    auto emit = [&](int q) {
        if (send_of[q] < 0) throw std::invalid_argument("state " + p.states[q] + " has no send");
        const Transition& t = p.trans[send_of[q]];
        c.messages[t.b] += int32_t(k);
        out.run.steps.push_back({send_of[q], k});
        out.emissions.push_back({q, k});
        emitted[q] = 1;
    };
    for (std::size_t q = 0; q < nq; ++q)
        if (z.agents[q] > 0) emit(int(q));

    while (true) {
        // Multi-source BFS over states along receives of present messages.
        std::vector<int> par(nq, -2), via(nq, -1);
        std::deque<int> bfs;
        for (std::size_t q = 0; q < nq; ++q)
            if (c.agents[q] > 0) {
                par[q] = -1;
                bfs.push_back(int(q));
            }
        int target = -1;
        while (!bfs.empty() && target < 0) {
            int s = bfs.front();
            bfs.pop_front();
            for (std::size_t i = 0; i < p.trans.size(); ++i) {
                const Transition& t = p.trans[i];
                if (t.kind != TKind::Recv || t.a != s || t.c == s || c.messages[t.b] == 0) continue;
                if (par[t.c] != -2) continue;
                par[t.c] = s;
                via[t.c] = int(i);
                if (!emitted[t.c]) {
                    target = t.c;
                    break;
                }
                bfs.push_back(t.c);
            }
        }
        if (target < 0) break;
        std::vector<int> hops;
        for (int x = target; par[x] >= 0; x = par[x]) hops.push_back(via[x]);
        for (auto it = hops.rbegin(); it != hops.rend(); ++it) {
            fire(p, c, *it);
            out.run.steps.push_back({*it, 1});
        }
        emit(target);
    }
    out.run.normalize();
    out.result = c;
    return out;
}

void FlowNetwork::add_edge(int u, int v, int64_t cap) {
    adj_[u].push_back(int(arcs_.size()));
    arcs_.push_back({v, cap});
    adj_[v].push_back(int(arcs_.size()));
    arcs_.push_back({u, 0});
}

int64_t FlowNetwork::max_flow(int s, int t) {
    int64_t flow = 0;
    const int n = int(adj_.size());
    while (true) {
        std::vector<int> pa(n, -1);
        std::deque<int> q{s};
        pa[s] = -2;
        while (!q.empty() && pa[t] == -1) {
            int u = q.front();
            q.pop_front();
            for (int a : adj_[u])
                if (arcs_[a].cap > 0 && pa[arcs_[a].to] == -1) {
                    pa[arcs_[a].to] = a;
                    q.push_back(arcs_[a].to);
                }
        }
        if (pa[t] == -1) return flow;
        int64_t aug = INF;
        for (int v = t; v != s; v = arcs_[pa[v] ^ 1].to) aug = std::min(aug, arcs_[pa[v]].cap);
        for (int v = t; v != s; v = arcs_[pa[v] ^ 1].to) {
            arcs_[pa[v]].cap -= aug;
            arcs_[pa[v] ^ 1].cap += aug;
        }
        flow += aug;
    }
}

bool flow_check(const Protocol& p, const SaturatedConfig& ms, const Configuration& zt) {
    if (ms.result.agents.size() != zt.agents.size())
        throw std::invalid_argument("flow_check: agent counts differ");
    const int nq = int(p.nq());
    const int layers = std::max(1, nq);
    auto node = [&](int l, int q) { return 2 + l * nq + q; };
    FlowNetwork net(2 + layers * nq);
    for (int q = 0; q < nq; ++q) {
        if (ms.result.agents[q] > 0) net.add_edge(0, node(0, q), ms.result.agents[q]);
        if (zt.agents[q] > 0) net.add_edge(node(layers - 1, q), 1, zt.agents[q]);
    }
    for (int l = 0; l + 1 < layers; ++l) {
        for (int q = 0; q < nq; ++q) net.add_edge(node(l, q), node(l + 1, q), INF);
        for (const auto& t : p.trans)
            if (t.kind == TKind::Recv && t.a != t.c && ms.result.messages[t.b] > 0)
                net.add_edge(node(l, t.a), node(l + 1, t.c), INF);
    }
    return net.max_flow(0, 1) == zt.agents.size();
}

Verdict check_instance_do_sigma2(const Protocol& p, const Multiset& input, int b,
                                 const CheckOptions& opt) {
    if (p.model != Model::DO) throw std::invalid_argument("check_instance_do_sigma2 needs a DO protocol");
    Configuration i0 = p.initial_config(input);
    KernelGraph k = build_graph(p, {i0}, opt);
    const ReachGraph& g = *k.g;

    // Zero-message configurations reachable from each reset root.
    std::map<std::vector<int32_t>, uint32_t> root_of;
    for (uint32_t v = 0; v < g.size(); ++v) {
        Configuration c = g.config(v);
        Seen sc = support(c);
        if (g.find(c, &sc) == int64_t(v)) root_of.emplace(c.agents.counts(), v);
    }
    auto reach_from = [&](uint32_t r) {
        std::vector<char> vis(g.size(), 0);
        std::vector<uint32_t> st{r};
        vis[r] = 1;
        std::set<std::vector<int32_t>> out;
        while (!st.empty()) {
            uint32_t v = st.back();
            st.pop_back();
            out.insert(g.config(v).agents.counts());
            for (const auto& e : g.succ[v])
                if (!vis[e.to]) vis[e.to] = 1, st.push_back(e.to);
        }
        return out;
    };
    auto zm = [&](const std::vector<int32_t>& a) {
        Configuration c = p.empty_config();
        c.agents = Multiset(a);
        return c;
    };

    std::map<std::vector<int32_t>, SaturatedConfig> sat;
    Verdict v;
    v.method = "sigma2";
    v.expected = b;
    v.input = input;
    v.bound_used = v.largest_checked = input.size();
    for (const auto& [za, zr] : root_of) {
        auto reach = reach_from(zr);
        const std::vector<int32_t>* nc = nullptr;
        for (const auto& y : reach)
            if (consensus_value(p, zm(y)) != b) {
                nc = &y;
                break;
            }
        if (!nc) continue;
        bool all_back = true;
        for (const auto& y : reach) {
            auto it = sat.find(y);
            if (it == sat.end()) it = sat.emplace(y, saturate(p, zm(y))).first;
            if (!flow_check(p, it->second, zm(za))) {
                all_back = false;
                break;
            }
        }
        if (!all_back) continue;
        v.correct = false;
        v.offending = {zm(za), zm(*nc)};
        Run mr = g.path_to(zr);
        Run lifted = lift_mfdo_run(p, *k.img, mr);
        lifted.start = i0;
        v.runs.push_back(lifted);
        return v;
    }
    return v;
}

}  // namespace popv
