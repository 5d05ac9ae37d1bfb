#include "popv/counting.hpp"

#include <algorithm>
#include <deque>

#include "popv/histories.hpp"
#include "popv/semantics.hpp"

namespace popv {

// ---- cubes ---------------------------------------------------------------

bool Cube::nonempty() const {
    for (std::size_t i = 0; i < L.size(); ++i)
        if (L[i] > U[i]) return false;
    return true;
}

int64_t Cube::lnorm() const {
    int64_t s = 0;
    for (auto v : L) s += v;
    return s;
}

int64_t Cube::unorm() const {
    int64_t s = 0;
    for (auto v : U)
        if (v < INF) s += v;
    return s;
}

bool Cube::contains(const Multiset& c) const { return contains(c.counts().data()); }

bool Cube::contains(const int32_t* c) const {
    for (std::size_t i = 0; i < L.size(); ++i)
        if (c[i] < L[i] || c[i] > U[i]) return false;
    return true;
}

bool Cube::includes(const Cube& o) const {
    if (!o.nonempty()) return true;
    for (std::size_t i = 0; i < L.size(); ++i)
        if (o.L[i] < L[i] || o.U[i] > U[i]) return false;
    return true;
}

Cube intersect(const Cube& a, const Cube& b) {
    Cube r(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        r.L[i] = std::max(a.L[i], b.L[i]);
        r.U[i] = std::min(a.U[i], b.U[i]);
    }
    return r;
}

// ---- constraints ---------------------------------------------------------

Constraint::Constraint(std::size_t dim, std::vector<Cube> cubes) : dim_(dim), cubes_(std::move(cubes)) {
    for (const auto& c : cubes_)
        if (c.dim() != dim_) throw std::invalid_argument("cube dimension mismatch");
}

Constraint Constraint::top(std::size_t dim) { return Constraint(dim, {Cube(dim)}); }

void Constraint::add(const Cube& c) {
    if (c.dim() != dim_) throw std::invalid_argument("cube dimension mismatch");
    cubes_.push_back(c);
}

bool Constraint::member(const Multiset& c) const {
    if (c.dim() != dim_) throw std::invalid_argument("configuration dimension mismatch");
    for (const auto& k : cubes_)
        if (k.contains(c)) return true;
    return false;
}

int64_t Constraint::lnorm() const {
    int64_t m = 0;
    for (const auto& c : cubes_)
        if (c.nonempty()) m = std::max(m, c.lnorm());
    return m;
}

int64_t Constraint::unorm() const {
    int64_t m = 0;
    for (const auto& c : cubes_)
        if (c.nonempty()) m = std::max(m, c.unorm());
    return m;
}

void Constraint::canonicalize() {
    std::vector<Cube> ne;
    for (auto& c : cubes_)
        if (c.nonempty()) ne.push_back(std::move(c));
    std::sort(ne.begin(), ne.end());
    ne.erase(std::unique(ne.begin(), ne.end()), ne.end());
    std::vector<char> dead(ne.size(), 0);
    for (std::size_t i = 0; i < ne.size(); ++i) {
        if (dead[i]) continue;
        for (std::size_t j = 0; j < ne.size(); ++j)
            if (i != j && !dead[j] && ne[i].includes(ne[j])) dead[j] = 1;
    }
    cubes_.clear();
    for (std::size_t i = 0; i < ne.size(); ++i)
        if (!dead[i]) cubes_.push_back(std::move(ne[i]));
}

static void same_dim(const Constraint& a, const Constraint& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("constraint dimension mismatch");
}

Constraint unite(const Constraint& a, const Constraint& b) {
    same_dim(a, b);
    Constraint r = a;
    for (const auto& c : b.cubes()) r.add(c);
    r.canonicalize();
    return r;
}

Constraint intersect(const Constraint& a, const Constraint& b) {
    same_dim(a, b);
    Constraint r(a.dim());
    for (const auto& x : a.cubes())
        for (const auto& y : b.cubes()) {
            Cube c = intersect(x, y);
            if (c.nonempty()) r.add(c);
        }
    r.canonicalize();
    return r;
}

Constraint complement(const Constraint& a) {
    const std::size_t n = a.dim();
    std::vector<Cube> acc{Cube(n)};
    for (const auto& c : a.cubes()) {
        if (!c.nonempty()) continue;
        std::vector<Cube> next;
        for (const auto& r : acc) {
            if (!intersect(r, c).nonempty()) {
                next.push_back(r);
                continue;
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (c.L[i] >= 1) {
                    Cube x = r;
                    x.U[i] = std::min(x.U[i], c.L[i] - 1);
                    if (x.nonempty()) next.push_back(x);
                }
                if (c.U[i] < INF) {
                    Cube x = r;
                    x.L[i] = std::max(x.L[i], c.U[i] + 1);
                    if (x.nonempty()) next.push_back(x);
                }
            }
        }
        Constraint tmp(n, std::move(next));
        tmp.canonicalize();
        acc = tmp.cubes();
    }
    return Constraint(n, acc);
}

bool is_empty_population(const Constraint& g) {
    for (const auto& c : g.cubes()) {
        if (!c.nonempty()) continue;
        int64_t s = 0;
        for (auto u : c.U) {
            if (u >= INF) return false;
            s += u;
        }
        if (s >= 2) return false;
    }
    return true;
}

bool cube_has_size(const Cube& c, int64_t n) {
    if (!c.nonempty() || c.lnorm() > n) return false;
    int64_t cap = 0;
    for (auto u : c.U) {
        if (u >= INF) return true;
        cap += u;
    }
    return cap >= n;
}

Multiset cube_member_of_size(const Cube& c, int64_t n) {
    if (!cube_has_size(c, n)) throw std::invalid_argument("cube has no member of that size");
    Multiset m(c.dim());
    int64_t left = n;
    for (std::size_t i = 0; i < c.dim(); ++i) {
        m[i] = int32_t(c.L[i]);
        left -= c.L[i];
    }
    for (std::size_t i = 0; i < c.dim() && left > 0; ++i) {
        int64_t room = c.U[i] >= INF ? left : c.U[i] - c.L[i];
        int64_t add = std::min(room, left);
        m[i] += int32_t(add);
        left -= add;
    }
    return m;
}

// ---- closures ------------------------------------------------------------

namespace {

using Bits = std::vector<uint64_t>;

bool bit(const Bits& b, int i) { return (b[i >> 6] >> (i & 63)) & 1; }
void set_bit(Bits& b, int i) { b[i >> 6] |= uint64_t(1) << (i & 63); }
void clear_bit(Bits& b, int i) { b[i >> 6] &= ~(uint64_t(1) << (i & 63)); }
bool subset(const Bits& a, const Bits& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] & ~b[i]) return false;
    return true;
}

// Cube paired with a set of states that must have been seen (MFDO obligations).
struct XCube {
    Cube k;
    Bits a;
    // Support-shaped cubes (L in {0,1}, U in {0,inf}) compare by bitmask:
    // sig = required | zero | obligations, one block each.
    bool simple = false;
    Bits sig;
};

void set_signature(XCube& x) {
    const std::size_t n = x.k.dim(), w = (n + 63) / 64;
    x.simple = true;
    for (std::size_t q = 0; q < n && x.simple; ++q)
        x.simple = x.k.L[q] <= 1 && (x.k.U[q] == 0 || x.k.U[q] >= INF);
    if (!x.simple) return;
    x.sig.assign(2 * w + x.a.size(), 0);
    for (std::size_t q = 0; q < n; ++q) {
        if (x.k.L[q] == 1) x.sig[q >> 6] |= uint64_t(1) << (q & 63);
        if (x.k.U[q] == 0) x.sig[w + (q >> 6)] |= uint64_t(1) << (q & 63);
    }
    for (std::size_t i = 0; i < x.a.size(); ++i) x.sig[2 * w + i] = x.a[i];
}

// (K1,A1) covers (K2,A2) iff K2 is inside K1 and A1 is at most A2.
bool covers(const XCube& x, const XCube& y) {
    if (x.simple && y.simple) return subset(x.sig, y.sig);
    return subset(x.a, y.a) && x.k.includes(y.k);
}

// Predecessor cube through q -> q' observing o. With `observer`, the observed
// agent must be present (IO); otherwise it becomes an obligation (MFDO).
bool pre_cube(const Cube& k, int q, int o, int q2, bool observer, Cube& out) {
    if (k.U[q2] == 0) return false;
    out = k;
    out.L[q] = k.L[q] + 1;
    out.U[q] = inf_add(k.U[q], 1);
    out.L[q2] = std::max<int64_t>(0, k.L[q2] - 1);
    out.U[q2] = inf_add(k.U[q2], -1);
    if (observer) out.L[o] = std::max<int64_t>(out.L[o], o == q ? 2 : 1);
    if (!out.nonempty()) return false;
    // Widening: surplus agents in q can be flushed into q' one by one.
    if (k.U[q2] >= INF) out.U[q] = INF;
    return true;
}

// MFDO obligations are kept per seen class (see MfdoImage::seen_class); with no
// classes every state is its own class.
Constraint saturate(const Protocol& p, const Constraint& g, const ClosureOptions& opt,
                    const std::vector<int>* classes = nullptr) {
    const bool mf = p.model == Model::MFDO;
    std::vector<int> cls(p.nq());
    for (std::size_t q = 0; q < p.nq(); ++q) cls[q] = classes ? (*classes)[q] : int(q);
    int ncls = 0;
    for (int k : cls) ncls = std::max(ncls, k + 1);
    std::vector<std::vector<int>> members(ncls);
    for (std::size_t q = 0; q < p.nq(); ++q)
        if (cls[q] >= 0) members[cls[q]].push_back(int(q));
    const std::size_t words = (std::size_t(ncls) + 63) / 64;
    std::vector<XCube> all;
    std::vector<char> alive;
    std::vector<std::size_t> live;  // indices with alive set, compacted lazily
    std::deque<std::size_t> work;
    int64_t kept = 0;
    auto add = [&](XCube&& x) {
        set_signature(x);
        for (std::size_t i : live)
            if (alive[i] && covers(all[i], x)) return false;
        std::size_t w = 0;
        for (std::size_t i : live) {
            if (alive[i] && covers(x, all[i])) alive[i] = 0;
            if (alive[i]) live[w++] = i;
        }
        live.resize(w);
        all.push_back(std::move(x));
        alive.push_back(1);
        live.push_back(all.size() - 1);
        work.push_back(all.size() - 1);
        ++kept;
        return true;
    };
    auto result = [&] {
        Constraint r(p.nq());
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (!alive[i]) continue;
            // each open obligation needs one populated member of its class
            std::vector<int> open;
            for (int k = 0; k < ncls; ++k)
                if (bit(all[i].a, k)) open.push_back(k);
            auto expand = [&](auto&& self, std::size_t j, Cube c) -> void {
                if (j == open.size()) {
                    if (c.nonempty()) r.add(c);
                    return;
                }
                for (int q : members[open[j]]) {
                    if (c.U[q] == 0) continue;
                    Cube d = c;
                    d.L[q] = std::max<int64_t>(d.L[q], 1);
                    self(self, j + 1, std::move(d));
                }
            };
            expand(expand, 0, all[i].k);
        }
        r.canonicalize();
        return r;
    };
    Constraint g0 = g;
    g0.canonicalize();
    for (const auto& c : g0.cubes()) add({c, Bits(words, 0)});
    while (!work.empty()) {
        std::size_t i = work.front();
        work.pop_front();
        if (!alive[i]) continue;
        for (const auto& t : p.trans) {
            if (t.kind != TKind::Obs || t.a == t.c) continue;
            Cube c;
            if (!pre_cube(all[i].k, t.a, t.b, t.c, !mf, c)) continue;
            Bits a = all[i].a;
            if (mf) {
                if (cls[t.c] >= 0) clear_bit(a, cls[t.c]);
                if (cls[t.b] < 0) throw std::logic_error("observed state without a seen class");
                set_bit(a, cls[t.b]);
                // a populated state is already seen
                for (std::size_t q = 0; q < p.nq(); ++q)
                    if (c.L[q] >= 1 && cls[q] >= 0) clear_bit(a, cls[q]);
            }
            add({std::move(c), std::move(a)});
            if (kept > opt.cube_cap)
                throw SoundUnderapprox("closure fixpoint exceeded the cube cap", result());
        }
    }
    return result();
}

void enumerate_size(std::size_t dim, int32_t n, std::vector<std::vector<int32_t>>& out) {
    std::vector<int32_t> cur(dim, 0);
    // Lexicographic order of count vectors.
    auto rec = [&](auto&& self, std::size_t i, int32_t left) -> void {
        if (i + 1 == dim) {
            cur[i] = left;
            out.push_back(cur);
            return;
        }
        for (int32_t v = 0; v <= left; ++v) {
            cur[i] = v;
            self(self, i + 1, left - v);
        }
    };
    if (dim == 0) {
        if (n == 0) out.push_back({});
        return;
    }
    rec(rec, 0, n);
}

int first_cube_containing(const Constraint& g, const Multiset& c) {
    for (std::size_t i = 0; i < g.cubes().size(); ++i)
        if (g.cubes()[i].contains(c)) return int(i);
    return -1;
}

Multiset lower_of(const Cube& k) {
    Multiset m(k.dim());
    for (std::size_t i = 0; i < k.dim(); ++i) m[i] = int32_t(k.L[i]);
    return m;
}

// Witness construction: enumerate small configurations, build one small cube per
// uncovered member from a pruned covering run.
Constraint witness_closure(const Protocol& p, const Constraint& g0, bool forward,
                           const ClosureOptions& opt) {
    Constraint g = g0;
    g.canonicalize();
    const std::size_t nq = p.nq();
    int64_t N = opt.witness_size >= 0
                    ? opt.witness_size
                    : g.lnorm() + int64_t(nq * nq * nq) + g.unorm();
    ReachOptions ro;
    if (opt.node_budget >= 0) ro.node_budget = opt.node_budget;
    Constraint res(nq);
    for (int32_t n = 0; n <= N; ++n) {
        std::vector<std::vector<int32_t>> confs;
        enumerate_size(nq, n, confs);
        std::vector<Configuration> roots;
        if (forward) {
            for (const auto& v : confs)
                if (g.member(Multiset(v))) roots.push_back(Configuration(Multiset(v), Multiset(0)));
        } else {
            for (const auto& v : confs) roots.push_back(Configuration(Multiset(v), Multiset(0)));
        }
        if (roots.empty()) continue;
        ReachGraph gr = reach_graph(p, roots, ro);
        const std::size_t V = gr.size();
        if (!forward) {
            std::vector<std::vector<std::pair<uint32_t, int>>> pred(V);
            for (std::size_t v = 0; v < V; ++v)
                for (const auto& e : gr.succ[v]) pred[e.to].push_back({uint32_t(v), e.t});
            std::vector<int64_t> next(V, -2);
            std::vector<int> next_t(V, -1);
            std::deque<uint32_t> q;
            for (std::size_t v = 0; v < V; ++v)
                if (g.member(gr.config(v))) {
                    next[v] = -1;
                    q.push_back(uint32_t(v));
                }
            while (!q.empty()) {
                uint32_t w = q.front();
                q.pop_front();
                for (auto [v, t] : pred[w])
                    if (next[v] == -2) {
                        next[v] = w;
                        next_t[v] = t;
                        q.push_back(v);
                    }
            }
            for (const auto& v : confs) {
                Configuration c(Multiset(v), Multiset(0));
                Seen s = support(c);
                int64_t id = gr.find(c, p.model == Model::MFDO ? &s : nullptr);
                if (id < 0 || next[id] == -2 || res.member(c)) continue;
                Run run;
                run.start = c;
                int64_t cur = id;
                while (next[cur] != -1) {
                    run.steps.push_back({next_t[cur], 1});
                    cur = next[cur];
                }
                run.normalize();
                Multiset fin = gr.config(cur).agents;
                const Cube& k = g.cubes()[first_cube_containing(g, fin)];
                Run pr = prune(p, run, Multiset(nq), lower_of(k));
                History h = deanonymize(p, run);
                Cube cube(nq);
                for (std::size_t s2 = 0; s2 < nq; ++s2) {
                    cube.L[s2] = pr.start.agents[s2];
                    cube.U[s2] = c.agents[s2];
                }
                for (const auto& tr : h.traj)
                    if (k.U[tr.back()] >= INF) cube.U[tr.front()] = INF;
                res.add(cube);
            }
        } else {
            Interner by_agents(nq);
            std::vector<uint32_t> node_of;
            for (std::size_t u = 0; u < V; ++u)
                if (by_agents.insert(gr.key(u)).second) node_of.push_back(uint32_t(u));
            for (const auto& v : confs) {
                Configuration c(Multiset(v), Multiset(0));
                if (res.member(c)) continue;
                int64_t slot = by_agents.find(v);
                if (slot < 0) continue;
                int64_t id = node_of[slot];
                Run run = gr.path_to(uint32_t(id));
                const Cube& k = g.cubes()[first_cube_containing(g, run.start.agents)];
                Run pr = prune(p, run, lower_of(k), Multiset(nq));
                Configuration dfin = apply_run(p, pr);
                History h = deanonymize(p, run);
                Cube cube(nq);
                for (std::size_t s2 = 0; s2 < nq; ++s2) {
                    cube.L[s2] = dfin.agents[s2];
                    cube.U[s2] = c.agents[s2];
                }
                for (const auto& tr : h.traj)
                    if (k.U[tr.front()] >= INF) cube.U[tr.back()] = INF;
                res.add(cube);
            }
        }
    }
    res.canonicalize();
    return res;
}

void require_model(const Protocol& p, std::initializer_list<Model> ms, const char* op) {
    for (Model m : ms)
        if (p.model == m) return;
    throw std::invalid_argument(std::string(op) + ": unsupported model " + model_name(p.model));
}

}  // namespace

Constraint onestep_pre_io(const Protocol& p, const Constraint& g) {
    require_model(p, {Model::IO}, "onestep_pre_io");
    Constraint r(p.nq());
    for (const auto& k : g.cubes()) {
        if (!k.nonempty()) continue;
        for (const auto& t : p.trans) {
            if (t.kind != TKind::Obs) continue;
            if (t.a == t.c) continue;
            if (k.U[t.c] == 0) continue;
            Cube c = k;
            c.L[t.a] = k.L[t.a] + 1;
            c.U[t.a] = inf_add(k.U[t.a], 1);
            c.L[t.c] = std::max<int64_t>(0, k.L[t.c] - 1);
            c.U[t.c] = inf_add(k.U[t.c], -1);
            c.L[t.b] = std::max<int64_t>(c.L[t.b], t.b == t.a ? 2 : 1);
            if (c.nonempty()) r.add(c);
        }
    }
    r.canonicalize();
    return r;
}

Constraint pre_star(const Protocol& p, const Constraint& g, Method m, const ClosureOptions& opt) {
    require_model(p, {Model::IO, Model::MFDO}, "pre_star");
    if (g.dim() != p.nq()) throw std::invalid_argument("constraint dimension mismatch");
    if (m == Method::Fixpoint) return saturate(p, g, opt);
    return witness_closure(p, g, false, opt);
}

Constraint post_star(const Protocol& p, const Constraint& g, Method m, const ClosureOptions& opt) {
    require_model(p, {Model::IO, Model::MFDO}, "post_star");
    if (g.dim() != p.nq()) throw std::invalid_argument("constraint dimension mismatch");
    if (p.model == Model::IO) return pre_star(reversed(p), g, m, opt);
    if (m == Method::Fixpoint)
        throw std::invalid_argument("post_star: MFDO supports the witness method only");
    return witness_closure(p, g, true, opt);
}

Constraint pre_star_zm(const Protocol& p, const Constraint& g, Method m, const ClosureOptions& opt) {
    require_model(p, {Model::DO}, "pre_star_zm");
    MfdoImage img = corresponding_mfdo(p);
    if (g.dim() != p.nq()) throw std::invalid_argument("constraint dimension mismatch");
    if (m == Method::Fixpoint) return saturate(img.mfdo, g, opt, &img.seen_class);
    return pre_star(img.mfdo, g, m, opt);
}

Constraint post_star_zm(const Protocol& p, const Constraint& g, const ClosureOptions& opt) {
    require_model(p, {Model::DO}, "post_star_zm");
    return post_star(corresponding_mfdo(p).mfdo, g, Method::Witness, opt);
}

Constraint initial_set(const Protocol& p, const Constraint& pred, int b) {
    if (pred.dim() != p.inputs.size()) throw std::invalid_argument("predicate dimension mismatch");
    std::vector<char> hit(p.nq(), 0);
    for (int q : p.iota) {
        if (hit[q]) throw std::invalid_argument("initial_set needs an injective input mapping");
        hit[q] = 1;
    }
    Constraint src = b == 1 ? pred : complement(pred);
    Constraint r(p.nq());
    for (const auto& c : src.cubes()) {
        Cube k(p.nq());
        for (std::size_t q = 0; q < p.nq(); ++q) k.U[q] = hit[q] ? INF : 0;
        for (std::size_t s = 0; s < p.inputs.size(); ++s) {
            k.L[p.iota[s]] = c.L[s];
            k.U[p.iota[s]] = c.U[s];
        }
        r.add(k);
    }
    r.canonicalize();
    return r;
}

Constraint consensus_set(const Protocol& p, int b) {
    Cube k(p.nq());
    for (std::size_t q = 0; q < p.nq(); ++q)
        if (p.out[q] == 1 - b) k.U[q] = 0;
    return Constraint(p.nq(), {k});
}

std::vector<char> potentially_reachable_states(const Protocol& p) {
    std::vector<char> r(p.nq(), 0), msg(p.nm(), 0);
    for (int q : p.iota) r[q] = 1;
    bool changed = true;
    while (changed) {
        changed = false;
        auto mark = [&](int q) {
            if (!r[q]) r[q] = 1, changed = true;
        };
        for (const auto& t : p.trans) {
            switch (t.kind) {
                case TKind::Pair:
                    if (r[t.a] && r[t.b]) mark(t.c), mark(t.d);
                    break;
                case TKind::Obs:
                    if (r[t.a] && r[t.b]) mark(t.c);
                    break;
                case TKind::Send:
                    if (r[t.a]) {
                        mark(t.c);
                        if (!msg[t.b]) msg[t.b] = 1, changed = true;
                    }
                    break;
                case TKind::Recv:
                    if (r[t.a] && msg[t.b]) mark(t.c);
                    break;
            }
        }
    }
    return r;
}

}  // namespace popv
