#include "popv/semantics.hpp"

#include <algorithm>
#include <cstdlib>

namespace popv {

Seen support(const Configuration& c) {
    Seen s(c.agents.dim(), 0);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = c.agents[i] > 0;
    return s;
}

std::size_t Run::aggregated_length() const {
    std::size_t n = 0;
    int last = -1;
    for (const auto& s : steps) {
        if (s.k == 0) continue;
        if (s.t != last) ++n;
        last = s.t;
    }
    return n;
}

std::vector<int> Run::flat() const {
    std::vector<int> r;
    for (const auto& s : steps)
        for (int64_t i = 0; i < s.k; ++i) r.push_back(s.t);
    return r;
}

void Run::normalize() {
    std::vector<RunStep> out;
    for (const auto& s : steps) {
        if (s.k == 0) continue;
        if (!out.empty() && out.back().t == s.t)
            out.back().k += s.k;
        else
            out.push_back(s);
    }
    steps = std::move(out);
}

bool is_effect_free(const Transition& t) {
    switch (t.kind) {
        case TKind::Pair:
            return (t.a == t.c && t.b == t.d) || (t.a == t.d && t.b == t.c);
        case TKind::Obs:
            return t.a == t.c;
        default:
            return false;
    }
}

bool enabled(const Protocol& p, const Configuration& c, int ti, const Seen* seen) {
    const Transition& t = p.trans[ti];
    const Multiset& ag = c.agents;
    switch (t.kind) {
        case TKind::Pair:
            if (t.a == t.b) return ag[t.a] >= 2;
            return ag[t.a] >= 1 && ag[t.b] >= 1;
        case TKind::Obs:
            if (ag[t.a] < 1) return false;
            if (p.model == Model::MFDO) {
                if (!seen) throw std::invalid_argument("MFDO step needs a seen set");
                return (*seen)[t.b] != 0;
            }
            return t.a == t.b ? ag[t.a] >= 2 : ag[t.b] >= 1;
        case TKind::Send:
            return ag[t.a] >= 1;
        case TKind::Recv:
            return ag[t.a] >= 1 && c.messages[t.b] >= 1;
    }
    return false;
}

void fire(const Protocol& p, Configuration& c, int ti, Seen* seen) {
    const Transition& t = p.trans[ti];
    switch (t.kind) {
        case TKind::Pair:
            c.agents[t.a]--;
            c.agents[t.b]--;
            c.agents[t.c]++;
            c.agents[t.d]++;
            break;
        case TKind::Obs:
            c.agents[t.a]--;
            c.agents[t.c]++;
            if (seen && p.model == Model::MFDO) (*seen)[t.c] = 1;
            break;
        case TKind::Send:
            c.agents[t.a]--;
            c.agents[t.c]++;
            c.messages[t.b]++;
            break;
        case TKind::Recv:
            c.agents[t.a]--;
            c.agents[t.c]++;
            c.messages[t.b]--;
            break;
    }
}

static void check_dims(const Protocol& p, const Configuration& c) {
    if (c.agents.dim() != p.nq())
        throw std::invalid_argument("configuration does not match the protocol's states");
    std::size_t nm = is_delayed(p.model) ? p.nm() : 0;
    if (c.messages.dim() != nm)
        throw std::invalid_argument("configuration does not match the protocol's messages");
}

std::vector<Successor> enabled_steps(const Protocol& p, const Configuration& c, const Seen* seen) {
    check_dims(p, c);
    if (p.model == Model::MFDO && !seen) throw std::invalid_argument("MFDO step needs a seen set");
    std::vector<Successor> out;
    for (std::size_t i = 0; i < p.trans.size(); ++i) {
        if (is_effect_free(p.trans[i])) continue;
        if (!enabled(p, c, int(i), seen)) continue;
        Configuration n = c;
        fire(p, n, int(i));
        out.push_back({int(i), std::move(n)});
    }
    return out;
}

Configuration apply_run(const Protocol& p, const Run& r, Seen* seen_out) {
    check_dims(p, r.start);
    Configuration c = r.start;
    Seen seen = support(c);
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
        const auto& s = r.steps[i];
        if (s.t < 0 || std::size_t(s.t) >= p.trans.size())
            throw StepError(i, "step " + std::to_string(i) + ": unknown transition");
        for (int64_t k = 0; k < s.k; ++k) {
            if (!enabled(p, c, s.t, &seen))
                throw StepError(i, "step " + std::to_string(i) + " (" + p.trans[s.t].name +
                                       ") is not enabled");
            fire(p, c, s.t, &seen);
        }
    }
    if (seen_out) *seen_out = seen;
    return c;
}

std::vector<Configuration> trace_run(const Protocol& p, const Run& r) {
    check_dims(p, r.start);
    std::vector<Configuration> out{r.start};
    Configuration c = r.start;
    Seen seen = support(c);
    std::size_t i = 0;
    for (int t : r.flat()) {
        if (!enabled(p, c, t, &seen))
            throw StepError(i, "transition " + p.trans[t].name + " is not enabled");
        fire(p, c, t, &seen);
        out.push_back(c);
        ++i;
    }
    return out;
}

int64_t node_budget_default() {
    if (const char* e = std::getenv("POPV_NODE_BUDGET")) {
        try {
            return std::stoll(e);
        } catch (const std::exception&) {
            throw std::invalid_argument("POPV_NODE_BUDGET is not an integer");
        }
    }
    return 10000000;
}

Configuration ReachGraph::config(std::size_t id) const {
    const int32_t* k = nodes_.get(id);
    Configuration c(nq_, nm_);
    for (std::size_t i = 0; i < nq_; ++i) c.agents[i] = k[i];
    for (std::size_t i = 0; i < nm_; ++i) c.messages[i] = k[nq_ + i];
    return c;
}

Seen ReachGraph::seen(std::size_t id) const {
    if (!seen_) return {};
    const int32_t* k = nodes_.get(id) + nq_ + nm_;
    return Seen(k, k + nq_);
}

std::vector<int32_t> ReachGraph::key_of(const Configuration& c, const Seen* s) const {
    std::vector<int32_t> key(c.agents.counts());
    key.insert(key.end(), c.messages.counts().begin(), c.messages.counts().end());
    if (seen_) {
        if (!s) throw std::invalid_argument("seen set required");
        if (seen_class_.empty()) {
            for (char f : *s) key.push_back(f ? 1 : 0);
        } else {
            // saturate each class so equivalent seen sets share a key
            int top = 0;
            for (int k : seen_class_) top = std::max(top, k + 1);
            std::vector<char> any(top, 0);
            for (std::size_t q = 0; q < nq_; ++q)
                if ((*s)[q] && seen_class_[q] >= 0) any[seen_class_[q]] = 1;
            for (std::size_t q = 0; q < nq_; ++q) key.push_back(seen_class_[q] >= 0 && any[seen_class_[q]]);
        }
    }
    return key;
}

int64_t ReachGraph::find(const Configuration& c, const Seen* s) const {
    return nodes_.find(key_of(c, s));
}

std::pair<uint32_t, bool> ReachGraph::add(const Configuration& c, const Seen* s) {
    auto r = nodes_.insert(key_of(c, s));
    if (r.second) {
        succ.emplace_back();
        parent.push_back(r.first);
        parent_t.push_back(-1);
    }
    return r;
}

Run ReachGraph::path_to(uint32_t id) const {
    std::vector<int> ts;
    while (parent[id] != id) {
        ts.push_back(parent_t[id]);
        id = parent[id];
    }
    Run r;
    r.start = config(id);
    for (auto it = ts.rbegin(); it != ts.rend(); ++it)
        if (*it >= 0) r.steps.push_back({*it, 1});
    r.normalize();
    return r;
}

static bool within_caps(const Configuration& c, const ReachOptions& opt) {
    if (opt.msg_cap >= 0 && c.messages.size() > opt.msg_cap) return false;
    if (opt.per_msg_cap >= 0)
        for (std::size_t i = 0; i < c.messages.dim(); ++i)
            if (c.messages[i] > opt.per_msg_cap) return false;
    return true;
}

static ReachGraph explore(const Protocol& p, ReachGraph g, const ReachOptions& opt) {
    const bool mf = g.has_seen();
    for (std::size_t head = 0; head < g.size(); ++head) {
        Configuration c = g.config(head);
        Seen s = g.seen(head);
        for (std::size_t ti = 0; ti < p.trans.size(); ++ti) {
            if (is_effect_free(p.trans[ti])) continue;
            if (!enabled(p, c, int(ti), mf ? &s : nullptr)) continue;
            Configuration n = c;
            Seen ns = s;
            fire(p, n, int(ti), mf ? &ns : nullptr);
            if (!within_caps(n, opt)) continue;
            auto [id, fresh] = g.add(n, mf ? &ns : nullptr);
            if (fresh) {
                g.parent[id] = uint32_t(head);
                g.parent_t[id] = int(ti);
                if (int64_t(g.size()) > opt.node_budget)
                    throw BudgetExceeded("reachability graph exceeds node budget of " +
                                         std::to_string(opt.node_budget));
            }
            g.succ[head].push_back({id, int(ti)});
        }
        if (mf && opt.reset_seen) {
            Seen rs = support(c);
            if (rs != s) {
                auto [id, fresh] = g.add(c, &rs);
                if (fresh) {
                    g.parent[id] = uint32_t(head);
                    g.parent_t[id] = -1;
                    if (int64_t(g.size()) > opt.node_budget)
                        throw BudgetExceeded("reachability graph exceeds node budget of " +
                                             std::to_string(opt.node_budget));
                }
                g.succ[head].push_back({id, -1});
            }
        }
    }
    return g;
}

ReachGraph reach_graph(const Protocol& p, const std::vector<Configuration>& roots,
                       const ReachOptions& opt) {
    std::vector<Seen> seens;
    for (const auto& r : roots) seens.push_back(support(r));
    return reach_graph_seen(p, roots, seens, opt);
}

ReachGraph reach_graph_seen(const Protocol& p, const std::vector<Configuration>& roots,
                            const std::vector<Seen>& seens, const ReachOptions& opt) {
    const bool delayed = is_delayed(p.model);
    if (delayed && opt.msg_cap < 0 && opt.per_msg_cap < 0)
        throw std::invalid_argument("delayed models need a message cap for explicit search");
    const bool mf = p.model == Model::MFDO;
    ReachGraph g(p.nq(), delayed ? p.nm() : 0, mf);
    if (mf && !opt.seen_class.empty()) {
        if (opt.seen_class.size() != p.nq()) throw std::invalid_argument("seen_class has the wrong size");
        g.set_seen_classes(opt.seen_class);
    }
    for (std::size_t i = 0; i < roots.size(); ++i) {
        check_dims(p, roots[i]);
        auto [id, fresh] = g.add(roots[i], mf ? &seens[i] : nullptr);
        if (fresh) g.roots.push_back(id);
    }
    return explore(p, std::move(g), opt);
}

std::vector<uint32_t> SccResult::bottoms() const {
    std::vector<uint32_t> r;
    for (std::size_t i = 0; i < count; ++i)
        if (is_bottom[i]) r.push_back(uint32_t(i));
    return r;
}

int consensus_value(const Protocol& p, const Configuration& c) {
    int v = -1;
    for (std::size_t q = 0; q < c.agents.dim(); ++q) {
        if (c.agents[q] == 0) continue;
        if (v == -1)
            v = p.out[q];
        else if (v != p.out[q])
            return -1;
    }
    return v;
}

std::vector<uint32_t> tarjan_scc(const std::vector<std::vector<uint32_t>>& adj, std::size_t& count) {
    const std::size_t n = adj.size();
    const uint32_t none = 0xffffffffu;
    std::vector<uint32_t> index(n, none), low(n, 0), comp(n, none);
    std::vector<uint32_t> stack;
    std::vector<std::pair<uint32_t, std::size_t>> call;
    uint32_t next = 0;
    count = 0;
    for (uint32_t root = 0; root < n; ++root) {
        if (index[root] != none) continue;
        call.push_back({root, 0});
        index[root] = low[root] = next++;
        stack.push_back(root);
        while (!call.empty()) {
            auto& [v, ei] = call.back();
            if (ei < adj[v].size()) {
                uint32_t w = adj[v][ei++];
                if (index[w] == none) {
                    index[w] = low[w] = next++;
                    stack.push_back(w);
                    call.push_back({w, 0});
                } else if (comp[w] == none) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            uint32_t vv = v;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[vv]);
            if (low[vv] == index[vv]) {
                while (true) {
                    uint32_t w = stack.back();
                    stack.pop_back();
                    comp[w] = uint32_t(count);
                    if (w == vv) break;
                }
                ++count;
            }
        }
    }
    return comp;
}

SccResult bottom_scc_analysis(const ReachGraph& g, const Protocol& p) {
    std::vector<std::vector<uint32_t>> adj(g.size());
    for (std::size_t v = 0; v < g.size(); ++v)
        for (const auto& e : g.succ[v]) adj[v].push_back(e.to);
    SccResult r;
    r.comp = tarjan_scc(adj, r.count);
    r.is_bottom.assign(r.count, 1);
    r.consensus.assign(r.count, -2);
    for (std::size_t v = 0; v < g.size(); ++v) {
        for (uint32_t w : adj[v])
            if (r.comp[w] != r.comp[v]) r.is_bottom[r.comp[v]] = 0;
        int c = consensus_value(p, g.config(v));
        int& cv = r.consensus[r.comp[v]];
        if (cv == -2)
            cv = c;
        else if (cv != c)
            cv = -1;
    }
    return r;
}

}  // namespace popv
