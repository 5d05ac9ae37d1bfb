#include "popv/histories.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

namespace popv {

Multiset History::config(std::size_t i, std::size_t nq) const {
    Multiset m(nq);
    for (const auto& t : traj) m[t[i]]++;
    return m;
}

Seen History::seen_upto(std::size_t i, std::size_t nq) const {
    Seen s(nq, 0);
    for (const auto& t : traj)
        for (std::size_t j = 0; j <= i; ++j) s[t[j]] = 1;
    return s;
}

bool History::well_structured() const {
    const std::size_t n = length();
    for (const auto& t : traj)
        if (t.size() != n) return false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        int from = -1, to = -1;
        for (const auto& t : traj) {
            if (t[i] == t[i + 1]) continue;
            if (from == -1) {
                from = t[i];
                to = t[i + 1];
            } else if (from != t[i] || to != t[i + 1]) {
                return false;
            }
        }
    }
    return true;
}

std::string History::dump(const Protocol& p) const {
    std::map<Trajectory, int> groups;
    for (const auto& t : traj) groups[t]++;
    std::ostringstream os;
    for (const auto& [t, k] : groups) {
        for (std::size_t i = 0; i < t.size(); ++i) os << (i ? " " : "") << p.states[t[i]];
        os << " x" << k << "\n";
    }
    return os.str();
}

static void require_immediate_obs(const Protocol& p) {
    if (p.model != Model::IO && p.model != Model::MFDO)
        throw std::invalid_argument("histories need an IO or MFDO protocol");
}

// Per-position data shared by compatibility and realization.
struct Column {
    int from = -1, to = -1, movers = 0;
};

static std::vector<Column> columns(const History& h) {
    std::vector<Column> cols(h.length() > 0 ? h.length() - 1 : 0);
    for (std::size_t i = 0; i < cols.size(); ++i)
        for (const auto& t : h.traj)
            if (t[i] != t[i + 1]) {
                cols[i].from = t[i];
                cols[i].to = t[i + 1];
                cols[i].movers++;
            }
    return cols;
}

// First transition realizing column i, or -1.
static int column_transition(const Protocol& p, const History& h, std::size_t i, int from, int to,
                             const Seen* seen) {
    for (std::size_t ti = 0; ti < p.trans.size(); ++ti) {
        const Transition& t = p.trans[ti];
        if (t.kind != TKind::Obs || t.a != from || t.c != to) continue;
        if (p.model == Model::MFDO) {
            if ((*seen)[t.b]) return int(ti);
        } else {
            for (const auto& tr : h.traj)
                if (tr[i] == t.b && tr[i + 1] == t.b) return int(ti);
        }
    }
    return -1;
}

Compatibility is_compatible(const Protocol& p, const History& h) {
    require_immediate_obs(p);
    if (!h.well_structured()) throw std::invalid_argument("history is not well-structured");
    Compatibility res;
    Seen seen(p.nq(), 0);
    auto cols = columns(h);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        for (const auto& t : h.traj) seen[t[i]] = 1;
        if (cols[i].movers == 0) continue;
        if (column_transition(p, h, i, cols[i].from, cols[i].to, &seen) >= 0) continue;
        res.ok = false;
        res.position = int(i);
        for (std::size_t j = 0; j < h.traj.size(); ++j)
            if (h.traj[j][i] != h.traj[j][i + 1]) {
                res.trajectory = int(j);
                break;
            }
        res.reason = "no enabling transition for step " + p.states[cols[i].from] + " -> " +
                     p.states[cols[i].to] + " at position " + std::to_string(i + 1);
        return res;
    }
    return res;
}

Run realize(const Protocol& p, const History& h) {
    require_immediate_obs(p);
    if (!h.well_structured()) throw std::invalid_argument("history is not well-structured");
    Run r;
    if (h.traj.empty()) {
        r.start = Configuration(Multiset(p.nq()), Multiset(0));
        return r;
    }
    if (h.length() == 0) throw std::invalid_argument("empty history");
    r.start = Configuration(h.config(0, p.nq()), Multiset(0));
    Seen seen(p.nq(), 0);
    auto cols = columns(h);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        for (const auto& t : h.traj) seen[t[i]] = 1;
        if (cols[i].movers == 0) continue;
        int ti = column_transition(p, h, i, cols[i].from, cols[i].to, &seen);
        if (ti < 0)
            throw std::invalid_argument("history is not compatible at position " +
                                        std::to_string(i + 1));
        r.steps.push_back({ti, cols[i].movers});
    }
    r.normalize();
    return r;
}

struct Deanon {
    History h;
    std::vector<int> col_t;  // transition of each column
};

static Deanon deanonymize_cols(const Protocol& p, const Run& r) {
    require_immediate_obs(p);
    apply_run(p, r);  // validates
    Deanon d;
    auto& traj = d.h.traj;
    for (std::size_t q = 0; q < p.nq(); ++q)
        for (int32_t j = 0; j < r.start.agents[q]; ++j) traj.push_back({int(q)});
    for (const auto& s : r.steps) {
        const Transition& t = p.trans[s.t];
        if (s.k == 0 || is_effect_free(t)) continue;
        if (d.col_t.size() + 1 >= kHistoryCap)
            throw std::length_error("history exceeds the length cap");
        std::vector<int> cand;
        for (std::size_t j = 0; j < traj.size(); ++j)
            if (traj[j].back() == t.a) cand.push_back(int(j));
        std::stable_sort(cand.begin(), cand.end(),
                         [&](int x, int y) { return traj[x] < traj[y]; });
        std::vector<char> mover(traj.size(), 0);
        for (int64_t k = 0; k < s.k; ++k) mover[cand.at(std::size_t(k))] = 1;
        for (std::size_t j = 0; j < traj.size(); ++j)
            traj[j].push_back(mover[j] ? t.c : traj[j].back());
        d.col_t.push_back(s.t);
    }
    return d;
}

History deanonymize(const Protocol& p, const Run& r) { return deanonymize_cols(p, r).h; }

static std::vector<Trajectory> bunch_replacement(const History& h, const std::vector<int>& bunch,
                                                 std::size_t nq) {
    const std::size_t n = h.length();
    std::vector<int> first(nq, -1), last(nq, -1), first_tr(nq, -1), last_tr(nq, -1);
    for (std::size_t i = 0; i < n; ++i)
        for (int b : bunch) {
            int q = h.traj[b][i];
            if (first[q] == -1) {
                first[q] = int(i);
                first_tr[q] = b;
            }
        }
    for (std::size_t ii = n; ii-- > 0;)
        for (int b : bunch) {
            int q = h.traj[b][ii];
            if (last[q] == -1) {
                last[q] = int(ii);
                last_tr[q] = b;
            }
        }
    std::vector<Trajectory> out;
    for (std::size_t q = 0; q < nq; ++q) {
        if (first[q] == -1) continue;
        Trajectory t(n);
        const auto& pre = h.traj[first_tr[q]];
        const auto& suf = h.traj[last_tr[q]];
        for (int i = 0; i < int(n); ++i) {
            if (i <= first[q])
                t[i] = pre[i];
            else if (i <= last[q])
                t[i] = int(q);
            else
                t[i] = suf[i];
        }
        out.push_back(std::move(t));
    }
    return out;
}

History prune_bunch(const Protocol& p, const History& h, const std::vector<int>& bunch) {
    if (bunch.empty()) throw std::invalid_argument("empty bunch");
    std::vector<char> in(h.traj.size(), 0);
    for (int b : bunch) {
        if (b < 0 || std::size_t(b) >= h.traj.size() || in[b])
            throw std::invalid_argument("bunch is not a sub-multiset of the history");
        in[b] = 1;
    }
    const auto& t0 = h.traj[bunch[0]];
    for (int b : bunch)
        if (h.traj[b].front() != t0.front() || h.traj[b].back() != t0.back())
            throw std::invalid_argument("bunch trajectories differ in endpoints");
    if (bunch.size() <= p.nq()) return h;
    // Lowest-index trajectory first for the "first/last visitor" choices.
    std::vector<int> sorted = bunch;
    std::sort(sorted.begin(), sorted.end());
    History out;
    for (std::size_t j = 0; j < h.traj.size(); ++j)
        if (!in[j]) out.traj.push_back(h.traj[j]);
    for (auto& t : bunch_replacement(h, sorted, p.nq())) out.traj.push_back(std::move(t));
    return out;
}

// Picks trajectories until their initial (or final) states cover l. Entries already
// set in `chosen` count first.
static std::vector<char> greedy_cover(const History& h, const Multiset& l, bool by_final,
                                      std::vector<char> chosen = {}) {
    if (chosen.empty()) chosen.assign(h.traj.size(), 0);
    Multiset need = l;
    auto end_of = [&](std::size_t j) { return by_final ? h.traj[j].back() : h.traj[j].front(); };
    for (std::size_t j = 0; j < h.traj.size(); ++j)
        if (chosen[j] && need[end_of(j)] > 0) need[end_of(j)]--;
    for (std::size_t j = 0; j < h.traj.size(); ++j) {
        int s = end_of(j);
        if (!chosen[j] && need[s] > 0) {
            need[s]--;
            chosen[j] = 1;
        }
    }
    if (need.size() != 0)
        throw std::invalid_argument(by_final ? "final configuration does not cover L_final"
                                             : "start configuration does not cover L_init");
    return chosen;
}

History prune_history(const Protocol& p, const History& h, const Multiset& l_init,
                      const Multiset& l_final) {
    if (h.length() == 0) return h;
    auto a = greedy_cover(h, l_final, true);
    auto b = greedy_cover(h, l_init, false);
    History out;
    std::map<std::pair<int, int>, std::vector<int>> groups;
    for (std::size_t j = 0; j < h.traj.size(); ++j) {
        if (a[j] || b[j])
            out.traj.push_back(h.traj[j]);
        else
            groups[{h.traj[j].front(), h.traj[j].back()}].push_back(int(j));
    }
    for (const auto& [key, idx] : groups) {
        if (idx.size() <= p.nq()) {
            for (int j : idx) out.traj.push_back(h.traj[j]);
        } else {
            for (auto& t : bunch_replacement(h, idx, p.nq())) out.traj.push_back(std::move(t));
        }
    }
    return out;
}

Run prune(const Protocol& p, const Run& r, const Multiset& l_init, const Multiset& l_final) {
    History h = deanonymize(p, r);
    return realize(p, prune_history(p, h, l_init, l_final));
}

Run prune_mfdo_linear(const Protocol& p, const Run& r, const Multiset& l_init,
                      const Multiset& l_final) {
    if (p.model != Model::MFDO) throw std::invalid_argument("prune_mfdo_linear needs MFDO");
    History h = deanonymize(p, r);
    // First visitor of every state, then top up the covers.
    std::vector<char> keep(h.traj.size(), 0), done(p.nq(), 0);
    for (std::size_t i = 0; i < h.length(); ++i)
        for (std::size_t j = 0; j < h.traj.size(); ++j) {
            int q = h.traj[j][i];
            if (!done[q]) {
                done[q] = 1;
                keep[j] = 1;
            }
        }
    keep = greedy_cover(h, l_final, true, keep);
    keep = greedy_cover(h, l_init, false, keep);
    History out;
    for (std::size_t j = 0; j < h.traj.size(); ++j)
        if (keep[j]) out.traj.push_back(h.traj[j]);
    return realize(p, out);
}

static void require_zero_message(const Configuration& c, const char* what) {
    if (!c.zero_message()) throw std::invalid_argument(std::string(what) + " is not zero-message");
}

DoProjection project_do_run(const Protocol& p, const Run& r) {
    if (p.model != Model::DO) throw std::invalid_argument("project_do_run needs a DO protocol");
    require_zero_message(r.start, "start configuration");
    Configuration end = apply_run(p, r);
    require_zero_message(end, "final configuration");
    DoProjection out{corresponding_mfdo(p), {}};
    std::map<std::pair<int, int>, int> idx;
    for (std::size_t i = 0; i < out.image.recv_of.size(); ++i)
        idx[{out.image.recv_of[i], out.image.send_of[i]}] = int(i);
    std::vector<int> sender_of_state(p.nq(), -1);
    for (std::size_t i = 0; i < p.trans.size(); ++i)
        if (p.trans[i].kind == TKind::Send && sender_of_state[p.trans[i].a] == -1)
            sender_of_state[p.trans[i].a] = int(i);

    std::vector<int64_t> first_visit(p.nq(), -1);
    for (std::size_t q = 0; q < p.nq(); ++q)
        if (r.start.agents[q] > 0) first_visit[q] = 0;
    out.mfdo_run.start = Configuration(r.start.agents, Multiset(0));
    int64_t time = 0;
    for (int ti : r.flat()) {
        const Transition& t = p.trans[ti];
        ++time;
        if (t.kind != TKind::Recv || t.a == t.c) continue;
        int best = -1;
        for (std::size_t o = 0; o < p.nq(); ++o) {
            int s = sender_of_state[o];
            if (s < 0 || p.trans[s].b != t.b || first_visit[o] < 0) continue;
            if (best == -1 || first_visit[o] < first_visit[best]) best = int(o);
        }
        if (best == -1) throw std::logic_error("receive without a visited sender");
        out.mfdo_run.steps.push_back({idx.at({ti, sender_of_state[best]}), 1});
        if (first_visit[t.c] < 0) first_visit[t.c] = time;
    }
    out.mfdo_run.normalize();
    return out;
}

Run lift_mfdo_run(const Protocol& p, const MfdoImage& img, const Run& mr) {
    const Protocol& m = img.mfdo;
    // Flat position (number of single steps) after which each state is first populated,
    // rounded up to the end of the block in which it happens.
    std::vector<int64_t> first_pop(p.nq(), -1);
    for (std::size_t q = 0; q < p.nq(); ++q)
        if (mr.start.agents[q] > 0) first_pop[q] = 0;
    std::vector<int64_t> block_end;
    int64_t pos = 0;
    for (const auto& s : mr.steps) {
        pos += s.k;
        block_end.push_back(pos);
        int tgt = m.trans[s.t].c;
        if (first_pop[tgt] < 0) first_pop[tgt] = pos;
    }
    std::vector<int64_t> count(p.nm(), 0);
    for (const auto& s : mr.steps) count[p.trans[img.recv_of[s.t]].b] += s.k;
    // insertions[pos] = list of (send transition, multiplicity)
    std::map<int64_t, std::vector<RunStep>> ins;
    for (std::size_t msg = 0; msg < p.nm(); ++msg) {
        if (count[msg] == 0) continue;
        int best = -1;
        for (std::size_t i = 0; i < p.trans.size(); ++i) {
            const Transition& t = p.trans[i];
            if (t.kind != TKind::Send || t.b != int(msg) || first_pop[t.a] < 0) continue;
            if (best == -1 || first_pop[t.a] < first_pop[p.trans[best].a]) best = int(i);
        }
        if (best == -1) throw std::logic_error("message without a populated sender");
        ins[first_pop[p.trans[best].a]].push_back({best, count[msg]});
    }
    Run out;
    out.start = Configuration(mr.start.agents, Multiset(p.nm()));
    auto emit = [&](int64_t at) {
        auto it = ins.find(at);
        if (it == ins.end()) return;
        for (const auto& s : it->second) out.steps.push_back(s);
    };
    emit(0);
    for (std::size_t i = 0; i < mr.steps.size(); ++i) {
        out.steps.push_back({img.recv_of[mr.steps[i].t], mr.steps[i].k});
        emit(block_end[i]);
    }
    out.normalize();
    return out;
}

Run prune_do(const Protocol& p, const Run& r, const Multiset& l_init, const Multiset& l_final) {
    DoProjection proj = project_do_run(p, r);
    Run pr = prune(proj.image.mfdo, proj.mfdo_run, l_init, l_final);
    return lift_mfdo_run(p, proj.image, pr);
}

static Run shorten_mfdo(const Protocol& p, const Run& r) {
    Deanon d = deanonymize_cols(p, r);
    const History& h = d.h;
    Run out;
    out.start = r.start;
    const std::size_t n = h.length();
    if (n <= 1) return out;
    std::vector<Seen> seen(n);
    Seen cur(p.nq(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& t : h.traj) cur[t[i]] = 1;
        seen[i] = cur;
    }
    auto movers = [&](std::size_t col) {
        int64_t k = 0;
        for (const auto& t : h.traj) k += t[col] != t[col + 1];
        return k;
    };
    auto segment = [&](std::size_t a, std::size_t b) {
        if (a >= b) return;
        std::map<std::pair<int, int>, std::vector<int>> bunches;
        for (std::size_t j = 0; j < h.traj.size(); ++j)
            if (h.traj[j][a] != h.traj[j][b]) bunches[{h.traj[j][a], h.traj[j][b]}].push_back(int(j));
        for (const auto& [key, idx] : bunches) {
            const auto& tau = h.traj[idx.front()];
            std::size_t i = a;
            while (i < b) {
                std::size_t j = b;
                while (tau[j] != tau[i]) --j;
                if (j == b) break;
                out.steps.push_back({d.col_t[j], int64_t(idx.size())});
                i = j + 1;
            }
        }
    };
    std::size_t start = 0;
    for (std::size_t col = 0; col + 1 < n; ++col) {
        if (seen[col + 1] == seen[col]) continue;
        segment(start, col);
        out.steps.push_back({d.col_t[col], movers(col)});
        start = col + 1;
    }
    segment(start, n - 1);
    out.normalize();
    return out;
}

Run shorten(const Protocol& p, const Run& r) {
    if (p.model == Model::MFDO) return shorten_mfdo(p, r);
    if (p.model == Model::DO) {
        DoProjection proj = project_do_run(p, r);
        return lift_mfdo_run(p, proj.image, shorten_mfdo(proj.image.mfdo, proj.mfdo_run));
    }
    throw std::invalid_argument("shorten needs an MFDO or DO protocol");
}

}  // namespace popv
