#include "popv/protocol.hpp"

#include <map>
#include <set>

namespace popv {

std::string model_name(Model m) {
    switch (m) {
        case Model::PP: return "PP";
        case Model::IT: return "IT";
        case Model::IO: return "IO";
        case Model::QT: return "QT";
        case Model::DT: return "DT";
        case Model::DO: return "DO";
        case Model::MFDO: return "MFDO";
    }
    return "?";
}

Model parse_model(const std::string& s) {
    static const std::map<std::string, Model> names = {
        {"PP", Model::PP}, {"IT", Model::IT}, {"IO", Model::IO},     {"QT", Model::QT},
        {"DT", Model::DT}, {"DO", Model::DO}, {"MFDO", Model::MFDO}};
    auto it = names.find(s);
    if (it == names.end()) throw std::invalid_argument("unknown model '" + s + "'");
    return it->second;
}

bool is_delayed(Model m) { return m == Model::QT || m == Model::DT || m == Model::DO; }

void Protocol::index() {
    sidx_.clear();
    midx_.clear();
    iidx_.clear();
    tidx_.clear();
    for (std::size_t i = 0; i < states.size(); ++i)
        if (!sidx_.emplace(states[i], int(i)).second)
            throw std::invalid_argument("duplicate state '" + states[i] + "'");
    for (std::size_t i = 0; i < messages.size(); ++i)
        if (!midx_.emplace(messages[i], int(i)).second)
            throw std::invalid_argument("duplicate message '" + messages[i] + "'");
    for (std::size_t i = 0; i < inputs.size(); ++i)
        if (!iidx_.emplace(inputs[i], int(i)).second)
            throw std::invalid_argument("duplicate input symbol '" + inputs[i] + "'");
    for (std::size_t i = 0; i < trans.size(); ++i)
        if (!tidx_.emplace(trans[i].name, int(i)).second)
            throw std::invalid_argument("duplicate transition name '" + trans[i].name + "'");
}

static int lookup(const std::unordered_map<std::string, int>& m, const std::string& name,
                  const char* what) {
    auto it = m.find(name);
    if (it == m.end()) throw std::invalid_argument(std::string("unknown ") + what + " '" + name + "'");
    return it->second;
}

int Protocol::state(const std::string& name) const { return lookup(sidx_, name, "state"); }
int Protocol::message(const std::string& name) const { return lookup(midx_, name, "message"); }
int Protocol::input(const std::string& name) const { return lookup(iidx_, name, "input symbol"); }
int Protocol::transition(const std::string& name) const {
    return lookup(tidx_, name, "transition");
}
std::optional<int> Protocol::find_state(const std::string& name) const {
    auto it = sidx_.find(name);
    if (it == sidx_.end()) return std::nullopt;
    return it->second;
}

void Protocol::complete_receives() {
    std::vector<char> has(nq() * nm(), 0);
    for (const auto& t : trans)
        if (t.kind == TKind::Recv) has[t.a * nm() + t.b] = 1;
    for (std::size_t q = 0; q < nq(); ++q)
        for (std::size_t m = 0; m < nm(); ++m)
            if (!has[q * nm() + m]) {
                Transition t;
                t.name = "id." + states[q] + "." + messages[m];
                t.kind = TKind::Recv;
                t.a = int(q);
                t.b = int(m);
                t.c = int(q);
                t.implicit = true;
                trans.push_back(t);
            }
    index();
}

Configuration Protocol::initial_config(const Multiset& input_counts) const {
    if (input_counts.dim() != inputs.size())
        throw std::invalid_argument("input multiset has wrong dimension");
    Configuration c = empty_config();
    for (std::size_t i = 0; i < inputs.size(); ++i) c.agents[iota[i]] += input_counts[i];
    return c;
}

Transition pair_view(const Transition& t) {
    if (t.kind == TKind::Pair) return t;
    if (t.kind != TKind::Obs) throw std::invalid_argument("pair_view of a delayed transition");
    Transition r = t;
    r.kind = TKind::Pair;
    r.a = t.b;
    r.b = t.a;
    r.c = t.b;
    r.d = t.c;
    return r;
}

ValidationReport validate_protocol(const Protocol& p) { return validate_protocol_as(p, p.model); }

ValidationReport validate_protocol_as(const Protocol& p, Model as) {
    ValidationReport rep;
    auto& v = rep.violations;
    const bool delayed = is_delayed(as);

    if (p.iota.size() != p.inputs.size()) v.push_back("input mapping is not total");
    for (std::size_t i = 0; i < p.iota.size(); ++i)
        if (p.iota[i] < 0 || std::size_t(p.iota[i]) >= p.nq())
            v.push_back("input '" + p.inputs[i] + "' maps to an unknown state");
    if (p.out.size() != p.nq()) v.push_back("output mapping is not total");
    for (int o : p.out)
        if (o != 0 && o != 1) v.push_back("output values must be 0 or 1");

    std::map<std::pair<int, int>, std::vector<int>> pairs;  // (initiator, responder) -> transitions
    std::map<int, std::vector<int>> sends;
    std::map<std::pair<int, int>, std::vector<int>> recvs;
    for (std::size_t i = 0; i < p.trans.size(); ++i) {
        const Transition& t = p.trans[i];
        bool imm = t.kind == TKind::Pair || t.kind == TKind::Obs;
        if (imm == delayed) {
            v.push_back("transition " + t.name + " is not allowed in model " + model_name(as));
            continue;
        }
        if (imm) {
            Transition pv = pair_view(t);
            if ((as == Model::IO || as == Model::MFDO) && pv.c != pv.a) {
                v.push_back("transition " + t.name + " changes the observed agent");
                continue;
            }
            pairs[{pv.a, pv.b}].push_back(int(i));
        } else if (t.kind == TKind::Send) {
            sends[t.a].push_back(int(i));
        } else {
            recvs[{t.a, t.b}].push_back(int(i));
            if (t.implicit)
                rep.notes.push_back("identity receive assumed for (" + p.states[t.a] + ", " +
                                    p.messages[t.b] + ")");
        }
    }

    if (!delayed) {
        if (!p.nondet)
            for (const auto& [k, ts] : pairs)
                if (ts.size() > 1)
                    v.push_back("pair (" + p.states[k.first] + ", " + p.states[k.second] +
                                ") has several transitions");
        if (as == Model::IT) {
            // First output component may depend only on the initiator; unwritten
            // pairs are identities, so they pin the component to the initiator.
            for (std::size_t q1 = 0; q1 < p.nq(); ++q1) {
                std::set<int> firsts;
                for (std::size_t q2 = 0; q2 < p.nq(); ++q2) {
                    auto it = pairs.find({int(q1), int(q2)});
                    if (it == pairs.end())
                        firsts.insert(int(q1));
                    else
                        for (int ti : it->second) firsts.insert(pair_view(p.trans[ti]).c);
                }
                if (firsts.size() > 1)
                    v.push_back("initiator " + p.states[q1] +
                                " changes depending on the responder (not IT)");
            }
        }
        return rep;
    }

    if (!p.nondet) {
        for (const auto& [q, ts] : sends)
            if (ts.size() > 1) v.push_back("state " + p.states[q] + " has several sends");
        for (const auto& [k, ts] : recvs)
            if (ts.size() > 1)
                v.push_back("state " + p.states[k.first] + " has several receives of " +
                            p.messages[k.second]);
    }
    if (as == Model::DT || as == Model::DO) {
        for (std::size_t q = 0; q < p.nq(); ++q)
            for (std::size_t m = 0; m < p.nm(); ++m)
                if (!recvs.count({int(q), int(m)}))
                    v.push_back("receive of " + p.messages[m] + " in " + p.states[q] +
                                " is undefined");
    }
    if (as == Model::DO) {
        for (std::size_t q = 0; q < p.nq(); ++q) {
            auto it = sends.find(int(q));
            if (it == sends.end()) {
                v.push_back("state " + p.states[q] + " has no send");
                continue;
            }
            for (int ti : it->second)
                if (p.trans[ti].c != p.trans[ti].a)
                    v.push_back("sender state changes in " + p.trans[ti].name);
        }
    }
    return rep;
}

MfdoImage corresponding_mfdo(const Protocol& p) {
    if (p.model != Model::DO) throw std::invalid_argument("corresponding_mfdo needs a DO protocol");
    MfdoImage img;
    Protocol& m = img.mfdo;
    m.model = Model::MFDO;
    m.states = p.states;
    m.inputs = p.inputs;
    m.iota = p.iota;
    m.out = p.out;
    std::vector<std::vector<int>> senders(p.nm());
    for (std::size_t i = 0; i < p.trans.size(); ++i)
        if (p.trans[i].kind == TKind::Send) senders[p.trans[i].b].push_back(int(i));
    for (std::size_t i = 0; i < p.trans.size(); ++i) {
        const Transition& r = p.trans[i];
        if (r.kind != TKind::Recv || r.a == r.c) continue;
        for (int si : senders[r.b]) {
            Transition t;
            t.kind = TKind::Obs;
            t.a = r.a;
            t.b = p.trans[si].a;
            t.c = r.c;
            t.name = r.name + "/" + p.trans[si].name;
            m.trans.push_back(t);
            img.recv_of.push_back(int(i));
            img.send_of.push_back(si);
        }
    }
    m.index();
    std::vector<std::set<int>> sends(p.nq());
    for (const auto& t : p.trans)
        if (t.kind == TKind::Send) sends[t.a].insert(t.b);
    for (std::size_t q = 0; q < p.nq(); ++q) {
        if (sends[q].empty()) img.seen_class.push_back(-1);
        else if (sends[q].size() == 1) img.seen_class.push_back(*sends[q].begin());
        else img.seen_class.push_back(int(p.nm() + q));
    }
    return img;
}

Protocol reversed(const Protocol& p) {
    if (p.model != Model::IO && p.model != Model::MFDO)
        throw std::invalid_argument("reversed needs an IO or MFDO protocol");
    Protocol r = p;
    for (auto& t : r.trans) {
        if (t.kind != TKind::Obs) throw std::invalid_argument("reversed: non-observation transition");
        std::swap(t.a, t.c);
    }
    r.index();
    return r;
}

}  // namespace popv
