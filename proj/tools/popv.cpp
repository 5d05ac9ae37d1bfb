// popv: command-line front end.
//
// Exit codes: 0 ok / correct / valid, 1 invalid / incorrect / unreachable,
// 2 parse error, 3 inconclusive (budget, cube cap, bounded verdict), 4 other errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "popv/counting.hpp"
#include "popv/formats.hpp"
#include "popv/gen.hpp"
#include "popv/histories.hpp"
#include "popv/semantics.hpp"
#include "popv/stochastic.hpp"
#include "popv/verify.hpp"

using namespace popv;
using json = nlohmann::ordered_json;

namespace {

// Ordered key=value records. Text mode prints one line per value (arrays repeat
// the key); JSON mode prints the same records as one object.
struct Report {
    json obj = json::object();

    template <class T>
    void set(const std::string& k, const T& v) { obj[k] = v; }
    void push(const std::string& k, const std::string& v) {
        if (!obj.contains(k)) obj[k] = json::array();
        obj[k].push_back(v);
    }
    // Appends `key=value` lines produced by a library printer.
    void absorb(const std::string& kv) {
        std::istringstream is(kv);
        std::string line;
        while (std::getline(is, line)) {
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string k = line.substr(0, eq), v = line.substr(eq + 1);
            char* end = nullptr;
            long long n = std::strtoll(v.c_str(), &end, 10);
            if (!v.empty() && *end == 0) {
                obj[k] = n;
                continue;
            }
            double d = std::strtod(v.c_str(), &end);
            if (!v.empty() && *end == 0)
                obj[k] = d;
            else
                obj[k] = v;
        }
    }
    void print(bool as_json) const {
        if (as_json) {
            std::cout << obj.dump(2) << "\n";
            return;
        }
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (it->is_array()) {
                for (const auto& e : *it) std::cout << it.key() << "=" << scalar(e) << "\n";
            } else {
                std::cout << it.key() << "=" << scalar(*it) << "\n";
            }
        }
    }
    static std::string scalar(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }
};

Constraint load_constraint(const std::vector<std::string>& names, const std::string& arg) {
    // Inline shorthands: 0 (empty set), 1 (everything).
    if (arg == "0") return Constraint::empty(names.size());
    if (arg == "1") return Constraint::top(names.size());
    return parse_constraint(names, read_file(arg));
}

int64_t agents_of(const Run& r) { return r.start.agents.size(); }

CheckMode parse_mode(const std::string& s) {
    if (s == "symbolic") return CheckMode::Symbolic;
    if (s == "witness") return CheckMode::Witness;
    if (s == "kernel") return CheckMode::Kernel;
    throw std::invalid_argument("unknown mode '" + s + "'");
}

void verdict_fields(const Protocol& p, const Verdict& v, Report& r) {
    r.set("verdict", v.correct ? "correct" : "incorrect");
    r.set("conclusive", v.conclusive);
    r.set("method", v.method);
    r.set("bound_used", v.bound_used);
    r.set("worst_case_bound", v.worst_case_bound);
    r.set("largest_checked", v.largest_checked);
    if (v.input) r.set("witness_input", print_multiset(p.inputs, *v.input));
    if (v.expected >= 0) r.set("expected", v.expected);
    for (const auto& c : v.offending) r.push("offending", print_config(p, c));
    if (!v.detail.empty()) r.set("detail", v.detail);
}

int verdict_exit(const Verdict& v) {
    if (!v.correct) return 1;
    return v.conclusive ? 0 : 3;
}

void write_witnesses(const Protocol& p, const Verdict& v, const std::string& dir, Report& r) {
    if (dir.empty() || v.runs.empty()) return;
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < v.runs.size(); ++i) {
        std::string f = (std::filesystem::path(dir) / ("witness_" + std::to_string(i) + ".run")).string();
        write_file(f, print_run(p, v.runs[i]));
        r.push("witness_file", f);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Population protocol verification toolkit"};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "Structured output");

    // validate
    std::string file, file2, out, method = "fixpoint", pred, mode = "symbolic", config, config2, witness_dir;
    int64_t max_size = -1, expect = -1, msg_cap = -1;
    auto* c_validate = app.add_subcommand("validate", "Check a protocol file against its model");
    c_validate->add_option("file", file)->required();

    auto* c_pre = app.add_subcommand("prestar", "Predecessor closure of a constraint");
    auto* c_post = app.add_subcommand("poststar", "Successor closure of a constraint");
    for (auto* c : {c_pre, c_post}) {
        c->add_option("file", file)->required();
        c->add_option("constraint", file2, "Constraint file over states")->required();
        c->add_option("--method", method, "fixpoint | witness");
        c->add_option("-o", out, "Output constraint file");
    }

    auto* c_check = app.add_subcommand("check", "Well-specification against a predicate");
    c_check->add_option("file", file)->required();
    c_check->add_option("--pred", pred, "Constraint file over inputs, or 0 / 1")->required();
    c_check->add_option("--mode", mode, "symbolic | witness | kernel");
    c_check->add_option("--max-size", max_size);
    c_check->add_option("--witness-dir", witness_dir);

    auto* c_inst = app.add_subcommand("check-instance", "Bottom-SCC check of one initial configuration");
    c_inst->add_option("file", file)->required();
    std::string input;
    auto* o_cfg = c_inst->add_option("--config", config, "Initial configuration over states");
    auto* o_in = c_inst->add_option("--input", input, "Input multiset over input symbols");
    o_cfg->excludes(o_in);
    c_inst->add_option("--expect", expect)->required()->check(CLI::Range(0, 1));
    c_inst->add_option("--msg-cap", msg_cap);
    c_inst->add_option("--witness-dir", witness_dir);

    std::string cover;
    bool linear = false;
    auto* c_prune = app.add_subcommand("prune", "Shrink a covering run");
    c_prune->add_option("file", file)->required();
    c_prune->add_option("run", file2)->required();
    c_prune->add_option("--keep", config, "Multiset of initial states to keep (default empty)");
    c_prune->add_option("--cover", cover, "Multiset of final states to cover")->required();
    c_prune->add_flag("--linear", linear, "MFDO linear variant");
    c_prune->add_option("-o", out);

    auto* c_shorten = app.add_subcommand("shorten", "Shorten an MFDO or DO run");
    c_shorten->add_option("file", file)->required();
    c_shorten->add_option("run", file2)->required();
    c_shorten->add_option("-o", out);

    auto* c_gen = app.add_subcommand("gen", "Reduction generators");
    c_gen->require_subcommand(1);
    bool determinize = false;
    auto* g_tm = c_gen->add_subcommand("tm", "Bounded-tape Turing machine to IO");
    auto* g_circ = c_gen->add_subcommand("circuit", "Exists-forall circuit to DO");
    auto* g_vass = c_gen->add_subcommand("vass", "VASS query to DT");
    g_vass->add_flag("--determinize", determinize);
    for (auto* g : {g_tm, g_circ, g_vass}) {
        g->add_option("file", file)->required();
        g->add_option("-o", out);
    }

    double p_send = 0.5;
    int64_t runs = 1, steps = 1000, window = 0;
    uint64_t seed = 0, run_index = 0;
    std::string example, sched = "auto", csv;
    auto* c_mc = app.add_subcommand("mc", "Monte-Carlo simulation");
    c_mc->add_option("file", file);
    c_mc->add_option("--example", example, "more-than-half | qt");
    c_mc->add_option("--config", config);
    c_mc->add_option("--scheduler", sched, "auto | pair | send-receive");
    c_mc->add_option("--p", p_send);
    c_mc->add_option("--runs", runs);
    c_mc->add_option("--steps", steps);
    c_mc->add_option("--window", window);
    c_mc->add_option("--seed", seed);
    c_mc->add_option("--run-index", run_index, "Single run: PRNG stream");
    c_mc->add_option("--csv", csv, "Single run: message-count series");

    auto* c_reach = app.add_subcommand("reach", "Explicit reachability between configurations");
    c_reach->add_option("file", file)->required();
    c_reach->add_option("--from", config)->required();
    c_reach->add_option("--to", config2)->required();
    c_reach->add_option("--msg-cap", msg_cap);
    c_reach->add_option("-o", out, "Run file of the witness path");

    auto* c_step = app.add_subcommand("step", "List one-step successors");
    c_step->add_option("file", file)->required();
    c_step->add_option("--config", config)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 4;
    }

    Report rep;
    int code = 0;
    try {
        if (c_validate->parsed()) {
            Protocol p = load_protocol(file);
            ValidationReport v = validate_protocol(p);
            rep.set("model", model_name(p.model));
            rep.set("states", int64_t(p.nq()));
            rep.set("transitions", int64_t(p.trans.size()));
            rep.set("valid", v.ok());
            for (const auto& s : v.violations) rep.push("violation", s);
            for (const auto& s : v.notes) rep.push("note", s);
            code = v.ok() ? 0 : 1;
        } else if (c_pre->parsed() || c_post->parsed()) {
            const bool pre = c_pre->parsed();
            Protocol p = load_protocol(file);
            Constraint g = load_constraint(p.states, file2);
            Method m;
            if (method == "fixpoint")
                m = Method::Fixpoint;
            else if (method == "witness")
                m = Method::Witness;
            else
                throw std::invalid_argument("unknown method '" + method + "'");
            Constraint r;
            if (p.model == Model::DO)
                r = pre ? pre_star_zm(p, g, m) : post_star_zm(p, g);
            else
                r = pre ? pre_star(p, g, m) : post_star(p, g, m);
            const int64_t q3 = int64_t(p.nq() * p.nq() * p.nq());
            rep.set("cubes_in", int64_t(g.cubes().size()));
            rep.set("lnorm_in", g.lnorm());
            rep.set("unorm_in", g.unorm());
            rep.set("cubes_out", int64_t(r.cubes().size()));
            rep.set("lnorm_out", r.lnorm());
            rep.set("unorm_out", r.unorm());
            const bool ok = r.lnorm() <= g.lnorm() + q3 && r.unorm() <= g.unorm();
            rep.set("bound", "lnorm_out <= lnorm_in + " + std::to_string(q3) + ", unorm_out <= unorm_in");
            rep.set("bound_ok", ok);
            std::string text = print_constraint(p.states, r);
            if (out.empty()) {
                std::istringstream is(text);
                std::string line;
                while (std::getline(is, line)) { auto v = line.substr(line.find(':') + 1); rep.push("cube", v.empty() ? v : v.substr(1)); }
            } else {
                write_file(out, text);
                rep.set("output", out);
            }
        } else if (c_check->parsed()) {
            Protocol p = load_protocol(file);
            CheckOptions o;
            o.mode = parse_mode(mode);
            o.max_size = max_size;
            Verdict v = check_correct(p, load_constraint(p.inputs, pred), o);
            verdict_fields(p, v, rep);
            write_witnesses(p, v, witness_dir, rep);
            code = verdict_exit(v);
        } else if (c_inst->parsed()) {
            Protocol p = load_protocol(file);
            CheckOptions o;
            o.msg_cap = msg_cap;
            if (config.empty() == input.empty()) throw std::invalid_argument("give one of --config, --input");
            Configuration c0 =
                input.empty() ? parse_config(p, config) : p.initial_config(parse_multiset(p.inputs, input));
            Verdict v = check_instance(p, c0, int(expect), o);
            verdict_fields(p, v, rep);
            write_witnesses(p, v, witness_dir, rep);
            code = verdict_exit(v);
        } else if (c_prune->parsed()) {
            Protocol p = load_protocol(file);
            Run r = parse_run(p, read_file(file2));
            Multiset li = config.empty() ? Multiset(p.nq()) : parse_multiset(p.states, config);
            Multiset lf = parse_multiset(p.states, cover);
            Run pr;
            int64_t bound;
            const int64_t nq = int64_t(p.nq());
            if (linear) {
                if (p.model != Model::MFDO) throw std::invalid_argument("--linear needs an MFDO protocol");
                pr = prune_mfdo_linear(p, r, li, lf);
                bound = li.size() + lf.size() + nq;
            } else {
                pr = p.model == Model::DO ? prune_do(p, r, li, lf) : prune(p, r, li, lf);
                bound = li.size() + lf.size() + nq * nq * nq;
            }
            rep.set("agents_before", agents_of(r));
            rep.set("agents_after", agents_of(pr));
            rep.set("bound", bound);
            rep.set("bound_ok", agents_of(pr) <= bound);
            rep.set("length_after", int64_t(pr.aggregated_length()));
            if (out.empty())
                rep.set("run", print_run(p, pr));
            else {
                write_file(out, print_run(p, pr));
                rep.set("output", out);
            }
        } else if (c_shorten->parsed()) {
            Protocol p = load_protocol(file);
            Run r = parse_run(p, read_file(file2));
            Run s = shorten(p, r);
            const int64_t nq = int64_t(p.nq());
            const int64_t bound = nq * nq * nq * nq + (p.model == Model::DO ? nq : 0);
            rep.set("length_before", int64_t(r.aggregated_length()));
            rep.set("length_after", int64_t(s.aggregated_length()));
            rep.set("bound", bound);
            rep.set("bound_ok", int64_t(s.aggregated_length()) <= bound);
            if (out.empty())
                rep.set("run", print_run(p, s));
            else {
                write_file(out, print_run(p, s));
                rep.set("output", out);
            }
        } else if (c_gen->parsed()) {
            Protocol p;
            std::string init;
            if (g_tm->parsed()) {
                TmProtocol t = tm_to_io(parse_tm(read_file(file)));
                p = t.p;
                init = print_multiset(p.inputs, t.d0);
            } else if (g_circ->parsed()) {
                p = circuit_to_do(parse_circuit(read_file(file)));
            } else {
                Vass v = parse_vass(read_file(file));
                if (!v.query) throw std::invalid_argument("VASS file has no query line");
                Pm1Result pm = vass_to_pm1(v, *v.query);
                DtResult d = pm1_to_dt(pm.vass, pm.r0, pm.r, determinize);
                p = d.p;
                init = print_config(p, d.c0);
            }
            std::string text = print_protocol(p);
            if (!init.empty()) text = "# initial: " + init + "\n" + text;
            if (out.empty() && !as_json) {
                std::cout << text;
                return 0;
            }
            rep.set("model", model_name(p.model));
            rep.set("states", int64_t(p.nq()));
            rep.set("transitions", int64_t(p.trans.size()));
            if (!init.empty()) rep.set("initial", init);
            if (out.empty())
                rep.set("protocol", text);
            else {
                write_file(out, text);
                rep.set("output", out);
            }
        } else if (c_mc->parsed()) {
            Protocol p;
            Configuration c0;
            if (!example.empty()) {
                Example e;
                if (example == "more-than-half")
                    e = more_than_half();
                else if (example == "qt")
                    e = qt_send_receive();
                else
                    throw std::invalid_argument("unknown example '" + example + "'");
                p = e.p;
                c0 = e.c0;
            } else {
                if (file.empty()) throw std::invalid_argument("mc needs a protocol file or --example");
                p = load_protocol(file);
            }
            if (!config.empty()) c0 = parse_config(p, config);
            if (c0.agents.empty())
                throw std::invalid_argument("mc needs --config");
            Scheduler s;
            s.seed = seed;
            s.p = p_send;
            if (sched == "auto")
                s.kind = is_delayed(p.model) ? Scheduler::Kind::SendReceive : Scheduler::Kind::UniformPair;
            else if (sched == "pair")
                s.kind = Scheduler::Kind::UniformPair;
            else if (sched == "send-receive")
                s.kind = Scheduler::Kind::SendReceive;
            else
                throw std::invalid_argument("unknown scheduler '" + sched + "'");
            rep.set("seed", std::to_string(seed));
            if (runs == 1) {
                McOptions o;
                o.max_steps = steps;
                o.window = window;
                o.run_index = run_index;
                o.keep_series = true;
                McSummary m = mc_run(p, c0, s, o);
                rep.absorb(summary_text(p, m));
                if (!csv.empty()) {
                    write_file(csv, series_csv(m));
                    rep.set("csv", csv);
                }
            } else {
                ConvergenceStats st =
                    estimate_convergence(p, c0, s, runs, steps, window > 0 ? window : std::max<int64_t>(1, steps / 10));
                rep.absorb(stats_text(p, st));
            }
        } else if (c_reach->parsed()) {
            Protocol p = load_protocol(file);
            Configuration from = parse_config(p, config), to = parse_config(p, config2);
            ReachOptions o;
            if (is_delayed(p.model)) {
                int64_t cap = msg_cap;
                if (cap < 0) cap = std::max<int64_t>(4, from.messages.size() + to.messages.size());
                o.msg_cap = cap;
                rep.set("msg_cap", cap);
            }
            ReachGraph g = p.model == Model::MFDO
                               ? reach_graph_seen(p, {from}, {support(from)}, o)
                               : reach_graph(p, {from}, o);
            rep.set("nodes", int64_t(g.size()));
            int64_t hit = -1;
            for (std::size_t id = 0; id < g.size() && hit < 0; ++id)
                if (g.config(id) == to) hit = int64_t(id);
            rep.set("reachable", hit >= 0);
            if (hit >= 0) {
                Run r = g.path_to(uint32_t(hit));
                r.normalize();
                if (out.empty())
                    rep.set("run", print_run(p, r));
                else {
                    write_file(out, print_run(p, r));
                    rep.set("output", out);
                }
            }
            code = hit >= 0 ? 0 : (is_delayed(p.model) ? 3 : 1);
        } else if (c_step->parsed()) {
            Protocol p = load_protocol(file);
            Configuration c = parse_config(p, config);
            Seen seen = support(c);
            auto st = enabled_steps(p, c, p.model == Model::MFDO ? &seen : nullptr);
            rep.set("enabled", int64_t(st.size()));
            for (const auto& s : st) rep.push("successor", p.trans[s.t].name + " " + print_config(p, s.next));
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const SoundUnderapprox& e) {
        std::cerr << "inconclusive: " << e.what() << "\n";
        return 3;
    } catch (const BudgetExceeded& e) {
        std::cerr << "inconclusive: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    rep.print(as_json);
    return code;
}
