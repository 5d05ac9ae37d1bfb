#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "popv/protocol.hpp"

namespace popv {

// xoshiro256** seeded through SplitMix64. Stream k of seed s starts from
// SplitMix64(s + k * 0x9E3779B97F4A7C15); see README for the exact recipe.
class Rng {
public:
    Rng(uint64_t seed, uint64_t stream = 0);
    uint64_t next();
    // Uniform in [0, n), n > 0, by rejection (no modulo bias).
    uint64_t below(uint64_t n);
    // Uniform in [0, 1) with 53 random bits.
    double unit();

private:
    uint64_t s_[4];
};

struct Scheduler {
    enum class Kind { UniformPair, SendReceive };
    Kind kind = Kind::UniformPair;
    double p = 0.5;     // send probability, SendReceive only
    uint64_t seed = 0;
};
// Throws std::invalid_argument on a bad p or a model the scheduler cannot drive.
void check_scheduler(const Protocol& p, const Scheduler& s);

struct McOptions {
    int64_t max_steps = 1000;
    uint64_t run_index = 0;   // selects the PRNG stream
    int64_t window = 0;       // > 0: per-window zero-message counts and final-window occupancy
    bool keep_series = true;  // per-step consensus and message counts
    // Called after every step with the step number (1-based) and the configuration.
    std::function<void(int64_t, const Configuration&)> on_step;
};

struct McSummary {
    int64_t steps = 0;
    int64_t noops = 0;
    int64_t zero_message_visits = 0;      // steps after which the pool is empty
    std::vector<int8_t> consensus;        // per step: 0, 1, or -1
    std::vector<int64_t> message_count;   // per step
    std::vector<int64_t> zero_per_window; // window > 0 only
    std::vector<char> final_window_occupied;  // per state, window > 0 only
    Configuration final;
};

McSummary mc_run(const Protocol& p, const Configuration& c0, const Scheduler& s, const McOptions& o);

// key=value lines (series omitted) and a CSV of the message-count series.
std::string summary_text(const Protocol& p, const McSummary& m);
std::string series_csv(const McSummary& m);

struct ConvergenceStats {
    int64_t runs = 0;
    int64_t max_steps = 0;
    int64_t window = 0;
    // Runs whose final window is a constant b-consensus.
    int64_t converged[2] = {0, 0};
    double fraction[2] = {0, 0};
    double ci_low[2] = {0, 0}, ci_high[2] = {0, 0};  // 95% normal approximation
    // Windows (over all runs) containing a zero-message configuration.
    int64_t windows = 0;
    int64_t windows_with_zero = 0;
    double zero_rate = 0;           // zero-message visits per step
    std::vector<double> occupied;   // per state: fraction of runs occupying it in the final window
};

ConvergenceStats estimate_convergence(const Protocol& p, const Configuration& c0, const Scheduler& s,
                                      int64_t runs, int64_t max_steps, int64_t window);
std::string stats_text(const Protocol& p, const ConvergenceStats& st);

// Protocols used by the probabilistic examples.
struct Example {
    Protocol p;
    Configuration c0;
};
// DT protocol over q0 q1 q2 and messages a b, started from [q2] plus an inert
// spectator `bot` (no send, no receive).
Example more_than_half();
// QT protocol q0 -a+-> q0, q0 -a- -> q1, from [q0, q0].
Example qt_send_receive();

}  // namespace popv
