#pragma once

#include <string>
#include <vector>

#include "popv/protocol.hpp"
#include "popv/semantics.hpp"

namespace popv {

using Trajectory = std::vector<int>;

// Explicit multiset of equal-length trajectories, one entry per agent.
struct History {
    std::vector<Trajectory> traj;

    std::size_t length() const { return traj.empty() ? 0 : traj.front().size(); }
    std::size_t agents() const { return traj.size(); }
    // Configuration at position i (0-based).
    Multiset config(std::size_t i, std::size_t nq) const;
    // States visited at positions 0..i.
    Seen seen_upto(std::size_t i, std::size_t nq) const;
    bool well_structured() const;
    // One line per distinct trajectory, states space-separated, "xK" multiplicity.
    std::string dump(const Protocol& p) const;
};

constexpr std::size_t kHistoryCap = 100000;

struct Compatibility {
    bool ok = true;
    int trajectory = -1;
    int position = -1;
    std::string reason;
};

// IO: observer must be horizontal at o across the step; MFDO: o visited by then.
Compatibility is_compatible(const Protocol& p, const History& h);
Run realize(const Protocol& p, const History& h);
History deanonymize(const Protocol& p, const Run& r);

// Replaces the bunch given by trajectory indices with one trajectory per visited state.
History prune_bunch(const Protocol& p, const History& h, const std::vector<int>& bunch);

// Covering-preserving pruning; returns the pruned history.
History prune_history(const Protocol& p, const History& h, const Multiset& l_init,
                      const Multiset& l_final);
Run prune(const Protocol& p, const Run& r, const Multiset& l_init, const Multiset& l_final);
Run prune_mfdo_linear(const Protocol& p, const Run& r, const Multiset& l_init,
                      const Multiset& l_final);

// DO runs between zero-message configurations are processed through the MFDO image.
struct DoProjection {
    MfdoImage image;
    Run mfdo_run;
};
DoProjection project_do_run(const Protocol& p, const Run& r);
// Rebuilds a DO run from an MFDO-image run by inserting send blocks.
Run lift_mfdo_run(const Protocol& p, const MfdoImage& img, const Run& mr);

Run prune_do(const Protocol& p, const Run& r, const Multiset& l_init, const Multiset& l_final);
Run shorten(const Protocol& p, const Run& r);

}  // namespace popv
