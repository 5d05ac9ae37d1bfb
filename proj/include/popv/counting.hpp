#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "popv/multiset.hpp"
#include "popv/protocol.hpp"

namespace popv {

constexpr int64_t INF = INT64_MAX / 4;

inline int64_t inf_add(int64_t a, int64_t d) { return a >= INF ? INF : a + d; }

struct Cube {
    std::vector<int64_t> L, U;

    Cube() = default;
    explicit Cube(std::size_t n) : L(n, 0), U(n, INF) {}

    std::size_t dim() const { return L.size(); }
    bool nonempty() const;
    int64_t lnorm() const;
    int64_t unorm() const;
    bool contains(const Multiset& c) const;
    bool contains(const int32_t* c) const;
    // True iff every member of o is a member of this cube.
    bool includes(const Cube& o) const;
    bool operator==(const Cube& o) const { return L == o.L && U == o.U; }
    bool operator<(const Cube& o) const { return L == o.L ? U < o.U : L < o.L; }
};

Cube intersect(const Cube& a, const Cube& b);

class Constraint {
public:
    Constraint() = default;
    explicit Constraint(std::size_t dim) : dim_(dim) {}
    Constraint(std::size_t dim, std::vector<Cube> cubes);

    static Constraint top(std::size_t dim);
    static Constraint empty(std::size_t dim) { return Constraint(dim); }

    std::size_t dim() const { return dim_; }
    const std::vector<Cube>& cubes() const { return cubes_; }
    void add(const Cube& c);

    bool member(const Multiset& c) const;
    bool member(const Configuration& c) const { return member(c.agents); }
    int64_t lnorm() const;
    int64_t unorm() const;
    // Drops empty and subsumed cubes; sorts for a canonical order.
    void canonicalize();
    bool operator==(const Constraint& o) const { return dim_ == o.dim_ && cubes_ == o.cubes_; }

private:
    std::size_t dim_ = 0;
    std::vector<Cube> cubes_;
};

Constraint unite(const Constraint& a, const Constraint& b);
Constraint intersect(const Constraint& a, const Constraint& b);
// Minterm procedure: negate each cube atom-wise and distribute.
Constraint complement(const Constraint& a);

// No member with at least two agents.
bool is_empty_population(const Constraint& g);
// Some member with exactly n agents, if any; used to extract witnesses.
bool cube_has_size(const Cube& c, int64_t n);
Multiset cube_member_of_size(const Cube& c, int64_t n);

enum class Method { Fixpoint, Witness };

class SoundUnderapprox : public std::runtime_error {
public:
    SoundUnderapprox(const std::string& what, Constraint partial)
        : std::runtime_error(what), partial(std::move(partial)) {}
    Constraint partial;
};

struct ClosureOptions {
    int64_t cube_cap = 20000;     // fixpoint: cap on non-dominated cubes kept
    int64_t witness_size = -1;    // witness: enumeration size, -1 = lnorm + |Q|^3 + unorm
    int64_t node_budget = -1;     // witness: per-size graph budget, -1 = default
};

// Exact set of one-step predecessors (IO).
Constraint onestep_pre_io(const Protocol& p, const Constraint& g);

Constraint pre_star(const Protocol& p, const Constraint& g, Method m = Method::Fixpoint,
                    const ClosureOptions& opt = {});
Constraint post_star(const Protocol& p, const Constraint& g, Method m = Method::Fixpoint,
                     const ClosureOptions& opt = {});

// Zero-message closures of a DO protocol, computed on its MFDO image.
Constraint pre_star_zm(const Protocol& p, const Constraint& g, Method m = Method::Fixpoint,
                       const ClosureOptions& opt = {});
Constraint post_star_zm(const Protocol& p, const Constraint& g, const ClosureOptions& opt = {});

// Initial configurations whose input is mapped to b by the predicate (over inputs).
Constraint initial_set(const Protocol& p, const Constraint& pred, int b);
// Configurations whose agents all output b.
Constraint consensus_set(const Protocol& p, int b);

// States that can ever be populated from initial configurations (over-approximation
// by state-level closure, exact as a support bound).
std::vector<char> potentially_reachable_states(const Protocol& p);

}  // namespace popv
