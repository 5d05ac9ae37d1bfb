#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "popv/counting.hpp"
#include "popv/protocol.hpp"
#include "popv/semantics.hpp"

namespace popv {

class ParseError : public std::runtime_error {
public:
    ParseError(int line, int col, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ", col " + std::to_string(col) +
                             ": " + msg),
          line(line),
          col(col) {}
    int line, col;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

Protocol parse_protocol(const std::string& text);
Protocol load_protocol(const std::string& path);
std::string print_protocol(const Protocol& p);

// `{q1:4, q3:1 | a:2}`; a bare name counts once.
Configuration parse_config(const Protocol& p, const std::string& lit);
std::string print_config(const Protocol& p, const Configuration& c);
// Same literal syntax over an arbitrary name list (e.g. input symbols).
Multiset parse_multiset(const std::vector<std::string>& names, const std::string& lit);
std::string print_multiset(const std::vector<std::string>& names, const Multiset& m);

// One `cube:` line per cube; omitted names default to [0, inf].
Constraint parse_constraint(const std::vector<std::string>& names, const std::string& text);
std::string print_constraint(const std::vector<std::string>& names, const Constraint& g);

Run parse_run(const Protocol& p, const std::string& text);
std::string print_run(const Protocol& p, const Run& r);

}  // namespace popv
