#pragma once

#include <map>
#include <string>
#include <vector>

#include "jetfield/connection.hpp"
#include "jetfield/curves.hpp"
#include "jetfield/fconnection.hpp"
#include "jetfield/frame.hpp"
#include "jetfield/map_system.hpp"
#include "jetfield/section_system.hpp"

namespace jf {

struct ModelError : std::runtime_error {
    int line, column;
    ModelError(const std::string& msg, int line_, int col_)
        : std::runtime_error(msg + " at line " + std::to_string(line_) + ", column " +
                             std::to_string(col_)),
          line(line_),
          column(col_) {}
};

// A parsed model file: named declarations plus the order and cross-references
// needed to print it back.
struct ModelFile {
    struct Decl {
        std::string kind;               // chart, fibred, params, opaque, system, ...
        std::string name;
        std::vector<std::string> refs;  // names this declaration points at
    };
    std::vector<Decl> order;

    std::map<std::string, Frame> frames;  // chart / fibred / params declarations
    std::map<std::string, int> opaques;
    std::map<std::string, MapSystem> systems;
    std::map<std::string, SectionSystem> secsystems;
    std::map<std::string, ConnectionSystem> connsystems;
    std::map<std::string, ParameterSection> sections;  // section and gamma
    std::map<std::string, Curve> curves;
    std::map<std::string, ChartChange> changes;
    std::map<std::string, OperatorConnection> fconnections;

    bool has_name(const std::string& n) const;
};

ModelFile parse_model(const std::string& text);
std::string print_model(const ModelFile& m);

}  // namespace jf
