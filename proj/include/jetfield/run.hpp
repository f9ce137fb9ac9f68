#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jetfield/model.hpp"

namespace jf {

struct RunOptions {
    std::string command;
    std::string format = "text";  // "text" | "json"
    std::uint64_t seed = 0;
    // command-specific flags, each possibly repeated (--curve ...)
    std::map<std::string, std::vector<std::string>> args;
};

struct Report {
    bool ok = true;     // every verdict passed
    std::string text;   // human rendering
    std::string json;   // machine rendering (schema 1)
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dispatch a CLI command against a parsed model (may be null for the
// model-free commands: verify-universal --generic, liouville, probe).
Report run(const RunOptions& opt, const ModelFile* model);

}  // namespace jf
