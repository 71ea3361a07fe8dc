#pragma once

#include "qpspec/config.hpp"
#include "qpspec/error.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qpspec {

struct CommandContext {
    std::string out_dir;
    unsigned threads = 1;
    /// Progress sink; may be empty.
    std::function<void(const std::string&)> log;
};

/// Each command writes its files under out_dir and returns their paths.
std::vector<std::string> cmd_indices(const RunConfig& config, const CommandContext& ctx);
std::vector<std::string> cmd_lyapunov(const RunConfig& config, const CommandContext& ctx);
std::vector<std::string> cmd_gordon(const RunConfig& config, const CommandContext& ctx);
std::vector<std::string> cmd_classify(const RunConfig& config, const CommandContext& ctx);
std::vector<std::string> cmd_cf(const RunConfig& config, const CommandContext& ctx);

/// %.17g, with nan / inf / -inf spelled out.
std::string format_number(double x);

/// 2 config, 3 io, 4 range, 5 numeric.
int exit_code(ErrorKind kind);

}  // namespace qpspec
