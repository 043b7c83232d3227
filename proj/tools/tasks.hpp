#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "report.hpp"

namespace xferlab::cli {

struct Output {
  Report report;
  Table table;
};

const std::vector<std::string>& task_names();

/// Tasks that draw random numbers whatever their parameters.
bool always_stochastic(const std::string& task);

/// Runs one task. `seed` overrides the config's "seed" field.
Output run_task(const std::string& task, const json& config, std::optional<std::uint64_t> seed);

}  // namespace xferlab::cli
