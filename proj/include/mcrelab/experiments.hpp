// Experiment runner: parse a JSON config, dispatch to the right module, and
// persist CSV/JSON artifacts plus a config echo under the output directory.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace mcrelab::experiments {

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_root;
    std::optional<int> threads;
    std::optional<std::string> label;  // result subdirectory; default: timestamp
};

// Returns the CLI exit code: 0 ok, 2 config error, 3 assumption failure,
// 4 acceptance-check failure. On success *result_dir holds the artifact path.
int run_experiment(const std::string& config_path, const RunOverrides& overrides,
                   std::string* result_dir = nullptr);

// Emits gnuplot-ready .dat files and static SVG charts for recognized CSVs.
int emit_plots(const std::string& result_dir);

}  // namespace mcrelab::experiments
