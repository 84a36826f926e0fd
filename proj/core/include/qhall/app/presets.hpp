#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qhall::app {

// Shipped experiment configs, embedded at build time from presets/*.json.
std::vector<std::string> preset_names();
std::optional<std::string_view> preset_text(std::string_view name);

// Shipped data tables (data/*.csv), looked up by file stem.
std::vector<std::string> data_names();
std::optional<std::string_view> data_file(std::string_view name);

}  // namespace qhall::app
