#pragma once

#include <string>

#include "egcn/model.hpp"
#include "json.hpp"

namespace egcn {

using ordered_json = nlohmann::ordered_json;

ordered_json config_to_json(const EgcnConfig& c);
EgcnConfig config_from_json(const ordered_json& j);

// Checkpoint document: {format_version, config, parameters: name ->
// {shape, values}, running_stats}.  Doubles survive the round trip exactly
// (shortest-representation encoding).
ordered_json checkpoint_to_json(EgcnModel& m);
EgcnModel checkpoint_from_json(const ordered_json& j);

// eval, when non-null, is stored verbatim under the "eval" key (fold id,
// best epoch, subject id lists, recorded metrics).
void save_checkpoint(const std::string& path, EgcnModel& m,
                     const ordered_json& eval = nullptr);

struct LoadedCheckpoint {
  EgcnModel model;
  ordered_json eval;  // null when absent
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace egcn
