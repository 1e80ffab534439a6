#pragma once

#include "topogs/core.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace topogs {

// Flat key/value form of a FitConfig. Keys match the long CLI flags with
// dashes replaced by underscores (lambda_r, freeze_epoch, huber_beta, ...).
nlohmann::ordered_json config_to_json(const FitConfig& cfg);

// Applies every recognised key of a flat object onto `base`; unknown keys
// raise UsageError. A run manifest (object with a "config" member) is
// accepted too.
FitConfig config_from_json(const nlohmann::json& j, FitConfig base = {});

FitConfig load_config_file(const std::filesystem::path& path, FitConfig base = {});

}  // namespace topogs
