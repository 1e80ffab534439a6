#include "topogs/config_io.hpp"

#include "topogs/errors.hpp"

#include <fstream>
#include <string>

namespace topogs {

nlohmann::ordered_json config_to_json(const FitConfig& cfg) {
  nlohmann::ordered_json j;
  j["regime"] = std::string(to_string(cfg.regime));
  j["k"] = cfg.k;
  j["lambda_r"] = cfg.lambda_r;
  j["lambda_c"] = cfg.lambda_c;
  j["lambda_o"] = cfg.lambda_o;
  j["epochs"] = cfg.epochs;
  j["tau"] = cfg.lazy_interval;
  j["freeze_epoch"] = cfg.resolved_freeze_epoch();
  j["huber_beta"] = cfg.huber_beta;
  if (cfg.scale_clamp_max) j["scale_clamp_max"] = *cfg.scale_clamp_max;
  j["s_init"] = cfg.s_init;
  j["embedding_scale"] = cfg.embedding_scale;
  j["lr_means"] = cfg.lr_means;
  j["lr_scales"] = cfg.lr_scales;
  j["lr_quats"] = cfg.lr_quats;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["seed"] = cfg.seed;
  if (cfg.kernel_sigma.adaptive)
    j["kernel_sigma"] = "adaptive";
  else
    j["kernel_sigma"] = cfg.kernel_sigma.value;
  j["normalize_rigidity"] = cfg.normalize_rigidity;
  j["kabsch_correction"] = cfg.kabsch_correction;
  j["init"] = cfg.init == InitStrategy::Pca3 ? "pca3" : "file";
  if (cfg.init == InitStrategy::External) j["init_path"] = cfg.init_path;
  return j;
}

FitConfig config_from_json(const nlohmann::json& j, FitConfig cfg) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  if (j.contains("config") && j["config"].is_object()) return config_from_json(j["config"], cfg);

  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "regime") cfg.regime = parse_regime(value.get<std::string>());
      else if (key == "k") cfg.k = value.get<int>();
      else if (key == "lambda_r") cfg.lambda_r = value.get<double>();
      else if (key == "lambda_c") cfg.lambda_c = value.get<double>();
      else if (key == "lambda_o") cfg.lambda_o = value.get<double>();
      else if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "tau") cfg.lazy_interval = value.get<int>();
      else if (key == "freeze_epoch") cfg.freeze_epoch = value.get<int>();
      else if (key == "huber_beta") cfg.huber_beta = value.get<double>();
      else if (key == "scale_clamp_max") cfg.scale_clamp_max = value.get<double>();
      else if (key == "s_init") cfg.s_init = value.get<double>();
      else if (key == "embedding_scale") cfg.embedding_scale = value.get<double>();
      else if (key == "lr_means") cfg.lr_means = value.get<double>();
      else if (key == "lr_scales") cfg.lr_scales = value.get<double>();
      else if (key == "lr_quats") cfg.lr_quats = value.get<double>();
      else if (key == "adam_beta1") cfg.adam_beta1 = value.get<double>();
      else if (key == "adam_beta2") cfg.adam_beta2 = value.get<double>();
      else if (key == "adam_eps") cfg.adam_eps = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "kernel_sigma") {
        if (value.is_string() && value.get<std::string>() == "adaptive")
          cfg.kernel_sigma = KernelSigma{};
        else
          cfg.kernel_sigma = KernelSigma::fixed(value.get<double>());
      } else if (key == "normalize_rigidity") cfg.normalize_rigidity = value.get<bool>();
      else if (key == "kabsch_correction") cfg.kabsch_correction = value.get<bool>();
      else if (key == "init") {
        const auto s = value.get<std::string>();
        if (s == "pca3") cfg.init = InitStrategy::Pca3;
        else if (s == "file") cfg.init = InitStrategy::External;
        else throw UsageError("init must be 'pca3' or 'file'");
      } else if (key == "init_path") cfg.init_path = value.get<std::string>();
      else throw UsageError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config value has the wrong type: ") + e.what());
  }
  return cfg;
}

FitConfig load_config_file(const std::filesystem::path& path, FitConfig base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::move(base));
}

}  // namespace topogs
