#include "cvrl/config.hpp"

#include <set>

#include "cvrl/error.hpp"

namespace cvrl {

namespace {

void check_schema(const nlohmann::json& j, const std::set<std::string>& known) {
  if (!j.is_object()) throw config_error("config must be a JSON object");
  if (!j.contains("schema_version"))
    throw config_error("config is missing the schema_version field");
  if (j["schema_version"].get<int>() != 1)
    throw config_error("unsupported config schema_version (expected 1)");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "schema_version" && !known.contains(key))
      throw config_error("unknown config field '" + key + "'");
  }
}

TinyEncoderConfig encoder_from_json(const nlohmann::json& j) {
  TinyEncoderConfig c = TinyEncoderConfig::defaults();
  if (j.contains("stages")) {
    c.stages.clear();
    for (const auto& s : j["stages"])
      c.stages.push_back({s.at("channels").get<int>(), s.value("kt", 3), s.value("ks", 3),
                          s.value("st", 2), s.value("ss", 2)});
  }
  c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.output_dim = j.value("output_dim", c.output_dim);
  c.standardize = j.value("standardize", c.standardize);
  return c;
}

nlohmann::json encoder_to_json(const TinyEncoderConfig& c) {
  nlohmann::json stages = nlohmann::json::array();
  for (const ConvStageConfig& s : c.stages)
    stages.push_back({{"channels", s.out_channels},
                      {"kt", s.temporal_kernel},
                      {"ks", s.spatial_kernel},
                      {"st", s.temporal_stride},
                      {"ss", s.spatial_stride}});
  return {{"stages", stages},
          {"hidden_layers", c.hidden_layers},
          {"hidden_dim", c.hidden_dim},
          {"output_dim", c.output_dim},
          {"standardize", c.standardize}};
}

JitterConfig jitter_from_json(const nlohmann::json& j) {
  JitterConfig c;
  c.max_brightness = j.value("max_brightness", c.max_brightness);
  c.max_contrast = j.value("max_contrast", c.max_contrast);
  c.max_saturation = j.value("max_saturation", c.max_saturation);
  c.max_hue = j.value("max_hue", c.max_hue);
  c.p_flip = j.value("p_flip", c.p_flip);
  c.p_jitter = j.value("p_jitter", c.p_jitter);
  c.p_grey = j.value("p_grey", c.p_grey);
  c.min_area = j.value("min_area", c.min_area);
  c.max_area = j.value("max_area", c.max_area);
  c.min_aspect = j.value("min_aspect", c.min_aspect);
  c.max_aspect = j.value("max_aspect", c.max_aspect);
  c.min_blur_sigma = j.value("min_blur_sigma", c.min_blur_sigma);
  c.max_blur_sigma = j.value("max_blur_sigma", c.max_blur_sigma);
  return c;
}

nlohmann::json jitter_to_json(const JitterConfig& c) {
  return {{"max_brightness", c.max_brightness},
          {"max_contrast", c.max_contrast},
          {"max_saturation", c.max_saturation},
          {"max_hue", c.max_hue},
          {"p_flip", c.p_flip},
          {"p_jitter", c.p_jitter},
          {"p_grey", c.p_grey},
          {"min_area", c.min_area},
          {"max_area", c.max_area},
          {"min_aspect", c.min_aspect},
          {"max_aspect", c.max_aspect},
          {"min_blur_sigma", c.min_blur_sigma},
          {"max_blur_sigma", c.max_blur_sigma}};
}

}  // namespace

nlohmann::json parse_config_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
}

PretrainConfig pretrain_config_from_json(const nlohmann::json& j) {
  check_schema(j, {"dataset", "preset", "clip_length", "temporal_stride", "batch_size", "epochs",
                   "tau", "base_lr", "warmup_epochs", "momentum", "weight_decay", "target_h",
                   "target_w", "seed", "loss_mode", "consistency", "checkpoint_every",
                   "init_checkpoint", "encoder", "jitter"});
  PretrainConfig c;
  c.dataset_path = j.value("dataset", c.dataset_path);
  if (j.contains("preset")) c.preset = preset_from_name(j["preset"].get<std::string>());
  c.clip_length = j.value("clip_length", c.clip_length);
  c.temporal_stride = j.value("temporal_stride", c.temporal_stride);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.tau = j.value("tau", c.tau);
  c.base_lr = j.value("base_lr", c.base_lr);
  c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
  c.momentum = j.value("momentum", c.momentum);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.target_h = j.value("target_h", c.target_h);
  c.target_w = j.value("target_w", c.target_w);
  c.seed = j.value("seed", c.seed);
  if (j.contains("loss_mode")) {
    std::string mode = j["loss_mode"].get<std::string>();
    if (mode == "symmetric") {
      c.loss_mode = LossMode::symmetric;
    } else if (mode == "one_sided") {
      c.loss_mode = LossMode::one_sided;
    } else {
      throw config_error("loss_mode must be 'symmetric' or 'one_sided'");
    }
  }
  if (j.contains("consistency")) {
    std::string mode = j["consistency"].get<std::string>();
    if (mode == "consistent") {
      c.consistency = Consistency::consistent;
    } else if (mode == "per_frame") {
      c.consistency = Consistency::per_frame;
    } else {
      throw config_error("consistency must be 'consistent' or 'per_frame'");
    }
  }
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.init_checkpoint = j.value("init_checkpoint", c.init_checkpoint);
  if (j.contains("encoder")) c.encoder = encoder_from_json(j["encoder"]);
  if (j.contains("jitter")) c.jitter = jitter_from_json(j["jitter"]);
  return c;
}

nlohmann::json pretrain_config_to_json(const PretrainConfig& c) {
  return {{"schema_version", 1},
          {"dataset", c.dataset_path},
          {"preset", preset_name(c.preset)},
          {"clip_length", c.clip_length},
          {"temporal_stride", c.temporal_stride},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"tau", c.tau},
          {"base_lr", c.base_lr},
          {"warmup_epochs", c.warmup_epochs},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"target_h", c.target_h},
          {"target_w", c.target_w},
          {"seed", c.seed},
          {"loss_mode", c.loss_mode == LossMode::symmetric ? "symmetric" : "one_sided"},
          {"consistency",
           c.consistency == Consistency::consistent ? "consistent" : "per_frame"},
          {"checkpoint_every", c.checkpoint_every},
          {"init_checkpoint", c.init_checkpoint},
          {"encoder", encoder_to_json(c.encoder)},
          {"jitter", jitter_to_json(c.jitter)}};
}

EvalConfig eval_config_from_json(const nlohmann::json& j) {
  check_schema(j, {"checkpoint", "encoder", "clip_length", "temporal_stride", "num_dense_clips",
                   "num_spatial_crops", "classifier_epochs", "classifier_lr", "classifier_batch",
                   "train_views", "label_fraction", "target_h", "target_w", "seed",
                   "fine_tune_epochs", "fine_tune_lr", "fine_tune_batch"});
  EvalConfig c;
  c.checkpoint_path = j.value("checkpoint", c.checkpoint_path);
  if (j.contains("encoder")) c.encoder = encoder_from_json(j["encoder"]);
  c.clip_length = j.value("clip_length", c.clip_length);
  c.temporal_stride = j.value("temporal_stride", c.temporal_stride);
  c.num_dense_clips = j.value("num_dense_clips", c.num_dense_clips);
  c.num_spatial_crops = j.value("num_spatial_crops", c.num_spatial_crops);
  c.classifier_epochs = j.value("classifier_epochs", c.classifier_epochs);
  c.classifier_lr = j.value("classifier_lr", c.classifier_lr);
  c.classifier_batch = j.value("classifier_batch", c.classifier_batch);
  c.train_views = j.value("train_views", c.train_views);
  c.label_fraction = j.value("label_fraction", c.label_fraction);
  c.target_h = j.value("target_h", c.target_h);
  c.target_w = j.value("target_w", c.target_w);
  c.seed = j.value("seed", c.seed);
  c.fine_tune_epochs = j.value("fine_tune_epochs", c.fine_tune_epochs);
  c.fine_tune_lr = j.value("fine_tune_lr", c.fine_tune_lr);
  c.fine_tune_batch = j.value("fine_tune_batch", c.fine_tune_batch);
  return c;
}

nlohmann::json eval_config_to_json(const EvalConfig& c) {
  return {{"schema_version", 1},
          {"checkpoint", c.checkpoint_path},
          {"encoder", encoder_to_json(c.encoder)},
          {"clip_length", c.clip_length},
          {"temporal_stride", c.temporal_stride},
          {"num_dense_clips", c.num_dense_clips},
          {"num_spatial_crops", c.num_spatial_crops},
          {"classifier_epochs", c.classifier_epochs},
          {"classifier_lr", c.classifier_lr},
          {"classifier_batch", c.classifier_batch},
          {"train_views", c.train_views},
          {"label_fraction", c.label_fraction},
          {"target_h", c.target_h},
          {"target_w", c.target_w},
          {"seed", c.seed},
          {"fine_tune_epochs", c.fine_tune_epochs},
          {"fine_tune_lr", c.fine_tune_lr},
          {"fine_tune_batch", c.fine_tune_batch}};
}

}  // namespace cvrl
