#include "dwt/config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace dwt {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& section) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("unknown key '" + it.key() + "' in " + section);
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void parse_train(const json& j, TrainConfig& train) {
  check_keys(j,
             {"lambda", "batch", "lr", "weight_decay", "epochs", "lr_decay_epochs",
              "lr_factor", "g", "epsilon", "rho", "ema_decay"},
             "train");
  read(j, "lambda", train.lambda);
  read(j, "batch", train.batch);
  read(j, "lr", train.lr);
  read(j, "weight_decay", train.weight_decay);
  read(j, "epochs", train.epochs);
  if (j.contains("lr_decay_epochs")) {
    auto v = j.at("lr_decay_epochs").get<std::vector<std::size_t>>();
    if (v.size() != 2) throw ConfigError("lr_decay_epochs must hold exactly two epochs");
    train.lr_decay1 = v[0];
    train.lr_decay2 = v[1];
  }
  read(j, "lr_factor", train.lr_factor);
  read(j, "g", train.g);
  read(j, "epsilon", train.epsilon);
  read(j, "rho", train.rho);
  read(j, "ema_decay", train.ema_decay);
}

void parse_model(const json& j, RunConfig& cfg) {
  check_keys(j, {"kind", "hidden", "channels", "n_dwt"}, "model");
  read(j, "kind", cfg.model_kind);
  read(j, "hidden", cfg.hidden);
  read(j, "channels", cfg.channels);
  read(j, "n_dwt", cfg.n_dwt);
}

void parse_data(const json& j, RunConfig& cfg) {
  check_keys(j,
             {"kind", "n_per_domain", "classes", "dim", "noise", "mean_radius",
              "corr_strength", "corr_block", "rotation_deg", "scales", "offset",
              "source_images", "source_labels", "target_images", "target_labels", "limit"},
             "data");
  read(j, "kind", cfg.data_kind);
  read(j, "n_per_domain", cfg.synthetic.n_per_domain);
  read(j, "classes", cfg.synthetic.classes);
  read(j, "dim", cfg.synthetic.dim);
  read(j, "noise", cfg.synthetic.noise);
  read(j, "mean_radius", cfg.synthetic.mean_radius);
  read(j, "corr_strength", cfg.synthetic.corr_strength);
  read(j, "corr_block", cfg.synthetic.corr_block);
  read(j, "rotation_deg", cfg.shift_rotation_deg);
  read(j, "scales", cfg.shift_scales);
  read(j, "offset", cfg.shift_offset);
  read(j, "source_images", cfg.idx_source_images);
  read(j, "source_labels", cfg.idx_source_labels);
  read(j, "target_images", cfg.idx_target_images);
  read(j, "target_labels", cfg.idx_target_labels);
  read(j, "limit", cfg.idx_limit);
}

void parse_perturb(const json& j, PerturbSpec& p) {
  check_keys(j,
             {"max_translation", "blur_sigma", "rotation_deg", "scale", "shear_deg",
              "input_noise"},
             "perturb");
  read(j, "max_translation", p.max_translation);
  read(j, "blur_sigma", p.blur_sigma);
  read(j, "rotation_deg", p.rotation_deg);
  if (j.contains("scale")) {
    auto v = j.at("scale").get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("perturb.scale must be [min, max]");
    p.scale_min = v[0];
    p.scale_max = v[1];
  }
  read(j, "shear_deg", p.shear_deg);
  read(j, "input_noise", p.input_noise);
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  perturb.validate();
  if (model_kind != "mlp" && model_kind != "cnn")
    throw ConfigError("model.kind must be 'mlp' or 'cnn'");
  if (data_kind != "synthetic" && data_kind != "idx")
    throw ConfigError("data.kind must be 'synthetic' or 'idx'");
  if (data_kind == "synthetic" && model_kind == "cnn")
    throw ConfigError("the synthetic task produces feature vectors; use the mlp model");
  if (data_kind == "idx") {
    if (idx_source_images.empty() || idx_source_labels.empty() || idx_target_images.empty() ||
        idx_target_labels.empty())
      throw ConfigError("idx data needs source/target image and label paths");
  }
  if (model_kind == "mlp" && hidden.empty()) throw ConfigError("mlp needs hidden widths");
  if (model_kind == "cnn" && channels.empty()) throw ConfigError("cnn needs channels");
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  try {
    check_keys(j, {"variant", "seed", "out_dir", "train", "model", "data", "perturb"},
               "config root");
    if (j.contains("variant")) cfg.train.variant = variant_from_string(j.at("variant"));
    read(j, "seed", cfg.seed);
    read(j, "out_dir", cfg.out_dir);
    if (j.contains("train")) parse_train(j.at("train"), cfg.train);
    if (j.contains("model")) parse_model(j.at("model"), cfg);
    if (j.contains("data")) parse_data(j.at("data"), cfg);
    if (j.contains("perturb")) parse_perturb(j.at("perturb"), cfg.perturb);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }

  // Assemble the synthetic shift from the geometric fields.
  RunConfig out = cfg;
  out.synthetic.shift_a =
      make_rotation_scale(out.synthetic.dim, out.shift_rotation_deg, out.shift_scales);
  out.synthetic.shift_b = Tensor({out.synthetic.dim});
  for (std::size_t i = 0; i < out.shift_offset.size() && i < out.synthetic.dim; ++i)
    out.synthetic.shift_b[i] = out.shift_offset[i];
  out.validate();
  return out;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

std::pair<LabeledSet, LabeledSet> load_datasets(const RunConfig& cfg) {
  if (cfg.data_kind == "synthetic") {
    return gen_synthetic_shift(Rng::mix(cfg.seed, 0xDA7A), cfg.synthetic);
  }
  LabeledSet source = load_idx(cfg.idx_source_images, cfg.idx_source_labels,
                               DomainTag::Source, cfg.idx_limit);
  LabeledSet target = load_idx(cfg.idx_target_images, cfg.idx_target_labels,
                               DomainTag::Target, cfg.idx_limit);
  return {std::move(source), std::move(target)};
}

std::size_t count_classes(const LabeledSet& a, const LabeledSet& b) {
  std::size_t mx = 0;
  for (std::size_t y : a.labels) mx = std::max(mx, y);
  for (std::size_t y : b.labels) mx = std::max(mx, y);
  return mx + 1;
}

Network build_from_config(const RunConfig& cfg, const LabeledSet& sample,
                          std::size_t n_classes) {
  const std::uint64_t init_seed = Rng::mix(cfg.seed, 0x1217);
  if (cfg.model_kind == "mlp") {
    if (sample.inputs.rank() != 2)
      throw ConfigError("mlp expects flat feature vectors; got image data");
    std::vector<std::size_t> dims;
    dims.push_back(sample.inputs.cols());
    for (std::size_t h : cfg.hidden) dims.push_back(h);
    dims.push_back(n_classes);
    return build_mlp(dims, cfg.n_dwt, cfg.train.g, init_seed, cfg.train.epsilon,
                     cfg.train.rho);
  }
  if (sample.inputs.rank() != 4)
    throw ConfigError("cnn expects image data; got flat feature vectors");
  std::vector<std::size_t> channels;
  channels.push_back(sample.inputs.dim(1));
  for (std::size_t c : cfg.channels) channels.push_back(c);
  return build_cnn(channels, sample.inputs.dim(2), sample.inputs.dim(3), n_classes,
                   cfg.n_dwt, cfg.train.g, init_seed, cfg.train.epsilon, cfg.train.rho);
}

}  // namespace dwt
