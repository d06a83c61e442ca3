/* Copyright 2026 The qadv Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "qadv/model.hpp"

#include <cmath>

#include "qadv/error.hpp"
#include "qadv/text_format.hpp"

namespace qadv {

using nlohmann::json;

ModelBundle make_bundle(const Schema& schema, const ArchConfig& arch, const MDPConfig& mdp,
                        const TrainConfig& train, std::uint64_t seed) {
  ModelBundle b;
  b.arch = arch;
  b.mdp = mdp;
  b.train = train;
  b.schema = schema;
  b.layout = schema.layout();
  b.columns = schema.columns();
  arch.validate();
  mdp.validate(b.questions());
  b.dqn = nn::xavier_init<double>(dqn_specs(arch, b.state_dim(), b.questions()), seed);
  b.guesser = nn::xavier_init<double>(guesser_specs(arch, b.state_dim()), seed ^ 0x9e3779b97f4a7c15ULL);
  return b;
}

namespace {

template <class M>
json flat(const M& m) {
  // Row-major flattening keeps the file readable as [row][col].
  std::vector<double> v;
  v.reserve(std::size_t(m.size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
  return v;
}

Eigen::MatrixXd matrix_from(const json& j, Index rows, Index cols, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (Index(v.size()) != rows * cols)
    throw DataError(std::string("model: ") + what + " has " + std::to_string(v.size()) +
                    " entries, expected " + std::to_string(rows * cols));
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = v[std::size_t(r * cols + c)];
  return m;
}

Eigen::VectorXd vector_from(const json& j, Index n, const char* what) {
  return matrix_from(j, n, 1, what).col(0);
}

json params_to_json(const nn::LayerParams<double>& p) {
  return {{"weight", flat(p.weight)},
          {"bias", flat(p.bias)},
          {"prelu_slope", flat(p.prelu_slope)},
          {"bn_scale", flat(p.bn_scale)},
          {"bn_shift", flat(p.bn_shift)}};
}

nn::LayerParams<double> params_from_json(const json& j, const nn::LayerParams<double>& like) {
  nn::LayerParams<double> p;
  p.weight = matrix_from(j.at("weight"), like.weight.rows(), like.weight.cols(), "weight");
  p.bias = vector_from(j.at("bias"), like.bias.size(), "bias");
  p.prelu_slope = vector_from(j.at("prelu_slope"), like.prelu_slope.size(), "prelu_slope");
  p.bn_scale = vector_from(j.at("bn_scale"), like.bn_scale.size(), "bn_scale");
  p.bn_shift = vector_from(j.at("bn_shift"), like.bn_shift.size(), "bn_shift");
  return p;
}

json adam_to_json(const Adam& a) {
  json first = json::array(), second = json::array();
  for (const auto& g : a.first_moment) first.push_back(params_to_json(g));
  for (const auto& g : a.second_moment) second.push_back(params_to_json(g));
  return {{"step", a.step},         {"beta1", a.beta1},   {"beta2", a.beta2},
          {"eps_adam", a.eps_adam}, {"first", first},     {"second", second}};
}

Adam adam_from_json(const json& j, const Net& net) {
  Adam a = nn::make_adam(net);
  a.step = j.at("step").get<std::int64_t>();
  a.beta1 = j.at("beta1").get<double>();
  a.beta2 = j.at("beta2").get<double>();
  a.eps_adam = j.at("eps_adam").get<double>();
  const auto& first = j.at("first");
  const auto& second = j.at("second");
  if (first.size() != net.layers.size() || second.size() != net.layers.size())
    throw DataError("model: optimizer state layer count mismatch");
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    a.first_moment[i] = params_from_json(first[i], a.first_moment[i]);
    a.second_moment[i] = params_from_json(second[i], a.second_moment[i]);
  }
  return a;
}

json opt_double(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json network_to_json(const Net& net) {
  json layers = json::array();
  for (const auto& l : net.layers) {
    json p = params_to_json(l.params);
    p["in_dim"] = l.spec.in_dim;
    p["out_dim"] = l.spec.out_dim;
    p["activation"] = nn::to_string(l.spec.activation);
    p["batchnorm"] = l.spec.has_batchnorm;
    p["dropout"] = l.spec.dropout_rate;
    p["running_mean"] = flat(l.running_mean);
    p["running_var"] = flat(l.running_var);
    layers.push_back(std::move(p));
  }
  return {{"bn_momentum", net.bn_momentum}, {"bn_epsilon", net.bn_epsilon}, {"layers", layers}};
}

Net network_from_json(const json& j) {
  std::vector<nn::LayerSpec> specs;
  for (const auto& l : j.at("layers")) {
    nn::LayerSpec s;
    s.in_dim = l.at("in_dim").get<Index>();
    s.out_dim = l.at("out_dim").get<Index>();
    s.activation = nn::activation_from_string(l.at("activation").get<std::string>());
    s.has_batchnorm = l.at("batchnorm").get<bool>();
    s.dropout_rate = l.at("dropout").get<double>();
    specs.push_back(s);
  }
  Net net = nn::xavier_init<double>(specs, 0);  // shapes only; every tensor is overwritten
  net.bn_momentum = j.at("bn_momentum").get<double>();
  net.bn_epsilon = j.at("bn_epsilon").get<double>();
  const auto& layers = j.at("layers");
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto& l = net.layers[i];
    l.params = params_from_json(layers[i], l.params);
    l.running_mean = vector_from(layers[i].at("running_mean"), l.running_mean.size(), "running_mean");
    l.running_var = vector_from(layers[i].at("running_var"), l.running_var.size(), "running_var");
  }
  return net;
}

std::string model_to_json(const ModelBundle& b) {
  json j;
  j["format"] = "qadv-model";
  j["version"] = 1;
  j["arch"] = b.arch;
  j["mdp"] = b.mdp;
  j["train"] = b.train;
  j["schema"] = b.schema.to_text();
  j["imputer_fill"] = json::array();
  for (double v : b.imputer_fill) j["imputer_fill"].push_back(opt_double(v));
  j["dropped"] = b.dropped;
  j["dqn"] = network_to_json(b.dqn);
  j["guesser"] = network_to_json(b.guesser);
  j["best_auc"] = b.best_auc;
  j["best_episode"] = b.best_episode;
  j["episodes_run"] = b.episodes_run;
  if (b.checkpoint) {
    const auto& c = *b.checkpoint;
    j["checkpoint"] = {{"episode", c.episode},
                       {"env_steps", c.env_steps},
                       {"validations", c.validations},
                       {"since_best", c.since_best},
                       {"dqn", network_to_json(c.dqn)},
                       {"guesser", network_to_json(c.guesser)},
                       {"target", network_to_json(c.target)},
                       {"dqn_adam", adam_to_json(c.dqn_adam)},
                       {"guesser_adam", adam_to_json(c.guesser_adam)},
                       {"rng_state", c.rng_state}};
  }
  return j.dump(1) + "\n";
}

ModelBundle model_from_json(std::string_view text, const std::string& source) {
  ModelBundle b;
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "qadv-model") throw DataError(source + ": not a qadv model file");
    if (j.value("version", 0) != 1) throw DataError(source + ": unsupported model version");
    b.arch = j.at("arch").get<ArchConfig>();
    b.mdp = j.at("mdp").get<MDPConfig>();
    b.train = j.at("train").get<TrainConfig>();
    b.schema = Schema::parse(j.at("schema").get<std::string>(), source + "#schema");
    b.layout = b.schema.layout();
    b.columns = b.schema.columns();
    for (const auto& v : j.at("imputer_fill"))
      b.imputer_fill.push_back(v.is_null() ? std::nan("") : v.get<double>());
    b.dropped = j.at("dropped").get<std::vector<std::string>>();
    b.dqn = network_from_json(j.at("dqn"));
    b.guesser = network_from_json(j.at("guesser"));
    b.best_auc = j.at("best_auc").get<double>();
    b.best_episode = j.at("best_episode").get<std::int64_t>();
    b.episodes_run = j.at("episodes_run").get<std::int64_t>();
    if (j.contains("checkpoint")) {
      const auto& c = j.at("checkpoint");
      TrainerCheckpoint cp;
      cp.episode = c.at("episode").get<std::int64_t>();
      cp.env_steps = c.at("env_steps").get<std::int64_t>();
      cp.validations = c.at("validations").get<Index>();
      cp.since_best = c.at("since_best").get<Index>();
      cp.dqn = network_from_json(c.at("dqn"));
      cp.guesser = network_from_json(c.at("guesser"));
      cp.target = network_from_json(c.at("target"));
      cp.dqn_adam = adam_from_json(c.at("dqn_adam"), cp.dqn);
      cp.guesser_adam = adam_from_json(c.at("guesser_adam"), cp.guesser);
      cp.rng_state = c.at("rng_state").get<std::string>();
      b.checkpoint = std::move(cp);
    }
  } catch (const json::exception& e) {
    throw DataError(source + ": malformed model file (" + e.what() + ")");
  }
  if (b.dqn.input_dim() != b.state_dim() || b.dqn.output_dim() != b.questions() ||
      b.guesser.input_dim() != b.state_dim() || b.guesser.output_dim() != 2)
    throw ShapeError(source + ": network shapes do not match the stored schema");
  return b;
}

void save_model(const ModelBundle& bundle, const std::filesystem::path& path) {
  text::write_file(path, model_to_json(bundle));
}

ModelBundle load_model(const std::filesystem::path& path) {
  return model_from_json(text::read_file(path), path.string());
}

}  // namespace qadv
