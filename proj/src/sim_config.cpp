// SPDX-License-Identifier: Apache-2.0

#include "codedmm/sim_config.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

namespace codedmm {

void StragglerModel::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("model.p must lie in [0, 1]");
  if (!(straggler_factor > 1.0)) throw std::invalid_argument("model.straggler_factor must be > 1");
  if (!(jitter >= 0.0 && jitter < 1.0)) throw std::invalid_argument("model.jitter must lie in [0, 1)");
  if (!(base_time > 0.0)) throw std::invalid_argument("model.base_time must be > 0");
  if (!(encode_work >= 0.0) || !(decode_work >= 0.0)) {
    throw std::invalid_argument("model.encode_work and model.decode_work must be >= 0");
  }
}

TaskTime sample_task_time(const StragglerModel& model, double work_units, Rng& rng,
                          std::optional<bool> force) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double branch = unit(rng);
  const double noise = unit(rng);
  TaskTime t;
  t.straggled = force.value_or(branch < model.p);
  t.seconds = model.base_time * work_units * (1.0 - model.jitter + 2.0 * model.jitter * noise);
  if (t.straggled) t.seconds *= model.straggler_factor;
  return t;
}

const char* to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::kReference: return "reference";
    case Strategy::kCoded: return "coded";
    case Strategy::kSpeculative: return "speculative";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "reference") return Strategy::kReference;
  if (name == "coded") return Strategy::kCoded;
  if (name == "speculative") return Strategy::kSpeculative;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

void SimConfig::validate() const {
  model.validate();
  if (!(policy.q > 0.0 && policy.q <= 1.0)) throw std::invalid_argument("policy.q must lie in (0, 1]");
  if (!(policy.stage_q > 0.0 && policy.stage_q <= 1.0)) {
    throw std::invalid_argument("policy.stage_q must lie in (0, 1]");
  }
  if (policy.deadline_quantile &&
      !(*policy.deadline_quantile > 0.0 && *policy.deadline_quantile <= 1.0)) {
    throw std::invalid_argument("policy.deadline_quantile must lie in (0, 1]");
  }
  if (store.alpha < 0.0 || store.beta < 0.0) throw std::invalid_argument("store latency must be >= 0");
  if (code.la == 0 || code.lb == 0) throw std::invalid_argument("code.la and code.lb must be >= 1");
}

namespace {

void flatten(const nlohmann::json& j, const std::string& prefix, std::map<std::string, nlohmann::json>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten(*it, key, out);
    } else {
      out[key] = *it;
    }
  }
}

}  // namespace

SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig cfg) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  std::map<std::string, nlohmann::json> flat;
  flatten(j, "", flat);
  for (const auto& [key, v] : flat) {
    try {
      if (key == "model.p") cfg.model.p = v.get<double>();
      else if (key == "model.base_time") cfg.model.base_time = v.get<double>();
      else if (key == "model.jitter") cfg.model.jitter = v.get<double>();
      else if (key == "model.straggler_factor") cfg.model.straggler_factor = v.get<double>();
      else if (key == "model.encode_work") cfg.model.encode_work = v.get<double>();
      else if (key == "model.decode_work") cfg.model.decode_work = v.get<double>();
      else if (key == "store.alpha") cfg.store.alpha = v.get<double>();
      else if (key == "store.beta") cfg.store.beta = v.get<double>();
      else if (key == "policy.strategy") cfg.policy.strategy = parse_strategy(v.get<std::string>());
      else if (key == "policy.q") cfg.policy.q = v.get<double>();
      else if (key == "policy.deadline_quantile") {
        if (v.is_null()) cfg.policy.deadline_quantile.reset();
        else cfg.policy.deadline_quantile = v.get<double>();
      }
      else if (key == "policy.stage_q") cfg.policy.stage_q = v.get<double>();
      else if (key == "policy.recompute") cfg.policy.recompute = v.get<bool>();
      else if (key == "workers.encode") cfg.workers.encode = v.get<std::size_t>();
      else if (key == "workers.compute") cfg.workers.compute = v.get<std::size_t>();
      else if (key == "workers.decode") cfg.workers.decode = v.get<std::size_t>();
      else if (key == "code.la") cfg.code.la = v.get<std::size_t>();
      else if (key == "code.lb") cfg.code.lb = v.get<std::size_t>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "forced_stragglers") {
        if (v.is_null()) cfg.forced_stragglers.reset();
        else cfg.forced_stragglers = v.get<std::vector<std::size_t>>();
      }
      else throw std::invalid_argument("config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("config: bad value for '" + key + "': " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

SimConfig load_sim_config(const std::filesystem::path& path, SimConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return sim_config_from_json(j, base);
}

nlohmann::json to_json(const SimConfig& cfg) {
  nlohmann::json j;
  j["model"] = {{"p", cfg.model.p},
                {"base_time", cfg.model.base_time},
                {"jitter", cfg.model.jitter},
                {"straggler_factor", cfg.model.straggler_factor},
                {"encode_work", cfg.model.encode_work},
                {"decode_work", cfg.model.decode_work}};
  j["store"] = {{"alpha", cfg.store.alpha}, {"beta", cfg.store.beta}};
  j["policy"] = {{"strategy", to_string(cfg.policy.strategy)},
                 {"q", cfg.policy.q},
                 {"deadline_quantile", cfg.policy.deadline_quantile ? nlohmann::json(*cfg.policy.deadline_quantile)
                                                                    : nlohmann::json(nullptr)},
                 {"stage_q", cfg.policy.stage_q},
                 {"recompute", cfg.policy.recompute}};
  j["workers"] = {{"encode", cfg.workers.encode}, {"compute", cfg.workers.compute}, {"decode", cfg.workers.decode}};
  j["code"] = {{"la", cfg.code.la}, {"lb", cfg.code.lb}};
  j["seed"] = cfg.seed;
  j["forced_stragglers"] = cfg.forced_stragglers ? nlohmann::json(*cfg.forced_stragglers) : nlohmann::json(nullptr);
  return j;
}

}  // namespace codedmm
