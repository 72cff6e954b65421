// SPDX-License-Identifier: Apache-2.0
#include "mtdfl/harness/config.hpp"

#include <fstream>
#include <json.hpp>
#include <regex>
#include <set>
#include <sstream>

#include "mtdfl/error.hpp"

namespace mtdfl {

using nlohmann::json;

std::string DefenseMode::name() const {
  switch (kind) {
    case DefenseKind::FL: return "FL";
    case DefenseKind::FLAttack: return "FL-Attack";
    case DefenseKind::RndMtd: return "RND-MTD(" + std::to_string(blocked) + ")";
    case DefenseKind::MtdFl: return "MTD-FL";
  }
  return "?";
}

DefenseMode DefenseMode::parse(const std::string& s) {
  if (s == "FL") return {DefenseKind::FL, 0};
  if (s == "FL-Attack") return {DefenseKind::FLAttack, 0};
  if (s == "MTD-FL") return {DefenseKind::MtdFl, 0};
  if (s == "RND-MTD") return {DefenseKind::RndMtd, 2};
  static const std::regex rnd(R"(RND-MTD\((\d+)\))");
  std::smatch m;
  if (std::regex_match(s, m, rnd)) return {DefenseKind::RndMtd, static_cast<std::size_t>(std::stoul(m[1]))};
  throw ConfigError("unknown defense mode '" + s + "'");
}

ChannelParams NetworkConfig::channel() const {
  ChannelParams c;
  c.path_loss_coeff = path_loss_coeff;
  c.path_loss_exponent = path_loss_exponent;
  c.noise_power = dbm_to_watts(noise_dbm);
  c.log_base = log_base;
  c.min_distance = min_distance;
  return c;
}

std::vector<BaseStation> NetworkConfig::base_stations() const {
  std::vector<BaseStation> out;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const StationConfig& s = stations[i];
    BaseStation b;
    b.id = i;
    b.position = {s.x, s.y};
    b.coverage_radius = s.radius;
    b.cpu_freq = s.cpu;
    b.bandwidth = s.bandwidth;
    b.backhaul_rate = s.backhaul;
    b.tx_power = dbm_to_watts(s.tx_power_dbm);
    out.push_back(b);
  }
  return out;
}

Eigen::Index ScenarioConfig::model_size() const {
  return tk::DenseNet<double>(make_task_layers(fl.features, fl.hidden)).num_params();
}

ComputeCosts ScenarioConfig::costs() const {
  ComputeCosts c;
  c.train_cycles_per_sample = timing.train_cycles_per_sample;
  c.aggregate_cycles_per_unit = timing.aggregate_cycles_per_unit;
  c.inference_cycles = timing.inference_cycles;
  c.local_epochs = fl.local.epochs;
  c.model_size = static_cast<double>(model_size());
  return c;
}

ScenarioConfig reference_scenario() {
  ScenarioConfig c;
  c.modes = {DefenseMode::parse("FL"), DefenseMode::parse("FL-Attack"), DefenseMode::parse("RND-MTD(2)"),
             DefenseMode::parse("MTD-FL")};
  c.network.stations = {StationConfig{50, 50, 300, 3.2e9, 28e6, 1e9, 34},
                        StationConfig{350, 350, 300, 2.6e9, 30e6, 1e9, 34}};
  c.agent.episodes = c.episodes;
  return c;
}

namespace {

// ---- strict reading -------------------------------------------------------

class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  ~Obj() noexcept(false) {
    if (std::uncaught_exceptions() == 0) finish();
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  template <typename T, typename Conv>
  void get_as(const char* key, T& out, Conv conv) {
    std::string s;
    get(key, s);
    if (j_.contains(key)) {
      try {
        out = conv(s);
      } catch (const Error& e) {
        throw ConfigError(where(key) + ": " + e.what());
      }
    }
  }

  const json* sub(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string where(const std::string& key) const { return path_ + "." + key; }

 private:
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + where(it.key()) + "'");
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

AggregationMode aggregation_from(const std::string& s) {
  if (s == "edge-only") return AggregationMode::EdgeOnly;
  if (s == "edge+cloud") return AggregationMode::EdgeCloud;
  throw ConfigError("aggregation must be 'edge-only' or 'edge+cloud'");
}

LogBase log_base_from(const std::string& s) {
  if (s == "e" || s == "ln") return LogBase::Natural;
  if (s == "2" || s == "log2") return LogBase::Two;
  throw ConfigError("log_base must be 'ln' or 'log2'");
}

AnticipatorKind anticipator_from(const std::string& s) {
  if (s == "gru") return AnticipatorKind::Gru;
  if (s == "lstm") return AnticipatorKind::Lstm;
  if (s == "oracle") return AnticipatorKind::Oracle;
  if (s == "noisy-oracle") return AnticipatorKind::NoisyOracle;
  throw ConfigError("anticipator kind must be gru, lstm, oracle or noisy-oracle");
}

std::string to_string(AnticipatorKind k) {
  switch (k) {
    case AnticipatorKind::Gru: return "gru";
    case AnticipatorKind::Lstm: return "lstm";
    case AnticipatorKind::Oracle: return "oracle";
    case AnticipatorKind::NoisyOracle: return "noisy-oracle";
  }
  return "?";
}

void read_network(const json& j, NetworkConfig& n) {
  Obj o(j, "network");
  if (const json* g = o.sub("grid")) {
    Obj og(*g, "network.grid");
    og.get("cells_per_side", n.world.cells_per_side);
    og.get("cell_width", n.world.cell_width);
  }
  if (const json* t = o.sub("turn")) {
    Obj ot(*t, "network.turn");
    ot.get("straight", n.turns.straight);
    ot.get("right", n.turns.right);
    ot.get("left", n.turns.left);
  }
  if (const json* d = o.sub("devices")) {
    Obj od(*d, "network.devices");
    od.get("count", n.devices);
    od.get("speed", n.speed);
    od.get("cpu_min", n.cpu_min);
    od.get("cpu_max", n.cpu_max);
    od.get("tx_power_dbm", n.device_tx_dbm);
  }
  if (const json* s = o.sub("stations")) {
    if (!s->is_array()) throw ConfigError("network.stations must be an array");
    n.stations.clear();
    for (std::size_t i = 0; i < s->size(); ++i) {
      StationConfig st;
      Obj os((*s)[i], "network.stations[" + std::to_string(i) + "]");
      os.get("x", st.x);
      os.get("y", st.y);
      os.get("radius", st.radius);
      os.get("cpu", st.cpu);
      os.get("bandwidth", st.bandwidth);
      os.get("backhaul", st.backhaul);
      os.get("tx_power_dbm", st.tx_power_dbm);
      n.stations.push_back(st);
    }
  }
  if (const json* c = o.sub("channel")) {
    Obj oc(*c, "network.channel");
    oc.get("path_loss_coeff", n.path_loss_coeff);
    oc.get("path_loss_exponent", n.path_loss_exponent);
    oc.get("noise_dbm", n.noise_dbm);
    oc.get_as("log_base", n.log_base, log_base_from);
    oc.get("min_distance", n.min_distance);
  }
  o.get("dt", n.dt);
  o.get("cloud_cpu", n.cloud_cpu);
}

void read_fl(const json& j, FlConfig& f) {
  Obj o(j, "fl");
  o.get("features", f.features);
  o.get("hidden", f.hidden);
  o.get("local_epochs", f.local.epochs);
  o.get("lr", f.local.lr);
  o.get("batch_size", f.local.batch_size);
  o.get("l2", f.local.l2);
  o.get_as("optimizer", f.local.optimizer, tk::optimizer_from_string);
  o.get_as("loss", f.local.loss, tk::loss_from_string);
  o.get_as("weighting", f.weighting, [](const std::string& s) {
    if (s == "data-size") return Weighting::DataSize;
    if (s == "uniform") return Weighting::Uniform;
    throw ConfigError("weighting must be 'data-size' or 'uniform'");
  });
  o.get("train_min", f.train_min);
  o.get("train_max", f.train_max);
  o.get("test_size", f.test_size);
  o.get("separation", f.separation);
  o.get("class_balance", f.class_balance);
  o.get("reset_per_episode", f.reset_per_episode);
  o.get_as("loss_source", f.loss_source, [](const std::string& s) {
    if (s == "local") return LossSource::Local;
    if (s == "global") return LossSource::Global;
    throw ConfigError("loss_source must be 'local' or 'global'");
  });
  o.get("train_csv", f.train_csv);
  o.get("test_csv", f.test_csv);
}

void read_attack(const json& j, AttackConfig& a) {
  Obj o(j, "attack");
  o.get_as("kind", a.kind, attack_kind_from_string);
  o.get("lambda", a.lambda);
  o.get("scale", a.scale);
  o.get("noise_std", a.noise_std);
  if (o.has("z")) {
    const json* z = o.sub("z");
    if (z->is_string()) {
      if (z->get<std::string>() != "auto") throw ConfigError("attack.z must be a number or \"auto\"");
      a.z_auto = true;
    } else if (z->is_number()) {
      a.z = z->get<double>();
      a.z_auto = false;
    } else {
      throw ConfigError("attack.z must be a number or \"auto\"");
    }
  }
  o.get_as("sign", a.sign, [](const std::string& s) {
    if (s == "uniform") return DeviationSign::Uniform;
    if (s == "against-mean") return DeviationSign::AgainstMean;
    throw ConfigError("attack.sign must be 'uniform' or 'against-mean'");
  });
  o.get_as("estimate", a.estimate, [](const std::string& s) {
    if (s == "participants") return EstimateSource::Participants;
    if (s == "all-devices") return EstimateSource::AllDevices;
    throw ConfigError("attack.estimate must be 'participants' or 'all-devices'");
  });
  o.get("min_compromised", a.min_compromised);
  o.get("max_compromised", a.max_compromised);
  o.get_as("onset", a.onset, [](const std::string& s) {
    if (s == "staggered") return OnsetMode::Staggered;
    if (s == "at-start") return OnsetMode::AtStart;
    throw ConfigError("attack.onset must be 'staggered' or 'at-start'");
  });
}

void read_anticipator(const json& j, AnticipatorConfig& a) {
  Obj o(j, "anticipator");
  o.get_as("kind", a.kind, anticipator_from);
  o.get("hidden", a.train.hidden);
  o.get("epochs", a.train.epochs);
  o.get("lr", a.train.lr);
  o.get("batch_size", a.train.batch_size);
  o.get_as("loss", a.train.loss, tk::loss_from_string);
  o.get("balance_classes", a.train.balance_classes);
  o.get("window", a.window);
  o.get("features", a.features);
  o.get("fp", a.fp);
  o.get("fn", a.fn);
  o.get("snr", a.snr);
  o.get("benign_history", a.benign_history);
  o.get("benign_per_iteration", a.benign_per_iteration);
  o.get("train_benign", a.train_benign);
  o.get("train_flows", a.train_flows);
  o.get("test_benign", a.test_benign);
  o.get("test_flows", a.test_flows);
  o.get("events_csv", a.events_csv);
  o.get("checkpoint", a.checkpoint);
  if (a.kind == AnticipatorKind::Lstm) a.train.arch = tk::CellKind::Lstm;
  if (a.kind == AnticipatorKind::Gru) a.train.arch = tk::CellKind::Gru;
}

void read_agent(const json& j, AgentConfig& a) {
  Obj o(j, "agent");
  o.get("gamma", a.gamma);
  o.get("exploit_start", a.exploit_start);
  o.get("exploit_final", a.exploit_final);
  o.get("alpha", a.alpha);
  o.get("beta", a.beta);
  o.get("confidence", a.confidence);
  o.get("lr", a.lr);
  o.get_as("optimizer", a.optimizer, tk::optimizer_from_string);
  o.get("hidden", a.hidden);
  o.get_as("hidden_activation", a.hidden_activation, tk::activation_from_string);
  o.get("softmax_output", a.softmax_output);
  o.get("reward_cap", a.reward_cap);
  o.get("reward_floor", a.reward_floor);
  o.get("force_participant", a.force_participant);
  o.get("mask_next_state", a.mask_next_state);
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ScenarioConfig c = reference_scenario();
  {
    Obj o(j, "config");
    if (!o.has("seed")) throw ConfigError("config.seed is mandatory");
    o.get("seed", c.seed);
    o.get("runs", c.runs);
    o.get("episodes", c.episodes);
    o.get("eval_episodes", c.eval_episodes);
    o.get("eval_exploit", c.eval_exploit);
    o.get("iterations", c.iterations);
    o.get("run_id", c.run_id);
    if (const json* m = o.sub("modes")) {
      if (!m->is_array()) throw ConfigError("config.modes must be an array of mode names");
      c.modes.clear();
      for (const auto& s : *m) c.modes.push_back(DefenseMode::parse(s.get<std::string>()));
    }
    if (const json* s = o.sub("network")) read_network(*s, c.network);
    if (const json* s = o.sub("timing")) {
      Obj ot(*s, "timing");
      ot.get("train_cycles_per_sample", c.timing.train_cycles_per_sample);
      ot.get("aggregate_cycles_per_unit", c.timing.aggregate_cycles_per_unit);
      ot.get("inference_cycles", c.timing.inference_cycles);
      ot.get_as("aggregation", c.timing.aggregation, aggregation_from);
    }
    if (const json* s = o.sub("fl")) read_fl(*s, c.fl);
    if (const json* s = o.sub("attack")) read_attack(*s, c.attack);
    if (const json* s = o.sub("anticipator")) read_anticipator(*s, c.anticipator);
    if (const json* s = o.sub("agent")) read_agent(*s, c.agent);
  }
  c.agent.episodes = c.episodes;
  validate(c);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

void validate(const ScenarioConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(c.runs >= 1, "runs must be >= 1");
  need(c.iterations >= 1, "iterations must be >= 1");
  need(!c.modes.empty(), "at least one defense mode is required");
  need(c.eval_exploit >= 0.0 && c.eval_exploit <= 1.0, "eval_exploit must lie in [0, 1]");
  const NetworkConfig& n = c.network;
  need(n.world.cells_per_side >= 1 && n.world.cell_width > 0.0, "grid needs cells_per_side >= 1 and cell_width > 0");
  need(n.devices >= 1, "network.devices.count must be >= 1");
  need(n.speed >= 0.0, "device speed must be >= 0");
  need(n.cpu_min > 0.0 && n.cpu_max >= n.cpu_min, "device cpu range must be positive and ordered");
  need(!n.stations.empty(), "at least one base station is required");
  for (const auto& s : n.stations)
    need(s.radius > 0.0 && s.bandwidth > 0.0 && s.backhaul > 0.0 && s.cpu > 0.0,
         "stations need positive radius, bandwidth, backhaul and cpu");
  need(n.path_loss_coeff > 0.0 && n.path_loss_exponent > 0.0, "channel coefficients must be positive");
  need(n.dt >= 0.0 && n.cloud_cpu > 0.0 && n.min_distance > 0.0, "dt, cloud_cpu and min_distance out of range");
  need(c.fl.features >= 1, "fl.features must be >= 1");
  need(c.fl.local.epochs >= 1, "fl.local_epochs must be >= 1");
  need(c.fl.train_min >= 1 && c.fl.train_max >= c.fl.train_min, "fl train size range invalid");
  need(c.fl.test_size >= 1, "fl.test_size must be >= 1");
  need(c.fl.class_balance >= 0.0 && c.fl.class_balance <= 1.0, "fl.class_balance must lie in [0, 1]");
  need(c.attack.noise_std >= 0.0, "attack.noise_std must be >= 0");
  need(c.attack.min_compromised <= c.attack.max_compromised && c.attack.max_compromised <= n.devices,
       "compromised range must satisfy min <= max <= device count");
  need(c.anticipator.window >= 1 && c.anticipator.features >= 1, "anticipator window and features must be >= 1");
  need(c.anticipator.fp >= 0.0 && c.anticipator.fp <= 1.0 && c.anticipator.fn >= 0.0 && c.anticipator.fn <= 1.0,
       "anticipator fp/fn must lie in [0, 1]");
  need(c.agent.gamma >= 0.0 && c.agent.gamma < 1.0, "agent.gamma must lie in [0, 1)");
  need(c.agent.exploit_start >= 0.0 && c.agent.exploit_start <= 1.0 && c.agent.exploit_final >= 0.0 &&
           c.agent.exploit_final <= 1.0,
       "agent exploit probabilities must lie in [0, 1]");
  need(c.agent.confidence > 0.0 && c.agent.confidence <= 1.0, "agent.confidence must lie in (0, 1]");
  need(c.agent.hidden >= 1, "agent.hidden must be >= 1");
  for (const auto& m : c.modes)
    if (m.kind == DefenseKind::RndMtd) need(m.blocked <= n.devices, "RND-MTD blocks more devices than exist");
}

std::string config_to_json(const ScenarioConfig& c) {
  json stations = json::array();
  for (const auto& s : c.network.stations)
    stations.push_back({{"x", s.x}, {"y", s.y}, {"radius", s.radius}, {"cpu", s.cpu}, {"bandwidth", s.bandwidth},
                        {"backhaul", s.backhaul}, {"tx_power_dbm", s.tx_power_dbm}});
  json modes = json::array();
  for (const auto& m : c.modes) modes.push_back(m.name());
  const auto& n = c.network;
  const auto& f = c.fl;
  const auto& a = c.attack;
  const auto& an = c.anticipator;
  const auto& g = c.agent;
  json j = {
      {"seed", c.seed},
      {"runs", c.runs},
      {"episodes", c.episodes},
      {"eval_episodes", c.eval_episodes},
      {"eval_exploit", c.eval_exploit},
      {"iterations", c.iterations},
      {"run_id", c.run_id},
      {"modes", modes},
      {"network",
       {{"grid", {{"cells_per_side", n.world.cells_per_side}, {"cell_width", n.world.cell_width}}},
        {"turn", {{"straight", n.turns.straight}, {"right", n.turns.right}, {"left", n.turns.left}}},
        {"devices",
         {{"count", n.devices}, {"speed", n.speed}, {"cpu_min", n.cpu_min}, {"cpu_max", n.cpu_max},
          {"tx_power_dbm", n.device_tx_dbm}}},
        {"stations", stations},
        {"channel",
         {{"path_loss_coeff", n.path_loss_coeff}, {"path_loss_exponent", n.path_loss_exponent},
          {"noise_dbm", n.noise_dbm}, {"log_base", n.log_base == LogBase::Natural ? "ln" : "log2"},
          {"min_distance", n.min_distance}}},
        {"dt", n.dt},
        {"cloud_cpu", n.cloud_cpu}}},
      {"timing",
       {{"train_cycles_per_sample", c.timing.train_cycles_per_sample},
        {"aggregate_cycles_per_unit", c.timing.aggregate_cycles_per_unit},
        {"inference_cycles", c.timing.inference_cycles},
        {"aggregation", c.timing.aggregation == AggregationMode::EdgeOnly ? "edge-only" : "edge+cloud"}}},
      {"fl",
       {{"features", f.features}, {"hidden", f.hidden}, {"local_epochs", f.local.epochs}, {"lr", f.local.lr},
        {"batch_size", f.local.batch_size}, {"l2", f.local.l2},
        {"optimizer", f.local.optimizer == tk::OptimizerKind::Sgd ? "sgd" : "adam"},
        {"loss", f.local.loss == tk::LossKind::Mse ? "mse" : "ce"},
        {"weighting", f.weighting == Weighting::DataSize ? "data-size" : "uniform"},
        {"train_min", f.train_min}, {"train_max", f.train_max}, {"test_size", f.test_size},
        {"separation", f.separation}, {"class_balance", f.class_balance},
        {"reset_per_episode", f.reset_per_episode},
        {"loss_source", f.loss_source == LossSource::Local ? "local" : "global"},
        {"train_csv", f.train_csv}, {"test_csv", f.test_csv}}},
      {"attack",
       {{"kind", to_string(a.kind)}, {"lambda", a.lambda}, {"scale", a.scale}, {"noise_std", a.noise_std},
        {"z", a.z_auto ? json("auto") : json(a.z)},
        {"sign", a.sign == DeviationSign::Uniform ? "uniform" : "against-mean"},
        {"estimate", a.estimate == EstimateSource::Participants ? "participants" : "all-devices"},
        {"min_compromised", a.min_compromised}, {"max_compromised", a.max_compromised},
        {"onset", a.onset == OnsetMode::Staggered ? "staggered" : "at-start"}}},
      {"anticipator",
       {{"kind", to_string(an.kind)}, {"hidden", an.train.hidden}, {"epochs", an.train.epochs},
        {"lr", an.train.lr}, {"batch_size", an.train.batch_size},
        {"loss", an.train.loss == tk::LossKind::Mse ? "mse" : "ce"},
        {"balance_classes", an.train.balance_classes}, {"window", an.window}, {"features", an.features}, {"fp", an.fp}, {"fn", an.fn},
        {"snr", an.snr}, {"benign_history", an.benign_history}, {"benign_per_iteration", an.benign_per_iteration},
        {"train_benign", an.train_benign}, {"train_flows", an.train_flows}, {"test_benign", an.test_benign},
        {"test_flows", an.test_flows}, {"events_csv", an.events_csv}, {"checkpoint", an.checkpoint}}},
      {"agent",
       {{"gamma", g.gamma}, {"exploit_start", g.exploit_start}, {"exploit_final", g.exploit_final},
        {"alpha", g.alpha}, {"beta", g.beta}, {"confidence", g.confidence}, {"lr", g.lr},
        {"optimizer", g.optimizer == tk::OptimizerKind::Sgd ? "sgd" : "adam"}, {"hidden", g.hidden},
        {"hidden_activation", tk::to_string(g.hidden_activation)}, {"softmax_output", g.softmax_output},
        {"reward_cap", g.reward_cap}, {"reward_floor", g.reward_floor},
        {"force_participant", g.force_participant}, {"mask_next_state", g.mask_next_state}}},
  };
  return j.dump(2);
}

}  // namespace mtdfl
