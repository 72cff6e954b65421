// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <numeric>

#include "mtdfl/error.hpp"
#include "mtdfl/harness/data.hpp"
#include "mtdfl/harness/experiment.hpp"

namespace mtdfl {

namespace {

tk::CellKind cell_of(AnticipatorKind k) { return k == AnticipatorKind::Lstm ? tk::CellKind::Lstm : tk::CellKind::Gru; }

std::vector<std::size_t> active_mask_indices(const TopologyVector& x) {
  std::vector<std::size_t> out;
  for (Eigen::Index u = 0; u < x.size(); ++u)
    if (x[u]) out.push_back(static_cast<std::size_t>(u));
  return out;
}

std::size_t count_violations(const TopologyVector& x, const Eigen::VectorXd& p, double c_h) {
  std::size_t n = 0;
  for (Eigen::Index u = 0; u < x.size(); ++u)
    if (x[u] && p[u] >= c_h) ++n;
  return n;
}

// Picks k distinct devices by a partial Fisher-Yates shuffle.
std::vector<std::size_t> draw_blocked(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(i), static_cast<std::int64_t>(n - 1)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

double mean_of(const Eigen::VectorXd& v) { return v.size() ? v.mean() : 0.0; }

}  // namespace

std::shared_ptr<const Predictor> make_predictor(const ScenarioConfig& cfg, std::uint64_t seed) {
  const AnticipatorConfig& a = cfg.anticipator;
  switch (a.kind) {
    case AnticipatorKind::Oracle: return std::make_shared<OraclePredictor>();
    case AnticipatorKind::NoisyOracle:
      return std::make_shared<NoisyOraclePredictor>(a.fp, a.fn, hash_path(seed, {stream::kAnticipator}));
    case AnticipatorKind::Gru:
    case AnticipatorKind::Lstm: break;
  }
  if (!a.checkpoint.empty()) {
    tk::RecurrentClassifier<double> net(cell_of(a.kind), a.features, a.train.hidden);
    tk::load_model(a.checkpoint, "anticipator", net);
    return std::make_shared<RecurrentPredictor>(std::move(net), a.window, 0.0);
  }
  WindowedDataset data;
  if (!a.events_csv.empty()) {
    data = windows_of(load_events_csv(a.events_csv), a.window);
  } else {
    Rng rng = make_stream(seed, {stream::kAnticipator, 0});
    data = windows_of(gen_synthetic_traffic(a.train_benign, a.train_flows, a.features, a.snr, a.window, rng), a.window);
  }
  if (data.width != a.features) throw ConfigError("event trace width does not match anticipator.features");
  AnticipatorTrainConfig tc = a.train;
  tc.arch = cell_of(a.kind);
  tc.seed = hash_path(seed, {stream::kAnticipator, 1});
  TrainedAnticipator trained = train_anticipator(data, tc);
  return std::shared_ptr<const Predictor>(std::move(trained.predictor));
}

RunContext make_run_context(const ScenarioConfig& cfg, std::uint64_t seed, bool need_predictor) {
  validate(cfg);
  RunContext ctx;
  ctx.cfg = &cfg;
  ctx.seed = seed;
  ctx.stations = cfg.network.base_stations();
  ctx.channel = cfg.network.channel();
  ctx.costs = cfg.costs();
  if (!cfg.fl.test_csv.empty()) {
    ctx.test = load_flows_csv(cfg.fl.test_csv);
  } else {
    Rng rng = make_stream(seed, {stream::kTestSet});
    ctx.test = gen_synthetic_flows(cfg.fl.test_size, cfg.fl.features, cfg.fl.class_balance, cfg.fl.separation, rng);
  }
  if (!cfg.fl.train_csv.empty()) ctx.train_pool = load_flows_csv(cfg.fl.train_csv);
  for (const DeviceShard* s : {&ctx.test, &ctx.train_pool})
    if (!s->empty() && s->x.cols() != cfg.fl.features)
      throw ConfigError("flow trace width " + std::to_string(s->x.cols()) + " does not match fl.features");
  if (ctx.test.empty()) throw ConfigError("test set is empty");

  double max_rate = 0.0, max_cpu = cfg.network.cpu_max;
  const double g1 = channel_gain(ctx.channel.min_distance, ctx.channel);
  const double pt = dbm_to_watts(cfg.network.device_tx_dbm);
  for (const BaseStation& b : ctx.stations) {
    max_rate = std::max(max_rate, link_rate(b.bandwidth, std::max(pt, b.tx_power), g1, ctx.channel.noise_power,
                                            ctx.channel.log_base));
    max_cpu = std::max(max_cpu, b.cpu_freq);
  }
  ctx.scales.max_rate = max_rate > 0.0 ? max_rate : 1.0;
  ctx.scales.max_cpu = max_cpu;
  if (need_predictor) ctx.predictor = make_predictor(cfg, seed);
  return ctx;
}

AgentState make_agent(const ScenarioConfig& cfg, std::uint64_t seed) {
  Rng rng = make_stream(seed, {stream::kAgent});
  const auto n = static_cast<Eigen::Index>(cfg.network.devices);
  const auto m = static_cast<Eigen::Index>(cfg.network.stations.size());
  return AgentState{PolicySet(cfg.network.devices, state_length(n, m), cfg.agent, rng), RewardNormalizer{}};
}

EpisodeResult run_episode(const RunContext& ctx, const EpisodeOptions& opt, AgentState* agent, ModelParams* persistent) {
  if (!ctx.cfg) throw InvalidStateError("run context has no config");
  const ScenarioConfig& cfg = *ctx.cfg;
  const NetworkConfig& net = cfg.network;
  const AgentConfig& acfg = cfg.agent;
  const bool mtd = opt.mode.kind == DefenseKind::MtdFl;
  if (mtd && (!agent || !ctx.predictor)) throw InvalidStateError("MTD-FL needs an agent and a predictor");

  const std::uint64_t seed = ctx.seed;
  const auto ph = static_cast<std::uint64_t>(opt.phase);
  const std::uint64_t ep = opt.episode;
  const std::size_t n = net.devices;
  const std::size_t iterations = cfg.iterations;
  const double c_h = acfg.confidence;

  // Scenario draws depend only on (seed, phase, episode), so every mode sees
  // the same devices, attackers and data.
  Rng rs = make_stream(seed, {stream::kScenario, ph, ep});
  std::vector<Device> devices(n);
  for (std::size_t u = 0; u < n; ++u) {
    Device proto;
    proto.id = u;
    proto.speed = net.speed;
    proto.cpu_freq = uniform(rs, net.cpu_min, net.cpu_max);
    proto.tx_power = dbm_to_watts(net.device_tx_dbm);
    devices[u] = place_on_grid(net.world, rs, proto);
  }

  EpisodeResult result;
  {
    Rng ra = make_stream(seed, {stream::kAttack, ph, ep});
    result.plan = draw_compromise_plan(n, iterations, cfg.attack, ra);
  }
  const bool attacked = opt.mode.attacked() && cfg.attack.kind != AttackKind::None;
  CompromisePlan plan = attacked ? result.plan : CompromisePlan{n, iterations, {}, {}};

  const auto layers = make_task_layers(cfg.fl.features, cfg.fl.hidden);
  ModelParams global;
  if (persistent && !cfg.fl.reset_per_episode && persistent->size() > 0) {
    global = *persistent;
  } else {
    Rng ri = make_stream(seed, {stream::kModelInit, ph, ep});
    global = init_model(layers, ri);
  }

  std::vector<EventSequence> logs;
  if (mtd) {
    logs.resize(n);
    for (std::size_t u = 0; u < n; ++u) {
      Rng rt = make_stream(seed, {stream::kTraffic, ph, ep, u, 0});
      logs[u] = gen_benign_events(cfg.anticipator.benign_history, cfg.anticipator.features, rt);
      logs[u].device = u;
    }
  }

  Rng rm = make_stream(seed, {stream::kMobility, ph, ep});
  TopologyVector previous = TopologyVector::Ones(static_cast<Eigen::Index>(n));
  std::optional<Transition> pending;
  double cumulative = 0.0;

  for (std::size_t t = 1; t <= iterations; ++t) {
    devices = step_mobility(net.world, std::move(devices), net.dt, rm, net.turns);

    Rng rd = make_stream(seed, {stream::kData, ph, ep, t});
    const auto samples = static_cast<std::size_t>(
        uniform_int(rd, static_cast<std::int64_t>(cfg.fl.train_min), static_cast<std::int64_t>(cfg.fl.train_max)));
    const DeviceShard pool = ctx.train_pool.empty()
                                 ? gen_synthetic_flows(samples, cfg.fl.features, cfg.fl.class_balance, cfg.fl.separation, rd)
                                 : resample(ctx.train_pool, samples, rd);
    const std::vector<DeviceShard> shards = split_among_devices(pool, n, rd);
    std::vector<std::size_t> data_sizes(n);
    for (std::size_t u = 0; u < n; ++u) devices[u].data_size = data_sizes[u] = shards[u].size();

    const NetworkSnapshot snap = build_snapshot(t, devices, ctx.stations, ctx.channel);

    AnticipationProfile profile{t, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))};
    if (mtd) {
      for (std::size_t u = 0; u < n; ++u) {
        Rng rt = make_stream(seed, {stream::kTraffic, ph, ep, u, t});
        if (plan.is_active(u, t))
          logs[u] = inject_attack_traffic(std::move(logs[u]),
                                          gen_attack_flow(cfg.anticipator.features, cfg.anticipator.snr,
                                                          cfg.anticipator.window, rt),
                                          cfg.anticipator.window);
        else
          logs[u].append(gen_benign_events(cfg.anticipator.benign_per_iteration, cfg.anticipator.features, rt));
      }
      profile = anticipate(*ctx.predictor, logs, cfg.anticipator.window, t,
                           hash_path(seed, {stream::kAnticipator, 2, ph, ep, t}));
    }

    Rng rtop = make_stream(seed, {stream::kTopology, ph, ep, t});
    TopologyVector proposed = TopologyVector::Ones(static_cast<Eigen::Index>(n));
    Eigen::VectorXd state;
    if (opt.mode.kind == DefenseKind::RndMtd)
      for (std::size_t u : draw_blocked(n, opt.mode.blocked, rtop)) proposed[static_cast<Eigen::Index>(u)] = 0;
    if (mtd) {
      state = build_state(snap, previous, profile, ctx.scales);
      proposed = select_topology(agent->policies, state, opt.exploit_prob, rtop);
    }

    TopologyVector executed = mtd ? enforce_confidence(proposed, profile.p, c_h) : proposed;
    auto eligible = [&](std::size_t u) { return snap.covered(u) && !shards[u].empty(); };
    for (std::size_t u = 0; u < n; ++u)
      if (!eligible(u)) executed[static_cast<Eigen::Index>(u)] = 0;
    if (mtd && acfg.force_participant && (executed == 0).all()) {
      std::optional<std::size_t> best;
      double best_margin = 0.0;
      for (std::size_t u = 0; u < n; ++u) {
        if (!eligible(u) || profile.p[static_cast<Eigen::Index>(u)] >= c_h) continue;
        const Eigen::Vector2d q = agent->policies.q_values(u, state);
        const double margin = q[0] - q[1];
        if (!best || margin > best_margin) best = u, best_margin = margin;
      }
      if (best) executed[static_cast<Eigen::Index>(*best)] = 1;
    }
    const std::vector<std::size_t> participants = active_mask_indices(executed);

    // Local training and the adversary's substitution.
    RoundResult round;
    round.participants = participants;
    std::vector<std::optional<Eigen::VectorXd>> all_honest;
    auto train_device = [&](std::size_t u) {
      Rng rl = make_stream(seed, {stream::kLocalTrain, ph, ep, t, u});
      return local_train(global, shards[u], cfg.fl.local, rl);
    };
    if (attacked && cfg.attack.estimate == EstimateSource::AllDevices) {
      all_honest.resize(n);
      for (std::size_t u = 0; u < n; ++u)
        if (auto r = train_device(u)) all_honest[u] = r->params.values;
    }
    for (std::size_t u : participants) {
      auto r = train_device(u);
      if (!r) throw InvalidStateError("participant without data");
      round.uploads.push_back(r->params);
      round.weights.push_back(upload_weight(shards[u].size(), cfg.fl.weighting));
      round.local_losses.push_back(cfg.fl.loss_source == LossSource::Local
                                       ? r->loss
                                       : evaluate(global, shards[u], cfg.fl.local.loss).loss);
    }
    std::size_t poisoned = 0;
    if (attacked && !participants.empty()) {
      Rng rp = make_stream(seed, {stream::kPoison, ph, ep, t});
      poisoned = poison_uploads(round, plan, cfg.attack, t, rp, all_honest);
    }

    if (!participants.empty()) {
      std::vector<WeightedModel> uploads;
      std::vector<std::size_t> group;
      for (std::size_t k = 0; k < participants.size(); ++k) {
        uploads.push_back({round.uploads[k], round.weights[k]});
        group.push_back(*snap.assignment[participants[k]]);
      }
      global = aggregate_hierarchical(uploads, group);
    }
    const EvalResult eval = evaluate(global, ctx.test, cfg.fl.local.loss);

    const TimingBreakdown timing = recognition_time(participants, snap, data_sizes, ctx.costs, net.cloud_cpu,
                                                    cfg.timing.aggregation);

    double reward = 0.0;
    if (mtd && !participants.empty()) {
      const Eigen::VectorXd losses = Eigen::Map<const Eigen::VectorXd>(round.local_losses.data(),
                                                                       static_cast<Eigen::Index>(round.local_losses.size()));
      agent->normalizer.observe(losses, timing.recognition);
      reward = compute_reward(agent->normalizer.loss(losses), agent->normalizer.time(timing.recognition), proposed,
                              profile.p, acfg);
    }
    cumulative += reward;

    if (mtd && opt.learn) {
      if (pending) {
        pending->next_state = state;
        pending->next_profile = profile.p;
        bellman_update(agent->policies, *pending, acfg);
        pending.reset();
      }
      // A round nobody executed carries no learning signal.
      if (!participants.empty()) {
        Transition tr{state, proposed, reward, {}, t == iterations, {}};
        if (tr.terminal)
          bellman_update(agent->policies, tr, acfg);
        else
          pending = std::move(tr);
      }
    }

    MetricsRecord rec;
    rec.run_id = cfg.run_id;
    rec.seed = seed;
    rec.phase = opt.phase == Phase::Train ? "train" : "eval";
    rec.episode = opt.episode;
    rec.iteration = t;
    rec.mode = opt.mode.name();
    rec.attack = attacked ? to_string(cfg.attack.kind) : "none";
    rec.accuracy = eval.accuracy;
    rec.test_loss = eval.loss;
    rec.participants = participants;
    rec.t_int_per_participant.assign(timing.recognition.data(), timing.recognition.data() + timing.recognition.size());
    rec.t_local = timing.local_train.size() ? timing.local_train.maxCoeff() : 0.0;
    rec.t_agg = timing.total_agg;
    rec.t_down = mean_of(timing.download);
    rec.t_inf = mean_of(timing.inference);
    rec.t_int = mean_of(timing.recognition);
    const std::vector<std::size_t> active = plan.active_set(t);
    rec.malicious = active.size();
    std::size_t excluded = 0;
    for (std::size_t u : active)
      if (!executed[static_cast<Eigen::Index>(u)]) ++excluded;
    rec.excluded_malicious_ratio = active.empty() ? 1.0 : static_cast<double>(excluded) / static_cast<double>(active.size());
    rec.poisoned_uploads = poisoned;
    rec.violations = mtd ? count_violations(executed, profile.p, c_h) : 0;
    rec.proposed_violations = mtd ? count_violations(proposed, profile.p, c_h) : 0;
    rec.exploit_prob = mtd ? opt.exploit_prob : 0.0;
    rec.reward = reward;
    rec.cumulative_reward = cumulative;
    result.violations += rec.violations;
    result.records.push_back(std::move(rec));

    previous = executed;
  }

  result.cumulative_reward = cumulative;
  if (persistent) *persistent = global;
  return result;
}

}  // namespace mtdfl
