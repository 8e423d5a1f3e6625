#include "rdes/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "rdes/error.hpp"
#include "rdes/kernels.hpp"
#include "rdes/rng.hpp"

namespace rdes {

namespace {

using nlohmann::json;

constexpr std::uint64_t kEpisodeStream = 0x1000000;
constexpr std::uint64_t kBaselineStream = 0x2000000;
constexpr std::uint64_t kParamsStream = 0x3000000;

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

AgentKind agent_kind_from_string(const std::string& s) {
  if (s == "qlearn") return AgentKind::qlearn;
  if (s == "ppo") return AgentKind::ppo;
  if (s == "random_fs") return AgentKind::random_fs;
  if (s == "topk_sim") return AgentKind::topk_sim;
  throw ConfigError("unknown agent '" + s + "'");
}

std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::qlearn: return "qlearn";
    case AgentKind::ppo: return "ppo";
    case AgentKind::random_fs: return "random_fs";
    case AgentKind::topk_sim: return "topk_sim";
  }
  return "?";
}

void RunConfig::validate() const {
  if (dataset.empty()) throw ConfigError("config needs a 'dataset' path");
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw ConfigError("train_fraction must be in (0,1)");
  }
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (pool_size < env.k) throw ConfigError("pool_size must be >= k");
  if (max_features < 1) throw ConfigError("max_features must be >= 1");
  if (bins < 2) throw ConfigError("bins must be >= 2");
  if (projection_dims < 1) throw ConfigError("projection_dims must be >= 1");
  env.validate();
  qlearn_cfg.validate();
  ppo_cfg.validate();
  backend.validate();
}

std::string RunConfig::to_json() const {
  json j;
  j["agent"] = rdes::to_string(agent);
  j["dataset"] = dataset;
  j["train_fraction"] = train_fraction;
  j["seed"] = seed;
  j["episodes"] = episodes;
  j["k"] = env.k;
  j["pool_size"] = pool_size;
  j["max_features"] = max_features;
  j["bins"] = bins;
  j["projection_dims"] = projection_dims;
  j["prompt_style"] = rdes::to_string(prompt_style);
  j["prediction_mode"] = rdes::to_string(env.mode);
  j["lambda_min"] = env.lambda_min;
  j["lambda_max"] = env.lambda_max;
  j["eta"] = env.eta;
  j["gamma"] = env.gamma;
  j["alpha"] = qlearn_cfg.alpha;
  j["epsilon0"] = qlearn_cfg.epsilon0;
  j["epsilon_min"] = qlearn_cfg.epsilon_min;
  j["epsilon_decay"] = qlearn_cfg.epsilon_decay;
  j["clip_eps"] = ppo_cfg.clip_eps;
  j["c1"] = ppo_cfg.c1;
  j["c2"] = ppo_cfg.c2;
  j["gae_lambda"] = ppo_cfg.gae_lambda;
  j["lr"] = ppo_cfg.lr;
  j["epochs_per_batch"] = ppo_cfg.epochs_per_batch;
  j["batch_episodes"] = ppo_cfg.batch_episodes;
  j["hidden"] = ppo_cfg.hidden;
  j["normalize_advantages"] = ppo_cfg.normalize_advantages;
  j["backend_kind"] = rdes::to_string(backend.kind);
  j["endpoint"] = backend.endpoint;
  j["model"] = backend.model;
  j["temperature"] = backend.temperature;
  j["max_tokens"] = backend.max_tokens;
  j["timeout_ms"] = backend.timeout_ms;
  j["max_retries"] = backend.max_retries;
  j["backoff_ms"] = backend.backoff_ms;
  j["max_in_flight"] = backend.max_in_flight;
  return j.dump();
}

std::string RunConfig::digest() const {
  const std::string canonical = to_json();
  return hex64(fnv1a64(canonical.data(), canonical.size()));
}

RunConfig run_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (!j.contains("agent")) throw ConfigError("config needs an 'agent' field");
  if (!j.contains("dataset")) throw ConfigError("config needs a 'dataset' field");

  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "agent") {
        cfg.agent = agent_kind_from_string(value.get<std::string>());
      } else if (key == "dataset") {
        cfg.dataset = value.get<std::string>();
      } else if (key == "train_fraction") {
        cfg.train_fraction = value.get<double>();
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "episodes") {
        cfg.episodes = value.get<long>();
      } else if (key == "k") {
        cfg.env.k = value.get<int>();
      } else if (key == "pool_size") {
        cfg.pool_size = value.get<int>();
      } else if (key == "max_features") {
        cfg.max_features = value.get<int>();
      } else if (key == "bins") {
        cfg.bins = value.get<int>();
      } else if (key == "projection_dims") {
        cfg.projection_dims = value.get<int>();
      } else if (key == "prompt_style") {
        cfg.prompt_style = prompt_style_from_string(value.get<std::string>());
      } else if (key == "prediction_mode") {
        cfg.env.mode = prediction_mode_from_string(value.get<std::string>());
      } else if (key == "lambda_min") {
        cfg.env.lambda_min = value.get<double>();
      } else if (key == "lambda_max") {
        cfg.env.lambda_max = value.get<double>();
      } else if (key == "eta") {
        cfg.env.eta = value.get<double>();
      } else if (key == "gamma") {
        cfg.env.gamma = value.get<double>();
        cfg.qlearn_cfg.gamma = cfg.env.gamma;
        cfg.ppo_cfg.gamma = cfg.env.gamma;
      } else if (key == "alpha") {
        cfg.qlearn_cfg.alpha = value.get<double>();
      } else if (key == "epsilon0") {
        cfg.qlearn_cfg.epsilon0 = value.get<double>();
      } else if (key == "epsilon_min") {
        cfg.qlearn_cfg.epsilon_min = value.get<double>();
      } else if (key == "epsilon_decay") {
        cfg.qlearn_cfg.epsilon_decay = value.get<double>();
      } else if (key == "clip_eps") {
        cfg.ppo_cfg.clip_eps = value.get<double>();
      } else if (key == "c1") {
        cfg.ppo_cfg.c1 = value.get<double>();
      } else if (key == "c2") {
        cfg.ppo_cfg.c2 = value.get<double>();
      } else if (key == "gae_lambda") {
        cfg.ppo_cfg.gae_lambda = value.get<double>();
      } else if (key == "lr") {
        cfg.ppo_cfg.lr = value.get<double>();
      } else if (key == "epochs_per_batch") {
        cfg.ppo_cfg.epochs_per_batch = value.get<int>();
      } else if (key == "batch_episodes") {
        cfg.ppo_cfg.batch_episodes = value.get<int>();
      } else if (key == "hidden") {
        cfg.ppo_cfg.hidden = value.get<int>();
      } else if (key == "normalize_advantages") {
        cfg.ppo_cfg.normalize_advantages = value.get<bool>();
      } else if (key == "backend_kind") {
        cfg.backend.kind = backend_kind_from_string(value.get<std::string>());
      } else if (key == "endpoint") {
        cfg.backend.endpoint = value.get<std::string>();
      } else if (key == "model") {
        cfg.backend.model = value.get<std::string>();
      } else if (key == "temperature") {
        cfg.backend.temperature = value.get<double>();
      } else if (key == "max_tokens") {
        cfg.backend.max_tokens = value.get<int>();
      } else if (key == "timeout_ms") {
        cfg.backend.timeout_ms = value.get<int>();
      } else if (key == "max_retries") {
        cfg.backend.max_retries = value.get<int>();
      } else if (key == "backoff_ms") {
        cfg.backend.backoff_ms = value.get<int>();
      } else if (key == "max_in_flight") {
        cfg.backend.max_in_flight = value.get<int>();
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return run_config_from_json_text(buffer.str());
}

namespace {

struct Prepared {
  Dataset full;
  Dataset train;
  Dataset test;
  TfidfModel tfidf;
  std::vector<SparseVector> kb_vectors;  // aligned with train.examples()
  std::unique_ptr<LlmBackend> backend;

  const std::vector<std::string>& labels() const { return full.labels(); }
};

Prepared prepare(const RunConfig& cfg, const TfidfModel* fixed_tfidf) {
  Prepared p;
  p.full = load_jsonl(cfg.dataset);
  auto [train, test] = split(p.full, SplitSpec{cfg.train_fraction, cfg.seed});
  p.train = std::move(train);
  p.test = std::move(test);
  p.tfidf = fixed_tfidf ? *fixed_tfidf : TfidfModel::fit(p.train, cfg.max_features);

  std::vector<std::string> texts;
  texts.reserve(p.train.size());
  for (const auto& e : p.train.examples()) texts.push_back(e.text);
  p.kb_vectors = kernels::transform_corpus(p.tfidf, texts);

  p.backend = make_backend(cfg.backend, &p.tfidf);
  return p;
}

struct Prediction {
  std::string label;
  bool correct = false;
  bool parse_failed = false;
};

// One LLM round trip; a parse failure counts as an incorrect prediction
// rather than aborting the episode.
Prediction predict_with(LlmBackend& backend, PromptStyle style, const Example& input,
                        const std::vector<Example>& selected,
                        const std::vector<std::string>& labels) {
  PromptSpec spec;
  spec.input_text = input.text;
  for (const auto& e : selected) spec.demos.emplace_back(e.text, e.label);
  spec.labels = labels;
  spec.style = style;
  const std::string prompt =
      style == PromptStyle::standard ? build_standard_prompt(spec) : build_cot_prompt(spec);
  const std::string raw = backend.complete(spec, prompt);

  Prediction out;
  try {
    out.label = parse_label(raw, labels).label;
    out.correct = out.label == input.label;
  } catch (const LabelParseError&) {
    out.parse_failed = true;
    out.correct = false;
  }
  return out;
}

void finalize_metrics(Metrics& m, double gamma) {
  m.episodes = static_cast<long>(m.episode_log.size());
  m.correct = 0;
  double diversity_sum = 0.0;
  double return_sum = 0.0;
  for (auto& rec : m.episode_log) {
    rec.discounted_return = episode_return(rec.rewards, gamma);
    if (rec.correct) ++m.correct;
    diversity_sum += rec.diversity;
    return_sum += rec.discounted_return;
  }
  if (m.episodes > 0) {
    m.accuracy = static_cast<double>(m.correct) / static_cast<double>(m.episodes);
    m.mean_diversity = diversity_sum / static_cast<double>(m.episodes);
    m.mean_return = return_sum / static_cast<double>(m.episodes);
  }
}

// Shared k-step rollout. `pick` chooses the next slot from the current
// embedding and availability; `on_transition` receives each finished
// TransitionRecord plus the discretized keys (training hooks live there).
// Rewards use the global step counter when `t_global` is non-null and the
// frozen t=0 schedule value otherwise (evaluation and baselines do not
// advance training time).
template <typename PickFn, typename TransitionFn>
EpisodeRecord roll_episode(long episode_index, const Example& input, CandidatePool& pool,
                           const Prepared& p, const RunConfig& cfg, PickFn&& pick,
                           TransitionFn&& on_transition, long* t_global) {
  const int k = cfg.env.k;
  EpisodeRecord rec;
  rec.episode = episode_index;
  rec.input_id = input.id;
  rec.true_label = input.label;
  rec.t_start = t_global ? *t_global : 0;
  rec.lambda = lambda_at(cfg.env, rec.t_start);

  EpisodeState st;
  st.input = input;
  std::optional<std::string> pred;

  StateEmbedding emb = encode_state(p.tfidf, input.text, st.selected, pred, p.labels(), k);
  StateKey key = discretize(emb, cfg.bins, cfg.projection_dims);

  for (int t = 0; t < k; ++t) {
    const auto available = pool.available();
    const int slot = pick(emb, key, available);
    const double delta = step(st, pool, slot, p.train, k);
    const bool terminal = st.step == k;

    std::optional<bool> correct;
    if (cfg.env.mode == PredictionMode::per_step_prediction || terminal) {
      const auto pr = predict_with(*p.backend, cfg.prompt_style, input, st.selected, p.labels());
      correct = pr.correct;
      if (cfg.env.mode == PredictionMode::per_step_prediction && !pr.parse_failed) {
        pred = pr.label;
      }
      if (terminal) {
        rec.prediction = pr.label;
        rec.correct = pr.correct;
        rec.parse_failed = pr.parse_failed;
      }
    }

    const long t_step = t_global ? *t_global : 0;
    TransitionRecord transition;
    transition.action = slot;
    transition.reward = reward(cfg.env, correct, delta, t_step);
    transition.terminal = terminal;
    if (t_global) ++*t_global;
    rec.rewards.push_back(transition.reward);
    rec.selected_ids.push_back(st.selected.back().id);

    StateEmbedding next_emb = encode_state(p.tfidf, input.text, st.selected, pred, p.labels(), k);
    StateKey next_key = discretize(next_emb, cfg.bins, cfg.projection_dims);
    transition.state_before = std::move(emb);
    transition.state_after = next_emb;
    on_transition(transition, key, next_key);
    emb = std::move(next_emb);
    key = next_key;
  }
  rec.diversity = st.diversity;
  return rec;
}

void no_transition(const TransitionRecord&, StateKey, StateKey) {}

Metrics train_qlearn(const Prepared& p, const RunConfig& cfg, QTable& q) {
  Metrics m;
  long t_global = 0;
  for (long ep = 0; ep < cfg.episodes; ++ep) {
    Rng erng(derive_seed(cfg.seed, kEpisodeStream + static_cast<std::uint64_t>(ep)));
    const int pos = erng.next_index(static_cast<int>(p.train.size()));
    const Example& input = p.train.examples()[static_cast<std::size_t>(pos)];
    CandidatePool pool = build_pool(p.train, p.kb_vectors,
                                    p.kb_vectors[static_cast<std::size_t>(pos)], cfg.pool_size,
                                    cfg.env.k, input.id);

    auto pick = [&](const StateEmbedding&, StateKey key, const std::vector<bool>& available) {
      return select_action(q, key, available, ep, cfg.qlearn_cfg, erng);
    };
    auto learn = [&](const TransitionRecord& tr, StateKey s, StateKey s_next) {
      q.update(s, tr.action, tr.reward, s_next, tr.terminal, cfg.qlearn_cfg);
    };
    m.episode_log.push_back(roll_episode(ep, input, pool, p, cfg, pick, learn, &t_global));
  }
  finalize_metrics(m, cfg.env.gamma);
  m.updates_performed = q.update_count();
  return m;
}

Metrics train_ppo(const Prepared& p, const RunConfig& cfg, MlpParams& params, AdamState& adam) {
  Metrics m;
  long t_global = 0;
  std::vector<Trajectory> batch;

  auto flush_batch = [&] {
    if (batch.empty()) return;
    prepare_batch(batch, cfg.ppo_cfg);
    const auto before = ppo_loss(params, batch, cfg.ppo_cfg);
    for (int epoch = 0; epoch < cfg.ppo_cfg.epochs_per_batch; ++epoch) {
      const auto grads = backward(params, batch, cfg.ppo_cfg);
      optimizer_step(params, grads, adam, cfg.ppo_cfg.lr);
    }
    const auto after = ppo_loss(params, batch, cfg.ppo_cfg);
    PpoUpdateRecord rec;
    rec.update = static_cast<long>(m.ppo_updates.size());
    rec.clip_old = before.clip;
    rec.clip_new = after.clip;
    rec.total_old = before.total;
    rec.total_new = after.total;
    m.ppo_updates.push_back(rec);
    batch.clear();
  };

  for (long ep = 0; ep < cfg.episodes; ++ep) {
    Rng erng(derive_seed(cfg.seed, kEpisodeStream + static_cast<std::uint64_t>(ep)));
    const int pos = erng.next_index(static_cast<int>(p.train.size()));
    const Example& input = p.train.examples()[static_cast<std::size_t>(pos)];
    CandidatePool pool = build_pool(p.train, p.kb_vectors,
                                    p.kb_vectors[static_cast<std::size_t>(pos)], cfg.pool_size,
                                    cfg.env.k, input.id);

    Trajectory traj;
    auto pick = [&](const StateEmbedding& emb, StateKey, const std::vector<bool>& available) {
      const auto dense = emb.to_dense();
      const auto probs = policy_forward(params, dense, available);
      const auto [slot, logprob] = sample_action(probs, erng);
      traj.states.push_back(dense);
      traj.masks.push_back(available);
      traj.actions.push_back(slot);
      traj.logprobs_old.push_back(logprob);
      traj.values.push_back(value_forward(params, dense));
      return slot;
    };
    auto collect = [&](StateKey, int, double r, StateKey, bool, const StateEmbedding&) {
      traj.rewards.push_back(r);
    };
    m.episode_log.push_back(roll_episode(ep, input, pool, p, cfg, pick, collect, &t_global));
    batch.push_back(std::move(traj));
    if (static_cast<int>(batch.size()) >= cfg.ppo_cfg.batch_episodes) flush_batch();
  }
  flush_batch();  // trailing partial batch
  finalize_metrics(m, cfg.env.gamma);
  m.updates_performed = adam.t;
  return m;
}

// Greedy/argmax pass over fixed (input, pool) pairs; never updates anything.
template <typename PickFn>
Metrics eval_pass(const std::vector<std::pair<Example, CandidatePool>>& episodes,
                  const Prepared& p, const RunConfig& cfg, PickFn&& pick) {
  Metrics m;
  long ep = 0;
  for (const auto& [input, pool_template] : episodes) {
    CandidatePool pool = pool_template;
    m.episode_log.push_back(
        roll_episode(ep, input, pool, p, cfg, pick, no_transition, nullptr));
    ++ep;
  }
  finalize_metrics(m, cfg.env.gamma);
  return m;
}

std::vector<std::pair<Example, CandidatePool>> test_pool_episodes(const Prepared& p,
                                                                  const RunConfig& cfg) {
  if (p.test.size() == 0) throw Error("evaluate: empty test pool");
  std::vector<std::pair<Example, CandidatePool>> out;
  out.reserve(p.test.size());
  for (const auto& input : p.test.examples()) {
    out.emplace_back(input, build_pool(p.train, p.kb_vectors, p.tfidf.transform(input.text),
                                       cfg.pool_size, cfg.env.k));
  }
  return out;
}

void write_run_files(const std::filesystem::path& out_dir, const Metrics& m,
                     const RunConfig& cfg) {
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir / "metrics.json");
    f << metrics_to_json(m, cfg);
  }
  {
    std::ofstream f(out_dir / "episodes.jsonl");
    f << episodes_to_jsonl(m);
  }
  {
    ReportRow row;
    row.run = out_dir.filename().string();
    row.agent = to_string(cfg.agent);
    row.accuracy = m.accuracy;
    row.mean_diversity = m.mean_diversity;
    row.mean_return = m.mean_return;
    row.episodes = m.episodes;
    row.seed = cfg.seed;
    row.config_digest = cfg.digest();
    std::ofstream f(out_dir / "report.csv");
    f << report_csv({row});
  }
}

}  // namespace

TrainResult train(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  if (cfg.agent != AgentKind::qlearn && cfg.agent != AgentKind::ppo) {
    throw ConfigError("train needs a learning agent (qlearn or ppo)");
  }
  Prepared p = prepare(cfg, nullptr);

  TrainResult result;
  json payload;
  payload["version"] = kCheckpointVersion;
  payload["agent"] = to_string(cfg.agent);
  payload["config_digest"] = cfg.digest();
  payload["k"] = cfg.env.k;
  payload["pool_size"] = cfg.pool_size;
  payload["bins"] = cfg.bins;
  payload["projection_dims"] = cfg.projection_dims;
  payload["labels"] = p.labels();
  payload["tfidf"] = json::parse(p.tfidf.to_json());

  if (cfg.agent == AgentKind::qlearn) {
    QTable q(cfg.pool_size);
    result.metrics = train_qlearn(p, cfg, q);
    payload["qtable"] = json::parse(q.to_json(cfg.qlearn_cfg));
  } else {
    const int state_dim = 2 * p.tfidf.dim() + static_cast<int>(p.labels().size()) + 1;
    MlpParams params = MlpParams::init(state_dim, cfg.ppo_cfg.hidden, cfg.pool_size,
                                       derive_seed(cfg.seed, kParamsStream));
    AdamState adam = AdamState::init(params);
    result.metrics = train_ppo(p, cfg, params, adam);
    payload["ppo"] = json::parse(params.to_json());
  }

  result.checkpoint_payload = payload.dump();
  write_run_files(out_dir, result.metrics, cfg);
  if (!out_dir.empty()) {
    result.checkpoint_path = out_dir / "checkpoint.json";
    save_checkpoint(result.checkpoint_payload, result.checkpoint_path);
  }
  return result;
}

Metrics evaluate(const std::string& checkpoint_payload, const RunConfig& cfg,
                 const std::filesystem::path& out_dir) {
  cfg.validate();
  if (cfg.agent != AgentKind::qlearn && cfg.agent != AgentKind::ppo) {
    throw ConfigError("evaluate needs a learning agent (qlearn or ppo)");
  }

  json payload;
  try {
    payload = json::parse(checkpoint_payload);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint payload: ") + e.what());
  }
  if (!payload.contains("version") || payload["version"] != kCheckpointVersion) {
    throw CheckpointError("checkpoint version mismatch");
  }
  const std::string agent = payload.at("agent").get<std::string>();
  if (agent != to_string(cfg.agent)) {
    throw CheckpointError("checkpoint agent '" + agent + "' does not match configured agent '" +
                          to_string(cfg.agent) + "'");
  }
  for (const auto& [key, expected] :
       std::vector<std::pair<const char*, int>>{{"k", cfg.env.k},
                                                {"pool_size", cfg.pool_size},
                                                {"bins", cfg.bins},
                                                {"projection_dims", cfg.projection_dims}}) {
    if (payload.at(key).get<int>() != expected) {
      throw CheckpointError(std::string("checkpoint dimension mismatch on '") + key + "'");
    }
  }

  const TfidfModel tfidf = TfidfModel::from_json(payload.at("tfidf").dump());
  Prepared p = prepare(cfg, &tfidf);
  if (payload.at("labels").get<std::vector<std::string>>() != p.labels()) {
    throw CheckpointError("checkpoint label vocabulary does not match the dataset");
  }

  Metrics m;
  const auto episodes = test_pool_episodes(p, cfg);
  if (cfg.agent == AgentKind::qlearn) {
    auto [q, qcfg] = QTable::from_json(payload.at("qtable").dump());
    (void)qcfg;
    if (q.num_slots() != cfg.pool_size) {
      throw CheckpointError("checkpoint q-table slot count does not match pool_size");
    }
    m = eval_pass(episodes, p, cfg,
                  [&](const StateEmbedding&, StateKey key, const std::vector<bool>& available) {
                    return greedy_action(q, key, available);
                  });
  } else {
    const MlpParams params = MlpParams::from_json(payload.at("ppo").dump());
    const int state_dim = 2 * p.tfidf.dim() + static_cast<int>(p.labels().size()) + 1;
    if (params.state_dim != state_dim || params.actions != cfg.pool_size) {
      throw CheckpointError("checkpoint network shape does not match the configuration");
    }
    m = eval_pass(episodes, p, cfg,
                  [&](const StateEmbedding& emb, StateKey, const std::vector<bool>& available) {
                    return argmax_action(policy_forward(params, emb.to_dense(), available));
                  });
  }
  write_run_files(out_dir, m, cfg);
  return m;
}

Metrics evaluate_file(const std::filesystem::path& checkpoint, const RunConfig& cfg,
                      const std::filesystem::path& out_dir) {
  return evaluate(load_checkpoint(checkpoint), cfg, out_dir);
}

Metrics run_baseline(AgentKind kind, const RunConfig& cfg, const std::filesystem::path& out_dir) {
  if (kind != AgentKind::random_fs && kind != AgentKind::topk_sim) {
    throw ConfigError("baseline kind must be random_fs or topk_sim");
  }
  RunConfig effective = cfg;
  effective.agent = kind;
  effective.validate();
  Prepared p = prepare(effective, nullptr);
  if (p.test.size() == 0) throw Error("baseline: empty test pool");

  const int k = effective.env.k;
  std::vector<std::pair<Example, CandidatePool>> episodes;
  episodes.reserve(p.test.size());
  for (std::size_t i = 0; i < p.test.size(); ++i) {
    const Example& input = p.test.examples()[i];
    CandidatePool pool;
    if (kind == AgentKind::topk_sim) {
      pool = build_pool(p.train, p.kb_vectors, p.tfidf.transform(input.text), k, k);
    } else {
      // k uniform KB picks without replacement, one stream per test input.
      Rng rng(derive_seed(effective.seed, kBaselineStream + i));
      std::vector<int> positions(p.train.size());
      for (std::size_t j = 0; j < positions.size(); ++j) positions[j] = static_cast<int>(j);
      for (int j = 0; j < k; ++j) {
        const auto swap_with =
            static_cast<std::size_t>(j) + rng.next_below(positions.size() - j);
        std::swap(positions[static_cast<std::size_t>(j)], positions[swap_with]);
      }
      for (int j = 0; j < k; ++j) {
        pool.ids.push_back(p.train.examples()[static_cast<std::size_t>(positions[j])].id);
        pool.scores.push_back(0.0);
      }
      pool.taken.assign(static_cast<std::size_t>(k), false);
    }
    episodes.emplace_back(input, std::move(pool));
  }

  // Both baselines consume their pre-ranked pool in order.
  Metrics m = eval_pass(episodes, p, effective,
                        [](const StateEmbedding&, StateKey, const std::vector<bool>& available) {
                          for (std::size_t i = 0; i < available.size(); ++i) {
                            if (available[i]) return static_cast<int>(i);
                          }
                          throw Error("baseline: no available slot");
                        });
  write_run_files(out_dir, m, effective);
  return m;
}

void save_checkpoint(const std::string& payload, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << kCheckpointHeader << ' ' << hex64(fnv1a64(payload.data(), payload.size())) << '\n'
      << payload;
}

std::string load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();

  const auto newline = content.find('\n');
  if (newline == std::string::npos) throw CheckpointError("checkpoint has no header line");
  const std::string header = content.substr(0, newline);
  const std::string payload = content.substr(newline + 1);

  std::istringstream hs(header);
  std::string magic;
  std::string checksum;
  hs >> magic >> checksum;
  if (magic != kCheckpointHeader) throw CheckpointError("not a checkpoint file");
  if (checksum != hex64(fnv1a64(payload.data(), payload.size()))) {
    throw CheckpointError("checkpoint checksum mismatch (corrupt or truncated file)");
  }
  return payload;
}

std::string metrics_to_json(const Metrics& m, const RunConfig& cfg) {
  json j;
  j["accuracy"] = m.accuracy;
  j["mean_diversity"] = m.mean_diversity;
  j["mean_return"] = m.mean_return;
  j["episodes"] = m.episodes;
  j["correct"] = m.correct;
  j["updates_performed"] = m.updates_performed;
  j["agent"] = to_string(cfg.agent);
  j["prompt_style"] = to_string(cfg.prompt_style);
  j["seed"] = cfg.seed;
  j["config_digest"] = cfg.digest();
  j["template_version"] = kTemplateVersion;
  if (!m.ppo_updates.empty()) {
    json updates = json::array();
    for (const auto& u : m.ppo_updates) {
      updates.push_back({{"update", u.update},
                         {"clip_old", u.clip_old},
                         {"clip_new", u.clip_new},
                         {"total_old", u.total_old},
                         {"total_new", u.total_new}});
    }
    j["ppo_updates"] = std::move(updates);
  }
  return j.dump(2) + "\n";
}

std::string episodes_to_jsonl(const Metrics& m) {
  std::string out;
  for (const auto& rec : m.episode_log) {
    json j;
    j["episode"] = rec.episode;
    j["input_id"] = rec.input_id;
    j["true_label"] = rec.true_label;
    j["selected"] = rec.selected_ids;
    j["prediction"] = rec.prediction;
    j["correct"] = rec.correct;
    j["parse_failed"] = rec.parse_failed;
    j["rewards"] = rec.rewards;
    j["diversity"] = rec.diversity;
    j["return"] = rec.discounted_return;
    j["t_start"] = rec.t_start;
    j["lambda"] = rec.lambda;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ReportRow> collect_report(const std::vector<std::filesystem::path>& run_dirs) {
  if (run_dirs.empty()) throw Error("report: no run directories given");
  std::vector<ReportRow> rows;
  for (const auto& dir : run_dirs) {
    std::ifstream in(dir / "metrics.json");
    if (!in) throw Error("report: cannot open " + (dir / "metrics.json").string());
    json j = json::parse(in);
    ReportRow row;
    row.run = dir.filename().string();
    row.agent = j.at("agent").get<std::string>();
    row.accuracy = j.at("accuracy").get<double>();
    row.mean_diversity = j.at("mean_diversity").get<double>();
    row.mean_return = j.at("mean_return").get<double>();
    row.episodes = j.at("episodes").get<long>();
    row.seed = j.at("seed").get<std::uint64_t>();
    row.config_digest = j.at("config_digest").get<std::string>();
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ReportRow& a, const ReportRow& b) { return a.accuracy > b.accuracy; });
  return rows;
}

namespace {

std::string number(double v) { return json(v).dump(); }

}  // namespace

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "run,agent,accuracy,mean_diversity,mean_return,episodes,seed,config_digest\n";
  for (const auto& r : rows) {
    out += r.run + "," + r.agent + "," + number(r.accuracy) + "," + number(r.mean_diversity) +
           "," + number(r.mean_return) + "," + std::to_string(r.episodes) + "," +
           std::to_string(r.seed) + "," + r.config_digest + "\n";
  }
  return out;
}

std::string report_text(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(24) << "run" << std::setw(12) << "agent" << std::right
     << std::setw(10) << "accuracy" << std::setw(12) << "diversity" << std::setw(12) << "return"
     << std::setw(10) << "episodes" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(24) << r.run << std::setw(12) << r.agent << std::right
       << std::fixed << std::setprecision(4) << std::setw(10) << r.accuracy << std::setw(12)
       << r.mean_diversity << std::setw(12) << r.mean_return << std::setw(10) << r.episodes
       << '\n';
  }
  return os.str();
}

}  // namespace rdes
