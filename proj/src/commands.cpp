#include "medsel/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "medsel/analysis.hpp"
#include "medsel/errors.hpp"
#include "medsel/manifest.hpp"
#include "medsel/provenance.hpp"
#include "medsel/selectors.hpp"
#include "medsel/tasks.hpp"
#include "medsel/trainer.hpp"

namespace medsel {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// Reads keys from one JSON object, remembers which were consumed so unknown
// keys can be rejected, and records the hashed part of the effective config.
class ConfigReader {
 public:
  ConfigReader(json obj, std::string prefix) : obj_(std::move(obj)), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError("config " + where() + "must be a JSON object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback, bool hashed = true) {
    T value = has(key) ? convert<T>(key) : std::move(fallback);
    used_.insert(key);
    if (hashed) effective_[key] = value;
    return value;
  }

  template <typename T>
  T require(const std::string& key, bool hashed = true) {
    if (!has(key)) throw ConfigError("missing required field '" + prefix_ + key + "'");
    return get<T>(key, T{}, hashed);
  }

  ConfigReader child(const std::string& key) {
    used_.insert(key);
    return ConfigReader(has(key) ? obj_.at(key) : json::object(), prefix_ + key + ".");
  }
  void record(const std::string& key, json value) { effective_[key] = std::move(value); }

  void finish() const {
    for (const auto& [key, value] : obj_.items())
      if (!used_.count(key)) throw ConfigError("unknown config key '" + prefix_ + key + "'");
  }
  const json& effective() const { return effective_; }

 private:
  std::string where() const { return prefix_.empty() ? "" : "'" + prefix_.substr(0, prefix_.size() - 1) + "' "; }

  template <typename T>
  T convert(const std::string& key) const {
    const json& v = obj_.at(key);
    auto bad = [&](const std::string& what) { return ConfigError("config key '" + prefix_ + key + "': " + what); };
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw bad("expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_unsigned()) throw bad("expected a non-negative integer");
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw bad("expected a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw bad("expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      if (v.is_number_unsigned()) return {v.get<std::size_t>()};
      if (!v.is_array()) throw bad("expected a list of non-negative integers");
      T out;
      for (const auto& e : v) {
        if (!e.is_number_unsigned()) throw bad("expected a list of non-negative integers");
        out.push_back(e.get<std::size_t>());
      }
      return out;
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      if (!v.is_array()) throw bad("expected a list of strings");
      T out;
      for (const auto& e : v) {
        if (!e.is_string()) throw bad("expected a list of strings");
        out.push_back(e.get<std::string>());
      }
      return out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

  json obj_;
  std::string prefix_;
  std::set<std::string> used_;
  json effective_ = json::object();
};

json load_config(const CommandOptions& o) {
  json cfg = json::object();
  if (o.config) {
    std::ifstream f(*o.config);
    if (!f) throw ConfigError("cannot read config file " + o.config->string());
    try {
      cfg = json::parse(f);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + o.config->string() + " is not valid JSON: " + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config file " + o.config->string() + " must hold a JSON object");
  }
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.workers) cfg["workers"] = *o.workers;
  if (o.strategy) cfg["strategy"] = *o.strategy;
  if (o.k) cfg["k"] = *o.k;
  if (o.out) cfg["out"] = o.out->string();
  if (o.data) cfg["data"] = o.data->string();
  if (o.checkpoint) cfg["checkpoints"]["medselect"] = o.checkpoint->string();
  if (o.clinical_checkpoint) cfg["checkpoints"]["clinical"] = o.clinical_checkpoint->string();
  if (o.epochs) cfg["epochs"] = *o.epochs;
  if (o.timing) cfg["timing"] = true;
  return cfg;
}

std::size_t read_workers(ConfigReader& r) {
  const auto w = r.get<std::size_t>("workers", 1, false);
  if (w == 0) throw ConfigError("workers must be positive");
  return w;
}

SelectionMode parse_mode(const std::string& s) {
  if (s == "sample") return SelectionMode::sample;
  if (s == "greedy") return SelectionMode::greedy;
  throw ConfigError("selection mode must be 'sample' or 'greedy', got '" + s + "'");
}

void prepare_outputs(const fs::path& dir, const std::vector<std::string>& names, bool force) {
  for (const auto& n : names)
    if (fs::exists(dir / n) && !force)
      throw ConfigError("refusing to overwrite " + (dir / n).string() + " (pass --force)");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw DataError("write to " + path.string() + " failed");
}

std::string csv_header(const ordered_json& prov) { return "# " + prov.dump() + "\n"; }

std::string num(double v) { return fmt::format("{}", v); }
std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

struct LoadedData {
  ItemStore store;
  SplitManifest manifest;
  std::string dataset_hash;
};

LoadedData load_data(const fs::path& dir) {
  const fs::path dataset = dir / "dataset.selx";
  if (!fs::exists(dataset)) throw DataError("no dataset.selx in " + dir.string());
  std::string hash = file_sha256(dataset);
  ItemStore store = load_embedding_file(dataset);
  SplitManifest manifest;
  for (SplitName split : {SplitName::train, SplitName::val, SplitName::test}) {
    const fs::path path = dir / fmt::format("tasks_{}.jsonl", split_name(split));
    ManifestFile mf = read_manifest(path);
    if (mf.header.value("dataset_hash", std::string()) != hash)
      throw DataError(path.string() + " was built from a different dataset (hash mismatch)");
    if (split == SplitName::test && mf.header.contains("holdout_conditions"))
      manifest.holdout_conditions = mf.header.at("holdout_conditions").get<std::set<std::uint32_t>>();
    auto& dst = split == SplitName::train ? manifest.train : split == SplitName::val ? manifest.val : manifest.test;
    dst = std::move(mf.tasks);
  }
  return {std::move(store), std::move(manifest), std::move(hash)};
}

json read_json_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + " is not valid JSON: " + e.what());
  }
}

fs::path sidecar_for(const fs::path& checkpoint) { return fs::path(checkpoint.string() + ".json"); }

struct LoadedSelector {
  SelectorParams params;
  std::string sha256;
};

// Weights plus the provenance checks that tie them to this dataset.
LoadedSelector load_selector(Strategy strategy, const fs::path& path, const std::string& dataset_hash,
                             std::size_t embedding_dim) {
  const fs::path side = sidecar_for(path);
  if (!fs::exists(side)) throw DataError("checkpoint " + path.string() + " has no provenance file " + side.string());
  const json meta = read_json_file(side);
  const std::string trained_on = meta.value("provenance", json::object()).value("dataset_hash", std::string());
  if (trained_on != dataset_hash)
    throw DataError("checkpoint " + path.string() + " was trained on a different dataset (hash mismatch)");
  if (meta.value("strategy", std::string()) != strategy_name(strategy))
    throw DataError("checkpoint " + path.string() + " holds " + meta.value("strategy", std::string("?")) +
                    " weights, expected " + std::string(strategy_name(strategy)));
  std::string sha = file_sha256(path);
  if (meta.value("sha256", std::string()) != sha)
    throw DataError("checkpoint " + path.string() + " does not match the hash in its provenance file");
  SelectorParams params = load_checkpoint(path);
  const std::size_t want = selector_input_dim(strategy, embedding_dim);
  if (params.input_dim() != want)
    throw DataError(fmt::format("checkpoint {} has input dimension {}, dataset needs {}", path.string(),
                                params.input_dim(), want));
  return {std::move(params), std::move(sha)};
}

ordered_json split_config_json(const SplitConfig& c) {
  ordered_json j;
  j["train_tasks"] = c.train_tasks;
  j["val_tasks"] = c.val_tasks;
  j["test_tasks"] = c.test_tasks;
  j["pool_size"] = c.pool_size;
  j["query_size"] = c.query_size;
  j["balance"] = c.balance;
  j["holdout_conditions"] = c.holdout_conditions;
  return j;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
  return 1;
}

void cmd_generate(const CommandOptions& options) {
  ConfigReader r(load_config(options), "");
  const auto seed = r.require<std::uint64_t>("seed");
  const fs::path out = r.require<std::string>("out", false);

  SynthConfig synth;
  {
    ConfigReader s = r.child("synthetic");
    synth.dim = s.get("dim", synth.dim);
    synth.n_conditions = s.get("n_conditions", synth.n_conditions);
    synth.positives_per_condition = s.get("positives_per_condition", synth.positives_per_condition);
    synth.no_finding_items = s.get("no_finding_items", synth.no_finding_items);
    synth.shared_offset_norm = s.get("shared_offset_norm", synth.shared_offset_norm);
    synth.condition_offset_norm = s.get("condition_offset_norm", synth.condition_offset_norm);
    synth.cluster_sigma = s.get("cluster_sigma", synth.cluster_sigma);
    synth.corruption_fraction = s.get("corruption_fraction", synth.corruption_fraction);
    synth.corruption_sigma = s.get("corruption_sigma", synth.corruption_sigma);
    synth.age_mean = s.get("age_mean", synth.age_mean);
    synth.age_sd = s.get("age_sd", synth.age_sd);
    synth.corrupted_age_shift = s.get("corrupted_age_shift", synth.corrupted_age_shift);
    synth.female_prob = s.get("female_prob", synth.female_prob);
    synth.frontal_prob_clean = s.get("frontal_prob_clean", synth.frontal_prob_clean);
    synth.frontal_prob_corrupted = s.get("frontal_prob_corrupted", synth.frontal_prob_corrupted);
    s.finish();
    r.record("synthetic", s.effective());
  }
  SplitConfig split;
  {
    ConfigReader s = r.child("split");
    split.train_tasks = s.get("train_tasks", split.train_tasks);
    split.val_tasks = s.get("val_tasks", split.val_tasks);
    split.test_tasks = s.get("test_tasks", split.test_tasks);
    split.pool_size = s.get("pool_size", split.pool_size);
    split.query_size = s.get("query_size", split.query_size);
    split.balance = s.get("balance", split.balance);
    const auto holdouts = s.get("holdout_conditions", std::vector<std::size_t>(split.holdout_conditions.begin(),
                                                                               split.holdout_conditions.end()));
    split.holdout_conditions.clear();
    for (std::size_t c : holdouts) {
      if (c >= synth.n_conditions)
        throw ConfigError(fmt::format("holdout condition {} is out of range (n_conditions={})", c, synth.n_conditions));
      split.holdout_conditions.insert(static_cast<std::uint32_t>(c));
    }
    split.train_fraction = s.get("train_fraction", split.train_fraction);
    split.val_fraction = s.get("val_fraction", split.val_fraction);
    s.finish();
    r.record("split", s.effective());
  }
  r.finish();
  synth.validate();
  split.validate();

  prepare_outputs(out, {"dataset.selx", "dataset.json", "tasks_train.jsonl", "tasks_val.jsonl", "tasks_test.jsonl"},
                  options.force);
  spdlog::info("generating {} conditions x {} positives + {} no-finding items, d={}", synth.n_conditions,
               synth.positives_per_condition, synth.no_finding_items, synth.dim);
  SeededRng data_rng(derive_seed(seed, {1}));
  const ItemStore store = generate_synthetic_dataset(synth, data_rng);
  SeededRng split_rng(derive_seed(seed, {2}));
  const SplitManifest manifest = build_split(store, split, split_rng);

  save_embedding_file(store, out / "dataset.selx");
  const std::string hash = file_sha256(out / "dataset.selx");
  const ordered_json prov = provenance("generate", r.effective(), seed, hash);

  ordered_json meta;
  meta["provenance"] = prov;
  meta["items"] = store.size();
  meta["dim"] = store.dim();
  meta["n_conditions"] = store.n_conditions();
  meta["config"] = r.effective();
  write_text(out / "dataset.json", meta.dump(2) + "\n");

  for (SplitName s : {SplitName::train, SplitName::val, SplitName::test}) {
    ordered_json header = prov;
    header["split"] = split_name(s);
    header["holdout_conditions"] = manifest.holdout_conditions;
    header["split_config"] = split_config_json(split);
    const auto& tasks = s == SplitName::train ? manifest.train : s == SplitName::val ? manifest.val : manifest.test;
    write_manifest(out / fmt::format("tasks_{}.jsonl", split_name(s)), tasks, header);
  }
  spdlog::info("wrote {} items and {}/{}/{} tasks to {}", store.size(), manifest.train.size(), manifest.val.size(),
               manifest.test.size(), out.string());
}

void cmd_train(const CommandOptions& options) {
  ConfigReader r(load_config(options), "");
  TrainConfig tc;
  tc.seed = r.require<std::uint64_t>("seed");
  const fs::path data = r.require<std::string>("data", false);
  const fs::path out = r.require<std::string>("out", false);
  const Strategy strategy = parse_strategy(r.get<std::string>("strategy", "medselect"));
  if (!is_trainable(strategy))
    throw ConfigError("strategy " + std::string(strategy_name(strategy)) + " is not trainable");
  tc.hidden = r.get("hidden", tc.hidden);
  tc.learning_rate = r.get("learning_rate", tc.learning_rate);
  tc.batch_size = r.get("batch_size", tc.batch_size);
  tc.epochs = r.get("epochs", tc.epochs);
  const auto ks = r.get<std::vector<std::size_t>>("k", {tc.k});
  if (ks.size() != 1) throw ConfigError("train takes a single k");
  tc.k = ks.front();
  tc.beta1 = r.get("beta1", tc.beta1);
  tc.beta2 = r.get("beta2", tc.beta2);
  tc.adam_eps = r.get("adam_eps", tc.adam_eps);
  tc.val_every = r.get("val_every", tc.val_every);
  tc.baseline_draws = r.get("baseline_draws", tc.baseline_draws);
  tc.clip_norm = r.get("clip_norm", tc.clip_norm);
  tc.validation_mode = parse_mode(r.get<std::string>("validation_mode", "sample"));
  tc.workers = read_workers(r);
  const bool timing = r.get("timing", false, false);
  r.finish();
  tc.validate();

  const LoadedData loaded = load_data(data);
  const EpisodeSplit split = materialize(loaded.store, loaded.manifest);
  if (split.meta_train.empty()) throw DataError("the meta-train split is empty");

  const std::vector<std::string> names = {"best.selw", "best.selw.json", "final.selw", "final.selw.json",
                                          "final.adam", "train_log.jsonl"};
  prepare_outputs(out, names, options.force);
  const ordered_json prov = provenance("train", r.effective(), tc.seed, loaded.dataset_hash);

  std::ofstream log(out / "train_log.jsonl", std::ios::binary | std::ios::trunc);
  if (!log) throw DataError("cannot open " + (out / "train_log.jsonl").string());
  log << ordered_json{{"header", prov}}.dump() << '\n' << std::flush;

  TrainHooks hooks;
  hooks.record_wall_time = timing;
  hooks.dump_dir = out;
  hooks.on_log = [&](const TrainLogEntry& e) {
    ordered_json j;
    j["step"] = e.step;
    j["epoch"] = e.epoch;
    j["mean_R"] = e.mean_reward;
    j["mean_b"] = e.mean_baseline;
    j["mean_adv"] = e.mean_advantage;
    if (e.val_reward) j["val_reward"] = *e.val_reward;
    if (e.wall_ms) j["wall_ms"] = *e.wall_ms;
    log << j.dump() << '\n' << std::flush;
    spdlog::info("step {} epoch {} mean_R {:.4f} mean_b {:.4f} mean_adv {:+.4f}{}", e.step, e.epoch, e.mean_reward,
                 e.mean_baseline, e.mean_advantage,
                 e.val_reward ? fmt::format(" val {:.4f}", *e.val_reward) : std::string());
  };
  spdlog::info("training {} on {} tasks ({} validation), k={}, H={}, {} epochs", strategy_name(strategy),
               split.meta_train.size(), split.meta_val.size(), tc.k, tc.hidden, tc.epochs);
  const TrainResult result = train(tc, split.meta_train, split.meta_val, strategy, loaded.store.dim(), hooks);

  auto write_weights = [&](const SelectorParams& params, const std::string& name, std::uint64_t step,
                           const std::optional<double>& val) {
    save_checkpoint(params, out / name);
    ordered_json meta;
    meta["provenance"] = prov;
    meta["strategy"] = strategy_name(strategy);
    meta["input_dim"] = params.input_dim();
    meta["hidden"] = params.hidden();
    meta["k"] = tc.k;
    meta["step"] = step;
    if (val) meta["val_reward"] = *val;
    meta["sha256"] = file_sha256(out / name);
    write_text(sidecar_for(out / name), meta.dump(2) + "\n");
  };
  write_weights(result.best, "best.selw", result.best_step, result.best_val);
  const std::uint64_t final_step = result.log.empty() ? 0 : result.log.back().step;
  std::optional<double> final_val = result.initial_val;
  for (const auto& e : result.log)
    if (e.val_reward) final_val = e.val_reward;
  write_weights(result.final_params, "final.selw", final_step, final_val);
  save_adam_state(result.adam, out / "final.adam");
  spdlog::info("best validation reward {} at step {}", num(result.best_val), result.best_step);
}

namespace {

struct EvalSetup {
  std::uint64_t seed = 0;
  fs::path out;
  std::vector<Strategy> strategies;
  std::vector<std::size_t> ks;
  SelectionMode mode = SelectionMode::sample;
  std::size_t workers = 1;
  std::size_t resamples = 10000;
  Strategy subject = Strategy::medselect;
  std::map<Strategy, SelectorParams> weights;
  LoadedData data{ItemStore(1, 1, {}), {}, {}};
  std::vector<Task> tasks;
  std::string split;
};

EvalSetup read_eval_setup(ConfigReader& r, std::vector<std::string> default_strategies,
                          std::vector<std::size_t> default_ks) {
  EvalSetup s;
  s.seed = r.require<std::uint64_t>("seed");
  const fs::path data = r.require<std::string>("data", false);
  s.out = r.require<std::string>("out", false);
  s.split = r.get<std::string>("split", "test");
  if (s.split != "test" && s.split != "val") throw ConfigError("split must be 'test' or 'val'");
  for (const auto& name : r.get("strategies", default_strategies)) {
    const Strategy st = parse_strategy(name);
    if (std::find(s.strategies.begin(), s.strategies.end(), st) != s.strategies.end())
      throw ConfigError("strategy " + name + " listed twice");
    s.strategies.push_back(st);
  }
  if (s.strategies.empty()) throw ConfigError("no strategies requested");
  s.ks = r.get("k", default_ks);
  if (s.ks.empty()) throw ConfigError("no k values requested");
  for (std::size_t k : s.ks)
    if (k == 0) throw ConfigError("k must be positive");
  s.mode = parse_mode(r.get<std::string>("selection_mode", "sample"));
  s.subject = parse_strategy(r.get<std::string>("subject", "medselect"));
  s.resamples = r.get("bootstrap_resamples", s.resamples);
  if (s.resamples == 0) throw ConfigError("bootstrap_resamples must be positive");
  s.workers = read_workers(r);

  ConfigReader ck = r.child("checkpoints");
  std::map<Strategy, fs::path> paths;
  for (Strategy st : {Strategy::medselect, Strategy::clinical}) {
    const std::string name(strategy_name(st));
    if (ck.has(name)) paths[st] = ck.get<std::string>(name, "", false);
  }
  ck.finish();

  s.data = load_data(data);
  json shas = json::object();
  for (Strategy st : s.strategies) {
    if (!is_trainable(st)) continue;
    const auto it = paths.find(st);
    if (it == paths.end())
      throw ConfigError("strategy " + std::string(strategy_name(st)) + " needs a checkpoint (checkpoints." +
                        std::string(strategy_name(st)) + ")");
    LoadedSelector sel = load_selector(st, it->second, s.data.dataset_hash, s.data.store.dim());
    shas[std::string(strategy_name(st))] = sel.sha256;
    s.weights.emplace(st, std::move(sel.params));
  }
  r.record("checkpoint_sha256", shas);
  s.tasks = materialize(s.data.store, s.split == "test" ? s.data.manifest.test : s.data.manifest.val);
  if (s.tasks.empty()) throw DataError("the " + s.split + " split is empty");
  for (std::size_t k : s.ks)
    for (const Task& t : s.tasks)
      if (k > t.pool_size())
        throw ConfigError(fmt::format("k={} exceeds pool size {} of task {}", k, t.pool_size(), t.id()));
  return s;
}

std::vector<SelectionProfile> run_profiles(const EvalSetup& s, std::uint64_t seed) {
  std::vector<SelectionProfile> profiles;
  for (std::size_t k : s.ks)
    for (Strategy st : s.strategies) {
      const auto it = s.weights.find(st);
      const SelectorParams* params = it == s.weights.end() ? nullptr : &it->second;
      spdlog::info("selecting with {} at k={} on {} tasks", strategy_name(st), k, s.tasks.size());
      profiles.push_back(profile_selections(st, params, s.tasks, k, seed, s.mode, s.workers));
    }
  return profiles;
}

std::string summary_csv(const ComparisonReport& rep, const ordered_json& prov) {
  std::string out = csv_header(prov) + "k,strategy,group,n_tasks,mean_auroc,ci_lower,ci_upper\n";
  for (const auto& s : rep.summaries)
    out += fmt::format("{},{},{},{},{},{},{}\n", s.k, strategy_name(s.strategy), group_name(s.group), s.n_tasks,
                       num(s.auroc.estimate), num(s.auroc.lower), num(s.auroc.upper));
  return out;
}

std::string improvements_csv(const ComparisonReport& rep, const ordered_json& prov) {
  std::string out = csv_header(prov) + "k,group,subject,reference,n_tasks,mean_difference,ci_lower,ci_upper\n";
  for (const auto& m : rep.improvements)
    out += fmt::format("{},{},{},{},{},{},{},{}\n", m.k, group_name(m.group), strategy_name(m.subject),
                       strategy_name(m.reference), m.n_tasks, num(m.difference.estimate), num(m.difference.lower),
                       num(m.difference.upper));
  return out;
}

ordered_json ci_json(const BootstrapCI& ci) {
  return ordered_json{{"mean", ci.estimate}, {"lower", ci.lower}, {"upper", ci.upper}};
}

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

}  // namespace

void cmd_evaluate(const CommandOptions& options) {
  ConfigReader r(load_config(options), "");
  EvalSetup s = read_eval_setup(r, {"medselect", "kmedoids", "random"}, {5, 10, 20, 40});
  r.finish();
  prepare_outputs(s.out, {"rewards.csv", "summary.csv", "improvements.csv"}, options.force);
  const ordered_json prov = provenance("evaluate", r.effective(), s.seed, s.data.dataset_hash);

  const auto profiles = run_profiles(s, s.seed);
  CompareOptions co;
  co.subject = s.subject;
  co.bootstrap_resamples = s.resamples;
  co.bootstrap_seed = derive_seed(s.seed, {3});
  const ComparisonReport rep = compare(profiles, {}, co);

  std::string rewards = csv_header(prov) + "strategy,k,task_id,condition,holdout,reward\n";
  for (const auto& p : profiles)
    for (const auto& rec : p.records)
      rewards += fmt::format("{},{},{},{},{},{}\n", strategy_name(p.strategy), p.k, rec.task_id, rec.condition,
                             rec.holdout ? 1 : 0, num(rec.reward));
  write_text(s.out / "rewards.csv", rewards);
  write_text(s.out / "summary.csv", summary_csv(rep, prov));
  write_text(s.out / "improvements.csv", improvements_csv(rep, prov));
  for (const auto& m : rep.summaries)
    spdlog::info("k={} {} {}: mean AUROC {:.4f} [{:.4f}, {:.4f}]", m.k, strategy_name(m.strategy),
                 group_name(m.group), m.auroc.estimate, m.auroc.lower, m.auroc.upper);
}

void cmd_analyze(const CommandOptions& options) {
  ConfigReader r(load_config(options), "");
  EvalSetup s = read_eval_setup(r, {"medselect", "kmedoids", "random"}, {10});
  const auto control_seed = r.get<std::uint64_t>("control_seed", s.seed + 1);
  r.finish();
  if (std::find(s.strategies.begin(), s.strategies.end(), Strategy::random) == s.strategies.end())
    s.strategies.push_back(Strategy::random);  // W1 distances are taken against random selections
  prepare_outputs(s.out, {"report.json", "ttests.csv", "wasserstein.csv", "profiles.jsonl"}, options.force);
  const ordered_json prov = provenance("analyze", r.effective(), s.seed, s.data.dataset_hash);

  const auto profiles = run_profiles(s, s.seed);
  std::vector<SelectionProfile> controls;
  for (std::size_t k : s.ks) {
    spdlog::info("random control selections at k={} (seed {})", k, control_seed);
    controls.push_back(profile_selections(Strategy::random, nullptr, s.tasks, k, control_seed, s.mode, s.workers));
  }
  CompareOptions co;
  co.subject = s.subject;
  co.bootstrap_resamples = s.resamples;
  co.bootstrap_seed = derive_seed(s.seed, {3});
  const ComparisonReport rep = compare(profiles, controls, co);

  ordered_json report;
  report["provenance"] = prov;
  report["subject"] = strategy_name(s.subject);
  report["split"] = s.split;
  report["k"] = s.ks;
  report["summaries"] = ordered_json::array();
  for (const auto& m : rep.summaries)
    report["summaries"].push_back({{"k", m.k},
                                   {"strategy", strategy_name(m.strategy)},
                                   {"group", group_name(m.group)},
                                   {"n_tasks", m.n_tasks},
                                   {"auroc", ci_json(m.auroc)}});
  report["improvements"] = ordered_json::array();
  for (const auto& m : rep.improvements)
    report["improvements"].push_back({{"k", m.k},
                                      {"group", group_name(m.group)},
                                      {"subject", strategy_name(m.subject)},
                                      {"reference", strategy_name(m.reference)},
                                      {"n_tasks", m.n_tasks},
                                      {"difference", ci_json(m.difference)}});
  report["ttests"] = ordered_json::array();
  std::string ttests = csv_header(prov) + "k,group,feature,subject,reference,subject_mean,reference_mean,t,p,dof\n";
  for (const auto& t : rep.ttests) {
    report["ttests"].push_back({{"k", t.k},
                                {"group", group_name(t.group)},
                                {"feature", t.feature},
                                {"subject", strategy_name(t.subject)},
                                {"reference", strategy_name(t.reference)},
                                {"subject_mean", t.subject_mean},
                                {"reference_mean", t.reference_mean},
                                {"t", optional_json(t.t)},
                                {"p", optional_json(t.p)},
                                {"dof", optional_json(t.dof)}});
    ttests += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", t.k, group_name(t.group), t.feature,
                          strategy_name(t.subject), strategy_name(t.reference), num(t.subject_mean),
                          num(t.reference_mean), num(t.t), num(t.p), num(t.dof));
  }
  report["wasserstein"] = ordered_json::array();
  for (const auto& w : rep.wasserstein_summaries)
    report["wasserstein"].push_back({{"k", w.k},
                                     {"group", group_name(w.group)},
                                     {"comparison", w.comparison},
                                     {"n_tasks", w.n_tasks},
                                     {"mean_pairwise_l2", optional_json(w.mean_pairwise_l2)},
                                     {"mean_age", w.mean_age}});
  std::string wcsv = csv_header(prov) + "k,task_id,holdout,comparison,pairwise_l2,age\n";
  for (const auto& w : rep.wasserstein)
    wcsv += fmt::format("{},{},{},{},{},{}\n", w.k, w.task_id, w.holdout ? 1 : 0, w.comparison, num(w.pairwise_l2),
                        num(w.age));

  std::string prof = ordered_json{{"header", prov}}.dump() + "\n";
  auto profile_lines = [&](const SelectionProfile& p, const char* role) {
    for (const auto& rec : p.records) {
      ordered_json j;
      j["role"] = role;
      j["strategy"] = strategy_name(p.strategy);
      j["k"] = p.k;
      j["task_id"] = rec.task_id;
      j["holdout"] = rec.holdout;
      j["item_ids"] = rec.item_ids;
      j["frontal_fraction"] = rec.frontal_fraction;
      j["female_fraction"] = rec.female_fraction;
      j["mean_age"] = rec.mean_age;
      j["pairwise_mean"] = rec.pairwise_mean;
      j["pairwise_max"] = rec.pairwise_max;
      j["reward"] = rec.reward;
      prof += j.dump() + "\n";
    }
  };
  for (const auto& p : profiles) profile_lines(p, "selection");
  for (const auto& p : controls) profile_lines(p, "control");

  write_text(s.out / "report.json", report.dump(2) + "\n");
  write_text(s.out / "ttests.csv", ttests);
  write_text(s.out / "wasserstein.csv", wcsv);
  write_text(s.out / "profiles.jsonl", prof);
  for (const auto& w : rep.wasserstein_summaries)
    spdlog::info("k={} {} {}: mean W1 pairwise {} age {:.4f}", w.k, group_name(w.group), w.comparison,
                 num(w.mean_pairwise_l2), w.mean_age);
}

}  // namespace medsel
