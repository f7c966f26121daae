// gre: command-line front end for the geo-reasoning toolkit.
//
// Exit codes: 0 success, 2 runtime failure, 64 usage or validation error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "gre/config.hpp"
#include "gre/datapipe.hpp"
#include "gre/evalbench.hpp"
#include "gre/jsonl.hpp"
#include "gre/kernels.hpp"
#include "gre/reward.hpp"
#include "gre/scorer.hpp"
#include "gre/toy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 2;
constexpr int kExitUsage = 64;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Context {
  std::string config_path;
  gre::KeyValues flags;
  std::vector<std::string> argv;

  gre::GlobalConfig resolve() const {
    gre::KeyValues file;
    if (!config_path.empty()) file = gre::load_config_file(config_path);
    std::optional<std::string> env_seed;
    if (const char* s = std::getenv("GRE_SEED"); s != nullptr && *s != '\0') env_seed = s;
    return gre::resolve_config(flags, file, env_seed);
  }
};

void add_config_flag(CLI::App* cmd, Context& ctx, const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
      "--" + key, [&ctx, key](const std::string& v) { ctx.flags[key] = v; }, help);
}

std::uint64_t fnv1a64(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw gre::IoError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

json describe_input(const fs::path& path) {
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(path);
  return {{"path", path.string()}, {"bytes", fs::file_size(path)}, {"fnv1a64", hex.str()}};
}

json manifest(const Context& ctx, const std::string& command, const gre::GlobalConfig& cfg,
              const std::vector<fs::path>& inputs) {
  json in = json::array();
  for (const auto& p : inputs) in.push_back(describe_input(p));
  return {{"tool", "gre"},
          {"version", GRE_VERSION},
          {"command", command},
          {"argv", ctx.argv},
          {"config", gre::to_json(cfg)},
          {"kernel_isa", std::string(gre::kernels::isa_name(gre::kernels::active_isa()))},
          {"inputs", in}};
}

std::vector<json> to_rows(const auto& records) {
  std::vector<json> rows;
  rows.reserve(records.size());
  using gre::to_json;
  for (const auto& r : records) rows.push_back(to_json(r));
  return rows;
}

gre::RewardConfig reward_config(const gre::GlobalConfig& c) {
  gre::RewardConfig r{c.theta_km, c.accuracy_weight, c.format_weight};
  r.validate();
  return r;
}

// ---------------------------------------------------------------- split

struct SplitArgs {
  std::string in;
  std::string out_dir;
};

int run_split(const Context& ctx, const SplitArgs& a) {
  const gre::GlobalConfig cfg = ctx.resolve();
  gre::LoadedGenerated loaded = gre::load_generated(a.in);
  gre::SplitResult split =
      gre::split_generated(loaded.records, {cfg.theta_km, cfg.truth_ratio, cfg.seed});

  // Lines that never became records are rejects too.
  gre::SplitCounts counts = split.counts;
  counts.input += loaded.rejects.size();
  counts.rejects += loaded.rejects.size();
  std::vector<gre::RejectRecord> rejects = std::move(loaded.rejects);
  rejects.insert(rejects.end(), split.rejects.begin(), split.rejects.end());

  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  gre::write_jsonl(dir / "cot.jsonl", to_rows(split.cot));
  gre::write_jsonl(dir / "judge.jsonl", to_rows(split.judge));
  gre::write_jsonl(dir / "rejects.jsonl", to_rows(rejects));
  json m = manifest(ctx, "split", cfg, {a.in});
  m["counts"] = gre::to_json(counts);
  gre::write_json(dir / "manifest.json", m);

  std::cout << "input " << counts.input << "  cot " << counts.cot << "  judge_false "
            << counts.judge_false << "  judge_truth " << counts.judge_truth << "  rejects "
            << counts.rejects << '\n';
  return 0;
}

// ---------------------------------------------------------------- reward

struct RewardArgs {
  std::string text_file;
  bool from_stdin = false;
  std::string truth;
  int stage = 2;
};

int run_reward(const Context& ctx, const RewardArgs& a) {
  const gre::GlobalConfig cfg = ctx.resolve();
  const gre::RewardConfig rcfg = reward_config(cfg);

  std::string text;
  if (a.from_stdin) {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    text = ss.str();
  } else {
    std::ifstream in(a.text_file, std::ios::binary);
    if (!in) throw gre::IoError("cannot open " + a.text_file);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }

  gre::RewardBreakdown rb;
  json truth;
  if (a.stage == 1) {
    if (gre::parse_coordinate(a.truth)) {
      throw UsageError("stage 1 expects a boolean truth label, got a coordinate");
    }
    const auto label = gre::extract_label(a.truth);
    if (!label) throw UsageError("stage 1 truth must be true/false, got '" + a.truth + "'");
    rb = gre::stage1_reward(text, *label, rcfg);
    truth = *label;
  } else {
    const auto coord = gre::parse_coordinate(a.truth);
    if (!coord) throw UsageError("stage 2 truth must be a coordinate \"(lat, lon)\"");
    rb = gre::stage2_reward(text, *coord, rcfg);
    truth = gre::coordinate_to_json(*coord);
  }

  std::vector<fs::path> inputs;
  if (!a.from_stdin) inputs.emplace_back(a.text_file);
  json out{{"stage", a.stage},
           {"truth", truth},
           {"format", rb.format},
           {"accuracy", rb.accuracy},
           {"total", rb.total},
           {"manifest", manifest(ctx, "reward", cfg, inputs)}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------- train-toy

struct TrainArgs {
  std::string stage = "1";
  std::string out_dir;
  std::size_t instances = 16;
  std::string truth_cells = "14";
  std::string init = "cold-start";
  double cold_start_mass = 0.9;
  std::size_t prompts_per_step = 1;
  std::size_t eval_samples = 2000;
};

std::vector<std::size_t> parse_cells(const std::string& text, std::size_t limit) {
  std::vector<std::size_t> cells;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size() || v >= limit) {
      throw UsageError("--truth-cells: '" + item + "' is not a cell index below " +
                       std::to_string(limit));
    }
    cells.push_back(v);
  }
  if (cells.empty()) throw UsageError("--truth-cells is empty");
  return cells;
}

int run_train(const Context& ctx, const TrainArgs& a) {
  const gre::GlobalConfig cfg = ctx.resolve();
  const gre::RewardConfig rcfg = reward_config(cfg);
  const gre::GrpoConfig gcfg{cfg.clip_epsilon, cfg.kl_beta, 1e-8};

  gre::toy::ToyEnvironment env;
  std::string env_desc;
  if (a.stage == "1" || a.stage == "judge") {
    if (a.instances < 2) throw UsageError("--instances must be at least 2");
    env = gre::toy::make_judge_env(a.instances, cfg.theta_km, cfg.seed);
    env_desc = "judge: " + std::to_string(a.instances) + " balanced instances";
  } else if (a.stage == "2" || a.stage == "geo") {
    const gre::toy::GeoGrid grid;
    env = gre::toy::make_geo_grid_env(grid, parse_cells(a.truth_cells, grid.cell_count()));
    env_desc = "geo_grid: 6x6 over lat [48, 49.2] lon [1.8, 3], truth cells " + a.truth_cells;
  } else {
    throw UsageError("--stage must be 1, 2, judge or geo");
  }

  gre::toy::ToyPolicy initial = a.init == "uniform"
                                    ? gre::toy::make_uniform_policy(env)
                                    : gre::toy::make_cold_start_policy(env, a.cold_start_mass);

  gre::toy::TrainOptions opts;
  opts.steps = cfg.steps;
  opts.lr = cfg.lr;
  opts.group_size = cfg.group_size;
  opts.seed = cfg.seed;
  opts.prompts_per_step = a.prompts_per_step;

  const gre::toy::PolicyEvaluation before =
      gre::toy::evaluate_policy(env, initial, a.eval_samples, cfg.seed, rcfg);
  const gre::toy::TrainResult trained = gre::toy::train_stage(env, initial, gcfg, rcfg, opts);
  const gre::toy::PolicyEvaluation after =
      gre::toy::evaluate_policy(env, trained.policy, a.eval_samples, cfg.seed, rcfg);

  gre::toy::RunManifest rm{cfg.seed, env.kind, gcfg, rcfg, opts, env_desc,
                           std::string(gre::kernels::isa_name(gre::kernels::active_isa())),
                           GRE_VERSION};
  json m = manifest(ctx, "train-toy", cfg, {});
  m["run"] = gre::toy::to_json(rm);
  m["init"] = {{"kind", a.init}, {"cold_start_mass", a.cold_start_mass}};
  m["eval_samples"] = a.eval_samples;

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  gre::write_jsonl(dir / "curve.jsonl", to_rows(trained.curve));
  gre::write_json(dir / "manifest.json", m);
  gre::write_json(dir / "evaluation.json",
                  {{"initial", gre::toy::to_json(before)}, {"final", gre::toy::to_json(after)}});

  std::cout << "stage " << gre::toy::to_string(env.kind) << ": mean reward " << std::fixed
            << std::setprecision(4) << before.mean_reward << " -> " << after.mean_reward
            << " after " << opts.steps << " steps\n";
  std::cout << "final mean reward " << after.mean_reward << '\n';
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred;
  std::string corpus;
  std::string scorer_cmd;
  std::optional<double> mock_score;
  std::string report;
  std::string recall_dump;
  bool json_only = false;
  int scorer_timeout_ms = 30000;
};

std::vector<gre::PredictionRecord> load_predictions(const fs::path& path) {
  std::vector<gre::PredictionRecord> out;
  std::set<std::string> ids;
  gre::for_each_jsonl(path, [&](const gre::JsonLine& line) {
    const std::string where = path.string() + ":" + std::to_string(line.line) + ": ";
    if (!line.value) throw std::runtime_error(where + "malformed JSON: " + line.error);
    try {
      out.push_back(gre::prediction_from_json(*line.value));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(where + e.what());
    }
    if (!ids.insert(out.back().id).second) throw std::runtime_error(where + "duplicate id");
  });
  return out;
}

gre::CorpusIndex load_corpus(const fs::path& path) {
  gre::CorpusIndex index;
  gre::for_each_jsonl(path, [&](const gre::JsonLine& line) {
    const std::string where = path.string() + ":" + std::to_string(line.line) + ": ";
    if (!line.value) throw std::runtime_error(where + "malformed JSON: " + line.error);
    try {
      auto [id, entries] = gre::corpus_entry_from_json(*line.value);
      auto& slot = index[id];
      slot.insert(slot.end(), entries.begin(), entries.end());
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(where + e.what());
    }
  });
  return index;
}

void print_table(std::ostream& os, const gre::ThresholdReport& t,
                 const std::optional<gre::CotBatchReport>& cot) {
  os << std::left << std::setw(14) << "" << std::right;
  for (double km : t.thresholds_km) os << std::setw(11) << gre::threshold_label(km);
  os << '\n' << std::left << std::setw(14) << "threshold" << std::right;
  for (double km : t.thresholds_km) {
    std::ostringstream s;
    s << km << " km";
    os << std::setw(11) << s.str();
  }
  os << '\n' << std::left << std::setw(14) << "accuracy %" << std::right << std::fixed
     << std::setprecision(1);
  for (double pct : t.accuracy_pct) os << std::setw(11) << pct;
  os << "\n\nn = " << t.n << " (unparsed " << t.unparsed << ")\n";
  if (cot) {
    os << std::setprecision(4);
    if (cot->mean) {
      os << "CoT quality " << cot->mean->cot_quality << " (x100 " << std::setprecision(2)
         << 100.0 * cot->mean->cot_quality << std::setprecision(4) << ")  recall "
         << cot->mean->recall << "  refclip " << cot->mean->refclip_score << "  bert "
         << cot->mean->bert_score << '\n';
    } else {
      os << "CoT quality: no scored records\n";
    }
    os << "scored " << cot->scored << "  excluded (no steps) " << cot->excluded_no_steps
       << "  errored " << cot->errored << "  clamped " << cot->clamped_scores;
    if (cot->scorer_categorized > 0) {
      os << "  scorer-categorized steps " << cot->scorer_categorized << " (non-deterministic)";
    }
    os << '\n';
  }
}

int run_eval(const Context& ctx, const EvalArgs& a) {
  const gre::GlobalConfig cfg = ctx.resolve();
  if (!a.corpus.empty() && a.scorer_cmd.empty() && !a.mock_score) {
    throw UsageError("--corpus needs --scorer-cmd or --mock-scorer");
  }
  if (a.mock_score && !(*a.mock_score >= 0.0 && *a.mock_score <= 1.0)) {
    throw UsageError("--mock-scorer must lie in [0, 1]");
  }
  if (a.scorer_timeout_ms <= 0) throw UsageError("--scorer-timeout-ms must be positive");
  if (!a.recall_dump.empty() && a.corpus.empty()) throw UsageError("--recall-dump needs --corpus");

  const std::vector<gre::PredictionRecord> preds = load_predictions(a.pred);
  if (preds.empty()) throw std::runtime_error(a.pred + ": no predictions");
  const gre::ThresholdReport thresholds = gre::threshold_metrics(preds, cfg.thresholds_km);

  std::vector<fs::path> inputs{a.pred};
  std::optional<gre::CotBatchReport> cot;
  std::string scorer_desc;
  if (!a.corpus.empty()) {
    inputs.emplace_back(a.corpus);
    const gre::CorpusIndex corpus = load_corpus(a.corpus);
    std::unique_ptr<gre::ScorerClient> scorer;
    if (a.mock_score) {
      scorer = std::make_unique<gre::MockScorer>(*a.mock_score);
    } else {
      scorer = std::make_unique<gre::ProcessScorer>(a.scorer_cmd,
                                                    std::chrono::milliseconds(a.scorer_timeout_ms));
    }
    scorer_desc = scorer->describe();
    cot = gre::evaluate_cot_batch(preds, corpus, *scorer);
  }

  json m = manifest(ctx, "eval", cfg, inputs);
  m["scorer"] = scorer_desc.empty() ? json(nullptr) : json(scorer_desc);
  json report{{"thresholds", gre::to_json(thresholds)},
              {"cot", cot ? gre::to_json(*cot) : json(nullptr)},
              {"manifest", m}};
  if (!a.report.empty()) gre::write_json(a.report, report);
  if (!a.recall_dump.empty()) {
    std::vector<json> rows;
    for (const auto& r : cot->records) {
      if (!r.recall) continue;
      json row = gre::to_json(*r.recall);
      row["id"] = r.id;
      rows.push_back(std::move(row));
    }
    gre::write_jsonl(a.recall_dump, rows);
  }
  if (a.json_only) {
    std::cout << report.dump(2) << '\n';
  } else {
    print_table(std::cout, thresholds, cot);
  }
  return 0;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
  std::string file;
  std::string schema;
};

int run_validate(const Context& ctx, const ValidateArgs& a) {
  const gre::GlobalConfig cfg = ctx.resolve();
  const auto schema = gre::parse_schema(a.schema);
  if (!schema) throw UsageError("--schema must be generated, cot, judge or prediction");
  const gre::ValidationReport rep = gre::validate_file(a.file, *schema, cfg.theta_km);
  json out = gre::to_json(rep);
  out["schema"] = a.schema;
  out["manifest"] = manifest(ctx, "validate", cfg, {a.file});
  std::cout << out.dump(2) << '\n';
  return rep.ok() ? 0 : kExitRuntime;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  std::string in;
  std::string out;
  double fraction = 0.1;
};

int run_sample(const Context& ctx, const SampleArgs& a) {
  const gre::GlobalConfig cfg = ctx.resolve();
  if (!(a.fraction > 0.0 && a.fraction <= 1.0)) throw UsageError("--fraction must lie in (0, 1]");
  const gre::LoadedGenerated loaded = gre::load_generated(a.in);
  if (!loaded.rejects.empty()) {
    const auto& r = loaded.rejects.front();
    throw std::runtime_error(a.in + ":" + std::to_string(r.line) + ": " + r.reason + ": " + r.detail);
  }
  if (loaded.records.empty()) throw std::runtime_error(a.in + ": no records");
  const auto picked = gre::sample_split(loaded.records, a.fraction, cfg.seed);
  gre::write_jsonl(a.out, to_rows(picked));
  json m = manifest(ctx, "sample", cfg, {a.in});
  m["fraction"] = a.fraction;
  m["selected"] = picked.size();
  gre::write_json(a.out + ".manifest.json", m);
  std::cout << "selected " << picked.size() << " of " << loaded.records.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.argv.assign(argv, argv + argc);

  CLI::App app{
      "gre: geo-reasoning reward, GRPO toy training, dataset splitting and benchmark scoring.\n"
      "Distances are great-circle (haversine) on a sphere of radius 6371.0088 km."};
  app.set_version_flag("--version", std::string(GRE_VERSION));
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", ctx.config_path, "key = value config file (flags take precedence)")
      ->check(CLI::ExistingFile);

  int rc = 0;

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Split generated records into CoT and judge sets");
  split_cmd->add_option("--in", split.in, "Generated records (JSONL)")->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--out-dir", split.out_dir, "Output directory")->required();
  add_config_flag(split_cmd, ctx, "theta-km", "Distance threshold in km (default 25)");
  add_config_flag(split_cmd, ctx, "truth-ratio", "Truth judge entries per False entry (default 1)");
  add_config_flag(split_cmd, ctx, "seed", "Seed for Truth sampling");
  split_cmd->callback([&] { rc = run_split(ctx, split); });

  RewardArgs reward;
  auto* reward_cmd = app.add_subcommand("reward", "Score one response with the rule-based rewards");
  auto* text_opt = reward_cmd->add_option("--text-file", reward.text_file, "Response text file");
  auto* stdin_opt = reward_cmd->add_flag("--stdin", reward.from_stdin, "Read the response from stdin");
  text_opt->excludes(stdin_opt);
  reward_cmd->add_option("--truth", reward.truth, "true/false (stage 1) or \"(lat, lon)\" (stage 2)")
      ->required();
  reward_cmd->add_option("--stage", reward.stage, "1 = judgment, 2 = coordinates")
      ->check(CLI::IsMember({1, 2}));
  add_config_flag(reward_cmd, ctx, "theta-km", "Geodesic reward scale in km (default 25)");
  add_config_flag(reward_cmd, ctx, "accuracy-weight", "Accuracy weight (default 1)");
  add_config_flag(reward_cmd, ctx, "format-weight", "Format weight (default 1)");
  reward_cmd->callback([&] {
    if (reward.text_file.empty() && !reward.from_stdin) {
      throw CLI::RequiredError("--text-file or --stdin");
    }
    rc = run_reward(ctx, reward);
  });

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-toy", "GRPO on the toy judge or coordinate-grid task");
  train_cmd->add_option("--stage", train.stage, "1|judge or 2|geo")->capture_default_str();
  train_cmd->add_option("--out-dir", train.out_dir, "Run directory")->required();
  train_cmd->add_option("--instances", train.instances, "Judge instances")->capture_default_str();
  train_cmd->add_option("--truth-cells", train.truth_cells, "Comma-separated grid cells (0-35)")
      ->capture_default_str();
  train_cmd->add_option("--init", train.init, "Initial policy")
      ->check(CLI::IsMember({"cold-start", "uniform"}))
      ->capture_default_str();
  train_cmd->add_option("--cold-start-mass", train.cold_start_mass,
                        "Probability of the intended token class per position")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  train_cmd->add_option("--prompts-per-step", train.prompts_per_step, "Groups per update")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--eval-samples", train.eval_samples, "Monte Carlo samples per evaluation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  for (const char* key : {"steps", "group-size", "seed", "lr", "clip-epsilon", "kl-beta",
                          "theta-km", "accuracy-weight", "format-weight"}) {
    add_config_flag(train_cmd, ctx, key, "See README (config key '" + std::string(key) + "')");
  }
  train_cmd->callback([&] { rc = run_train(ctx, train); });

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Threshold accuracy and CoT quality of predictions");
  eval_cmd->add_option("--pred", eval.pred, "Predictions (JSONL)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--corpus", eval.corpus, "Indicator corpus (JSONL); enables CoT scoring")
      ->check(CLI::ExistingFile);
  auto* cmd_opt = eval_cmd->add_option("--scorer-cmd", eval.scorer_cmd, "Scorer process command line");
  auto* mock_opt = eval_cmd->add_option("--mock-scorer", eval.mock_score, "Built-in constant scorer");
  cmd_opt->excludes(mock_opt);
  eval_cmd->add_option("--scorer-timeout-ms", eval.scorer_timeout_ms, "Per-request scorer timeout")
      ->capture_default_str();
  eval_cmd->add_option("--report", eval.report, "Write the JSON report here");
  eval_cmd->add_option("--recall-dump", eval.recall_dump,
                       "Write normalized step text and indicator matches per record (JSONL)");
  eval_cmd->add_flag("--json", eval.json_only, "Print the JSON report instead of the table");
  add_config_flag(eval_cmd, ctx, "thresholds", "Comma-separated km (default 1,25,200,750,2500)");
  eval_cmd->callback([&] { rc = run_eval(ctx, eval); });

  ValidateArgs validate;
  auto* validate_cmd = app.add_subcommand("validate", "Check a JSONL file against a record schema");
  validate_cmd->add_option("--file", validate.file, "JSONL file")->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--schema", validate.schema, "generated | cot | judge | prediction")
      ->required();
  add_config_flag(validate_cmd, ctx, "theta-km", "Threshold for cot/judge label checks (default 25)");
  validate_cmd->callback([&] { rc = run_validate(ctx, validate); });

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Seeded subset of generated records");
  sample_cmd->add_option("--in", sample.in, "Generated records (JSONL)")->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--out", sample.out, "Output JSONL")->required();
  sample_cmd->add_option("--fraction", sample.fraction, "Share to keep, in (0, 1]")->capture_default_str();
  add_config_flag(sample_cmd, ctx, "seed", "Sampling seed");
  sample_cmd->callback([&] { rc = run_sample(ctx, sample); });

  double mock_constant = 0.8;
  auto* mock_cmd = app.add_subcommand("mock-scorer", "Serve the scorer protocol with a constant score");
  mock_cmd->add_option("--mock", mock_constant, "Constant score")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  mock_cmd->callback([&] { gre::serve_constant(std::cin, std::cout, mock_constant); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "gre: " << e.what() << '\n';
    return kExitUsage;
  } catch (const gre::ConfigError& e) {
    std::cerr << "gre: " << e.what() << '\n';
    return kExitUsage;
  } catch (const gre::ScorerSpawnError& e) {
    std::cerr << "gre: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "gre: " << e.what() << '\n';
    return kExitRuntime;
  }
  return rc;
}
