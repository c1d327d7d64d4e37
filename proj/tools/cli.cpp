#include "sqlforge/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <json.hpp>

#include "sqlforge/augmentation.hpp"
#include "sqlforge/config.hpp"
#include "sqlforge/error.hpp"
#include "sqlforge/jsonl.hpp"
#include "sqlforge/metrics.hpp"
#include "sqlforge/model_client.hpp"
#include "sqlforge/preference_miner.hpp"
#include "sqlforge/refine_agent.hpp"
#include "sqlforge/schema_catalog.hpp"

namespace sqlforge::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::optional<std::string> config;
  std::optional<std::string> log_level;
  bool json = false;
};

struct Common {
  std::optional<std::string> corpus;
  std::optional<std::size_t> jobs;
  std::optional<std::int64_t> exec_timeout_secs;
};

struct IntrospectArgs {
  std::optional<std::string> db;
  std::optional<std::string> corpus;
  std::optional<std::string> db_id;
  std::size_t sample_values = 0;
  std::optional<std::string> question;
  bool types = false;
  std::optional<std::string> out;
};

struct AugmentArgs {
  Common common;
  std::string mode;
  std::string samples;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> p_table;
  std::optional<double> p_col;
};

struct MineArgs {
  Common common;
  std::string samples;
  std::string out;
  std::optional<std::string> endpoint;
  std::optional<std::string> mock;
  std::optional<std::size_t> n_candidates;
  std::optional<double> temperature;
  std::optional<std::string> record;
};

struct RefineArgs {
  Common common;
  std::string samples;
  std::string out;
  std::optional<std::string> generator;
  std::optional<std::string> debugger;
  std::optional<std::size_t> max_iters;
  std::optional<std::string> trace;
};

struct EvalArgs {
  Common common;
  std::string samples;
  std::string preds;
  std::optional<std::string> variants;
  std::optional<std::string> report;
  std::string label = "sqlforge";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--corpus", c.corpus, "Corpus root containing database/<db_id>/<db_id>.sqlite");
  cmd->add_option("--jobs", c.jobs, "Worker threads (default: CPU count, at most 8)");
  cmd->add_option("--exec-timeout-secs", c.exec_timeout_secs, "Per-query execution timeout in seconds");
}

void apply_common(ToolConfig& config, const Common& c) {
  if (c.corpus) config.corpus_root = *c.corpus;
  if (c.jobs) config.jobs = *c.jobs;
  if (c.exec_timeout_secs) config.exec_timeout_secs = *c.exec_timeout_secs;
}

fs::path require_corpus(const ToolConfig& config) {
  if (!config.corpus_root) throw UsageError("a corpus root is required (--corpus or general.corpus_root)");
  return *config.corpus_root;
}

std::chrono::duration<double> exec_timeout(const ToolConfig& config) {
  return std::chrono::seconds(config.exec_timeout_secs);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

class Runner {
 public:
  Runner(std::ostream& out, const Globals& globals) : out_(out), globals_(globals) {}

  void introspect(const IntrospectArgs& a) {
    fs::path path;
    std::string db_id;
    if (a.db) {
      path = *a.db;
      db_id = a.db_id ? *a.db_id : path.stem().string();
    } else if (a.corpus && a.db_id) {
      path = corpus_database_path(*a.corpus, *a.db_id);
      db_id = *a.db_id;
    } else {
      throw UsageError("introspect needs --db <file>, or --corpus with --db-id");
    }
    const auto schema = introspect_database(path, db_id, a.sample_values);

    std::string text;
    if (a.question) {
      PromptOptions options;
      options.include_types = a.types;
      options.include_sample_values = a.sample_values > 0;
      text = render_prompt(schema.tables, *a.question, options);
    } else {
      text = nlohmann::json(schema).dump(2) + "\n";
    }
    if (a.out) {
      write_text(*a.out, text);
    } else {
      out_ << text;
    }
  }

  void augment(const AugmentArgs& a, const ToolConfig& config) {
    const auto corpus_root = require_corpus(config);
    const auto mode = a.mode == "cross-db" ? AugmentMode::CrossDb : AugmentMode::InnerDb;
    const auto samples = load_samples(a.samples, corpus_root);
    const auto corpus = load_corpus(corpus_root);
    const auto augmented = augment_samples(samples, corpus, mode, config.seed, config.jobs, config.inner_db);

    std::vector<nlohmann::json> records;
    std::size_t unchanged = 0;
    for (const auto& s : augmented) {
      if (std::holds_alternative<UnchangedProvenance>(s.provenance)) ++unchanged;
      records.push_back(to_training_record(s));
    }
    write_jsonl(a.out, records);
    summary({{"command", "augment"}, {"mode", a.mode}, {"n_samples", records.size()}, {"unchanged", unchanged},
             {"out", a.out}},
            "augmented " + std::to_string(records.size()) + " samples (" + std::to_string(unchanged) +
                " unchanged) -> " + a.out);
  }

  void mine(const MineArgs& a, const ToolConfig& config) {
    const auto corpus_root = require_corpus(config);
    std::string endpoint = config.generator_endpoint;
    if (a.endpoint) endpoint = *a.endpoint;
    if (a.mock) endpoint = "mock:" + *a.mock;
    if (endpoint.empty()) throw UsageError("mine needs --endpoint or --mock (or generator.endpoint)");

    const auto samples = load_samples(a.samples, corpus_root);
    auto client = make_client(endpoint, config.generator);
    std::unique_ptr<RecordingClient> recorder;
    ModelClient* active = client.get();
    if (a.record) {
      recorder = std::make_unique<RecordingClient>(*client);
      active = recorder.get();
    }

    MineOptions options;
    options.n_candidates = config.n_candidates;
    options.temperature = config.temperature;
    options.timeout = exec_timeout(config);
    const auto result = mine_corpus(samples, *active, corpus_root, config.jobs, options);

    std::vector<nlohmann::json> records(result.pairs.begin(), result.pairs.end());
    write_jsonl(a.out, records);
    if (recorder) recorder->save(*a.record);
    summary({{"command", "mine"}, {"stats", result.stats}, {"out", a.out}},
            "mined " + std::to_string(result.stats.n_pairs) + " pairs from " + std::to_string(result.stats.n_samples) +
                " samples (" + std::to_string(result.stats.skipped_samples) + " without a rejected candidate) -> " +
                a.out);
  }

  void refine(const RefineArgs& a, const ToolConfig& config) {
    const auto corpus_root = require_corpus(config);
    std::string generator_endpoint = a.generator.value_or(config.generator_endpoint);
    std::string debugger_endpoint = a.debugger.value_or(config.debugger_endpoint);
    if (generator_endpoint.empty()) throw UsageError("refine needs --generator (or generator.endpoint)");
    if (debugger_endpoint.empty()) debugger_endpoint = generator_endpoint;

    const auto samples = load_samples(a.samples, corpus_root);
    auto generator = make_client(generator_endpoint, config.generator);
    std::unique_ptr<ModelClient> debugger_owned;
    ModelClient* debugger = generator.get();
    if (debugger_endpoint != generator_endpoint) {
      debugger_owned = make_client(debugger_endpoint, config.debugger);
      debugger = debugger_owned.get();
    }

    RefineOptions options;
    options.max_iters = config.max_iters;
    options.timeout = exec_timeout(config);
    std::optional<fs::path> trace;
    if (a.trace) trace = *a.trace;
    const auto result = refine_corpus(samples, corpus_root, *generator, *debugger, config.jobs, options, trace);
    write_predictions(a.out, result.predictions);

    std::size_t succeeded = 0;
    std::size_t debugged = 0;
    for (const auto& [id, r] : result.results) {
      if (r.succeeded) ++succeeded;
      if (r.iterations_used > 1) ++debugged;
    }
    summary({{"command", "refine"},
             {"n_samples", samples.size()},
             {"succeeded", succeeded},
             {"debugged", debugged},
             {"out", a.out}},
            "refined " + std::to_string(samples.size()) + " samples: " + std::to_string(succeeded) +
                " passed the invalid check, " + std::to_string(debugged) + " went through the debugger -> " + a.out);
  }

  void eval(const EvalArgs& a, const ToolConfig& config) {
    const auto corpus_root = require_corpus(config);
    auto variant_root = config.variant_root;
    if (a.variants) variant_root = *a.variants;
    const auto samples = load_samples(a.samples);
    const auto predictions = load_predictions(a.preds);
    EvalOptions options;
    options.timeout = exec_timeout(config);
    const auto report = evaluate_corpus(predictions, samples, corpus_root, variant_root, config.jobs, options);

    const nlohmann::json doc = report;
    if (a.report) write_text(*a.report, doc.dump(2) + "\n");
    if (globals_.json) {
      out_ << doc.dump() << "\n";
    } else {
      out_ << format_summary_table(report, a.label);
    }
  }

 private:
  void summary(const nlohmann::json& doc, const std::string& text) {
    if (globals_.json) {
      out_ << doc.dump() << "\n";
    } else {
      out_ << text << "\n";
    }
  }

  std::ostream& out_;
  const Globals& globals_;
};

class LoggerScope {
 public:
  explicit LoggerScope(std::ostream& err) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("sqlforge", sink);
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
  }
  ~LoggerScope() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
  err << nlohmann::json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  LoggerScope logger(err);

  CLI::App app{"Text-to-SQL data and evaluation toolkit", argv.empty() ? "sqlforge" : argv.front()};
  app.require_subcommand(1);
  Globals globals;
  app.add_option("--config", globals.config, "INI config file; flags override its values");
  app.add_option("--log-level", globals.log_level, "trace, debug, info, warn, error, critical or off");
  app.add_flag("--json", globals.json, "Print a machine-readable JSON summary");

  IntrospectArgs introspect_args;
  auto* introspect = app.add_subcommand("introspect", "Print a database schema as JSON, or render a prompt");
  introspect->add_option("--db", introspect_args.db, "Database file");
  introspect->add_option("--corpus", introspect_args.corpus, "Corpus root (with --db-id)");
  introspect->add_option("--db-id", introspect_args.db_id, "Database id");
  introspect->add_option("--sample-values", introspect_args.sample_values, "Distinct sample values per column");
  introspect->add_option("--question", introspect_args.question, "Render the generation prompt for this question");
  introspect->add_flag("--types", introspect_args.types, "Include column types in the rendered prompt");
  introspect->add_option("--out", introspect_args.out, "Write to a file instead of standard output");

  AugmentArgs augment_args;
  auto* augment = app.add_subcommand("augment", "Build Cross-DB or Inner-DB augmented training samples");
  augment->add_option("--mode", augment_args.mode, "cross-db or inner-db")
      ->required()
      ->check(CLI::IsMember({"cross-db", "inner-db"}));
  augment->add_option("--samples", augment_args.samples, "Samples JSON-lines file")->required();
  augment->add_option("--out", augment_args.out, "Output JSON-lines file")->required();
  augment->add_option("--seed", augment_args.seed, "Global seed");
  augment->add_option("--p-table", augment_args.p_table, "Keep probability of an unused table (inner-db)");
  augment->add_option("--p-col", augment_args.p_col, "Keep probability of an unused column (inner-db)");
  add_common(augment, augment_args.common);

  MineArgs mine_args;
  auto* mine = app.add_subcommand("mine", "Mine chosen/rejected preference pairs");
  mine->add_option("--samples", mine_args.samples, "Samples JSON-lines file")->required();
  mine->add_option("--out", mine_args.out, "Output JSON-lines file")->required();
  auto* endpoint_opt = mine->add_option("--endpoint", mine_args.endpoint, "Chat-completions URL");
  auto* mock_opt = mine->add_option("--mock", mine_args.mock, "Mock script (JSON-lines)");
  endpoint_opt->excludes(mock_opt);
  mine->add_option("--n-candidates", mine_args.n_candidates, "Candidates per sample");
  mine->add_option("--temperature", mine_args.temperature, "Sampling temperature");
  mine->add_option("--record", mine_args.record, "Save the model exchanges as a replayable mock script");
  add_common(mine, mine_args.common);

  RefineArgs refine_args;
  auto* refine = app.add_subcommand("refine", "Generate SQL with the invalid-check and debugger loop");
  refine->add_option("--samples", refine_args.samples, "Samples JSON-lines file")->required();
  refine->add_option("--out", refine_args.out, "Predictions JSON-lines file")->required();
  refine->add_option("--generator", refine_args.generator, "Generator endpoint: URL, mock:<file> or mock file");
  refine->add_option("--debugger", refine_args.debugger, "Debugger endpoint (default: the generator)");
  refine->add_option("--max-iters", refine_args.max_iters, "Attempt budget per sample");
  refine->add_option("--trace", refine_args.trace, "Directory for per-sample attempt traces");
  add_common(refine, refine_args.common);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score predictions with EX and TS");
  eval->add_option("--samples", eval_args.samples, "Samples JSON-lines file")->required();
  eval->add_option("--preds", eval_args.preds, "Predictions JSON-lines file")->required();
  eval->add_option("--variants", eval_args.variants, "Variant root: <root>/<db_id>/<k>.sqlite");
  eval->add_option("--report", eval_args.report, "Write the full JSON report to this file");
  eval->add_option("--label", eval_args.label, "Model label in the summary table");
  add_common(eval, eval_args.common);

  std::vector<const char*> raw;
  raw.reserve(argv.size() + 1);
  if (argv.empty()) raw.push_back("sqlforge");
  for (const auto& a : argv) raw.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << e.what() << "\n";
    err << "Run with --help for usage.\n";
    return 2;
  }

  try {
    ToolConfig config = default_config();
    if (globals.config) config = load_config(*globals.config, config);
    if (globals.log_level) config.log_level = *globals.log_level;
    Common* common = nullptr;
    if (augment->parsed()) {
      common = &augment_args.common;
      if (augment_args.seed) config.seed = *augment_args.seed;
      if (augment_args.p_table) config.inner_db.p_table = *augment_args.p_table;
      if (augment_args.p_col) config.inner_db.p_col = *augment_args.p_col;
    } else if (mine->parsed()) {
      common = &mine_args.common;
      if (mine_args.n_candidates) config.n_candidates = *mine_args.n_candidates;
      if (mine_args.temperature) config.temperature = *mine_args.temperature;
    } else if (refine->parsed()) {
      common = &refine_args.common;
      if (refine_args.max_iters) config.max_iters = *refine_args.max_iters;
    } else if (eval->parsed()) {
      common = &eval_args.common;
    }
    if (common != nullptr) apply_common(config, *common);
    check_config(config);
    spdlog::set_level(spdlog::level::from_str(config.log_level));

    Runner runner(out, globals);
    if (introspect->parsed()) runner.introspect(introspect_args);
    if (augment->parsed()) runner.augment(augment_args, config);
    if (mine->parsed()) runner.mine(mine_args, config);
    if (refine->parsed()) runner.refine(refine_args, config);
    if (eval->parsed()) runner.eval(eval_args, config);
    out.flush();
    return 0;
  } catch (const UsageError& e) {
    report_error(err, "UsageError", e.what());
    return 2;
  } catch (const ConfigError& e) {
    report_error(err, e.kind(), e.what());
    return 2;
  } catch (const Error& e) {
    report_error(err, e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error(err, "InternalError", e.what());
    return 1;
  }
}

int run(const std::vector<std::string>& argv) { return run(argv, std::cout, std::cerr); }

}  // namespace sqlforge::cli
