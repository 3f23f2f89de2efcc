#include "lmpe/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lmpe/dataset.hpp"
#include "lmpe/eval.hpp"
#include "lmpe/filter.hpp"
#include "lmpe/http_backend.hpp"
#include "lmpe/mock_backend.hpp"
#include "lmpe/search.hpp"

namespace lmpe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitEvalFailure = 1;
constexpr int kExitUsage = 2;

/// Everything an invocation resolved from flags, config file and defaults.
/// Echoed verbatim into every report.
struct RunConfig {
  std::string dataset_path;
  std::string out_dir = "lmpe-out";
  std::string backend = "mock";
  std::string endpoint;
  std::string model_name;
  std::string mock_spec_path;
  std::string prompts_dir;
  std::string mode = "tree_delta";
  std::string kind = "ranking";
  std::uint64_t seed = 0;
  std::size_t size = 300;
  std::size_t distractors = 99;
  std::size_t max_n = 10;
  int parallelism = 1;
  int top_n = 10;
  int max_steps = 5;
  int target_complete = 4;
  int max_expansions = 50;
  int retries = 0;
  bool strict = true;
  bool quiet = false;
  bool verbose = false;
  bool matrix = false;

  json to_json() const {
    return json{{"dataset", dataset_path},
                {"out", out_dir},
                {"backend", backend},
                {"endpoint", endpoint},
                {"model", model_name},
                {"mock_spec", mock_spec_path},
                {"prompts", prompts_dir},
                {"mode", mode},
                {"kind", kind},
                {"seed", seed},
                {"size", size},
                {"distractors", distractors},
                {"max_n", max_n},
                {"parallelism", parallelism},
                {"top_n", top_n},
                {"max_steps", max_steps},
                {"target_complete", target_complete},
                {"max_expansions", max_expansions},
                {"retries", retries},
                {"strict", strict}};
  }
};

void add_common_flags(CLI::App* cmd, RunConfig& cfg, std::string& config_path) {
  cmd->add_option("--config", config_path,
                  "JSON config file; command-line flags take precedence over it");
  cmd->add_option("--seed", cfg.seed, "Seed for every random draw");
  cmd->add_option("--out", cfg.out_dir, "Output directory for artifacts");
  cmd->add_flag("--quiet", cfg.quiet, "Suppress progress output");
  cmd->add_flag("--verbose", cfg.verbose, "Per-item progress on stderr");
}

/// Applies a JSON config file onto the defaults. Keys mirror the snapshot
/// echoed into reports (see RunConfig::to_json); unknown keys are rejected so
/// typos surface immediately.
void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw std::invalid_argument("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "dataset") cfg.dataset_path = value.get<std::string>();
      else if (key == "out") cfg.out_dir = value.get<std::string>();
      else if (key == "backend") cfg.backend = value.get<std::string>();
      else if (key == "endpoint") cfg.endpoint = value.get<std::string>();
      else if (key == "model") cfg.model_name = value.get<std::string>();
      else if (key == "mock_spec") cfg.mock_spec_path = value.get<std::string>();
      else if (key == "prompts") cfg.prompts_dir = value.get<std::string>();
      else if (key == "mode") cfg.mode = value.get<std::string>();
      else if (key == "kind") cfg.kind = value.get<std::string>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "size") cfg.size = value.get<std::size_t>();
      else if (key == "distractors") cfg.distractors = value.get<std::size_t>();
      else if (key == "max_n") cfg.max_n = value.get<std::size_t>();
      else if (key == "parallelism") cfg.parallelism = value.get<int>();
      else if (key == "top_n") cfg.top_n = value.get<int>();
      else if (key == "max_steps") cfg.max_steps = value.get<int>();
      else if (key == "target_complete") cfg.target_complete = value.get<int>();
      else if (key == "max_expansions") cfg.max_expansions = value.get<int>();
      else if (key == "retries") cfg.retries = value.get<int>();
      else if (key == "strict") cfg.strict = value.get<bool>();
      else throw std::invalid_argument("unknown config key: " + key);
    } catch (const json::exception& e) {
      throw std::invalid_argument("config key '" + key + "': " + e.what());
    }
  }
}

/// Finds --config before the real parse so file values become the defaults
/// the flags are layered over.
std::string prescan_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return "";
}

void add_backend_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--backend", cfg.backend, "Backend kind: mock or http")
      ->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--endpoint", cfg.endpoint, "HTTP backend base URL");
  cmd->add_option("--model", cfg.model_name, "Model name forwarded to the HTTP backend");
  cmd->add_option("--mock-spec", cfg.mock_spec_path, "Mock table JSON file");
  cmd->add_option("--prompts", cfg.prompts_dir, "Directory of prompt overrides");
  cmd->add_option("--parallelism", cfg.parallelism, "Concurrent requests / eval workers")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--retries", cfg.retries, "HTTP retry count")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--strict,!--lenient", cfg.strict,
                "Abort on any paragraph scoring failure (default) vs exclude with a warning");
}

/// Unreadable input files are configuration mistakes (exit 2), not
/// evaluation failures.
void require_readable(const std::string& path, const char* what) {
  std::ifstream probe(path);
  if (!probe) {
    throw std::invalid_argument(std::string("cannot read ") + what + ": " + path);
  }
}

BackendPtr make_backend(const RunConfig& cfg) {
  if (cfg.backend == "mock") {
    MockSpec spec;
    if (!cfg.mock_spec_path.empty()) spec = load_mock_spec(cfg.mock_spec_path);
    return std::make_shared<MockBackend>(std::move(spec), cfg.parallelism);
  }
  BackendDescriptor desc;
  desc.kind = BackendKind::http;
  desc.endpoint = cfg.endpoint;
  desc.model_name = cfg.model_name;
  desc.parallelism = cfg.parallelism;
  desc.retries = cfg.retries;
  desc.strict_echo = cfg.strict;
  return std::make_shared<HttpBackend>(std::move(desc));
}

EvalOptions make_eval_options(const RunConfig& cfg) {
  EvalOptions options;
  options.prompts =
      cfg.prompts_dir.empty() ? PromptSet::defaults() : PromptSet::load_dir(cfg.prompts_dir);
  options.search.top_n_paragraphs = cfg.top_n;
  options.search.max_steps = cfg.max_steps;
  options.search.target_complete = cfg.target_complete;
  options.search.max_expansions = cfg.max_expansions;
  options.workers = cfg.parallelism;
  options.lenient = !cfg.strict;
  options.seed = cfg.seed;
  options.config_snapshot = cfg.to_json();
  return options;
}

void log_line(const RunConfig& cfg, std::ostream& err, const std::string& event,
              const std::string& detail) {
  if (cfg.quiet) return;
  err << "[lmpe] event=" << event;
  if (!detail.empty()) err << " " << detail;
  err << "\n";
}

void log_items(const RunConfig& cfg, std::ostream& err, const EvalReport& report) {
  if (!cfg.verbose || cfg.quiet) return;
  for (const ItemOutcome& item : report.items) {
    err << "[lmpe] event=item id=" << item.question_id << " gold=" << item.gold
        << " predicted=" << (item.predicted.empty() ? "-" : item.predicted)
        << " correct=" << (item.correct ? "1" : "0") << " lm_calls=" << item.lm_calls;
    if (item.skipped) err << " skipped=1";
    if (!item.note.empty()) err << " note=" << item.note;
    if (!item.error.empty()) err << " error=\"" << item.error << "\"";
    err << "\n";
  }
}

/// Effective distractor count: the configured value when explicit, otherwise
/// the default clamped to what the dataset can support.
std::size_t resolve_distractors(const RunConfig& cfg, bool explicit_flag, const Dataset& dataset,
                                std::ostream& err) {
  if (explicit_flag) return cfg.distractors;
  const std::size_t feasible = max_feasible_distractors(dataset);
  if (feasible < cfg.distractors) {
    if (!cfg.quiet) {
      err << "[lmpe] event=distractors_clamped requested=" << cfg.distractors
          << " effective=" << feasible << "\n";
    }
    return feasible;
  }
  return cfg.distractors;
}

int cmd_bench_build(RunConfig cfg, bool distractors_explicit, std::ostream& out,
                    std::ostream& err) {
  require_readable(cfg.dataset_path, "dataset");
  const Dataset dataset = load_dataset(cfg.dataset_path);
  cfg.distractors = resolve_distractors(cfg, distractors_explicit, dataset, err);
  fs::create_directories(cfg.out_dir);

  if (cfg.kind == "classification") {
    const auto items = build_classification_benchmark(dataset, cfg.size, cfg.seed);
    const fs::path file = fs::path(cfg.out_dir) / "classification.json";
    std::ofstream o(file);
    o << classification_to_json(items, cfg.seed);
    std::size_t relevant = 0;
    for (const auto& item : items) {
      if (item.label == Relevance::relevant) ++relevant;
    }
    log_line(cfg, err, "bench_build", "kind=classification file=" + file.string());
    out << "classification benchmark: " << items.size() << " items (" << relevant << " relevant, "
        << (items.size() - relevant) << " irrelevant) -> " << file.string() << "\n";
    return kExitOk;
  }

  const auto items = build_ranking_benchmark(dataset, cfg.distractors, cfg.seed);
  const fs::path file = fs::path(cfg.out_dir) / "ranking.json";
  std::ofstream o(file);
  o << ranking_to_json(items, cfg.seed);
  log_line(cfg, err, "bench_build", "kind=ranking file=" + file.string());
  out << "ranking benchmark: " << items.size() << " items x "
      << (items.empty() ? 0 : items[0].paragraph_ids.size()) << " paragraphs -> " << file.string()
      << "\n";
  return kExitOk;
}

int cmd_filter_eval(RunConfig cfg, const std::string& benchmark_path, bool distractors_explicit,
                    std::ostream& out, std::ostream& err) {
  require_readable(cfg.dataset_path, "dataset");
  const Dataset dataset = load_dataset(cfg.dataset_path);
  cfg.distractors = resolve_distractors(cfg, distractors_explicit, dataset, err);
  std::vector<RankingItem> items;
  if (!benchmark_path.empty()) {
    std::ifstream in(benchmark_path);
    if (!in) throw Error("cannot open benchmark file: " + benchmark_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    items = ranking_from_json(buf.str());
  } else {
    items = build_ranking_benchmark(dataset, cfg.distractors, cfg.seed);
  }

  BackendPtr backend = make_backend(cfg);
  EvalOptions options = make_eval_options(cfg);
  const EvalReport report = eval_filter_topn(items, dataset, *backend, cfg.max_n, options);
  write_report_files(report, cfg.out_dir);
  if (cfg.matrix) {
    FilterOptions filter_options;
    filter_options.prompts = options.prompts;
    const LikelihoodMatrix matrix =
        likelihood_matrix(dataset.questions, dataset.paragraphs, *backend, filter_options);
    std::ofstream csv(fs::path(cfg.out_dir) / "matrix.csv");
    write_csv(matrix, csv);
    out << "matrix -> " << (fs::path(cfg.out_dir) / "matrix.csv").string() << "\n";
  }
  log_line(cfg, err, "filter_eval", "items=" + std::to_string(items.size()));
  log_items(cfg, err, report);

  for (std::size_t n = 1; n <= report.top_n_accuracy.size(); ++n) {
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(3);
    line << "top-" << n << " " << report.top_n_accuracy[n - 1];
    out << line.str() << "\n";
  }
  out << "report -> " << (fs::path(cfg.out_dir) / "report.json").string() << "\n";
  return kExitOk;
}

int cmd_qa_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_readable(cfg.dataset_path, "dataset");
  const Dataset dataset = load_dataset(cfg.dataset_path);
  const auto mode = eval_mode_from_string(cfg.mode);
  if (!mode) throw std::invalid_argument("unknown mode: " + cfg.mode);

  BackendPtr backend = make_backend(cfg);
  EvalOptions options = make_eval_options(cfg);
  if (*mode == EvalMode::tree_nll || *mode == EvalMode::tree_delta) {
    options.trace_dir = (fs::path(cfg.out_dir) / "traces").string();
  }

  EvalReport report;
  try {
    report = eval_qa(dataset, *mode, *backend, options);
  } catch (const Error& e) {
    // Mode preconditions (missing facts, missing gold answers) are configuration
    // problems, not evaluation failures.
    throw std::invalid_argument(e.what());
  }
  write_report_files(report, cfg.out_dir);
  log_line(cfg, err, "qa_eval", "mode=" + cfg.mode);
  log_items(cfg, err, report);

  std::ostringstream acc;
  acc.setf(std::ios::fixed);
  acc.precision(3);
  acc << report.accuracy;
  out << "mode " << cfg.mode << ": accuracy " << acc.str() << " (" << report.correct << "/"
      << report.evaluated << ", " << report.errored << " errored, " << report.skipped
      << " skipped)\n";
  out << "report -> " << (fs::path(cfg.out_dir) / "report.json").string() << "\n";
  if (!options.trace_dir.empty()) out << "traces -> " << options.trace_dir << "\n";
  return report.errored == 0 ? kExitOk : kExitEvalFailure;
}

int cmd_trace_show(const std::string& trace_path, std::ostream& out) {
  std::ifstream in(trace_path);
  if (!in) throw Error("cannot open trace file: " + trace_path);

  std::string line;
  std::size_t line_no = 0;
  bool any = false;
  json result;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("trace line " + std::to_string(line_no) + " is not valid JSON: " + e.what());
    }
    any = true;
    const std::string type = j.value("type", "");
    if (type == "meta") {
      out << "question " << j.value("question_id", "?") << " (criterion "
          << j.value("criterion", "?") << ")\n";
    } else if (type == "expansion") {
      out << "iteration " << j.value("iteration", 0) << ": expanded chain "
          << j.value("expanded_chain", 0) << ", " << j["children"].size() << " children, open "
          << j.value("open_size", 0) << ", complete " << j.value("complete_size", 0) << "\n";
    } else if (type == "result") {
      result = j;
    } else {
      throw Error("trace line " + std::to_string(line_no) + " has unknown type '" + type + "'");
    }
  }
  if (!any) {
    out << "no events\n";
    return kExitOk;
  }
  if (!result.is_null()) {
    out << "answer: " << result.value("answer", "?") << "\n";
    if (result.contains("note") && result["note"].is_string()) {
      out << "note: " << result["note"].get<std::string>() << "\n";
    }
    const json selected = result.value("selected_chain", json());
    if (!selected.is_null() && result.contains("complete")) {
      for (const auto& chain : result["complete"]) {
        if (chain.value("chain", std::uint64_t{0}) != selected.get<std::uint64_t>()) continue;
        out << "selected chain " << selected.get<std::uint64_t>() << " ("
            << chain.value("status", "?") << "):\n";
        std::size_t step_no = 0;
        for (const auto& step : chain["steps"]) {
          ++step_no;
          out << "  " << step_no << ". " << step.value("text", "") << "  [paragraph "
              << step.value("paragraph", "?") << "]\n";
        }
      }
    }
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evidence-supported QA engine: likelihood filtering, reasoning-chain tree "
               "search, benchmark builders and evaluation harness"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string benchmark_path;
  std::string trace_path;
  std::string config_path;

  try {
    const std::string prescanned = prescan_config_path(args);
    if (!prescanned.empty()) apply_config_file(prescanned, cfg);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App* bench = app.add_subcommand("bench-build", "Build a benchmark file from a dataset");
  bench->add_option("--dataset", cfg.dataset_path, "Dataset JSON file");
  bench->add_option("--kind", cfg.kind, "classification or ranking")
      ->check(CLI::IsMember({"classification", "ranking"}));
  bench->add_option("--size", cfg.size, "Classification item count (even)");
  CLI::Option* bench_distractors =
      bench->add_option("--distractors", cfg.distractors,
                        "Distractors per ranking item (default 99, clamped to the largest "
                        "feasible count when not given explicitly)");
  add_common_flags(bench, cfg, config_path);

  CLI::App* filter = app.add_subcommand("filter-eval", "Top-n evidence ranking evaluation");
  filter->add_option("--dataset", cfg.dataset_path, "Dataset JSON file");
  filter->add_option("--benchmark", benchmark_path, "Prebuilt ranking benchmark JSON");
  CLI::Option* filter_distractors =
      filter->add_option("--distractors", cfg.distractors, "Distractors per item when building");
  filter->add_option("--max-n", cfg.max_n, "Evaluate top-1..top-n")->check(CLI::PositiveNumber);
  filter->add_flag("--matrix", cfg.matrix,
                   "Also emit the question-paragraph likelihood matrix CSV");
  add_backend_flags(filter, cfg);
  add_common_flags(filter, cfg, config_path);

  CLI::App* qa = app.add_subcommand("qa-eval", "Question answering evaluation");
  qa->add_option("--dataset", cfg.dataset_path, "Dataset JSON file");
  qa->add_option("--mode", cfg.mode,
                 "no_cot, cot, tree_nll, tree_delta, golden_facts, golden_facts_cot");
  qa->add_option("--top-n", cfg.top_n, "Paragraphs kept by the filter")
      ->check(CLI::PositiveNumber);
  qa->add_option("--max-steps", cfg.max_steps, "Reasoning step cap")->check(CLI::PositiveNumber);
  qa->add_option("--target-complete", cfg.target_complete, "Complete chains to collect")
      ->check(CLI::PositiveNumber);
  qa->add_option("--max-expansions", cfg.max_expansions, "Expansion budget")
      ->check(CLI::PositiveNumber);
  add_backend_flags(qa, cfg);
  add_common_flags(qa, cfg, config_path);

  CLI::App* trace = app.add_subcommand("trace-show", "Render a search trace JSONL file");
  trace->add_option("trace", trace_path, "Trace file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (!trace->parsed() && cfg.dataset_path.empty()) {
      throw std::invalid_argument("--dataset is required (flag or config file)");
    }
    if (bench->parsed()) {
      return cmd_bench_build(cfg, bench_distractors->count() > 0, out, err);
    }
    if (filter->parsed()) {
      return cmd_filter_eval(cfg, benchmark_path, filter_distractors->count() > 0, out, err);
    }
    if (qa->parsed()) return cmd_qa_eval(cfg, out, err);
    return cmd_trace_show(trace_path, out);
  } catch (const SchemaViolation& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DanglingEvidenceId& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InsufficientData& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MalformedMockSpec& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitEvalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitEvalFailure;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace lmpe::cli
