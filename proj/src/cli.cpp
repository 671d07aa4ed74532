#include "anneal/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "anneal/dataio.hpp"
#include "anneal/digest.hpp"
#include "anneal/error.hpp"
#include "anneal/harness.hpp"
#include "anneal/landscape.hpp"
#include "anneal/schedule.hpp"
#include "anneal/svg.hpp"

namespace anneal::cli {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 7;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
  const char* env = std::getenv("ANNEAL_SEED");
  if (env == nullptr || *env == '\0') {
    return kDefaultSeed;
  }
  try {
    std::size_t used = 0;
    const auto value = std::stoull(env, &used);
    if (used == std::string(env).size()) {
      return value;
    }
  } catch (const std::exception&) {
  }
  throw UsageError(fmt::format("ANNEAL_SEED must be an unsigned integer (got '{}')", env));
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::Io, fmt::format("cannot write '{}'", path.string()));
  }
  return out;
}

// Scheduler shape flags. Defaults describe short 1.5x-growing cycles;
// step decay has no defaults and needs --gamma and --step-size.
struct ScheduleFlags {
  double eta_min = 0.001;
  double restart_lr = 0.05;
  int initial_decay = 1;
  int interval = 1;
  double mult = 1.5;
  int warmup = 1;
  double warmup_start = 0.0001;
  std::string log_base = "range";
  double eta0 = 0.0001;
  std::optional<double> gamma;
  std::optional<int> step_size;

  void add_to(CLI::App* app) {
    app->add_option("--eta-min", eta_min, "Minimum decay learning rate of every cycle");
    app->add_option("--restart-lr", restart_lr, "Learning rate each cycle restarts from");
    app->add_option("--initial-decay", initial_decay, "Length of the first cycle in epochs");
    app->add_option("--interval", interval, "Restart interval (length of cycle 1) in epochs");
    app->add_option("--mult", mult, "Restart interval multiplier (>= 1.0)");
    app->add_option("--warmup", warmup, "Warmup epochs before the first cycle");
    app->add_option("--warmup-start", warmup_start, "Warmup start learning rate");
    app->add_option("--log-base", log_base,
                    "Log annealing base: 'range' (1/(max-min)), 'min' (1/min) or a number > 1");
    app->add_option("--eta0", eta0, "Learning rate of the constant and step schedules");
    app->add_option("--gamma", gamma, "Step decay factor in (0, 1); required for step");
    app->add_option("--step-size", step_size, "Epochs per step decay; required for step");
  }

  ScheduleSpec build(ScheduleKind kind) const {
    ScheduleSpec spec;
    spec.kind = kind;
    spec.restart = {initial_decay, interval, mult, restart_lr, eta_min};
    spec.warmup = {warmup, warmup_start};
    spec.eta0 = eta0;
    if (log_base == "range") {
      spec.log_base = LogBaseRule::range_reciprocal();
    } else if (log_base == "min") {
      spec.log_base = LogBaseRule::min_reciprocal();
    } else {
      try {
        spec.log_base = LogBaseRule::explicit_base(std::stod(log_base));
      } catch (const std::exception&) {
        throw UsageError(fmt::format("--log-base must be 'range', 'min' or a number (got '{}')",
                                     log_base));
      }
    }
    if (kind == ScheduleKind::StepDecay) {
      if (!gamma || !step_size) {
        throw UsageError("the step schedule needs explicit --gamma and --step-size");
      }
      spec.step_gamma = *gamma;
      spec.step_size = *step_size;
    }
    try {
      spec.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    return spec;
  }
};

ScheduleKind parse_kind(const std::string& name) {
  try {
    return parse_schedule_kind(name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

// Optimizer flags.
struct OptimizerFlags {
  std::string kind = "sgd";
  double momentum = 0.9;
  double dampening = 0.0;
  double weight_decay = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void add_to(CLI::App* app, bool allow_newton) {
    app->add_option("--optimizer", kind, allow_newton ? "sgd, adam or newton" : "sgd or adam")
        ->check(allow_newton ? CLI::IsMember({"sgd", "adam", "newton"})
                             : CLI::IsMember({"sgd", "adam"}));
    app->add_option("--momentum", momentum, "SGD momentum");
    app->add_option("--dampening", dampening, "SGD dampening");
    app->add_option("--weight-decay", weight_decay, "Weight decay added to the gradient");
    app->add_option("--beta1", beta1, "Adam first-moment decay");
    app->add_option("--beta2", beta2, "Adam second-moment decay");
    app->add_option("--epsilon", epsilon, "Adam denominator epsilon");
  }

  OptimizerConfig build() const {
    OptimizerConfig cfg;
    if (kind == "adam") {
      cfg = AdamConfig{beta1, beta2, epsilon, weight_decay};
    } else if (kind == "newton") {
      cfg = NewtonConfig{};
    } else {
      cfg = SgdConfig{momentum, dampening, weight_decay};
    }
    try {
      std::visit([](const auto& c) {
        if constexpr (!std::is_same_v<std::decay_t<decltype(c)>, NewtonConfig>) {
          c.validate();
        }
      }, cfg);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }
};

// Classification task flags shared by train and compare.
struct TaskFlags {
  int classes = 2;
  int per_class = 500;
  int dim = 2;
  double separation = 4.0;
  double sigma = 1.0;
  std::string cifar;
  bool normalize = false;
  std::vector<int> hidden = {16};
  std::string activation = "leaky";
  double slope = 0.01;
  std::string head = "sigmoid";
  std::optional<int> epochs;
  int batch = 128;
  std::optional<std::uint64_t> seed;
  double halt_threshold = 4.5;
  int halt_buffer = 2;
  std::string out_dir;
  OptimizerFlags optimizer;
  ScheduleFlags schedule;

  void add_to(CLI::App* app) {
    app->add_option("--classes", classes, "Blob classes");
    app->add_option("--per-class", per_class, "Blob samples per class");
    app->add_option("--dim", dim, "Blob feature dimension");
    app->add_option("--separation", separation, "Distance between blob centers");
    app->add_option("--sigma", sigma, "Blob noise standard deviation");
    app->add_option("--cifar", cifar, "Train on a CIFAR-10 binary file instead of blobs");
    app->add_flag("--normalize", normalize, "Standardize every feature before training");
    app->add_option("--hidden", hidden, "Hidden layer sizes")->delimiter(',');
    app->add_option("--activation", activation, "Hidden activation: relu or leaky")
        ->check(CLI::IsMember({"relu", "leaky"}));
    app->add_option("--slope", slope, "Leaky ReLU negative slope");
    app->add_option("--head", head,
                    "Output head: sigmoid (categorical CE) or softmax (sparse categorical CE)")
        ->check(CLI::IsMember({"sigmoid", "softmax"}));
    app->add_option("--epochs", epochs, "Training epochs")->required();
    app->add_option("--batch", batch, "Minibatch size");
    app->add_option("--seed", seed, "Run seed (default: $ANNEAL_SEED, else 7)");
    app->add_option("--halt-threshold", halt_threshold, "Halt when epoch loss exceeds this");
    app->add_option("--halt-buffer", halt_buffer, "Epochs before the halt rule may fire");
    app->add_option("--out", out_dir, "Output directory")->required();
    optimizer.add_to(app, false);
    schedule.add_to(app);
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg;
    cfg.seed = seed ? *seed : default_seed();
    Dataset data;
    if (!cifar.empty()) {
      data = cifar_to_dataset(read_cifar10_file(cifar));
      if (data.size() == 0) {
        throw Error(Errc::Io, fmt::format("'{}' holds no records", cifar));
      }
    } else {
      BlobSpec blobs{classes, per_class, dim, separation, sigma, cfg.seed};
      try {
        blobs.validate();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      data = gen_blobs(blobs);
    }
    if (normalize) {
      data = anneal::normalize(data).first;
    }
    MlpSpec model;
    model.layer_sizes.push_back(static_cast<int>(data.dim()));
    model.layer_sizes.insert(model.layer_sizes.end(), hidden.begin(), hidden.end());
    model.layer_sizes.push_back(data.classes);
    model.hidden = {activation == "relu" ? Activation::ReLU : Activation::LeakyReLU, slope};
    model.head = head == "softmax" ? OutputHead::SoftmaxWithSparseCE
                                   : OutputHead::SigmoidWithCategoricalCE;
    model.init_seed = cfg.seed;
    cfg.task = MlpTask{model, std::move(data)};
    cfg.optimizer = optimizer.build();
    cfg.epochs = *epochs;
    cfg.batch_size = batch;
    cfg.halt = {halt_buffer, halt_threshold};
    try {
      cfg.validate();
    } catch (const Error& e) {
      if (e.code() == Errc::InvalidArgument) {
        throw UsageError(e.what());
      }
      throw;
    }
    return cfg;
  }
};

std::vector<ScheduleKind> parse_kind_list(const std::vector<std::string>& names) {
  if (names.empty()) {
    throw UsageError("at least one schedule is required (log, cosine, step, constant)");
  }
  std::vector<ScheduleKind> kinds;
  std::set<std::string> seen;
  for (const auto& name : names) {
    if (!seen.insert(name).second) {
      throw UsageError(fmt::format("schedule '{}' listed twice", name));
    }
    kinds.push_back(parse_kind(name));
  }
  return kinds;
}

void write_run_files(const fs::path& dir, const RunResult& result, const ExperimentConfig& cfg) {
  auto csv = open_output(dir / (result.schedule_name + ".csv"));
  write_run_csv(csv, result);
  auto meta = open_output(dir / (result.schedule_name + ".meta"));
  write_run_metadata(meta, result, cfg);
}

void print_run_summary(std::ostream& out, const RunResult& r) {
  const auto& last = r.metrics.back();
  out << fmt::format("{}: {} epochs, final mean loss {:.6g}", r.schedule_name, r.metrics.size(),
                     last.mean_loss);
  if (last.accuracy) {
    out << fmt::format(", accuracy {:.4f}", *last.accuracy);
  }
  if (r.halted) {
    out << fmt::format(", halted at epoch {}", *r.halt_epoch);
  }
  out << '\n';
}

PlotSeries loss_series(const RunResult& r) {
  PlotSeries s{r.schedule_name, {}};
  for (const auto& m : r.metrics) {
    s.points.emplace_back(m.epoch, m.mean_loss);
  }
  return s;
}

int schedule_dump(const ScheduleFlags& flags, const std::string& kind, int epochs,
                  const std::string& out_path, const std::string& svg_path, std::ostream& out) {
  const ScheduleSpec spec = flags.build(parse_kind(kind));
  if (epochs < 1) {
    throw UsageError(fmt::format("--epochs must be >= 1 (got {})", epochs));
  }
  const auto samples = dump_schedule(spec, epochs);
  if (out_path.empty() || out_path == "-") {
    write_schedule_csv(out, samples);
  } else {
    auto file = open_output(out_path);
    write_schedule_csv(file, samples);
  }
  if (!svg_path.empty()) {
    PlotSeries series{std::string(spec.name()), {}};
    for (const auto& s : samples) {
      series.points.emplace_back(s.epoch, s.lr);
    }
    auto file = open_output(svg_path);
    write_svg_plot(file, {fmt::format("{} schedule", spec.name()), "epoch", "learning rate"},
                   {series});
  }
  return kSuccess;
}

int train(const TaskFlags& flags, const std::string& kind, const std::string& save_model_path,
          std::ostream& out) {
  ExperimentConfig cfg = flags.build();
  cfg.schedule = flags.schedule.build(parse_kind(kind));
  MlpModel model;
  const RunResult result = run_experiment(cfg, &model);
  write_run_files(flags.out_dir, result, cfg);
  print_run_summary(out, result);
  if (!save_model_path.empty()) {
    auto file = open_output(save_model_path);
    save_model(model, file);
  }
  return kSuccess;
}

int compare_cmd(const TaskFlags& flags, const std::vector<std::string>& names, std::ostream& out,
                std::ostream& err) {
  const auto kinds = parse_kind_list(names);
  ExperimentConfig cfg = flags.build();
  std::vector<ScheduleSpec> schedules;
  for (auto kind : kinds) {
    schedules.push_back(flags.schedule.build(kind));
  }
  const auto entries = compare(cfg, schedules);
  std::vector<PlotSeries> series;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& entry = entries[i];
    if (entry.result) {
      ExperimentConfig run_cfg = cfg;
      run_cfg.schedule = schedules[i];
      write_run_files(flags.out_dir, *entry.result, run_cfg);
      print_run_summary(out, *entry.result);
      series.push_back(loss_series(*entry.result));
    } else {
      ++failed;
      err << fmt::format("{}: failed: {}\n", entry.name, entry.error);
    }
  }
  auto svg = open_output(fs::path(flags.out_dir) / "compare.svg");
  write_svg_plot(svg, {"Mean loss per epoch by learning-rate schedule", "epoch", "mean loss"},
                 series);
  return failed == entries.size() ? kDivergence : kSuccess;
}

struct LandscapeFlags {
  std::string function = "rastrigin";
  std::vector<double> start;
  int steps = 0;
  std::vector<std::string> schedules;
  std::string out_dir;
  OptimizerFlags optimizer;
  ScheduleFlags schedule;
};

int landscape_bench(const LandscapeFlags& flags, std::ostream& out, std::ostream& err) {
  Landscape landscape = Landscape::rastrigin();
  try {
    landscape = Landscape::from_name(flags.function);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (flags.steps < 1) {
    throw UsageError(fmt::format("--steps must be >= 1 (got {})", flags.steps));
  }
  const auto kinds = parse_kind_list(flags.schedules);
  const OptimizerConfig optimizer = flags.optimizer.build();
  const Vector start = Eigen::Map<const Vector>(flags.start.data(),
                                                static_cast<Eigen::Index>(flags.start.size()));
  std::vector<PlotSeries> series;
  std::size_t failed = 0;
  for (auto kind : kinds) {
    const ScheduleSpec spec = flags.schedule.build(kind);
    const std::string name = fmt::format("{}-{}", flags.function, spec.name());
    try {
      const LandscapeTrace trace = landscape_run(landscape, start, optimizer, spec, flags.steps);
      auto csv = open_output(fs::path(flags.out_dir) / (name + ".csv"));
      write_trace_csv(csv, trace);
      out << fmt::format("{}: start f {:.6g}, final f {:.6g}, best f {:.6g}\n", name, trace.start_f,
                         trace.points.back().f, trace.points.back().best_f);
      PlotSeries s{std::string(spec.name()), {}};
      for (const auto& p : trace.points) {
        s.points.emplace_back(p.step, p.best_f);
      }
      series.push_back(std::move(s));
    } catch (const DivergenceError& e) {
      ++failed;
      err << fmt::format("{}: failed: {}\n", name, e.what());
    }
  }
  auto svg = open_output(fs::path(flags.out_dir) / "landscape.svg");
  write_svg_plot(svg, {fmt::format("Best objective so far on {}", flags.function), "step", "best f"},
                 series);
  return failed == kinds.size() ? kDivergence : kSuccess;
}

int cifar_inspect(const std::string& path, std::ostream& out) {
  const auto records = read_cifar10_file(path);
  out << records.size() << " records\n";
  std::map<int, std::size_t> histogram;
  for (const auto& r : records) {
    ++histogram[r.label];
  }
  for (int label = 0; label <= 9; ++label) {
    out << fmt::format("label {}: {}\n", label, histogram[label]);
  }
  if (records.empty()) {
    out << "first record checksum: none\n";
  } else {
    Fnv1a h;
    h.update(std::span<const std::uint8_t>(&records.front().label, 1));
    h.update(records.front().pixels);
    out << fmt::format("first record checksum: {:016x}\n", h.value());
  }
  return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learning-rate schedules with warm restarts: dumps, benchmarks and training runs",
               "anneal"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  // schedule dump
  auto* schedule_cmd = app.add_subcommand("schedule", "Learning-rate schedule utilities");
  schedule_cmd->require_subcommand(1);
  auto* dump_cmd = schedule_cmd->add_subcommand("dump", "Write the per-epoch learning rate as CSV");
  ScheduleFlags dump_flags;
  std::string dump_kind;
  int dump_epochs = 0;
  std::string dump_out = "-";
  std::string dump_svg;
  dump_cmd->add_option("--kind", dump_kind, "log, cosine, step or constant")->required();
  dump_cmd->add_option("--epochs", dump_epochs, "Number of epochs to dump")->required();
  dump_cmd->add_option("--out", dump_out, "CSV path, '-' for stdout");
  dump_cmd->add_option("--svg", dump_svg, "Also write an SVG line plot here");
  dump_flags.add_to(dump_cmd);

  // landscape bench
  auto* landscape_cmd = app.add_subcommand("landscape", "Analytic test-function benchmarks");
  landscape_cmd->require_subcommand(1);
  auto* bench_cmd = landscape_cmd->add_subcommand("bench", "Optimize a test function per schedule");
  LandscapeFlags bench_flags;
  bench_flags.schedules = {"log", "constant"};
  bench_cmd->add_option("--function", bench_flags.function, "ackley, griewank or rastrigin");
  bench_cmd->add_option("--start", bench_flags.start, "Start point, comma separated")
      ->required()
      ->delimiter(',');
  bench_cmd->add_option("--steps", bench_flags.steps, "Optimizer steps (one schedule epoch each)")
      ->required();
  bench_cmd->add_option("--schedules", bench_flags.schedules, "Schedules to run")->delimiter(',');
  bench_cmd->add_option("--out", bench_flags.out_dir, "Output directory")->required();
  bench_flags.optimizer.add_to(bench_cmd, true);
  bench_flags.schedule.add_to(bench_cmd);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the MLP under one schedule");
  TaskFlags train_flags;
  std::string train_kind;
  std::string save_model;
  train_cmd->add_option("--schedule", train_kind, "log, cosine, step or constant")->required();
  train_cmd->add_option("--save-model", save_model, "Write the trained MNET1 model here");
  train_flags.add_to(train_cmd);

  // compare
  auto* compare_sub = app.add_subcommand("compare", "Train once per schedule from one initialization");
  TaskFlags compare_flags;
  std::vector<std::string> compare_names;
  compare_sub->add_option("--schedules", compare_names, "Comma-separated schedule list")
      ->required()
      ->delimiter(',');
  compare_flags.add_to(compare_sub);

  // cifar inspect
  auto* cifar_cmd = app.add_subcommand("cifar", "CIFAR-10 binary file utilities");
  cifar_cmd->require_subcommand(1);
  auto* inspect_cmd = cifar_cmd->add_subcommand("inspect", "Summarize a CIFAR-10 binary file");
  std::string cifar_path;
  inspect_cmd->add_option("path", cifar_path, "CIFAR-10 .bin file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (dump_cmd->parsed()) {
      return schedule_dump(dump_flags, dump_kind, dump_epochs, dump_out, dump_svg, out);
    }
    if (bench_cmd->parsed()) {
      return landscape_bench(bench_flags, out, err);
    }
    if (train_cmd->parsed()) {
      return train(train_flags, train_kind, save_model, out);
    }
    if (compare_sub->parsed()) {
      return compare_cmd(compare_flags, compare_names, out, err);
    }
    if (inspect_cmd->parsed()) {
      return cifar_inspect(cifar_path, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const ParseError& e) {
    err << "parse error at byte offset " << e.offset() << ": " << e.what() << '\n';
    return kDataError;
  } catch (const Error& e) {
    err << "error (" << errc_name(e.code()) << "): " << e.what() << '\n';
    return e.code() == Errc::InvalidArgument ? kUsage : kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace anneal::cli
