#include "anneal/harness.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "anneal/digest.hpp"
#include "anneal/error.hpp"
#include "anneal/random.hpp"

namespace anneal {

namespace {

template <typename... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};

/// Optimizer state matching an OptimizerConfig alternative.
using OptimizerState = std::variant<SgdState, AdamState, std::monostate>;

OptimizerState fresh_state(const OptimizerConfig& cfg) {
  return std::visit(Overloaded{[](const SgdConfig&) -> OptimizerState { return SgdState{}; },
                               [](const AdamConfig&) -> OptimizerState { return AdamState{}; },
                               [](const NewtonConfig&) -> OptimizerState { return std::monostate{}; }},
                    cfg);
}

// First-order update shared by both task kinds.
void first_order_step(Vector& params, const Vector& grads, double lr, const OptimizerConfig& cfg,
                      OptimizerState& state) {
  if (const auto* sgd = std::get_if<SgdConfig>(&cfg)) {
    sgd_step(params, grads, lr, *sgd, std::get<SgdState>(state));
  } else if (const auto* adam = std::get_if<AdamConfig>(&cfg)) {
    adam_step(params, grads, lr, *adam, std::get<AdamState>(state));
  } else {
    throw Error(Errc::InvalidArgument, "Newton steps need a Hessian; use SGD or Adam here");
  }
}

[[noreturn]] void diverged(long index, double value, std::string_view unit) {
  throw DivergenceError(index, value, fmt::format("run diverged at {} {} (loss {})", unit, index, value));
}

RunResult run_mlp(const ExperimentConfig& cfg, const MlpTask& task, MlpModel* trained) {
  MlpModel model = init(task.model);
  const int batch_size = static_cast<int>(std::min<Eigen::Index>(cfg.batch_size, task.data.size()));
  Scheduler scheduler(cfg.schedule);
  OptimizerState state = fresh_state(cfg.optimizer);
  const Rng epoch_seeds = Rng(cfg.seed).split(0x5EED);

  RunResult result;
  result.schedule_name = std::string(cfg.schedule.name());
  Vector params = model.flatten();
  result.initial_params_checksum = checksum(params);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = scheduler.lr();
    Rng epoch_rng = epoch_seeds.split(static_cast<std::uint64_t>(epoch));
    const auto batches = batch_iter(task.data, batch_size, epoch_rng.next_u64());

    double loss_sum = 0.0;
    double accuracy_sum = 0.0;
    Eigen::Index seen = 0;
    bool finite = true;
    for (const auto& batch : batches) {
      const ForwardCache cache = forward(model, batch.inputs);
      const double batch_loss = loss(cache.outputs, batch, model.spec.head);
      if (!std::isfinite(batch_loss)) {
        loss_sum = batch_loss;
        finite = false;
        break;
      }
      const Vector grads = backward(model, cache, batch).flatten();
      if (!grads.allFinite()) {
        loss_sum = std::numeric_limits<double>::quiet_NaN();
        finite = false;
        break;
      }
      const auto rows = static_cast<double>(batch.size());
      loss_sum += batch_loss * rows;
      accuracy_sum += accuracy(cache.outputs, batch.labels) * rows;
      seen += batch.size();
      first_order_step(params, grads, lr, cfg.optimizer, state);
      model.assign(params);
      ++result.optimizer_steps;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.mean_loss = finite ? loss_sum / static_cast<double>(seen) : loss_sum;
    if (finite) {
      m.accuracy = accuracy_sum / static_cast<double>(seen);
    }
    m.lr_min = m.lr_mean = m.lr_max = lr;
    result.metrics.push_back(m);

    if (check_halt(cfg.halt, epoch, m.mean_loss)) {
      result.halted = true;
      result.halt_epoch = epoch;
      break;
    }
    if (!std::isfinite(m.mean_loss)) {
      diverged(epoch, m.mean_loss, "epoch");
    }
    scheduler.step();
  }
  result.final_params_checksum = checksum(params);
  if (trained != nullptr) {
    *trained = std::move(model);
  }
  return result;
}

RunResult run_landscape(const ExperimentConfig& cfg, const LandscapeTask& task) {
  Scheduler scheduler(cfg.schedule);
  OptimizerState state = fresh_state(cfg.optimizer);
  Vector x = task.start;

  RunResult result;
  result.schedule_name = std::string(cfg.schedule.name());
  result.initial_params_checksum = checksum(x);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = scheduler.lr();
    const double f = eval(task.landscape, x);
    if (std::isfinite(f)) {
      const Vector g = grad(task.landscape, x);
      if (std::holds_alternative<NewtonConfig>(cfg.optimizer)) {
        newton_step(x, g, hessian(task.landscape, x), lr);
      } else {
        first_order_step(x, g, lr, cfg.optimizer, state);
      }
      ++result.optimizer_steps;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.mean_loss = f;
    m.lr_min = m.lr_mean = m.lr_max = lr;
    result.metrics.push_back(m);

    if (check_halt(cfg.halt, epoch, f)) {
      result.halted = true;
      result.halt_epoch = epoch;
      break;
    }
    if (!std::isfinite(f)) {
      diverged(epoch, f, "epoch");
    }
    scheduler.step();
  }
  result.final_params_checksum = checksum(x);
  return result;
}

}  // namespace

void HaltRule::validate() const {
  if (buffer_epochs < 0) {
    throw Error(Errc::InvalidArgument,
                fmt::format("halt buffer must be >= 0 epochs (got {})", buffer_epochs));
  }
  if (!std::isfinite(loss_threshold)) {
    throw Error(Errc::InvalidArgument, "halt loss threshold must be finite");
  }
}

bool check_halt(const HaltRule& rule, int epoch, double mean_loss) {
  if (epoch < 1) {
    throw Error(Errc::CallerContract, fmt::format("halt check needs epoch >= 1 (got {})", epoch));
  }
  return epoch > rule.buffer_epochs && mean_loss > rule.loss_threshold;
}

std::string optimizer_name(const OptimizerConfig& optimizer) {
  return std::visit(Overloaded{[](const SgdConfig&) { return std::string("sgd"); },
                               [](const AdamConfig&) { return std::string("adam"); },
                               [](const NewtonConfig&) { return std::string("newton"); }},
                    optimizer);
}

void ExperimentConfig::validate() const {
  if (epochs < 1) {
    throw Error(Errc::InvalidArgument, fmt::format("epochs must be >= 1 (got {})", epochs));
  }
  if (batch_size < 1) {
    throw Error(Errc::InvalidArgument, fmt::format("batch_size must be >= 1 (got {})", batch_size));
  }
  schedule.validate();
  halt.validate();
  std::visit(Overloaded{[](const SgdConfig& c) { c.validate(); },
                        [](const AdamConfig& c) { c.validate(); }, [](const NewtonConfig&) {}},
             optimizer);
  if (const auto* mlp = std::get_if<MlpTask>(&task)) {
    mlp->model.validate();
    mlp->data.validate();
    if (mlp->data.dim() != mlp->model.input_dim()) {
      throw Error(Errc::Dimension, fmt::format("dataset has {} features, model expects {}",
                                               mlp->data.dim(), mlp->model.input_dim()));
    }
    if (mlp->data.classes > mlp->model.classes()) {
      throw Error(Errc::Dimension, fmt::format("dataset has {} classes, model outputs {}",
                                               mlp->data.classes, mlp->model.classes()));
    }
    if (std::holds_alternative<NewtonConfig>(optimizer)) {
      throw Error(Errc::InvalidArgument, "Newton steps are only available for landscape tasks");
    }
  } else {
    const auto& ls = std::get<LandscapeTask>(task);
    if (ls.start.size() < 1 || !ls.start.allFinite()) {
      throw Error(Errc::InvalidArgument, "landscape start point must be finite and non-empty");
    }
  }
}

RunResult run_experiment(const ExperimentConfig& cfg, MlpModel* trained) {
  cfg.validate();
  if (const auto* mlp = std::get_if<MlpTask>(&cfg.task)) {
    return run_mlp(cfg, *mlp, trained);
  }
  return run_landscape(cfg, std::get<LandscapeTask>(cfg.task));
}

std::vector<ComparisonEntry> compare(const ExperimentConfig& base,
                                     const std::vector<ScheduleSpec>& schedules) {
  if (schedules.empty()) {
    throw Error(Errc::InvalidArgument, "compare needs at least one schedule");
  }
  std::vector<ComparisonEntry> entries;
  entries.reserve(schedules.size());
  for (const auto& schedule : schedules) {
    ComparisonEntry entry;
    entry.name = std::string(schedule.name());
    ExperimentConfig cfg = base;
    cfg.schedule = schedule;
    try {
      entry.result = run_experiment(cfg);
    } catch (const Error& e) {
      entry.error = e.what();
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

LandscapeTrace landscape_run(const Landscape& landscape, const Eigen::Ref<const Vector>& start,
                             const OptimizerConfig& optimizer, const ScheduleSpec& schedule,
                             int steps) {
  if (steps < 1) {
    throw Error(Errc::InvalidArgument, fmt::format("steps must be >= 1 (got {})", steps));
  }
  Scheduler scheduler(schedule);
  OptimizerState state = fresh_state(optimizer);
  LandscapeTrace trace;
  Vector x = start;
  trace.start_f = eval(landscape, x);
  double best = trace.start_f;
  trace.points.reserve(static_cast<std::size_t>(steps));
  for (int step = 1; step <= steps; ++step) {
    const double lr = scheduler.lr();
    const Vector g = grad(landscape, x);
    if (std::holds_alternative<NewtonConfig>(optimizer)) {
      newton_step(x, g, hessian(landscape, x), lr);
    } else {
      first_order_step(x, g, lr, optimizer, state);
    }
    const double f = eval(landscape, x);
    if (!std::isfinite(f)) {
      diverged(step, f, "step");
    }
    best = std::min(best, f);
    trace.points.push_back({step, f, best, lr});
    scheduler.step();
  }
  trace.final_x = std::move(x);
  return trace;
}

void write_run_csv(std::ostream& out, const RunResult& result) {
  out << "epoch,mean_loss,accuracy,lr_min,lr_mean,lr_max\n";
  for (const auto& m : result.metrics) {
    out << fmt::format("{},{:.10g},{},{:.10g},{:.10g},{:.10g}\n", m.epoch, m.mean_loss,
                       m.accuracy ? fmt::format("{:.10g}", *m.accuracy) : std::string(),
                       m.lr_min, m.lr_mean, m.lr_max);
  }
}

void write_run_metadata(std::ostream& out, const RunResult& result, const ExperimentConfig& cfg) {
  out << "schedule=" << result.schedule_name << '\n';
  out << "seed=" << cfg.seed << '\n';
  out << "optimizer=" << optimizer_name(cfg.optimizer) << '\n';
  out << "epochs_requested=" << cfg.epochs << '\n';
  out << "epochs_completed=" << result.metrics.size() << '\n';
  out << "optimizer_steps=" << result.optimizer_steps << '\n';
  out << "halted=" << (result.halted ? "true" : "false") << '\n';
  out << "halt_epoch=" << (result.halt_epoch ? std::to_string(*result.halt_epoch) : "") << '\n';
  out << "halt_buffer_epochs=" << cfg.halt.buffer_epochs << '\n';
  out << fmt::format("halt_loss_threshold={:.10g}\n", cfg.halt.loss_threshold);
  out << fmt::format("initial_params_checksum={:016x}\n", result.initial_params_checksum);
  out << fmt::format("final_params_checksum={:016x}\n", result.final_params_checksum);
}

void write_trace_csv(std::ostream& out, const LandscapeTrace& trace) {
  out << "step,f,best_f,lr\n";
  for (const auto& p : trace.points) {
    out << fmt::format("{},{:.10g},{:.10g},{:.10g}\n", p.step, p.f, p.best_f, p.lr);
  }
}

}  // namespace anneal
