#include "anneal/schedule.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <utility>

#include <fmt/format.h>

#include "anneal/error.hpp"

namespace anneal {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::InvalidArgument, what); }

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void CycleRange::validate() const {
  if (!positive_finite(eta_min)) {
    invalid(fmt::format("eta_min must be finite and > 0 (got {})", eta_min));
  }
  if (!std::isfinite(eta_max) || !(eta_min < eta_max)) {
    invalid(fmt::format("eta_min must be < eta_max (got {} and {})", eta_min, eta_max));
  }
}

void RestartPolicy::validate() const {
  if (initial_decay_epochs < 1) {
    invalid(fmt::format("initial_decay_epochs must be >= 1 (got {})", initial_decay_epochs));
  }
  if (restart_interval < 1) {
    invalid(fmt::format("restart_interval must be >= 1 (got {})", restart_interval));
  }
  if (!std::isfinite(restart_interval_multiplier) || restart_interval_multiplier < 1.0) {
    invalid(fmt::format("restart_interval_multiplier must be >= 1.0 (got {})",
                        restart_interval_multiplier));
  }
  if (!positive_finite(restart_lr)) {
    invalid(fmt::format("restart_lr must be finite and > 0 (got {})", restart_lr));
  }
  if (!positive_finite(min_decay_lr)) {
    invalid(fmt::format("min_decay_lr must be finite and > 0 (got {})", min_decay_lr));
  }
  if (!(min_decay_lr < restart_lr)) {
    invalid(fmt::format("min_decay_lr must be < restart_lr (got {} and {})", min_decay_lr,
                        restart_lr));
  }
}

double LogBaseRule::resolve(const CycleRange& cycle) const {
  double base = 0.0;
  switch (kind_) {
    case Kind::RangeReciprocal:
      base = 1.0 / (cycle.eta_max - cycle.eta_min);
      break;
    case Kind::MinReciprocal:
      base = 1.0 / cycle.eta_min;
      break;
    case Kind::Explicit:
      base = value_;
      break;
  }
  if (!std::isfinite(base) || !(base > 1.0)) {
    throw Error(Errc::InvalidBase, fmt::format("log base must be finite and > 1 (got {})", base));
  }
  return base;
}

std::string_view schedule_kind_name(ScheduleKind kind) noexcept {
  switch (kind) {
    case ScheduleKind::LogAnnealing: return "log";
    case ScheduleKind::CosineAnnealing: return "cosine";
    case ScheduleKind::StepDecay: return "step";
    case ScheduleKind::Constant: return "constant";
  }
  return "unknown";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  for (auto kind : {ScheduleKind::LogAnnealing, ScheduleKind::CosineAnnealing,
                    ScheduleKind::StepDecay, ScheduleKind::Constant}) {
    if (schedule_kind_name(kind) == name) {
      return kind;
    }
  }
  invalid(fmt::format("unknown schedule kind '{}' (expected log, cosine, step or constant)", name));
}

void ScheduleSpec::validate() const {
  switch (kind) {
    case ScheduleKind::LogAnnealing:
    case ScheduleKind::CosineAnnealing:
      restart.validate();
      if (warmup.warmup_epochs < 0) {
        invalid(fmt::format("warmup_epochs must be >= 0 (got {})", warmup.warmup_epochs));
      }
      if (warmup.warmup_epochs > 0) {
        if (!positive_finite(warmup.warmup_start_lr)) {
          invalid(fmt::format("warmup_start_lr must be finite and > 0 (got {})",
                              warmup.warmup_start_lr));
        }
        if (warmup.warmup_start_lr > restart.restart_lr) {
          invalid(fmt::format("warmup_start_lr must be <= restart_lr (got {} and {})",
                              warmup.warmup_start_lr, restart.restart_lr));
        }
      }
      if (kind == ScheduleKind::LogAnnealing) {
        log_base.resolve(restart.cycle_range());
      }
      break;
    case ScheduleKind::StepDecay:
      if (!positive_finite(eta0)) {
        invalid(fmt::format("eta0 must be finite and > 0 (got {})", eta0));
      }
      if (!(step_gamma > 0.0 && step_gamma < 1.0)) {
        invalid(fmt::format("step_gamma must be in (0, 1) (got {})", step_gamma));
      }
      if (step_size < 1) {
        invalid(fmt::format("step_size must be >= 1 (got {})", step_size));
      }
      break;
    case ScheduleKind::Constant:
      // Zero is accepted so that a run can be frozen in place.
      if (!std::isfinite(eta0) || eta0 < 0.0) {
        invalid(fmt::format("eta0 must be finite and >= 0 (got {})", eta0));
      }
      break;
  }
}

ScheduleState ScheduleState::initial(const RestartPolicy& policy) {
  ScheduleState state;
  state.t_i = cycle_length(policy, 0);
  return state;
}

int cycle_length(const RestartPolicy& policy, int cycle_index) {
  if (cycle_index <= 0) {
    return std::max(policy.initial_decay_epochs, 1);
  }
  const double raw = static_cast<double>(policy.restart_interval) *
                     std::pow(policy.restart_interval_multiplier, cycle_index - 1);
  constexpr double kCap = static_cast<double>(std::numeric_limits<int>::max());
  if (!(raw < kCap)) {
    return std::numeric_limits<int>::max();
  }
  return std::max(static_cast<int>(std::lround(raw)), 1);
}

double cosine_lr(const CycleRange& cycle, int t_cur, int t_i) {
  if (t_i <= 0) {
    throw Error(Errc::InvalidCycle, fmt::format("cycle length must be >= 1 (got {})", t_i));
  }
  if (t_cur < 0 || t_cur > t_i) {
    throw Error(Errc::InvalidCycle,
                fmt::format("t_cur must lie in [0, {}] (got {})", t_i, t_cur));
  }
  cycle.validate();
  const double phase = std::numbers::pi * static_cast<double>(t_cur) / static_cast<double>(t_i);
  return cycle.eta_min + 0.5 * (cycle.eta_max - cycle.eta_min) * (1.0 + std::cos(phase));
}

double log_lr(const CycleRange& cycle, int t_cur, int t_i, const LogBaseRule& base) {
  if (t_cur == 0) {
    throw Error(Errc::DivisionByZeroGuard, "log annealing divides by t_cur; t_cur must be >= 1");
  }
  if (t_i <= 0) {
    throw Error(Errc::InvalidCycle, fmt::format("cycle length must be >= 1 (got {})", t_i));
  }
  if (t_cur < 0 || t_cur > t_i) {
    throw Error(Errc::InvalidCycle,
                fmt::format("t_cur must lie in [1, {}] (got {})", t_i, t_cur));
  }
  cycle.validate();
  const double b = base.resolve(cycle);
  const double ratio = std::numbers::pi * static_cast<double>(t_i) / static_cast<double>(t_cur);
  const double log_term = std::log(ratio) / std::log(b);
  return std::abs(cycle.eta_min + 0.5 * (cycle.eta_max - cycle.eta_min) * (1.0 + log_term));
}

double step_decay_lr(double eta0, double gamma, int step_size, int epoch) {
  if (!(gamma > 0.0 && gamma < 1.0) || step_size < 1 || epoch < 0) {
    throw Error(Errc::CallerContract,
                fmt::format("step decay needs 0 < gamma < 1, step_size >= 1, epoch >= 0 "
                            "(got {}, {}, {})",
                            gamma, step_size, epoch));
  }
  return eta0 * std::pow(gamma, epoch / step_size);
}

double warmup_lr(const WarmupConfig& warmup, double target_lr, int epoch) {
  if (epoch < 0 || epoch >= warmup.warmup_epochs) {
    throw Error(Errc::CallerContract,
                fmt::format("warmup covers epochs [0, {}); epoch {} is outside it",
                            warmup.warmup_epochs, epoch));
  }
  const double progress = static_cast<double>(epoch) / static_cast<double>(warmup.warmup_epochs);
  return warmup.warmup_start_lr + progress * (target_lr - warmup.warmup_start_lr);
}

ScheduleState advance(const ScheduleState& state, const RestartPolicy& policy) {
  ScheduleState next = state;
  ++next.global_epoch;
  ++next.t_cur;
  next.restarted = false;
  if (next.t_cur > next.t_i) {
    ++next.cycle_index;
    next.t_cur = 1;
    next.t_i = cycle_length(policy, next.cycle_index);
    next.restarted = true;
  }
  return next;
}

namespace {

double annealed(const ScheduleSpec& spec, int t_cur, int t_i) {
  const CycleRange cycle = spec.restart.cycle_range();
  if (spec.kind == ScheduleKind::LogAnnealing) {
    return log_lr(cycle, t_cur, t_i, spec.log_base);
  }
  return cosine_lr(cycle, t_cur, t_i);
}

}  // namespace

double lr_at(const ScheduleSpec& spec, int epoch) {
  if (epoch < 0) {
    throw Error(Errc::CallerContract, fmt::format("epoch must be >= 0 (got {})", epoch));
  }
  spec.validate();
  switch (spec.kind) {
    case ScheduleKind::Constant:
      return spec.eta0;
    case ScheduleKind::StepDecay:
      return step_decay_lr(spec.eta0, spec.step_gamma, spec.step_size, epoch);
    case ScheduleKind::LogAnnealing:
    case ScheduleKind::CosineAnnealing:
      break;
  }
  const int warmup_epochs = spec.effective_warmup_epochs();
  if (epoch < warmup_epochs) {
    const double target = annealed(spec, 1, cycle_length(spec.restart, 0));
    return warmup_lr(spec.warmup, target, epoch);
  }
  // Walk cycle boundaries until the cycle containing this epoch is found.
  long offset = epoch - warmup_epochs;
  int cycle = 0;
  int length = cycle_length(spec.restart, cycle);
  while (offset >= length) {
    offset -= length;
    length = cycle_length(spec.restart, ++cycle);
  }
  return annealed(spec, static_cast<int>(offset) + 1, length);
}

Scheduler::Scheduler(ScheduleSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  state_ = ScheduleState::initial(spec_.restart);
}

double Scheduler::annealed_lr(const ScheduleState& state) const {
  return annealed(spec_, state.t_cur, state.t_i);
}

double Scheduler::lr() const {
  switch (spec_.kind) {
    case ScheduleKind::Constant:
      return spec_.eta0;
    case ScheduleKind::StepDecay:
      return step_decay_lr(spec_.eta0, spec_.step_gamma, spec_.step_size, epoch_);
    case ScheduleKind::LogAnnealing:
    case ScheduleKind::CosineAnnealing:
      break;
  }
  if (in_warmup()) {
    return warmup_lr(spec_.warmup, annealed_lr(ScheduleState::initial(spec_.restart)), epoch_);
  }
  return annealed_lr(state_);
}

void Scheduler::step() {
  if (!in_warmup()) {
    state_ = advance(state_, spec_.restart);
  }
  ++epoch_;
}

std::vector<ScheduleSample> dump_schedule(const ScheduleSpec& spec, int epochs) {
  if (epochs < 1) {
    throw Error(Errc::CallerContract, fmt::format("epochs must be >= 1 (got {})", epochs));
  }
  Scheduler scheduler(spec);
  std::vector<ScheduleSample> samples;
  samples.reserve(static_cast<std::size_t>(epochs));
  for (int e = 0; e < epochs; ++e) {
    samples.push_back({e, scheduler.lr()});
    scheduler.step();
  }
  return samples;
}

void write_schedule_csv(std::ostream& out, const std::vector<ScheduleSample>& samples) {
  out << "epoch,lr\n";
  for (const auto& s : samples) {
    out << fmt::format("{},{:.10g}\n", s.epoch, s.lr);
  }
}

}  // namespace anneal
