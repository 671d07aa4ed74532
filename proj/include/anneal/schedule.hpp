#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace anneal {

/// Learning-rate range of one annealing cycle.
struct CycleRange {
  double eta_min = 0.001;
  double eta_max = 0.05;

  void validate() const;
};

/// Cycle-length generation and the learning rates every cycle restarts from.
///
/// Cycle 0 lasts `initial_decay_epochs`. Cycle i >= 1 lasts
/// round(restart_interval * multiplier^(i-1)) epochs, never less than one.
/// Every cycle anneals from `restart_lr` down towards `min_decay_lr`.
struct RestartPolicy {
  int initial_decay_epochs = 1;
  int restart_interval = 1;
  double restart_interval_multiplier = 1.5;
  double restart_lr = 0.05;
  double min_decay_lr = 0.001;

  void validate() const;
  CycleRange cycle_range() const { return {min_decay_lr, restart_lr}; }
};

struct WarmupConfig {
  int warmup_epochs = 1;
  double warmup_start_lr = 0.0001;
};

/// Base of the logarithm used by log annealing.
class LogBaseRule {
 public:
  enum class Kind { RangeReciprocal, MinReciprocal, Explicit };

  static LogBaseRule range_reciprocal() noexcept { return LogBaseRule(Kind::RangeReciprocal, 0.0); }
  static LogBaseRule min_reciprocal() noexcept { return LogBaseRule(Kind::MinReciprocal, 0.0); }
  static LogBaseRule explicit_base(double value) noexcept { return LogBaseRule(Kind::Explicit, value); }

  Kind kind() const noexcept { return kind_; }
  double explicit_value() const noexcept { return value_; }

  /// Resolved base for `cycle`; throws Errc::InvalidBase unless finite and > 1.
  double resolve(const CycleRange& cycle) const;

 private:
  LogBaseRule(Kind kind, double value) noexcept : kind_(kind), value_(value) {}

  Kind kind_;
  double value_;
};

enum class ScheduleKind { LogAnnealing, CosineAnnealing, StepDecay, Constant };

std::string_view schedule_kind_name(ScheduleKind kind) noexcept;

/// Parses "log", "cosine", "step" or "constant".
ScheduleKind parse_schedule_kind(std::string_view name);

/// Everything needed to produce the learning rate of any epoch.
///
/// Annealing kinds read `restart`, `warmup` and (log only) `log_base`.
/// StepDecay reads `eta0`, `step_gamma` and `step_size`; Constant reads only
/// `eta0`. Warmup applies to the annealing kinds only.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::Constant;
  RestartPolicy restart;
  WarmupConfig warmup;
  LogBaseRule log_base = LogBaseRule::range_reciprocal();
  double step_gamma = 0.5;
  int step_size = 10;
  double eta0 = 0.0001;

  /// Throws Errc::InvalidArgument naming the first violated constraint.
  void validate() const;

  bool is_annealing() const noexcept {
    return kind == ScheduleKind::LogAnnealing || kind == ScheduleKind::CosineAnnealing;
  }
  int effective_warmup_epochs() const noexcept { return is_annealing() ? warmup.warmup_epochs : 0; }
  std::string_view name() const noexcept { return schedule_kind_name(kind); }
};

/// Cursor over the restart timeline. `t_cur` is 1-based within the cycle.
struct ScheduleState {
  int cycle_index = 0;
  int t_cur = 1;
  int t_i = 1;
  long global_epoch = 0;
  bool restarted = false;  // set when the last advance began a new cycle

  static ScheduleState initial(const RestartPolicy& policy);

  friend bool operator==(const ScheduleState&, const ScheduleState&) = default;
};

/// Length T_i of cycle `cycle_index` under `policy`.
int cycle_length(const RestartPolicy& policy, int cycle_index);

/// Cosine annealing: eta_min + (eta_max - eta_min)(1 + cos(pi t_cur / t_i)) / 2.
double cosine_lr(const CycleRange& cycle, int t_cur, int t_i);

/// Log annealing:
/// |eta_min + (eta_max - eta_min)(1 + log_b(pi t_i / t_cur)) / 2|.
///
/// Peaks above eta_max at the start of a long enough cycle and bottoms out
/// at eta_min + (eta_max - eta_min)(1 + log_b(pi)) / 2, never at eta_min.
double log_lr(const CycleRange& cycle, int t_cur, int t_i, const LogBaseRule& base);

/// Geometric staircase eta0 * gamma^floor(epoch / step_size).
double step_decay_lr(double eta0, double gamma, int step_size, int epoch);

/// Linear ramp from warmup_start_lr (epoch 0) towards target_lr (epoch warmup_epochs).
double warmup_lr(const WarmupConfig& warmup, double target_lr, int epoch);

ScheduleState advance(const ScheduleState& state, const RestartPolicy& policy);

/// Learning rate of `epoch`, computed directly from the cycle boundaries.
double lr_at(const ScheduleSpec& spec, int epoch);

/// Stateful per-epoch scheduler; `lr()` is the rate for the current epoch.
class Scheduler {
 public:
  explicit Scheduler(ScheduleSpec spec);

  double lr() const;
  void step();

  int epoch() const noexcept { return epoch_; }
  bool in_warmup() const noexcept { return epoch_ < spec_.effective_warmup_epochs(); }
  const ScheduleState& state() const noexcept { return state_; }
  const ScheduleSpec& spec() const noexcept { return spec_; }

 private:
  double annealed_lr(const ScheduleState& state) const;

  ScheduleSpec spec_;
  ScheduleState state_;
  int epoch_ = 0;
};

struct ScheduleSample {
  int epoch;
  double lr;
};

std::vector<ScheduleSample> dump_schedule(const ScheduleSpec& spec, int epochs);

/// CSV with header `epoch,lr`, lr printed with 10 significant digits.
void write_schedule_csv(std::ostream& out, const std::vector<ScheduleSample>& samples);

}  // namespace anneal
