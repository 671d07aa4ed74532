#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "anneal/dataio.hpp"
#include "anneal/landscape.hpp"
#include "anneal/micronet.hpp"
#include "anneal/optim.hpp"
#include "anneal/schedule.hpp"

namespace anneal {

/// Early stop: halt once more than `buffer_epochs` epochs have completed and
/// the epoch's mean loss is strictly above `loss_threshold`.
struct HaltRule {
  int buffer_epochs = 2;
  double loss_threshold = 4.5;

  void validate() const;
};

/// `epoch` counts completed epochs, starting at 1.
bool check_halt(const HaltRule& rule, int epoch, double mean_loss);

struct NewtonConfig {};

using OptimizerConfig = std::variant<SgdConfig, AdamConfig, NewtonConfig>;

std::string optimizer_name(const OptimizerConfig& optimizer);

struct MlpTask {
  MlpSpec model;
  Dataset data;
};

/// One full-gradient optimizer step per epoch on an analytic objective.
struct LandscapeTask {
  Landscape landscape = Landscape::rastrigin();
  Vector start;
};

struct ExperimentConfig {
  std::variant<MlpTask, LandscapeTask> task;
  OptimizerConfig optimizer = SgdConfig{};
  ScheduleSpec schedule;
  int epochs = 60;
  int batch_size = 128;  // clamped to the dataset size
  std::uint64_t seed = 7;
  HaltRule halt;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based; trained with the schedule's lr for epoch - 1
  double mean_loss = 0.0;
  std::optional<double> accuracy;  // classification tasks only
  double lr_min = 0.0;
  double lr_mean = 0.0;
  double lr_max = 0.0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct RunResult {
  std::string schedule_name;
  std::vector<EpochMetrics> metrics;
  bool halted = false;
  std::optional<int> halt_epoch;
  long optimizer_steps = 0;
  std::uint64_t initial_params_checksum = 0;
  std::uint64_t final_params_checksum = 0;

  friend bool operator==(const RunResult&, const RunResult&) = default;
};

/// Seeded training loop. Per epoch: take the schedule's lr, run every
/// shuffled batch through one optimizer step, record metrics, then apply the
/// halt rule. A non-finite loss that does not trigger the halt raises
/// DivergenceError carrying the epoch and loss. For MLP tasks the final
/// weights are copied into `trained` when it is non-null.
RunResult run_experiment(const ExperimentConfig& cfg, MlpModel* trained = nullptr);

struct ComparisonEntry {
  std::string name;
  std::optional<RunResult> result;
  std::string error;  // set when the run failed
};

/// Runs `base` once per schedule; only the schedule differs between runs.
/// Failures are reported per entry and never stop the other runs.
std::vector<ComparisonEntry> compare(const ExperimentConfig& base,
                                     const std::vector<ScheduleSpec>& schedules);

struct TracePoint {
  int step = 0;  // 1-based
  double f = 0.0;  // objective after the step
  double best_f = 0.0;  // running minimum of f, including the start point
  double lr = 0.0;

  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

struct LandscapeTrace {
  double start_f = 0.0;
  std::vector<TracePoint> points;
  Vector final_x;
};

/// Throws DivergenceError with the step index when f becomes non-finite.
LandscapeTrace landscape_run(const Landscape& landscape, const Eigen::Ref<const Vector>& start,
                             const OptimizerConfig& optimizer, const ScheduleSpec& schedule,
                             int steps);

/// Header `epoch,mean_loss,accuracy,lr_min,lr_mean,lr_max`, 10 significant digits.
/// Accuracy is left empty for tasks without labels.
void write_run_csv(std::ostream& out, const RunResult& result);

/// key=value sidecar: schedule, seed, optimizer, halt status, checksums.
void write_run_metadata(std::ostream& out, const RunResult& result, const ExperimentConfig& cfg);

/// Header `step,f,best_f,lr`.
void write_trace_csv(std::ostream& out, const LandscapeTrace& trace);

}  // namespace anneal
