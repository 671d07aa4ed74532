#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "anneal/error.hpp"
#include "anneal/random.hpp"
#include "anneal/schedule.hpp"
#include "oracles.hpp"

using namespace anneal;

namespace {

const CycleRange kRange{0.001, 0.1};

// Cycles of 10, 10, 20, 40, ... epochs.
RestartPolicy doubling_policy() { return {10, 10, 2.0, 0.1, 0.001}; }

// Short cycles growing by 1.5x with a one-epoch warmup.
ScheduleSpec short_cycle_spec(ScheduleKind kind) {
  ScheduleSpec spec;
  spec.kind = kind;
  spec.restart = {1, 1, 1.5, 0.05, 0.001};
  spec.warmup = {1, 0.0001};
  return spec;
}

template <typename F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an anneal::Error");
  return Errc::Io;
}

ScheduleSpec random_spec(Rng& rng, ScheduleKind kind) {
  ScheduleSpec spec;
  spec.kind = kind;
  spec.restart.initial_decay_epochs = 1 + static_cast<int>(rng.below(20));
  spec.restart.restart_interval = 1 + static_cast<int>(rng.below(20));
  spec.restart.restart_interval_multiplier = 1.0 + rng.uniform(0.0, 2.0);
  spec.restart.min_decay_lr = rng.uniform(1e-5, 1e-2);
  spec.restart.restart_lr = spec.restart.min_decay_lr + rng.uniform(1e-3, 0.5);
  spec.warmup.warmup_epochs = static_cast<int>(rng.below(6));
  spec.warmup.warmup_start_lr = rng.uniform(1e-6, spec.restart.min_decay_lr);
  spec.step_gamma = rng.uniform(0.1, 0.9);
  spec.step_size = 1 + static_cast<int>(rng.below(30));
  spec.eta0 = rng.uniform(1e-4, 0.5);
  return spec;
}

}  // namespace

TEST_CASE("cosine_lr hits the range ends and the midpoint") {
  CHECK(cosine_lr(kRange, 0, 10) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(cosine_lr(kRange, 10, 10) == doctest::Approx(0.001).epsilon(1e-15));
  CHECK(cosine_lr(kRange, 5, 10) == doctest::Approx(0.0505).epsilon(1e-15));
}

TEST_CASE("cosine boundary identities over cycle lengths 1..10^4") {
  for (int t = 1; t <= 10000; ++t) {
    REQUIRE(std::abs(cosine_lr(kRange, 0, t) - kRange.eta_max) <= 1e-12);
    REQUIRE(std::abs(cosine_lr(kRange, t, t) - kRange.eta_min) <= 1e-12);
  }
}

TEST_CASE("cosine is strictly decreasing within a cycle") {
  for (int t_i : {1, 2, 7, 50, 400}) {
    for (int t = 0; t < t_i; ++t) {
      REQUIRE(cosine_lr(kRange, t + 1, t_i) < cosine_lr(kRange, t, t_i));
    }
  }
}

TEST_CASE("cosine_lr rejects empty or overrun cycles") {
  CHECK(error_code([] { cosine_lr(kRange, 0, 0); }) == Errc::InvalidCycle);
  CHECK(error_code([] { cosine_lr(kRange, 11, 10); }) == Errc::InvalidCycle);
  CHECK(error_code([] { cosine_lr({0.1, 0.1}, 1, 10); }) == Errc::InvalidArgument);
}

TEST_CASE("log_lr matches the frozen high-precision values") {
  // 50-digit evaluations, frozen.
  const auto range = LogBaseRule::range_reciprocal();
  CHECK(log_lr(kRange, 1, 10, range) == doctest::Approx(0.12428685344182694691).epsilon(1e-13));
  CHECK(log_lr(kRange, 10, 10, range) == doctest::Approx(0.075001972357044913518).epsilon(1e-13));
  CHECK(log_lr(kRange, 10, 10, LogBaseRule::min_reciprocal()) ==
        doctest::Approx(0.058702972899453208597).epsilon(1e-13));
  // Spike: the first epoch of a 10-epoch cycle exceeds eta_max.
  CHECK(log_lr(kRange, 1, 10, range) > kRange.eta_max);
}

TEST_CASE("log_lr agrees with the multiprecision oracle") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const double lo = rng.uniform(1e-5, 0.05);
    const double hi = lo + rng.uniform(1e-4, 0.5);
    const int t_i = 1 + static_cast<int>(rng.below(500));
    const int t_cur = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(t_i)));
    const double got = log_lr({lo, hi}, t_cur, t_i, LogBaseRule::range_reciprocal());
    const double want = oracle::log_lr(lo, hi, t_cur, t_i, oracle::BaseRule::RangeReciprocal);
    REQUIRE(std::abs(got - want) <= 1e-12 * want);
  }
}

TEST_CASE("log_lr spike holds for every cycle length of at least 4") {
  const auto range = LogBaseRule::range_reciprocal();
  for (int t = 4; t <= 5000; ++t) {
    REQUIRE(log_lr(kRange, 1, t, range) > kRange.eta_max);
  }
  // pi * 3 < 1 / 0.099, so a 3-epoch cycle stays below eta_max.
  CHECK(log_lr(kRange, 1, 3, range) < kRange.eta_max);
}

TEST_CASE("log_lr is strictly decreasing in t_cur for any base") {
  for (auto base : {LogBaseRule::range_reciprocal(), LogBaseRule::min_reciprocal(),
                    LogBaseRule::explicit_base(1.0001), LogBaseRule::explicit_base(1e6)}) {
    for (int t = 1; t < 200; ++t) {
      REQUIRE(log_lr(kRange, t + 1, 200, base) < log_lr(kRange, t, 200, base));
    }
  }
}

TEST_CASE("log_lr with a huge explicit base approaches the midpoint") {
  const double b = 1e300;
  const double mid = kRange.eta_min + 0.5 * (kRange.eta_max - kRange.eta_min);
  const double got = log_lr(kRange, 10, 10, LogBaseRule::explicit_base(b));
  const double bound = 0.5 * (kRange.eta_max - kRange.eta_min) * std::log(std::numbers::pi) / std::log(b);
  CHECK(std::abs(got - mid) <= bound * (1.0 + 1e-12));
  CHECK(got > mid);
}

TEST_CASE("log_lr guards against t_cur = 0 and bad bases") {
  const auto range = LogBaseRule::range_reciprocal();
  CHECK(error_code([&] { log_lr(kRange, 0, 10, range); }) == Errc::DivisionByZeroGuard);
  CHECK(error_code([] { log_lr(kRange, 1, 10, LogBaseRule::explicit_base(1.0)); }) ==
        Errc::InvalidBase);
  CHECK(error_code([] { log_lr(kRange, 1, 10, LogBaseRule::explicit_base(0.5)); }) ==
        Errc::InvalidBase);
  // Range wider than 1 makes 1/(max - min) < 1.
  CHECK(error_code([&] { log_lr({0.001, 1.5}, 1, 10, range); }) == Errc::InvalidBase);
  CHECK(error_code([] { log_lr({1.5, 2.0}, 1, 10, LogBaseRule::min_reciprocal()); }) ==
        Errc::InvalidBase);
  CHECK(error_code([&] { log_lr(kRange, 11, 10, range); }) == Errc::InvalidCycle);
}

TEST_CASE("step decay staircase") {
  CHECK(step_decay_lr(0.1, 0.5, 10, 0) == 0.1);
  CHECK(step_decay_lr(0.1, 0.5, 10, 10) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(step_decay_lr(0.1, 0.5, 10, 25) == doctest::Approx(0.025).epsilon(1e-15));
  CHECK(error_code([] { step_decay_lr(0.1, 1.0, 10, 0); }) == Errc::CallerContract);
}

TEST_CASE("warmup ramps linearly and ends at warmup_epochs") {
  const WarmupConfig warmup{5, 0.01};
  CHECK(warmup_lr(warmup, 0.1, 0) == 0.01);
  CHECK(warmup_lr(warmup, 0.1, 4) == doctest::Approx(0.082).epsilon(1e-14));
  CHECK(error_code([&] { warmup_lr(warmup, 0.1, 5); }) == Errc::CallerContract);
  CHECK(error_code([] { warmup_lr({0, 0.01}, 0.1, 0); }) == Errc::CallerContract);

  // A zero-length warmup leaves epoch 0 to the schedule proper.
  ScheduleSpec spec = short_cycle_spec(ScheduleKind::CosineAnnealing);
  spec.warmup.warmup_epochs = 0;
  Scheduler scheduler(spec);
  CHECK_FALSE(scheduler.in_warmup());
  CHECK(scheduler.lr() == cosine_lr(spec.restart.cycle_range(), 1, 1));
}

TEST_CASE("advance rolls cycles over with the geometric interval") {
  const RestartPolicy policy = doubling_policy();
  ScheduleState end_of_first{0, 10, 10, 9, false};
  const ScheduleState a = advance(end_of_first, policy);
  CHECK(a == ScheduleState{1, 1, 10, 10, true});

  const ScheduleState b = advance(ScheduleState{1, 10, 10, 19, false}, policy);
  CHECK(b == ScheduleState{2, 1, 20, 20, true});

  const ScheduleState c = advance(ScheduleState{0, 3, 10, 2, false}, policy);
  CHECK(c == ScheduleState{0, 4, 10, 3, false});
}

TEST_CASE("restart timeline matches brute-force replay for 10^3 epochs") {
  for (const RestartPolicy& policy :
       {doubling_policy(), RestartPolicy{1, 1, 1.5, 0.05, 0.001}, RestartPolicy{3, 7, 1.0, 0.1, 0.01},
        RestartPolicy{5, 2, 1.3, 0.1, 0.01}}) {
    const auto expected = oracle::restart_epochs(policy.initial_decay_epochs,
                                                 policy.restart_interval,
                                                 policy.restart_interval_multiplier, 1000);
    std::vector<long> got;
    ScheduleState state = ScheduleState::initial(policy);
    for (long e = 1; e < 1000; ++e) {
      state = advance(state, policy);
      REQUIRE(state.global_epoch == e);
      REQUIRE(state.t_cur >= 1);
      REQUIRE(state.t_cur <= state.t_i);
      if (state.restarted) {
        got.push_back(e);
      }
    }
    CHECK(got == expected);
  }
  const auto doubling = oracle::restart_epochs(10, 10, 2.0, 100);
  CHECK(doubling == std::vector<long>{10, 20, 40, 80});
}

TEST_CASE("cycle_length follows the initial/interval/multiplier rule") {
  const RestartPolicy policy{1, 1, 1.5, 0.05, 0.001};
  const std::vector<int> expected{1, 1, 2, 2, 3, 5, 8, 11, 17};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(cycle_length(policy, static_cast<int>(i)) == expected[i]);
  }
  CHECK(cycle_length(RestartPolicy{1, 1, 2.0, 0.1, 0.01}, 100) > 0);
}

TEST_CASE("lr_at basics") {
  ScheduleSpec constant;
  constant.kind = ScheduleKind::Constant;
  constant.eta0 = 0.0001;
  CHECK(lr_at(constant, 37) == 0.0001);

  ScheduleSpec cosine;
  cosine.kind = ScheduleKind::CosineAnnealing;
  cosine.restart = doubling_policy();
  cosine.warmup = {0, 0.01};
  CHECK(cosine.restart.cycle_range().eta_max == 0.1);
  CHECK(lr_at(cosine, 0) == cosine_lr({0.001, 0.1}, 1, 10));

  // With the 5-epoch warmup from 0.01 the ramp precedes the first cycle.
  cosine.warmup = {5, 0.01};
  CHECK(lr_at(cosine, 0) == 0.01);
  CHECK(lr_at(cosine, 5) == cosine_lr({0.001, 0.1}, 1, 10));
}

TEST_CASE("lr_at equals stateful replay for short log cycles") {
  const ScheduleSpec spec = short_cycle_spec(ScheduleKind::LogAnnealing);
  Scheduler replay(spec);
  for (int e = 0; e <= 20; ++e) {
    REQUIRE(lr_at(spec, e) == replay.lr());
    replay.step();
  }
}

TEST_CASE("lr_at equals stateful replay for random specs of every kind") {
  Rng rng(2024);
  for (auto kind : {ScheduleKind::LogAnnealing, ScheduleKind::CosineAnnealing,
                    ScheduleKind::StepDecay, ScheduleKind::Constant}) {
    for (int s = 0; s < 20; ++s) {
      const ScheduleSpec spec = random_spec(rng, kind);
      Scheduler replay(spec);
      for (int e = 0; e < 1000; ++e) {
        const double lr = replay.lr();
        REQUIRE(lr_at(spec, e) == lr);
        REQUIRE(std::isfinite(lr));
        REQUIRE(lr > 0.0);
        replay.step();
      }
    }
  }
}

TEST_CASE("dump_schedule") {
  ScheduleSpec constant;
  constant.kind = ScheduleKind::Constant;
  constant.eta0 = 0.0001;
  const auto flat = dump_schedule(constant, 3);
  REQUIRE(flat.size() == 3);
  for (int e = 0; e < 3; ++e) {
    CHECK(flat[static_cast<std::size_t>(e)].epoch == e);
    CHECK(flat[static_cast<std::size_t>(e)].lr == 0.0001);
  }
  CHECK(error_code([&] { dump_schedule(constant, 0); }) == Errc::CallerContract);
}

TEST_CASE("short cosine cycles peak at every restart epoch") {
  const ScheduleSpec spec = short_cycle_spec(ScheduleKind::CosineAnnealing);
  const auto samples = dump_schedule(spec, 50);
  const int warm = spec.warmup.warmup_epochs;
  const auto restarts = oracle::restart_epochs(1, 1, 1.5, 50 - warm);
  std::vector<long> starts{0};
  starts.insert(starts.end(), restarts.begin(), restarts.end());
  starts.push_back(50 - warm);
  for (std::size_t c = 0; c + 1 < starts.size(); ++c) {
    const auto begin = static_cast<std::size_t>(starts[c] + warm);
    const auto end = static_cast<std::size_t>(std::min<long>(starts[c + 1] + warm, 50));
    std::size_t argmax = begin;
    for (std::size_t e = begin; e < end; ++e) {
      if (samples[e].lr > samples[argmax].lr) {
        argmax = e;
      }
    }
    CHECK(argmax == begin);
  }
}

TEST_CASE("short log cycles spike above cosine in every cycle") {
  const auto log_curve = dump_schedule(short_cycle_spec(ScheduleKind::LogAnnealing), 50);
  const auto cos_curve = dump_schedule(short_cycle_spec(ScheduleKind::CosineAnnealing), 50);
  const auto restarts = oracle::restart_epochs(1, 1, 1.5, 49);
  std::vector<long> starts{0};
  starts.insert(starts.end(), restarts.begin(), restarts.end());
  starts.push_back(49);
  for (std::size_t c = 0; c + 1 < starts.size(); ++c) {
    double log_max = 0.0;
    double cos_max = 0.0;
    for (long e = starts[c] + 1; e < starts[c + 1] + 1; ++e) {
      log_max = std::max(log_max, log_curve[static_cast<std::size_t>(e)].lr);
      cos_max = std::max(cos_max, cos_curve[static_cast<std::size_t>(e)].lr);
    }
    CHECK(log_max > cos_max);
  }
}

TEST_CASE("schedule CSV uses 10 significant digits") {
  std::ostringstream out;
  write_schedule_csv(out, {{0, 0.12428685344182694}, {1, 0.0001}});
  CHECK(out.str() == "epoch,lr\n0,0.1242868534\n1,0.0001\n");
}

TEST_CASE("spec validation names the violated constraint") {
  ScheduleSpec spec = short_cycle_spec(ScheduleKind::LogAnnealing);
  spec.restart.restart_interval_multiplier = 0.5;
  try {
    spec.validate();
    FAIL("expected validation failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("restart_interval_multiplier") != std::string::npos);
  }
  spec = short_cycle_spec(ScheduleKind::CosineAnnealing);
  spec.restart.min_decay_lr = 0.2;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = short_cycle_spec(ScheduleKind::CosineAnnealing);
  spec.warmup.warmup_start_lr = 0.5;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.kind = ScheduleKind::StepDecay;
  spec.step_gamma = 1.5;
  CHECK_THROWS_AS(spec.validate(), Error);
  CHECK(parse_schedule_kind("cosine") == ScheduleKind::CosineAnnealing);
  CHECK_THROWS_AS(parse_schedule_kind("linear"), Error);
}
