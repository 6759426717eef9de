#pragma once

#include <optional>
#include <string>

#include "memgov/config.hpp"
#include "memgov/types.hpp"

namespace memgov {

// What the host knows about itself when deciding whether to sleep.
// Providers are pluggable; the simulator supplies a deterministic one.
struct HomeostasisVector {
  Tick idle_ticks = 0;            // since the last user interaction
  double thermal = 0.0;           // 0..1 load headroom consumed
  double storage = 0.0;           // 0..1 capacity consumed
  std::optional<Tick> next_eta;   // next known user session, if any
};

struct SchedulerParams {
  Tick hot_budget_ticks = 50;     // per hot-lane task; overrun is reported
  Tick margin_ticks = 15;         // finish this early before a known eta
  Tick idle_threshold_ticks = 30; // opportunistic start needs this much quiet
  double thermal_ceiling = 0.8;
  double storage_ceiling = 0.95;
  int starvation_cycles = 5;      // force a window after this many due cycles
  double est_scale = 1.5;         // pessimism over the last observed duration
  Tick default_est_ticks = 30;
  double ticks_per_cycle = 10.0;
};

SchedulerParams scheduler_params_from(const Config& cfg);

struct WindowPlan {
  enum class Decision { start_now, scheduled, wait };
  Decision decision = Decision::wait;
  Tick start_at = 0;    // meaningful for `scheduled`
  std::string reason;
};

const char* to_string(WindowPlan::Decision d);

// Plans maintenance windows against the homeostasis signal. Two lanes by
// construction: the hot lane (capture and reads) never waits on this; the
// sleep lane runs one window at a time, planned here. A window aborted
// mid-run loses nothing — uncommitted work is discarded and the next plan
// starts from the last commit.
class Scheduler {
 public:
  explicit Scheduler(SchedulerParams p) : p_(p) {}

  WindowPlan plan_window(Tick now, const HomeostasisVector& hv) const;

  // Duration feedback: the next estimate is est_scale x observed.
  void observe_duration(Tick took);
  void note_window_started(Tick now) { last_window_ = now; }

  Tick estimate() const { return est_; }
  Tick hot_budget() const { return p_.hot_budget_ticks; }
  const SchedulerParams& params() const { return p_; }

 private:
  SchedulerParams p_;
  Tick est_ = 0;
  std::optional<Tick> last_window_;
};

}  // namespace memgov
