#include "memgov/scheduler.hpp"

#include <algorithm>
#include <cmath>

namespace memgov {

SchedulerParams scheduler_params_from(const Config& cfg) {
  SchedulerParams p;
  auto tick = [&cfg](const char* key, Tick def) {
    return static_cast<Tick>(cfg.get(key, static_cast<long long>(def)));
  };
  p.hot_budget_ticks = tick("scheduler.hot_budget_ticks", p.hot_budget_ticks);
  p.margin_ticks = tick("scheduler.margin_ticks", p.margin_ticks);
  p.idle_threshold_ticks = tick("scheduler.idle_threshold_ticks", p.idle_threshold_ticks);
  p.thermal_ceiling = cfg.get("scheduler.thermal_ceiling", p.thermal_ceiling);
  p.storage_ceiling = cfg.get("scheduler.storage_ceiling", p.storage_ceiling);
  p.starvation_cycles = cfg.get("scheduler.starvation_cycles", p.starvation_cycles);
  p.est_scale = cfg.get("scheduler.est_scale", p.est_scale);
  p.default_est_ticks = tick("scheduler.default_est_ticks", p.default_est_ticks);
  p.ticks_per_cycle = cfg.get("clock.ticks_per_cycle", p.ticks_per_cycle);
  return p;
}

const char* to_string(WindowPlan::Decision d) {
  switch (d) {
    case WindowPlan::Decision::start_now: return "start-now";
    case WindowPlan::Decision::scheduled: return "scheduled";
    case WindowPlan::Decision::wait: return "wait";
  }
  return "?";
}

WindowPlan Scheduler::plan_window(Tick now, const HomeostasisVector& hv) const {
  const Tick est = est_ > 0 ? est_ : p_.default_est_ticks;

  // Backstop first: however busy the host looks, maintenance cannot be
  // deferred forever.
  const Tick overdue =
      static_cast<Tick>(p_.starvation_cycles * p_.ticks_per_cycle);
  if (last_window_ && now - *last_window_ >= overdue)
    return {WindowPlan::Decision::start_now, now, "starvation-bound"};

  if (hv.next_eta) {
    const Tick start = *hv.next_eta - est - p_.margin_ticks;
    if (now >= start)
      return {WindowPlan::Decision::start_now, now, "eta-window"};
    return {WindowPlan::Decision::scheduled, start, "eta-window"};
  }

  if (hv.idle_ticks < p_.idle_threshold_ticks)
    return {WindowPlan::Decision::wait, 0, "not-idle"};
  if (hv.thermal >= p_.thermal_ceiling)
    return {WindowPlan::Decision::wait, 0, "thermal"};
  if (hv.storage >= p_.storage_ceiling)
    return {WindowPlan::Decision::wait, 0, "storage"};
  return {WindowPlan::Decision::start_now, now, "idle"};
}

void Scheduler::observe_duration(Tick took) {
  est_ = static_cast<Tick>(std::llround(p_.est_scale * static_cast<double>(took)));
}

}  // namespace memgov
