#include "deskrl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "deskrl/common.hpp"
#include "deskrl/pool.hpp"
#include "deskrl/rng.hpp"

namespace deskrl {

void SrsConfig::validate() const {
  if (alpha_onpolicy < 0.0 || alpha_onpolicy > 1.0)
    throw ConfigError("alpha_onpolicy must be in [0,1]");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (n_main_units < 0 || n_standalone_units < 0) throw ConfigError("unit counts must be >= 0");
  if (alpha_onpolicy < 1.0 && n_standalone_units == 0)
    throw ConfigError("alpha_onpolicy < 1 requires at least one standalone unit");
  if (!(tokens_per_unit_per_tick > 0.0)) throw ConfigError("tokens_per_unit_per_tick must be > 0");
  if (fp8_speedup < 1.0) throw ConfigError("fp8_speedup must be >= 1");
  if (max_length < 1) throw ConfigError("max_length must be >= 1");
  if (!(lognormal_sigma >= 0.0)) throw ConfigError("lognormal_sigma must be >= 0");
  for (long long l : fixed_lengths)
    if (l < 1) throw ConfigError("fixed lengths must be >= 1");
}

namespace {

constexpr long long kTickLimit = 50'000'000;
constexpr double kProgressEps = 1e-9;

// Admission-indexed response lengths: draw i is the same in every scheduler.
class LengthStream {
 public:
  LengthStream(const SrsConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), rng_(CounterRng::keyed({seed, 0x6c656e73ULL})) {}

  long long next() {
    const std::uint64_t i = counter_++;
    if (!cfg_.fixed_lengths.empty())
      return cfg_.fixed_lengths[i % cfg_.fixed_lengths.size()];
    double u1 = rng_.unit_at(2 * i);
    const double u2 = rng_.unit_at(2 * i + 1);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    const double v = std::exp(cfg_.lognormal_mu + cfg_.lognormal_sigma * z);
    const long long len = static_cast<long long>(std::llround(v));
    return std::clamp(len, 1LL, cfg_.max_length);
  }

 private:
  const SrsConfig& cfg_;
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

long long busy_ticks(long long length, double rate) {
  return static_cast<long long>(std::ceil((static_cast<double>(length) - kProgressEps) / rate));
}

struct SimTask {
  long long id = 0;
  long long length = 0;
  double tokens_done = 0.0;
  std::vector<int> segment_versions;
  int min_version = 0;
  int max_version = 0;

  void open_segment(int version) {
    if (segment_versions.empty()) {
      min_version = max_version = version;
      segment_versions.push_back(version);
      return;
    }
    if (segment_versions.back() != version) segment_versions.push_back(version);
    min_version = std::min(min_version, version);
    max_version = std::max(max_version, version);
  }

  bool done() const { return tokens_done + kProgressEps >= static_cast<double>(length); }
};

struct Unit {
  bool busy = false;
  SimTask task;
};

}  // namespace

SimResult simulate_sync(const SrsConfig& config, int n_iterations, std::uint64_t seed) {
  config.validate();
  if (n_iterations < 1) throw InvalidInput("simulate_sync: n_iterations must be >= 1");
  LengthStream lengths(config, seed);
  const double rate = config.tokens_per_unit_per_tick;
  const int batch = config.batch_size;

  SimResult result;
  long long elapsed = 0;
  long long tokens = 0;
  double idle_sum = 0.0;
  for (int it = 1; it <= n_iterations; ++it) {
    long long iter_time = 0;
    long long busy_total = 0;
    long long batch_tokens = 0;
    for (int b = 0; b < batch; ++b) {
      const long long len = lengths.next();
      const long long busy = busy_ticks(len, rate);
      iter_time = std::max(iter_time, busy);
      busy_total += busy;
      batch_tokens += len;
    }
    IterationRecord rec;
    rec.iteration = it;
    rec.duration = iter_time;
    elapsed += iter_time;
    rec.fired_at = elapsed;
    rec.fresh_used = batch;
    rec.pooled_used = 0;
    rec.staleness_hist[0] = batch;
    rec.main_idle_fraction =
        static_cast<double>(iter_time * batch - busy_total) / static_cast<double>(iter_time * batch);
    rec.tokens_consumed = batch_tokens;
    idle_sum += rec.main_idle_fraction;
    tokens += batch_tokens;
    result.iterations.push_back(std::move(rec));
  }
  result.mean_iteration_time = static_cast<double>(elapsed) / n_iterations;
  result.mean_idle_fraction = idle_sum / n_iterations;
  result.tokens_per_tick = static_cast<double>(tokens) / static_cast<double>(elapsed);
  result.counters.admitted = static_cast<long long>(n_iterations) * batch;
  result.counters.completed = result.counters.admitted;
  result.counters.consumed = result.counters.admitted;
  return result;
}

SimResult simulate_streaming(const SrsConfig& config, int n_iterations, std::uint64_t seed,
                             bool collect_log) {
  config.validate();
  if (n_iterations < 1) throw InvalidInput("simulate_streaming: n_iterations must be >= 1");

  LengthStream lengths(config, seed);
  const double main_rate = config.tokens_per_unit_per_tick;
  const double standalone_rate = config.tokens_per_unit_per_tick * config.fp8_speedup;
  const int batch = config.batch_size;
  const int fresh_quota =
      static_cast<int>(std::ceil(config.alpha_onpolicy * static_cast<double>(batch) - 1e-12));

  SimResult result;
  result.warmup_excluded = config.alpha_onpolicy < 1.0 || config.n_standalone_units > 0;

  std::vector<Unit> main_units(static_cast<std::size_t>(config.main_units()));
  std::vector<Unit> standalone_units(static_cast<std::size_t>(config.n_standalone_units));
  std::deque<SimTask> pending_main;
  std::deque<SimTask> parked;
  SamplePool<SimTask> pool(config.capacity());
  SimCounters& counters = result.counters;

  long long next_task_id = 0;
  auto admit = [&]() {
    SimTask task;
    task.id = next_task_id++;
    task.length = lengths.next();
    ++counters.admitted;
    return task;
  };
  auto log = [&](std::string line) {
    if (collect_log) result.event_log.push_back(std::move(line));
  };

  for (int b = 0; b < batch; ++b) pending_main.push_back(admit());

  int version = 1;
  long long tick = 0;
  long long window_start = 0;
  long long idle_ticks = 0;
  int fires = 0;
  int recorded = 0;

  while (recorded < n_iterations) {
    if (tick >= kTickLimit)
      throw StarvationError("simulate_streaming: stalled (pool starved or misconfigured)");

    // Task pickup.
    for (Unit& u : main_units) {
      if (!u.busy && !pending_main.empty()) {
        u.task = std::move(pending_main.front());
        pending_main.pop_front();
        u.task.open_segment(version);
        u.busy = true;
      }
    }
    for (Unit& u : standalone_units) {
      if (u.busy) continue;
      if (!parked.empty()) {
        u.task = std::move(parked.front());
        parked.pop_front();
      } else {
        u.task = admit();
        log("t=" + std::to_string(tick) + " standalone-admit id=" + std::to_string(u.task.id));
      }
      u.task.open_segment(version);
      u.busy = true;
    }

    // Generation.
    for (Unit& u : main_units) {
      if (!u.busy) {
        ++idle_ticks;
        continue;
      }
      u.task.tokens_done += main_rate;
      if (u.task.done()) {
        ++counters.completed;
        const int min_v = u.task.min_version, max_v = u.task.max_version;
        pool.push(std::move(u.task), min_v, max_v);
        u.busy = false;
      }
    }
    for (Unit& u : standalone_units) {
      if (!u.busy) continue;
      u.task.tokens_done += standalone_rate;
      if (u.task.done()) {
        ++counters.completed;
        const int min_v = u.task.min_version, max_v = u.task.max_version;
        pool.push(std::move(u.task), min_v, max_v);
        u.busy = false;
      }
    }

    ++tick;

    if (pool.count_pure(version) < static_cast<std::size_t>(fresh_quota) ||
        pool.size() < static_cast<std::size_t>(batch))
      continue;

    // Fire a training step: the on-policy quota pops pure-current
    // completions, the rest draws from the pool by (staleness, age).
    ++fires;
    IterationRecord rec;
    rec.fired_at = tick;
    rec.duration = tick - window_start;
    long long batch_tokens = 0;
    for (int i = 0; i < batch; ++i) {
      SamplePool<SimTask>::Entry entry;
      const bool quota_slot = i < fresh_quota;
      const bool ok = quota_slot ? pool.pop_pure(version, entry) : pool.pop_best(version, entry);
      if (!ok) throw StarvationError("simulate_streaming: pool underflow at fire");
      ++counters.consumed;
      batch_tokens += entry.item.length;
      rec.staleness_hist[version - entry.item.min_version] += 1;
      if (quota_slot)
        ++rec.fresh_used;
      else
        ++rec.pooled_used;
      result.consumed_segments.push_back(std::move(entry.item.segment_versions));
    }
    rec.tokens_consumed = batch_tokens;
    rec.main_idle_fraction =
        static_cast<double>(idle_ticks) /
        static_cast<double>(static_cast<long long>(main_units.size()) * rec.duration);
    log("t=" + std::to_string(tick) + " fire fresh=" + std::to_string(rec.fresh_used) +
        " pooled=" + std::to_string(rec.pooled_used));

    const bool timed = !(result.warmup_excluded && fires == 1);
    if (timed) {
      rec.iteration = ++recorded;
      result.iterations.push_back(std::move(rec));
    } else {
      result.warmup = std::move(rec);
    }
    window_start = tick;
    idle_ticks = 0;

    // Version bump: park in-flight main tasks, admit the next wave.
    ++version;
    for (Unit& u : main_units) {
      if (!u.busy) continue;
      ++counters.park_events;
      log("t=" + std::to_string(tick) + " park id=" + std::to_string(u.task.id));
      parked.push_back(std::move(u.task));
      u.busy = false;
    }
    for (int b = 0; b < batch; ++b) pending_main.push_back(admit());
  }

  counters.in_pool = static_cast<long long>(pool.size());
  counters.dropped = static_cast<long long>(pool.dropped());
  counters.in_flight = static_cast<long long>(pending_main.size() + parked.size());
  for (const Unit& u : main_units) counters.in_flight += u.busy ? 1 : 0;
  for (const Unit& u : standalone_units) counters.in_flight += u.busy ? 1 : 0;

  long long elapsed = 0;
  long long tokens = 0;
  double idle_sum = 0.0;
  for (const IterationRecord& rec : result.iterations) {
    elapsed += rec.duration;
    tokens += rec.tokens_consumed;
    idle_sum += rec.main_idle_fraction;
  }
  result.mean_iteration_time = static_cast<double>(elapsed) / n_iterations;
  result.mean_idle_fraction = idle_sum / n_iterations;
  result.tokens_per_tick = static_cast<double>(tokens) / static_cast<double>(elapsed);
  return result;
}

CompareResult compare_schedulers(const SrsConfig& config, int n_iterations, std::uint64_t seed) {
  CompareResult out;
  out.sync = simulate_sync(config, n_iterations, seed);
  out.streaming = simulate_streaming(config, n_iterations, seed);
  out.iteration_speedup = out.sync.mean_iteration_time / out.streaming.mean_iteration_time;
  out.token_throughput_ratio = out.streaming.tokens_per_tick / out.sync.tokens_per_tick;
  return out;
}

}  // namespace deskrl
