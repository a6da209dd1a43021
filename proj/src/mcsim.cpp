#include "dfg/mcsim.hpp"

#include <array>
#include <atomic>
#include <bit>
#include <climits>
#include <cmath>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>

namespace dfg {

namespace {


/// Jump tables of one section. Each vertex owns k slots of a Walker alias
/// table over its neighbours plus a kill slot; a 64-bit random r selects
/// slot ⌊rk/2^64⌋ and keeps its own target when the low word of rk is below
/// the slot threshold, otherwise takes the alias target.
struct JumpTables {
  struct Vertex {
    std::int32_t first = 0, slots = 0;
  };
  struct Slot {
    std::uint64_t keep = ~0ULL;
    std::int32_t own = -1, alias = -1;  // -1: killed
  };
  int level = 0;
  std::vector<Vertex> vertices;
  std::vector<Slot> slots;
  std::vector<double> mean_hold;  // m/(Σb + c + d), +inf when nothing happens
  std::vector<char> boundary;     // has edges leaving the section

  explicit JumpTables(const Section& s) : level(s.level) {
    const Index n = s.size();
    if (n >= Index(INT32_MAX)) throw InputError("simulate: section too large");
    const auto& g = s.graph;
    vertices.resize(n);
    mean_hold.resize(n);
    boundary.resize(n);
    std::vector<double> w;
    std::vector<std::int32_t> to;
    for (Index x = 0; x < n; ++x) {
      boundary[x] = s.deficiency(x) > 0;
      w.clear();
      to.clear();
      g.for_each_neighbor(x, [&](Index y, double b) {
        to.push_back(std::int32_t(y));
        w.push_back(b);
      });
      if (g.killing()(x) > 0) {
        to.push_back(-1);
        w.push_back(g.killing()(x));
      }
      // Boundary vertices get no slots so the hot loop tests one field;
      // sampling from them waits until the section has grown past them.
      vertices[x] = {std::int32_t(slots.size()), boundary[x] ? 0 : std::int32_t(w.size())};
      const double total = g.row_sums()(x) + g.killing()(x) + s.deficiency(x);
      mean_hold[x] = total > 0 ? g.measure()(x) / total : INFINITY;
      add_alias(w, to);
    }
  }

  // Vose's method.
  void add_alias(const std::vector<double>& w, const std::vector<std::int32_t>& to) {
    const std::size_t k = w.size(), first = slots.size();
    slots.resize(first + k);
    if (k == 0) return;
    double sum = 0;
    for (double v : w) sum += v;
    std::vector<double> p(k);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < k; ++i) {
      p[i] = w[i] * double(k) / sum;
      (p[i] < 1 ? small : large).push_back(i);
      slots[first + i].own = slots[first + i].alias = to[i];
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back(), l = large.back();
      small.pop_back();
      slots[first + s].keep = p[s] <= 0 ? 0 : std::uint64_t(std::ldexp(p[s], 64));
      slots[first + s].alias = to[l];
      p[l] -= 1 - p[s];
      if (p[l] < 1) {
        large.pop_back();
        small.push_back(l);
      }
    }
    // leftovers are 1 up to rounding and keep their own target
  }

  Index size() const { return Index(mean_hold.size()); }
};

/// Tables shared by all replicas, grown on demand (section ids are stable).
class LazyChain {
 public:
  explicit LazyChain(const ProcessConfig& cfg) : family_(cfg.family) {
    int level = family_->finite() ? 1 : 8;
    for (;;) {
      auto t = std::make_shared<const JumpTables>(family_->section(level));
      if (cfg.start < t->size() && !t->boundary[cfg.start]) {
        current_ = std::move(t);
        break;
      }
      if (family_->finite()) throw InputError("simulate: start vertex not in the graph");
      level *= 2;
    }
  }
  std::shared_ptr<const JumpTables> current() const {
    std::lock_guard lock(mutex_);
    return current_;
  }
  /// Tables in which x is an interior vertex.
  std::shared_ptr<const JumpTables> grow_past(Index x) {
    std::lock_guard lock(mutex_);
    int level = current_->level;
    while (x >= current_->size() || current_->boundary[x]) {
      level *= 2;
      if (level > (1 << 26)) throw InputError("simulate: path left every section the family can build");
      current_ = std::make_shared<const JumpTables>(family_->section(level));
    }
    return current_;
  }

 private:
  FamilyPtr family_;
  mutable std::mutex mutex_;
  std::shared_ptr<const JumpTables> current_;
};

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++: the jump loop draws one word per step and mt19937_64's
/// tempering/twist dominated it. Seeded through splitmix64.
class Engine {
 public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }
  void seed(std::uint64_t s) {
    for (auto& w : state_) w = s = splitmix64(s);
  }
  std::array<std::uint64_t, 4>& state() { return state_; }
  void discard(long n) {
    while (n-- > 0) (*this)();
  }
  result_type operator()() {
    const std::uint64_t r = std::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = std::rotl(state_[3], 45);
    return r;
  }

 private:
  std::array<std::uint64_t, 4> state_{};
};

/// xoshiro256++ on eight streams at once, lane k of each word belonging to
/// stream k; the sequences are those of Engine.
class EngineBlock {
 public:
  using Word = std::uint64_t __attribute__((vector_size(64)));
  static constexpr std::size_t kWidth = 8;

  void load(std::size_t k, Engine& e) {
    for (std::size_t w = 0; w < 4; ++w) s_[w][k] = e.state()[w];
  }
  void store(std::size_t k, Engine& e) const {
    for (std::size_t w = 0; w < 4; ++w) e.state()[w] = s_[w][k];
  }
  Word operator()() {
    const Word r = rotl(s_[0] + s_[3], 23) + s_[0];
    const Word t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return r;
  }

 private:
  static Word rotl(Word x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<Word, 4> s_{};
};

struct Kahan {
  double sum = 0, carry = 0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

/// One replica in flight.
struct Lane {
  long replica = -1;
  Engine rng, chunk_rng;  // chunk_rng: state at the start of the chunk
  std::int32_t x = 0, chunk_x = 0;
  Kahan tau;
  double tau_half = 0;
  long jumps = 0, limit = 0, count = 0;  // count: jumps in the current chunk
  bool killed = false, stuck = false;
  std::vector<std::uint32_t> visits;
  std::vector<std::int32_t> touched;
};

/// Simulates replicas in groups of lanes that step in lockstep, which hides
/// the latency of the table lookups.
///
/// Each path is generated in chunks: the embedded jump chain first, then the
/// chunk's holding time as Σ_x Gamma(visits_x)·m/R(x), which has exactly the
/// law of the sum of the individual exponential holding times. Only the
/// chunk that crosses the horizon needs individual times: its positions are
/// replayed from the saved stream, and given the per-vertex sums the holding
/// times are uniform spacings, drawn from that conditional law. Chunk ends
/// depend on the jump count only, so every replica consumes its own stream
/// identically however it is scheduled.
class LaneGroup {
 public:
  static constexpr long kChunk = 16384;
  static constexpr std::size_t kLanes = 8;

  LaneGroup(const ProcessConfig& cfg, LazyChain& chain, std::size_t lanes)
      : cfg_(cfg), chain_(chain), tables_(chain.current()), lanes_(std::min(lanes, kLanes)) {
    fit();
  }

  template <typename Next, typename Done>
  void run(Next&& next_replica, Done&& done) {
    for (;;) {
      bool any = false;
      for (auto& lane : lanes_) {
        if (lane.replica < 0) start(lane, next_replica());
        if (lane.replica >= 0) {
          begin_chunk(lane);
          any = true;
        }
      }
      if (!any) return;
      step_all();
      for (auto& lane : lanes_)
        if (lane.replica >= 0)
          if (auto out = finish_chunk(lane)) {
            done(lane.replica, *out);
            lane.replica = -1;
          }
    }
  }

 private:
  void fit() {
    const std::size_t n = std::size_t(tables_->size());
    for (auto& lane : lanes_)
      if (lane.visits.size() < n) lane.visits.resize(n, 0);
    if (spent_.size() < n) spent_.resize(n), split_.resize(n);
  }

  void grow(std::int32_t x) {
    tables_ = chain_.grow_past(x);
    fit();
  }

  void start(Lane& lane, long replica) {
    lane.replica = replica;
    if (replica < 0) return;
    lane.rng.seed(cfg_.seed ^ splitmix64(std::uint64_t(replica)));
    lane.x = std::int32_t(cfg_.start);
    lane.tau = {};
    lane.tau_half = 0;
    lane.jumps = 0;
  }

  bool capped() const { return !cfg_.family->finite(); }

  void begin_chunk(Lane& lane) {
    lane.count = 0;
    lane.touched.clear();
    lane.limit = kChunk;
    const long cap = cfg_.jump_cap;
    if (capped()) lane.limit = std::min(lane.limit, (lane.jumps < cap / 2 ? cap / 2 : cap) - lane.jumps);
    lane.killed = lane.stuck = false;
    lane.chunk_rng = lane.rng;
    lane.chunk_x = lane.x;
  }

  /// One jump of the embedded chain from x; returns the target or −1 (killed).
  static std::int32_t jump(const JumpTables::Vertex& v, const JumpTables::Slot* slot, std::uint64_t r) {
    const unsigned __int128 p = static_cast<unsigned __int128>(r) * std::uint64_t(v.slots);
    const auto& s = slot[v.first + std::int32_t(p >> 64)];
    return std::uint64_t(p) < s.keep ? s.own : s.alias;
  }

  /// x has no slots: either the path rests there forever or the section must grow.
  bool resting(std::int32_t x) {
    if (!tables_->boundary[x]) return true;
    grow(x);
    return false;
  }

  enum class Event : std::uint8_t { none, killed, blocked };

  /// Steps K lanes in lockstep until `steps` jumps are done or a step in
  /// which some lane was killed or stood on a vertex without slots (blocked:
  /// that lane did not take the step). Returns the steps run.
  template <std::size_t K>
  long lockstep(const std::size_t* ids, Engine* rngs, std::int32_t* xs, long steps, Event* events) {
    static_assert(K <= EngineBlock::kWidth);
    const auto* vert = tables_->vertices.data();
    const auto* slot = tables_->slots.data();
    EngineBlock block;
    std::array<std::int32_t, K> x;
    std::array<std::uint32_t*, K> visits;
    for (std::size_t k = 0; k < K; ++k) {
      block.load(k, rngs[k]);
      x[k] = xs[k];
      visits[k] = lanes_[ids[k]].visits.data();
    }
    long i = 0;
    bool event = false;
    while (i < steps && !event) {
      const EngineBlock::Word r = block();
      for (std::size_t k = 0; k < K; ++k) {
        const std::int32_t at = x[k];
        const auto v = vert[at];
        if (v.slots == 0) [[unlikely]] {
          events[k] = Event::blocked;
          event = true;
          continue;
        }
        if (visits[k][at]++ == 0) [[unlikely]]
          lanes_[ids[k]].touched.push_back(at);
        const std::int32_t y = jump(v, slot, r[k]);
        if (y < 0) [[unlikely]] {
          events[k] = Event::killed;
          event = true;
          continue;
        }
        x[k] = y;
      }
      ++i;
    }
    for (std::size_t k = 0; k < K; ++k) {
      xs[k] = x[k];
      // a blocked lane left its draw of the last step unused
      if (events[k] == Event::blocked)
        rngs[k].discard(i - 1);
      else
        block.store(k, rngs[k]);
    }
    return i;
  }

  template <std::size_t... K>
  static constexpr auto kernels(std::index_sequence<K...>) {
    return std::array{&LaneGroup::lockstep<K + 1>...};
  }

  void step_all() {
    static constexpr auto kernel = kernels(std::make_index_sequence<kLanes>{});
    // active lanes packed to the front; a lane leaves when its chunk ends
    std::array<std::size_t, kLanes> ids;
    std::array<Engine, kLanes> rng;
    std::array<std::int32_t, kLanes> x;
    std::array<long, kLanes> left;
    std::size_t m = 0;
    for (std::size_t l = 0; l < lanes_.size(); ++l) {
      auto& lane = lanes_[l];
      if (lane.replica < 0) continue;
      lane.count = 0;
      if (lane.limit <= 0) continue;
      ids[m] = l;
      rng[m] = lane.rng;
      x[m] = lane.x;
      left[m] = lane.limit;
      ++m;
    }
    auto retire = [&](std::size_t j) {
      auto& lane = lanes_[ids[j]];
      lane.rng = rng[j];
      lane.x = x[j];
      lane.count = lane.limit - left[j];
      lane.jumps += lane.count;
    };
    while (m > 0) {
      long stride = LONG_MAX;
      for (std::size_t j = 0; j < m; ++j) stride = std::min(stride, left[j]);
      std::array<Event, kLanes> events{};
      const long done = (this->*kernel[m - 1])(ids.data(), rng.data(), x.data(), stride, events.data());
      std::size_t kept = 0;
      for (std::size_t j = 0; j < m; ++j) {
        bool finished = false;
        switch (events[j]) {
          case Event::none:
            left[j] -= done;
            break;
          case Event::killed:
            left[j] -= done;
            lanes_[ids[j]].killed = finished = true;
            break;
          case Event::blocked:
            left[j] -= done - 1;
            if (resting(x[j])) lanes_[ids[j]].stuck = finished = true;
            break;
        }
        if (finished || left[j] == 0) {
          retire(j);
          continue;
        }
        ids[kept] = ids[j];
        rng[kept] = rng[j];
        x[kept] = x[j];
        left[kept] = left[j];
        ++kept;
      }
      m = kept;
    }
  }

  /// Positions of the current chunk, regenerated from the saved stream.
  std::vector<std::int32_t> replay(const Lane& lane) const {
    std::vector<std::int32_t> steps(std::size_t(lane.count));
    Engine r = lane.chunk_rng;
    std::int32_t at = lane.chunk_x;
    const auto* vert = tables_->vertices.data();
    const auto* slot = tables_->slots.data();
    for (auto& s : steps) {
      s = at;
      at = jump(vert[at], slot, r());
    }
    return steps;
  }

  std::optional<PathOutcome> finish_chunk(Lane& lane) {
    const double T = cfg_.horizon;
    const auto& hold = tables_->mean_hold;
    double chunk = 0;
    for (auto v : lane.touched) {
      const double g = boost::random::gamma_distribution<double>(double(lane.visits[v]))(lane.rng);
      spent_[v] = g * hold[v];
      chunk += spent_[v];
    }
    for (auto v : lane.touched) lane.visits[v] = 0;
    PathOutcome out;
    if (lane.tau.sum + chunk >= T) {
      const auto steps = replay(lane);
      boost::random::exponential_distribution<double> expo;
      for (auto v : lane.touched) split_[v] = 0;
      std::vector<double> e(steps.size());
      for (std::size_t i = 0; i < e.size(); ++i) split_[steps[i]] += (e[i] = expo(lane.rng));
      std::size_t i = 0;
      for (; i + 1 < e.size(); ++i) {
        const double h = e[i] / split_[steps[i]] * spent_[steps[i]];
        if (lane.tau.sum + h >= T) break;
        lane.tau.add(h);
      }
      out.status = PathStatus::alive;
      out.time = T;
      out.final_vertex = steps[i];
      out.jumps = lane.jumps - lane.count + long(i);
      return out;
    }
    lane.tau.add(chunk);
    out.jumps = lane.jumps;
    if (lane.killed) {
      --out.jumps;  // the step into the cemetery is not a jump between vertices
      out.status = PathStatus::killed;
      out.time = lane.tau.sum;
      out.final_vertex = lane.x;
      return out;
    }
    if (lane.stuck) {
      out.status = PathStatus::alive;
      out.time = T;
      out.final_vertex = lane.x;
      return out;
    }
    const long cap = cfg_.jump_cap;
    if (capped() && lane.jumps == cap / 2) lane.tau_half = lane.tau.sum;
    if (capped() && lane.jumps == cap) {
      out.status = PathStatus::exploded;
      out.time = lane.tau.sum;
      // The last half of the jumps took tau − tau_half; when the remaining
      // budget is not larger than that, explosion before T is not evident.
      out.censored = T - lane.tau.sum <= lane.tau.sum - lane.tau_half;
      out.final_vertex = lane.x;
      return out;
    }
    return std::nullopt;
  }

  const ProcessConfig& cfg_;
  LazyChain& chain_;
  std::shared_ptr<const JumpTables> tables_;
  std::vector<Lane> lanes_;
  std::vector<double> spent_, split_;
};

Proportion proportion(long count, long n) {
  Proportion p;
  p.count = count;
  p.fraction = double(count) / double(n);
  p.standard_error = std::sqrt(p.fraction * (1 - p.fraction) / double(n));
  return p;
}

std::vector<PathOutcome> run_paths(const ProcessConfig& cfg, int& level) {
  cfg.check();
  LazyChain chain(cfg);
  std::vector<PathOutcome> paths(cfg.replicas);
  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = unsigned(std::min<long>(threads, (cfg.replicas + 63) / 64));
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      LaneGroup group(cfg, chain, LaneGroup::kLanes);
      long block = 0, end = 0;
      group.run(
          [&]() -> long {
            if (block == end) {
              block = next.fetch_add(64);
              if (block >= cfg.replicas) return block = end = -1;
              end = std::min(cfg.replicas, block + 64);
            }
            return block < 0 ? -1 : block++;
          },
          [&](long r, const PathOutcome& out) { paths[r] = out; });
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = cfg.replicas;
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  level = chain.current()->level;
  return paths;
}

}  // namespace

void ProcessConfig::check() const {
  if (!family) throw InputError("simulate: no family");
  if (!(horizon > 0) || !std::isfinite(horizon)) throw InputError("simulate: horizon must be positive");
  if (replicas < 1) throw InputError("simulate: replicas must be ≥ 1");
  if (jump_cap < 1) throw InputError("simulate: jump cap must be ≥ 1");
  if (start < 0) throw InputError("simulate: negative start vertex");
}

Json ProcessConfig::to_json() const {
  return {{"family", family ? family->name() : ""}, {"start", start}, {"horizon", horizon}, {"replicas", replicas},
          {"jump_cap", jump_cap}, {"seed", seed}};
}

PathOutcome simulate_path(const ProcessConfig& config, long replica) {
  config.check();
  if (replica < 0 || replica >= config.replicas) throw InputError("simulate_path: replica out of range");
  LazyChain chain(config);
  LaneGroup group(config, chain, 1);
  PathOutcome result;
  bool issued = false;
  group.run([&]() -> long { return issued ? -1 : (issued = true, replica); },
            [&](long, const PathOutcome& out) { result = out; });
  return result;
}

SimulationTally simulate(const ProcessConfig& config) {
  SimulationTally t;
  t.paths = run_paths(config, t.final_level);
  t.replicas = config.replicas;
  t.horizon = config.horizon;
  long alive = 0, killed = 0, exploded = 0, censored = 0;
  for (const auto& p : t.paths) {
    t.max_jumps = std::max(t.max_jumps, p.jumps);
    switch (p.status) {
      case PathStatus::alive:
        ++alive;
        ++t.occupancy[p.final_vertex];
        break;
      case PathStatus::killed: ++killed; break;
      case PathStatus::exploded: ++(p.censored ? censored : exploded); break;
    }
  }
  const long n = t.replicas;
  t.alive = proportion(alive, n);
  t.killed = proportion(killed, n);
  t.exploded = proportion(exploded, n);
  t.censored = proportion(censored, n);
  t.censoring_warning = t.censored.fraction > 1e-3;
  return t;
}

Proportion SimulationTally::occupancy_at(Index x) const {
  const auto it = occupancy.find(x);
  return proportion(it == occupancy.end() ? 0 : it->second, replicas);
}

Json SimulationTally::to_json(bool with_occupancy) const {
  auto prop = [](const Proportion& p) {
    return Json{{"count", p.count}, {"fraction", p.fraction}, {"stderr", p.standard_error}};
  };
  Json j{{"replicas", replicas},         {"horizon", horizon},
         {"alive", prop(alive)},         {"killed", prop(killed)},
         {"exploded", prop(exploded)},   {"censored", prop(censored)},
         {"max_jumps", max_jumps},       {"section_level", final_level},
         {"censoring_warning", censoring_warning}};
  if (with_occupancy) {
    Json occ = Json::object();
    for (const auto& [x, c] : occupancy) occ[std::to_string(x)] = c;
    j["occupancy"] = occ;
  }
  return j;
}

MCurveEstimate estimate_M_curve(const ProcessConfig& config, const std::vector<double>& times) {
  if (times.empty()) throw InputError("estimate_M_curve: empty time grid");
  ProcessConfig cfg = config;
  cfg.horizon = *std::max_element(times.begin(), times.end());
  int level = 0;
  const auto paths = run_paths(cfg, level);
  MCurveEstimate est;
  est.replicas = cfg.replicas;
  est.times = times;
  const double n = double(cfg.replicas);
  for (double t : times) {
    long lost = 0, cens = 0;
    for (const auto& p : paths)
      if (p.status == PathStatus::exploded && p.time <= t) ++(p.censored ? cens : lost);
    const double m = 1 - double(lost + cens) / n;
    const double half = 1.959963984540054 * std::sqrt(m * (1 - m) / n);
    est.M.push_back(m);
    est.lower.push_back(std::max(0.0, m - half));
    est.upper.push_back(std::min(1.0, m + half));
    est.censored.push_back(double(cens) / n);
  }
  return est;
}

}  // namespace dfg
