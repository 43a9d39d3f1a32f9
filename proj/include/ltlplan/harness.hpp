#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ltlplan/graph.hpp"
#include "ltlplan/model.hpp"
#include "ltlplan/product.hpp"
#include "ltlplan/synthesis.hpp"

namespace ltlplan {

/// Counter-based splitmix64 stream; one independent stream per Monte-Carlo
/// run index so aggregation is order-independent.  Samples are identical
/// across platforms (no standard-library distributions involved).
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    state_ = seed ^ (0x9E3779B97F4A7C15ull * (stream + 1));
    next_u64();  // decouple nearby streams
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// CDF walk; the tail absorbs any rounding slack.
  int categorical(const std::vector<double>& probs) {
    const double u = uniform01();
    double acc = 0.0;
    int last = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      last = static_cast<int>(i);
      acc += probs[i];
      if (u < acc) return last;
    }
    require(last >= 0, Errc::InternalInvariant, "empty categorical");
    return last;
  }

 private:
  std::uint64_t state_;
};

/// Executable policy: the stochastic product policy, optionally overridden
/// by a Round-Robin baseline on one AMEC's states.  Round-Robin visit
/// counters are the only mutable piece and are confined to one simulation.
class ExecutionPolicy {
 public:
  ExecutionPolicy(const Product& rp, const ProductPolicy& base)
      : rp_(&rp), base_(&base) {}

  void add_round_robin(const RoundRobinPolicy* rr) { rr_.push_back(rr); }

  void reset() const {
    for (const auto* rr : rr_) rr->reset();
  }

  int choose(int x, Rng& rng) const {
    for (const auto* rr : rr_)
      if (rr->covers(x)) return rr->next_action(x);
    return rng.categorical(base_->probs[x]);
  }

  const Product& product() const { return *rp_; }

 private:
  const Product* rp_;
  const ProductPolicy* base_;
  std::vector<const RoundRobinPolicy*> rr_;
};

struct TrajStep {
  int x = 0;
  int action = 0;
  bool eps = false;
  int model_action = -1;  // -1 on eps steps: the model does not move
  int x_next = 0;
  double exec_cost = 0.0;
  double viol_cost = 0.0;
};

struct Trajectory {
  std::uint64_t seed = 0;
  int horizon = 0;
  std::vector<TrajStep> steps;
  bool deadlocked = false;
  double total_exec = 0.0;
  double total_viol = 0.0;
};

/// Executes the policy for T steps from x0 with a seeded deterministic
/// stream.  An eps step advances only the automaton component and emits no
/// model action.  Successors are sampled from the product rows, which is
/// the same joint law as sampling p_S then p_L.
inline Trajectory simulate(const ExecutionPolicy& pol, int horizon,
                           std::uint64_t seed, std::uint64_t stream = 0) {
  const Product& rp = pol.product();
  Trajectory traj;
  traj.seed = seed;
  traj.horizon = horizon;
  Rng rng(seed, stream);
  pol.reset();
  int x = rp.x0;
  for (int t = 0; t < horizon; ++t) {
    if (rp.actions[x].empty()) {
      traj.deadlocked = true;
      break;
    }
    const int u = pol.choose(x, rng);
    const ProductAction& act = rp.actions[x][u];
    std::vector<double> probs;
    probs.reserve(act.succ.size());
    for (const auto& sc : act.succ) probs.push_back(sc.p);
    const int si = rng.categorical(probs);
    const ProductSucc& sc = act.succ[si];
    TrajStep step;
    step.x = x;
    step.action = u;
    step.eps = act.is_eps();
    step.model_action = act.model_action;
    step.x_next = sc.x;
    step.exec_cost = act.exec_cost;
    step.viol_cost = sc.viol;
    traj.total_exec += step.exec_cost;
    traj.total_viol += step.viol_cost;
    traj.steps.push_back(step);
    x = sc.x;
  }
  return traj;
}

struct RunRecord {
  int run = 0;
  bool reached_amec = false;
  int amec_entry_step = -1;
  double aeps = 0.0;
  double avps = 0.0;
  double suffix_viol_total = 0.0;
  int accepting_visits = 0;
  bool satisfied = false;
};

struct RunStats {
  int runs = 0;
  int horizon = 0;
  int k_accepting = 3;
  std::vector<RunRecord> records;
  double reach_frequency = 0.0;
  double satisfaction_frequency = 0.0;
  double mean_aeps = 0.0;
  double mean_avps = 0.0;
  double q05_avps = 0.0, q50_avps = 0.0, q95_avps = 0.0;
};

struct McOptions {
  int runs = 1000;
  int horizon = 300;
  std::uint64_t seed = 1;
  int k_accepting = 3;
};

inline RunStats monte_carlo(const ExecutionPolicy& pol,
                            const std::vector<char>& in_amec,
                            const McOptions& opts) {
  const Product& rp = pol.product();
  RunStats stats;
  stats.runs = opts.runs;
  stats.horizon = opts.horizon;
  stats.k_accepting = opts.k_accepting;
  stats.records.reserve(opts.runs);
  for (int run = 0; run < opts.runs; ++run) {
    const Trajectory traj = simulate(pol, opts.horizon, opts.seed, run);
    RunRecord rec;
    rec.run = run;
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const TrajStep& st = traj.steps[t];
      if (rec.amec_entry_step < 0 && !in_amec.empty() && in_amec[st.x])
        rec.amec_entry_step = static_cast<int>(t);
      if (rec.amec_entry_step >= 0) rec.suffix_viol_total += st.viol_cost;
      if (rp.accepting[st.x_next]) ++rec.accepting_visits;
    }
    rec.reached_amec = rec.amec_entry_step >= 0;
    const double n = std::max<double>(1.0, traj.steps.size());
    rec.aeps = traj.total_exec / n;
    rec.avps = traj.total_viol / n;
    rec.satisfied = rec.accepting_visits >= opts.k_accepting;
    stats.records.push_back(rec);
  }
  double reach = 0.0, sat = 0.0, se = 0.0, sv = 0.0;
  std::vector<double> avps;
  avps.reserve(stats.records.size());
  for (const auto& r : stats.records) {
    reach += r.reached_amec ? 1.0 : 0.0;
    sat += r.satisfied ? 1.0 : 0.0;
    se += r.aeps;
    sv += r.avps;
    avps.push_back(r.avps);
  }
  const double n = std::max<double>(1.0, stats.records.size());
  stats.reach_frequency = reach / n;
  stats.satisfaction_frequency = sat / n;
  stats.mean_aeps = se / n;
  stats.mean_avps = sv / n;
  std::sort(avps.begin(), avps.end());
  auto q = [&](double f) {
    if (avps.empty()) return 0.0;
    const std::size_t i = static_cast<std::size_t>(f * (avps.size() - 1));
    return avps[i];
  };
  stats.q05_avps = q(0.05);
  stats.q50_avps = q(0.50);
  stats.q95_avps = q(0.95);
  return stats;
}

// ---------------------------------------------------------------------------
// Grid-world generator
// ---------------------------------------------------------------------------

/// Benchmark grid: actions Up/Right/Down/Left/Stay; the desired move
/// succeeds with probability p_ok and the remainder splits uniformly over
/// the two perpendicular moves.  Stay is deterministic.  Move mass that
/// would leave the grid collapses onto staying in place.
struct GridSpec {
  struct CellLabel {
    int col = 0, row = 0;
    // (props, p); any missing mass stays on the empty label
    std::vector<std::pair<std::vector<std::string>, double>> dist;
  };

  int width = 0, height = 0;
  double p_ok = 0.85;
  std::array<double, 5> action_costs = {3.0, 4.0, 2.0, 3.0, 1.0};
  std::vector<std::string> aps;
  std::vector<CellLabel> cells;
  int init_col = 0, init_row = 0;
};

inline PlMdp grid_world(const GridSpec& spec) {
  require(spec.width > 0 && spec.height > 0, Errc::BadDocument,
          "grid must be nonempty");
  require(spec.p_ok > 0.0 && spec.p_ok <= 1.0, Errc::BadDocument,
          "p_ok must lie in (0,1]");
  PlMdp m;
  m.aps = spec.aps;
  auto idx = [&](int c, int r) { return r * spec.width + c; };
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c)
      m.state_names.push_back("c" + std::to_string(c) + "_" +
                              std::to_string(r));
  const int n = m.num_states();
  m.labels.assign(n, {{0, 1.0}});
  for (const auto& cell : spec.cells) {
    require(cell.col >= 0 && cell.col < spec.width && cell.row >= 0 &&
                cell.row < spec.height,
            Errc::BadDocument, "labeled cell outside the grid");
    std::vector<LabelEntry> entries;
    double total = 0.0;
    for (const auto& [props, p] : cell.dist) {
      Letter bits = 0;
      for (const auto& ap : props) {
        auto it = std::find(m.aps.begin(), m.aps.end(), ap);
        require(it != m.aps.end(), Errc::BadDocument,
                "cell uses undeclared ap '" + ap + "'");
        bits |= Letter{1} << (it - m.aps.begin());
      }
      if (p > 0.0) entries.push_back({bits, p});
      total += p;
    }
    require(total <= 1.0 + kStochasticTol, Errc::ProbabilitySumError,
            "cell label mass above 1");
    if (total < 1.0 - kStochasticTol) entries.push_back({0, 1.0 - total});
    m.labels[idx(cell.col, cell.row)] = std::move(entries);
  }

  static const char* kNames[5] = {"Up", "Right", "Down", "Left", "Stay"};
  static const int dc[4] = {0, 1, 0, -1};
  static const int dr[4] = {-1, 0, 1, 0};
  m.actions.resize(n);
  const double slip = (1.0 - spec.p_ok) / 2.0;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      const int s = idx(c, r);
      for (int a = 0; a < 5; ++a) {
        ModelAction act;
        act.name = kNames[a];
        act.cost = spec.action_costs[a];
        auto land = [&](int col, int row, double p) {
          if (p <= 0.0) return;
          int t = s;  // off-grid mass stays in place
          if (col >= 0 && col < spec.width && row >= 0 && row < spec.height)
            t = idx(col, row);
          for (auto& [tt, pp] : act.dist)
            if (tt == t) {
              pp += p;
              return;
            }
          act.dist.emplace_back(t, p);
        };
        if (a == 4) {
          act.dist.emplace_back(s, 1.0);
        } else {
          land(c + dc[a], r + dr[a], spec.p_ok);
          const int left = (a + 3) % 4, right = (a + 1) % 4;
          land(c + dc[left], r + dr[left], slip);
          land(c + dc[right], r + dr[right], slip);
        }
        m.actions[s].push_back(std::move(act));
      }
    }
  }
  m.initial_state = idx(spec.init_col, spec.init_row);
  const auto& init_labels = m.labels[m.initial_state];
  const auto best = std::max_element(
      init_labels.begin(), init_labels.end(),
      [](const LabelEntry& a, const LabelEntry& b) { return a.p < b.p; });
  m.initial_label = best->props;
  return m;
}

// ---------------------------------------------------------------------------
// Built-in benchmark bundles
// ---------------------------------------------------------------------------

struct CaseBundle {
  std::string name;
  GridSpec grid;
  std::string ldba_file;  // relative to the data directory
  double gamma = 0.9;
  double beta = 100.0;
  double eta = 0.5;
  std::string note;
};

/// Reproducible benchmark bundles.  Obstacle and label probabilities not
/// fully pinned by the source scenarios use documented values; those cases
/// are inspired reconstructions rather than exact reproductions.
inline std::vector<CaseBundle> builtin_cases() {
  std::vector<CaseBundle> out;

  {  // surveillance of two bases, one walled off by probabilistic obstacles
    CaseBundle cb;
    cb.name = "example1";
    cb.grid.width = 5;
    cb.grid.height = 4;
    cb.grid.p_ok = 0.8;
    cb.grid.action_costs = {2, 2, 2, 2, 2};
    cb.grid.aps = {"base1", "base2", "obs"};
    cb.grid.cells = {
        {2, 2, {{{"base1"}, 1.0}}},
        {0, 3, {{{"base2"}, 1.0}}},
        {2, 1, {{{"obs"}, 0.5}}},
        {1, 2, {{{"obs"}, 0.5}}},
        {3, 2, {{{"obs"}, 0.5}}},
        {2, 3, {{{"obs"}, 0.5}}},
    };
    cb.grid.init_col = 0;
    cb.grid.init_row = 0;
    cb.ldba_file = "ldba/surveil2_safe.ldba.json";
    cb.note = "infeasible: base1 ringed by p=0.5 obstacles";
    out.push_back(cb);
  }

  {  // three bases plus delivery hand-off, fully feasible
    CaseBundle cb;
    cb.name = "case1";
    cb.grid.width = 7;
    cb.grid.height = 4;
    cb.grid.aps = {"base1", "base2", "base3", "delivery", "obs"};
    cb.grid.cells = {
        {0, 0, {{{"base1"}, 1.0}}},    {6, 0, {{{"base2"}, 1.0}}},
        {0, 3, {{{"base3"}, 1.0}}},    {3, 0, {{{"delivery"}, 1.0}}},
        {3, 2, {{{"delivery"}, 1.0}}}, {1, 2, {{{"obs"}, 1.0}}},
        {5, 2, {{{"obs"}, 1.0}}},
    };
    cb.grid.init_col = 6;
    cb.grid.init_row = 3;
    cb.ldba_file = "ldba/case1.ldba.json";
    cb.note = "feasible surveillance with delivery interleaving";
    out.push_back(cb);
  }

  {  // pickup/upload variants around a pocketed upload2
    const double u2p[4] = {0.9, 0.3, 0.3, 1.0};
    const double ring[4] = {0.1, 0.2, 0.8, 1.0};
    const char* suffix[4] = {"a", "b", "c", "d"};
    for (int v = 0; v < 4; ++v) {
      CaseBundle cb;
      cb.name = std::string("case2-") + suffix[v];
      cb.grid.width = 6;
      cb.grid.height = 5;
      cb.grid.aps = {"pickup", "upload1", "upload2", "upload3", "obs"};
      cb.grid.cells = {
          {0, 4, {{{"pickup"}, 1.0}}},   {0, 0, {{{"upload1"}, 1.0}}},
          {5, 0, {{{"upload3"}, 1.0}}},  {3, 2, {{{"upload2"}, u2p[v]}}},
          {3, 1, {{{"obs"}, ring[v]}}},  {2, 2, {{{"obs"}, ring[v]}}},
          {4, 2, {{{"obs"}, ring[v]}}},  {3, 3, {{{"obs"}, ring[v]}}},
      };
      cb.grid.init_col = 1;
      cb.grid.init_row = 4;
      cb.ldba_file = "ldba/case2.ldba.json";
      cb.note = std::string("upload2 p=") + std::to_string(u2p[v]) +
                ", ring obstacles p=" + std::to_string(ring[v]);
      out.push_back(cb);
    }
  }

  {  // ordered visit t1 then t2, feasible and sealed variants
    for (int sealed = 0; sealed < 2; ++sealed) {
      CaseBundle cb;
      cb.name = sealed ? "case3-sealed" : "case3-feasible";
      cb.grid.width = 8;
      cb.grid.height = 8;
      cb.grid.aps = {"t1", "t2", "obs"};
      cb.grid.cells = {
          {6, 1, {{{"t1"}, 1.0}}},
          {1, 6, {{{"t2"}, 1.0}}},
          {3, 3, {{{"obs"}, 1.0}}},
          {4, 5, {{{"obs"}, 1.0}}},
      };
      if (sealed) {
        cb.grid.cells.push_back({6, 0, {{{"obs"}, 1.0}}});
        cb.grid.cells.push_back({5, 1, {{{"obs"}, 1.0}}});
        cb.grid.cells.push_back({7, 1, {{{"obs"}, 1.0}}});
        cb.grid.cells.push_back({6, 2, {{{"obs"}, 1.0}}});
      }
      cb.grid.init_col = 0;
      cb.grid.init_row = 0;
      cb.ldba_file = "ldba/case3.ldba.json";
      cb.note = sealed ? "t1 sealed by certain obstacles" : "feasible ordering";
      out.push_back(cb);
    }
  }

  {  // reach b1 then b2 where b2 sits behind probabilistic obstacles
    CaseBundle cb;
    cb.name = "prefix-demo";
    cb.grid.width = 5;
    cb.grid.height = 4;
    cb.grid.p_ok = 0.8;
    cb.grid.action_costs = {2, 2, 2, 2, 2};
    cb.grid.aps = {"b1", "b2", "obs"};
    cb.grid.cells = {
        {0, 2, {{{"b1"}, 1.0}}},  {4, 1, {{{"b2"}, 1.0}}},
        {4, 0, {{{"obs"}, 0.5}}}, {3, 1, {{{"obs"}, 0.5}}},
        {4, 2, {{{"obs"}, 0.5}}},
    };
    cb.grid.init_col = 0;
    cb.grid.init_row = 0;
    cb.gamma = 0.3;
    cb.ldba_file = "ldba/seq_b1_b2_safe.ldba.json";
    cb.note = "sequential visit; gamma trades cost against success";
    out.push_back(cb);
  }

  {  // three-base surveillance with b3 sealed for sure
    CaseBundle cb;
    cb.name = "suffix-demo";
    cb.grid.width = 6;
    cb.grid.height = 5;
    cb.grid.p_ok = 0.8;
    cb.grid.action_costs = {2, 2, 2, 2, 2};
    cb.grid.aps = {"b1", "b2", "b3", "obs"};
    cb.grid.cells = {
        {0, 0, {{{"b1"}, 1.0}}},  {5, 0, {{{"b2"}, 1.0}}},
        {2, 3, {{{"b3"}, 1.0}}},  {2, 2, {{{"obs"}, 1.0}}},
        {1, 3, {{{"obs"}, 1.0}}}, {3, 3, {{{"obs"}, 1.0}}},
        {2, 4, {{{"obs"}, 1.0}}},
    };
    cb.grid.init_col = 0;
    cb.grid.init_row = 4;
    cb.ldba_file = "ldba/surveil3_safe.ldba.json";
    cb.note = "infeasible: b3 unreachable without certain obstacles";
    out.push_back(cb);
  }

  {  // desk-scale case: two-region patrol on a 30x30 grid
    CaseBundle cb;
    cb.name = "grid30";
    cb.grid.width = 30;
    cb.grid.height = 30;
    cb.grid.aps = {"a", "b"};
    cb.grid.cells = {
        {2, 2, {{{"a"}, 1.0}}},
        {27, 27, {{{"b"}, 1.0}}},
    };
    cb.grid.init_col = 0;
    cb.grid.init_row = 0;
    cb.ldba_file = "ldba/gf_a_and_gf_b.ldba.json";
    cb.note = "900-state patrol benchmark";
    out.push_back(cb);
  }

  return out;
}

inline const CaseBundle& find_case(const std::vector<CaseBundle>& cases,
                                   const std::string& name) {
  for (const auto& cb : cases)
    if (cb.name == name) return cb;
  fail(Errc::BadDocument, "unknown case '" + name + "'");
}

// ---------------------------------------------------------------------------
// CSV emitters (plotting stays external)
// ---------------------------------------------------------------------------

inline std::string trajectory_csv(const Product& rp, const Trajectory& traj) {
  std::ostringstream out;
  out << "step,state,label,q,kind,action,target_q,exec_cost,viol_cost\n";
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const TrajStep& st = traj.steps[t];
    const ProductState& ps = rp.states[st.x];
    out << t << "," << rp.model->state_names[ps.s] << ","
        << letter_to_string(ps.l, rp.ldba->aps) << ","
        << rp.ldba->state_names[ps.q] << "," << (st.eps ? "eps" : "move") << ","
        << (st.eps ? "-"
                   : rp.model->actions[ps.s][st.model_action].name.c_str())
        << "," << rp.ldba->state_names[rp.actions[st.x][st.action].target_q]
        << "," << st.exec_cost << "," << st.viol_cost << "\n";
  }
  return out.str();
}

inline std::string stats_csv(const RunStats& stats) {
  std::ostringstream out;
  out << "run,reached_amec,amec_entry_step,aeps,avps,suffix_viol_total,"
         "accepting_visits,satisfied\n";
  for (const auto& r : stats.records) {
    out << r.run << "," << (r.reached_amec ? 1 : 0) << "," << r.amec_entry_step
        << "," << r.aeps << "," << r.avps << "," << r.suffix_viol_total << ","
        << r.accepting_visits << "," << (r.satisfied ? 1 : 0) << "\n";
  }
  return out.str();
}

/// 30 uniform bins over the observed range, one series per metric.
inline std::string histogram_csv(const RunStats& stats) {
  std::ostringstream out;
  out << "metric,bin_lo,bin_hi,count\n";
  auto emit = [&](const char* metric, auto getter) {
    std::vector<double> vals;
    for (const auto& r : stats.records) vals.push_back(getter(r));
    if (vals.empty()) return;
    const double lo = *std::min_element(vals.begin(), vals.end());
    double hi = *std::max_element(vals.begin(), vals.end());
    if (hi <= lo) hi = lo + 1.0;
    const int bins = 30;
    std::vector<int> count(bins, 0);
    for (double v : vals) {
      int b = static_cast<int>((v - lo) / (hi - lo) * bins);
      if (b >= bins) b = bins - 1;
      ++count[b];
    }
    for (int b = 0; b < bins; ++b) {
      const double w = (hi - lo) / bins;
      out << metric << "," << lo + b * w << "," << lo + (b + 1) * w << ","
          << count[b] << "\n";
    }
  };
  emit("aeps", [](const RunRecord& r) { return r.aeps; });
  emit("avps", [](const RunRecord& r) { return r.avps; });
  return out.str();
}

}  // namespace ltlplan
