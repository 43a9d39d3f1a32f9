// Command-line front end: validate models and automata, build and inspect
// products, synthesize policies, simulate them, and run the built-in
// benchmark cases.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ltlplan/harness.hpp"
#include "ltlplan/policy_io.hpp"
#include "ltlplan/synthesize.hpp"

namespace fs = std::filesystem;
using namespace ltlplan;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) fail(Errc::BadDocument, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  if (fs::path(path).has_parent_path())
    fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out.good()) fail(Errc::BadDocument, "cannot write " + path);
  out << content;
}

PlMdp load_model(const std::string& path, bool strict) {
  ModelLoadResult res = validate_model_text(read_file(path), strict);
  if (!res.model) {
    std::cerr << "model validation failed for " << path << ":\n"
              << res.report.to_string();
    std::exit(2);
  }
  for (const auto& note : res.report.notes)
    std::cerr << "note: " << note << "\n";
  return std::move(*res.model);
}

Ldba load_ldba(const std::string& path) {
  const std::string text = read_file(path);
  Ldba a;
  if (path.size() > 4 && path.substr(path.size() - 4) == ".hoa")
    a = parse_hoa(text);
  else
    a = parse_ldba_text(text);
  ValidationReport rep = validate_ldba(a);
  if (!rep.ok()) {
    std::cerr << "automaton validation failed for " << path << ":\n"
              << rep.to_string();
    std::exit(2);
  }
  return a;
}

struct Pipeline {
  PlMdp model;
  Ldba ldba;
  Product rp;
  std::vector<Mec> amec_list;
  StatePartition part;
};

std::unique_ptr<Pipeline> build_pipeline(PlMdp model, Ldba ldba) {
  auto p = std::make_unique<Pipeline>();
  p->model = std::move(model);
  p->ldba = std::move(ldba);
  p->rp = build_relaxed_product(p->model, p->ldba);
  p->amec_list = amecs(p->rp);
  require(!p->amec_list.empty(), Errc::NoReachableAmec,
          "relaxed product has no accepting maximal end component");
  p->part = partition_states(p->rp, p->amec_list);
  return p;
}

ExecutionPolicy with_round_robin(const Pipeline& p, const ProductPolicy& base,
                                 std::vector<RoundRobinPolicy>& storage) {
  ExecutionPolicy pol(p.rp, base);
  storage.clear();
  storage.reserve(p.amec_list.size());
  for (const auto& amec : p.amec_list)
    storage.push_back(round_robin(p.rp, amec));
  for (auto& rr : storage) pol.add_round_robin(&rr);
  return pol;
}

int cmd_validate(const std::string& model_path, const std::string& ldba_path,
                 bool strict) {
  if (!model_path.empty()) {
    PlMdp m = load_model(model_path, strict);
    std::cout << "model ok: " << m.num_states() << " states, "
              << m.aps.size() << " aps\n";
  }
  if (!ldba_path.empty()) {
    Ldba a = load_ldba(ldba_path);
    std::cout << "ldba ok: " << a.num_states() << " states, "
              << a.edges.size() << " edges\n";
  }
  return 0;
}

int cmd_product(const std::string& model_path, const std::string& ldba_path,
                const std::string& kind, const std::string& dump_path,
                bool report) {
  PlMdp m = load_model(model_path, false);
  Ldba a = load_ldba(ldba_path);
  Product p = kind == "standard" ? build_standard_product(m, a)
                                 : build_relaxed_product(m, a);
  if (!dump_path.empty())
    write_file(dump_path, product_to_json(p).dump(1) + "\n");
  if (report || dump_path.empty())
    std::cout << graph_report(p).dump(1) << "\n";
  return 0;
}

int cmd_synth(const std::string& model_path, const std::string& ldba_path,
              const SynthesisOptions& opts, const std::string& out_path) {
  PlMdp m = load_model(model_path, false);
  Ldba a = load_ldba(ldba_path);
  auto p = build_pipeline(std::move(m), std::move(a));
  SynthesisResult res = synthesize(p->rp, p->amec_list, p->part, opts);
  const Json doc = policy_to_json(p->rp, res, opts);
  if (out_path.empty())
    std::cout << doc.dump(1) << "\n";
  else
    write_file(out_path, doc.dump(1) + "\n");
  std::cerr << "mode=" << res.mode << " gamma_achieved=" << res.gamma_achieved
            << " J_pre=" << res.j_pre << " J_suffix=" << res.j_suffix_total
            << " objective=" << res.objective
            << " residual=" << res.max_residual << "\n";
  if (res.saturated)
    std::cerr << "warning: regulated cost saturated; consider lowering beta\n";
  return 0;
}

int cmd_simulate(const std::string& model_path, const std::string& ldba_path,
                 const std::string& policy_path, int steps,
                 std::uint64_t seed, const std::string& out_path, bool csv) {
  PlMdp m = load_model(model_path, false);
  Ldba a = load_ldba(ldba_path);
  auto p = build_pipeline(std::move(m), std::move(a));
  ProductPolicy pol =
      policy_from_json(p->rp, Json::parse(read_file(policy_path)));
  ExecutionPolicy exec(p->rp, pol);
  Trajectory traj = simulate(exec, steps, seed);
  if (csv) {
    const std::string text = trajectory_csv(p->rp, traj);
    if (out_path.empty())
      std::cout << text;
    else
      write_file(out_path, text);
  } else {
    Json doc;
    doc["seed"] = traj.seed;
    doc["horizon"] = traj.horizon;
    doc["total_exec"] = traj.total_exec;
    doc["total_viol"] = traj.total_viol;
    doc["deadlocked"] = traj.deadlocked;
    Json steps_doc = Json::array();
    for (const auto& st : traj.steps) {
      steps_doc.push_back(
          {{"state", p->rp.state_key(st.x)},
           {"eps", st.eps},
           {"action", st.eps ? "-"
                             : p->rp.model
                                   ->actions[p->rp.states[st.x].s]
                                            [st.model_action]
                                   .name},
           {"exec_cost", st.exec_cost},
           {"viol_cost", st.viol_cost}});
    }
    doc["steps"] = steps_doc;
    if (out_path.empty())
      std::cout << doc.dump(1) << "\n";
    else
      write_file(out_path, doc.dump(1) + "\n");
  }
  return 0;
}

int cmd_montecarlo(const std::string& model_path, const std::string& ldba_path,
                   const std::string& policy_path, const McOptions& mc,
                   bool use_rr, const std::string& out_prefix) {
  PlMdp m = load_model(model_path, false);
  Ldba a = load_ldba(ldba_path);
  auto p = build_pipeline(std::move(m), std::move(a));
  ProductPolicy pol =
      policy_from_json(p->rp, Json::parse(read_file(policy_path)));
  std::vector<RoundRobinPolicy> storage;
  ExecutionPolicy exec = use_rr ? with_round_robin(*p, pol, storage)
                                : ExecutionPolicy(p->rp, pol);
  RunStats stats = monte_carlo(exec, p->part.in_amec, mc);
  std::cout << "runs=" << stats.runs << " reach=" << stats.reach_frequency
            << " sat=" << stats.satisfaction_frequency
            << " mean_aeps=" << stats.mean_aeps
            << " mean_avps=" << stats.mean_avps << "\n";
  if (!out_prefix.empty()) {
    write_file(out_prefix + "_runs.csv", stats_csv(stats));
    write_file(out_prefix + "_hist.csv", histogram_csv(stats));
  }
  return 0;
}

int cmd_bench(const std::string& which, const std::string& data_dir,
              const std::string& out_dir, int runs, int steps,
              std::uint64_t seed) {
  const auto cases = builtin_cases();
  std::cout << "case              |X_R| amecs gamma  ach    J_pre      "
               "J_suffix   reach  avps_opt   avps_rr    ms\n";
  for (const auto& cb : cases) {
    if (which != "all" && cb.name != which) continue;
    const auto t0 = std::chrono::steady_clock::now();
    PlMdp m = grid_world(cb.grid);
    Ldba a = load_ldba(data_dir + "/" + cb.ldba_file);
    auto p = build_pipeline(std::move(m), std::move(a));
    SynthesisOptions opts;
    opts.gamma = cb.gamma;
    opts.beta = cb.beta;
    opts.eta = cb.eta;
    opts.slack_wgamma = 1000.0;  // bench always recovers via slack
    SynthesisResult res = synthesize(p->rp, p->amec_list, p->part, opts);
    McOptions mc;
    mc.runs = runs;
    mc.horizon = steps;
    mc.seed = seed;
    ExecutionPolicy opt_exec(p->rp, res.policy);
    RunStats opt_stats = monte_carlo(opt_exec, p->part.in_amec, mc);
    std::vector<RoundRobinPolicy> storage;
    ExecutionPolicy rr_exec = with_round_robin(*p, res.policy, storage);
    RunStats rr_stats = monte_carlo(rr_exec, p->part.in_amec, mc);
    const auto t1 = std::chrono::steady_clock::now();
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    int xr = 0;
    for (char c : p->part.in_amec) xr += c;
    char line[256];
    std::snprintf(line, sizeof(line),
                  "%-17s %5d %5zu %.2f  %.3f  %-10.4g %-10.4g %.3f  %-10.4g "
                  "%-10.4g %lld",
                  cb.name.c_str(), xr, p->amec_list.size(), cb.gamma,
                  res.gamma_achieved, res.j_pre, res.j_suffix_total,
                  opt_stats.reach_frequency, opt_stats.mean_avps,
                  rr_stats.mean_avps, static_cast<long long>(ms));
    std::cout << line << "\n";
    if (!out_dir.empty()) {
      const std::string base = out_dir + "/" + cb.name;
      write_file(base + ".policy.json",
                 policy_to_json(p->rp, res, opts).dump(1) + "\n");
      write_file(base + "_opt_runs.csv", stats_csv(opt_stats));
      write_file(base + "_opt_hist.csv", histogram_csv(opt_stats));
      write_file(base + "_rr_runs.csv", stats_csv(rr_stats));
      write_file(base + "_rr_hist.csv", histogram_csv(rr_stats));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-memory policy synthesis for probabilistic labeled "
               "MDPs under (possibly infeasible) LTL specifications"};
  app.require_subcommand(1);

  std::string model_path, ldba_path, policy_path, out_path, dump_path;
  std::string kind = "relaxed", mode = "coupled", dtr = "xn";
  std::string data_dir = "data", out_dir, which = "all";
  bool strict = false, report = false, csv = false, use_rr = false;
  SynthesisOptions opts;
  double slack_wgamma = -1.0;
  int steps = 300, runs = 1000;
  std::uint64_t seed = 1;

  auto* v = app.add_subcommand("validate", "validate model and LDBA files");
  v->add_option("--model", model_path);
  v->add_option("--ldba", ldba_path);
  v->add_flag("--strict", strict, "reject unknown document keys");

  auto* pr = app.add_subcommand("product", "build a product and report/dump");
  pr->add_option("--model", model_path)->required();
  pr->add_option("--ldba", ldba_path)->required();
  pr->add_option("--kind", kind)->check(CLI::IsMember({"relaxed", "standard"}));
  pr->add_option("--dump", dump_path, "write the product digraph as JSON");
  pr->add_flag("--report", report, "print component statistics");

  auto* sy = app.add_subcommand("synth", "synthesize a policy");
  sy->add_option("--model", model_path)->required();
  sy->add_option("--ldba", ldba_path)->required();
  sy->add_option("--gamma", opts.gamma);
  sy->add_option("--beta", opts.beta);
  sy->add_option("--eta", opts.eta);
  sy->add_option("--mode", mode)->check(CLI::IsMember({"coupled", "sequential"}));
  sy->add_option("--slack-wgamma", slack_wgamma,
                 "enable the slack fallback with this gamma weight");
  sy->add_option("--dtr", dtr)->check(CLI::IsMember({"xn", "all-entries"}));
  sy->add_option("--lp-dump", opts.lp_dump, "write the LP as JSON");
  sy->add_option("--out", out_path, "policy output path");

  auto* si = app.add_subcommand("simulate", "run one seeded trajectory");
  si->add_option("--model", model_path)->required();
  si->add_option("--ldba", ldba_path)->required();
  si->add_option("--policy", policy_path)->required();
  si->add_option("--steps", steps);
  si->add_option("--seed", seed);
  si->add_option("--out", out_path);
  si->add_flag("--csv", csv, "emit CSV instead of JSON");

  auto* mc = app.add_subcommand("montecarlo", "aggregate seeded runs");
  mc->add_option("--model", model_path)->required();
  mc->add_option("--ldba", ldba_path)->required();
  mc->add_option("--policy", policy_path)->required();
  mc->add_option("--runs", runs);
  mc->add_option("--steps", steps);
  mc->add_option("--seed", seed);
  mc->add_flag("--round-robin", use_rr,
               "replace the suffix policy by Round-Robin inside AMECs");
  mc->add_option("--out-prefix", out_path, "write <prefix>_runs/_hist CSVs");

  auto* be = app.add_subcommand("bench", "run built-in cases end to end");
  be->add_option("--case", which, "case name or 'all'");
  be->add_option("--data", data_dir, "directory holding ldba/ files");
  be->add_option("--out", out_dir, "directory for policies and stats");
  be->add_option("--runs", runs);
  be->add_option("--steps", steps);
  be->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (v->parsed()) return cmd_validate(model_path, ldba_path, strict);
    if (pr->parsed())
      return cmd_product(model_path, ldba_path, kind, dump_path, report);
    if (sy->parsed()) {
      opts.sequential = mode == "sequential";
      opts.slack_wgamma = slack_wgamma;
      opts.dtr_all_entries = dtr == "all-entries";
      return cmd_synth(model_path, ldba_path, opts, out_path);
    }
    if (si->parsed())
      return cmd_simulate(model_path, ldba_path, policy_path, steps, seed,
                          out_path, csv);
    if (mc->parsed()) {
      McOptions mo;
      mo.runs = runs;
      mo.horizon = steps;
      mo.seed = seed;
      return cmd_montecarlo(model_path, ldba_path, policy_path, mo, use_rr,
                            out_path);
    }
    if (be->parsed())
      return cmd_bench(which, data_dir, out_dir, runs, steps, seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case Errc::PrefixInfeasible:
      case Errc::CoupledInfeasible:
      case Errc::NoReachableAmec:
      case Errc::EmptyReachableSet:
        return 3;
      case Errc::InternalInvariant:
      case Errc::NumericalBreakdown:
        return 4;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
