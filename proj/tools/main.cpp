// Command line front end: run scenarios, compare direct vs centralized
// message passing, and exhaustively check the abstract model.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "podchain/model.hpp"
#include "podchain/scenario.hpp"
#include "podchain/sim.hpp"

using namespace podchain;

namespace {

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  return parse_scenario(in);
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  out << text;
}

std::string metrics_text(const RunMetrics& m) {
  std::ostringstream o;
  o << "end_time=" << m.end_time << "\n";
  o << "quiescent=" << (m.quiescent ? 1 : 0) << "\n";
  o << "converged=" << (m.converged ? 1 : 0) << "\n";
  o << "violations=" << m.violations.size() << "\n";
  o << "scaleout_total=" << m.scaleout_total << "\n";
  o << "cold_starts=" << m.cold_starts << "\n";
  o << "max_pod_entry_bytes=" << m.max_pod_entry_bytes << "\n";
  o << "handshakes_completed=" << m.handshakes_completed << "\n";
  for (const auto& [fn, n] : m.final_desired)
    o << "desired[" << fn << "]=" << n << "\n";
  for (const auto& [fn, n] : m.published_per_fn)
    o << "published[" << fn << "]=" << n << "\n";
  for (std::size_t i = 0; i < m.command_latency.size(); ++i)
    o << "command_latency[" << i << "]=" << m.command_latency[i] << "\n";
  for (const auto& [k, v] : m.msgs) o << "msgs[" << k << "]=" << v << "\n";
  for (const auto& [k, v] : m.bytes) o << "bytes[" << k << "]=" << v << "\n";
  for (const auto& [k, v] : m.handshake_frames)
    o << "handshake_frames[" << k << "]=" << v << "\n";
  for (const auto& [k, v] : m.busy) o << "busy[" << k << "]=" << v << "\n";
  for (const auto& v : m.violations) o << "violation=" << v << "\n";
  return o.str();
}

nlohmann::json metrics_json(const RunMetrics& m) {
  nlohmann::json j;
  j["end_time"] = m.end_time;
  j["quiescent"] = m.quiescent;
  j["converged"] = m.converged;
  j["scaleout_total"] = m.scaleout_total;
  j["cold_starts"] = m.cold_starts;
  j["max_pod_entry_bytes"] = m.max_pod_entry_bytes;
  j["handshakes_completed"] = m.handshakes_completed;
  j["violations"] = m.violations;
  j["desired"] = nlohmann::json::object();
  for (const auto& [fn, n] : m.final_desired)
    j["desired"][std::to_string(fn)] = n;
  j["published"] = nlohmann::json::object();
  for (const auto& [fn, n] : m.published_per_fn)
    j["published"][std::to_string(fn)] = n;
  j["command_latency"] = m.command_latency;
  j["msgs"] = m.msgs;
  j["bytes"] = m.bytes;
  j["handshake_frames"] = m.handshake_frames;
  j["busy"] = m.busy;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"controller chain simulator and model checker"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "run one scenario");
  std::string run_file, run_mode, metrics_out, trace_out;
  std::uint64_t run_seed = 0;
  bool run_seed_set = false;
  run_cmd->add_option("scenario", run_file, "scenario file")->required();
  run_cmd->add_option("--mode", run_mode, "direct|centralized");
  run_cmd->add_option("--seed", run_seed, "override scenario seed")
      ->each([&](const std::string&) { run_seed_set = true; });
  run_cmd->add_option("--metrics-out", metrics_out, "write metrics here");
  run_cmd->add_option("--trace-out", trace_out, "write the event trace here");

  // compare
  auto* cmp_cmd = app.add_subcommand(
      "compare", "run a fault-free scenario in both modes");
  std::string cmp_file, cmp_metrics_out;
  cmp_cmd->add_option("scenario", cmp_file, "scenario file")->required();
  cmp_cmd->add_option("--metrics-out", cmp_metrics_out, "write metrics here");

  // check
  auto* chk_cmd = app.add_subcommand("check", "explore the abstract model");
  std::uint32_t chk_nodes = 1;
  std::string chk_cmds = "1";
  bool chk_faults = false;
  std::size_t chk_max_states = 2000000;
  std::string chk_cex_out;
  chk_cmd->add_option("--nodes", chk_nodes, "number of nodes");
  chk_cmd->add_option("--cmds", chk_cmds, "comma separated scaling commands");
  chk_cmd->add_flag("--enable-faults", chk_faults, "enable crash/disconnect actions");
  chk_cmd->add_option("--max-states", chk_max_states, "state bound");
  chk_cmd->add_option("--counterexample-out", chk_cex_out,
                      "write a counterexample trace here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      Scenario sc = load_scenario(run_file);
      if (!run_mode.empty()) {
        if (run_mode == "direct") sc.mode = RunMode::Direct;
        else if (run_mode == "centralized") sc.mode = RunMode::Centralized;
        else throw std::runtime_error("bad --mode");
      }
      if (run_seed_set) sc.seed = run_seed;
      RunResult r = run_scenario(sc);
      std::string text = metrics_text(r.metrics);
      text += "json=" + metrics_json(r.metrics).dump() + "\n";
      write_or_print(metrics_out, text);
      if (!trace_out.empty()) {
        std::ostringstream t;
        for (const auto& line : r.trace) t << line << "\n";
        write_or_print(trace_out, t.str());
      }
      bool ok = r.metrics.ok() && r.metrics.converged;
      if (!ok) std::cerr << "run failed: violations=" << r.metrics.violations.size()
                         << " converged=" << r.metrics.converged << "\n";
      return ok ? 0 : 1;
    }
    if (*cmp_cmd) {
      Scenario sc = load_scenario(cmp_file);
      auto [direct, central] = run_baseline_comparison(sc);
      std::ostringstream o;
      o << "# direct\n" << metrics_text(direct.metrics);
      o << "# centralized\n" << metrics_text(central.metrics);
      double ratio = central.metrics.scaleout_total > 0
                         ? static_cast<double>(direct.metrics.scaleout_total) /
                               static_cast<double>(central.metrics.scaleout_total)
                         : 0.0;
      o << "latency_ratio_direct_over_centralized=" << ratio << "\n";
      write_or_print(cmp_metrics_out, o.str());
      bool ok = direct.metrics.ok() && central.metrics.ok() &&
                direct.metrics.converged && central.metrics.converged;
      return ok ? 0 : 1;
    }
    if (*chk_cmd) {
      model::ModelConfig cfg;
      cfg.num_nodes = chk_nodes;
      cfg.cmds.clear();
      std::istringstream cs(chk_cmds);
      std::string tok;
      while (std::getline(cs, tok, ','))
        cfg.cmds.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
      cfg.enable_crashes = chk_faults;
      cfg.enable_disconnects = chk_faults;
      cfg.max_states = chk_max_states;
      model::Verdict v = model::explore(cfg);
      std::cout << "states_visited=" << v.states_visited << "\n";
      std::cout << "bound_exceeded=" << (v.bound_exceeded ? 1 : 0) << "\n";
      std::cout << "invariants_hold=" << (v.invariants_hold ? 1 : 0) << "\n";
      std::cout << "convergence_holds=" << (v.convergence_holds ? 1 : 0) << "\n";
      if (!v.failure.empty()) std::cout << "failure=" << v.failure << "\n";
      if (!v.counterexample.empty() && !chk_cex_out.empty()) {
        std::ostringstream t;
        for (const auto& line : v.counterexample) t << line << "\n";
        write_or_print(chk_cex_out, t.str());
      }
      return (v.invariants_hold && v.convergence_holds && !v.bound_exceeded) ? 0
                                                                             : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
