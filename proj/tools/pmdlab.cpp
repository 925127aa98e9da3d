// pmdlab: tabular policy mirror descent lab.
//
// Subcommands: gen, solve, lowerbound, necessity, inexact, sweep, plot.
// Exit codes: 0 success, 2 verification/claim failure, 1 usage or IO error.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pmdlab/harness.hpp"
#include "pmdlab/inexact.hpp"
#include "pmdlab/svg.hpp"
#include "pmdlab/trace_io.hpp"
#include "pmdlab/types.hpp"

namespace {

using namespace pmdlab;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerification = 2;

TabularMdp load_mdp(const std::string& path, bool allow_any_reward) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mdp file '" + path + "'");
  nlohmann::json doc;
  in >> doc;
  return TabularMdp::from_json(doc, allow_any_reward ? RewardRange::AnyFinite
                                                     : RewardRange::UnitInterval);
}

void write_mdp(const TabularMdp& mdp, const std::string& path) {
  write_file_atomic(path, mdp.to_json().dump(2) + "\n");
}

std::vector<StepSizeSchedule> parse_schedule_list(const std::string& text) {
  std::vector<StepSizeSchedule> out;
  std::istringstream in(text);
  std::string spec;
  while (std::getline(in, spec, ';')) {
    if (!spec.empty()) out.push_back(parse_schedule_spec(spec));
  }
  if (out.empty()) throw std::invalid_argument("no schedules given");
  return out;
}

Policy initial_policy_from_flag(const std::string& init, const TabularMdp& mdp) {
  if (init == "uniform" || init == "default") {
    return Policy::uniform(mdp.n_states(), mdp.n_actions());
  }
  if (init.rfind("alpha:", 0) == 0) {
    const double alpha = std::stod(init.substr(6));
    Mat probs(mdp.n_states(), mdp.n_actions());
    probs.col(0).setConstant(alpha);
    if (mdp.n_actions() > 1) {
      probs.rightCols(mdp.n_actions() - 1)
          .setConstant((1.0 - alpha) / (mdp.n_actions() - 1));
    } else {
      probs.col(0).setConstant(1.0);
    }
    return Policy(std::move(probs));
  }
  throw std::invalid_argument("--init must be uniform | alpha:<v>");
}

int cmd_gen(const std::string& kind, const nlohmann::json& params,
            const std::string& out) {
  MdpWithInit built = build_mdp_source(params);
  write_mdp(built.mdp, out);
  std::cout << "wrote " << kind << " mdp (" << built.mdp.n_states()
            << " states, " << built.mdp.n_actions() << " actions) to " << out
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pmdlab: policy mirror descent on tabular MDPs"};
  app.require_subcommand(1);

  // ---- gen ------------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate an MDP as JSON");
  gen->require_subcommand(1);
  std::string gen_out = "mdp.json";
  int chain_n = 25;
  double chain_gamma = 0.99, chain_delta = 0.0, chain_alpha = 1e-10;
  auto* gen_chain = gen->add_subcommand("chain", "hard chain with explicit delta");
  gen_chain->add_option("--n", chain_n)->required();
  gen_chain->add_option("--gamma", chain_gamma)->required();
  gen_chain->add_option("--delta", chain_delta)->required();
  gen_chain->add_option("--alpha", chain_alpha)->required();
  gen_chain->add_option("--out", gen_out);

  auto* gen_simchain =
      gen->add_subcommand("simchain", "chain with delta = (1-gamma)gamma^n/100");
  gen_simchain->add_option("--n", chain_n)->required();
  gen_simchain->add_option("--gamma", chain_gamma)->required();
  gen_simchain->add_option("--alpha", chain_alpha)->required();
  gen_simchain->add_option("--out", gen_out);

  int mm_n = 50;
  double mm_gamma = 0.9, mm_delta = 0.05, mm_rmax = 0.5;
  auto* gen_mismatch =
      gen->add_subcommand("mismatch", "MDP with mismatch coefficient ~ n");
  gen_mismatch->add_option("--n", mm_n)->required();
  gen_mismatch->add_option("--gamma", mm_gamma)->required();
  gen_mismatch->add_option("--delta", mm_delta)->required();
  gen_mismatch->add_option("--r-max", mm_rmax)->required();
  gen_mismatch->add_option("--out", gen_out);

  std::string dup_base;
  double dup_delta = 1e-6;
  auto* gen_dup = gen->add_subcommand("duplicate", "double the action space");
  gen_dup->add_option("--base", dup_base)->required();
  gen_dup->add_option("--delta", dup_delta)->required();
  gen_dup->add_option("--out", gen_out);

  int rnd_states = 6, rnd_actions = 3;
  double rnd_gamma = 0.9;
  std::uint64_t rnd_seed = 0;
  auto* gen_random = gen->add_subcommand("random", "seeded random MDP");
  gen_random->add_option("--n-states", rnd_states)->required();
  gen_random->add_option("--n-actions", rnd_actions)->required();
  gen_random->add_option("--gamma", rnd_gamma)->required();
  gen_random->add_option("--seed", rnd_seed)->required();
  gen_random->add_option("--out", gen_out);

  // ---- solve ----------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "run exact PMD on an MDP");
  std::string solve_mdp, solve_config, solve_map = "kl";
  std::string solve_schedule = "adaptive:c0=1", solve_init = "default";
  std::string solve_out;
  int solve_k = 100;
  std::uint64_t solve_seed = 0;
  bool solve_verify = false, solve_any_reward = false;
  solve->add_option("--config", solve_config, "single-run JSON config");
  solve->add_option("--mdp", solve_mdp, "MDP JSON path");
  solve->add_option("--map", solve_map, "kl | euclid | pi | generic:<name>");
  solve->add_option("--schedule", solve_schedule);
  solve->add_option("--K", solve_k);
  solve->add_option("--seed", solve_seed);
  solve->add_option("--init", solve_init, "uniform | alpha:<v>");
  solve->add_option("--out", solve_out, "trace CSV path");
  solve->add_flag("--verify", solve_verify);
  solve->add_flag("--allow-any-reward", solve_any_reward);

  // ---- lowerbound -----------------------------------------------------------
  auto* lower = app.add_subcommand("lowerbound", "rate lower-bound check");
  int lb_n = 10;
  double lb_gamma = 0.9;
  std::string lb_schedules =
      "adaptive:c0=1;geometric:eta0=1;geometric:eta0=100";
  std::string lb_out;
  lower->add_option("--n", lb_n)->required();
  lower->add_option("--gamma", lb_gamma)->required();
  lower->add_option("--schedules", lb_schedules,
                    "semicolon-separated schedule specs");
  lower->add_option("--out", lb_out, "report path");

  // ---- necessity ------------------------------------------------------------
  auto* necessity =
      app.add_subcommand("necessity", "chain simulation and step-size claims");
  double nec_alpha = 1e-10;
  std::string nec_variant = "all", nec_dir = "necessity_out";
  necessity->add_option("--alpha", nec_alpha)->required();
  necessity->add_option("--variant", nec_variant,
                        "adaptive | increasing | combined | all");
  necessity->add_option("--out-dir", nec_dir);

  // ---- inexact --------------------------------------------------------------
  auto* inexact = app.add_subcommand("inexact", "run sampled PMD");
  std::string ix_mdp, ix_map = "kl", ix_out;
  int ix_h = 40, ix_m = 200, ix_k = 100;
  std::uint64_t ix_seed = 0;
  double ix_epsilon = 0.0, ix_confidence = 0.05;
  bool ix_verify = false, ix_any_reward = false;
  inexact->add_option("--mdp", ix_mdp)->required();
  inexact->add_option("--map", ix_map);
  inexact->add_option("--H", ix_h)->required();
  inexact->add_option("--M", ix_m)->required();
  inexact->add_option("--K", ix_k)->required();
  inexact->add_option("--seed", ix_seed)->required();
  inexact->add_option("--out", ix_out);
  inexact->add_option("--epsilon", ix_epsilon,
                      "also report the theoretical K, H, M for this accuracy");
  inexact->add_option("--confidence", ix_confidence,
                      "failure probability for the theoretical parameters");
  inexact->add_flag("--verify", ix_verify);
  inexact->add_flag("--allow-any-reward", ix_any_reward);

  // ---- sweep ----------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "run a list of configs");
  std::string sweep_configs, sweep_out = "sweep.csv";
  int sweep_par = 1;
  sweep_cmd->add_option("--configs", sweep_configs, "JSON array of run configs")
      ->required();
  sweep_cmd->add_option("--parallelism", sweep_par);
  sweep_cmd->add_option("--out", sweep_out);

  // ---- plot -----------------------------------------------------------------
  auto* plot = app.add_subcommand("plot", "render a trace CSV as SVG");
  std::string plot_trace, plot_out = "figure.svg", plot_ref = "gamma";
  std::string plot_title;
  double plot_gamma = 0.99, plot_scale = 1.0;
  plot->add_option("--trace", plot_trace)->required();
  plot->add_option("--ref", plot_ref, "gamma | bound");
  plot->add_option("--gamma", plot_gamma);
  plot->add_option("--scale", plot_scale);
  plot->add_option("--title", plot_title);
  plot->add_option("--out", plot_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_chain->parsed()) {
      return cmd_gen("chain",
                     {{"generator", "chain"},
                      {"n", chain_n},
                      {"gamma", chain_gamma},
                      {"delta", chain_delta},
                      {"alpha", chain_alpha}},
                     gen_out);
    }
    if (gen_simchain->parsed()) {
      return cmd_gen("simchain",
                     {{"generator", "simchain"},
                      {"n", chain_n},
                      {"gamma", chain_gamma},
                      {"alpha", chain_alpha}},
                     gen_out);
    }
    if (gen_mismatch->parsed()) {
      return cmd_gen("mismatch",
                     {{"generator", "mismatch"},
                      {"n", mm_n},
                      {"gamma", mm_gamma},
                      {"delta", mm_delta},
                      {"r_max", mm_rmax}},
                     gen_out);
    }
    if (gen_dup->parsed()) {
      return cmd_gen("duplicate",
                     {{"generator", "duplicate"},
                      {"delta", dup_delta},
                      {"base", {{"path", dup_base}}}},
                     gen_out);
    }
    if (gen_random->parsed()) {
      return cmd_gen("random",
                     {{"generator", "random"},
                      {"n_states", rnd_states},
                      {"n_actions", rnd_actions},
                      {"gamma", rnd_gamma},
                      {"seed", rnd_seed}},
                     gen_out);
    }

    if (solve->parsed()) {
      if (!solve_config.empty()) {
        std::ifstream in(solve_config);
        if (!in) throw std::runtime_error("cannot open '" + solve_config + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        const RunConfig config = parse_run_config_text(buf.str());
        const IterationTrace trace = run_config(config);
        std::cout << "final gap " << format_double(trace.records.back().sup_gap)
                  << " after " << (trace.records.size() - 1) << " iterations\n";
        return kExitOk;
      }
      if (solve_mdp.empty()) {
        throw std::invalid_argument("solve: need --mdp or --config");
      }
      const TabularMdp mdp = load_mdp(solve_mdp, solve_any_reward);
      const Policy pi0 = initial_policy_from_flag(solve_init, mdp);
      const IterationTrace trace =
          run_exact_pmd(mdp, MirrorMap::from_id(solve_map),
                        parse_schedule_spec(solve_schedule), pi0, solve_k, 1e-9,
                        solve_verify);
      if (!solve_out.empty()) {
        write_file_atomic(solve_out, trace_to_csv(trace));
      }
      std::cout << "final gap " << format_double(trace.records.back().sup_gap)
                << " after " << solve_k << " iterations\n";
      return kExitOk;
    }

    if (lower->parsed()) {
      const LowerBoundReport report = check_lower_bound(
          lb_n, lb_gamma, parse_schedule_list(lb_schedules), lb_out);
      std::cout << report.text;
      return report.passed ? kExitOk : kExitVerification;
    }

    if (necessity->parsed()) {
      std::vector<std::string> variants;
      if (nec_variant == "all") {
        variants = {"adaptive", "increasing", "combined"};
      } else {
        variants = {nec_variant};
      }
      const double gamma = 0.99;
      bool claims_ok = true;
      std::vector<SimulationRun> runs;
      for (const std::string& variant : variants) {
        runs.push_back(run_chain_simulation(nec_alpha, variant, nec_dir));
        const SimulationRun& run = runs.back();
        std::cout << "wrote " << run.csv_path << " and " << run.svg_path << "\n";
        if (variant == "adaptive") {
          bool ok = true;
          for (const IterationRecord& rec : run.trace.records) {
            const double display =
                std::pow(gamma, rec.k) * (run.trace.gap0 + 1.0 / (1.0 - gamma));
            ok = ok && rec.sup_gap <= display + 1e-8;
          }
          std::cout << (ok ? "PASS" : "FAIL")
                    << ": adaptive stays below the gamma-rate display\n";
          claims_ok = claims_ok && ok;
        }
        if (variant == "increasing") {
          bool violated = false;
          for (int k = 0; k < 25; ++k) {
            const double bound = std::pow(gamma, k) *
                                 (run.trace.gap0 + (1.0 - gamma) / 8.0);
            violated = violated || run.trace.records[k].sup_gap > bound;
          }
          std::cout << (violated ? "PASS" : "FAIL")
                    << ": increasing step size misses the gamma rate below "
                       "k = 25\n";
          claims_ok = claims_ok && violated;
        }
      }
      if (runs.size() == 3) {
        // Combined = pointwise max of the two step sizes; its gap should
        // track the better of the two single-schedule traces.
        bool dominated = true;
        for (std::size_t k = 0; k < runs[0].trace.records.size(); ++k) {
          const double best = std::min(runs[0].trace.records[k].sup_gap,
                                       runs[1].trace.records[k].sup_gap);
          dominated =
              dominated && runs[2].trace.records[k].sup_gap <= best + 1e-9;
        }
        std::cout << (dominated ? "PASS" : "FAIL")
                  << ": combined stays at or below both single schedules\n";
        claims_ok = claims_ok && dominated;
      }
      return claims_ok ? kExitOk : kExitVerification;
    }

    if (inexact->parsed()) {
      GenerativeModel model(load_mdp(ix_mdp, ix_any_reward), ix_seed);
      const Policy pi0 =
          Policy::uniform(model.mdp().n_states(), model.mdp().n_actions());
      const IterationTrace trace =
          run_inexact_pmd(model, MirrorMap::from_id(ix_map), ix_k,
                          EstimatorConfig{ix_h, ix_m}, pi0, ix_verify);
      if (!ix_out.empty()) write_file_atomic(ix_out, trace_to_csv(trace));
      std::cout << "final gap " << format_double(trace.records.back().sup_gap)
                << ", samples " << model.sample_count() << ", accuracy bound "
                << format_double(accuracy_bound(ix_h, model.mdp().gamma()))
                << "\n";
      if (ix_epsilon > 0.0) {
        // The guaranteed parameters for this accuracy; M is usually far
        // beyond what experiments run with.
        const SampleComplexityParams params = sample_complexity_parameters(
            model.mdp().gamma(), ix_epsilon, ix_confidence,
            model.mdp().n_states(), model.mdp().n_actions());
        std::cout << "guaranteed for epsilon=" << ix_epsilon << ", confidence="
                  << (1.0 - ix_confidence) << ": K=" << params.iterations
                  << " H=" << params.horizon << " M=" << format_double(params.trajectories)
                  << (params.m_capped ? " (beyond int64)" : "")
                  << " total=" << format_double(params.total_samples)
                  << " tau=" << format_double(params.tau_bound) << "\n";
      }
      return kExitOk;
    }

    if (sweep_cmd->parsed()) {
      std::ifstream in(sweep_configs);
      if (!in) throw std::runtime_error("cannot open '" + sweep_configs + "'");
      nlohmann::json doc;
      in >> doc;
      if (!doc.is_array()) {
        throw std::invalid_argument("sweep: config file must hold a JSON array");
      }
      std::vector<RunConfig> configs;
      for (const auto& item : doc) configs.push_back(parse_run_config(item));
      const SweepResult result = sweep(configs, sweep_par);
      write_file_atomic(sweep_out, result.csv);
      for (const std::string& err : result.errors) {
        std::cerr << "config failed: " << err << "\n";
      }
      std::cout << "wrote " << sweep_out << " (" << configs.size()
                << " configs)\n";
      return result.all_ok ? kExitOk : kExitVerification;
    }

    if (plot->parsed()) {
      SvgOptions options;
      if (plot_ref == "gamma") {
        options.reference = SvgReference::GammaCurve;
      } else if (plot_ref == "bound") {
        options.reference = SvgReference::Theorem1Bound;
      } else {
        throw std::invalid_argument("plot: --ref must be gamma | bound");
      }
      options.gamma = plot_gamma;
      options.scale = plot_scale;
      options.title = plot_title;
      write_file_atomic(
          plot_out, render_convergence_svg(read_csv_file(plot_trace), options));
      std::cout << "wrote " << plot_out << "\n";
      return kExitOk;
    }
  } catch (const VerificationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitVerification;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
