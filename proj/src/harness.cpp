#include "pmdlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pmdlab/svg.hpp"
#include "pmdlab/trace_io.hpp"

namespace pmdlab {

namespace {

double require_number(const nlohmann::json& doc, const std::string& field) {
  if (!doc.contains(field) || !doc.at(field).is_number()) {
    throw std::invalid_argument("config: field '" + field +
                                "' missing or not a number");
  }
  return doc.at(field).get<double>();
}

int require_int(const nlohmann::json& doc, const std::string& field) {
  if (!doc.contains(field) || !doc.at(field).is_number_integer()) {
    throw std::invalid_argument("config: field '" + field +
                                "' missing or not an integer");
  }
  return doc.at(field).get<int>();
}

StepSizeSchedule schedule_from_json(const nlohmann::json& doc) {
  if (!doc.contains("kind") || !doc.at("kind").is_string()) {
    throw std::invalid_argument("config: schedule.kind missing");
  }
  const std::string kind = doc.at("kind").get<std::string>();
  const bool per_state = doc.value("per_state", false);
  auto ck_of = [&doc]() {
    const std::string ck = doc.value("ck", "geometric_squared");
    const double c0 = doc.value("c0", 1.0);
    if (ck == "geometric_squared") return CkSequence::geometric_squared(c0);
    if (ck == "constant") return CkSequence::constant(c0);
    if (ck == "geometric_plain") return CkSequence::geometric_plain(c0);
    throw std::invalid_argument("config: schedule.ck '" + ck + "' unknown");
  };
  if (kind == "adaptive") return StepSizeSchedule::adaptive(ck_of(), per_state);
  if (kind == "geometric") {
    return StepSizeSchedule::geometric(require_number(doc, "eta0"));
  }
  if (kind == "constant") {
    return StepSizeSchedule::constant(require_number(doc, "eta0"));
  }
  if (kind == "combined") {
    return StepSizeSchedule::max_combined(ck_of(), doc.value("eta0", 1.0),
                                          per_state);
  }
  throw std::invalid_argument("config: schedule.kind '" + kind + "' unknown");
}

}  // namespace

nlohmann::json RunConfig::mdp_source() const {
  return nlohmann::json::parse(mdp_source_text);
}

RunConfig parse_run_config(const nlohmann::json& doc) {
  RunConfig config;
  config.id = doc.value("id", "run");
  if (!doc.contains("mdp")) {
    throw std::invalid_argument("config: field 'mdp' missing");
  }
  config.mdp_source_text = doc.at("mdp").dump();
  config.map_id = doc.value("map", "kl");
  MirrorMap::from_id(config.map_id);  // validates
  if (!doc.contains("schedule")) {
    throw std::invalid_argument("config: field 'schedule' missing");
  }
  config.schedule = schedule_from_json(doc.at("schedule"));
  config.iterations = require_int(doc, "K");
  if (config.iterations < 0) {
    throw std::invalid_argument("config: field 'K' must be nonnegative");
  }
  config.seed = doc.value("seed", std::uint64_t{0});
  config.verify = doc.value("verify", false);
  if (doc.contains("init")) {
    const auto& init = doc.at("init");
    config.init_kind = init.value("kind", "default");
    if (config.init_kind == "alpha") {
      config.init_alpha = require_number(init, "alpha");
      if (!(config.init_alpha > 0.0 && config.init_alpha < 1.0)) {
        throw std::invalid_argument("config: init.alpha must lie in (0,1)");
      }
    } else if (config.init_kind != "default" && config.init_kind != "uniform" &&
               config.init_kind != "generator") {
      throw std::invalid_argument("config: init.kind '" + config.init_kind +
                                  "' unknown");
    }
  }
  config.out = doc.value("out", "");
  // Eagerly resolve generator names and parameters so bad configs are
  // rejected at parse time with a field diagnostic.
  build_mdp_source(doc.at("mdp"), config.seed);
  return config;
}

RunConfig parse_run_config_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw std::invalid_argument(std::string("config: ") + err.what());
  }
  return parse_run_config(doc);
}

StepSizeSchedule parse_schedule_spec(const std::string& spec) {
  std::string kind = spec;
  std::string args;
  if (const auto colon = spec.find(':'); colon != std::string::npos) {
    kind = spec.substr(0, colon);
    args = spec.substr(colon + 1);
  }
  double c0 = 1.0, eta0 = 1.0;
  std::string ck_kind = "geometric_squared";
  bool per_state = false;
  std::istringstream in(args);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (token.empty()) continue;
    if (token == "per_state") {
      per_state = true;
      continue;
    }
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("schedule spec: bad token '" + token + "'");
    }
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "c0") {
      c0 = std::stod(value);
    } else if (key == "eta0") {
      eta0 = std::stod(value);
    } else if (key == "ck") {
      if (value == "gsq") {
        ck_kind = "geometric_squared";
      } else if (value == "const") {
        ck_kind = "constant";
      } else if (value == "gplain") {
        ck_kind = "geometric_plain";
      } else {
        throw std::invalid_argument("schedule spec: ck '" + value +
                                    "' unknown (gsq | const | gplain)");
      }
    } else {
      throw std::invalid_argument("schedule spec: key '" + key + "' unknown");
    }
  }
  auto make_ck = [&]() {
    if (ck_kind == "constant") return CkSequence::constant(c0);
    if (ck_kind == "geometric_plain") return CkSequence::geometric_plain(c0);
    return CkSequence::geometric_squared(c0);
  };
  if (kind == "adaptive") return StepSizeSchedule::adaptive(make_ck(), per_state);
  if (kind == "geometric") return StepSizeSchedule::geometric(eta0);
  if (kind == "constant") return StepSizeSchedule::constant(eta0);
  if (kind == "combined") {
    return StepSizeSchedule::max_combined(make_ck(), eta0, per_state);
  }
  throw std::invalid_argument(
      "schedule spec: kind '" + kind +
      "' unknown (adaptive | geometric | constant | combined)");
}

std::string describe_schedule(const StepSizeSchedule& schedule) {
  std::ostringstream out;
  auto ck_name = [](const CkSequence& ck) {
    switch (ck.kind()) {
      case CkSequence::Kind::GeometricSquared:
        return std::string("gsq");
      case CkSequence::Kind::Constant:
        return std::string("const");
      case CkSequence::Kind::GeometricPlain:
        return std::string("gplain");
      case CkSequence::Kind::Custom:
        return std::string("custom");
    }
    return std::string("?");
  };
  switch (schedule.kind()) {
    case StepSizeSchedule::Kind::AdaptiveCk:
      out << "adaptive(" << ck_name(schedule.ck()) << ",c0=" << schedule.ck().c0()
          << ")";
      break;
    case StepSizeSchedule::Kind::Geometric:
      out << "geometric(eta0=" << schedule.eta0() << ")";
      break;
    case StepSizeSchedule::Kind::Constant:
      out << "constant(eta0=" << schedule.eta0() << ")";
      break;
    case StepSizeSchedule::Kind::MaxCombined:
      out << "combined(" << ck_name(schedule.ck()) << ",c0=" << schedule.ck().c0()
          << ",eta0=" << schedule.eta0() << ")";
      break;
  }
  if (schedule.per_state()) out << "[per-state]";
  return out.str();
}

MdpWithInit build_mdp_source(const nlohmann::json& source,
                             std::uint64_t default_seed) {
  if (!source.is_object()) {
    throw std::invalid_argument("config: mdp source must be an object");
  }
  if (source.contains("path")) {
    const std::string path = source.at("path").get<std::string>();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mdp file '" + path + "'");
    nlohmann::json doc;
    in >> doc;
    const RewardRange range = source.value("allow_any_reward", false)
                                  ? RewardRange::AnyFinite
                                  : RewardRange::UnitInterval;
    return MdpWithInit{TabularMdp::from_json(doc, range), std::nullopt};
  }
  if (source.contains("generator")) {
    const std::string gen = source.at("generator").get<std::string>();
    if (gen == "chain") {
      ChainSpec spec;
      spec.n = require_int(source, "n");
      spec.gamma = require_number(source, "gamma");
      spec.delta = require_number(source, "delta");
      spec.alpha = require_number(source, "alpha");
      ChainInstance chain = lower_bound_chain(spec);
      return MdpWithInit{std::move(chain.mdp), std::move(chain.initial_policy)};
    }
    if (gen == "simchain") {
      ChainInstance chain =
          simulation_chain(require_int(source, "n"), require_number(source, "gamma"),
                           require_number(source, "alpha"));
      return MdpWithInit{std::move(chain.mdp), std::move(chain.initial_policy)};
    }
    if (gen == "random") {
      const std::uint64_t seed = source.contains("seed")
                                     ? source.at("seed").get<std::uint64_t>()
                                     : default_seed;
      return MdpWithInit{random_mdp(require_int(source, "n_states"),
                                    require_int(source, "n_actions"),
                                    require_number(source, "gamma"), seed),
                         std::nullopt};
    }
    if (gen == "mismatch") {
      return MdpWithInit{
          mismatch_mdp(require_int(source, "n"), require_number(source, "gamma"),
                       require_number(source, "delta"),
                       require_number(source, "r_max")),
          std::nullopt};
    }
    if (gen == "duplicate") {
      if (!source.contains("base")) {
        throw std::invalid_argument("config: duplicate generator needs 'base'");
      }
      MdpWithInit base = build_mdp_source(source.at("base"), default_seed);
      return MdpWithInit{
          duplicate_action_mdp(base.mdp, require_number(source, "delta")),
          std::nullopt};
    }
    throw std::invalid_argument("config: generator '" + gen + "' unknown");
  }
  if (source.contains("n_states")) {
    return MdpWithInit{TabularMdp::from_json(source), std::nullopt};
  }
  throw std::invalid_argument(
      "config: mdp source needs 'generator', 'path' or an inline document");
}

namespace {

Policy initial_policy_for(const RunConfig& config, const MdpWithInit& built) {
  const int S = built.mdp.n_states();
  const int A = built.mdp.n_actions();
  if (config.init_kind == "uniform") return Policy::uniform(S, A);
  if (config.init_kind == "alpha") {
    Mat probs(S, A);
    probs.col(0).setConstant(config.init_alpha);
    if (A > 1) {
      probs.rightCols(A - 1)
          .setConstant((1.0 - config.init_alpha) / (A - 1));
    } else {
      probs.col(0).setConstant(1.0);
    }
    return Policy(std::move(probs));
  }
  if (config.init_kind == "generator") {
    if (!built.initial_policy) {
      throw std::invalid_argument(
          "config: init.kind 'generator' but the mdp source provides no policy");
    }
    return *built.initial_policy;
  }
  // default: the generator's policy when present, else uniform
  if (built.initial_policy) return *built.initial_policy;
  return Policy::uniform(S, A);
}

}  // namespace

IterationTrace run_config(const RunConfig& config) {
  if (!config.schedule) {
    throw std::invalid_argument("config: schedule missing");
  }
  MdpWithInit built = build_mdp_source(config.mdp_source(), config.seed);
  const Policy pi0 = initial_policy_for(config, built);
  const MirrorMap map = MirrorMap::from_id(config.map_id);
  IterationTrace trace = run_exact_pmd(built.mdp, map, *config.schedule, pi0,
                                       config.iterations, 1e-9, config.verify);
  if (!config.out.empty()) {
    write_file_atomic(config.out, trace_to_csv(trace));
  }
  return trace;
}

SweepResult sweep(const std::vector<RunConfig>& configs, int parallelism) {
  const int n = static_cast<int>(configs.size());
  std::vector<std::optional<IterationTrace>> traces(n);
  std::vector<std::string> errors(n);

  const int threads = std::max(1, std::min(parallelism, n));
  auto worker = [&](int offset) {
    for (int i = offset; i < n; i += threads) {
      try {
        traces[i] = run_config(configs[i]);
      } catch (const std::exception& err) {
        errors[i] = err.what();
      }
    }
  };
  if (threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& t : pool) t.join();
  }

  SweepResult result;
  std::ostringstream csv;
  csv << "config_id,iter,sup_gap,eta,bound_theorem1,min_q_increase\n";
  for (int i = 0; i < n; ++i) {
    if (!traces[i]) {
      result.all_ok = false;
      result.errors.push_back(configs[i].id + ": " + errors[i]);
      continue;
    }
    for (const IterationRecord& rec : traces[i]->records) {
      csv << configs[i].id << ',' << rec.k << ',' << format_double(rec.sup_gap)
          << ',' << format_double(rec.eta) << ','
          << format_double(rec.bound_theorem1) << ','
          << format_double(rec.min_q_increase) << "\n";
    }
  }
  result.csv = csv.str();
  return result;
}

CkSequence simulation_ck(double gamma, int iterations) {
  std::vector<double> values(iterations + 1);
  for (int k = 0; k <= iterations; ++k) values[k] = std::pow(gamma, 2 * k);
  return CkSequence::custom(std::move(values));
}

SimulationRun run_chain_simulation(double alpha, const std::string& variant,
                                   const std::string& out_dir) {
  constexpr int kChainLength = 25;
  constexpr double kGamma = 0.99;
  constexpr int kIterations = 300;

  ChainInstance chain = simulation_chain(kChainLength, kGamma, alpha);
  StepSizeSchedule schedule = [&]() {
    if (variant == "adaptive") {
      return StepSizeSchedule::adaptive(simulation_ck(kGamma, kIterations));
    }
    if (variant == "increasing") return StepSizeSchedule::geometric(1.0);
    if (variant == "combined") {
      return StepSizeSchedule::max_combined(simulation_ck(kGamma, kIterations), 1.0);
    }
    throw std::invalid_argument("variant '" + variant +
                                "' unknown (adaptive | increasing | combined)");
  }();

  SimulationRun run{run_exact_pmd(chain.mdp, MirrorMap::negative_entropy(),
                                  schedule, chain.initial_policy, kIterations,
                                  1e-9, true),
                    variant, "", ""};

  if (!out_dir.empty()) {
    run.csv_path = out_dir + "/trace_" + variant + ".csv";
    run.svg_path = out_dir + "/figure_" + variant + ".svg";
    const std::string csv = trace_to_csv(run.trace);
    write_file_atomic(run.csv_path, csv);
    SvgOptions options;
    options.reference = SvgReference::GammaCurve;
    options.gamma = kGamma;
    options.title = "chain n=25, " + variant + " step size";
    write_file_atomic(run.svg_path,
                      render_convergence_svg(parse_csv(csv), options));
  }
  return run;
}

LowerBoundReport check_lower_bound(int n, double gamma,
                                   const std::vector<StepSizeSchedule>& schedules,
                                   const std::string& out_path) {
  if (n < 1) throw std::invalid_argument("check_lower_bound: n must be >= 1");
  // Proof parameter delta = (1-gamma) gamma^n gap0 / 4 depends on the initial
  // gap of the instance itself; build provisionally, measure, rebuild.
  ChainSpec spec;
  spec.n = n;
  spec.gamma = gamma;
  spec.delta = 0.25 * (1.0 - gamma) * std::pow(gamma, n + 1);
  spec.alpha = spec.delta * (1.0 - gamma);
  for (int pass = 0; pass < 2; ++pass) {
    ChainInstance chain = lower_bound_chain(spec);
    const OptimalSolution opt = optimal_values(chain.mdp);
    const double gap0 =
        (opt.value - evaluate_policy(chain.mdp, chain.initial_policy))
            .lpNorm<Eigen::Infinity>();
    spec.delta = 0.25 * (1.0 - gamma) * std::pow(gamma, n) * gap0;
    spec.alpha = spec.delta * (1.0 - gamma);
  }
  ChainInstance chain = lower_bound_chain(spec);

  LowerBoundReport report;
  report.delta = spec.delta;
  report.margin = std::numeric_limits<double>::infinity();
  report.passed = true;
  std::ostringstream text;
  text << "rate lower-bound check: chain n=" << n << ", gamma=" << gamma
       << ", delta=" << format_double(spec.delta) << "\n";

  const MirrorMap npg = MirrorMap::negative_entropy();
  for (const StepSizeSchedule& schedule : schedules) {
    IterationTrace trace =
        run_exact_pmd(chain.mdp, npg, schedule, chain.initial_policy, n);
    report.gap0 = trace.gap0;
    double schedule_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      const double floor_k = std::pow(gamma, k) * trace.gap0;
      const double ratio = trace.records[k].sup_gap / floor_k;
      schedule_margin = std::min(schedule_margin, ratio);
      if (ratio < 0.5) {
        report.passed = false;
        report.failures.emplace_back(describe_schedule(schedule), k);
      }
    }
    report.margin = std::min(report.margin, schedule_margin);
    text << "  " << describe_schedule(schedule)
         << ": min_k gap(k)/(gamma^k gap0) = " << format_double(schedule_margin)
         << (schedule_margin >= 0.5 ? "  [ok]" : "  [VIOLATED]") << "\n";
  }
  text << (report.passed ? "PASS" : "FAIL")
       << ": lower bound gap(k) >= 0.5 gamma^k gap0 for all k < " << n << "\n";
  report.text = text.str();

  if (!out_path.empty()) {
    write_file_atomic(out_path, report.text);
  }
  return report;
}

}  // namespace pmdlab
