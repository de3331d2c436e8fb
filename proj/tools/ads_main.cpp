#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ads/config.hpp"
#include "ads/error.hpp"
#include "ads/experiments.hpp"
#include "ads/io.hpp"
#include "ads/topogen.hpp"

namespace {

int log_level() {
  static int level = [] {
    const char* v = std::getenv("ADS_LOG");
    if (!v) return 1;
    std::string s = v;
    if (s == "debug") return 3;
    if (s == "info") return 2;
    if (s == "warn") return 1;
    if (s == "error") return 0;
    return 1;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 2) std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

void emit_error(const char* kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::fprintf(stderr, "%s\n", j.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized edge stream-processing simulator"};
  app.require_subcommand(1);

  std::string run_config, out_override;
  int jobs = 1;
  uint64_t seed_override = 0;
  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", run_config, "scenario file (flat TOML)")
      ->required();
  run->add_option("--out", out_override, "output directory override");
  run->add_option("--jobs", jobs, "seed-parallel worker threads")
      ->check(CLI::PositiveNumber);
  CLI::Option* seed_opt =
      run->add_option("--seed-override", seed_override, "replace the base seed");

  std::string validate_config;
  CLI::App* validate = app.add_subcommand("validate", "check a config file");
  validate->add_option("config", validate_config, "scenario file (flat TOML)")
      ->required();

  ads::GraphGenParams gp;
  std::string gen_out;
  uint64_t gen_seed = 1;
  CLI::App* gen =
      app.add_subcommand("gen-topology", "generate a lossy network graph");
  gen->add_option("--kind", gp.kind, "grid-road | ring | random")
      ->check(CLI::IsMember({"grid-road", "ring", "random"}));
  gen->add_option("--nodes", gp.nodes, "node count");
  gen->add_option("--links", gp.links, "link count");
  gen->add_option("--delay-min", gp.delay_min_ms, "min expected delay (ms)");
  gen->add_option("--delay-max", gp.delay_max_ms, "max expected delay (ms)");
  gen->add_option("--theta-lo", gp.theta_lo, "min link success probability");
  gen->add_option("--theta-hi", gp.theta_hi, "max link success probability");
  gen->add_option("--collector-frac", gp.collector_frac,
                  "grid-road share of fast-entry side roads");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output graph csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    emit_error("config", e.what());
    return 2;
  }

  try {
    if (*run) {
      ads::ScenarioConfig cfg = ads::load_scenario(run_config);
      if (seed_opt->count()) cfg.seed = seed_override;
      if (!out_override.empty()) cfg.out_dir = out_override;
      log_info("experiment " + cfg.experiment + " seeds " +
               std::to_string(cfg.seeds) + " jobs " + std::to_string(jobs));
      ads::ExperimentResult res = ads::run_experiment(cfg, jobs);
      auto [csv_path, summary_path] = ads::write_experiment(res, cfg.out_dir);
      log_info("wrote " + csv_path + " (" + std::to_string(res.table.rows.size()) +
               " rows)");
      std::printf("%s\n%s\n", csv_path.c_str(), summary_path.c_str());
    } else if (*validate) {
      ads::load_scenario(validate_config);
      std::printf("ok\n");
    } else if (*gen) {
      ads::NetGraph g = ads::gen_graph(gp, gen_seed);
      ads::write_net_graph(gen_out, g);
      log_info("wrote " + gen_out);
      std::printf("%s\n", gen_out.c_str());
    }
  } catch (const ads::ConfigError& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const ads::InvariantError& e) {
    emit_error("invariant", e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 1;
  }
  return 0;
}
