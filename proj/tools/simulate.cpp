#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include <vdflow/runner.hpp>

namespace {

std::filesystem::path output_dir(const std::string& flag, const vdflow::RunConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("SIM_OUTPUT_DIR"); env && *env) return env;
  return "sim_output";
}

int do_validate(const std::string& path) {
  const vdflow::RunConfig cfg = vdflow::load_config(path);
  std::vector<std::string> warnings;
  const auto plan = vdflow::planned_checks(cfg, &warnings);
  std::cout << "scenario " << vdflow::to_string(cfg.scenario) << ": " << plan.size() << " check(s)\n";
  for (const auto& c : plan) std::cout << "  " << c.name << " [" << c.id << "]: " << c.description << '\n';
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

int do_run(const std::string& path, int threads, const std::string& out_flag) {
  const vdflow::RunConfig cfg = vdflow::load_config(path);
  vdflow::set_thread_count(threads);
  const auto out = output_dir(out_flag, cfg);
  const vdflow::RunResult r = vdflow::run(cfg, out);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& c : r.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  if (!r.error.empty()) std::cerr << "error: " << r.error_kind << ": " << r.error << '\n';
  std::cout << "artifacts in " << out.string() << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-density incompressible flow scenarios on the periodic square"};
  app.require_subcommand(1);

  std::string run_cfg, out_flag, val_cfg;
  int threads = 1;
  auto* run = app.add_subcommand("run", "Run a scenario and write artifacts");
  run->add_option("config", run_cfg, "JSON configuration")->required();
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--output", out_flag, "Output directory (fallback: config output_dir, then SIM_OUTPUT_DIR)");
  auto* val = app.add_subcommand("validate", "List the checks a configuration will run");
  val->add_option("config", val_cfg, "JSON configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    if (*run) return do_run(run_cfg, threads, out_flag);
    return do_validate(val_cfg);
  } catch (const vdflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const vdflow::SolverError& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
