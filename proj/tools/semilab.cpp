#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semilab/io.hpp"
#include "semilab/pipeline.hpp"

using namespace semilab;

namespace {

constexpr int kOk = 0, kConfigError = 2, kTaskFailure = 3;

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

ExperimentConfig load(const std::string &path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception &e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"semiclassical eigenfunction experiments"};
  app.set_version_flag("--version", std::string(kSemilabVersion));
  app.require_subcommand(1);

  std::string config, out, only;
  auto *run = app.add_subcommand("run", "run the configured tasks and write CSVs plus manifest.json");
  run->add_option("--config", config, "experiment JSON")->required();
  run->add_option("--out", out, "output directory (overrides output_dir)");
  run->add_option("--only", only, "comma-separated subset of the configured tasks");

  auto *validate = app.add_subcommand("validate", "parse the config and print it with defaults filled in");
  validate->add_option("--config", config, "experiment JSON")->required();

  std::string field, pgm;
  int levels = 10;
  auto *render = app.add_subcommand("render", "render a field CSV with level sets as a PGM");
  render->add_option("--field", field, "field CSV")->required();
  render->add_option("--levels", levels, "number of levels")->required()->check(CLI::Range(2, 1000));
  render->add_option("--out", pgm, "output PGM")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*validate) {
      std::cout << config_to_json(load(config)) << "\n";
      return kOk;
    }
    if (*render) {
      ScalarField u{TorusGrid(1, 16)};
      try {
        u = field_from_csv(read_file(field));
      } catch (const std::exception &e) {
        throw ConfigError(e.what());
      }
      write_file(pgm, to_pgm(render_levels(u, levels)));
      return kOk;
    }
    auto cfg = load(config);
    if (!out.empty()) cfg.output_dir = out;
    const auto res = run_pipeline(cfg, split_list(only));
    for (const auto &t : res.tasks) {
      std::cerr << (t.ok ? "ok     " : "FAILED ") << t.name << " (" << format_double(t.seconds) << " s)";
      if (!t.ok) std::cerr << ": " << t.error;
      std::cerr << "\n";
    }
    std::cout << res.manifest_path << "\n";
    return res.failed ? kTaskFailure : kOk;
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kTaskFailure;
  }
}
