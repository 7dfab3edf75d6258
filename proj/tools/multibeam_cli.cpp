#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "multibeam/config.hpp"
#include "multibeam/runner.hpp"

namespace {

multibeam::RunConfig load(const std::string& path, const std::vector<std::string>& overrides) {
  multibeam::RunConfig config;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    config = multibeam::parse_config(text.str());
  }
  for (const auto& o : overrides) multibeam::apply_override(config, o);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-beam interface efficiency of atomic tweezer arrays"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MULTIBEAM_VERSION));

  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
  std::string format;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "key = value or JSON config file");
    sub->add_option("-s,--set", overrides, "override one key, e.g. --set NA=0.7")->take_all();
    sub->add_option("-o,--output", output, "output path ('-' for stdout)");
    sub->add_option("-f,--format", format, "csv, json or auto")->check(CLI::IsMember({"csv", "json", "auto"}));
  };

  std::vector<std::pair<std::string, CLI::App*>> runs;
  const std::vector<std::pair<std::string, std::string>> descriptions = {
      {"infinite-r0", "infinite-array efficiency of the first-shell target"},
      {"theory-r0", "finite-size theory efficiency"},
      {"scatter-r0", "resonant scattering reflectivity of one configuration"},
      {"sweep-spacing", "efficiency against lattice spacing for each NA"},
      {"sweep-na", "efficiency against numerical aperture"},
      {"scale-n", "jointly optimized efficiency against atom number"},
      {"scan-shift", "efficiency against lateral or axial array shifts"},
      {"disorder", "disorder-averaged inefficiency against position errors"},
      {"optimize-waist", "golden-section search of the beam waist"},
  };
  for (const auto& [name, text] : descriptions) {
    auto* sub = app.add_subcommand(name, text);
    add_common(sub);
    runs.emplace_back(name, sub);
  }
  auto* emit = app.add_subcommand("emit-config", "print the canonical config with all defaults");
  add_common(emit);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!output.empty()) overrides.push_back("path=" + output);
    if (!format.empty()) overrides.push_back("format=" + format);
    const multibeam::RunConfig config = load(config_path, overrides);
    if (emit->parsed()) {
      std::cout << multibeam::emit_config(config);
      return 0;
    }
    for (const auto& [name, sub] : runs) {
      if (sub->parsed()) return multibeam::run(name, config, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cout << multibeam::error_json(e) << '\n';
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
