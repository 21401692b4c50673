// Command-line front end: ingest -> train -> predict -> calibrate ->
// evaluate -> render, driven by one key=value config file. Flags override
// file values. Exit codes: 0 ok, 1 usage/config, 2 data, 3 numeric
// divergence.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lmpgan/errors.hpp"
#include "lmpgan/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
};

lmpgan::RunConfig load_config(const CommonArgs& args) {
  lmpgan::RunConfig config = args.config_path.empty()
                                 ? lmpgan::RunConfig{}
                                 : lmpgan::RunConfig::from_file(args.config_path);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw lmpgan::ConfigError("override '" + kv + "' is not of the form key=value");
    }
    config.apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "run configuration file");
  cmd->add_option("-s,--set", args.overrides, "override a config value (key=value)")
      ->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAN-based zonal electricity price forecasting pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  bool resume = false;
  bool use_calibrated = false;
  std::string render_what, render_arg, render_out;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic market data CSV");
  add_common(synth, args);
  CLI::App* ingest = app.add_subcommand("ingest", "normalize a market data CSV");
  add_common(ingest, args);
  CLI::App* train = app.add_subcommand("train", "train the prediction model");
  add_common(train, args);
  train->add_flag("--resume", resume, "continue from the existing checkpoint");
  CLI::App* predict = app.add_subcommand("predict", "predict the test span hour by hour");
  add_common(predict, args);
  CLI::App* calibrate = app.add_subcommand("calibrate", "apply the residual correction");
  add_common(calibrate, args);
  CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions");
  add_common(evaluate, args);
  evaluate->add_flag("--calibrated", use_calibrated, "score the calibrated series");
  CLI::App* render = app.add_subcommand("render", "render frames or correlation heatmaps");
  add_common(render, args);
  render->add_option("what", render_what, "frame | corr")->required();
  render->add_option("arg", render_arg, "frame: ISO hour; corr: pred|truth|calibrated")
      ->required();
  render->add_option("out", render_out, "output .ppm path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage message
    return code == 0 ? 0 : 1;
  }

  const char* verbose = std::getenv("LMPGAN_VERBOSE");
  if (verbose && *verbose && std::string(verbose) != "0") {
    std::cerr << "lmpgan: config file '" << args.config_path << "', " << args.overrides.size()
              << " override(s)\n";
  }

  try {
    lmpgan::RunConfig config = load_config(args);
    std::ostream& out = std::cout;
    if (synth->parsed()) lmpgan::cmd_synth(config, out);
    if (ingest->parsed()) lmpgan::cmd_ingest(config, out);
    if (train->parsed()) lmpgan::cmd_train(config, resume, out);
    if (predict->parsed()) lmpgan::cmd_predict(config, out);
    if (calibrate->parsed()) lmpgan::cmd_calibrate(config, out);
    if (evaluate->parsed()) lmpgan::cmd_evaluate(config, use_calibrated, out);
    if (render->parsed()) {
      if (render_what == "frame") {
        lmpgan::cmd_render_frame(config, render_arg, render_out, out);
      } else if (render_what == "corr") {
        lmpgan::cmd_render_corr(config, render_arg, render_out, out);
      } else {
        throw lmpgan::ConfigError("render target must be 'frame' or 'corr'");
      }
    }
  } catch (const lmpgan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const lmpgan::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const lmpgan::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
