// deproj command-line front end.
#include <deproj/core/parallel.hpp>
#include <deproj/io/commands.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out = ".";
};

deproj::RunConfig effective_config(const Common& c) {
  deproj::RunConfig cfg = c.config.empty() ? deproj::RunConfig{} : deproj::load_run_config(c.config);
  if (c.seed) {
    cfg.scenario.seed = *c.seed;
    cfg.bootstrap.seed = *c.seed;
  }
  const int threads = deproj::resolve_threads(c.threads.value_or(cfg.scenario.threads));
  cfg.scenario.threads = threads;
  cfg.bootstrap.threads = threads;
  return cfg;
}

void report(const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial emissivity deprojection with QUT-lasso"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "deproj 1.0.0");

  Common common;
  std::string image, mask, title = "deproj";
  std::optional<double> lambda1, lambda2;
  std::vector<std::string> inputs;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "YAML run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Master seed (overrides the config)");
    sub->add_option("--threads", common.threads, "Worker threads (0: DEPROJ_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--out", common.out, "Output directory");
  };
  auto add_image = [&](CLI::App* sub) {
    sub->add_option("--image", image, "Input image (.bin or .csv)")->required()->check(CLI::ExistingFile);
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate an image with its true profile and sources");
  add_common(simulate);
  auto* qut = app.add_subcommand("qut", "Quantile universal thresholds for an image");
  add_common(qut);
  add_image(qut);
  auto* fit = app.add_subcommand("fit", "QUT-lasso fit of an image");
  add_common(fit);
  add_image(fit);
  fit->add_option("--lambda1", lambda1, "Dictionary penalty (skips QUT together with --lambda2)");
  fit->add_option("--lambda2", lambda2, "Source penalty");
  auto* baseline = app.add_subcommand("baseline", "Onion-peeling profile of an image");
  add_common(baseline);
  add_image(baseline);
  baseline->add_option("--mask", mask, "CSV with x,y columns of pixels to exclude")
      ->check(CLI::ExistingFile);
  auto* compare = app.add_subcommand("compare", "Monte-Carlo comparison of QUT-lasso and onion peeling");
  add_common(compare);
  auto* bootstrap = app.add_subcommand("bootstrap", "2x2 block-bootstrap bands for a fitted image");
  add_common(bootstrap);
  add_image(bootstrap);
  auto* plot = app.add_subcommand("plot", "Render CSV outputs as an SVG plot");
  plot->add_option("inputs", inputs, "CSV files")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", common.out, "Output SVG path")->required();
  plot->add_option("--title", title, "Plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (plot->parsed()) {
      report(deproj::cmd_plot(inputs, common.out, title));
      return 0;
    }
    deproj::RunConfig cfg = effective_config(common);
    if (lambda1) cfg.lambda1 = lambda1;
    if (lambda2) cfg.lambda2 = lambda2;
    if (simulate->parsed()) report(deproj::cmd_simulate(cfg, common.out));
    else if (qut->parsed()) report(deproj::cmd_qut(cfg, image, common.out));
    else if (fit->parsed()) report(deproj::cmd_fit(cfg, image, common.out));
    else if (baseline->parsed())
      report(deproj::cmd_baseline(cfg, image, mask.empty() ? std::nullopt : std::optional(mask),
                                  common.out));
    else if (compare->parsed()) report(deproj::cmd_compare(cfg, common.out));
    else if (bootstrap->parsed()) report(deproj::cmd_bootstrap(cfg, image, common.out));
    return 0;
  } catch (const deproj::Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", deproj::to_string(e.kind()), e.what());
    return deproj::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[internal]: %s\n", e.what());
    return 3;
  }
}
