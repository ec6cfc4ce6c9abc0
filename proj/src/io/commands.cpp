#include <deproj/io/commands.hpp>

#include <deproj/io/files.hpp>
#include <deproj/io/plot.hpp>

#include <filesystem>

namespace deproj {

namespace {

std::string prepare(const std::string& out_dir, const std::string& file) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ValidationError(out_dir + ": cannot create output directory");
  return (std::filesystem::path(out_dir) / file).string();
}

FitRequest fit_request(const RunConfig& cfg) {
  FitRequest req;
  req.qut = cfg.qut_config();
  req.solver = cfg.solver;
  req.lambda1 = cfg.lambda1;
  req.lambda2 = cfg.lambda2;
  req.exposure = cfg.scenario.exposure;
  return req;
}

PointSourceSet fitted_sources(const Coefficients& c, Index n, double exposure) {
  PointSourceSet out;
  for (const auto& [p, v] : c.active_sources()) out.push_back({p % n, p / n, v / exposure});
  return out;
}

}  // namespace

Model image_model(const RunConfig& cfg, const PixelImage<double>& image,
                  const std::vector<Index>& dead_pixels) {
  ScenarioConfig sc = cfg.scenario;
  sc.n = image.n();
  DEPROJ_REQUIRE(sc.exposure > 0, ValidationError, "fitting needs a positive exposure");
  return scenario_model(sc, true, dead_pixels, image.center);
}

std::vector<std::string> cmd_simulate(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const auto& sc = cfg.scenario;
  const Model sim = scenario_model(sc, false);
  const auto truth = make_test_profile(sc.profile, sim.grid(), sc.peak, sc.custom_profile);
  const Replicate rep = simulate_replicate(sc, sim, truth, 0);

  std::vector<std::string> files = {prepare(out_dir, "image.bin"),
                                    prepare(out_dir, "truth_profile.csv"),
                                    prepare(out_dir, "sources.csv"),
                                    prepare(out_dir, "config.yaml")};
  save_image(rep.image, files[0]);
  write_profile_csv(truth, files[1]);
  write_sources_csv(rep.sources, files[2]);
  write_text(dump_run_config(cfg), files[3]);
  return files;
}

std::vector<std::string> cmd_qut(const RunConfig& cfg, const std::string& image,
                                 const std::string& out_dir) {
  cfg.validate();
  const auto img = load_image(image);
  RunConfig local = cfg;
  local.scenario.n = img.n();
  const Model model = image_model(local, img);
  const VectorXd y = img.flat();
  const ZeroThreshold zt = zero_threshold(y, model);
  if (!zt.in_domain) throw NotInDomainError(image + ": image lies outside the null-model domain");
  const QutResult q = qut_thresholds(model, zt.alpha0_hat, local.qut_config());
  const std::string path = prepare(out_dir, "qut.json");
  write_text(qut_report_json(q, zt), path);
  return {path};
}

std::vector<std::string> cmd_fit(const RunConfig& cfg, const std::string& image,
                                 const std::string& out_dir) {
  cfg.validate();
  const auto img = load_image(image);
  RunConfig local = cfg;
  local.scenario.n = img.n();
  const Model model = image_model(local, img);
  const QutLassoFit fit = fit_qut_lasso(img.flat(), model, fit_request(local));

  std::vector<std::string> files = {prepare(out_dir, "profile.csv"),
                                    prepare(out_dir, "fitted_sources.csv"),
                                    prepare(out_dir, "fit_report.json")};
  write_profile_csv(fit.profile, files[0]);
  write_sources_csv(fitted_sources(fit.fit.coefficients, img.n(), local.scenario.exposure),
                    files[1]);
  write_text(fit_report_json(fit), files[2]);
  return files;
}

std::vector<std::string> cmd_baseline(const RunConfig& cfg, const std::string& image,
                                      const std::optional<std::string>& mask,
                                      const std::string& out_dir) {
  cfg.validate();
  const auto img = load_image(image);
  RunConfig local = cfg;
  local.scenario.n = img.n();
  std::vector<Index> masked;
  if (mask) {
    for (const auto& s : read_sources_csv(*mask)) {
      DEPROJ_REQUIRE(s.x >= 0 && s.x < img.n() && s.y >= 0 && s.y < img.n(), ValidationError,
                     *mask + ": mask pixel outside the image");
      masked.push_back(pixel_index(s.x, s.y, img.n()));
    }
  }
  const Model model = image_model(local, img);
  const auto annuli =
      annulus_profile(img, model.sensitivity(), model.background(), masked, model.grid());
  const auto est = onion_deproject(annuli, shell_volume_matrix(model.grid()));
  const std::string path = prepare(out_dir, "onion_profile.csv");
  write_onion_csv(model.grid(), est, annuli, local.scenario.exposure, path);
  return {path};
}

std::vector<std::string> cmd_compare(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const ComparisonTable table = run_comparison(cfg.scenario, cfg.qut_config(), cfg.solver);
  const std::string path = prepare(out_dir, "comparison.csv");
  write_comparison_csv(table, path);
  return {path};
}

std::vector<std::string> cmd_bootstrap(const RunConfig& cfg, const std::string& image,
                                       const std::string& out_dir) {
  cfg.validate();
  const auto img = load_image(image);
  RunConfig local = cfg;
  local.scenario.n = img.n();
  const Model model = image_model(local, img);
  const VectorXd y = img.flat();
  const QutLassoFit fit = fit_qut_lasso(y, model, fit_request(local));
  const BootstrapBands bands =
      block_bootstrap_ci(y, model, fit.fit.lambda1, fit.fit.lambda2, local.solver,
                         fit.fit.coefficients, local.scenario.exposure, local.bootstrap);
  std::vector<std::string> files = {prepare(out_dir, "bands.csv"),
                                    prepare(out_dir, "profile.csv")};
  write_bands_csv(bands, files[0]);
  write_profile_csv(fit.profile, files[1]);
  return files;
}

std::vector<std::string> cmd_plot(const std::vector<std::string>& inputs,
                                  const std::string& out_path, const std::string& title) {
  const std::string svg = plot_csv_files(inputs, title);
  const auto parent = std::filesystem::path(out_path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  write_text(svg, out_path);
  return {out_path};
}

}  // namespace deproj
