#pragma once

#include <deproj/io/config.hpp>

#include <optional>
#include <string>
#include <vector>

namespace deproj {

/// Command implementations behind the CLI verbs. Each writes its outputs into
/// `out_dir` (created if missing) and returns the list of files written.
std::vector<std::string> cmd_simulate(const RunConfig& cfg, const std::string& out_dir);
std::vector<std::string> cmd_qut(const RunConfig& cfg, const std::string& image,
                                 const std::string& out_dir);
std::vector<std::string> cmd_fit(const RunConfig& cfg, const std::string& image,
                                 const std::string& out_dir);
std::vector<std::string> cmd_baseline(const RunConfig& cfg, const std::string& image,
                                      const std::optional<std::string>& mask,
                                      const std::string& out_dir);
std::vector<std::string> cmd_compare(const RunConfig& cfg, const std::string& out_dir);
std::vector<std::string> cmd_bootstrap(const RunConfig& cfg, const std::string& image,
                                       const std::string& out_dir);
std::vector<std::string> cmd_plot(const std::vector<std::string>& inputs,
                                  const std::string& out_path, const std::string& title);

/// Fit model matching an image: side and center from the image, everything
/// else from the config.
Model image_model(const RunConfig& cfg, const PixelImage<double>& image,
                  const std::vector<Index>& dead_pixels = {});

}  // namespace deproj
