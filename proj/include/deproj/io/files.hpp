#pragma once

#include <deproj/experiments/experiments.hpp>

#include <string>
#include <vector>

namespace deproj {

/// Binary image layout, all little-endian:
///   char[8]  magic "DPRJIMG\0"
///   u32      version (1)
///   u32      byte-order mark 0x01020304
///   u64      n
///   u32      kind (0 counts, 1 intensity)
///   u32      reserved (0)
///   f64      center x, f64 center y
///   f64[n*n] values, row-major (row = y)
void save_image_binary(const PixelImage<double>& img, const std::string& path);
PixelImage<double> load_image_binary(const std::string& path);

/// Text layout: one header line "# deproj-image n=<n> cx=<cx> cy=<cy> kind=<kind>",
/// then n comma-separated rows of 17 significant digits.
void save_image_csv(const PixelImage<double>& img, const std::string& path);
PixelImage<double> load_image_csv(const std::string& path);

/// Chooses the layout from the extension (.csv or anything else = binary).
void save_image(const PixelImage<double>& img, const std::string& path);
PixelImage<double> load_image(const std::string& path);

/// Plain numeric table with a header row.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  Index column(const std::string& name) const;  // -1 if absent
  std::vector<double> numbers(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);
void write_csv(const CsvTable& table, const std::string& path);

/// Shortest text that reads back to the same double.
std::string format_number(double v);

/// radius,left,right,mean
void write_profile_csv(const DoubledProfile<double>& profile, const std::string& path);
/// x,y,amplitude
void write_sources_csv(const PointSourceSet& sources, const std::string& path);
PointSourceSet read_sources_csv(const std::string& path);
/// radius,emissivity,clamped,interpolated
void write_onion_csv(const RadialGrid<double>& grid, const OnionEstimate& est,
                     const AnnulusProfile& annuli, double exposure, const std::string& path);
/// radius,lower,upper,estimate (log-profile)
void write_bands_csv(const BootstrapBands& bands, const std::string& path);
/// profile,n,with_sources,replicates,method,mean_mse100,std_error,successes,failures
void write_comparison_csv(const ComparisonTable& table, const std::string& path);

/// JSON reports.
std::string qut_report_json(const QutResult& q, const ZeroThreshold& observed);
std::string fit_report_json(const QutLassoFit& fit);

void write_text(const std::string& text, const std::string& path);

}  // namespace deproj
