#include <deproj/io/files.hpp>

#include <json.hpp>

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace deproj {

namespace {

constexpr char kMagic[8] = {'D', 'P', 'R', 'J', 'I', 'M', 'G', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kByteOrderMark = 0x01020304;

template <typename T>
T byteswap_any(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  std::memcpy(&v, b, sizeof(T));
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap_any(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}
  template <typename T>
  T get() {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw ValidationError(path_ + ": truncated image file");
    if constexpr (std::endian::native == std::endian::big) v = byteswap_any(v);
    return v;
  }

 private:
  std::istream& in_;
  std::string path_;
};

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ValidationError(path + ": cannot open for writing");
  return out;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw ValidationError(path + ": cannot open for reading");
  return in;
}

const char* kind_name(ValueKind k) { return k == ValueKind::kCounts ? "counts" : "intensity"; }

double parse_double(const std::string& text, const std::string& context) {
  const char* first = text.data();
  const char* last = first + text.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ValidationError(context + ": not a number: '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void save_image_binary(const PixelImage<double>& img, const std::string& path) {
  auto out = open_out(path, true);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, kByteOrderMark);
  put<std::uint64_t>(out, std::uint64_t(img.n()));
  put<std::uint32_t>(out, img.kind == ValueKind::kCounts ? 0u : 1u);
  put<std::uint32_t>(out, 0u);
  put<double>(out, img.center.x());
  put<double>(out, img.center.y());
  for (Index y = 0; y < img.n(); ++y)
    for (Index x = 0; x < img.n(); ++x) put<double>(out, img.values(y, x));
  if (!out) throw ValidationError(path + ": write failed");
}

PixelImage<double> load_image_binary(const std::string& path) {
  auto in = open_in(path, true);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ValidationError(path + ": not a deproj image (bad magic)");
  Reader r(in, path);
  const auto version = r.get<std::uint32_t>();
  const auto mark = r.get<std::uint32_t>();
  if (mark != kByteOrderMark)
    throw ValidationError(path + ": byte-order mark mismatch (file is not little-endian)");
  if (version != kVersion)
    throw ValidationError(path + ": unsupported image version " + std::to_string(version));
  const auto n = r.get<std::uint64_t>();
  const auto kind = r.get<std::uint32_t>();
  r.get<std::uint32_t>();
  if (n < 8 || n > (1u << 15)) throw ValidationError(path + ": implausible image side");
  if (kind > 1) throw ValidationError(path + ": unknown value kind");
  PixelImage<double> img;
  img.center.x() = r.get<double>();
  img.center.y() = r.get<double>();
  img.kind = kind == 0 ? ValueKind::kCounts : ValueKind::kIntensity;
  img.values.resize(Index(n), Index(n));
  for (Index y = 0; y < Index(n); ++y)
    for (Index x = 0; x < Index(n); ++x) img.values(y, x) = r.get<double>();
  img.validate();
  return img;
}

void save_image_csv(const PixelImage<double>& img, const std::string& path) {
  auto out = open_out(path);
  out << "# deproj-image n=" << img.n() << " cx=" << format_number(img.center.x())
      << " cy=" << format_number(img.center.y()) << " kind=" << kind_name(img.kind) << "\n";
  char buf[64];
  for (Index y = 0; y < img.n(); ++y) {
    for (Index x = 0; x < img.n(); ++x) {
      std::snprintf(buf, sizeof(buf), "%.17g", img.values(y, x));
      out << (x ? "," : "") << buf;
    }
    out << "\n";
  }
}

PixelImage<double> load_image_csv(const std::string& path) {
  auto in = open_in(path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string tag, word;
  hs >> tag >> word;
  if (tag != "#" || word != "deproj-image") throw ValidationError(path + ":1: missing image header");
  Index n = -1;
  double cx = -1, cy = -1;
  ValueKind kind = ValueKind::kCounts;
  while (hs >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos) throw ValidationError(path + ":1: bad header field '" + word + "'");
    const std::string key = word.substr(0, eq), value = word.substr(eq + 1);
    if (key == "n") n = Index(parse_double(value, path + ":1"));
    else if (key == "cx") cx = parse_double(value, path + ":1");
    else if (key == "cy") cy = parse_double(value, path + ":1");
    else if (key == "kind") {
      if (value != "counts" && value != "intensity")
        throw ValidationError(path + ":1: unknown kind '" + value + "'");
      kind = value == "counts" ? ValueKind::kCounts : ValueKind::kIntensity;
    } else {
      throw ValidationError(path + ":1: unknown header field '" + key + "'");
    }
  }
  if (n < 8) throw ValidationError(path + ":1: header needs n >= 8");
  PixelImage<double> img;
  img.values.resize(n, n);
  img.center = Point2<double>(cx < 0 ? double(n) / 2 : cx, cy < 0 ? double(n) / 2 : cy);
  img.kind = kind;
  std::string line;
  for (Index y = 0; y < n; ++y) {
    const std::string where = path + ":" + std::to_string(y + 2);
    if (!std::getline(in, line)) throw ValidationError(where + ": missing image row");
    const auto cells = split(line, ',');
    if (Index(cells.size()) != n)
      throw ValidationError(where + ": expected " + std::to_string(n) + " values");
    for (Index x = 0; x < n; ++x) img.values(y, x) = parse_double(cells[std::size_t(x)], where);
  }
  img.validate();
  return img;
}

namespace {
bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
}  // namespace

void save_image(const PixelImage<double>& img, const std::string& path) {
  if (ends_with(path, ".csv")) save_image_csv(img, path); else save_image_binary(img, path);
}

PixelImage<double> load_image(const std::string& path) {
  return ends_with(path, ".csv") ? load_image_csv(path) : load_image_binary(path);
}

Index CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return Index(i);
  return -1;
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
  const Index c = column(name);
  if (c < 0) throw ValidationError("csv has no column '" + name + "'");
  std::vector<double> out;
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.push_back(parse_double(rows[r][std::size_t(c)], "row " + std::to_string(r + 2)));
  return out;
}

CsvTable read_csv(const std::string& path) {
  auto in = open_in(path);
  CsvTable t;
  std::string line;
  Index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line, ',');
    if (t.columns.empty()) {
      t.columns = std::move(cells);
      continue;
    }
    if (cells.size() != t.columns.size())
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(t.columns.size()) + " fields");
    t.rows.push_back(std::move(cells));
  }
  if (t.columns.empty()) throw ValidationError(path + ": empty csv");
  return t;
}

void write_csv(const CsvTable& table, const std::string& path) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

void write_profile_csv(const DoubledProfile<double>& p, const std::string& path) {
  CsvTable t{{"radius", "left", "right", "mean"}, {}};
  const VectorXd left = p.left_half(), right = p.right_half(), mean = p.mean_half();
  for (Index j = 0; j < p.n_r(); ++j)
    t.rows.push_back({format_number(p.grid.mid(j)), format_number(left(j)),
                      format_number(right(j)), format_number(mean(j))});
  write_csv(t, path);
}

void write_sources_csv(const PointSourceSet& sources, const std::string& path) {
  CsvTable t{{"x", "y", "amplitude"}, {}};
  for (const auto& s : sources)
    t.rows.push_back({std::to_string(s.x), std::to_string(s.y), format_number(s.amplitude)});
  write_csv(t, path);
}

PointSourceSet read_sources_csv(const std::string& path) {
  const auto t = read_csv(path);
  const auto xs = t.numbers("x"), ys = t.numbers("y");
  const Index ac = t.column("amplitude");
  PointSourceSet out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double amp = ac < 0 ? 0.0 : parse_double(t.rows[i][std::size_t(ac)], path);
    out.push_back({Index(xs[i]), Index(ys[i]), amp});
  }
  return out;
}

void write_onion_csv(const RadialGrid<double>& grid, const OnionEstimate& est,
                     const AnnulusProfile& annuli, double exposure, const std::string& path) {
  CsvTable t{{"radius", "emissivity", "clamped", "interpolated"}, {}};
  for (Index j = 0; j < grid.n_r; ++j)
    t.rows.push_back({format_number(grid.mid(j)), format_number(est.emissivity(j) / exposure),
                      format_number(est.clamped(j) / exposure),
                      annuli.interpolated[std::size_t(j)] ? "1" : "0"});
  write_csv(t, path);
}

void write_bands_csv(const BootstrapBands& b, const std::string& path) {
  CsvTable t{{"radius", "lower", "upper", "estimate"}, {}};
  for (Index j = 0; j < b.radius.size(); ++j)
    t.rows.push_back({format_number(b.radius(j)), format_number(b.lower(j)),
                      format_number(b.upper(j)), format_number(b.estimate(j))});
  write_csv(t, path);
}

void write_comparison_csv(const ComparisonTable& table, const std::string& path) {
  CsvTable t{{"profile", "n", "with_sources", "replicates", "method", "mean_mse100", "std_error",
              "successes", "failures"},
             {}};
  const auto& sc = table.scenario;
  for (const auto& m : table.methods)
    t.rows.push_back({sc.profile, std::to_string(sc.n), sc.with_sources ? "1" : "0",
                      std::to_string(sc.replicates), m.method, format_number(m.mean()),
                      format_number(m.standard_error()), std::to_string(m.values.size()),
                      std::to_string(m.failures)});
  write_csv(t, path);
}

namespace {
nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}
}  // namespace

std::string qut_report_json(const QutResult& q, const ZeroThreshold& observed) {
  nlohmann::json j;
  j["lambda1_qut"] = q.lambda1;
  j["lambda2_qut"] = q.lambda2;
  j["alpha0_hat"] = q.alpha0_hat;
  j["observed_zero_threshold"] = {{"lambda1", finite_or_null(observed.lambda1)},
                                  {"lambda2", finite_or_null(observed.lambda2)},
                                  {"in_domain", observed.in_domain}};
  j["dropped_draws"] = q.dropped;
  j["gumbel_tail"] = {{"lambda1", q.gumbel1}, {"lambda2", q.gumbel2}};
  j["samples_lambda1"] = q.samples1;
  j["samples_lambda2"] = q.samples2;
  return j.dump(2) + "\n";
}

std::string fit_report_json(const QutLassoFit& f) {
  nlohmann::json j;
  const auto& r = f.fit;
  j["lambda1"] = r.lambda1;
  j["lambda2"] = r.lambda2;
  j["lambda_source"] = f.user_lambda ? "user" : "qut";
  j["alpha0_hat_null"] = f.zero.alpha0_hat;
  j["zero_threshold"] = {{"lambda1", finite_or_null(f.zero.lambda1)},
                         {"lambda2", finite_or_null(f.zero.lambda2)}};
  if (!f.user_lambda) j["qut"] = {{"dropped_draws", f.qut.dropped}, {"gumbel_lambda2", f.qut.gumbel2}};
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["restarts"] = r.restarts;
  j["polishes"] = r.polishes;
  j["kkt"] = {{"intercept", r.kkt.intercept},
              {"dictionary", r.kkt.dictionary},
              {"sources", r.kkt.sources}};
  j["kkt_tolerance"] = {{"intercept", r.kkt_tolerance.intercept},
                        {"dictionary", r.kkt_tolerance.dictionary},
                        {"sources", r.kkt_tolerance.sources}};
  j["intercept"] = r.coefficients.alpha0;
  j["active_dictionary"] = r.coefficients.active_dictionary();
  j["active_sources"] = r.coefficients.active_sources().size();
  j["zero_scene"] = r.coefficients.zero_scene();
  j["objective_trace"] = r.objective_trace;
  return j.dump(2) + "\n";
}

void write_text(const std::string& text, const std::string& path) {
  auto out = open_out(path);
  out << text;
  if (!out) throw ValidationError(path + ": write failed");
}

}  // namespace deproj
