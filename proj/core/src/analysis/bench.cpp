#include "eif/analysis/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "eif/compute/memory_probe.hpp"
#include "eif/compute/rng.hpp"
#include "eif/errors.hpp"
#include "eif/model/model.hpp"

namespace eif {
namespace {

ModelConfig bench_model(const BenchConfig& cfg, Arch arch, std::size_t n) {
  ModelConfig m;
  m.arch = arch;
  m.history_len = cfg.history_len;
  m.forecast_len = cfg.forecast_len;
  m.channels = cfg.channels;
  m.embed_dim = cfg.embed_dim;
  m.latent_count = cfg.latent_count;
  m.num_blocks = cfg.num_blocks;
  m.seed = cfg.seed;
  if (arch == Arch::kFeatMlp) m.featmlp_entities = n;
  return m;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

std::size_t parse_size(const std::string& s) {
  std::size_t pos = 0;
  const unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size()) throw std::invalid_argument(s);
  return static_cast<std::size_t>(v);
}

}  // namespace

void BenchConfig::validate() const {
  if (archs.empty()) throw ConfigError("archs must not be empty");
  if (entity_counts.empty()) throw ConfigError("entity counts must not be empty");
  for (std::size_t i = 0; i < entity_counts.size(); ++i) {
    if (entity_counts[i] == 0) throw ConfigError("entity counts must be positive");
    if (i > 0 && entity_counts[i] <= entity_counts[i - 1]) {
      throw ConfigError("entity counts must be strictly increasing");
    }
  }
  if (repeats < 3) throw ConfigError("repeats must be >= 3");
  bench_model(*this, Arch::kEiFormer, 1).validate();
}

std::vector<std::size_t> geometric_counts(std::size_t min_n, std::size_t max_n, std::size_t factor) {
  if (min_n < 1) throw ConfigError("min-n must be >= 1");
  if (max_n < min_n) throw ConfigError("max-n must be >= min-n");
  if (factor < 2) throw ConfigError("factor must be >= 2");
  std::vector<std::size_t> out;
  for (std::size_t n = min_n; n <= max_n; n *= factor) {
    out.push_back(n);
    if (n > max_n / factor) break;
  }
  return out;
}

const char* bench_status_name(BenchStatus s) {
  return s == BenchStatus::kOk ? "ok" : "oom-guard";
}

BenchReport bench_forward(const BenchConfig& cfg) {
  cfg.validate();
  BenchReport report;
  for (Arch arch : cfg.archs) {
    for (std::size_t n : cfg.entity_counts) {
      const ModelConfig mc = bench_model(cfg, arch, n);
      BenchRecord rec;
      rec.arch = arch;
      rec.entities = n;
      rec.attn_map_bytes = attention_map_elements(mc, 1, n) * sizeof(double);
      if (rec.attn_map_bytes > cfg.budget_bytes) {
        rec.status = BenchStatus::kOomGuard;
        report.records.push_back(rec);
        continue;
      }
      const ForecastModel model(mc);
      Rng rng(derive_seed(cfg.seed, n));
      Tensor x({1, cfg.history_len, n, cfg.channels});
      for (double& v : x.mutable_data()) v = rng.normal();

      model.forward(x);  // warm-up
      const std::size_t baseline = MemoryProbe::live_bytes();
      MemoryProbe::reset_peak();
      std::vector<double> times;
      for (std::size_t r = 0; r < cfg.repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        Tensor y = model.forward(x);
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double>(t1 - t0).count());
      }
      rec.peak_bytes = MemoryProbe::peak_bytes() - baseline;
      std::sort(times.begin(), times.end());
      const std::size_t k = times.size();
      rec.median_seconds = k % 2 ? times[k / 2] : 0.5 * (times[k / 2 - 1] + times[k / 2]);
      report.records.push_back(rec);
    }
  }
  report.slopes = fit_slopes(report.records);
  return report;
}

SlopeFit fit_slope(Arch arch, const std::vector<BenchRecord>& records) {
  SlopeFit fit;
  fit.arch = arch;
  std::size_t largest = 0;
  for (const auto& r : records) {
    if (r.arch == arch && r.status == BenchStatus::kOk && r.median_seconds > 0.0) {
      largest = std::max(largest, r.entities);
    }
  }
  if (largest == 0) return fit;
  std::vector<double> lx, ly;
  for (const auto& r : records) {
    if (r.arch != arch || r.status != BenchStatus::kOk || !(r.median_seconds > 0.0)) continue;
    if (static_cast<double>(r.entities) * 10.0 < static_cast<double>(largest)) continue;
    lx.push_back(std::log(static_cast<double>(r.entities)));
    ly.push_back(std::log(r.median_seconds));
    fit.min_n = fit.min_n == 0 ? r.entities : std::min(fit.min_n, r.entities);
    fit.max_n = std::max(fit.max_n, r.entities);
  }
  fit.points = lx.size();
  if (lx.size() < 2) return fit;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx > 0.0) fit.slope = sxy / sxx;
  return fit;
}

std::vector<SlopeFit> fit_slopes(const std::vector<BenchRecord>& records) {
  std::vector<Arch> seen;
  for (const auto& r : records) {
    if (std::find(seen.begin(), seen.end(), r.arch) == seen.end()) seen.push_back(r.arch);
  }
  std::vector<SlopeFit> out;
  for (Arch a : seen) out.push_back(fit_slope(a, records));
  return out;
}

std::string to_csv(const BenchReport& report) {
  std::string out = "arch,N,median_seconds,peak_bytes,status,attn_map_bytes\n";
  char buf[256];
  for (const auto& r : report.records) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%zu,%s,%zu\n", std::string(arch_name(r.arch)).c_str(),
                  r.entities, r.median_seconds, r.peak_bytes, bench_status_name(r.status),
                  r.attn_map_bytes);
    out += buf;
  }
  return out;
}

BenchReport bench_report_from_csv(const std::string& csv) {
  std::stringstream ss(csv);
  std::string line;
  if (!std::getline(ss, line) || line != "arch,N,median_seconds,peak_bytes,status,attn_map_bytes") {
    throw CorruptionError("bench CSV: unexpected header");
  }
  BenchReport report;
  std::size_t lineno = 1;
  while (std::getline(ss, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw CorruptionError("bench CSV line " + std::to_string(lineno) + ": expected 6 fields");
    BenchRecord r;
    try {
      r.arch = parse_arch(f[0]);
      r.entities = parse_size(f[1]);
      std::size_t pos = 0;
      r.median_seconds = std::stod(f[2], &pos);
      if (pos != f[2].size()) throw std::invalid_argument(f[2]);
      r.peak_bytes = parse_size(f[3]);
      if (f[4] == "ok") {
        r.status = BenchStatus::kOk;
      } else if (f[4] == "oom-guard") {
        r.status = BenchStatus::kOomGuard;
      } else {
        throw std::invalid_argument(f[4]);
      }
      r.attn_map_bytes = parse_size(f[5]);
    } catch (const std::exception& e) {
      throw CorruptionError("bench CSV line " + std::to_string(lineno) + ": bad field " + e.what());
    }
    report.records.push_back(r);
  }
  report.slopes = fit_slopes(report.records);
  return report;
}

std::string bench_plot_svg(const BenchReport& report) {
  const double w = 640, h = 420, left = 70, right = 150, top = 20, bottom = 50;
  double nmin = 1e300, nmax = 0, tmin = 1e300, tmax = 0;
  for (const auto& r : report.records) {
    if (r.status != BenchStatus::kOk || !(r.median_seconds > 0.0)) continue;
    nmin = std::min(nmin, double(r.entities));
    nmax = std::max(nmax, double(r.entities));
    tmin = std::min(tmin, r.median_seconds);
    tmax = std::max(tmax, r.median_seconds);
  }
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (nmax == 0) {
    os << "<text x=\"20\" y=\"40\">no ok records</text>\n</svg>\n";
    return os.str();
  }
  const double lx0 = std::floor(std::log10(nmin)), lx1 = std::max(lx0 + 1, std::ceil(std::log10(nmax)));
  const double ly0 = std::floor(std::log10(tmin)), ly1 = std::max(ly0 + 1, std::ceil(std::log10(tmax)));
  auto px = [&](double n) { return left + (std::log10(n) - lx0) / (lx1 - lx0) * (w - left - right); };
  auto py = [&](double t) { return h - bottom - (std::log10(t) - ly0) / (ly1 - ly0) * (h - top - bottom); };
  os << "<g stroke=\"#ccc\">\n";
  for (double d = lx0; d <= lx1; d += 1) {
    const double x = px(std::pow(10, d));
    os << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\"" << h - bottom << "\"/>\n";
  }
  for (double d = ly0; d <= ly1; d += 1) {
    const double y = py(std::pow(10, d));
    os << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << w - right << "\" y2=\"" << y << "\"/>\n";
  }
  os << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double d = lx0; d <= lx1; d += 1) {
    os << "<text x=\"" << px(std::pow(10, d)) - 12 << "\" y=\"" << h - bottom + 16 << "\">1e" << d << "</text>\n";
  }
  for (double d = ly0; d <= ly1; d += 1) {
    os << "<text x=\"" << 8 << "\" y=\"" << py(std::pow(10, d)) + 4 << "\">1e" << d << " s</text>\n";
  }
  os << "<text x=\"" << (left + w - right) / 2 - 40 << "\" y=\"" << h - 10 << "\">entities N</text>\n</g>\n";
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::size_t k = 0;
  for (const auto& fit : report.slopes) {
    const char* color = colors[k % 4];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : report.records) {
      if (r.arch == fit.arch && r.status == BenchStatus::kOk && r.median_seconds > 0.0) {
        os << px(double(r.entities)) << ',' << py(r.median_seconds) << ' ';
      }
    }
    os << "\"/>\n";
    char label[96];
    if (fit.slope) {
      std::snprintf(label, sizeof label, "%s (slope %.2f)", std::string(arch_name(fit.arch)).c_str(), *fit.slope);
    } else {
      std::snprintf(label, sizeof label, "%s (slope n/a)", std::string(arch_name(fit.arch)).c_str());
    }
    os << "<text x=\"" << w - right + 8 << "\" y=\"" << top + 16 + 16 * k << "\" fill=\"" << color
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << label << "</text>\n";
    ++k;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace eif
