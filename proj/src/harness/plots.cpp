// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "mtdfl/error.hpp"
#include "mtdfl/harness/experiment.hpp"

namespace mtdfl {

namespace {

// Shared by the CSV and the SVG data-value attributes so both carry the same text.
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

class Svg {
 public:
  static constexpr double W = 640, H = 400, L = 70, R = 150, T = 40, B = 50;

  Svg(std::string title, std::string xlabel, std::string ylabel) {
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
        << W << ' ' << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
        << "</text>\n"
        << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
        << escape(xlabel) << "</text>\n"
        << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
        << (T + H - B) / 2 << ")\">" << escape(ylabel) << "</text>\n";
  }

  void set_range(double x0, double x1, double y0, double y1) {
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    x0_ = x0, x1_ = x1, y0_ = y0, y1_ = y1;
    os_ << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double v = y0 + (y1 - y0) * k / 4.0;
      os_ << "<text x=\"" << L - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(v)
          << "</text>\n";
    }
  }

  double px(double x) const { return L + (x - x0_) / (x1_ - x0_) * (W - L - R); }
  double py(double y) const { return H - B - (y - y0_) / (y1_ - y0_) * (H - T - B); }

  void line(const Series& s, const char* color, std::size_t slot) {
    os_ << "<g class=\"series\" data-series=\"" << escape(s.name) << "\">\n<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : s.points) os_ << px(x) << ',' << py(y) << ' ';
    os_ << "\"/>\n";
    for (const auto& [x, y] : s.points)
      os_ << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2\" fill=\"" << color << "\" data-x=\""
          << fmt(x) << "\" data-value=\"" << fmt(y) << "\"/>\n";
    os_ << "</g>\n";
    legend(s.name, color, slot);
  }

  void bar(std::size_t i, std::size_t count, const std::string& label, double v, const char* color) {
    const double slot = (W - L - R) / static_cast<double>(count);
    const double x = L + slot * (static_cast<double>(i) + 0.15);
    const double top = py(v), base = py(y0_);
    os_ << "<rect x=\"" << x << "\" y=\"" << std::min(top, base) << "\" width=\"" << slot * 0.7 << "\" height=\""
        << std::abs(base - top) << "\" fill=\"" << color << "\" data-label=\"" << escape(label) << "\" data-value=\""
        << fmt(v) << "\"/>\n"
        << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << H - B + 14 << "\" text-anchor=\"middle\" font-size=\"10\">"
        << escape(label) << "</text>\n";
  }

  void legend(const std::string& name, const char* color, std::size_t slot) {
    const double y = T + 16.0 * static_cast<double>(slot);
    os_ << "<rect x=\"" << W - R + 10 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\"" << color
        << "\"/><text x=\"" << W - R + 24 << "\" y=\"" << y + 9 << "\" font-size=\"11\">" << escape(name)
        << "</text>\n";
  }

  void save(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    f << os_.str() << "</svg>\n";
  }

 private:
  std::ostringstream os_;
  double x0_ = 0, x1_ = 1, y0_ = 0, y1_ = 1;
};

std::pair<double, double> y_range(const std::vector<Series>& ss, bool from_zero) {
  double lo = from_zero ? 0.0 : 1e300, hi = from_zero ? 0.0 : -1e300;
  for (const auto& s : ss)
    for (const auto& p : s.points) lo = std::min(lo, p.second), hi = std::max(hi, p.second);
  if (lo > hi) return {0.0, 1.0};
  return {lo, hi};
}

void write_lines(const std::filesystem::path& dir, const std::string& stem, const std::string& title,
                 const std::string& xlabel, const std::string& ylabel, const std::vector<Series>& series,
                 const std::string& csv_header, std::vector<std::filesystem::path>& written) {
  double x0 = 1e300, x1 = -1e300;
  for (const auto& s : series)
    for (const auto& p : s.points) x0 = std::min(x0, p.first), x1 = std::max(x1, p.first);
  const auto [y0, y1] = y_range(series, false);
  Svg svg(title, xlabel, ylabel);
  svg.set_range(x0, x1, y0, y1);
  for (std::size_t i = 0; i < series.size(); ++i) svg.line(series[i], kPalette[i % 6], i);
  svg.save(dir / (stem + ".svg"));

  std::ofstream csv(dir / (stem + ".csv"), std::ios::binary);
  if (!csv) throw IoError("cannot write '" + (dir / (stem + ".csv")).string() + "'");
  csv << csv_header << '\n';
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) csv << s.name << ',' << fmt(x) << ',' << fmt(y) << '\n';
  written.push_back(dir / (stem + ".svg"));
  written.push_back(dir / (stem + ".csv"));
}

void write_bars(const std::filesystem::path& dir, const std::string& stem, const std::string& title,
                const std::string& ylabel, const std::vector<std::pair<std::string, double>>& bars,
                const std::string& csv_header, std::vector<std::filesystem::path>& written) {
  double hi = 0.0;
  for (const auto& b : bars) hi = std::max(hi, b.second);
  Svg svg(title, "mode", ylabel);
  svg.set_range(0, 1, 0, hi > 0 ? hi * 1.1 : 1.0);
  for (std::size_t i = 0; i < bars.size(); ++i) svg.bar(i, bars.size(), bars[i].first, bars[i].second, kPalette[i % 6]);
  svg.save(dir / (stem + ".svg"));

  std::ofstream csv(dir / (stem + ".csv"), std::ios::binary);
  if (!csv) throw IoError("cannot write '" + (dir / (stem + ".csv")).string() + "'");
  csv << csv_header << '\n';
  for (const auto& [name, v] : bars) csv << name << ',' << fmt(v) << '\n';
  written.push_back(dir / (stem + ".svg"));
  written.push_back(dir / (stem + ".csv"));
}

}  // namespace

std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& run_dir) {
  std::vector<std::filesystem::path> written;
  const auto metrics_path = run_dir / "metrics.jsonl";
  const auto curve_path = run_dir / "training_curve.csv";
  std::vector<MetricsRecord> records;
  std::vector<CurvePoint> curve;
  if (std::filesystem::exists(metrics_path)) records = read_jsonl(metrics_path);
  if (std::filesystem::exists(curve_path)) curve = read_curve_csv(curve_path);
  if (records.empty() && curve.empty()) {
    std::cerr << "warning: no metrics in '" << run_dir.string() << "', no plots written\n";
    return written;
  }
  const auto dir = run_dir / "plots";
  std::filesystem::create_directories(dir);

  if (!curve.empty()) {
    std::map<std::size_t, std::pair<double, std::size_t>> by_episode;
    for (const auto& p : curve) {
      auto& acc = by_episode[p.episode];
      acc.first += p.cumulative_reward;
      ++acc.second;
    }
    Series s{"MTD-FL", {}};
    for (const auto& [e, acc] : by_episode)
      s.points.emplace_back(static_cast<double>(e), acc.first / static_cast<double>(acc.second));
    write_lines(dir, "reward_curve", "Cumulative reward per training episode", "episode", "cumulative reward", {s},
                "series,episode,cumulative_reward", written);
  }

  const std::vector<SummaryRow> summary = summarize(records);
  if (!summary.empty()) {
    std::vector<std::string> modes;
    for (const auto& r : summary)
      if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);

    std::vector<Series> acc;
    for (const auto& m : modes) {
      Series s{m, {}};
      for (const auto& r : summary)
        if (r.mode == m) s.points.emplace_back(static_cast<double>(r.iteration), r.accuracy_mean);
      acc.push_back(std::move(s));
    }
    write_lines(dir, "accuracy", "Test accuracy by FL iteration", "iteration", "accuracy", acc,
                "mode,iteration,accuracy", written);

    std::vector<std::pair<std::string, double>> excluded, timing;
    for (const auto& m : modes) {
      double e = 0.0, t = 0.0;
      std::size_t k = 0;
      for (const auto& r : summary)
        if (r.mode == m) e += r.excluded_mean, t += r.t_int_mean, ++k;
      excluded.emplace_back(m, e / static_cast<double>(k));
      timing.emplace_back(m, t / static_cast<double>(k));
    }
    write_bars(dir, "excluded_ratio", "Excluded malicious ratio", "ratio", excluded, "mode,excluded_malicious_ratio",
               written);
    write_bars(dir, "recognition_time", "Mean recognition time per participant", "seconds", timing, "mode,t_int",
               written);
  }
  return written;
}

}  // namespace mtdfl
