#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrq {

// Flat `key = value` configuration: one pair per line, '#' comments, arrays
// as comma lists. No sections, no nesting; every run is fully determined by
// the file content plus the documented defaults.
class RunConfig {
 public:
  static RunConfig parse(std::istream& in) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    std::vector<std::string> errs;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        errs.push_back("line " + std::to_string(lineno) + ": expected key = value");
        continue;
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) {
        errs.push_back("line " + std::to_string(lineno) + ": empty key");
        continue;
      }
      cfg.values_[key] = value;
    }
    if (!errs.empty()) {
      std::string msg = "config errors:";
      for (const auto& e : errs) msg += "\n  " + e;
      throw std::invalid_argument(msg);
    }
    return cfg;
  }

  static RunConfig parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file: " + path);
    return parse(f);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_double(key, it->second);
  }

  long long get_int(const std::string& key, long long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw std::invalid_argument("config key '" + key + "': not an integer: " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config key '" + key + "': not a boolean: " + it->second);
  }

  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    return out;
  }

  std::vector<long long> get_ints(const std::string& key,
                                  const std::vector<long long>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<long long> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string s = trim(item);
      try {
        out.push_back(std::stoll(s));
      } catch (...) {
        throw std::invalid_argument("config key '" + key + "': not an integer list");
      }
    }
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

  static double parse_double(const std::string& key, const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw std::invalid_argument("config key '" + key + "': not a number: " + s);
    }
  }

  std::map<std::string, std::string> values_;
};

// Floating-point formatting for CSV bodies: 17 significant digits, enough to
// round-trip IEEE doubles, so reruns are byte-identical.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(std::move(header)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) body_ += ',';
      body_ += columns_[i];
    }
    body_ += '\n';
  }

  void add_row(const std::vector<double>& row) {
    if (row.size() != columns_.size())
      throw std::invalid_argument("CsvWriter: row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) body_ += ',';
      body_ += format_g17(row[i]);
    }
    body_ += '\n';
  }

  const std::string& str() const { return body_; }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);  // binary: LF endings everywhere
    if (!f) throw std::runtime_error("CsvWriter: cannot open " + path);
    f << body_;
    if (!f) throw std::runtime_error("CsvWriter: write failed for " + path);
  }

 private:
  std::vector<std::string> columns_;
  std::string body_;
};

// Minimal standalone SVG line plot: axes, ticks, polylines. Plots are a
// convenience; the CSV files are the contract.
class SvgPlot {
 public:
  SvgPlot(double width, double height) : w_(width), h_(height) {}

  void add_series(const std::vector<double>& x, const std::vector<double>& y,
                  const std::string& color) {
    if (x.size() != y.size() || x.empty())
      throw std::invalid_argument("SvgPlot: bad series");
    series_.push_back({x, y, color});
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
      xmin_ = std::min(xmin_, x[i]);
      xmax_ = std::max(xmax_, x[i]);
      ymin_ = std::min(ymin_, y[i]);
      ymax_ = std::max(ymax_, y[i]);
    }
  }

  void add_vertical_marks(const std::vector<double>& xs, const std::string& color) {
    marks_.push_back({xs, color});
    for (double x : xs) {
      xmin_ = std::min(xmin_, x);
      xmax_ = std::max(xmax_, x);
    }
  }

  std::string render() const {
    const double padl = 50, padb = 30, padt = 10, padr = 10;
    const double xr = xmax_ > xmin_ ? xmax_ - xmin_ : 1.0;
    const double yr = ymax_ > ymin_ ? ymax_ - ymin_ : 1.0;
    auto px = [&](double x) { return padl + (x - xmin_) / xr * (w_ - padl - padr); };
    auto py = [&](double y) { return h_ - padb - (y - ymin_) / yr * (h_ - padb - padt); };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\""
       << h_ << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << px(xmin_) << "\" y1=\"" << py(ymin_) << "\" x2=\"" << px(xmax_)
       << "\" y2=\"" << py(ymin_) << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << px(xmin_) << "\" y1=\"" << py(ymin_) << "\" x2=\"" << px(xmin_)
       << "\" y2=\"" << py(ymax_) << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double xv = xmin_ + xr * k / 4.0;
      const double yv = ymin_ + yr * k / 4.0;
      os << "<text x=\"" << px(xv) << "\" y=\"" << h_ - 8 << "\" font-size=\"10\" "
         << "text-anchor=\"middle\">" << short_num(xv) << "</text>\n";
      os << "<text x=\"" << padl - 6 << "\" y=\"" << py(yv) + 3
         << "\" font-size=\"10\" text-anchor=\"end\">" << short_num(yv) << "</text>\n";
    }
    for (const auto& m : marks_)
      for (double x : m.xs)
        os << "<line x1=\"" << px(x) << "\" y1=\"" << py(ymin_) << "\" x2=\"" << px(x)
           << "\" y2=\"" << py(ymax_) << "\" stroke=\"" << m.color
           << "\" stroke-dasharray=\"3,3\"/>\n";
    for (const auto& s : series_) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        os << px(s.x[i]) << "," << py(s.y[i]) << " ";
      os << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("SvgPlot: cannot open " + path);
    f << render();
  }

 private:
  struct Series {
    std::vector<double> x, y;
    std::string color;
  };
  struct Marks {
    std::vector<double> xs;
    std::string color;
  };

  static std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
  }

  double w_, h_;
  double xmin_ = std::numeric_limits<double>::infinity();
  double xmax_ = -std::numeric_limits<double>::infinity();
  double ymin_ = std::numeric_limits<double>::infinity();
  double ymax_ = -std::numeric_limits<double>::infinity();
  std::vector<Series> series_;
  std::vector<Marks> marks_;
};

}  // namespace lrq
