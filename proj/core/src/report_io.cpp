#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "lipcert/certify.hpp"
#include "lipcert/error.hpp"

namespace lipcert {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
std::string optional_field(const std::optional<T>& v) {
  return v ? std::to_string(*v) : std::string();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) fields.push_back(field);
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

template <typename T>
std::optional<T> parse_optional(const std::string& s, int line) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    T value;
    if constexpr (std::is_same_v<T, int>) {
      value = std::stoi(s, &used);
    } else {
      value = std::stoull(s, &used);
    }
    if (used != s.size()) throw std::invalid_argument(s);
    return value;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
}

double parse_double(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Panel {
  double x0, y0, w, h;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

void write_csv(const EstimateReport& report, std::ostream& out) {
  out << kCsvHeader << "\n";
  for (const auto& r : report.rows) {
    out << r.method << ',' << optional_field(r.n0) << ',' << optional_field(r.c1) << ',' << optional_field(r.c2)
        << ',' << optional_field(r.seed) << ',' << format_double(r.bound) << ',' << r.kind << ','
        << format_double(r.wall_ms) << ',' << r.status << "\n";
  }
}

EstimateReport read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw Error(ErrorCode::kParseError, "missing CSV header");
  EstimateReport report;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 9) throw Error(ErrorCode::kParseError, "line " + std::to_string(number) + ": expected 9 fields");
    ReportRow r;
    r.method = f[0];
    r.n0 = parse_optional<int>(f[1], number);
    r.c1 = parse_optional<int>(f[2], number);
    r.c2 = parse_optional<int>(f[3], number);
    r.seed = parse_optional<std::uint64_t>(f[4], number);
    r.bound = parse_double(f[5], number);
    r.kind = f[6];
    r.wall_ms = parse_double(f[7], number);
    r.status = f[8];
    report.rows.push_back(std::move(r));
  }
  return report;
}

void write_svg(const EstimateReport& report, std::ostream& out) {
  std::set<int> n0s;
  for (const auto& r : report.rows)
    if (r.n0) n0s.insert(*r.n0);
  const bool by_n0 = n0s.size() > 1;

  // Category positions when n0 does not vary.
  std::map<std::pair<int, int>, int> categories;
  for (const auto& r : report.rows)
    if (!by_n0) categories.emplace(std::pair{r.c1.value_or(0), r.c2.value_or(0)}, 0);
  int next = 0;
  for (auto& [key, idx] : categories) idx = next++;

  auto x_of = [&](const ReportRow& r) -> double {
    if (by_n0) return r.n0.value_or(0);
    return categories.at({r.c1.value_or(0), r.c2.value_or(0)});
  };

  std::map<std::string, std::vector<std::pair<double, const ReportRow*>>> series;
  std::set<std::uint64_t> seeds;
  for (const auto& r : report.rows)
    if (r.seed) seeds.insert(*r.seed);
  for (const auto& r : report.rows) {
    if (r.status != "ok") continue;
    std::string name = r.method;
    if (seeds.size() > 1 && r.seed) name += " seed " + std::to_string(*r.seed);
    series[name].emplace_back(x_of(r), &r);
  }

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double bmax = 0.0, tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
  for (const auto& [name, pts] : series)
    for (const auto& [x, r] : pts) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      bmax = std::max(bmax, r->bound);
      const double lt = std::log10(std::max(r->wall_ms, 1e-3));
      tmin = std::min(tmin, lt);
      tmax = std::max(tmax, lt);
    }
  if (series.empty()) {
    xmin = 0;
    xmax = 1;
    tmin = 0;
    tmax = 1;
  }
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (bmax <= 0.0) bmax = 1.0;
  tmin = std::floor(tmin);
  tmax = std::max(std::ceil(tmax), tmin + 1);

  const Panel panels[2] = {{70, 40, 380, 260}, {540, 40, 380, 260}};
  auto px = [&](const Panel& p, double x) {
    const double pad = by_n0 ? 0.0 : 0.5;
    return p.x0 + (x - xmin + pad) / (xmax - xmin + 2 * pad) * p.w;
  };
  auto py_bound = [&](const Panel& p, double b) { return p.y0 + p.h - b / (1.1 * bmax) * p.h; };
  auto py_time = [&](const Panel& p, double ms) {
    const double lt = std::log10(std::max(ms, 1e-3));
    return p.y0 + p.h - (lt - tmin) / (tmax - tmin) * p.h;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1080\" height=\"380\" font-family=\"sans-serif\" "
         "font-size=\"11\">\n";
  out << "<rect width=\"1080\" height=\"380\" fill=\"white\"/>\n";
  const char* titles[2] = {"Lipschitz bound", "Computation time [ms] (log)"};
  for (int k = 0; k < 2; ++k) {
    const Panel& p = panels[k];
    out << "<rect x=\"" << p.x0 << "\" y=\"" << p.y0 << "\" width=\"" << p.w << "\" height=\"" << p.h
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << p.x0 + p.w / 2 << "\" y=\"25\" text-anchor=\"middle\">" << titles[k] << "</text>\n";
    out << "<text x=\"" << p.x0 + p.w / 2 << "\" y=\"" << p.y0 + p.h + 32 << "\" text-anchor=\"middle\">"
        << (by_n0 ? "n0" : "[c1, c2]") << "</text>\n";
    if (by_n0) {
      for (int n : n0s)
        out << "<text x=\"" << px(p, n) << "\" y=\"" << p.y0 + p.h + 14 << "\" text-anchor=\"middle\">" << n
            << "</text>\n";
    } else {
      for (const auto& [key, idx] : categories)
        out << "<text x=\"" << px(p, idx) << "\" y=\"" << p.y0 + p.h + 14 << "\" text-anchor=\"middle\">["
            << key.first << ", " << key.second << "]</text>\n";
    }
  }
  for (int i = 0; i <= 4; ++i) {
    const double b = 1.1 * bmax * i / 4.0;
    out << "<text x=\"" << panels[0].x0 - 6 << "\" y=\"" << py_bound(panels[0], b) + 4
        << "\" text-anchor=\"end\">" << tick_label(b) << "</text>\n";
  }
  for (int e = static_cast<int>(tmin); e <= static_cast<int>(tmax); ++e) {
    out << "<text x=\"" << panels[1].x0 - 6 << "\" y=\"" << py_time(panels[1], std::pow(10.0, e)) + 4
        << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }

  int color = 0;
  for (const auto& [name, pts] : series) {
    const char* c = kPalette[color % 8];
    for (int k = 0; k < 2; ++k) {
      const Panel& p = panels[k];
      out << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"";
      for (const auto& [x, r] : pts)
        out << px(p, x) << ',' << (k == 0 ? py_bound(p, r->bound) : py_time(p, r->wall_ms)) << ' ';
      out << "\"/>\n";
      for (const auto& [x, r] : pts)
        out << "<circle cx=\"" << px(p, x) << "\" cy=\""
            << (k == 0 ? py_bound(p, r->bound) : py_time(p, r->wall_ms)) << "\" r=\"2.5\" fill=\"" << c
            << "\"/>\n";
    }
    out << "<text x=\"" << panels[1].x0 + panels[1].w + 8 << "\" y=\"" << 50 + 16 * color << "\" fill=\"" << c
        << "\">" << xml_escape(name) << "</text>\n";
    ++color;
  }
  out << "</svg>\n";
}

}  // namespace lipcert
