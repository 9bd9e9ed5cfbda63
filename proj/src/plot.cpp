#include "cardiacsr/plot.hpp"
#include "cardiacsr/dataio.hpp"
#include "cardiacsr/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <set>

namespace cardiacsr {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<ReportRecord> readReport(fs::path const &path)
{
  std::ifstream is(path);
  if (!is) { fail<DataError>("cannot open report {}", path.string()); }
  std::vector<ReportRecord> out;
  std::string line;
  int lineNo = 0;
  while (std::getline(is, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) { continue; }
    json value = json::parse(line, nullptr, false);
    if (value.is_discarded() || !value.is_object()) {
      fail<SchemaError>("{}:{}: not a JSON object", path.string(), lineNo);
    }
    out.push_back(ReportRecord{.value = std::move(value), .source = path.string(), .line = lineNo});
  }
  return out;
}

namespace {

double number(ReportRecord const &r, char const *key)
{
  auto const it = r.value.find(key);
  if (it == r.value.end() || !it->is_number()) {
    fail<SchemaError>("{}:{}: field `{}` missing or not a number", r.source, r.line, key);
  }
  return it->get<double>();
}

bool isBenchRecord(json const &j)
{
  return j.size() == 4 && j.contains("params") && j.contains("fps") && j.contains("omega") && j.contains("scale");
}

// (scale, fixed coordinate) -> swept coordinate -> scores
using Groups = std::map<std::pair<int, int>, std::map<int, std::vector<double>>>;

Figure sweepFigure(Groups const &groups, std::string title, std::string xLabel, std::string fixedName)
{
  Figure fig{.title = std::move(title), .xLabel = std::move(xLabel), .yLabel = "CardiacPSNR (dB)", .points = {},
             .connect = true};
  auto best = groups.end();
  for (auto it = groups.begin(); it != groups.end(); ++it) {
    if (best == groups.end() || it->second.size() > best->second.size()) { best = it; }
  }
  if (best == groups.end() || best->second.size() < 2) { return fig; }
  fig.title += fmt::format(" (x{}, {} = {})", best->first.first, fixedName, best->first.second);
  for (auto const &[x, ys] : best->second) {
    double mean = 0.0;
    for (double y : ys) {
      mean += y;
    }
    mean /= static_cast<double>(ys.size());
    fig.points.push_back(PlotPoint{.x = static_cast<double>(x), .y = mean, .label = fmt::format("{:.2f}", mean)});
  }
  return fig;
}

struct Axis
{
  double lo = 0.0;
  double hi = 1.0;
  double step = 0.2;
};

Axis niceAxis(double lo, double hi)
{
  if (hi - lo < 1e-9) {
    double const pad = std::max(std::abs(lo) * 0.05, 0.5);
    lo -= pad;
    hi += pad;
  }
  double const raw = (hi - lo) / 5.0;
  double const mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  return Axis{.lo = std::floor(lo / step) * step, .hi = std::ceil(hi / step) * step, .step = step};
}

std::string escape(std::string const &s)
{
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

} // namespace

std::string renderSvg(Figure const &fig)
{
  constexpr double W = 640, H = 420, left = 70, right = 20, top = 40, bottom = 60;
  std::vector<PlotPoint> pts = fig.points;
  std::stable_sort(pts.begin(), pts.end(), [](auto const &a, auto const &b) { return a.x < b.x; });
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  if (!pts.empty()) {
    auto [xmin, xmax] = std::minmax_element(pts.begin(), pts.end(), [](auto &a, auto &b) { return a.x < b.x; });
    auto [ymin, ymax] = std::minmax_element(pts.begin(), pts.end(), [](auto &a, auto &b) { return a.y < b.y; });
    xlo = xmin->x;
    xhi = xmax->x;
    ylo = ymin->y;
    yhi = ymax->y;
  }
  Axis const ax = niceAxis(xlo, xhi);
  Axis const ay = niceAxis(ylo, yhi);
  auto px = [&](double x) { return left + (x - ax.lo) / (ax.hi - ax.lo) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (y - ay.lo) / (ay.hi - ay.lo) * (H - top - bottom); };

  std::string s = fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">)"
                              "\n",
                              W, H);
  s += fmt::format(R"(<rect width="{}" height="{}" fill="white"/>)"
                   "\n",
                   W, H);
  s += fmt::format(R"(<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>)"
                   "\n",
                   W / 2, escape(fig.title));
  s += fmt::format(R"(<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><line x1="{0}" y1="{1}" x2="{0}" y2="{3}" stroke="black"/>)"
                   "\n",
                   left, H - bottom, W - right, top);
  for (double x = ax.lo; x <= ax.hi + ax.step * 1e-6; x += ax.step) {
    s += fmt::format(R"(<line x1="{0:.1f}" y1="{1}" x2="{0:.1f}" y2="{2}" stroke="black"/><text x="{0:.1f}" y="{3}" text-anchor="middle">{4:g}</text>)"
                     "\n",
                     px(x), H - bottom, H - bottom + 5, H - bottom + 20, x);
  }
  for (double y = ay.lo; y <= ay.hi + ay.step * 1e-6; y += ay.step) {
    s += fmt::format(R"(<line x1="{0}" y1="{1:.1f}" x2="{2}" y2="{1:.1f}" stroke="black"/><text x="{3}" y="{4:.1f}" text-anchor="end">{5:g}</text>)"
                     "\n",
                     left - 5, py(y), left, left - 8, py(y) + 4, y);
  }
  s += fmt::format(R"(<text x="{}" y="{}" text-anchor="middle">{}</text>)"
                   "\n",
                   (left + W - right) / 2, H - 15, escape(fig.xLabel));
  s += fmt::format(R"svg(<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>)svg"
                   "\n",
                   (top + H - bottom) / 2, escape(fig.yLabel));
  if (fig.connect && pts.size() > 1) {
    s += R"(<polyline fill="none" stroke="#1f77b4" stroke-width="2" points=")";
    for (auto const &p : pts) {
      s += fmt::format("{:.1f},{:.1f} ", px(p.x), py(p.y));
    }
    s += "\"/>\n";
  }
  for (auto const &p : pts) {
    s += fmt::format(R"(<circle cx="{:.1f}" cy="{:.1f}" r="4" fill="#1f77b4"/>)", px(p.x), py(p.y));
    if (!p.label.empty()) {
      s += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="10">{}</text>)", px(p.x) + 6, py(p.y) - 6, escape(p.label));
    }
    s += "\n";
  }
  s += "</svg>\n";
  return s;
}

PlotSet buildPlots(std::vector<ReportRecord> const &records)
{
  PlotSet set;
  set.efficiency = Figure{.title = "Efficiency", .xLabel = "frames per second", .yLabel = "CardiacPSNR (dB)", .points = {}};
  set.bench = Figure{.title = "Throughput", .xLabel = "refinement stages", .yLabel = "frames per second", .points = {}};
  set.ablation = Figure{.title = "Ablation", .xLabel = "row", .yLabel = "CardiacPSNR (dB)", .points = {}};
  Groups byOmega;
  Groups byWarmup;
  int ablationIndex = 0;
  for (auto const &r : records) {
    json const &j = r.value;
    if (j.value("summary", false)) {
      int const scale = static_cast<int>(number(r, "scale"));
      int const omega = static_cast<int>(number(r, "omega"));
      int const n = static_cast<int>(number(r, "warmup_n"));
      double const score = number(r, "cardiac_psnr");
      byOmega[{scale, omega}][n].push_back(score);
      byWarmup[{scale, n}][omega].push_back(score);
    } else if (j.contains("video_id")) {
      double const params = number(r, "params");
      set.efficiency.points.push_back(PlotPoint{.x = number(r, "fps"),
                                                .y = number(r, "cardiac_psnr"),
                                                .label = fmt::format("{} ({:.0f}k params)", j.at("video_id").dump(), params / 1e3)});
    } else if (j.contains("row")) {
      set.ablation.points.push_back(PlotPoint{.x = static_cast<double>(ablationIndex++),
                                              .y = number(r, "cardiac_psnr"),
                                              .label = j.at("row").is_string() ? j.at("row").get<std::string>() : ""});
    } else if (isBenchRecord(j)) {
      set.bench.points.push_back(PlotPoint{.x = number(r, "omega"),
                                           .y = number(r, "fps"),
                                           .label = fmt::format("{:.0f} params", number(r, "params"))});
    } else if (j.contains("step")) {
      continue; // training log lines carry nothing to plot
    } else {
      fail<SchemaError>("{}:{}: unrecognised record", r.source, r.line);
    }
  }
  set.warmupSweep = sweepFigure(byOmega, "Warm-up frames", "warm-up frames n", "omega");
  set.omegaSweep = sweepFigure(byWarmup, "Refinement stages", "refinement stages omega", "n");
  return set;
}

std::vector<fs::path> plotReports(std::vector<fs::path> const &reports, fs::path const &outDir)
{
  if (reports.empty()) { fail<ConfigError>("plot needs at least one report file"); }
  std::vector<ReportRecord> records;
  for (auto const &p : reports) {
    auto part = readReport(p);
    records.insert(records.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  PlotSet const set = buildPlots(records);
  std::vector<std::pair<std::string, Figure const *>> const named{{"sweep_warmup_n.svg", &set.warmupSweep},
                                                                 {"sweep_omega.svg", &set.omegaSweep},
                                                                 {"efficiency.svg", &set.efficiency},
                                                                 {"bench.svg", &set.bench},
                                                                 {"ablation.svg", &set.ablation}};
  std::vector<fs::path> written;
  for (auto const &[name, fig] : named) {
    if (fig->points.empty()) { continue; }
    writeTextAtomically(outDir / name, renderSvg(*fig));
    written.push_back(outDir / name);
  }
  return written;
}

} // namespace cardiacsr
