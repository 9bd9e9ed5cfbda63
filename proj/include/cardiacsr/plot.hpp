#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

namespace cardiacsr {

// One parsed line of a JSON-lines report, with its origin for error messages.
struct ReportRecord
{
  nlohmann::json value;
  std::string source;
  int line = 0;
};

// Every non-blank line must be a JSON object; otherwise SchemaError names file and line.
std::vector<ReportRecord> readReport(std::filesystem::path const &path);

struct PlotPoint
{
  double x = 0.0;
  double y = 0.0;
  std::string label;
};

struct Figure
{
  std::string title;
  std::string xLabel;
  std::string yLabel;
  std::vector<PlotPoint> points;
  bool connect = false; // polyline through points in x order
};

std::string renderSvg(Figure const &fig);

struct PlotSet
{
  Figure warmupSweep; // cardiac PSNR against n
  Figure omegaSweep;  // cardiac PSNR against omega
  Figure efficiency;  // cardiac PSNR against frames per second, one point per eval row
  Figure bench;       // frames per second against omega
  Figure ablation;    // cardiac PSNR per ablation row
};

/*
 * Sorts report records into figures. Eval summaries drive the two sweeps: within the
 * (scale, omega) group with the most distinct n values, and the (scale, n) group with the
 * most distinct omega values. Duplicated coordinates are averaged.
 */
PlotSet buildPlots(std::vector<ReportRecord> const &records);

// Writes every non-empty figure as <name>.svg into outDir and returns the paths written.
std::vector<std::filesystem::path> plotReports(std::vector<std::filesystem::path> const &reports,
                                               std::filesystem::path const &outDir);

} // namespace cardiacsr
