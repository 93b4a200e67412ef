#include "phasecal/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "phasecal/error.hpp"
#include "text_io.hpp"

namespace phasecal::report {

namespace {

// One fill per phase 1..7.
constexpr std::array<const char*, kNumPhases> kPhaseColors = {
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1"};

constexpr int kCell = 2;
constexpr int kRowHeight = 20;
constexpr int kLabelWidth = 90;

nlohmann::json optional_number(std::optional<double> v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  auto out = detail::open_for_write(path);
  out << content;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

std::string percent(std::optional<double> fraction) {
  if (!fraction) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *fraction * 100.0);
  return buf;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string render_table(const std::string& title, const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < cells.size() ? cells[c] : "";
      if (c) s += " | ";
      s += cell;
      if (c + 1 < width.size()) s.append(width[c] - cell.size(), ' ');
    }
    return s + "\n";
  };
  std::size_t total = 0;
  for (auto w : width) total += w;
  total += 3 * (width.empty() ? 0 : width.size() - 1);

  std::string out = title + "\n" + line(header) + std::string(total, '-') + "\n";
  for (const auto& row : rows) out += line(row);
  return out;
}

Formats Formats::parse(const std::string& list) {
  Formats f{false, false, false};
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "text") {
      f.text = true;
    } else if (item == "json") {
      f.json = true;
    } else if (item == "svg") {
      f.svg = true;
    } else {
      throw InvalidArgument("unknown report format '" + item + "'");
    }
  }
  return f;
}

std::string render_text(const ReportData& data) {
  std::string out;
  if (data.has_pair_table) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"baseline", percent(data.baseline_accuracy)});
    for (const auto& pair : all_pairs()) {
      rows.push_back({pair.name() + " (restricted)", percent(data.pair_accuracy[pair.slot()])});
    }
    out += render_table("2-class model accuracy vs baseline", {"Model", "Accuracy (%)"}, rows) + "\n";
  }
  if (!data.strategies.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : data.strategies) {
      rows.push_back({s.name, percent(s.eval.overall_accuracy), percent(s.eval.per_video_mean_accuracy)});
    }
    out += render_table("Inference strategies", {"Model", "Accuracy (%)", "Per-video mean (%)"}, rows) + "\n";

    for (const auto& s : data.strategies) {
      std::vector<std::vector<std::string>> phase_rows;
      for (int p = 0; p < kNumPhases; ++p) {
        const auto& ps = s.eval.per_phase[p];
        phase_rows.push_back({std::to_string(p + 1), percent(ps.precision), percent(ps.recall), std::to_string(ps.actual)});
      }
      out += render_table("Per-phase scores: " + s.name, {"Phase", "Precision (%)", "Recall (%)", "Frames"},
                          phase_rows) + "\n";
    }
  }
  if (data.calibration) {
    const auto& c = *data.calibration;
    out += render_table("Confidence calibration", {"Model", "NLL", "ECE"},
                        {{"baseline", fixed3(c.nll_before), fixed3(c.ece_before)},
                         {"calibrated", fixed3(c.nll_after), fixed3(c.ece_after)}});
    out += "fitted temperature: " + detail::format_double(c.fitted.value()) +
           (c.at_bound ? " (at search bound)" : "") + "\n\n";
  }
  if (!data.bank_calibration.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& b : data.bank_calibration) {
      if (b.report) {
        rows.push_back({b.pair.name(), detail::format_double(b.report->fitted.value()), fixed3(b.report->nll_before),
                        fixed3(b.report->nll_after), fixed3(b.report->ece_before), fixed3(b.report->ece_after)});
      } else {
        rows.push_back({b.pair.name(), "n/a", "n/a", "n/a", "n/a", "n/a"});
      }
    }
    out += render_table("Transition model calibration (in-pair frames)",
                        {"Model", "T", "NLL before", "NLL after", "ECE before", "ECE after"}, rows) + "\n";
  }
  if (data.threshold) {
    if (!data.threshold_sweep.empty()) {
      std::vector<std::vector<std::string>> rows;
      for (const auto& [t, acc] : data.threshold_sweep) rows.push_back({detail::format_double(t), percent(acc)});
      out += render_table("Threshold sweep (validation)", {"t_conf", "Accuracy (%)"}, rows);
    }
    out += "confidence threshold: " + detail::format_double(*data.threshold) + "\n\n";
  }
  if (!data.cascades.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [name, rep] : data.cascades) {
      std::size_t longest = 0;
      for (const auto& r : rep.runs) longest = std::max(longest, r.length());
      rows.push_back({name, std::to_string(rep.runs.size()), std::to_string(rep.frames()), std::to_string(longest)});
    }
    out += render_table("Cascades (consulted pair excludes true phase)", {"Run", "Runs", "Frames", "Longest"}, rows) + "\n";
  }
  return out;
}

std::string render_json(const ReportData& data) {
  nlohmann::json j = nlohmann::json::object();
  if (data.has_pair_table) {
    j["pair_table.baseline"] = optional_number(data.baseline_accuracy);
    for (const auto& pair : all_pairs()) {
      j["pair_table." + pair.name() + ".restricted_accuracy"] = optional_number(data.pair_accuracy[pair.slot()]);
    }
  }
  for (const auto& s : data.strategies) {
    const std::string k = "strategy." + s.name + ".";
    j[k + "accuracy"] = s.eval.overall_accuracy;
    j[k + "per_video_mean_accuracy"] = s.eval.per_video_mean_accuracy;
    j[k + "frames"] = s.eval.frames;
    j[k + "correct"] = s.eval.correct;
    for (int p = 0; p < kNumPhases; ++p) {
      const auto& ps = s.eval.per_phase[p];
      const std::string pk = k + "phase" + std::to_string(p + 1) + ".";
      j[pk + "precision"] = optional_number(ps.precision);
      j[pk + "recall"] = optional_number(ps.recall);
    }
    for (const auto& pair : all_pairs()) {
      j[k + pair.name() + ".restricted_accuracy"] = optional_number(s.eval.restricted_pair_accuracy[pair.slot()]);
    }
  }
  if (data.calibration) {
    const auto& c = *data.calibration;
    j["calibration.temperature"] = c.fitted.value();
    j["calibration.at_bound"] = c.at_bound;
    j["calibration.nll_before"] = c.nll_before;
    j["calibration.nll_after"] = c.nll_after;
    j["calibration.ece_before"] = c.ece_before;
    j["calibration.ece_after"] = c.ece_after;
    j["calibration.num_bins"] = c.bins_after.num_bins();
  }
  for (const auto& b : data.bank_calibration) {
    const std::string k = "bank_calibration." + b.pair.name() + ".";
    j[k + "temperature"] = b.report ? nlohmann::json(b.report->fitted.value()) : nlohmann::json(nullptr);
    j[k + "nll_before"] = b.report ? nlohmann::json(b.report->nll_before) : nlohmann::json(nullptr);
    j[k + "nll_after"] = b.report ? nlohmann::json(b.report->nll_after) : nlohmann::json(nullptr);
  }
  if (data.threshold) j["threshold"] = *data.threshold;
  for (const auto& [t, acc] : data.threshold_sweep) j["threshold_sweep." + detail::format_double(t)] = acc;
  for (const auto& [name, rep] : data.cascades) {
    j["cascade." + name + ".runs"] = rep.runs.size();
    j["cascade." + name + ".frames"] = rep.frames();
  }
  return j.dump(2) + "\n";
}

std::string render_ribbon_svg(const PhaseTimeline& gt, const PhaseTimeline& pred) {
  if (gt.size() != pred.size()) throw InvalidArgument("ribbon rows differ in length");
  const std::size_t n = gt.size();
  const std::size_t width = kLabelWidth + n * kCell;
  const int height = 2 * kRowHeight + 10;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" shape-rendering=\"crispEdges\">\n";
  s << "<title>" << gt.video_id << "</title>\n";
  const std::array<std::pair<const char*, const PhaseTimeline*>, 2> rows = {{{"ground truth", &gt}, {"prediction", &pred}}};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int y = static_cast<int>(r) * (kRowHeight + 5);
    s << "<g class=\"ribbon\" data-row=\"" << rows[r].first << "\">\n";
    s << "<text x=\"0\" y=\"" << y + 14 << "\" font-size=\"12\">" << rows[r].first << "</text>\n";
    for (std::size_t f = 0; f < n; ++f) {
      const int phase = rows[r].second->labels[f].index();
      s << "<rect x=\"" << kLabelWidth + f * kCell << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\""
        << kRowHeight << "\" fill=\"" << kPhaseColors[phase - 1] << "\"/>\n";
    }
    s << "</g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string render_reliability_csv(const ReliabilityBins& bins) {
  std::string out = "bin,lower,upper,count,mean_confidence,accuracy\n";
  for (int b = 0; b < bins.num_bins(); ++b) {
    const auto& bin = bins.bins[b];
    out += std::to_string(b) + "," + detail::format_double(bin.lower) + "," + detail::format_double(bin.upper) + "," +
           std::to_string(bin.count) + "," + detail::format_double(bin.mean_confidence) + "," +
           detail::format_double(bin.accuracy) + "\n";
  }
  return out;
}

void emit_report(const ReportData& data, const Formats& formats, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  if (formats.text) write_file(dir / "report.txt", render_text(data));
  if (formats.json) write_file(dir / "report.json", render_json(data));
  if (formats.svg) {
    for (const auto& [gt, pred] : data.ribbons) write_file(dir / ("ribbon_" + gt.video_id + ".svg"), render_ribbon_svg(gt, pred));
  }
  if (data.calibration) {
    write_file(dir / "reliability_before.csv", render_reliability_csv(data.calibration->bins_before));
    write_file(dir / "reliability_after.csv", render_reliability_csv(data.calibration->bins_after));
  }
}

}  // namespace phasecal::report
