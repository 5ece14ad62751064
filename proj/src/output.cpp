#include "mlsmooth/output.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mlsmooth {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void header_group(std::ostream& out, const char* name, Eigen::Index p) {
  for (Eigen::Index i = 0; i < p; ++i) out << ',' << name << '[' << i << ']';
}

void value_group(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << fmt(v[i]);
}

Eigen::Index state_dim(const RunReport& report) {
  if (report.rows.empty()) throw std::invalid_argument("report has no rows");
  return report.rows.front().x_true.size();
}

std::vector<double> column(const RunReport& r, const Vector StudyRow::*field, Eigen::Index i) {
  std::vector<double> out;
  out.reserve(r.rows.size());
  for (const auto& row : r.rows) out.push_back((row.*field)[i]);
  return out;
}

std::vector<double> steps(const RunReport& r) {
  std::vector<double> out;
  for (const auto& row : r.rows) out.push_back(row.k);
  return out;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

// Roughly five round tick values covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

} // namespace

void write_study_csv(const RunReport& report, std::ostream& out) {
  const Eigen::Index p = state_dim(report);
  out << 'k';
  for (const char* name : {"x_true", "xhat_filt", "xhat_rts", "xhat_smc", "sigma_theory", "sigma_hat", "ci_lo", "ci_hi"})
    header_group(out, name, p);
  out << ",converged\n";
  for (const auto& row : report.rows) {
    out << row.k;
    for (const Vector* v : {&row.x_true, &row.xhat_filt, &row.xhat_rts, &row.xhat_smc, &row.sigma_theory,
                            &row.sigma_hat, &row.ci_lo, &row.ci_hi})
      value_group(out, *v);
    out << ',' << (row.converged ? 1 : 0) << '\n';
  }
}

void write_standard_error_csv(const RunReport& report, std::ostream& out) {
  const Eigen::Index p = state_dim(report);
  out << 'k';
  header_group(out, "s_sample", p);
  header_group(out, "sigma_hat", p);
  out << '\n';
  for (const auto& row : report.rows) {
    if (row.s_sample.size() == 0) continue;
    out << row.k;
    value_group(out, row.s_sample);
    value_group(out, row.sigma_hat);
    out << '\n';
  }
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  if (traj.states.empty()) throw std::invalid_argument("empty trajectory");
  out << 'k';
  header_group(out, "x", traj.states.front().size());
  header_group(out, "y", traj.observations.front().size());
  out << '\n';
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << k;
    value_group(out, traj.states[k]);
    value_group(out, traj.observations[k]);
    out << '\n';
  }
}

std::string summary_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["kind"] = report.kind;
  j["seed"] = report.seed;
  j["particles"] = report.particles;
  j["replicates"] = report.replicates;
  j["steps"] = report.rows.size();
  j["steps_covered"] = report.steps_covered;
  j["coverage_fraction"] = report.coverage_fraction;
  j["converged_steps"] = report.converged_steps;
  j["convergence_rate"] = report.convergence_rate;
  nlohmann::ordered_json t = nlohmann::ordered_json::object();
  for (const auto& [name, seconds] : report.timings) t[name] = seconds;
  j["timings_s"] = t;
  return j.dump(2) + "\n";
}

std::string render_svg(const Panel& panel) {
  constexpr double W = 720, H = 400, L = 70, R = 160, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto extend = [&](const std::vector<double>& xs, const std::vector<double>& ys) {
    for (std::size_t i = 0; i < std::min(xs.size(), ys.size()); ++i) {
      if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
      x0 = std::min(x0, xs[i]);
      x1 = std::max(x1, xs[i]);
      y0 = std::min(y0, ys[i]);
      y1 = std::max(y1, ys[i]);
    }
  };
  for (const auto& s : panel.series) extend(s.x, s.y);
  for (const auto& b : panel.bands) {
    extend(b.x, b.lo);
    extend(b.x, b.hi);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(panel.title) << "</text>\n";
  for (double t : ticks(x0, x1)) {
    o << "<line x1=\"" << sx(t) << "\" y1=\"" << H - B << "\" x2=\"" << sx(t) << "\" y2=\"" << H - B + 5 << "\" stroke=\"black\"/>";
    o << "<text x=\"" << sx(t) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << fmt_short(t) << "</text>\n";
  }
  for (double t : ticks(y0, y1)) {
    o << "<line x1=\"" << L - 5 << "\" y1=\"" << sy(t) << "\" x2=\"" << W - R << "\" y2=\"" << sy(t) << "\" stroke=\"#e0e0e0\"/>";
    o << "<text x=\"" << L - 8 << "\" y=\"" << sy(t) + 4 << "\" text-anchor=\"end\">" << fmt_short(t) << "</text>\n";
  }
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape(panel.x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(panel.y_label) << "</text>\n";

  for (const auto& b : panel.bands) {
    std::ostringstream upper, lower;
    for (std::size_t i = 0; i < b.x.size(); ++i)
      if (std::isfinite(b.lo[i]) && std::isfinite(b.hi[i])) upper << sx(b.x[i]) << ',' << sy(b.hi[i]) << ' ';
    for (std::size_t i = b.x.size(); i-- > 0;)
      if (std::isfinite(b.lo[i]) && std::isfinite(b.hi[i])) lower << sx(b.x[i]) << ',' << sy(b.lo[i]) << ' ';
    o << "<polygon points=\"" << upper.str() << lower.str() << "\" fill=\"" << b.color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
  }
  int legend = 0;
  for (const auto& s : panel.series) {
    std::ostringstream pts;
    bool open = false;
    auto flush = [&]() {
      if (open)
        o << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
          << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
      pts.str("");
      open = false;
    };
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      pts << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
      open = true;
    }
    flush();
    const double ly = T + 12 + 18 * legend++;
    o << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 34 << "\" y2=\"" << ly << "\" stroke=\""
      << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>";
    o << "<text x=\"" << W - R + 40 << "\" y=\"" << ly + 4 << "\">" << escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::string> write_outputs(const RunReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << content;
    written.push_back(path);
  };

  std::ostringstream csv;
  write_study_csv(report, csv);
  emit(report.kind + "_study.csv", csv.str());
  const bool has_spread = std::any_of(report.rows.begin(), report.rows.end(),
                                      [](const StudyRow& r) { return r.s_sample.size() > 0; });
  if (has_spread) {
    std::ostringstream se;
    write_standard_error_csv(report, se);
    emit(report.kind + "_standard_errors.csv", se.str());
  }
  emit(report.kind + "_summary.json", summary_json(report));

  const auto ks = steps(report);
  const Eigen::Index p = state_dim(report);
  const bool linear = report.kind == "linear";
  for (Eigen::Index i = 0; i < p; ++i) {
    const std::string idx = std::to_string(i);
    Panel states;
    states.title = "State " + idx + ": estimates with 95% interval";
    states.x_label = "k";
    states.y_label = "x[" + idx + "]";
    states.bands.push_back({ks, column(report, &StudyRow::ci_lo, i), column(report, &StudyRow::ci_hi, i), "#d62728"});
    states.series.push_back({"true", ks, column(report, &StudyRow::x_true, i), "#000000", false});
    states.series.push_back({linear ? "Kalman filter" : "particle filter", ks, column(report, &StudyRow::xhat_filt, i),
                             "#2ca02c", false});
    if (linear) states.series.push_back({"RTS", ks, column(report, &StudyRow::xhat_rts, i), "#1f77b4", false});
    states.series.push_back({"ML smoother", ks, column(report, &StudyRow::xhat_smc, i), "#d62728", true});
    emit(report.kind + "_states_" + idx + ".svg", render_svg(states));

    Panel se;
    se.title = "State " + idx + ": standard errors";
    se.x_label = "k";
    se.y_label = "standard error";
    se.series.push_back({"sigma_hat", ks, column(report, &StudyRow::sigma_hat, i), "#d62728", false});
    if (linear) se.series.push_back({"sigma (RTS)", ks, column(report, &StudyRow::sigma_theory, i), "#1f77b4", true});
    if (has_spread && !linear) {
      std::vector<double> s;
      for (const auto& row : report.rows) s.push_back(row.s_sample.size() ? row.s_sample[i] : std::nan(""));
      se.series.push_back({"s (sample)", ks, s, "#1f77b4", true});
    }
    emit(report.kind + "_stderr_" + idx + ".svg", render_svg(se));
  }
  return written;
}

} // namespace mlsmooth
