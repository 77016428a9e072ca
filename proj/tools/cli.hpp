#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "jacobound/jacobound.hpp"

namespace jacobound::cli {

enum ExitCode : int { ok = 0, runtime_failure = 1, config_error = 2, model_error = 3, refused = 4 };

struct ConfigError : Error {
  using Error::Error;
};

struct RadiusGrid {
  double start = 0.0;
  double stop = 0.0;
  int count = 1;
  bool log = false;
};

struct RunConfig {
  std::string command;
  std::string model;
  std::string p = "inf";
  std::string center;
  std::string inputs;
  std::vector<int> indices;
  std::optional<double> radius;
  std::optional<RadiusGrid> grid;
  std::vector<std::string> methods;
  int intervals = 30;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string format = "json";
  std::string out;
  int samples = 1000;
  std::vector<std::string> target_modes;
  std::vector<int> output_indices;
  bool all_levels = false;
  bool strict = false;
  int cap = 16;
};

struct Report {
  int exit_code = ok;
  std::string text;
};

inline RadiusGrid parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.size() != 3 && parts.size() != 4) throw ConfigError("--radius-grid expects START,STOP,COUNT[,log]");
  RadiusGrid g;
  try {
    g.start = std::stod(parts[0]);
    g.stop = std::stod(parts[1]);
    g.count = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw ConfigError("--radius-grid: cannot parse '" + text + "'");
  }
  if (parts.size() == 4) {
    if (parts[3] == "log")
      g.log = true;
    else if (parts[3] != "lin" && parts[3] != "linear")
      throw ConfigError("--radius-grid: scale must be 'log' or 'linear'");
  }
  if (g.count < 1) throw ConfigError("--radius-grid: COUNT must be >= 1");
  if (g.start < 0.0 || g.stop < g.start) throw ConfigError("--radius-grid: need 0 <= START <= STOP");
  if (g.log && g.start <= 0.0) throw ConfigError("--radius-grid: log scale needs START > 0");
  return g;
}

inline std::vector<double> grid_values(const RadiusGrid& g) {
  std::vector<double> out;
  for (int i = 0; i < g.count; ++i) {
    if (g.count == 1) {
      out.push_back(g.start);
    } else if (g.log) {
      out.push_back(g.start * std::pow(g.stop / g.start, static_cast<double>(i) / (g.count - 1)));
    } else {
      out.push_back(g.start + (g.stop - g.start) * i / (g.count - 1));
    }
  }
  if (g.count > 1) out.back() = g.stop;
  return out;
}

inline std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Json json_real(double v) {
  if (std::isfinite(v)) return v;
  return format_real(v);
}

namespace detail {

struct Center {
  int index = -1;
  Vector x;
  int label = -1;
};

inline Norm norm_of(const RunConfig& cfg) {
  try {
    return parse_norm(cfg.p);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

inline std::vector<Center> centers_of(const RunConfig& cfg, const Network& net) {
  if (cfg.center.empty() == cfg.inputs.empty()) throw ConfigError("give exactly one of --center or --inputs");
  std::vector<Center> out;
  if (!cfg.center.empty()) {
    out.push_back({0, load_vector(cfg.center), -1});
  } else {
    const auto inputs = load_inputs(cfg.inputs);
    std::vector<int> picks = cfg.indices;
    if (picks.empty())
      for (int i = 0; i < static_cast<int>(inputs.size()); ++i) picks.push_back(i);
    for (int i : picks) {
      if (i < 0 || i >= static_cast<int>(inputs.size()))
        throw ConfigError("--index " + std::to_string(i) + " out of range");
      out.push_back({i, inputs[static_cast<std::size_t>(i)].x, inputs[static_cast<std::size_t>(i)].label});
    }
  }
  for (const auto& c : out) check_input(net, c.x);
  return out;
}

inline std::vector<double> radii_of(const RunConfig& cfg, bool required = true) {
  if (cfg.radius && cfg.grid) throw ConfigError("give at most one of --radius and --radius-grid");
  if (cfg.grid) return grid_values(*cfg.grid);
  if (cfg.radius) {
    if (!(*cfg.radius >= 0.0)) throw ConfigError("--radius must be >= 0");
    return {*cfg.radius};
  }
  if (required) throw ConfigError("--radius or --radius-grid is required");
  return {};
}

inline double max_radius_of(const RunConfig& cfg) {
  if (cfg.grid) throw ConfigError("this command takes --radius (the search limit), not --radius-grid");
  if (!cfg.radius || !(*cfg.radius > 0.0)) throw ConfigError("--radius must be given and > 0");
  return *cfg.radius;
}

inline std::vector<std::string> methods_of(const RunConfig& cfg, std::vector<std::string> fallback,
                                           bool allow_sampled) {
  auto list = cfg.methods.empty() ? std::move(fallback) : cfg.methods;
  std::vector<std::string> out;
  for (const auto& m : list) {
    if (m == "all") {
      for (auto name : {"sampled", "recurjac-b", "recurjac-f0", "recurjac-f1", "fastlip", "naive"}) out.push_back(name);
      continue;
    }
    if (m == "sampled" ? !allow_sampled : !parse_method(m)) throw ConfigError("unsupported method '" + m + "'");
    out.push_back(m);
  }
  if (!allow_sampled)
    for (const auto& m : out)
      if (m == "sampled") throw ConfigError("method 'sampled' is not available here");
  return out;
}

inline Method bound_method_of(const RunConfig& cfg) {
  const auto list = methods_of(cfg, {"recurjac-b"}, false);
  if (list.size() != 1) throw ConfigError("this command takes a single --method");
  const Method m = *parse_method(list.front());
  if (m == Method::naive) throw ConfigError("method 'naive' does not produce Jacobian bounds");
  return m;
}

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(json_real(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json header(const RunConfig& cfg) {
  Json doc;
  doc["schema_version"] = 1;
  doc["command"] = cfg.command;
  doc["p"] = cfg.p == "Inf" || cfg.p == "INF" || cfg.p == "infinity" ? "inf" : cfg.p;
  return doc;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> columns) { line(columns); }
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
    text_ += '\n';
  }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

}  // namespace detail

inline Report cmd_lipschitz(const RunConfig& cfg) {
  const Network net = load_network(cfg.model);
  const Norm p = detail::norm_of(cfg);
  const auto centers = detail::centers_of(cfg, net);
  const auto radii = detail::radii_of(cfg);
  const auto methods = detail::methods_of(cfg, {"recurjac-b", "fastlip", "naive"}, true);

  Json doc = detail::header(cfg);
  doc["methods"] = methods;
  doc["results"] = Json::array();
  std::vector<std::string> columns{"input", "radius"};
  columns.insert(columns.end(), methods.begin(), methods.end());
  detail::Csv csv(columns);
  for (const auto& c : centers) {
    for (double r : radii) {
      const Ball ball{c.x, r, p};
      Json values;
      std::vector<std::string> cells{std::to_string(c.index), format_real(r)};
      for (const auto& m : methods) {
        const double v = m == "sampled" ? sample_lipschitz_lower(net, ball, cfg.samples, cfg.seed)
                                        : local_lipschitz(net, ball, *parse_method(m), cfg.threads).value;
        values[m] = json_real(v);
        cells.push_back(format_real(v));
      }
      doc["results"].push_back({{"input", c.index}, {"radius", r}, {"values", values}});
      csv.line(cells);
    }
  }
  return {ok, cfg.format == "csv" ? csv.str() : doc.dump(2) + "\n"};
}

inline Report cmd_certify(const RunConfig& cfg) {
  const Network net = load_network(cfg.model);
  const Norm p = detail::norm_of(cfg);
  const auto centers = detail::centers_of(cfg, net);
  const double r_max = detail::max_radius_of(cfg);
  const Method method = detail::bound_method_of(cfg);
  if (cfg.intervals < 1) throw ConfigError("--intervals must be >= 1");
  std::vector<TargetMode> modes;
  for (const auto& m : cfg.target_modes.empty()
                           ? std::vector<std::string>{"runner-up", "random", "least-likely"}
                           : cfg.target_modes) {
    const auto mode = parse_target_mode(m);
    if (!mode) throw ConfigError("unknown target mode '" + m + "'");
    modes.push_back(*mode);
  }

  Json doc = detail::header(cfg);
  doc["method"] = std::string(to_string(method));
  doc["intervals"] = cfg.intervals;
  doc["max_radius"] = r_max;
  doc["results"] = Json::array();
  detail::Csv csv({"input", "label", "predicted", "mode", "targets", "radius", "skipped"});
  std::vector<double> sums(modes.size(), 0.0);
  std::vector<int> counts(modes.size(), 0);
  int exit_code = ok;

  for (const auto& c : centers) {
    const Vector scores = evaluate(net, c.x);
    const Index predicted = argmax(scores);
    const Index label = c.label >= 0 ? c.label : predicted;
    if (label >= scores.size()) throw ConfigError("label " + std::to_string(label) + " out of range");
    Json item{{"input", c.index}, {"label", label}, {"predicted", predicted}};
    if (predicted != label) {
      item["skipped"] = true;
      item["reason"] = "misclassified";
      doc["results"].push_back(item);
      csv.line({std::to_string(c.index), std::to_string(label), std::to_string(predicted), "", "", "", "1"});
      if (cfg.strict) exit_code = refused;
      continue;
    }
    item["skipped"] = false;
    item["modes"] = Json::object();
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const auto targets = select_targets(scores, label, modes[m], cfg.seed + static_cast<std::uint64_t>(c.index));
      const Certificate cert = certify_radius(net, c.x, label, targets, p, r_max, cfg.intervals, method, cfg.threads);
      Json per = Json::array();
      std::string target_list;
      for (const auto& tc : cert.targets) {
        per.push_back({{"target", tc.target}, {"margin", tc.margin}, {"radius", tc.radius}});
        target_list += (target_list.empty() ? "" : ";") + std::to_string(tc.target);
      }
      item["modes"][std::string(to_string(modes[m]))] = {{"radius", cert.radius}, {"targets", per}};
      csv.line({std::to_string(c.index), std::to_string(label), std::to_string(predicted),
                std::string(to_string(modes[m])), target_list, format_real(cert.radius), "0"});
      sums[m] += cert.radius;
      ++counts[m];
    }
    doc["results"].push_back(item);
  }
  Json mean = Json::object();
  for (std::size_t m = 0; m < modes.size(); ++m)
    mean[std::string(to_string(modes[m]))] = counts[m] ? Json(sums[m] / counts[m]) : Json(nullptr);
  doc["mean_radius"] = mean;
  return {exit_code, cfg.format == "csv" ? csv.str() : doc.dump(2) + "\n"};
}

inline Report cmd_landscape(const RunConfig& cfg) {
  const Network net = load_network(cfg.model);
  const Norm p = detail::norm_of(cfg);
  const auto centers = detail::centers_of(cfg, net);
  const double r_max = detail::max_radius_of(cfg);
  const Method method = detail::bound_method_of(cfg);
  std::vector<int> outputs = cfg.output_indices.empty() ? std::vector<int>{0} : cfg.output_indices;
  for (int j : outputs)
    if (j < 0 || j >= net.output_dim()) throw ConfigError("--output-index " + std::to_string(j) + " out of range");

  Json doc = detail::header(cfg);
  doc["method"] = std::string(to_string(method));
  doc["max_radius"] = r_max;
  doc["results"] = Json::array();
  detail::Csv csv({"input", "output", "radius", "witness", "sign"});
  double sum = 0.0;
  int count = 0;
  for (const auto& c : centers) {
    for (int j : outputs) {
      const ExclusionResult res = exclusion_radius(net, c.x, j, p, r_max, method, cfg.threads);
      Json item{{"input", c.index}, {"output", j}, {"radius", json_real(res.radius)}};
      item["witness"] = res.witness ? Json(*res.witness) : Json(nullptr);
      item["sign"] = res.sign > 0 ? "positive" : res.sign < 0 ? "negative" : "";
      doc["results"].push_back(item);
      csv.line({std::to_string(c.index), std::to_string(j), format_real(res.radius),
                res.witness ? std::to_string(*res.witness) : "", item["sign"].get<std::string>()});
      sum += res.radius;
      ++count;
    }
  }
  doc["mean_radius"] = count ? json_real(sum / count) : Json(nullptr);
  return {ok, cfg.format == "csv" ? csv.str() : doc.dump(2) + "\n"};
}

inline Report cmd_jacobian(const RunConfig& cfg) {
  const Network net = load_network(cfg.model);
  const Norm p = detail::norm_of(cfg);
  const auto centers = detail::centers_of(cfg, net);
  const auto radii = detail::radii_of(cfg);
  const Method method = detail::bound_method_of(cfg);

  Json doc = detail::header(cfg);
  doc["method"] = std::string(to_string(method));
  doc["results"] = Json::array();
  detail::Csv csv({"input", "radius", "level", "row", "col", "lower", "upper", "worst_case"});
  for (const auto& c : centers) {
    for (double r : radii) {
      const LayerIntervals li = IntervalPropagation{}(net, Ball{c.x, r, p});
      const JacobianBounds jb = jacobian_bounds(net, li, method, cfg.threads);
      const Matrix m = worst_case_matrix(jb);
      Json item{{"input", c.index},
                {"radius", r},
                {"lower", detail::matrix_json(jb.jacobian().lower)},
                {"upper", detail::matrix_json(jb.jacobian().upper)},
                {"worst_case", detail::matrix_json(m)}};
      if (cfg.all_levels) {
        item["direction"] = jb.direction == Direction::backward ? "backward" : "forward";
        item["levels"] = Json::array();
        for (const auto& lvl : jb.levels)
          item["levels"].push_back({{"lower", detail::matrix_json(lvl.lower)}, {"upper", detail::matrix_json(lvl.upper)}});
      }
      doc["results"].push_back(item);
      const auto emit = [&](int level, const BoundPair& b, const Matrix* worst) {
        for (Index i = 0; i < b.lower.rows(); ++i)
          for (Index k = 0; k < b.lower.cols(); ++k)
            csv.line({std::to_string(c.index), format_real(r), std::to_string(level), std::to_string(i),
                      std::to_string(k), format_real(b.lower(i, k)), format_real(b.upper(i, k)),
                      worst ? format_real((*worst)(i, k)) : ""});
      };
      if (cfg.all_levels) {
        for (std::size_t l = 0; l < jb.levels.size(); ++l)
          emit(static_cast<int>(l + 1), jb.levels[l], &jb.levels[l] == &jb.jacobian() ? &m : nullptr);
      } else {
        emit(jb.direction == Direction::backward ? 1 : net.depth(), jb.jacobian(), &m);
      }
    }
  }
  return {ok, cfg.format == "csv" ? csv.str() : doc.dump(2) + "\n"};
}

inline Report cmd_oracle(const RunConfig& cfg) {
  const Network net = load_network(cfg.model);
  const Norm p = detail::norm_of(cfg);
  const auto centers = detail::centers_of(cfg, net);
  const auto radii = detail::radii_of(cfg);
  if (cfg.samples < 0) throw ConfigError("--samples must be >= 0");

  Json doc = detail::header(cfg);
  doc["samples"] = cfg.samples;
  doc["seed"] = cfg.seed;
  doc["results"] = Json::array();
  detail::Csv csv({"input", "radius", "sampled_lower", "unstable", "patterns"});
  for (const auto& c : centers) {
    for (double r : radii) {
      const Ball ball{c.x, r, p};
      const double lower = sample_lipschitz_lower(net, ball, cfg.samples, cfg.seed);
      Json item{{"input", c.index}, {"radius", r}, {"sampled_lower", lower}};
      std::string unstable = "", patterns = "";
      try {
        const auto en = enumerate_exact(net, IntervalPropagation{}(net, ball), cfg.cap);
        item["enumeration"] = {{"unstable", en.unstable.size()},
                               {"patterns", en.patterns},
                               {"lower", detail::matrix_json(en.lower)},
                               {"upper", detail::matrix_json(en.upper)}};
        unstable = std::to_string(en.unstable.size());
        patterns = std::to_string(en.patterns);
      } catch (const DomainError& e) {
        item["enumeration"] = {{"error", e.what()}};
      }
      doc["results"].push_back(item);
      csv.line({std::to_string(c.index), format_real(r), format_real(lower), unstable, patterns});
    }
  }
  return {ok, cfg.format == "csv" ? csv.str() : doc.dump(2) + "\n"};
}

/// Dispatch on cfg.command, mapping failures to exit codes.
inline Report run(const RunConfig& cfg) {
  try {
    if (cfg.format != "json" && cfg.format != "csv") throw ConfigError("--format must be json or csv");
    if (cfg.model.empty()) throw ConfigError("--model is required");
    if (cfg.command == "lipschitz") return cmd_lipschitz(cfg);
    if (cfg.command == "certify") return cmd_certify(cfg);
    if (cfg.command == "landscape") return cmd_landscape(cfg);
    if (cfg.command == "jacobian") return cmd_jacobian(cfg);
    if (cfg.command == "oracle") return cmd_oracle(cfg);
    throw ConfigError("unknown command '" + cfg.command + "'");
  } catch (const ConfigError& e) {
    return {config_error, std::string("error: ") + e.what() + "\n"};
  } catch (const ModelError& e) {
    return {model_error, std::string("model error: ") + e.what() + "\n"};
  } catch (const DimensionError& e) {
    return {model_error, std::string("dimension error: ") + e.what() + "\n"};
  } catch (const CertificationRefused& e) {
    return {refused, std::string("refused: ") + e.what() + "\n"};
  } catch (const DomainError& e) {
    return {config_error, std::string("error: ") + e.what() + "\n"};
  } catch (const std::exception& e) {
    return {runtime_failure, std::string("error: ") + e.what() + "\n"};
  }
}

}  // namespace jacobound::cli
