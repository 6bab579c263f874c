#include "calabi/config.hpp"

#include <fstream>
#include <sstream>

namespace calabi::pipeline {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Error config_error(int line, const std::string& what) {
  std::ostringstream os;
  os << "config line " << line << ": " << what;
  return Error(Error::Kind::config, os.str());
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(v);
  while (std::getline(is, cur, ',')) out.push_back(trim(cur));
  return out;
}

double parse_number(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw config_error(line, "expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw config_error(line, "expected a boolean, got '" + v + "'");
}

}  // namespace

void RunConfig::validate() const {
  if (radii.empty()) throw Error(Error::Kind::config, "config: radii must be nonempty");
  for (double r : radii)
    if (!(r > 0.0)) throw Error(Error::Kind::config, "config: radii must be positive");
  if (!weights.empty() && weights.size() != radii.size())
    throw Error(Error::Kind::config, "config: weights size must match radii");
  if (!fixed_signs.empty() && fixed_signs.size() != radii.size())
    throw Error(Error::Kind::config, "config: fixed_point size must match radii");
  if (!(rho3 > 0.0)) throw Error(Error::Kind::config, "config: rho3 must be positive");
  if (!(margin > 1.0)) throw Error(Error::Kind::config, "config: margin must exceed 1");
  if (!epsilon_paper && !(epsilon_value > 0.0))
    throw Error(Error::Kind::config, "config: explicit epsilon must be positive");
  for (int v : {rk_steps, sigma_steps, ball_per_axis, sphere_azimuth, sphere_height, t_nodes,
                segment_nodes, loop_samples, max_halvings})
    if (v <= 0) throw Error(Error::Kind::config, "config: resolutions must be positive");
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw config_error(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw config_error(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw config_error(line_no, "empty key or value");

    const std::string qual = section.empty() ? key : section + "." + key;
    if (qual == "manifold.radii") {
      cfg.radii.clear();
      for (const auto& s : split_list(value)) cfg.radii.push_back(parse_number(s, line_no));
    } else if (qual == "manifold.weights") {
      cfg.weights.clear();
      if (value != "auto")
        for (const auto& s : split_list(value)) cfg.weights.push_back(parse_number(s, line_no));
    } else if (qual == "manifold.fixed_point") {
      cfg.fixed_signs.clear();
      for (const auto& s : split_list(value)) {
        if (s == "+" || s == "+1" || s == "N" || s == "north")
          cfg.fixed_signs.push_back(1);
        else if (s == "-" || s == "-1" || s == "S" || s == "south")
          cfg.fixed_signs.push_back(-1);
        else
          throw config_error(line_no, "fixed_point entries must be +/- signs");
      }
    } else if (qual == "chart.radius") {
      cfg.chart_radius = (value == "auto") ? 0.0 : parse_number(value, line_no);
    } else if (qual == "lemma.rho3") {
      cfg.rho3 = parse_number(value, line_no);
    } else if (qual == "lemma.margin") {
      cfg.margin = parse_number(value, line_no);
    } else if (qual == "lemma.epsilon") {
      if (value == "paper") {
        cfg.epsilon_paper = true;
      } else {
        cfg.epsilon_paper = false;
        cfg.epsilon_value = parse_number(value, line_no);
      }
    } else if (qual == "lemma.max_halvings") {
      cfg.max_halvings = static_cast<int>(parse_number(value, line_no));
    } else if (qual == "integrator.rk_steps") {
      cfg.rk_steps = static_cast<int>(parse_number(value, line_no));
    } else if (qual == "integrator.sigma_steps") {
      cfg.sigma_steps = static_cast<int>(parse_number(value, line_no));
    } else if (qual == "quadrature.ball_per_axis") {
      cfg.ball_per_axis = static_cast<int>(parse_number(value, line_no));
    } else if (qual == "quadrature.sphere_azimuth") {
      cfg.sphere_azimuth = static_cast<int>(parse_number(value, line_no));
    } else if (qual == "quadrature.sphere_height") {
      cfg.sphere_height = static_cast<int>(parse_number(value, line_no));
    } else if (qual == "quadrature.t_nodes") {
      cfg.t_nodes = static_cast<int>(parse_number(value, line_no));
    } else if (qual == "quadrature.segment_nodes") {
      cfg.segment_nodes = static_cast<int>(parse_number(value, line_no));
    } else if (qual == "quadrature.loop_samples") {
      cfg.loop_samples = static_cast<int>(parse_number(value, line_no));
    } else if (qual == "run.seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_number(value, line_no));
    } else if (qual == "run.out") {
      cfg.out_dir = value;
    } else if (qual == "run.trajectories") {
      cfg.trajectories = parse_bool(value, line_no);
    } else {
      throw config_error(line_no, "unknown key '" + qual + "'");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Error::Kind::config, "config: cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return parse_config_text(os.str());
}

std::string config_echo(const RunConfig& cfg) {
  std::ostringstream os;
  os << "manifold.radii=";
  for (std::size_t i = 0; i < cfg.radii.size(); ++i)
    os << (i ? "," : "") << format_double(cfg.radii[i]);
  os << ";manifold.weights=";
  for (std::size_t i = 0; i < cfg.weights.size(); ++i)
    os << (i ? "," : "") << format_double(cfg.weights[i]);
  os << ";manifold.fixed_point=";
  for (std::size_t i = 0; i < cfg.fixed_signs.size(); ++i)
    os << (i ? "," : "") << (cfg.fixed_signs[i] > 0 ? "+" : "-");
  os << ";chart.radius=" << format_double(cfg.chart_radius);
  os << ";lemma.rho3=" << format_double(cfg.rho3);
  os << ";lemma.margin=" << format_double(cfg.margin);
  os << ";lemma.epsilon=" << (cfg.epsilon_paper ? "paper" : format_double(cfg.epsilon_value));
  os << ";lemma.max_halvings=" << cfg.max_halvings;
  os << ";integrator.rk_steps=" << cfg.rk_steps;
  os << ";integrator.sigma_steps=" << cfg.sigma_steps;
  os << ";quadrature.ball_per_axis=" << cfg.ball_per_axis;
  os << ";quadrature.sphere_azimuth=" << cfg.sphere_azimuth;
  os << ";quadrature.sphere_height=" << cfg.sphere_height;
  os << ";quadrature.t_nodes=" << cfg.t_nodes;
  os << ";quadrature.segment_nodes=" << cfg.segment_nodes;
  os << ";quadrature.loop_samples=" << cfg.loop_samples;
  os << ";run.seed=" << cfg.seed;
  os << ";run.trajectories=" << (cfg.trajectories ? "true" : "false");
  return os.str();
}

}  // namespace calabi::pipeline
