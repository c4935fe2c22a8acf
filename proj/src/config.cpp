#include "fracpm/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fracpm {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

bool parse_int(const std::string& text, int& out) {
  double d;
  if (!parse_double(text, d)) return false;
  out = static_cast<int>(d);
  return static_cast<double>(out) == d;
}

bool parse_bool(const std::string& text, bool& out) {
  const std::string t = trim(text);
  if (t == "on" || t == "true" || t == "1" || t == "yes") {
    out = true;
    return true;
  }
  if (t == "off" || t == "false" || t == "0" || t == "no") {
    out = false;
    return true;
  }
  return false;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(trim(item));
  if (!text.empty() && text.back() == sep) parts.push_back("");
  return parts;
}

bool parse_double_list(const std::string& text, std::vector<double>& out) {
  out.clear();
  for (const auto& part : split(text, ',')) {
    double v;
    if (!parse_double(part, v)) return false;
    out.push_back(v);
  }
  return !out.empty();
}

}  // namespace

CoefficientFn CoefficientSpec::to_fn() const {
  const double a = p0, b = p1, c = p2;
  switch (kind) {
    case Kind::identity:
      return identity_coefficient();
    case Kind::diagonal:
      return [a, b](const Eigen::Vector2d&) {
        Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
        m(0, 0) = a;
        m(1, 1) = b;
        return m;
      };
    case Kind::full:
      return [a, b, c](const Eigen::Vector2d&) {
        Eigen::Matrix2d m;
        m << a, b, b, c;
        return m;
      };
    case Kind::affine:
      return [a, b](const Eigen::Vector2d& x) {
        return Eigen::Matrix2d::Identity() * (a + b * x(0));
      };
  }
  return identity_coefficient();
}

std::string CoefficientSpec::to_string() const {
  switch (kind) {
    case Kind::identity: return "identity";
    case Kind::diagonal: return "diagonal:" + fmt(p0) + "," + fmt(p1);
    case Kind::full: return "full:" + fmt(p0) + "," + fmt(p1) + "," + fmt(p2);
    case Kind::affine: return "affine:" + fmt(p0) + "," + fmt(p1);
  }
  return "identity";
}

std::optional<CoefficientSpec> CoefficientSpec::parse(const std::string& text) {
  const std::string t = trim(text);
  CoefficientSpec spec;
  if (t == "identity") return spec;
  const auto colon = t.find(':');
  if (colon == std::string::npos) return std::nullopt;
  const std::string head = t.substr(0, colon);
  std::vector<double> params;
  if (!parse_double_list(t.substr(colon + 1), params)) return std::nullopt;
  if (head == "diagonal") {
    if (params.size() < 1 || params.size() > 2) return std::nullopt;
    spec.kind = Kind::diagonal;
    spec.p0 = params[0];
    spec.p1 = params.size() == 2 ? params[1] : params[0];
    return spec;
  }
  if (head == "full") {
    if (params.size() != 3) return std::nullopt;
    spec.kind = Kind::full;
    spec.p0 = params[0];
    spec.p1 = params[1];
    spec.p2 = params[2];
    return spec;
  }
  if (head == "affine") {
    if (params.size() != 2) return std::nullopt;
    spec.kind = Kind::affine;
    spec.p0 = params[0];
    spec.p1 = params[1];
    return spec;
  }
  return std::nullopt;
}

SolverConfig ExperimentConfig::solver_config() const {
  SolverConfig cfg = solver;
  cfg.s = s;
  cfg.mass_mode = mass_mode;
  return cfg;
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream out;
  out << "[domain]\n";
  out << "dimension = " << dimension << "\n";
  out << "resolution = " << resolution << "\n";
  out << "gamma0 = ";
  for (size_t i = 0; i < gamma0.size(); ++i)
    out << (i ? "," : "") << fracpm::to_string(gamma0[i]);
  out << "\n";
  out << "coefficient = " << coefficient.to_string() << "\n";
  out << "[operator]\n";
  out << "s = " << fmt(s) << "\n";
  out << "mass_mode = " << fracpm::to_string(mass_mode) << "\n";
  out << "[solver]\n";
  out << "delta = " << fmt(solver.delta) << "\n";
  out << "mu = " << fmt(solver.mu) << "\n";
  out << "dt = " << fmt(solver.dt) << "\n";
  out << "t_end = " << fmt(solver.t_end) << "\n";
  out << "picard_iters = " << solver.picard_iters << "\n";
  out << "picard_tol = " << fmt(solver.picard_tol) << "\n";
  out << "adapt = " << (solver.adapt ? "on" : "off") << "\n";
  out << "limit_replay = " << (solver.limit_replay ? "on" : "off") << "\n";
  out << "disable_transport = " << (solver.disable_transport ? "on" : "off") << "\n";
  out << "compat_clip = " << (solver.compat_clip ? "on" : "off") << "\n";
  out << "tol_neg_factor = " << fmt(solver.tol_neg_factor) << "\n";
  out << "tol_pos_factor = " << fmt(solver.tol_pos_factor) << "\n";
  out << "max_halvings = " << solver.max_halvings << "\n";
  out << "initial = " << initial << "\n";
  out << "[sweep]\n";
  out << "delta_grid = ";
  for (size_t i = 0; i < delta_grid.size(); ++i) out << (i ? "," : "") << fmt(delta_grid[i]);
  out << "\n";
  out << "mu_grid = ";
  for (size_t i = 0; i < mu_grid.size(); ++i) out << (i ? "," : "") << fmt(mu_grid[i]);
  out << "\n";
  out << "[output]\n";
  out << "directory = " << output_dir << "\n";
  out << "snapshots = ";
  for (size_t i = 0; i < snapshot_times.size(); ++i)
    out << (i ? "," : "") << fmt(snapshot_times[i]);
  out << "\n";
  return out.str();
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string text = serialize();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

ParseResult parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::vector<ConfigError> errors;
  auto fail = [&errors](int line, const std::string& msg) { errors.push_back({line, msg}); };

  std::istringstream stream(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    const auto hash_pos = raw.find('#');
    std::string line = trim(hash_pos == std::string::npos ? raw : raw.substr(0, hash_pos));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        fail(line_no, "malformed section header '" + line + "'");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section != "domain" && section != "operator" && section != "solver" &&
          section != "sweep" && section != "output")
        fail(line_no, "unknown section '[" + section + "]'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(line_no, "expected 'key = value', got '" + line + "'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      fail(line_no, "key '" + key + "' outside any section");
      continue;
    }

    auto need_double = [&](double& slot, auto pred, const std::string& why) {
      double v;
      if (!parse_double(value, v)) {
        fail(line_no, "key '" + key + "': '" + value + "' is not a number");
        return;
      }
      if (!pred(v))
        fail(line_no, "key '" + key + "': " + why);
      else
        slot = v;
    };
    auto is_positive = [](double v) { return v > 0.0; };

    if (section == "domain") {
      if (key == "dimension") {
        int v;
        if (!parse_int(value, v) || (v != 1 && v != 2))
          fail(line_no, "dimension must be 1 or 2");
        else
          cfg.dimension = v;
      } else if (key == "resolution") {
        int v;
        if (!parse_int(value, v))
          fail(line_no, "resolution must be an integer");
        else if (v < 4)
          fail(line_no, "resolution must be at least 4");
        else
          cfg.resolution = v;
      } else if (key == "gamma0") {
        std::vector<Side> sides;
        bool ok = true;
        for (const auto& part : split(value, ',')) {
          if (part.empty()) continue;
          try {
            sides.push_back(side_from_string(part));
          } catch (const std::exception& ex) {
            fail(line_no, ex.what());
            ok = false;
          }
        }
        if (ok && sides.empty())
          fail(line_no, "gamma0 must name at least one boundary side");
        else if (ok)
          cfg.gamma0 = sides;
      } else if (key == "coefficient") {
        auto spec = CoefficientSpec::parse(value);
        if (!spec)
          fail(line_no, "coefficient '" + value +
                            "' not recognized (identity | diagonal:c1[,c2] | "
                            "full:a11,a12,a22 | affine:c0,c1)");
        else
          cfg.coefficient = *spec;
      } else {
        fail(line_no, "unknown key '" + key + "' in [domain]");
      }
    } else if (section == "operator") {
      if (key == "s") {
        need_double(cfg.s, [](double v) { return v > 0.0 && v < 1.0; }, "s must lie in (0,1)");
      } else if (key == "mass_mode") {
        if (value == "lumped")
          cfg.mass_mode = MassMode::lumped;
        else if (value == "consistent")
          cfg.mass_mode = MassMode::consistent;
        else
          fail(line_no, "mass_mode must be 'lumped' or 'consistent'");
      } else {
        fail(line_no, "unknown key '" + key + "' in [operator]");
      }
    } else if (section == "solver") {
      if (key == "delta") {
        need_double(cfg.solver.delta, [](double v) { return v >= 0.0 && v <= 1.0; },
                    "delta must lie in [0,1]");
      } else if (key == "mu") {
        need_double(cfg.solver.mu, [](double v) { return v > 0.0 && v <= 1.0; },
                    "mu must lie in (0,1]");
      } else if (key == "dt") {
        need_double(cfg.solver.dt, is_positive, "dt must be positive");
      } else if (key == "t_end") {
        need_double(cfg.solver.t_end, is_positive, "t_end must be positive");
      } else if (key == "picard_iters") {
        int v;
        if (!parse_int(value, v) || v < 0)
          fail(line_no, "picard_iters must be a nonnegative integer");
        else
          cfg.solver.picard_iters = v;
      } else if (key == "picard_tol") {
        need_double(cfg.solver.picard_tol, is_positive, "picard_tol must be positive");
      } else if (key == "max_halvings") {
        int v;
        if (!parse_int(value, v) || v < 0)
          fail(line_no, "max_halvings must be a nonnegative integer");
        else
          cfg.solver.max_halvings = v;
      } else if (key == "tol_neg_factor") {
        need_double(cfg.solver.tol_neg_factor, [](double v) { return v >= 0.0; },
                    "tol_neg_factor must be nonnegative");
      } else if (key == "tol_pos_factor") {
        need_double(cfg.solver.tol_pos_factor, [](double v) { return v >= 0.0; },
                    "tol_pos_factor must be nonnegative");
      } else if (key == "adapt" || key == "limit_replay" || key == "disable_transport" ||
                 key == "compat_clip") {
        bool v;
        if (!parse_bool(value, v)) {
          fail(line_no, "key '" + key + "': expected on/off");
        } else if (key == "adapt") {
          cfg.solver.adapt = v;
        } else if (key == "limit_replay") {
          cfg.solver.limit_replay = v;
        } else if (key == "disable_transport") {
          cfg.solver.disable_transport = v;
        } else {
          cfg.solver.compat_clip = v;
        }
      } else if (key == "initial") {
        if (value != "sine_compatible" && value != "bump" && value != "plateau" &&
            value != "zero")
          fail(line_no, "initial must be one of sine_compatible, bump, plateau, zero (got '" +
                            value + "')");
        else
          cfg.initial = value;
      } else {
        fail(line_no, "unknown key '" + key + "' in [solver]");
      }
    } else if (section == "sweep") {
      std::vector<double> grid;
      if (key != "delta_grid" && key != "mu_grid") {
        fail(line_no, "unknown key '" + key + "' in [sweep]");
      } else if (!parse_double_list(value, grid)) {
        fail(line_no, "key '" + key + "': expected a comma-separated list of numbers");
      } else {
        bool decreasing = true;
        for (size_t i = 1; i < grid.size(); ++i) decreasing = decreasing && grid[i] < grid[i - 1];
        bool positive_all = true;
        for (double v : grid) positive_all = positive_all && v > 0.0;
        if (!decreasing)
          fail(line_no, "key '" + key + "': grid must be strictly decreasing");
        else if (!positive_all)
          fail(line_no, "key '" + key + "': grid entries must be positive");
        else if (key == "delta_grid")
          cfg.delta_grid = grid;
        else
          cfg.mu_grid = grid;
      }
    } else if (section == "output") {
      if (key == "directory") {
        if (value.empty())
          fail(line_no, "directory must not be empty");
        else
          cfg.output_dir = value;
      } else if (key == "snapshots") {
        std::vector<double> times;
        if (value.empty()) {
          cfg.snapshot_times.clear();
        } else if (!parse_double_list(value, times)) {
          fail(line_no, "key 'snapshots': expected a comma-separated list of times");
        } else {
          bool ok = true;
          for (double t : times) ok = ok && t >= 0.0;
          if (!ok)
            fail(line_no, "snapshot times must be nonnegative");
          else
            cfg.snapshot_times = times;
        }
      } else {
        fail(line_no, "unknown key '" + key + "' in [output]");
      }
    }
  }

  // cross-field validation
  if (cfg.dimension == 1)
    for (Side side : cfg.gamma0)
      if (side == Side::bottom || side == Side::top)
        fail(0, "gamma0 side '" + to_string(side) + "' is not available in 1D");
  for (double t : cfg.snapshot_times)
    if (t > cfg.solver.t_end) fail(0, "snapshot time " + fmt(t) + " lies beyond t_end");
  try {
    cfg.solver_config().validate();
  } catch (const std::exception& ex) {
    fail(0, ex.what());
  }

  ParseResult result;
  result.errors = std::move(errors);
  if (result.errors.empty()) result.config = std::move(cfg);
  return result;
}

ParseResult parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ParseResult r;
    r.errors.push_back({0, "cannot open config file '" + path + "'"});
    return r;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace fracpm
