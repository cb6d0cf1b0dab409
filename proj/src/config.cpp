#include "gpc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gpc/ground_state.hpp"

namespace gpc {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "invalid configuration:";
  for (const auto& p : problems) out += "\n  " + p;
  return out;
}

// Walks a JSON document, collecting every problem with its JSON-pointer path
// instead of stopping at the first one.
class Reader {
 public:
  std::vector<std::string> problems;

  void fail(const std::string& path, const std::string& what) {
    problems.push_back((path.empty() ? std::string("/") : path) + ": " + what);
  }

  bool object(const nlohmann::json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (const auto& [key, value] : j.items())
      if (!allowed.count(key)) fail(path + "/" + key, "unknown key");
    return true;
  }

  void number(const nlohmann::json& j, const std::string& key, const std::string& path, double& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number()) return fail(path + "/" + key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) return fail(path + "/" + key, "must be finite");
    out = x;
  }

  void integer(const nlohmann::json& j, const std::string& key, const std::string& path, int& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) return fail(path + "/" + key, "expected an integer");
    out = v.get<int>();
  }

  void string(const nlohmann::json& j, const std::string& key, const std::string& path, std::string& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_string()) return fail(path + "/" + key, "expected a string");
    out = v.get<std::string>();
  }

  void numbers(const nlohmann::json& j, const std::string& key, const std::string& path,
               std::vector<double>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array()) return fail(path + "/" + key, "expected an array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        fail(path + "/" + key + "/" + std::to_string(i), "expected a finite number");
        continue;
      }
      out.push_back(v[i].get<double>());
    }
  }

  void require(const nlohmann::json& j, const std::string& key, const std::string& path) {
    if (j.is_object() && !j.contains(key)) fail(path + "/" + key, "missing required key");
  }

  PotentialSpec potential(const nlohmann::json& j, const std::string& path) {
    PotentialSpec p;
    if (!object(j, path, {"kind", "strength", "scale", "offset", "slope", "amplitude", "center", "width",
                          "centers", "x", "values"}))
      return p;
    require(j, "kind", path);
    string(j, "kind", path, p.kind);
    number(j, "strength", path, p.strength);
    number(j, "scale", path, p.scale);
    number(j, "offset", path, p.offset);
    number(j, "slope", path, p.slope);
    number(j, "amplitude", path, p.amplitude);
    number(j, "center", path, p.center);
    number(j, "width", path, p.width);
    numbers(j, "centers", path, p.centers);
    numbers(j, "x", path, p.table_x);
    numbers(j, "values", path, p.table_values);

    static const std::map<std::string, std::set<std::string>> fields = {
        {"harmonic", {"kind", "strength", "scale"}},
        {"linear-offset", {"kind", "offset", "slope"}},
        {"gaussian-bump", {"kind", "offset", "amplitude", "center", "width"}},
        {"two-bump-complement", {"kind", "centers", "width"}},
        {"table", {"kind", "x", "values"}},
    };
    const auto it = fields.find(p.kind);
    if (it == fields.end()) {
      fail(path + "/kind", "unknown potential '" + p.kind +
                               "' (expected harmonic, linear-offset, gaussian-bump, two-bump-complement, table)");
      return p;
    }
    for (const auto& [key, value] : j.items())
      if (!it->second.count(key)) fail(path + "/" + key, "not a parameter of '" + p.kind + "'");
    if (p.kind == "harmonic" && !(p.scale > 0)) fail(path + "/scale", "must be > 0");
    if ((p.kind == "gaussian-bump" || p.kind == "two-bump-complement") && !(p.width > 0))
      fail(path + "/width", "must be > 0");
    if (p.kind == "two-bump-complement") {
      require(j, "centers", path);
      if (j.contains("centers") && p.centers.empty()) fail(path + "/centers", "needs at least one center");
    }
    if (p.kind == "table") {
      require(j, "x", path);
      require(j, "values", path);
      if (p.table_x.size() != p.table_values.size())
        fail(path + "/values", "length must match x");
      else if (p.table_x.size() < 2)
        fail(path + "/x", "needs at least two samples");
      for (std::size_t i = 1; i < p.table_x.size(); ++i)
        if (!(p.table_x[i] > p.table_x[i - 1])) {
          fail(path + "/x/" + std::to_string(i), "must be strictly increasing");
          break;
        }
    }
    return p;
  }

  StateSpec state(const nlohmann::json& j, const std::string& path) {
    StateSpec s;
    if (!object(j, path, {"kind", "center", "width", "momentum"})) return s;
    require(j, "kind", path);
    string(j, "kind", path, s.kind);
    number(j, "center", path, s.center);
    number(j, "width", path, s.width);
    number(j, "momentum", path, s.momentum);
    if (s.kind == "ground-state") {
      for (const auto& [key, value] : j.items())
        if (key != "kind") fail(path + "/" + key, "not a parameter of 'ground-state'");
    } else if (s.kind == "gaussian") {
      if (!(s.width > 0)) fail(path + "/width", "must be > 0");
    } else {
      fail(path + "/kind", "unknown state '" + s.kind + "' (expected ground-state, gaussian)");
    }
    return s;
  }
};

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - xs.begin()), 1, xs.size() - 1);
  const double t = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
  return ys[hi - 1] + t * (ys[hi] - ys[hi - 1]);
}

nlohmann::json potential_json(const PotentialSpec& p) {
  nlohmann::json j{{"kind", p.kind}};
  if (p.kind == "harmonic") {
    j["strength"] = p.strength;
    j["scale"] = p.scale;
  } else if (p.kind == "linear-offset") {
    j["offset"] = p.offset;
    j["slope"] = p.slope;
  } else if (p.kind == "gaussian-bump") {
    j["offset"] = p.offset;
    j["amplitude"] = p.amplitude;
    j["center"] = p.center;
    j["width"] = p.width;
  } else if (p.kind == "two-bump-complement") {
    j["centers"] = p.centers;
    j["width"] = p.width;
  } else {
    j["x"] = p.table_x;
    j["values"] = p.table_values;
  }
  return j;
}

nlohmann::json state_json(const StateSpec& s) {
  nlohmann::json j{{"kind", s.kind}};
  if (s.kind == "gaussian") {
    j["center"] = s.center;
    j["width"] = s.width;
    j["momentum"] = s.momentum;
  }
  return j;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

const char* to_string(OptimizerKind kind) { return kind == OptimizerKind::gradient ? "gradient" : "newton"; }

RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  Reader r;
  RunConfig c;
  if (!r.object(doc, "", {"grid", "time", "lambda", "sigma", "trap", "control_potential", "observable", "gamma1",
                          "gamma2", "alpha0", "initial_state", "initial_control", "optimizer", "output"}))
    throw ConfigError(r.problems);

  for (const char* key : {"grid", "time", "trap", "control_potential", "observable", "gamma2"})
    r.require(doc, key, "");

  if (doc.contains("grid") && r.object(doc["grid"], "/grid", {"half_width", "points"})) {
    r.number(doc["grid"], "half_width", "/grid", c.half_width);
    r.integer(doc["grid"], "points", "/grid", c.points);
    if (!(c.half_width > 0)) r.fail("/grid/half_width", "must be > 0");
    if (c.points < 2 || c.points % 2 != 0) r.fail("/grid/points", "must be an even integer >= 2");
  }
  if (doc.contains("time") && r.object(doc["time"], "/time", {"horizon", "steps"})) {
    r.number(doc["time"], "horizon", "/time", c.horizon);
    r.integer(doc["time"], "steps", "/time", c.steps);
    if (!(c.horizon > 0)) r.fail("/time/horizon", "must be > 0");
    if (c.steps < 1) r.fail("/time/steps", "must be >= 1");
  }
  r.number(doc, "lambda", "", c.lambda);
  r.integer(doc, "sigma", "", c.sigma);
  if (c.sigma < 1) r.fail("/sigma", "must be a positive integer");
  r.number(doc, "gamma1", "", c.gamma1);
  r.number(doc, "gamma2", "", c.gamma2);
  r.number(doc, "alpha0", "", c.alpha0);
  if (!(c.gamma1 >= 0)) r.fail("/gamma1", "must be >= 0");
  if (!(c.gamma2 > 0)) r.fail("/gamma2", "must be > 0");

  if (doc.contains("trap")) c.trap = r.potential(doc["trap"], "/trap");
  if (doc.contains("control_potential"))
    c.control_potential = r.potential(doc["control_potential"], "/control_potential");
  if (doc.contains("observable")) {
    const auto& o = doc["observable"];
    if (r.object(o, "/observable", {"kind", "profile", "target"})) {
      r.require(o, "kind", "/observable");
      r.string(o, "kind", "/observable", c.observable.kind);
      if (c.observable.kind == "multiplication") {
        r.require(o, "profile", "/observable");
        if (o.contains("target")) r.fail("/observable/target", "not used by a multiplication observable");
        if (o.contains("profile")) c.observable.profile = r.potential(o["profile"], "/observable/profile");
      } else if (c.observable.kind == "projection") {
        r.require(o, "target", "/observable");
        if (o.contains("profile")) r.fail("/observable/profile", "not used by a projection observable");
        if (o.contains("target")) c.observable.target = r.state(o["target"], "/observable/target");
      } else {
        r.fail("/observable/kind", "unknown observable '" + c.observable.kind + "' (expected multiplication, projection)");
      }
    }
  }
  if (doc.contains("initial_state")) c.initial_state = r.state(doc["initial_state"], "/initial_state");
  if (doc.contains("initial_control") && r.object(doc["initial_control"], "/initial_control", {"csv"})) {
    std::string csv;
    r.require(doc["initial_control"], "csv", "/initial_control");
    r.string(doc["initial_control"], "csv", "/initial_control", csv);
    if (!csv.empty()) {
      std::filesystem::path p(csv);
      c.initial_control_csv = p.is_absolute() ? p : base_dir / p;
    }
  }
  if (doc.contains("optimizer")) {
    const auto& o = doc["optimizer"];
    if (r.object(o, "/optimizer", {"method", "tolerance", "max_iterations", "armijo_mu", "min_step",
                                    "minres_tolerance", "minres_max_iterations", "gradient_model"})) {
      std::string method = "newton";
      r.string(o, "method", "/optimizer", method);
      if (method == "gradient") {
        c.optimizer = OptimizerKind::gradient;
        c.settings.max_iterations = 20000;
      } else if (method == "newton") {
        c.optimizer = OptimizerKind::newton;
      } else {
        r.fail("/optimizer/method", "expected 'gradient' or 'newton'");
      }
      r.number(o, "tolerance", "/optimizer", c.settings.tolerance);
      r.integer(o, "max_iterations", "/optimizer", c.settings.max_iterations);
      r.number(o, "armijo_mu", "/optimizer", c.settings.armijo_mu);
      r.number(o, "min_step", "/optimizer", c.settings.min_step);
      r.number(o, "minres_tolerance", "/optimizer", c.settings.minres_tolerance);
      r.integer(o, "minres_max_iterations", "/optimizer", c.settings.minres_max_iterations);
      std::string model = "discrete";
      r.string(o, "gradient_model", "/optimizer", model);
      if (model == "continuous")
        c.settings.gradient_model = GradientModel::continuous;
      else if (model != "discrete")
        r.fail("/optimizer/gradient_model", "expected 'continuous' or 'discrete'");
      if (!(c.settings.tolerance >= 0)) r.fail("/optimizer/tolerance", "must be >= 0");
      if (c.settings.max_iterations < 0) r.fail("/optimizer/max_iterations", "must be >= 0");
      if (!(c.settings.armijo_mu > 0 && c.settings.armijo_mu < 1)) r.fail("/optimizer/armijo_mu", "must lie in (0, 1)");
      if (!(c.settings.min_step > 0 && c.settings.min_step <= 1)) r.fail("/optimizer/min_step", "must lie in (0, 1]");
      if (!(c.settings.minres_tolerance > 0)) r.fail("/optimizer/minres_tolerance", "must be > 0");
      if (c.settings.minres_max_iterations < 1) r.fail("/optimizer/minres_max_iterations", "must be >= 1");
    }
  }
  if (doc.contains("output") && r.object(doc["output"], "/output", {"directory", "snapshot_times"})) {
    std::string dir;
    r.string(doc["output"], "directory", "/output", dir);
    if (!dir.empty()) {
      std::filesystem::path p(dir);
      c.output.directory = p.is_absolute() ? p : base_dir / p;
    } else if (!doc["output"].contains("directory")) {
      c.output.directory = base_dir / "out";
    }
    r.numbers(doc["output"], "snapshot_times", "/output", c.output.snapshot_times);
    for (std::size_t i = 0; i < c.output.snapshot_times.size(); ++i) {
      const double t = c.output.snapshot_times[i];
      if (t < 0 || t > c.horizon) r.fail("/output/snapshot_times/" + std::to_string(i), "must lie in [0, horizon]");
    }
  } else if (!doc.contains("output")) {
    c.output.directory = base_dir / "out";
  }

  if (!r.problems.empty()) throw ConfigError(r.problems);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot open file"});
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  return parse_config(doc, path.parent_path());
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["grid"] = {{"half_width", c.half_width}, {"points", c.points}};
  j["time"] = {{"horizon", c.horizon}, {"steps", c.steps}};
  j["lambda"] = c.lambda;
  j["sigma"] = c.sigma;
  j["trap"] = potential_json(c.trap);
  j["control_potential"] = potential_json(c.control_potential);
  if (c.observable.kind == "multiplication")
    j["observable"] = {{"kind", "multiplication"}, {"profile", potential_json(c.observable.profile)}};
  else
    j["observable"] = {{"kind", "projection"}, {"target", state_json(c.observable.target)}};
  j["gamma1"] = c.gamma1;
  j["gamma2"] = c.gamma2;
  j["alpha0"] = c.alpha0;
  j["initial_state"] = state_json(c.initial_state);
  if (c.initial_control_csv) j["initial_control"] = {{"csv", c.initial_control_csv->string()}};
  j["optimizer"] = {{"method", to_string(c.optimizer)},
                    {"tolerance", c.settings.tolerance},
                    {"max_iterations", c.settings.max_iterations},
                    {"armijo_mu", c.settings.armijo_mu},
                    {"min_step", c.settings.min_step},
                    {"minres_tolerance", c.settings.minres_tolerance},
                    {"minres_max_iterations", c.settings.minres_max_iterations},
                    {"gradient_model",
                     c.settings.gradient_model == GradientModel::discrete ? "discrete" : "continuous"}};
  j["output"] = {{"directory", c.output.directory.string()}, {"snapshot_times", c.output.snapshot_times}};
  return j;
}

RealVector<double> sample_potential(const PotentialSpec& p, const SpatialGrid<double>& grid) {
  const auto& x = grid.nodes();
  RealVector<double> out(x.size());
  if (p.kind == "harmonic") {
    out = (p.strength * (x.array() / p.scale).square()).matrix();
  } else if (p.kind == "linear-offset") {
    out = (p.offset + p.slope * x.array()).matrix();
  } else if (p.kind == "gaussian-bump") {
    out = (p.offset + p.amplitude * (-(x.array() - p.center).square() / (p.width * p.width)).exp()).matrix();
  } else if (p.kind == "two-bump-complement") {
    out.setOnes();
    for (double c : p.centers) out.array() -= (-(x.array() - c).square() / (p.width * p.width)).exp();
  } else if (p.kind == "table") {
    if (p.table_x.empty() || x[0] < p.table_x.front() || x[x.size() - 1] > p.table_x.back())
      throw ConfigError({"table potential does not cover the grid [" + std::to_string(x[0]) + ", " +
                         std::to_string(x[x.size() - 1]) + "]"});
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = interpolate(p.table_x, p.table_values, x[i]);
  } else {
    throw ConfigError({"unknown potential '" + p.kind + "'"});
  }
  return out;
}

ComplexVector<double> build_state(const StateSpec& s, const SpatialGrid<double>& grid,
                                  const RealVector<double>& trap) {
  if (s.kind == "ground-state") return ground_state(grid, trap).state;
  if (s.kind != "gaussian") throw ConfigError({"unknown state '" + s.kind + "'"});
  const auto& x = grid.nodes();
  ComplexVector<double> psi(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = (x[i] - s.center) / s.width;
    psi[i] = std::polar(std::exp(-0.5 * d * d), s.momentum * x[i]);
  }
  const double m = mass(grid, psi);
  if (!(m > 0)) throw ConfigError({"gaussian state vanishes on the grid"});
  return psi / std::sqrt(m);
}

ProblemSpec<double> build_problem(const RunConfig& c) {
  auto grid = make_grid(c.half_width, static_cast<Eigen::Index>(c.points));
  ProblemSpec<double> spec{grid, TimeGrid<double>(c.horizon, c.steps)};
  spec.lambda = c.lambda;
  spec.sigma = c.sigma;
  spec.trap = sample_potential(c.trap, *grid);
  spec.control = sample_potential(c.control_potential, *grid);
  if (c.observable.kind == "multiplication")
    spec.observable = MultiplicationObservable<double>{sample_potential(c.observable.profile, *grid)};
  else
    spec.observable = ProjectionObservable<double>{build_state(c.observable.target, *grid, spec.trap)};
  spec.gamma1 = c.gamma1;
  spec.gamma2 = c.gamma2;
  spec.alpha0 = c.alpha0;
  spec.psi0 = build_state(c.initial_state, *grid, spec.trap);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError({e.what()});
  }
  return spec;
}

Control<double> read_control_csv(const std::filesystem::path& path, const TimeGrid<double>& time) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot open control file"});
  std::string line;
  if (!std::getline(in, line)) throw ConfigError({path.string() + ": empty control file"});
  std::vector<double> ts, as;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
      throw ConfigError({path.string() + ":" + std::to_string(row) + ": expected two columns t,alpha"});
    try {
      ts.push_back(std::stod(a));
      as.push_back(std::stod(b));
    } catch (const std::exception&) {
      throw ConfigError({path.string() + ":" + std::to_string(row) + ": not a number"});
    }
  }
  if (static_cast<Eigen::Index>(as.size()) != time.nodes())
    throw ConfigError({path.string() + ": expected " + std::to_string(time.nodes()) + " rows, found " +
                       std::to_string(as.size())});
  Control<double> alpha(time, 0.0);
  for (Eigen::Index m = 0; m < time.nodes(); ++m) {
    if (std::abs(ts[m] - time.node(m)) > 1e-9 * std::max(1.0, time.horizon()))
      throw ConfigError({path.string() + ": row " + std::to_string(m + 2) + " time " + std::to_string(ts[m]) +
                         " does not match the time grid"});
    alpha.values[m] = as[m];
  }
  return alpha;
}

Control<double> initial_control(const RunConfig& c, const ProblemSpec<double>& spec) {
  if (!c.initial_control_csv) return spec.initial_guess();
  Control<double> alpha = read_control_csv(*c.initial_control_csv, spec.time);
  if (std::abs(alpha.values[0] - spec.alpha0) > 0)
    throw ConfigError({"/initial_control: control must start at alpha0 = " + std::to_string(spec.alpha0)});
  return alpha;
}

}  // namespace gpc
