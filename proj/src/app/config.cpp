#include "hdgflow/app/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hdgflow::app {

using nlohmann::json;

namespace {

template <class E, std::size_t N>
E parse_enum(const json& v, const std::string& key, const std::pair<const char*, E> (&names)[N])
{
  if (!v.is_string())
    throw std::invalid_argument("config: '" + key + "' must be a string");
  const std::string s = v.get<std::string>();
  for (const auto& [name, value] : names)
    if (s == name)
      return value;
  throw std::invalid_argument("config: unknown value '" + s + "' for '" + key + "'");
}

constexpr std::pair<const char*, Experiment> kExperiments[] = {
    {"example1", Experiment::Example1}, {"example2", Experiment::Example2}, {"custom", Experiment::Custom}};
constexpr std::pair<const char*, KappaSelector> kKappas[] = {{"kappa1", KappaSelector::Kappa1},
                                                             {"kappa2", KappaSelector::Kappa2},
                                                             {"random", KappaSelector::Random},
                                                             {"file", KappaSelector::File},
                                                             {"unit", KappaSelector::Unit}};
constexpr std::pair<const char*, InitialGuess> kGuesses[] = {{"stokes_darcy", InitialGuess::StokesDarcy},
                                                             {"zero", InitialGuess::Zero}};

/// Reads the members of one JSON object, rejecting keys nobody asked for.
class ObjectReader {
public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path))
  {
    if (!obj_.is_object())
      throw std::invalid_argument("config: '" + label() + "' must be an object");
  }

  const json* find(const std::string& key)
  {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out)
  {
    if (const json* v = find(key)) {
      if (!v->is_number())
        throw std::invalid_argument("config: '" + qualified(key) + "' must be a number");
      out = v->get<double>();
    }
  }

  void number(const std::string& key, std::optional<double>& out)
  {
    if (find(key) && !obj_.at(key).is_null()) {
      double x = 0.0;
      number(key, x);
      out = x;
    }
  }

  void integer(const std::string& key, int& out)
  {
    if (const json* v = find(key)) {
      if (!v->is_number_integer())
        throw std::invalid_argument("config: '" + qualified(key) + "' must be an integer");
      out = v->get<int>();
    }
  }

  void integer(const std::string& key, std::optional<int>& out)
  {
    if (find(key) && !obj_.at(key).is_null()) {
      int x = 0;
      integer(key, x);
      out = x;
    }
  }

  void boolean(const std::string& key, bool& out)
  {
    if (const json* v = find(key)) {
      if (!v->is_boolean())
        throw std::invalid_argument("config: '" + qualified(key) + "' must be true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out)
  {
    if (const json* v = find(key)) {
      if (!v->is_string())
        throw std::invalid_argument("config: '" + qualified(key) + "' must be a string");
      out = v->get<std::string>();
    }
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const
  {
    for (const auto& [key, value] : obj_.items())
      if (!seen_.contains(key))
        throw std::invalid_argument("config: unknown key '" + qualified(key) + "'");
  }

private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class T>
void put_optional(json& j, const char* key, const std::optional<T>& v)
{
  if (v)
    j[key] = *v;
}

} // namespace

const char* to_string(Experiment e)
{
  for (const auto& [name, value] : kExperiments)
    if (value == e)
      return name;
  return "?";
}

const char* to_string(KappaSelector k)
{
  for (const auto& [name, value] : kKappas)
    if (value == k)
      return name;
  return "?";
}

RunConfig default_config(Experiment e)
{
  RunConfig c;
  c.experiment = e;
  switch (e) {
  case Experiment::Example1:
    break;
  case Experiment::Example2:
    c.k = 2;
    c.mu = 1.0;
    c.kappa = KappaSelector::Random;
    c.n = 64;
    c.levels = 1;
    break;
  case Experiment::Custom:
    c.mu = 1.0;
    c.kappa = KappaSelector::Unit;
    c.n = 2;
    c.levels = 3;
    break;
  }
  return c;
}

void RunConfig::validate() const
{
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (k < 1 || k > 3)
    fail("'k' must be 1, 2 or 3");
  if (beta && !(*beta > 0.0))
    fail("'beta' must be positive");
  if (!(mu > 0.0))
    fail("'mu' must be positive");
  if (!(alpha > 0.0))
    fail("'alpha' must be positive");
  if (n < 1)
    fail("'mesh.n' must be >= 1");
  switch (experiment) {
  case Experiment::Example1:
    if (kappa != KappaSelector::Kappa1 && kappa != KappaSelector::Kappa2)
      fail("example1 takes kappa 'kappa1' or 'kappa2'");
    break;
  case Experiment::Example2:
    if (kappa != KappaSelector::Random && kappa != KappaSelector::File)
      fail("example2 takes kappa 'random' or 'file'");
    break;
  case Experiment::Custom:
    if (kappa != KappaSelector::Unit)
      fail("custom takes kappa 'unit'");
    break;
  }
  if (experiment == Experiment::Example2 ? levels != 1 : levels < 3)
    fail(experiment == Experiment::Example2 ? "'mesh.levels' must be 1 for example2"
                                            : "'mesh.levels' must be >= 3 for a convergence study");
  if (kappa == KappaSelector::Random && !seed)
    fail("'seed' is required when kappa is 'random'");
  if (kappa == KappaSelector::File && kappa_file.empty())
    fail("'kappa_file' is required when kappa is 'file'");
  if (output_dir.empty())
    fail("'output.dir' must not be empty");
  try {
    solver.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

RunConfig parse_config(const std::string& text)
{
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  ObjectReader root(doc, "");
  Experiment experiment = Experiment::Example1;
  if (const json* v = root.find("experiment"))
    experiment = parse_enum(*v, "experiment", kExperiments);
  RunConfig c = default_config(experiment);

  root.integer("k", c.k);
  root.number("beta", c.beta);
  root.number("mu", c.mu);
  root.number("alpha", c.alpha);
  root.boolean("convection", c.convection);
  if (const json* v = root.find("kappa"))
    c.kappa = parse_enum(*v, "kappa", kKappas);
  root.string("kappa_file", c.kappa_file);
  if (const json* v = root.find("seed"); v && !v->is_null()) {
    if (!v->is_number_unsigned())
      throw std::invalid_argument("config: 'seed' must be a non-negative integer");
    c.seed = v->get<std::uint64_t>();
  }

  if (const json* v = root.find("mesh")) {
    ObjectReader m(*v, "mesh");
    m.integer("n", c.n);
    m.integer("levels", c.levels);
    m.finish();
  }

  if (const json* v = root.find("solver")) {
    ObjectReader s(*v, "solver");
    s.number("picard_tol", c.solver.picard_tol);
    s.integer("picard_max_iter", c.solver.picard_max_iter);
    s.boolean("condense", c.solver.condense);
    if (const json* g = s.find("initial_guess"))
      c.solver.initial_guess = parse_enum(*g, "solver.initial_guess", kGuesses);
    s.number("relaxation", c.solver.relaxation);
    s.integer("anderson_depth", c.solver.anderson_depth);
    int workers = static_cast<int>(c.solver.workers);
    s.integer("workers", workers);
    if (workers < 1)
      throw std::invalid_argument("config: 'solver.workers' must be >= 1");
    c.solver.workers = static_cast<unsigned>(workers);
    s.finish();
  }

  if (const json* v = root.find("thresholds")) {
    ObjectReader t(*v, "thresholds");
    t.number("min_rate_E_u", c.thresholds.min_rate_E_u);
    t.number("min_rate_L2_u", c.thresholds.min_rate_L2_u);
    t.number("min_rate_L2_p", c.thresholds.min_rate_L2_p);
    t.number("max_conservation", c.thresholds.max_conservation);
    t.number("max_flux_balance", c.thresholds.max_flux_balance);
    t.integer("max_picard_iterations", c.thresholds.max_picard_iterations);
    t.finish();
  }

  if (const json* v = root.find("output")) {
    ObjectReader o(*v, "output");
    o.string("dir", c.output_dir);
    o.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize_config(const RunConfig& c)
{
  json j;
  j["experiment"] = to_string(c.experiment);
  j["k"] = c.k;
  put_optional(j, "beta", c.beta);
  j["mu"] = c.mu;
  j["alpha"] = c.alpha;
  j["convection"] = c.convection;
  j["kappa"] = to_string(c.kappa);
  if (!c.kappa_file.empty())
    j["kappa_file"] = c.kappa_file;
  put_optional(j, "seed", c.seed);
  j["mesh"] = {{"n", c.n}, {"levels", c.levels}};
  j["solver"] = {{"picard_tol", c.solver.picard_tol},
                 {"picard_max_iter", c.solver.picard_max_iter},
                 {"condense", c.solver.condense},
                 {"initial_guess", c.solver.initial_guess == InitialGuess::Zero ? "zero" : "stokes_darcy"},
                 {"relaxation", c.solver.relaxation},
                 {"anderson_depth", c.solver.anderson_depth},
                 {"workers", c.solver.workers}};
  json t = json::object();
  put_optional(t, "min_rate_E_u", c.thresholds.min_rate_E_u);
  put_optional(t, "min_rate_L2_u", c.thresholds.min_rate_L2_u);
  put_optional(t, "min_rate_L2_p", c.thresholds.min_rate_L2_p);
  put_optional(t, "max_conservation", c.thresholds.max_conservation);
  put_optional(t, "max_flux_balance", c.thresholds.max_flux_balance);
  put_optional(t, "max_picard_iterations", c.thresholds.max_picard_iterations);
  j["thresholds"] = t;
  j["output"] = {{"dir", c.output_dir}};
  return j.dump(2) + "\n";
}

void apply_environment(RunConfig& config)
{
  if (const char* dir = std::getenv("HDGFLOW_OUTPUT_DIR"); dir && *dir)
    config.output_dir = dir;
}

} // namespace hdgflow::app
