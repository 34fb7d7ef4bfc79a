#include "config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "toml.hpp"

#include "tpplab/error.hpp"

namespace tpp::cli {

namespace {

// View of one TOML table that records which keys were read; finish() turns
// every unread key into an error naming its full path.
class Section {
 public:
  Section(const toml::table& table, std::string path) : table_(&table), path_(std::move(path)) {}

  std::string key_path(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  bool has(std::string_view key) const { return table_->contains(key); }
  bool is_string(std::string_view key) const { return has(key) && table_->get(key)->is_string(); }

  template <class T>
  T get(std::string_view key, T fallback) {
    if (!has(key)) return fallback;
    return require<T>(key);
  }

  template <class T>
  T require(std::string_view key) {
    used_.insert(std::string(key));
    const toml::node* node = table_->get(key);
    if (!node) throw ConfigError(key_path(key) + ": required key is missing");
    return convert<T>(*node, key_path(key));
  }

  std::vector<double> numbers(std::string_view key) {
    used_.insert(std::string(key));
    const toml::node* node = table_->get(key);
    if (!node) throw ConfigError(key_path(key) + ": required key is missing");
    return number_array(*node, key_path(key));
  }

  std::optional<Section> table(std::string_view key) {
    if (!has(key)) return std::nullopt;
    used_.insert(std::string(key));
    const toml::table* t = table_->get(key)->as_table();
    if (!t) throw ConfigError(key_path(key) + ": expected a table");
    return Section(*t, key_path(key));
  }

  Section require_table(std::string_view key) {
    auto t = table(key);
    if (!t) throw ConfigError(key_path(key) + ": required table is missing");
    return *t;
  }

  const toml::array* array(std::string_view key) {
    if (!has(key)) return nullptr;
    used_.insert(std::string(key));
    const toml::array* a = table_->get(key)->as_array();
    if (!a) throw ConfigError(key_path(key) + ": expected an array");
    return a;
  }

  void finish() const {
    for (const auto& [k, v] : *table_)
      if (!used_.count(std::string(k.str()))) throw ConfigError(key_path(k.str()) + ": unknown key");
  }

  static std::vector<double> number_array(const toml::node& node, const std::string& path) {
    const toml::array* a = node.as_array();
    if (!a) throw ConfigError(path + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < a->size(); ++i)
      out.push_back(convert<double>(*a->get(i), path + "[" + std::to_string(i) + "]"));
    return out;
  }

  template <class T>
  static T convert(const toml::node& node, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node.value_exact<bool>()) return *v;
      throw ConfigError(path + ": expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node.value_exact<std::string>()) return *v;
      throw ConfigError(path + ": expected a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!node.is_number()) throw ConfigError(path + ": expected a number");
      return static_cast<T>(*node.value<double>());
    } else {
      const auto v = node.value_exact<std::int64_t>();
      if (!v) throw ConfigError(path + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (*v < 0) throw ConfigError(path + ": expected a non-negative integer");
      }
      if (*v < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
          static_cast<std::uint64_t>(*v) > static_cast<std::uint64_t>(std::numeric_limits<T>::max()))
        throw ConfigError(path + ": integer out of range");
      return static_cast<T>(*v);
    }
  }

 private:
  const toml::table* table_;
  std::string path_;
  std::set<std::string> used_;
};

void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path + ": " + what);
}

IntegralForm parse_form(Section& s, IntegralForm fallback) {
  const std::string f = s.get<std::string>("form", fallback == IntegralForm::Direct ? "direct" : "alternative");
  if (f == "direct") return IntegralForm::Direct;
  if (f == "alternative") return IntegralForm::Alternative;
  throw ConfigError(s.key_path("form") + ": expected \"direct\" or \"alternative\"");
}

std::vector<BasisSpec> parse_basis(Section& s, std::string_view key) {
  std::vector<BasisSpec> out;
  const toml::array* a = s.array(key);
  if (!a) return out;
  for (std::size_t i = 0; i < a->size(); ++i) {
    const std::string path = s.key_path(key) + "[" + std::to_string(i) + "]";
    const toml::table* t = a->get(i)->as_table();
    if (!t) throw ConfigError(path + ": expected an inline table");
    Section b(*t, path);
    BasisSpec spec;
    spec.kind = b.require<std::string>("kind");
    if (spec.kind == "legendre") {
      spec.axis = b.get<int>("axis", 0);
      spec.degree = b.require<int>("degree");
      spec.lo = b.require<double>("lo");
      spec.hi = b.require<double>("hi");
      check(spec.degree >= 0, b.key_path("degree"), "must be non-negative");
      check(spec.lo < spec.hi, b.key_path("hi"), "must exceed lo");
    } else if (spec.kind == "gaussian") {
      spec.center = b.numbers("center");
      spec.width = b.require<double>("width");
      check(spec.width > 0.0, b.key_path("width"), "must be positive");
    } else if (spec.kind != "constant" && spec.kind != "exact_w2") {
      throw ConfigError(b.key_path("kind") + ": unknown basis kind \"" + spec.kind + "\"");
    }
    b.finish();
    out.push_back(std::move(spec));
  }
  return out;
}

CommittorSpec parse_committor(Section s) {
  CommittorSpec c;
  c.family = s.require<std::string>("family");
  if (c.family == "exact") {
    s.finish();
    return c;
  }
  if (c.family != "parametric")
    throw ConfigError(s.key_path("family") + ": expected \"exact\" or \"parametric\"");
  c.w0 = parse_basis(s, "w0_basis");
  c.w2 = parse_basis(s, "w2_basis");
  c.enforce = s.get<bool>("enforce_boundary_generator_zero", true);
  const std::size_t k = c.w0.size() + c.w2.size();
  check(k > 0, s.key_path("w2_basis"), "a parametric committor needs at least one basis function");
  if (s.has("theta_init")) {
    if (s.is_string("theta_init")) {
      check(s.require<std::string>("theta_init") == "zeros", s.key_path("theta_init"),
            "expected an array of numbers or \"zeros\"");
    } else {
      c.theta_init = s.numbers("theta_init");
      check(c.theta_init.size() == k, s.key_path("theta_init"),
            "expected " + std::to_string(k) + " entries, one per basis function");
    }
  }
  s.finish();
  return c;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << origin << ": " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(os.str());
  }
  Section top(root, "");
  RunConfig cfg;
  cfg.source = text;
  cfg.epsilon = top.require<double>("epsilon");
  check(cfg.epsilon > 0.0, "epsilon", "must be positive");

  {
    Section p = top.require_table("potential");
    cfg.potential_kind = p.require<std::string>("kind");
    static const toml::table kNoParams;
    auto params = p.table("params");
    Section q = params ? *params : Section(kNoParams, "potential.params");
    if (cfg.potential_kind == "double_well_1d") {
      cfg.dim = 1;
      cfg.barrier_scale = q.get<double>("barrier_scale", 1.0);
    } else if (cfg.potential_kind == "double_well_2d") {
      cfg.dim = 2;
      cfg.barrier_scale = q.get<double>("barrier_scale", 1.0);
      cfg.transverse_stiffness = q.get<double>("transverse_stiffness", 1.0);
    } else if (cfg.potential_kind == "harmonic" || cfg.potential_kind == "flat") {
      cfg.dim = q.get<int>("dim", 1);
      if (cfg.potential_kind == "harmonic") cfg.stiffness = q.get<double>("stiffness", 1.0);
    } else {
      throw ConfigError("potential.kind: unknown potential \"" + cfg.potential_kind + "\"");
    }
    check(cfg.barrier_scale > 0.0, "potential.params.barrier_scale", "must be positive");
    check(cfg.transverse_stiffness > 0.0, "potential.params.transverse_stiffness", "must be positive");
    check(cfg.stiffness > 0.0, "potential.params.stiffness", "must be positive");
    check(cfg.dim >= 1 && cfg.dim <= kMaxDim, "potential.params.dim", "out of range");
    q.finish();
    p.finish();
  }
  {
    Section g = top.require_table("geometry");
    cfg.geometry_kind = g.get<std::string>("kind", cfg.dim == 1 ? "interval" : "planar");
    check(cfg.geometry_kind == "interval" || cfg.geometry_kind == "planar", "geometry.kind",
          "expected \"interval\" or \"planar\"");
    cfg.a_A = g.require<double>("a_A");
    cfg.a_B = g.require<double>("a_B");
    cfg.axis = g.get<int>("axis", 0);
    check(cfg.a_A < cfg.a_B, "geometry.a_B", "require a_A < a_B");
    check(cfg.axis >= 0 && cfg.axis < cfg.dim, "geometry.axis", "out of range");
    g.finish();
  }
  if (auto c = top.table("committor")) cfg.committor = parse_committor(*c);
  if (auto s = top.table("sim")) {
    cfg.sim.dt = s->get<double>("dt", cfg.sim.dt);
    cfg.sim.max_steps = s->get<long>("max_steps", cfg.sim.max_steps);
    cfg.sim.n_paths = s->get<int>("n_paths", cfg.sim.n_paths);
    cfg.sim.seed = s->get<std::uint64_t>("seed", cfg.sim.seed);
    cfg.sim.noise_substeps = s->get<int>("noise_substeps", cfg.sim.noise_substeps);
    cfg.sim.write_trajectories = s->get<bool>("write_trajectories", false);
    cfg.sim.flux_extent = s->get<double>("flux_extent", cfg.sim.flux_extent);
    cfg.sim.flux_nodes = s->get<int>("flux_nodes", cfg.sim.flux_nodes);
    check(cfg.sim.dt > 0.0, "sim.dt", "must be positive");
    check(cfg.sim.max_steps >= 1, "sim.max_steps", "must be at least 1");
    check(cfg.sim.n_paths >= 1, "sim.n_paths", "must be at least 1");
    check(cfg.sim.noise_substeps >= 1, "sim.noise_substeps", "must be at least 1");
    check(cfg.sim.flux_extent > 0.0, "sim.flux_extent", "must be positive");
    check(cfg.sim.flux_nodes >= 513 && cfg.sim.flux_nodes % 2 == 1, "sim.flux_nodes",
          "must be odd and at least 513");
    s->finish();
  }
  if (auto s = top.table("select")) {
    SelectSpec sel;
    sel.tilde = parse_committor(s->require_table("tilde"));
    sel.bar = parse_committor(s->require_table("bar"));
    sel.bar_samples = s->require<int>("bar_samples");
    check(sel.bar_samples >= 1, s->key_path("bar_samples"), "must be at least 1");
    sel.form = parse_form(*s, IntegralForm::Alternative);
    s->finish();
    cfg.select = std::move(sel);
  }
  if (auto s = top.table("train")) {
    TrainSpec t;
    t.n_paths_per_step = s->get<int>("n_paths_per_step", t.n_paths_per_step);
    t.lr0 = s->get<double>("lr0", t.lr0);
    t.lr_decay = s->get<double>("lr_decay", t.lr_decay);
    t.n_steps = s->get<int>("n_steps", t.n_steps);
    t.probe_every = s->get<int>("probe_every", t.probe_every);
    t.probe_paths = s->get<int>("probe_paths", t.probe_paths);
    t.probe_bar_samples = s->get<int>("probe_bar_samples", t.probe_bar_samples);
    t.form = parse_form(*s, IntegralForm::Direct);
    check(t.n_paths_per_step >= 2, "train.n_paths_per_step", "must be at least 2");
    check(t.lr0 >= 0.0, "train.lr0", "must be non-negative");
    check(t.lr_decay > 0.0, "train.lr_decay", "must be positive");
    check(t.n_steps >= 0, "train.n_steps", "must be non-negative");
    check(t.probe_every >= 0, "train.probe_every", "must be non-negative");
    check(t.probe_paths >= 2, "train.probe_paths", "must be at least 2");
    check(t.probe_bar_samples >= 1, "train.probe_bar_samples", "must be at least 1");
    s->finish();
    cfg.train = t;
  }
  if (auto s = top.table("harvest")) {
    HarvestSpec h;
    h.dt = s->get<double>("dt", h.dt);
    h.n_chains = s->get<int>("n_chains", h.n_chains);
    h.segments_per_chain = s->get<int>("segments_per_chain", h.segments_per_chain);
    h.max_steps_per_chain = s->get<long>("max_steps_per_chain", h.max_steps_per_chain);
    h.burn_in_steps = s->get<long>("burn_in_steps", h.burn_in_steps);
    if (s->has("x0")) h.x0 = s->numbers("x0");
    check(h.dt > 0.0, "harvest.dt", "must be positive");
    check(h.n_chains >= 1, "harvest.n_chains", "must be at least 1");
    check(h.segments_per_chain >= 1, "harvest.segments_per_chain", "must be at least 1");
    check(h.max_steps_per_chain >= 1, "harvest.max_steps_per_chain", "must be at least 1");
    check(h.burn_in_steps >= 0, "harvest.burn_in_steps", "must be non-negative");
    check(h.x0.empty() || static_cast<int>(h.x0.size()) == cfg.dim, "harvest.x0",
          "dimension does not match the potential");
    s->finish();
    cfg.harvest = h;
  }
  if (auto s = top.table("oracle")) {
    OracleSpec o;
    o.n_quad = s->get<int>("n_quad", o.n_quad);
    o.grid_points = s->get<int>("grid_points", o.grid_points);
    o.nx = s->get<int>("nx", o.nx);
    o.ny = s->get<int>("ny", o.ny);
    o.y_extent = s->get<double>("y_extent", o.y_extent);
    o.kl_paths = s->get<int>("kl_paths", o.kl_paths);
    check(o.n_quad >= 64, "oracle.n_quad", "must be at least 64");
    check(o.grid_points >= 3, "oracle.grid_points", "must be at least 3");
    check(o.nx >= 32 && o.ny >= 32, "oracle.nx", "nx and ny must be at least 32");
    check(o.y_extent > 0.0, "oracle.y_extent", "must be positive");
    check(o.kl_paths == 0 || o.kl_paths >= 2, "oracle.kl_paths", "must be 0 or at least 2");
    s->finish();
    cfg.oracle = o;
  }
  if (auto s = top.table("output")) {
    cfg.output_dir = s->get<std::string>("dir", "");
    s->finish();
  }
  top.finish();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path);
}

Problem build_problem(const RunConfig& c) {
  const auto potential = [&]() {
    if (c.potential_kind == "double_well_1d") return make_double_well_1d(c.barrier_scale, c.epsilon);
    if (c.potential_kind == "double_well_2d")
      return make_double_well_2d(c.barrier_scale, c.transverse_stiffness, c.epsilon);
    if (c.potential_kind == "harmonic") return make_harmonic(c.dim, c.stiffness, c.epsilon);
    return make_flat(c.dim, c.epsilon);
  }();
  const RegionKind kind = c.geometry_kind == "interval" ? RegionKind::Interval1D : RegionKind::HalfspacePlanar;
  return Problem{potential, RegionGeometry(kind, c.dim, c.a_A, c.a_B, c.axis)};
}

std::unique_ptr<QuadratureCommittor1D> build_axis_oracle(const Problem& problem, int n_quad) {
  if (!problem.potential.separable_along(problem.geometry.axis()))
    throw ConfigError("committor.family: \"exact\" needs a potential separable along geometry.axis");
  return exact_committor_1d(problem.potential, problem.geometry, n_quad);
}

CommittorModel build_committor(const CommittorSpec& spec, const Problem& problem, int n_quad) {
  if (spec.family == "exact") return build_axis_oracle(problem, n_quad)->as_model();
  const RegionGeometry& g = problem.geometry;
  const int dim = g.dim();
  std::unique_ptr<QuadratureCommittor1D> oracle;
  const auto make = [&](const BasisSpec& b) {
    if (b.kind == "constant") return BasisFunction::constant(dim);
    if (b.kind == "legendre") {
      if (b.axis < 0 || b.axis >= dim) throw ConfigError("committor basis: legendre axis out of range");
      return BasisFunction::legendre(dim, b.axis, b.degree, b.lo, b.hi);
    }
    if (b.kind == "gaussian") {
      if (static_cast<int>(b.center.size()) != dim)
        throw ConfigError("committor basis: gaussian center dimension does not match the potential");
      Vec c(dim);
      for (int i = 0; i < dim; ++i) c[i] = b.center[static_cast<std::size_t>(i)];
      return BasisFunction::gaussian(c, b.width);
    }
    if (!oracle) oracle = build_axis_oracle(problem, n_quad);
    return oracle->w2_basis_function();
  };
  Basis w0, w2;
  for (const BasisSpec& b : spec.w0) w0.push_back(make(b));
  for (const BasisSpec& b : spec.w2) w2.push_back(make(b));
  std::vector<double> theta = spec.theta_init;
  const std::size_t k = w0.size() + w2.size();
  if (theta.empty()) theta.assign(k, 0.0);
  if (theta.size() != k)
    throw ConfigError("committor.theta_init: expected " + std::to_string(k) + " entries, got " +
                      std::to_string(theta.size()));
  return CommittorModel(problem.potential, g, std::move(w0), std::move(w2), std::move(theta), spec.enforce);
}

TppOptions tpp_options(const SimSpec& sim) {
  TppOptions o;
  o.dt = sim.dt;
  o.max_steps = sim.max_steps;
  o.noise_substeps = sim.noise_substeps;
  return o;
}

}  // namespace tpp::cli
