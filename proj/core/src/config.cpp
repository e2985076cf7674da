#include "ethlab/config.hpp"

#include <cmath>
#include <functional>
#include <set>

#include "ethlab/errors.hpp"
#include "ethlab/io.hpp"

namespace ethlab {

using nlohmann::json;

namespace {

// Strict view over one JSON object: every key must be consumed.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + " must be an object");
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError("unknown key '" + path(it.key()) + "'");
    }
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ValidationError(path(key) + " must be a number");
      out = v->get<double>();
    }
  }
  void number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_number()) {
        out = v->get<double>();
      } else {
        throw ValidationError(path(key) + " must be a number or null");
      }
    }
  }
  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ValidationError(path(key) + " must be an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->is_number_unsigned()) {
          out = static_cast<Int>(v->get<std::uint64_t>());
          return;
        }
        if (v->get<std::int64_t>() < 0) throw ValidationError(path(key) + " must be nonnegative");
        out = static_cast<Int>(v->get<std::int64_t>());
      } else {
        out = static_cast<Int>(v->get<std::int64_t>());
      }
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ValidationError(path(key) + " must be a boolean");
      out = v->get<bool>();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ValidationError(path(key) + " must be a string");
      out = v->get<std::string>();
    }
  }
  void object(const std::string& key, const std::function<void(Reader&)>& body) {
    if (const json* v = find(key)) {
      Reader sub(*v, path(key));
      body(sub);
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <class E>
E lookup(const std::string& name, const std::vector<std::pair<std::string, E>>& table, const std::string& where) {
  for (const auto& [k, v] : table) {
    if (k == name) return v;
  }
  std::string options;
  for (const auto& [k, v] : table) options += (options.empty() ? "" : ", ") + k;
  throw ValidationError(where + " must be one of: " + options);
}

template <class E>
std::string name_of(E value, const std::vector<std::pair<std::string, E>>& table) {
  for (const auto& [k, v] : table) {
    if (v == value) return k;
  }
  return "unknown";
}

const std::vector<std::pair<std::string, Boundary>> kBoundaries = {{"open", Boundary::open},
                                                                   {"periodic", Boundary::periodic}};
const std::vector<std::pair<std::string, DosShape>> kShapes = {
    {"flat", DosShape::flat}, {"gaussian", DosShape::gaussian}, {"semicircle", DosShape::semicircle}};
const std::vector<std::pair<std::string, EnvelopeForm>> kForms = {{"exp_decay", EnvelopeForm::exp_decay},
                                                                  {"constant", EnvelopeForm::constant}};

void read_grid(Reader& r, const std::string& key, GridSpec& g) {
  r.object(key, [&](Reader& s) {
    s.number("start", g.start);
    s.number("stop", g.stop);
    s.integer("count", g.count);
  });
}

json grid_json(const GridSpec& g) { return {{"start", g.start}, {"stop", g.stop}, {"count", g.count}}; }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

std::vector<double> GridSpec::points() const {
  require(count >= 1, "grid count must be >= 1");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = start;
    return out;
  }
  const double step = (stop - start) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = start + step * static_cast<double>(i);
  out.back() = stop;
  return out;
}

void RunConfig::validate() const {
  require(slack >= 1.0, "slack must be >= 1");
  require(model.kind == "ising" || model.kind == "synth", "model.kind must be ising or synth");
  if (model.kind == "ising") {
    require(model.ising.sites >= 2 && model.ising.sites <= kMaxSites,
            "model.ising.sites must lie in [2, " + std::to_string(kMaxSites) + "]");
  } else {
    require(model.synth.dim >= 16 && model.synth.dim <= kMaxDenseDim, "model.synth.dim out of range");
    require(model.synth.bandwidth > 0.0, "model.synth.bandwidth must be > 0");
    require(model.synth.entropy == "log_dim" || model.synth.entropy == "kernel",
            "model.synth.entropy must be log_dim or kernel");
    require(model.synth.decay_rate >= 0.0, "model.synth.decay_rate must be >= 0");
  }
  const auto& ob = observable.kind;
  require(ob == "pauli" || ob == "identity" || ob == "synthetic",
          "observable.kind must be pauli, identity or synthetic");
  if (ob == "pauli") require(model.kind == "ising", "a pauli observable needs the ising model");
  if (ob == "synthetic") require(model.kind == "synth", "a synthetic observable needs the synth model");
  if (ob == "pauli") {
    require(observable.word.size() == observable.support.size(),
            "observable.word needs one letter per support site");
  }
  require(!thermal.betas.empty(), "thermal.betas must not be empty");
  for (const double b : thermal.betas) require(std::isfinite(b) && b >= 0.0, "thermal.betas must be finite and >= 0");
  require(extract.slice_fraction > 0.0 && extract.omega_fraction > 0.0, "extract fractions must be > 0");
  require(extract.omega_bins >= 1, "extract.omega_bins must be >= 1");
  require(extract.profile_fraction > 0.0, "extract.profile_fraction must be > 0");
  require(code.logical_qubits >= 0 && code.logical_qubits <= 10, "code.logical_qubits out of range");
  require(code.locality >= 0, "code.locality must be >= 0");
  require(code.window_half_width > 0.0, "code.window_half_width must be > 0");
  require(code.selection == "nearest" || code.selection == "random", "code.selection must be nearest or random");
  require(dynamics.time.count >= 1 && dynamics.omega.count >= 2, "dynamics grids too small");
  require(dynamics.sigma_omega > 0.0, "dynamics.sigma_omega must be > 0");
  require(dynamics.fit_hi > dynamics.fit_lo, "dynamics fit window must have positive width");
  require(dynamics.epsilon_reg >= 0.0, "dynamics.epsilon_reg must be >= 0");
  require(dynamics.state_width > 0.0, "dynamics.state_width must be > 0");
  const auto& ls = bounds.lambda_source;
  require(ls == "automatic" || ls == "fitted" || ls == "envelope" || ls == "chaos-bound",
          "bounds.lambda_source must be automatic, fitted, envelope or chaos-bound");
  require(sweep.is_object(), "sweep must be an object");
  for (auto it = sweep.begin(); it != sweep.end(); ++it) {
    require(it.value().is_array() && !it.value().empty(), "sweep." + it.key() + " must be a nonempty list");
  }
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  {
    Reader r(j, "");
    r.integer("seed", c.seed);
    r.string("output_dir", c.output_dir);
    r.number("slack", c.slack);
    r.object("model", [&](Reader& m) {
      m.string("kind", c.model.kind);
      m.object("ising", [&](Reader& s) {
        auto& p = c.model.ising;
        s.integer("sites", p.sites);
        s.number("coupling", p.coupling);
        s.number("transverse_field", p.transverse_field);
        s.number("longitudinal_field", p.longitudinal_field);
        s.number("edge_field", p.edge_field);
        std::string b = name_of(p.boundary, kBoundaries);
        s.string("boundary", b);
        p.boundary = lookup(b, kBoundaries, "model.ising.boundary");
      });
      m.object("synth", [&](Reader& s) {
        auto& p = c.model.synth;
        s.integer("dim", p.dim);
        std::string shape = name_of(p.shape, kShapes);
        s.string("shape", shape);
        p.shape = lookup(shape, kShapes, "model.synth.shape");
        s.number("bandwidth", p.bandwidth);
        s.string("entropy", p.entropy);
        std::string form = name_of(p.envelope, kForms);
        s.string("envelope", form);
        p.envelope = lookup(form, kForms, "model.synth.envelope");
        s.number("decay_rate", p.decay_rate);
        s.number("amplitude", p.amplitude);
        s.number("diagonal_slope", p.diagonal_slope);
      });
    });
    r.object("observable", [&](Reader& o) {
      o.string("kind", c.observable.kind);
      o.string("word", c.observable.word);
      if (const json* v = o.find("support")) {
        if (!v->is_array()) throw ValidationError("observable.support must be a list of integers");
        c.observable.support.clear();
        for (const auto& e : *v) {
          if (!e.is_number_integer()) throw ValidationError("observable.support must be a list of integers");
          c.observable.support.push_back(e.get<int>());
        }
      }
      o.boolean("traceless", c.observable.traceless);
    });
    r.object("thermal", [&](Reader& t) {
      if (const json* v = t.find("betas")) {
        if (!v->is_array()) throw ValidationError("thermal.betas must be a list of numbers");
        c.thermal.betas.clear();
        for (const auto& e : *v) {
          if (!e.is_number()) throw ValidationError("thermal.betas must be a list of numbers");
          c.thermal.betas.push_back(e.get<double>());
        }
      }
    });
    r.object("extract", [&](Reader& e) {
      e.number("entropy_width", c.extract.entropy_width);
      e.number("slice_fraction", c.extract.slice_fraction);
      e.number("omega_fraction", c.extract.omega_fraction);
      e.integer("omega_bins", c.extract.omega_bins);
      e.integer("min_count", c.extract.min_count);
      e.number("fit_omega_min", c.extract.fit_omega_min);
      e.number("fit_omega_max", c.extract.fit_omega_max);
      e.number("profile_fraction", c.extract.profile_fraction);
    });
    r.object("code", [&](Reader& k) {
      k.integer("logical_qubits", c.code.logical_qubits);
      k.integer("locality", c.code.locality);
      k.number("window_center", c.code.window_center);
      k.number("window_half_width", c.code.window_half_width);
      k.string("selection", c.code.selection);
    });
    r.object("dynamics", [&](Reader& d) {
      read_grid(d, "time", c.dynamics.time);
      read_grid(d, "omega", c.dynamics.omega);
      d.number("sigma_omega", c.dynamics.sigma_omega);
      d.number("fit_lo", c.dynamics.fit_lo);
      d.number("fit_hi", c.dynamics.fit_hi);
      d.number("epsilon_reg", c.dynamics.epsilon_reg);
      d.number("fdt_threshold", c.dynamics.fdt_threshold);
      d.boolean("otoc", c.dynamics.otoc);
      d.number("state_width", c.dynamics.state_width);
    });
    r.object("bounds", [&](Reader& b) { b.string("lambda_source", c.bounds.lambda_source); });
    if (const json* v = r.find("sweep")) {
      if (!v->is_object()) throw ValidationError("sweep must be an object");
      c.sweep = *v;
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(io::read_json(path)); }

json to_json(const RunConfig& c) {
  const auto& is = c.model.ising;
  const auto& sy = c.model.synth;
  return {
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"slack", c.slack},
      {"model",
       {{"kind", c.model.kind},
        {"ising",
         {{"sites", is.sites},
          {"coupling", is.coupling},
          {"transverse_field", is.transverse_field},
          {"longitudinal_field", is.longitudinal_field},
          {"edge_field", is.edge_field},
          {"boundary", name_of(is.boundary, kBoundaries)}}},
        {"synth",
         {{"dim", sy.dim},
          {"shape", name_of(sy.shape, kShapes)},
          {"bandwidth", sy.bandwidth},
          {"entropy", sy.entropy},
          {"envelope", name_of(sy.envelope, kForms)},
          {"decay_rate", sy.decay_rate},
          {"amplitude", sy.amplitude},
          {"diagonal_slope", sy.diagonal_slope}}}}},
      {"observable",
       {{"kind", c.observable.kind},
        {"word", c.observable.word},
        {"support", c.observable.support},
        {"traceless", c.observable.traceless}}},
      {"thermal", {{"betas", c.thermal.betas}}},
      {"extract",
       {{"entropy_width", optional_json(c.extract.entropy_width)},
        {"slice_fraction", c.extract.slice_fraction},
        {"omega_fraction", c.extract.omega_fraction},
        {"omega_bins", c.extract.omega_bins},
        {"min_count", c.extract.min_count},
        {"fit_omega_min", optional_json(c.extract.fit_omega_min)},
        {"fit_omega_max", optional_json(c.extract.fit_omega_max)},
        {"profile_fraction", c.extract.profile_fraction}}},
      {"code",
       {{"logical_qubits", c.code.logical_qubits},
        {"locality", c.code.locality},
        {"window_center", optional_json(c.code.window_center)},
        {"window_half_width", c.code.window_half_width},
        {"selection", c.code.selection}}},
      {"dynamics",
       {{"time", grid_json(c.dynamics.time)},
        {"omega", grid_json(c.dynamics.omega)},
        {"sigma_omega", c.dynamics.sigma_omega},
        {"fit_lo", c.dynamics.fit_lo},
        {"fit_hi", c.dynamics.fit_hi},
        {"epsilon_reg", c.dynamics.epsilon_reg},
        {"fdt_threshold", c.dynamics.fdt_threshold},
        {"otoc", c.dynamics.otoc},
        {"state_width", c.dynamics.state_width}}},
      {"bounds", {{"lambda_source", c.bounds.lambda_source}}},
      {"sweep", c.sweep},
  };
}

std::string canonical_dump(const RunConfig& config) { return to_json(config).dump(); }

std::string config_hash(const RunConfig& config) { return io::sha256_hex(canonical_dump(config)); }

std::string SweepPoint::key() const {
  std::string out;
  for (const auto& [path, value] : assignment) {
    if (!out.empty()) out += ';';
    out += path + "=" + value.dump();
  }
  return out;
}

void set_path(json& j, const std::string& dotted, const json& value) {
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ValidationError("malformed sweep path '" + dotted + "'");
    if (!node->is_object() || !node->contains(part)) {
      throw ValidationError("sweep path '" + dotted + "' does not name a config field");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

std::vector<SweepPoint> expand_sweep(const RunConfig& config) {
  if (!config.sweep.is_object() || config.sweep.empty()) throw ValidationError("sweep grid is empty");
  std::vector<std::pair<std::string, json>> axes;
  for (auto it = config.sweep.begin(); it != config.sweep.end(); ++it) {
    if (!it.value().is_array() || it.value().empty()) {
      throw ValidationError("sweep." + it.key() + " must be a nonempty list");
    }
    if (it.key() == "sweep" || it.key().rfind("sweep.", 0) == 0) throw ValidationError("cannot sweep the sweep block");
    axes.emplace_back(it.key(), it.value());
  }
  json base = to_json(config);
  base["sweep"] = json::object();

  std::size_t total = 1;
  for (const auto& [k, v] : axes) total *= v.size();
  std::vector<SweepPoint> points;
  points.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    SweepPoint p;
    p.index = idx;
    json j = base;
    std::size_t rem = idx;
    // Last axis varies fastest.
    std::vector<std::size_t> digits(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      digits[a] = rem % axes[a].second.size();
      rem /= axes[a].second.size();
    }
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const json& value = axes[a].second[digits[a]];
      set_path(j, axes[a].first, value);
      p.assignment.emplace_back(axes[a].first, value);
    }
    try {
      p.config = parse_config(j);
    } catch (const ValidationError& e) {
      p.error = e.what();
    }
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace ethlab
