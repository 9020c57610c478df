#include "relisim/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "relisim/error.hpp"
#include "relisim/expression.hpp"

namespace relisim {

using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240607;

// ---------------------------------------------------------------------------
// Field access with path-qualified errors

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string join(const std::string& path, std::size_t index) { return path + "[" + std::to_string(index) + "]"; }

const ordered_json& require(const ordered_json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(join(path, key), "missing required field");
    return *it;
}

const ordered_json* optional_field(const ordered_json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double as_number(const ordered_json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
    return d;
}

std::uint64_t as_unsigned(const ordered_json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(path, "expected a non-negative integer");
}

std::string as_string(const ordered_json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    return v.get<std::string>();
}

Vector as_vector(const ordered_json& v, const std::string& path) {
    if (v.is_number()) return {as_number(v, path)};
    if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array of numbers");
    Vector out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], join(path, i)));
    return out;
}

std::map<std::string, double> as_params(const ordered_json* v, const std::string& path) {
    std::map<std::string, double> out;
    if (!v) return out;
    if (!v->is_object()) throw ConfigError(path, "expected an object of named numbers");
    for (auto it = v->begin(); it != v->end(); ++it) out[it.key()] = as_number(it.value(), join(path, it.key()));
    return out;
}

ordered_json params_json(const std::map<std::string, double>& params) {
    ordered_json out = ordered_json::object();
    for (const auto& [k, v] : params) out[k] = v;
    return out;
}

template <class F>
auto with_path(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(path + " (" + e.where() + ")", e.what());
    } catch (const DomainError& e) {
        throw ConfigError(path, e.what());
    }
}

Expression compile(const ordered_json& v, const std::string& path, const Expression::Symbols& symbols) {
    if (v.is_number()) return Expression::parse(format_real(as_number(v, path)), symbols);
    const auto text = as_string(v, path);
    try {
        return Expression::parse(text, symbols);
    } catch (const ConfigError& e) {
        throw ConfigError(path + " " + e.where(), e.what());
    }
}

// ---------------------------------------------------------------------------
// Models

struct BuiltModel {
    std::shared_ptr<SystemModel> model;
    ordered_json resolved;
};

double param(std::map<std::string, double>& params, const std::string& name, double fallback) {
    auto [it, inserted] = params.try_emplace(name, fallback);
    return it->second;
}

void check_known(const std::map<std::string, double>& params, std::initializer_list<const char*> known,
                 const std::string& path) {
    for (const auto& [k, v] : params) {
        bool ok = false;
        for (const char* name : known) ok = ok || k == name;
        if (!ok) throw ConfigError(join(path, k), "unknown parameter for this model");
    }
}

BuiltModel builtin_model(const std::string& name, std::map<std::string, double> params, std::size_t n,
                         const std::string& path) {
    auto model = std::make_shared<SystemModel>();
    model->name = name;
    model->n = 1;
    model->m = 1;
    const std::string ppath = join(path, "params");
    if (name == "brownian") {
        check_known(params, {"mu", "sigma"}, ppath);
        const double mu = param(params, "mu", 0.0);
        const double sigma = param(params, "sigma", 1.0);
        model->drift = [mu](const HistoryBuffer&, double, std::span<double> out) { out[0] = mu; };
        model->diffusion = [sigma](const HistoryBuffer&, double, std::span<double> out) { out[0] = sigma; };
        model->max_delay = 0.0;
    } else if (name == "ou") {
        check_known(params, {"theta", "mean", "sigma"}, ppath);
        const double theta = param(params, "theta", 1.0);
        const double mean = param(params, "mean", 0.0);
        const double sigma = param(params, "sigma", 1.0);
        model->drift = [theta, mean](const HistoryBuffer& x, double, std::span<double> out) {
            out[0] = theta * (mean - x.head()[0]);
        };
        model->diffusion = [sigma](const HistoryBuffer&, double, std::span<double> out) { out[0] = sigma; };
        model->max_delay = 0.0;
    } else if (name == "linear-delay") {
        check_known(params, {"a", "b", "tau", "sigma"}, ppath);
        const double a = param(params, "a", -1.0);
        const double b = param(params, "b", 0.5);
        const double tau = param(params, "tau", 1.0);
        const double sigma = param(params, "sigma", 1.0);
        if (!(tau >= 0.0)) throw ConfigError(join(ppath, "tau"), "delay must be >= 0");
        model->drift = [a, b, tau](const HistoryBuffer& x, double, std::span<double> out) {
            out[0] = a * x.head()[0] + b * x.component(-tau, 0);
        };
        model->diffusion = [sigma](const HistoryBuffer&, double, std::span<double> out) { out[0] = sigma; };
        model->max_delay = tau;
    } else if (name == "fading-memory") {
        // b(x_t) = -a x(t) + c * int_{-window}^{0} exp(lambda theta) x(t + theta) d theta, as a grid sum.
        check_known(params, {"a", "c", "lambda", "window", "sigma"}, ppath);
        const double a = param(params, "a", 1.0);
        const double c = param(params, "c", 0.5);
        const double lambda = param(params, "lambda", 2.0);
        if (!(lambda > 0.0)) throw ConfigError(join(ppath, "lambda"), "kernel rate must be positive");
        const double window = param(params, "window", 5.0 / lambda);
        const double sigma = param(params, "sigma", 1.0);
        if (!(window > 0.0)) throw ConfigError(join(ppath, "window"), "kernel window must be positive");
        model->drift = [a, c, lambda, window](const HistoryBuffer& x, double, std::span<double> out) {
            const double h = x.step();
            const auto points = static_cast<std::size_t>(std::floor(window / h + 1e-9));
            double memory = 0.0;
            for (std::size_t j = 1; j <= points; ++j) {
                const double theta = -static_cast<double>(j) * h;
                memory += std::exp(lambda * theta) * x.component(theta, 0);
            }
            out[0] = -a * x.head()[0] + c * memory * h;
        };
        model->diffusion = [sigma](const HistoryBuffer&, double, std::span<double> out) { out[0] = sigma; };
        model->max_delay = window;
    } else if (name == "zero") {
        check_known(params, {}, ppath);
        model->n = n;
        model->m = n;
        model->drift = [](const HistoryBuffer&, double, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
        model->diffusion = [](const HistoryBuffer&, double, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
        };
        model->max_delay = 0.0;
    } else {
        throw ConfigError(join(path, "builtin"),
                          "unknown model '" + name + "' (brownian, ou, linear-delay, fading-memory, zero)");
    }
    ordered_json resolved;
    resolved["builtin"] = name;
    resolved["params"] = params_json(params);
    if (name == "zero") resolved["n"] = n;
    return {model, resolved};
}

BuiltModel expression_model(const ordered_json& spec, const std::map<std::string, double>& params,
                            const std::string& path) {
    const auto n = static_cast<std::size_t>(as_unsigned(require(spec, "n", path), join(path, "n")));
    const auto m = static_cast<std::size_t>(as_unsigned(require(spec, "m", path), join(path, "m")));
    if (n == 0 || m == 0) throw ConfigError(path, "dimensions n and m must be positive");
    const Expression::Symbols symbols{n, params, true};

    const auto& drift_json = require(spec, "drift", path);
    const std::string dpath = join(path, "drift");
    if (!drift_json.is_array() || drift_json.size() != n) throw ConfigError(dpath, "expected n expressions");
    std::vector<Expression> drift;
    for (std::size_t i = 0; i < n; ++i) drift.push_back(compile(drift_json[i], join(dpath, i), symbols));

    const auto& diff_json = require(spec, "diffusion", path);
    const std::string spath = join(path, "diffusion");
    if (!diff_json.is_array() || diff_json.size() != n) throw ConfigError(spath, "expected n rows of m expressions");
    std::vector<Expression> diffusion;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = diff_json[i];
        if (!row.is_array() || row.size() != m) throw ConfigError(join(spath, i), "expected m expressions");
        for (std::size_t j = 0; j < m; ++j) diffusion.push_back(compile(row[j], join(join(spath, i), j), symbols));
    }

    auto model = std::make_shared<SystemModel>();
    model->name = "expression";
    model->n = n;
    model->m = m;
    double max_delay = 0.0;
    for (const auto& e : drift) max_delay = std::max(max_delay, e.max_delay());
    for (const auto& e : diffusion) max_delay = std::max(max_delay, e.max_delay());
    model->max_delay = max_delay;
    model->drift = [drift](const HistoryBuffer& x, double t, std::span<double> out) {
        for (std::size_t i = 0; i < drift.size(); ++i) out[i] = drift[i].eval(x, t);
    };
    model->diffusion = [diffusion](const HistoryBuffer& x, double t, std::span<double> out) {
        for (std::size_t i = 0; i < diffusion.size(); ++i) out[i] = diffusion[i].eval(x, t);
    };

    ordered_json resolved;
    resolved["n"] = n;
    resolved["m"] = m;
    ordered_json d = ordered_json::array();
    for (const auto& e : drift) d.push_back(e.source());
    resolved["drift"] = d;
    ordered_json s = ordered_json::array();
    for (std::size_t i = 0; i < n; ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t j = 0; j < m; ++j) row.push_back(diffusion[i * m + j].source());
        s.push_back(row);
    }
    resolved["diffusion"] = s;
    return {model, resolved};
}

// ---------------------------------------------------------------------------
// Sections

InitialSegment parse_initial(const ordered_json& spec, std::size_t n, const std::string& path, ordered_json& resolved) {
    const std::string kind = spec.contains("kind") ? as_string(spec["kind"], join(path, "kind")) : "constant";
    const Vector value = as_vector(require(spec, "value", path), join(path, "value"));
    if (value.size() != n) throw ConfigError(join(path, "value"), "dimension differs from the model state dimension");
    resolved["kind"] = kind;
    resolved["value"] = value;
    return with_path(path, [&] {
        if (kind == "constant") return InitialSegment::constant(value);
        if (kind == "exponential") {
            const double rate = as_number(require(spec, "decay_rate", path), join(path, "decay_rate"));
            Vector asymptote(n, 0.0);
            if (auto* a = optional_field(spec, "asymptote", path)) asymptote = as_vector(*a, join(path, "asymptote"));
            resolved["decay_rate"] = rate;
            resolved["asymptote"] = asymptote;
            return InitialSegment::exponential(value, rate, asymptote);
        }
        if (kind == "tabulated") {
            const auto& table = require(spec, "table", path);
            const std::string tpath = join(path, "table");
            if (!table.is_array()) throw ConfigError(tpath, "expected an array of knots");
            std::vector<InitialSegment::Knot> knots;
            ordered_json rtable = ordered_json::array();
            for (std::size_t i = 0; i < table.size(); ++i) {
                const std::string kpath = join(tpath, i);
                InitialSegment::Knot knot{as_number(require(table[i], "theta", kpath), join(kpath, "theta")),
                                          as_vector(require(table[i], "value", kpath), join(kpath, "value"))};
                rtable.push_back({{"theta", knot.theta}, {"value", knot.value}});
                knots.push_back(std::move(knot));
            }
            resolved["table"] = rtable;
            return InitialSegment::tabulated(value, std::move(knots));
        }
        throw ConfigError(join(path, "kind"), "unknown initial segment kind '" + kind + "'");
    });
}

IntegratorConfig parse_integrator(const ordered_json& spec, const std::string& path, ordered_json& resolved) {
    IntegratorConfig cfg;
    cfg.step = as_number(require(spec, "step", path), join(path, "step"));
    cfg.t_end = as_number(require(spec, "t_end", path), join(path, "t_end"));
    if (auto* s = optional_field(spec, "record_stride", path))
        cfg.record_stride = static_cast<std::size_t>(as_unsigned(*s, join(path, "record_stride")));
    if (auto* h = optional_field(spec, "memory_horizon", path))
        cfg.memory_horizon = as_number(*h, join(path, "memory_horizon"));
    with_path(path, [&] {
        cfg.validate();
        return 0;
    });
    resolved["step"] = cfg.step;
    resolved["t_end"] = cfg.t_end;
    resolved["record_stride"] = cfg.record_stride;
    resolved["memory_horizon"] = cfg.memory_horizon ? ordered_json(*cfg.memory_horizon) : ordered_json(nullptr);
    return cfg;
}

std::shared_ptr<SystemTopology> parse_topology(const ordered_json& spec, std::size_t n,
                                               const std::map<std::string, double>& params, const std::string& path,
                                               ordered_json& resolved) {
    auto topo = std::make_shared<SystemTopology>();
    const std::string mode = spec.contains("mode") ? as_string(spec["mode"], join(path, "mode")) : "single";
    if (mode == "single") topo->mode = Topology::single;
    else if (mode == "series") topo->mode = Topology::series;
    else if (mode == "parallel") topo->mode = Topology::parallel;
    else throw ConfigError(join(path, "mode"), "expected single, series or parallel");

    const auto& comps = require(spec, "components", path);
    const std::string cpath = join(path, "components");
    if (!comps.is_array() || comps.empty()) throw ConfigError(cpath, "expected a non-empty array");
    const Expression::Symbols symbols{n, params, false};
    ordered_json rcomps = ordered_json::array();
    for (std::size_t k = 0; k < comps.size(); ++k) {
        const std::string kpath = join(cpath, k);
        const auto expr = compile(require(comps[k], "g", kpath), join(kpath, "g"), symbols);
        LimitState ls;
        ls.g_star = as_number(require(comps[k], "g_star", kpath), join(kpath, "g_star"));
        ls.label = comps[k].contains("label") ? as_string(comps[k]["label"], join(kpath, "label"))
                                              : "g" + std::to_string(k);
        ls.g = [expr](std::span<const double> x, double t) { return expr.eval(x, t); };
        rcomps.push_back({{"label", ls.label}, {"g", expr.source()}, {"g_star", ls.g_star}});
        topo->components.push_back(std::move(ls));
    }
    with_path(path, [&] {
        topo->validate();
        return 0;
    });
    resolved["mode"] = mode;
    resolved["components"] = rcomps;
    return topo;
}

void attach_control(const ordered_json* spec, SystemModel& model, std::shared_ptr<const SystemTopology> topology,
                    const std::map<std::string, double>& params, const std::string& path, ordered_json& resolved) {
    if (!spec) {
        resolved = nullptr;
        return;
    }
    const std::string type = as_string(require(*spec, "type", path), join(path, "type"));
    const std::size_t m = model.m;
    resolved["type"] = type;
    if (type == "none") return;
    if (type == "constant") {
        const Vector value = as_vector(require(*spec, "value", path), join(path, "value"));
        if (value.size() != m) throw ConfigError(join(path, "value"), "control must have the noise dimension m");
        resolved["value"] = value;
        model.control = [value](const HistoryBuffer&, double, std::span<double> out) {
            std::copy(value.begin(), value.end(), out.begin());
        };
    } else if (type == "linear-pull") {
        const double gain = as_number(require(*spec, "gain", path), join(path, "gain"));
        std::size_t component = 0;
        if (auto* c = optional_field(*spec, "component", path))
            component = static_cast<std::size_t>(as_unsigned(*c, join(path, "component")));
        if (component >= topology->components.size())
            throw ConfigError(join(path, "component"), "no such limit-state component");
        Vector direction(m, 1.0);
        if (auto* d = optional_field(*spec, "direction", path)) direction = as_vector(*d, join(path, "direction"));
        if (direction.size() != m) throw ConfigError(join(path, "direction"), "direction must have dimension m");
        resolved["gain"] = gain;
        resolved["component"] = component;
        resolved["direction"] = direction;
        model.control = [gain, component, direction, topology](const HistoryBuffer& x, double t, std::span<double> out) {
            const auto& ls = topology->components[component];
            const double pull = gain * (ls.g_star - ls.g(x.head(), t));
            for (std::size_t j = 0; j < out.size(); ++j) out[j] = pull * direction[j];
        };
    } else if (type == "expression") {
        const auto& u = require(*spec, "u", path);
        const std::string upath = join(path, "u");
        if (!u.is_array() || u.size() != m) throw ConfigError(upath, "expected m expressions");
        const Expression::Symbols symbols{model.n, params, true};
        std::vector<Expression> exprs;
        ordered_json sources = ordered_json::array();
        for (std::size_t j = 0; j < m; ++j) {
            exprs.push_back(compile(u[j], join(upath, j), symbols));
            sources.push_back(exprs.back().source());
            model.max_delay = std::max(model.max_delay, exprs.back().max_delay());
        }
        resolved["u"] = sources;
        model.control = [exprs](const HistoryBuffer& x, double t, std::span<double> out) {
            for (std::size_t j = 0; j < exprs.size(); ++j) out[j] = exprs[j].eval(x, t);
        };
    } else {
        throw ConfigError(join(path, "type"), "expected none, constant, linear-pull or expression");
    }
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string line_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

}  // namespace

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string ExperimentConfig::manifest_id() const {
    ordered_json hashed = resolved;
    hashed.erase("output");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(hashed.dump())));
    return buf;
}

ExperimentConfig parse_config(const ordered_json& doc, const Overrides& overrides) {
    if (!doc.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
    ExperimentConfig cfg;
    ordered_json& r = cfg.resolved;
    cfg.name = doc.contains("name") ? as_string(doc["name"], "name") : "experiment";
    r["name"] = cfg.name;

    const auto params = as_params(optional_field(doc, "params", ""), "params");
    r["params"] = params_json(params);

    // model
    const auto& model_spec = require(doc, "model", "");
    BuiltModel built;
    if (auto* b = optional_field(model_spec, "builtin", "model")) {
        std::size_t n = 1;
        if (auto* nn = optional_field(model_spec, "n", "model"))
            n = static_cast<std::size_t>(as_unsigned(*nn, "model.n"));
        if (n == 0) throw ConfigError("model.n", "dimension must be positive");
        built = builtin_model(as_string(*b, "model.builtin"), as_params(optional_field(model_spec, "params", "model"),
                                                                          "model.params"),
                              n, "model");
    } else {
        built = expression_model(model_spec, params, "model");
    }
    cfg.model = built.model;
    r["model"] = built.resolved;

    ordered_json initial_r;
    cfg.initial = parse_initial(require(doc, "initial", ""), cfg.model->n, "initial", initial_r);
    r["initial"] = initial_r;

    ordered_json integ_r;
    cfg.integrator = parse_integrator(require(doc, "integrator", ""), "integrator", integ_r);
    r["integrator"] = integ_r;

    ordered_json topo_r;
    cfg.topology = parse_topology(require(doc, "topology", ""), cfg.model->n, params, "topology", topo_r);
    r["topology"] = topo_r;

    ordered_json control_r = ordered_json::object();
    attach_control(optional_field(doc, "control", ""), *cfg.model, cfg.topology, params, "control", control_r);
    r["control"] = control_r;

    // campaign
    const ordered_json empty = ordered_json::object();
    const auto* camp_ptr = optional_field(doc, "campaign", "");
    const ordered_json& camp = camp_ptr ? *camp_ptr : empty;
    std::string mode = camp.contains("mode") ? as_string(camp["mode"], "campaign.mode") : "crude";
    if (overrides.mode) mode = *overrides.mode;
    if (mode == "crude") cfg.campaigns = {EstimatorMode::crude};
    else if (mode == "importance") cfg.campaigns = {EstimatorMode::importance};
    else if (mode == "both") cfg.campaigns = {EstimatorMode::crude, EstimatorMode::importance};
    else if (mode == "none") cfg.campaigns = {};
    else throw ConfigError("campaign.mode", "expected crude, importance, both or none");

    std::size_t samples = 1000;
    if (auto* s = optional_field(camp, "samples", "campaign"))
        samples = static_cast<std::size_t>(as_unsigned(*s, "campaign.samples"));
    cfg.crude_samples = samples;
    cfg.importance_samples = samples;
    if (auto* s = optional_field(camp, "crude_samples", "campaign"))
        cfg.crude_samples = static_cast<std::size_t>(as_unsigned(*s, "campaign.crude_samples"));
    if (auto* s = optional_field(camp, "importance_samples", "campaign"))
        cfg.importance_samples = static_cast<std::size_t>(as_unsigned(*s, "campaign.importance_samples"));
    if (overrides.samples) cfg.crude_samples = cfg.importance_samples = samples = *overrides.samples;
    if (cfg.crude_samples == 0 || cfg.importance_samples == 0)
        throw ConfigError("campaign.samples", "sample count must be >= 1");

    cfg.seed = kDefaultSeed;
    if (auto* s = optional_field(camp, "seed", "campaign")) cfg.seed = as_unsigned(*s, "campaign.seed");
    if (overrides.seed) cfg.seed = *overrides.seed;

    const std::string report_as = camp.contains("report_as") ? as_string(camp["report_as"], "campaign.report_as")
                                                              : "failure";
    if (report_as == "failure") cfg.report_as = Quantity::failure;
    else if (report_as == "reliability") cfg.report_as = Quantity::reliability;
    else throw ConfigError("campaign.report_as", "expected failure or reliability");

    for (auto m : cfg.campaigns) {
        if (m == EstimatorMode::importance && !cfg.model->has_control())
            throw ConfigError("control", "importance campaign requested but no control is configured");
    }
    r["campaign"] = {{"mode", mode},
                     {"crude_samples", cfg.crude_samples},
                     {"importance_samples", cfg.importance_samples},
                     {"seed", cfg.seed},
                     {"report_as", report_as}};

    // output
    const auto* out_ptr = optional_field(doc, "output", "");
    const ordered_json& out = out_ptr ? *out_ptr : empty;
    std::string dir = out.contains("dir") ? as_string(out["dir"], "output.dir") : "relisim-out";
    if (overrides.out_dir) dir = *overrides.out_dir;
    cfg.out_dir = dir;
    ordered_json formats = ordered_json::array();
    if (auto* f = optional_field(out, "formats", "output")) {
        if (!f->is_array()) throw ConfigError("output.formats", "expected an array");
        for (std::size_t i = 0; i < f->size(); ++i) {
            const auto name = as_string((*f)[i], join("output.formats", i));
            if (name == "csv") cfg.formats.push_back(ReportFormat::csv);
            else if (name == "jsonl" || name == "json-lines") cfg.formats.push_back(ReportFormat::jsonl);
            else throw ConfigError(join("output.formats", i), "expected csv or jsonl");
            formats.push_back(cfg.formats.back() == ReportFormat::csv ? "csv" : "jsonl");
        }
    } else {
        cfg.formats = {ReportFormat::csv, ReportFormat::jsonl};
        formats = {"csv", "jsonl"};
    }
    r["output"] = {{"dir", dir}, {"formats", formats}};
    return cfg;
}

ExperimentConfig parse_config(const std::string& text, const Overrides& overrides) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(line_of(text, e.byte == 0 ? 0 : e.byte - 1), "invalid JSON");
    }
    return parse_config(doc, overrides);
}

ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string(), "cannot open configuration file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

RunArtifact run_experiment(const ExperimentConfig& config, unsigned workers) {
    const auto started = std::chrono::steady_clock::now();
    RunArtifact artifact;
    artifact.manifest_id = config.manifest_id();
    artifact.manifest = {{"manifest_id", artifact.manifest_id},
                         {"seed", config.seed},
                         {"rng", {{"generator", "philox4x32-10"}, {"normal_conversion_version", GaussianStream::kConversionVersion}}},
                         {"config", config.resolved}};
    for (auto mode : config.campaigns) {
        CampaignSettings settings;
        settings.integrator = config.integrator;
        settings.mode = mode;
        settings.samples = mode == EstimatorMode::crude ? config.crude_samples : config.importance_samples;
        settings.seed = config.seed;
        settings.workers = workers;
        settings.report_as = config.report_as;
        try {
            artifact.runs.push_back({mode, run_campaign(*config.model, *config.initial, *config.topology, settings)});
        } catch (const DivergenceAbort& e) {
            artifact.aborted = std::string(to_string(mode)) + ": " + e.what();
            break;
        }
    }
    artifact.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return artifact;
}

std::string report_csv_header() {
    return "manifest_id,campaign,topology,report_as,estimate,failure,failure_clamped,reliability,samples,failures,"
           "excluded,variance,std_error,ci95_low,ci95_high";
}

std::string report_csv_row(const std::string& id, const EstimateReport& r) {
    std::string row = id + "," + to_string(r.mode) + "," + to_string(r.topology) + "," + to_string(r.report_as);
    for (double v : {r.estimate(), r.failure, r.failure_clamped, r.reliability}) row += "," + format_real(v);
    row += "," + std::to_string(r.sample_count) + "," + std::to_string(r.failures) + "," + std::to_string(r.excluded);
    for (double v : {r.variance, r.std_error, r.ci_low(), r.ci_high()}) row += "," + format_real(v);
    return row;
}

std::string report_json_line(const std::string& id, const EstimateReport& r) {
    std::string s = "{\"manifest_id\":\"" + id + "\",\"campaign\":\"" + to_string(r.mode) + "\",\"topology\":\"" +
                    to_string(r.topology) + "\",\"report_as\":\"" + to_string(r.report_as) + "\"";
    auto real = [&](const char* key, double v) { s += std::string(",\"") + key + "\":" + format_real(v); };
    auto count = [&](const char* key, std::size_t v) { s += std::string(",\"") + key + "\":" + std::to_string(v); };
    real("estimate", r.estimate());
    real("failure", r.failure);
    real("failure_clamped", r.failure_clamped);
    real("reliability", r.reliability);
    count("samples", r.sample_count);
    count("failures", r.failures);
    count("excluded", r.excluded);
    real("variance", r.variance);
    real("std_error", r.std_error);
    real("ci95_low", r.ci_low());
    real("ci95_high", r.ci_high());
    return s + "}";
}

std::vector<std::filesystem::path> emit_report(const RunArtifact& artifact, const std::vector<ReportFormat>& formats,
                                               const std::filesystem::path& dir) {
    ensure_dir(dir);
    std::vector<std::filesystem::path> written;
    written.push_back(dir / "manifest.json");
    write_file(written.back(), artifact.manifest.dump(2) + "\n");
    if (artifact.runs.empty()) return written;
    for (auto format : formats) {
        std::string body;
        if (format == ReportFormat::csv) {
            body = report_csv_header() + "\n";
            for (const auto& run : artifact.runs) body += report_csv_row(artifact.manifest_id, run.result.report) + "\n";
            written.push_back(dir / "reports.csv");
        } else {
            for (const auto& run : artifact.runs) body += report_json_line(artifact.manifest_id, run.result.report) + "\n";
            written.push_back(dir / "reports.jsonl");
        }
        write_file(written.back(), body);
    }
    return written;
}

std::filesystem::path emit_diagnostics(const RunArtifact& artifact, const std::filesystem::path& dir) {
    ensure_dir(dir);
    ordered_json d;
    d["manifest_id"] = artifact.manifest_id;
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    d["timestamp"] = stamp;
    d["wall_seconds"] = artifact.wall_seconds;
    d["aborted"] = artifact.aborted ? ordered_json(*artifact.aborted) : ordered_json(nullptr);
    ordered_json camps = ordered_json::array();
    for (const auto& run : artifact.runs) {
        ordered_json c;
        c["campaign"] = to_string(run.mode);
        c["samples"] = run.result.report.sample_count;
        c["excluded"] = run.result.report.excluded;
        c["wall_seconds"] = run.result.wall_seconds;
        if (run.result.martingale) {
            const auto& mc = *run.result.martingale;
            c["martingale"] = {{"mean", mc.mean}, {"std_error", mc.std_error}, {"z", mc.z}, {"pass", mc.pass},
                               {"diagnostic", mc.diagnostic}};
        }
        camps.push_back(c);
    }
    d["campaigns"] = camps;
    const auto path = dir / "diagnostics.json";
    write_file(path, d.dump(2) + "\n");
    return path;
}

std::vector<std::filesystem::path> dump_trajectories(const ExperimentConfig& config, std::size_t count,
                                                     const std::filesystem::path& dir) {
    ensure_dir(dir);
    std::vector<std::filesystem::path> written;
    const std::size_t steps = config.integrator.steps();
    for (auto mode : config.campaigns) {
        const bool controlled = mode == EstimatorMode::importance;
        const std::size_t available = controlled ? config.importance_samples : config.crude_samples;
        std::string body = "trajectory,t";
        for (std::size_t i = 0; i < config.model->n; ++i) body += ",x" + std::to_string(i);
        body += ",diverged,weight_final\n";
        for (std::size_t j = 0; j < std::min(count, available); ++j) {
            const auto noise = gaussian_increments({config.seed, j, config.model->m, config.integrator.step}, steps);
            const auto traj = simulate_trajectory(*config.model, config.integrator, *config.initial, noise, controlled);
            const std::string weight = traj.weight_final ? format_real(*traj.weight_final) : "";
            for (std::size_t k = 0; k < traj.times.size(); ++k) {
                body += std::to_string(j) + "," + format_real(traj.times[k]);
                for (double v : traj.states[k]) body += "," + format_real(v);
                body += std::string(",") + (traj.diverged ? "1" : "0") + "," + weight + "\n";
            }
        }
        written.push_back(dir / (std::string("trajectories_") + to_string(mode) + ".csv"));
        write_file(written.back(), body);
    }
    return written;
}

}  // namespace relisim
