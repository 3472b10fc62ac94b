#include "cellflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cellflow/density.hpp"

namespace cellflow {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double plain_number(const std::string& t) {
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0')
        throw param_error("cannot parse number from '" + t + "'");
    return v;
}

// "kind k1=v1 k2=v2 ..." -> (kind, map)
std::pair<std::string, std::map<std::string, std::string>> parse_spec(const std::string& spec) {
    auto toks = split_ws(spec);
    if (toks.empty()) throw param_error("empty spec string");
    std::map<std::string, std::string> args;
    for (size_t i = 1; i < toks.size(); ++i) {
        const auto eq = toks[i].find('=');
        if (eq == std::string::npos)
            throw param_error("spec argument '" + toks[i] + "' is not key=value (in '" + spec +
                              "')");
        args[toks[i].substr(0, eq)] = toks[i].substr(eq + 1);
    }
    return {toks[0], std::move(args)};
}

double spec_num(const std::map<std::string, std::string>& args, const std::string& key,
                double fallback) {
    auto it = args.find(key);
    return it == args.end() ? fallback : parse_number(it->second);
}

double spec_num_required(const std::map<std::string, std::string>& args, const std::string& key,
                         const std::string& spec) {
    auto it = args.find(key);
    if (it == args.end()) throw param_error("spec '" + spec + "' is missing " + key + "=...");
    return parse_number(it->second);
}

}  // namespace

double parse_number(const std::string& token) {
    const std::string t = trim(token);
    if (t.empty()) throw param_error("empty numeric token");
    const auto pos = t.find("pi");
    if (pos == std::string::npos) return plain_number(t);

    std::string pre = t.substr(0, pos), post = t.substr(pos + 2);
    double coef = 1.0;
    if (pre == "-")
        coef = -1.0;
    else if (pre == "+" || pre.empty())
        coef = 1.0;
    else
        coef = plain_number(pre);
    double den = 1.0;
    if (!post.empty()) {
        if (post[0] != '/') throw param_error("cannot parse number from '" + t + "'");
        den = plain_number(post.substr(1));
        if (den == 0) throw param_error("division by zero in '" + t + "'");
    }
    return coef * kPi / den;
}

const std::string& ConfigFile::get(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw param_error("config key '" + key + "' is missing (" + origin + ")");
    return it->second;
}

std::string ConfigFile::get_or(const std::string& key, const std::string& fallback) const {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

double ConfigFile::num(const std::string& key) const { return parse_number(get(key)); }

double ConfigFile::num_or(const std::string& key, double fallback) const {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : parse_number(it->second);
}

long long ConfigFile::int_or(const std::string& key, long long fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    const double v = parse_number(it->second);
    const long long n = llround(v);
    if (std::fabs(v - double(n)) > 1e-9)
        throw param_error("config key '" + key + "' must be an integer, got '" + it->second + "'");
    return n;
}

std::vector<double> ConfigFile::nums(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : split_ws(get(key))) out.push_back(parse_number(tok));
    if (out.empty()) throw param_error("config key '" + key + "' has no values");
    return out;
}

std::vector<double> ConfigFile::nums_or(const std::string& key,
                                        std::vector<double> fallback) const {
    return has(key) ? nums(key) : fallback;
}

ConfigFile parse_config_text(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    cfg.raw = text;
    cfg.origin = origin;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw param_error(origin + ":" + std::to_string(lineno) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw param_error(origin + ":" + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw param_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw param_error(origin + ":" + std::to_string(lineno) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (cfg.kv.count(full))
            throw param_error(origin + ":" + std::to_string(lineno) + ": duplicate key '" + full +
                              "'");
        cfg.kv[full] = val;
    }
    return cfg;
}

ConfigFile parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

ProfilePtr profile_from_spec(const std::string& spec) {
    auto [kind, args] = parse_spec(spec);
    if (kind == "trig") {
        const double k = spec_num(args, "k", 1.0);
        const long long ki = llround(k);
        if (std::fabs(k - double(ki)) > 1e-9 || ki == 0)
            throw param_error("trig profile needs a nonzero integer k (got '" + spec + "')");
        return make_trig_profile(int(ki), spec_num(args, "phase", 0.0));
    }
    if (kind == "perturbed") return make_perturbed_trig_profile(spec_num(args, "a", 0.25));
    if (kind == "sturm") {
        const int mode = int(spec_num_required(args, "mode", spec));
        const int grid = int(spec_num(args, "grid", 256.0));
        const double vamp = spec_num(args, "vamp", 0.0);
        const double vk = spec_num(args, "vk", 1.0);
        return make_sturm_liouville_profile(
            [vamp, vk](double x) { return vamp * std::cos(vk * x); }, mode, grid);
    }
    throw param_error("unknown profile kind '" + kind + "' (want trig | perturbed | sturm)");
}

CoefficientPtr coefficient_from_spec(const std::string& spec) {
    auto [kind, args] = parse_spec(spec);
    if (kind == "constant") return make_constant_coefficient(spec_num(args, "c", 1.0));
    if (kind == "affine")
        return make_affine_coefficient(spec_num(args, "a", 1.0), spec_num(args, "b", 0.0));
    if (kind == "quadratic")
        return make_quadratic_coefficient(spec_num(args, "a", 1.0), spec_num(args, "b", 0.0));
    throw param_error("unknown coefficient kind '" + kind +
                      "' (want constant | affine | quadratic)");
}

std::vector<uint64_t> ExperimentConfig::seeds(uint64_t offset) const {
    std::vector<uint64_t> out;
    out.reserve(size_t(n_seeds));
    for (int i = 0; i < n_seeds; ++i) out.push_back(seed_base + offset + uint64_t(i));
    return out;
}

ExperimentConfig experiment_from_config(const ConfigFile& cfg) {
    ExperimentConfig ec;
    ec.file = cfg;
    ec.h1_spec = cfg.get_or("hamiltonian.h1", ec.h1_spec);
    ec.h2_spec = cfg.get_or("hamiltonian.h2", ec.h2_spec);
    ec.exclusion_r = cfg.num_or("hamiltonian.exclusion_r", ec.exclusion_r);
    ec.l_spec = cfg.get_or("coefficients.l", ec.l_spec);
    ec.r_spec = cfg.get_or("coefficients.r", ec.r_spec);

    ec.alphas = cfg.nums_or("run.alpha", ec.alphas);
    ec.r0 = cfg.num_or("run.r0", ec.r0);
    ec.delta = cfg.num_or("run.delta", ec.delta);
    ec.n_particles = int(cfg.int_or("run.n_particles", ec.n_particles));
    ec.f0_spec = cfg.get_or("run.f0", ec.f0_spec);
    ec.dt = cfg.num_or("run.dt", ec.dt);
    ec.t_final = cfg.num_or("run.t_final", ec.t_final);
    ec.grid_size = int(cfg.int_or("run.grid_size", ec.grid_size));
    ec.n_seeds = int(cfg.int_or("run.seeds", ec.n_seeds));
    ec.seed_base = uint64_t(cfg.int_or("run.seed_base", (long long)ec.seed_base));
    ec.threads = int(cfg.int_or("run.threads", ec.threads));
    if (cfg.has("run.x0")) {
        auto v = cfg.nums("run.x0");
        if (v.size() != 2) throw param_error("run.x0 needs two coordinates");
        ec.x0 = {v[0], v[1]};
    }
    ec.scheme_explicit = cfg.has("run.scheme");
    const std::string sch = cfg.get_or("run.scheme", "projected");
    if (sch == "projected")
        ec.scheme = Scheme::contraction_projected;
    else if (sch == "euler")
        ec.scheme = Scheme::euler_maruyama;
    else
        throw param_error("run.scheme must be projected or euler, got '" + sch + "'");
    ec.output_every = int(cfg.int_or("run.output_every", ec.output_every));
    ec.dump_paths = int(cfg.int_or("run.dump_paths", ec.dump_paths));

    ec.eta = cfg.num_or("flow.eta", ec.eta);
    ec.thetas = cfg.nums_or("flow.theta", ec.thetas);
    ec.window_start = cfg.num_or("flow.window_start", ec.window_start);
    if (cfg.has("run.fit_window")) {
        auto v = cfg.nums("run.fit_window");
        if (v.size() != 2 || !(v[1] > v[0]))
            throw param_error("run.fit_window needs two increasing times");
        ec.fit_a = v[0];
        ec.fit_b = v[1];
    }
    ec.mu = cfg.num_or("run.mu", ec.mu);
    ec.eps = cfg.num_or("run.eps", ec.eps);

    if (ec.alphas.empty()) throw param_error("run.alpha must list at least one value");
    for (double a : ec.alphas)
        if (!(a > 0)) throw param_error("run.alpha entries must be positive, got " + fmt17(a));
    if (!(ec.r0 >= 0)) throw param_error("run.r0 must be >= 0");
    if (!(ec.delta >= 0)) throw param_error("run.delta must be >= 0");
    if (!(ec.dt > 0)) throw param_error("run.dt must be positive");
    if (!(ec.t_final > 0)) throw param_error("run.t_final must be positive");
    if (ec.n_seeds < 1) throw param_error("run.seeds must be >= 1");
    if (!(ec.exclusion_r >= 0)) throw param_error("hamiltonian.exclusion_r must be >= 0");
    if (!(ec.eta > 0)) throw param_error("flow.eta must be positive");
    if (!(ec.mu > 0) || !(ec.eps > 0)) throw param_error("run.mu and run.eps must be positive");
    return ec;
}

InitialDensity density_from_spec(const std::string& spec, const TorusGeometry& geom) {
    auto [kind, args] = parse_spec(spec);
    if (kind == "uniform") return density_uniform(geom);
    if (kind == "bump") {
        const double cx = spec_num_required(args, "cx", spec);
        const double cy = spec_num_required(args, "cy", spec);
        const double r = spec_num_required(args, "r", spec);
        return density_bump(geom, {cx, cy}, r);
    }
    if (kind == "bumps") {
        auto it = args.find("spots");
        if (it == args.end()) throw param_error("bumps spec needs spots=cx:cy:r[,cx:cy:r...]");
        std::vector<std::pair<Vec2, double>> spots;
        std::istringstream is(it->second);
        std::string item;
        while (std::getline(is, item, ',')) {
            std::istringstream fs(item);
            std::string a, b, c;
            if (!std::getline(fs, a, ':') || !std::getline(fs, b, ':') || !std::getline(fs, c))
                throw param_error("bad bump entry '" + item + "' (want cx:cy:r)");
            spots.push_back({{parse_number(a), parse_number(b)}, parse_number(c)});
        }
        return density_bumps(geom, spots);
    }
    throw param_error("unknown initial density kind '" + kind +
                      "' (want uniform | bump | bumps)");
}

BuiltExperiment build_experiment(const ExperimentConfig& ec) {
    BuiltExperiment be;
    be.h1 = profile_from_spec(ec.h1_spec);
    be.h2 = profile_from_spec(ec.h2_spec);
    TorusGeometry geom = build_geometry(be.h1, be.h2, ec.exclusion_r);
    AlignedCoefficients coef = AlignedCoefficients::make(coefficient_from_spec(ec.l_spec),
                                                         coefficient_from_spec(ec.r_spec));
    be.bundle = std::make_unique<FieldBundle>(make_field_bundle(std::move(geom), std::move(coef)));
    return be;
}

}  // namespace cellflow
