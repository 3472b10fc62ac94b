#pragma once
// Flat sectioned key-value experiment configuration: parsing, numeric
// expressions in units of pi, and builders for the domain objects.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cellflow/common.hpp"
#include "cellflow/fields.hpp"
#include "cellflow/flow.hpp"
#include "cellflow/hamiltonian.hpp"

namespace cellflow {

// "0.5", "pi", "2pi", "pi/2", "-3pi/4" and friends
double parse_number(const std::string& token);

struct ConfigFile {
    std::string raw;                          // verbatim bytes for the echo
    std::map<std::string, std::string> kv;    // "section.key" -> value string
    std::string origin;                       // path it was read from, if any

    bool has(const std::string& key) const { return kv.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double num(const std::string& key) const;
    double num_or(const std::string& key, double fallback) const;
    long long int_or(const std::string& key, long long fallback) const;
    std::vector<double> nums(const std::string& key) const;          // whitespace separated
    std::vector<double> nums_or(const std::string& key, std::vector<double> fallback) const;
};

ConfigFile parse_config_text(const std::string& text, const std::string& origin = "<memory>");
ConfigFile parse_config_file(const std::string& path);

// Profile spec strings: "trig k=1 [phase=pi/2]", "perturbed a=0.25",
// "sturm mode=3 [grid=256] [vamp=0] [vk=1]".
ProfilePtr profile_from_spec(const std::string& spec);

// Coefficient spec strings: "constant c=1", "affine a=1 b=0.25" (a + b h),
// "quadratic a=1 b=0.25" (a + b h^2).
CoefficientPtr coefficient_from_spec(const std::string& spec);

struct InitialDensity;  // density.hpp
// Initial-density spec strings: "uniform", "bump cx=pi cy=pi/2 r=0.4",
// "bumps spots=cx:cy:r,cx:cy:r".
InitialDensity density_from_spec(const std::string& spec, const TorusGeometry& geom);

struct ExperimentConfig {
    ConfigFile file;

    std::string h1_spec = "trig k=1";
    std::string h2_spec = "trig k=1 phase=pi/2";
    double exclusion_r = 0.3;
    std::string l_spec = "constant c=1";
    std::string r_spec = "constant c=1";

    std::vector<double> alphas{1.0};
    double r0 = 0.0;
    double delta = 0.0;
    int n_particles = 2000;
    std::string f0_spec = "uniform";
    double dt = 1e-3;
    double t_final = 5.0;
    int grid_size = 64;
    int n_seeds = 30;
    uint64_t seed_base = 1000;
    int threads = 1;
    Vec2 x0{kPi / 4, kPi / 4};
    Scheme scheme = Scheme::contraction_projected;
    bool scheme_explicit = false;  // true when the config names run.scheme itself
    int output_every = 0;
    int dump_paths = 3;

    double eta = 0.01;
    std::vector<double> thetas{0.05, 0.1, 0.2};
    double window_start = 6.0;
    double fit_a = 3.0, fit_b = 12.0;
    double mu = 1e-3, eps = 1e-3;

    std::vector<uint64_t> seeds(uint64_t offset = 0) const;
};

// Reads and validates the experiment keys; positivity violations raise
// param_error before any computation starts.
ExperimentConfig experiment_from_config(const ConfigFile& cfg);

struct BuiltExperiment {
    ProfilePtr h1, h2;
    std::unique_ptr<FieldBundle> bundle;  // owns the geometry and coefficients
};

// Builds profiles, geometry, coefficients, and the field bundle. Throws
// input_error when the structural conditions fail.
BuiltExperiment build_experiment(const ExperimentConfig& ec);

}  // namespace cellflow
