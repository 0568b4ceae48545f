#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlhomog/cell_problem.hpp"
#include "nlhomog/gamma_harness.hpp"
#include "nlhomog/geometry.hpp"
#include "nlhomog/kernels.hpp"

namespace nlhomog {

struct GammaConfig {
    std::vector<int> T_list{2, 4, 8};
    std::string delta_rule = "1/T";
    std::vector<std::vector<double>> directions;  // empty: e_1
    bool periodic = true;
};

struct ExtendConfig {
    double tau = 0.08;
    double max_distortion = 2.0;
    std::vector<double> eps{0.25, 0.125, 0.0625, 0.03125};
    int samples = 100;
    double L = 2.0;
    double r0 = 0.5;
    double r = 0.0;       // <= 0: min(r0, sqrt(d), tau)
    double margin = 0.0;  // <= 0: sqrt(d)
    int max_window_cells = 3;
    double stability_factor = 2.0;
    double localization_r = 0.3;
    int localization_n = 32;
    int localization_samples = 100;
};

struct DegenerateConfig {
    double delta = 0.2;
    std::vector<int> n_list{8, 16, 32};
    double decrease_factor = 10.0;
    double hypothesis_c = 1e-6;
    double hypothesis_r0 = 0.1;
    int hypothesis_samples = 41;
};

struct KernelInfoConfig {
    double step = 1.0 / 128.0;
    double tail_tol = 1e-2;
};

struct RunConfig {
    int dimension = 2;
    std::uint64_t seed = 0;
    std::string rng = "mt19937_64";
    std::string output = "out";

    KernelSpec kernel = KernelSpec::ball(2, 1.0);
    Perforation perforation = Perforation::none(2);
    int n = 32;
    int cells = 1;
    double R = 0.0;  // <= 0: default truncation radius
    CellOptions options;
    // Relative tolerance of the no-perforation cross-check against the
    // kernel's second-moment matrix.
    double consistency_tol = 1e-2;

    GammaConfig gamma;
    ExtendConfig extend;
    DegenerateConfig degenerate;
    KernelInfoConfig kernel_info;

    std::string source;  // config text as read
    // FNV-1a 64 of the config text and the effective seed.
    std::uint64_t hash = 0;

    double truncation_radius() const;
};

// Parses the YAML config text. Unknown keys and malformed values raise
// ConfigError carrying the 1-based line and the dotted key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

std::uint64_t fnv1a64(const std::string& bytes);
// Overrides the seed and recomputes `hash`.
void set_seed(RunConfig& cfg, std::uint64_t seed);

}  // namespace nlhomog
