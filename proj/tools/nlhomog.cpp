#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nlhomog/config.hpp"
#include "nlhomog/errors.hpp"
#include "nlhomog/report.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal perforated-domain homogenization experiments"};
    app.require_subcommand(1, 1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    for (const char* name : {"cell", "gamma", "extend", "degenerate", "kernel-info"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "YAML config file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides `output`)");
        sub->add_option("--seed", seed, "seed for random sampling (overrides `seed`)");
    }
    CLI11_PARSE(app, argc, argv);

    const auto* chosen = app.get_subcommands().front();
    try {
        auto cfg = nlhomog::load_config(config_path);
        if (chosen->count("--seed")) nlhomog::set_seed(cfg, seed);
        if (out_dir.empty()) out_dir = cfg.output;
        const auto result = nlhomog::run(nlhomog::subcommand_from_string(chosen->get_name()), cfg, out_dir, std::cout);
        for (const auto& f : result.files) std::cout << "wrote " << out_dir << "/" << f << '\n';
        if (result.exit_code() != 0) std::cerr << "one or more checks failed\n";
        return result.exit_code();
    } catch (const nlhomog::ConfigError& e) {
        std::cerr << config_path << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
