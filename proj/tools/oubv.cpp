// Command-line driver for the experiments in oubv/lab.hpp.
//
//   oubv theorem-check --dim 1 --domain "interval:-1,1" --u0 sign --h 0.0009765625 \
//        --tmin 1e-3 --tmax 1 --nt 24 --out run1/
//   oubv domain-convergence --target "ball:1" --faces 4:12 --lambda 1 --out run2/
//   oubv mehler-oracle --t 0.5 --out run3/
//   oubv property-suite --seed 42 --out run4/
//
// Settings come from an optional --config file of `key = value` lines and
// are then overridden by flags. Exit status: 0 when every verdict passes,
// 1 when a verdict fails, 2 on a configuration or runtime error.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oubv.hpp"

namespace {

struct Flag {
    const char* key;
    const char* help;
};

const std::map<std::string, std::vector<Flag>>& flags_by_command() {
    static const std::vector<Flag> common{
        {"dim", "dimension (1, 2 or 3)"},
        {"L", "grid half-width"},
        {"h", "grid spacing"},
        {"u0", "initial datum: sign | step:a | linear | poly:c0,c1,c2 | file:path.csv"},
        {"out", "output directory"},
        {"seed", "seed recorded in every output"},
    };
    static const std::map<std::string, std::vector<Flag>> table = [] {
        std::map<std::string, std::vector<Flag>> t;
        t["theorem-check"] = common;
        t["theorem-check"].insert(t["theorem-check"].end(),
                                  {{"domain", "interval:a,b | ball:r | square:s | whole | body file"},
                                   {"tmin", "first time of the geometric ladder"},
                                   {"tmax", "last time of the ladder"},
                                   {"nt", "number of ladder times"},
                                   {"C", "constant of the error model C(h/sqrt(t)+dt^2/t)"}});
        t["domain-convergence"] = common;
        t["domain-convergence"].insert(t["domain-convergence"].end(),
                                       {{"target", "target body (2-d)"},
                                        {"faces", "polygon face counts min:max"},
                                        {"lambda", "comma-separated resolvent parameters"},
                                        {"delta", "smoothing schedule delta_m = delta/m"}});
        t["mehler-oracle"] = common;
        t["mehler-oracle"].insert(t["mehler-oracle"].end(),
                                  {{"t", "evaluation time"}, {"tol", "L2 tolerance"}});
        t["property-suite"] = {{"seed", "seed for the randomized inputs"}, {"out", "output directory"}};
        return t;
    }();
    return table;
}

std::string describe(const std::string& name) {
    if (name == "theorem-check") return "trace t -> F(t) against the variation of u0 on the domain";
    if (name == "domain-convergence") return "resolvents on smoothed polygons converging to a 2-d target";
    if (name == "mehler-oracle") return "Neumann solver on the whole box against the Mehler formula";
    return "seeded property groups for the semigroup, geometry and variation tools";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical lab for the Neumann Ornstein-Uhlenbeck semigroup and Gaussian BV functions"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print this help and exit");

    std::map<std::string, std::map<std::string, std::string>> given;
    std::map<std::string, std::string> config_paths;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, flags] : flags_by_command()) {
        auto* sub = app.add_subcommand(name, describe(name));
        sub->set_help_flag("--help", "print this help and exit");
        subs[name] = sub;
        sub->add_option("--config", config_paths[name], "key = value configuration file");
        for (const auto& f : flags) sub->add_option(std::string("--") + f.key, given[name][f.key], f.help);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        for (const auto& [name, sub] : subs) {
            if (!sub->parsed()) continue;
            oubv::ExperimentConfig cfg;
            if (!config_paths[name].empty()) cfg = oubv::load_config_file(config_paths[name]);
            cfg.experiment = name;
            for (const auto& f : flags_by_command().at(name)) {
                if (sub->count(std::string("--") + f.key) > 0) oubv::apply_setting(cfg, f.key, given[name][f.key]);
            }
            const auto report = oubv::run_experiment(cfg);
            report.write(std::cout);
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
            return report.passed() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
