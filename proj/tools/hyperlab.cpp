// hyperlab <subcommand> [--config file] [--set section.key=value ...] [flags]
//
// Exit codes: 0 pass, 2 usage, 3 geometry or verification failure, 4 resource.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hyperlab/config.hpp"
#include "hyperlab/error.hpp"
#include "hyperlab/harness.hpp"

namespace {

struct Flag {
    const char* name;
    const char* help;
    // Key per subcommand; the empty name covers the rest.
    std::map<std::string, std::string> keys;
};

const std::vector<Flag>& flags() {
    static const std::vector<Flag> f{
        {"--preset", "built-in presentation: genus2, schottky(r,d), cyclic(l), free(k)", {{"", "group.presentation"}}},
        {"--presentation-file", "presentation text file", {{"", "group.file"}}},
        {"--T", "orbit or decomposition depth", {{"", "group.T"}}},
        {"--subgroup", "coset counting for the cyclic subgroup of this word", {{"", "group.subgroup"}}},
        {"--depth", "tree decomposition depth", {{"", "tree.depth"}}},
        {"--cylinder", "tree cylinder word, e.g. 0.1", {{"", "tree.cylinder"}}},
        {"--U", "Whitney open set: point, cell or both", {{"", "boundary.U"}}},
        {"--system", "jb-bounds system: all, point, colony, thinned, oracle", {{"", "jb.system"}}},
        {"--theorem", "formula id", {{"", "formulas.theorem"}}},
        {"--n", "ambient dimension", {{"", "formulas.n"}}},
        {"--s", "target dimension", {{"formulas", "formulas.s"}, {"", "jb.s"}}},
        {"--tau", "shrinking rate exponent", {{"formulas", "formulas.tau"}, {"", "jb.tau"}}},
        {"--a", "curvature pinching", {{"", "formulas.a"}}},
        {"--v-gamma", "critical exponent of the group", {{"", "formulas.v_gamma"}}},
        {"--v-n", "critical exponent of the target stabilizer", {{"", "formulas.v_n"}}},
        {"--v-x", "critical exponent of the tree", {{"", "formulas.v_x"}}},
        {"--taus", "space separated list of rates", {{"formulas", "formulas.taus"}, {"", "lab.taus"}}},
        {"--dims", "space separated target dimensions", {{"", "formulas.dims"}}},
        {"--target", "point or geodesic", {{"", "lab.target"}}},
        {"--rate", "rate function: linear a | log a | const c | affine a b", {{"", "lab.rate"}}},
        {"--window", "depth window, two numbers", {{"", "lab.window"}}},
        {"--eps", "tube radius", {{"", "lab.eps"}}},
        {"--samples", "Monte-Carlo sample count", {{"", "lab.samples"}}},
        {"--seed", "RNG seed", {{"", "lab.seed"}}},
        {"--horizon", "zero-one horizon", {{"", "lab.horizon"}}},
        {"--mode", "zero-one mode: point, tube, geodesic", {{"", "lab.mode"}}},
        {"--generation", "dyadic generation for the density check", {{"", "lab.generation"}}},
    };
    return f;
}

std::string key_for(const Flag& f, const std::string& sub) {
    auto it = f.keys.find(sub);
    return it != f.keys.end() ? it->second : f.keys.at("");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diophantine approximation lab on hyperbolic surfaces and trees"};
    app.require_subcommand(1);
    std::string config_path, out_dir = "hyperlab-out";
    std::vector<std::string> sets;
    int workers = 0;
    app.add_option("--config", config_path, "experiment config file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "artifact directory");
    app.add_option("--set", sets, "override section.key=value");
    app.add_option("--workers", workers, "worker threads (also HYPERLAB_WORKERS)")->check(CLI::PositiveNumber);

    std::map<std::string, std::vector<std::optional<std::string>>> values;
    for (const auto& sub : hyperlab::harness::subcommands()) {
        auto* cmd = app.add_subcommand(sub);
        cmd->fallthrough();
        auto& slot = values[sub];
        slot.resize(flags().size());
        for (std::size_t i = 0; i < flags().size(); ++i) cmd->add_option(flags()[i].name, slot[i], flags()[i].help);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(hyperlab::ErrorKind::usage);
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        hyperlab::config::Config cfg;
        if (!config_path.empty()) cfg = hyperlab::config::Config::load(config_path);
        const auto& slot = values[sub];
        for (std::size_t i = 0; i < flags().size(); ++i)
            if (slot[i]) cfg.set(key_for(flags()[i], sub), *slot[i]);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) hyperlab::usage_error("--set expects section.key=value, got '" + s + "'");
            cfg.set(s.substr(0, eq), s.substr(eq + 1));
        }
        if (workers == 0 && cfg.has("run.workers")) workers = static_cast<int>(cfg.integer("run.workers", 1));
        if (workers > 0) setenv("HYPERLAB_WORKERS", std::to_string(workers).c_str(), 1);
        return hyperlab::harness::execute(sub, cfg, out_dir, std::cout, std::cerr);
    } catch (const hyperlab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    }
}
