#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lyapsim/config.hpp"
#include "lyapsim/errors.hpp"
#include "lyapsim/experiments.hpp"

using namespace lyapsim;

namespace {

struct Common {
    std::string config_file;
    std::vector<std::string> sets;
    std::string out;
    unsigned workers = 1;
    bool waive = false;
    // Shortcuts for the most used keys.
    std::optional<std::string> preset, alpha, kappa, beta, sigma2, formula, n_paths, dt, horizon, x0, seed, p;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("-c,--config", c.config_file, "configuration file");
    app->add_option("--set", c.sets, "override a key: --set batch.n_paths=500");
    app->add_option("-o,--out", c.out, "output directory (default $LYAPSIM_OUT/<task>)");
    app->add_option("--workers", c.workers, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
    app->add_flag("--waive-certify", c.waive, "continue when certification fails (recorded in the manifest)");
    app->add_option("--preset", c.preset, "model.preset");
    app->add_option("--alpha", c.alpha, "model.alpha");
    app->add_option("--kappa", c.kappa, "model.kappa");
    app->add_option("--beta", c.beta, "model.beta");
    app->add_option("--sigma2", c.sigma2, "model.sigma2");
    app->add_option("--formula", c.formula, "oracle.formula");
    app->add_option("--n-paths", c.n_paths, "batch.n_paths");
    app->add_option("--dt", c.dt, "batch.dt");
    app->add_option("--horizon", c.horizon, "batch.horizon");
    app->add_option("--x0", c.x0, "batch.x0");
    app->add_option("--seed", c.seed, "seed");
    app->add_option("--p", c.p, "certify.p");
}

Config assemble(const Common& c) {
    Config cfg = c.config_file.empty() ? Config{} : Config::load(c.config_file);
    const std::pair<const std::optional<std::string>*, const char*> shortcuts[] = {
        {&c.preset, "model.preset"}, {&c.alpha, "model.alpha"},     {&c.kappa, "model.kappa"},
        {&c.beta, "model.beta"},     {&c.sigma2, "model.sigma2"},   {&c.formula, "oracle.formula"},
        {&c.n_paths, "batch.n_paths"}, {&c.dt, "batch.dt"},         {&c.horizon, "batch.horizon"},
        {&c.x0, "batch.x0"},         {&c.seed, "seed"},             {&c.p, "certify.p"}};
    for (const auto& [value, key] : shortcuts)
        if (*value) cfg.set(key, **value);
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    return cfg;
}

std::filesystem::path out_dir(const Common& c, const std::string& task) {
    if (!c.out.empty()) return c.out;
    const char* env = std::getenv("LYAPSIM_OUT");
    return std::filesystem::path(env && *env ? env : "lyapsim-out") / task;
}

int run(const std::string& task, const Common& c) {
    Config cfg;
    try {
        cfg = assemble(c);
    } catch (const ConfigError& e) {
        std::cerr << "lyapsim: " << (c.config_file.empty() ? "" : c.config_file + ": ") << e.what() << "\n";
        return kExitConfig;
    }
    RunOptions opt;
    opt.out_dir = out_dir(c, task);
    opt.workers = c.workers;
    opt.waive_certify = c.waive;
    const auto res = run_task(task, std::move(cfg), opt);
    for (const auto& line : res.checks) std::cout << line.render() << "\n";
    if (res.certification_waived) std::cout << "certification waived\n";
    if (!res.failure.empty()) std::cerr << "lyapsim: " << res.failure << "\n";
    if (!res.manifest.empty()) std::cout << "manifest " << res.manifest.string() << "\n";
    return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lyapsim: Lyapunov drift certification and moment/passage-time experiments"};
    app.require_subcommand(1);

    Common common;
    std::string scenario, manifest;
    const std::pair<const char*, const char*> plain[] = {
        {"certify", "certify the Lyapunov condition for a model"},
        {"simulate", "simulate a path batch and dump paths"},
        {"moments", "estimate moments of a simulated batch"},
        {"passage", "estimate passage-time statistics"},
        {"oracle", "tabulate a closed-form oracle"},
    };
    std::vector<CLI::App*> plain_cmds;
    for (const auto& [name, help] : plain) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub, common);
        plain_cmds.push_back(sub);
    }
    auto* run_cmd = app.add_subcommand("run", "run a verification scenario");
    run_cmd->add_option("scenario", scenario, "scenario id")->required();
    add_common(run_cmd, common);
    auto* replay_cmd = app.add_subcommand("replay", "re-run a manifest and compare artifact hashes");
    replay_cmd->add_option("manifest", manifest, "manifest.json")->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("-o,--out", common.out, "output directory for the re-run");
    replay_cmd->add_option("--workers", common.workers, "worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (run_cmd->parsed()) {
            if (!parse_scenario(scenario)) {
                std::cerr << "lyapsim: unknown scenario '" << scenario << "'\n";
                return kExitConfig;
            }
            return run(scenario, common);
        }
        if (replay_cmd->parsed()) {
            const auto dir = common.out.empty() ? std::filesystem::path(manifest).parent_path() / "replay"
                                                : std::filesystem::path(common.out);
            const auto r = replay_manifest(manifest, dir, common.workers);
            for (const auto& m : r.mismatches) std::cout << "MISMATCH " << m << "\n";
            std::cout << (r.identical ? "replay identical" : "replay differs") << "\n";
            return r.identical ? kExitPass : kExitAcceptance;
        }
        const char* tasks[] = {"lyapunov-certify", "simulate", "moments", "passage", "oracle-dump"};
        for (std::size_t i = 0; i < plain_cmds.size(); ++i)
            if (plain_cmds[i]->parsed()) return run(tasks[i], common);
    } catch (const ConfigError& e) {
        std::cerr << "lyapsim: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "lyapsim: " << e.what() << "\n";
        return kExitAcceptance;
    }
    return kExitConfig;
}
