#include "vaecme/bench/cli.hpp"

#include "vaecme/bench/commands.hpp"

#include <CLI11.hpp>

#include <functional>
#include <optional>
#include <ostream>

namespace vaecme::bench {

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool desk_scale = false;
    std::string methods;
    std::string snr_grid;
    std::string variant;
    std::string axis;
    std::string values;
};

ExperimentConfig resolve(const Flags& f)
{
    ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    if (f.seed)
        c.seed = *f.seed;
    if (!f.out.empty())
        c.out = f.out;
    if (!f.methods.empty())
        c.methods = parse_name_list(f.methods);
    if (!f.variant.empty()) {
        const auto m = Method::parse("vae_" + f.variant);
        c.methods = {m.name};
        c.sweep_method = m.name;
    }
    if (!f.snr_grid.empty())
        c.snr_grid = parse_number_list(f.snr_grid);
    if (!f.axis.empty())
        c.sweep_axis = sweep_axis_from_string(f.axis);
    if (!f.values.empty())
        c.sweep_values = parse_number_list(f.values);
    if (f.desk_scale || c.desk_scale)
        c.apply_desk_scale();
    c.validate();
    return c;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"VAE-parameterized conditional LMMSE channel estimation benchmark"};
    app.name("vaecme");
    app.require_subcommand(1);
    Flags f;

    using Command = std::function<void(const ExperimentConfig&, std::ostream&)>;
    std::vector<std::pair<CLI::App*, Command>> commands;
    auto add = [&](const std::string& name, const std::string& help, Command cmd) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", f.config, "INI configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", f.seed, "master seed (dataset, training, evaluation noise)");
        sub->add_option("--out", f.out, "output directory");
        sub->add_flag("--desk-scale", f.desk_scale, "32-antenna SIMO, 20000/2000/2000 split");
        sub->add_option("--methods", f.methods,
                        "comma list: ls, genie_cov, global_cov, vae_<genie|noisy|real>[_mc<K>]");
        sub->add_option("--snr-grid", f.snr_grid, "comma list of SNRs in dB");
        commands.emplace_back(sub, std::move(cmd));
        return sub;
    };
    add("generate", "generate and store the dataset", cmd_generate);
    add("train", "train the VAE variants named in the method list", cmd_train)
        ->add_option("--variant", f.variant, "train only this variant (genie, noisy, real)");
    add("evaluate", "NMSE of every method over the SNR grid", cmd_evaluate);
    auto* sweep = add("sweep", "NMSE along one axis", cmd_sweep);
    sweep->add_option("--axis", f.axis, "antennas, train_size, latent_dim or mc_samples");
    sweep->add_option("--values", f.values, "comma list of axis values");
    sweep->add_option("--variant", f.variant, "VAE variant for the mc_samples axis");
    add("diagnose", "bound diagnostics for trained checkpoints", cmd_diagnose)
        ->add_option("--variant", f.variant, "diagnose only this variant");

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    ExperimentConfig cfg;
    try {
        cfg = resolve(f);
    } catch (const ConfigError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }
    for (auto& [sub, cmd] : commands) {
        if (!sub->parsed())
            continue;
        try {
            cmd(cfg, out);
            return kExitOk;
        } catch (const ConfigError& e) {
            err << "usage error: " << e.what() << "\n";
            return kExitUsage;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kExitRuntime;
        }
    }
    return kExitUsage;
}

} // namespace vaecme::bench
