#include "vaecme/bench/commands.hpp"

#include "vaecme/bench/experiment.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace vaecme::bench {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << text;
    os.close();
    if (!os)
        throw std::runtime_error("cannot write " + path.string());
}

std::vector<vae::Variant> required_variants(const ExperimentConfig& cfg)
{
    auto v = vae_variants(cfg.parsed_methods());
    if (v.empty())
        throw ConfigError("no VAE method in the method list (use e.g. --methods vae_noisy)");
    return v;
}

vae::VaeModel load_model(const ExperimentConfig& cfg, vae::Variant v)
{
    const auto path = checkpoint_path(cfg, v);
    if (!fs::exists(path))
        throw std::runtime_error("missing checkpoint " + path.string() + "; run train first");
    return vae::load_checkpoint(path).model;
}

// trains, stores checkpoint and history, fails on divergence
vae::VaeModel train_and_save(const ExperimentConfig& cfg, const vae::VaeConfig& vc,
                             const channel::ChannelDataset& data, const std::string& tag, std::ostream& log)
{
    auto r = train_variant(vc, data, log);
    save_checkpoint(r.best, checkpoint_path(cfg, vc.variant, tag));
    write_text(history_path(cfg, vc.variant, tag), hash_header(cfg) + "\n" + r.best.history.csv());
    if (r.diverged)
        throw std::runtime_error("training of vae_" + vae::to_string(vc.variant) + " diverged: " + r.message);
    log << "vae_" << vae::to_string(vc.variant) << (tag.empty() ? "" : " [" + tag + "]") << ": best epoch "
        << r.best.best_epoch << " of " << r.best.history.size() << "\n";
    return r.best.model;
}

struct SweepRow {
    double value;
    EvalRow row;
};

} // namespace

void cmd_generate(const ExperimentConfig& cfg, std::ostream& log)
{
    const auto d = channel::generate_dataset(cfg.dataset_config());
    fs::create_directories(cfg.out);
    channel::save_dataset(d, dataset_path(cfg));
    log << "wrote " << dataset_path(cfg).string() << ": " << channel::to_string(d.config.scenario) << " "
        << d.config.dims.n_rx << "x" << d.config.dims.n_tx << ", " << d.config.n_train << "/" << d.config.n_val
        << "/" << d.config.n_test << " samples\n"
        << "audit: " << normalization_audit(d) << "\n";
}

void cmd_train(const ExperimentConfig& cfg, std::ostream& log)
{
    const auto variants = required_variants(cfg);
    const auto data = load_or_generate(cfg, log);
    for (auto v : variants)
        train_and_save(cfg, cfg.vae_config(v), data, {}, log);
}

void cmd_evaluate(const ExperimentConfig& cfg, std::ostream& log)
{
    const auto methods = cfg.parsed_methods();
    ModelSet models;
    for (auto v : vae_variants(methods))
        models.emplace(v, load_model(cfg, v));
    const auto data = load_or_generate(cfg, log);
    const auto rows = evaluate_methods(data, methods, models, {cfg.seed, cfg.snr_grid});
    write_text(cfg.out / "evaluate.csv", eval_csv(rows, hash_header(cfg)));
    for (const auto& r : rows)
        log << std::left << std::setw(18) << r.method << std::right << std::setw(6) << r.snr_db << " dB  nmse "
            << std::scientific << std::setprecision(4) << r.nmse << std::defaultfloat << "\n";
    log << "wrote " << (cfg.out / "evaluate.csv").string() << "\n";
}

void cmd_sweep(const ExperimentConfig& cfg, std::ostream& log)
{
    const auto methods = cfg.parsed_methods();
    const auto axis = cfg.sweep_axis;
    const auto name = to_string(axis);
    std::vector<SweepRow> out;
    auto tag_of = [&](double v) { return name + std::to_string(static_cast<std::size_t>(v)); };
    auto collect = [&](double v, const std::vector<EvalRow>& rows) {
        for (const auto& r : rows)
            out.push_back({v, r});
    };

    switch (axis) {
    case SweepAxis::mc_samples: {
        const auto base = Method::parse(cfg.sweep_method);
        ModelSet models;
        models.emplace(base.variant, load_model(cfg, base.variant));
        const auto data = load_or_generate(cfg, log);
        for (double v : cfg.sweep_values) {
            auto m = base;
            m.mc_samples = static_cast<std::size_t>(v);
            auto rows = evaluate_methods(data, {m}, models, {cfg.seed, cfg.snr_grid});
            for (auto& r : rows)
                r.method = base.name;
            collect(v, rows);
            log << "K=" << v << " done\n";
        }
        break;
    }
    case SweepAxis::train_size: {
        const auto full = load_or_generate(cfg, log);
        for (double v : cfg.sweep_values) {
            const auto n = static_cast<std::size_t>(v);
            if (n > full.config.n_train)
                throw ConfigError("train_size " + std::to_string(n) + " exceeds n_train");
            const auto data = subset_train(full, n);
            ModelSet models;
            for (auto var : vae_variants(methods))
                models.emplace(var, train_and_save(cfg, cfg.vae_config(var), data, tag_of(v), log));
            collect(v, evaluate_methods(data, methods, models, {cfg.seed, cfg.snr_grid}));
        }
        break;
    }
    case SweepAxis::antennas: {
        for (double v : cfg.sweep_values) {
            auto point = cfg;
            point.data.dims.n_rx = static_cast<std::size_t>(v);
            const auto data = channel::generate_dataset(point.dataset_config());
            log << "antennas " << v << ": " << normalization_audit(data) << "\n";
            ModelSet models;
            for (auto var : vae_variants(methods))
                models.emplace(var, train_and_save(cfg, cfg.vae_config(var), data, tag_of(v), log));
            collect(v, evaluate_methods(data, methods, models, {cfg.seed, cfg.snr_grid}));
        }
        break;
    }
    case SweepAxis::latent_dim: {
        std::vector<Method> vae_methods;
        for (const auto& m : methods)
            if (m.is_vae())
                vae_methods.push_back(m);
        if (vae_methods.empty())
            throw ConfigError("latent_dim sweep needs at least one VAE method");
        const auto data = load_or_generate(cfg, log);
        for (double v : cfg.sweep_values) {
            ModelSet models;
            for (auto var : vae_variants(vae_methods)) {
                auto vc = cfg.vae_config(var);
                vc.latent_dim = static_cast<std::size_t>(v);
                models.emplace(var, train_and_save(cfg, vc, data, tag_of(v), log));
            }
            collect(v, evaluate_methods(data, vae_methods, models, {cfg.seed, cfg.snr_grid}));
        }
        break;
    }
    }

    std::ostringstream os;
    os << hash_header(cfg) << "\naxis,value,method,snr_db,nmse,n_test\n" << std::setprecision(17);
    for (const auto& s : out)
        os << name << "," << s.value << "," << s.row.method << "," << s.row.snr_db << "," << s.row.nmse << ","
           << s.row.n_test << "\n";
    const auto path = cfg.out / ("sweep_" + name + ".csv");
    write_text(path, os.str());
    log << "wrote " << path.string() << "\n";
}

void cmd_diagnose(const ExperimentConfig& cfg, std::ostream& log)
{
    const auto variants = required_variants(cfg);
    const auto data = load_or_generate(cfg, log);
    const auto truth = split_channels(data, channel::Split::test);
    const auto reference = reference_cme(data);
    analysis::GapOptions opt;
    opt.snr_db = cfg.snr_grid;
    opt.lipschitz_pairs = cfg.lipschitz_pairs;
    opt.safety = cfg.safety;
    opt.is_samples = cfg.is_samples;
    opt.is_subset = cfg.is_subset;
    opt.seed = cfg.seed;
    for (auto v : variants) {
        auto model = load_model(cfg, v);
        const auto rep = analysis::gap_report(model, truth, opt, reference);
        const auto path = cfg.out / ("diagnose_vae_" + vae::to_string(v) + ".csv");
        write_text(path, hash_header(cfg) + "\n" + rep.csv());
        for (const auto& r : rep.rows) {
            log << "vae_" << vae::to_string(v) << " " << std::setw(6) << r.snr_db << " dB  rhs " << r.rhs_bound;
            if (r.lhs_gap)
                log << "  lhs " << *r.lhs_gap << (*r.lhs_gap <= r.rhs_bound ? "  ok" : "  VIOLATED");
            log << "\n";
        }
        log << "wrote " << path.string() << "\n";
    }
}

} // namespace vaecme::bench
