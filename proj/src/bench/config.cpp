#include "vaecme/bench/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

namespace vaecme::bench {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

double to_double(const std::string& key, const std::string& v)
{
    const auto t = trim(v);
    double out = 0.0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
    if (r.ec != std::errc{} || r.ptr != t.data() + t.size() || !std::isfinite(out))
        throw ConfigError(key + ": not a finite number: '" + v + "'");
    return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v)
{
    const auto t = trim(v);
    std::uint64_t out = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
    if (r.ec != std::errc{} || r.ptr != t.data() + t.size() || t.empty())
        throw ConfigError(key + ": not a non-negative integer: '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v)
{
    const auto t = trim(v);
    if (t == "true" || t == "1" || t == "yes" || t == "on")
        return true;
    if (t == "false" || t == "0" || t == "no" || t == "off")
        return false;
    throw ConfigError(key + ": not a boolean: '" + v + "'");
}

using Setter = std::function<void(const std::string&)>;

void set_vae_key(vae::VaeConfig& c, const std::string& k, const std::string& v)
{
    const std::string key = "vae." + k;
    if (k == "latent_dim")
        c.latent_dim = to_uint(key, v);
    else if (k == "base_channels")
        c.base_channels = to_uint(key, v);
    else if (k == "kernel")
        c.kernel = to_uint(key, v);
    else if (k == "kernel_2d")
        c.kernel_2d = to_uint(key, v);
    else if (k == "blocks")
        c.blocks = to_uint(key, v);
    else if (k == "growth")
        c.growth = to_double(key, v);
    else if (k == "free_bits")
        c.free_bits = to_double(key, v);
    else if (k == "snr_min_db")
        c.snr_min_db = to_double(key, v);
    else if (k == "snr_max_db")
        c.snr_max_db = to_double(key, v);
    else if (k == "val_snr_db")
        c.val_snr_db = to_double(key, v);
    else if (k == "batch_size")
        c.batch_size = to_uint(key, v);
    else if (k == "learning_rate")
        c.learning_rate = to_double(key, v);
    else if (k == "patience")
        c.patience = to_uint(key, v);
    else if (k == "max_epochs")
        c.max_epochs = to_uint(key, v);
    else if (k == "bn_momentum")
        c.bn_momentum = to_double(key, v);
    else if (k == "bn_eps")
        c.bn_eps = to_double(key, v);
    else if (k == "clamp")
        c.clamp = to_double(key, v);
    else
        throw ConfigError("unknown key vae." + k);
}

void write_vae(std::ostream& os, const vae::VaeConfig& c)
{
    os << "latent_dim = " << c.latent_dim << "\n"
       << "base_channels = " << c.base_channels << "\n"
       << "kernel = " << c.kernel << "\n"
       << "kernel_2d = " << c.kernel_2d << "\n"
       << "blocks = " << c.blocks << "\n"
       << "growth = " << fmt(c.growth) << "\n"
       << "free_bits = " << fmt(c.free_bits) << "\n"
       << "snr_min_db = " << fmt(c.snr_min_db) << "\n"
       << "snr_max_db = " << fmt(c.snr_max_db) << "\n"
       << "val_snr_db = " << fmt(c.val_snr_db) << "\n"
       << "batch_size = " << c.batch_size << "\n"
       << "learning_rate = " << fmt(c.learning_rate) << "\n"
       << "patience = " << c.patience << "\n"
       << "max_epochs = " << c.max_epochs << "\n"
       << "bn_momentum = " << fmt(c.bn_momentum) << "\n"
       << "bn_eps = " << fmt(c.bn_eps) << "\n"
       << "clamp = " << fmt(c.clamp) << "\n";
}

template <class T>
std::string join(const std::vector<T>& xs)
{
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i)
            s += ", ";
        if constexpr (std::is_same_v<T, std::string>)
            s += xs[i];
        else
            s += fmt(xs[i]);
    }
    return s;
}

constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

} // namespace

Method Method::parse(const std::string& raw)
{
    const auto s = trim(raw);
    Method m;
    m.name = s;
    if (s == "ls")
        m.kind = Kind::ls;
    else if (s == "genie_cov")
        m.kind = Kind::genie_cov;
    else if (s == "global_cov")
        m.kind = Kind::global_cov;
    else if (s.rfind("vae_", 0) == 0) {
        m.kind = Kind::vae;
        auto rest = s.substr(4);
        const auto mc = rest.find("_mc");
        if (mc != std::string::npos) {
            const auto k = rest.substr(mc + 3);
            m.mc_samples = to_uint("method " + s, k);
            if (m.mc_samples == 0)
                throw ConfigError("method " + s + ": Monte-Carlo sample count must be >= 1");
            rest = rest.substr(0, mc);
        }
        try {
            m.variant = vae::variant_from_string(rest);
        } catch (const std::exception&) {
            throw ConfigError("unknown VAE variant in method '" + s + "'");
        }
    } else
        throw ConfigError("unknown method '" + s + "' (ls, genie_cov, global_cov, vae_<genie|noisy|real>[_mc<K>])");
    return m;
}

std::string Method::model_name() const { return "vae_" + vae::to_string(variant); }

std::string to_string(SweepAxis a)
{
    switch (a) {
    case SweepAxis::antennas: return "antennas";
    case SweepAxis::train_size: return "train_size";
    case SweepAxis::latent_dim: return "latent_dim";
    case SweepAxis::mc_samples: return "mc_samples";
    }
    return "?";
}

SweepAxis sweep_axis_from_string(const std::string& raw)
{
    const auto s = trim(raw);
    for (auto a : {SweepAxis::antennas, SweepAxis::train_size, SweepAxis::latent_dim, SweepAxis::mc_samples})
        if (to_string(a) == s)
            return a;
    throw ConfigError("unknown sweep axis '" + s + "' (antennas, train_size, latent_dim, mc_samples)");
}

std::vector<double> parse_number_list(const std::string& s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty())
            out.push_back(to_double("list", item));
    return out;
}

std::vector<std::string> parse_name_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (auto t = trim(item); !t.empty())
            out.push_back(t);
    return out;
}

void ExperimentConfig::apply_desk_scale()
{
    desk_scale = true;
    data.dims = {32, 1};
    data.apply_desk_scale();
}

void ExperimentConfig::validate() const
{
    if (snr_grid.empty())
        throw ConfigError("snr_grid must not be empty");
    if (methods.empty())
        throw ConfigError("method list must not be empty");
    std::set<std::string> seen;
    for (const auto& m : parsed_methods())
        if (!seen.insert(m.name).second)
            throw ConfigError("duplicate method '" + m.name + "'");
    try {
        dataset_config().validate();
        for (auto v : {vae::Variant::genie, vae::Variant::noisy, vae::Variant::real})
            vae_config(v).validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (data.n_val < 2 || data.n_test < 1)
        throw ConfigError("dataset: need at least 2 validation and 1 test sample");
    if (sweep_values.empty())
        throw ConfigError("sweep values must not be empty");
    for (double v : sweep_values) {
        if (v < 0.0 || v != std::floor(v))
            throw ConfigError("sweep values must be non-negative integers");
        if (v == 0.0 && sweep_axis != SweepAxis::mc_samples)
            throw ConfigError("sweep value 0 is only valid for the mc_samples axis (MAP sentinel)");
    }
    const auto sm = Method::parse(sweep_method);
    if (!sm.is_vae() || sm.mc_samples != 0)
        throw ConfigError("sweep method must be a plain VAE method (vae_<variant>)");
    if (lipschitz_pairs < 2 || is_samples < 1 || is_subset < 1 || !(safety > 0.0))
        throw ConfigError("diagnose: invalid settings");
}

std::vector<Method> ExperimentConfig::parsed_methods() const
{
    std::vector<Method> out;
    for (const auto& s : methods)
        out.push_back(Method::parse(s));
    return out;
}

channel::DatasetConfig ExperimentConfig::dataset_config() const
{
    auto d = data;
    d.seed = seed;
    return d;
}

vae::VaeConfig ExperimentConfig::vae_config(vae::Variant v) const
{
    auto c = vae;
    c.variant = v;
    c.seed = seed;
    if (auto it = vae_overrides.find(v); it != vae_overrides.end())
        for (const auto& [k, val] : it->second)
            set_vae_key(c, k, val);
    return c;
}

ExperimentConfig parse_config(const std::string& text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }

    ExperimentConfig c;
    for (const auto& [section, body] : tree) {
        if (!body.data().empty())
            throw ConfigError("key '" + section + "' outside of a section");
        std::map<std::string, Setter> keys;
        if (section == "experiment") {
            keys["seed"] = [&](const std::string& v) { c.seed = to_uint("experiment.seed", v); };
            keys["out"] = [&](const std::string& v) { c.out = trim(v); };
            keys["methods"] = [&](const std::string& v) { c.methods = parse_name_list(v); };
            keys["snr_grid"] = [&](const std::string& v) { c.snr_grid = parse_number_list(v); };
            keys["desk_scale"] = [&](const std::string& v) { c.desk_scale = to_bool("experiment.desk_scale", v); };
        } else if (section == "dataset") {
            auto& d = c.data;
            keys["scenario"] = [&](const std::string& v) {
                try {
                    d.scenario = channel::scenario_from_string(trim(v));
                } catch (const std::exception&) {
                    throw ConfigError("dataset.scenario: expected 3gpp or toy");
                }
            };
            keys["n_rx"] = [&](const std::string& v) { d.dims.n_rx = to_uint("dataset.n_rx", v); };
            keys["n_tx"] = [&](const std::string& v) { d.dims.n_tx = to_uint("dataset.n_tx", v); };
            keys["clusters"] = [&](const std::string& v) { d.clusters = to_uint("dataset.clusters", v); };
            keys["spread_deg"] = [&](const std::string& v) { d.spread_deg = to_double("dataset.spread_deg", v); };
            keys["sector_half_width_deg"] = [&](const std::string& v) {
                d.sector_half_width = channel::deg_to_rad(to_double("dataset.sector_half_width_deg", v));
            };
            keys["n_train"] = [&](const std::string& v) { d.n_train = to_uint("dataset.n_train", v); };
            keys["n_val"] = [&](const std::string& v) { d.n_val = to_uint("dataset.n_val", v); };
            keys["n_test"] = [&](const std::string& v) { d.n_test = to_uint("dataset.n_test", v); };
            keys["toy_decay"] = [&](const std::string& v) { d.toy_decay = to_double("dataset.toy_decay", v); };
            keys["toy_floor"] = [&](const std::string& v) { d.toy_floor = to_double("dataset.toy_floor", v); };
        } else if (section == "vae") {
            for (const auto& [k, v] : body)
                set_vae_key(c.vae, k, v.data());
            continue;
        } else if (section.rfind("vae.", 0) == 0) {
            vae::Variant var;
            try {
                var = vae::variant_from_string(section.substr(4));
            } catch (const std::exception&) {
                throw ConfigError("unknown section [" + section + "]");
            }
            vae::VaeConfig probe;
            for (const auto& [k, v] : body) {
                set_vae_key(probe, k, v.data()); // reject unknown keys early
                c.vae_overrides[var][k] = trim(v.data());
            }
            continue;
        } else if (section == "sweep") {
            keys["axis"] = [&](const std::string& v) { c.sweep_axis = sweep_axis_from_string(v); };
            keys["values"] = [&](const std::string& v) { c.sweep_values = parse_number_list(v); };
            keys["method"] = [&](const std::string& v) { c.sweep_method = trim(v); };
        } else if (section == "diagnose") {
            keys["lipschitz_pairs"] = [&](const std::string& v) { c.lipschitz_pairs = to_uint("diagnose.lipschitz_pairs", v); };
            keys["safety"] = [&](const std::string& v) { c.safety = to_double("diagnose.safety", v); };
            keys["is_samples"] = [&](const std::string& v) { c.is_samples = to_uint("diagnose.is_samples", v); };
            keys["is_subset"] = [&](const std::string& v) { c.is_subset = to_uint("diagnose.is_subset", v); };
        } else
            throw ConfigError("unknown section [" + section + "]");

        for (const auto& [k, v] : body) {
            auto it = keys.find(k);
            if (it == keys.end())
                throw ConfigError("unknown key " + section + "." + k);
            it->second(v.data());
        }
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

namespace {

// everything except the output directory
std::string canonical_body(const ExperimentConfig& c)
{
    std::ostringstream os;
    os << "[experiment]\n"
       << "seed = " << c.seed << "\n"
       << "methods = " << join(c.methods) << "\n"
       << "snr_grid = " << join(c.snr_grid) << "\n"
       << "desk_scale = " << (c.desk_scale ? "true" : "false") << "\n\n";
    const auto& d = c.data;
    os << "[dataset]\n"
       << "scenario = " << channel::to_string(d.scenario) << "\n"
       << "n_rx = " << d.dims.n_rx << "\n"
       << "n_tx = " << d.dims.n_tx << "\n"
       << "clusters = " << d.clusters << "\n"
       << "spread_deg = " << fmt(d.spread_deg) << "\n"
       << "sector_half_width_deg = " << fmt(d.sector_half_width * kRadToDeg) << "\n"
       << "n_train = " << d.n_train << "\n"
       << "n_val = " << d.n_val << "\n"
       << "n_test = " << d.n_test << "\n"
       << "toy_decay = " << fmt(d.toy_decay) << "\n"
       << "toy_floor = " << fmt(d.toy_floor) << "\n\n";
    os << "[vae]\n";
    write_vae(os, c.vae);
    for (const auto& [v, kv] : c.vae_overrides) {
        os << "\n[vae." << vae::to_string(v) << "]\n";
        for (const auto& [k, val] : kv)
            os << k << " = " << val << "\n";
    }
    os << "\n[sweep]\n"
       << "axis = " << to_string(c.sweep_axis) << "\n"
       << "values = " << join(c.sweep_values) << "\n"
       << "method = " << c.sweep_method << "\n\n";
    os << "[diagnose]\n"
       << "lipschitz_pairs = " << c.lipschitz_pairs << "\n"
       << "safety = " << fmt(c.safety) << "\n"
       << "is_samples = " << c.is_samples << "\n"
       << "is_subset = " << c.is_subset << "\n";
    return os.str();
}

} // namespace

std::string to_ini(const ExperimentConfig& c)
{
    auto body = canonical_body(c);
    const auto pos = body.find("methods = ");
    return body.insert(pos, "out = " + c.out.string() + "\n");
}

std::uint64_t config_hash(const ExperimentConfig& c)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_body(c)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_header(const ExperimentConfig& c)
{
    std::ostringstream os;
    os << "# config_hash=" << std::hex << std::setw(16) << std::setfill('0') << config_hash(c);
    return os.str();
}

} // namespace vaecme::bench
