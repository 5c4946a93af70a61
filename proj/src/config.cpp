#include "ucgan/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ucgan::io {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::defaults() {
    Config c;
    auto& kv = c.kv_;
    kv["seed"] = "42";
    kv["tier"] = "moons";

    kv["moons.n"] = "2500";
    kv["moons.noise"] = "0.3";
    kv["moons.val_fraction"] = "0.2";

    kv["mnist.data_dir"] = "/root/data/mnist";
    kv["mnist.corrupt"] = "true";
    kv["mnist.fraction"] = "0.5";
    kv["mnist.noise_sigma"] = "0.08,0.12,0.18,0.26,0.38";
    kv["mnist.blur_sigma"] = "0.5,0.75,1.0,1.5,2.0";
    kv["mnist.subset"] = "0";  // 0 = full training set

    kv["clf.moons.hidden"] = "64,64";
    kv["clf.moons.epochs"] = "60";
    kv["clf.moons.batch"] = "64";
    kv["clf.moons.lr"] = "0.001";
    kv["clf.mnist.epochs"] = "3";
    kv["clf.mnist.batch"] = "128";
    kv["clf.mnist.lr"] = "0.001";

    kv["gan.moons.latent"] = "8";
    kv["gan.moons.batch"] = "64";
    kv["gan.moons.steps"] = "20000";
    kv["gan.moons.lr_g"] = "0.001";
    kv["gan.moons.lr_d"] = "0.001";
    kv["gan.moons.beta1"] = "0.5";
    kv["gan.moons.beta2"] = "0.999";
    kv["gan.moons.r1_gamma"] = "1.0";
    kv["gan.moons.r1_interval"] = "16";
    kv["gan.moons.log_interval"] = "100";
    kv["gan.moons.snapshot_interval"] = "5000";
    kv["gan.moons.contract_interval"] = "0";

    kv["gan.mnist.latent"] = "64";
    kv["gan.mnist.batch"] = "32";
    kv["gan.mnist.steps"] = "6000";
    kv["gan.mnist.lr_g"] = "0.0002";
    kv["gan.mnist.lr_d"] = "0.0002";
    kv["gan.mnist.beta1"] = "0.5";
    kv["gan.mnist.beta2"] = "0.999";
    kv["gan.mnist.r1_gamma"] = "0.1";
    kv["gan.mnist.r1_interval"] = "16";
    kv["gan.mnist.log_interval"] = "100";
    kv["gan.mnist.snapshot_interval"] = "2000";
    kv["gan.mnist.contract_interval"] = "0";

    kv["eval.grid"] = "0.55:1.0:0.05";
    kv["eval.n_per_condition"] = "200";
    kv["eval.tau"] = "0.8";
    kv["eval.cells"] = "20";
    kv["eval.bounds"] = "-1.5:2.5:-1.25:1.75";
    kv["eval.edit_start"] = "1.0";
    kv["eval.edit_end"] = "0.5";
    kv["eval.edit_steps"] = "6";
    kv["eval.edit_reps"] = "100";
    kv["eval.msp_high"] = "1.0";
    kv["eval.msp_low"] = "0.7";
    kv["eval.grid_n_per_label"] = "10";
    return c;
}

Config Config::from_file(const std::string& path) {
    Config c = defaults();
    c.apply_file(path);
    return c;
}

void Config::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: " + path + ":" + std::to_string(lineno) + ": expected key = value");
        set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

void Config::apply_override(const std::string& key_eq_value) {
    const size_t eq = key_eq_value.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config override must look like key=value");
    set(trim(key_eq_value.substr(0, eq)), trim(key_eq_value.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
    if (key.empty()) throw std::invalid_argument("config: empty key");
    kv_[key] = value;
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string Config::get_str(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    return it->second;
}

int64_t Config::get_i64(const std::string& key) const {
    const std::string v = get_str(key);
    size_t pos = 0;
    const int64_t out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("config: key '" + key + "' is not an integer: " + v);
    return out;
}

uint64_t Config::get_u64(const std::string& key) const {
    const std::string v = get_str(key);
    size_t pos = 0;
    const uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("config: key '" + key + "' is not an integer: " + v);
    return out;
}

double Config::get_f64(const std::string& key) const {
    const std::string v = get_str(key);
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("config: key '" + key + "' is not a number: " + v);
    return out;
}

bool Config::get_bool(const std::string& key) const {
    const std::string v = get_str(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: key '" + key + "' is not a boolean: " + v);
}

std::vector<double> Config::get_f64_list(const std::string& key) const {
    std::vector<double> out;
    std::istringstream ss(get_str(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(trim(item)));
    return out;
}

std::vector<int64_t> Config::get_i64_list(const std::string& key) const {
    std::vector<int64_t> out;
    std::istringstream ss(get_str(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoll(trim(item)));
    return out;
}

std::string Config::serialize() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
    return os.str();
}

void Config::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path);
    out << serialize();
}

}  // namespace ucgan::io
