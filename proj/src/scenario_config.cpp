#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "mrpleio/error.hpp"
#include "mrpleio/simulate.hpp"

namespace mrpleio {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& value, const std::string& where) {
    T v{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw InputError(where + ": cannot parse '" + value + "' as a number");
    return v;
}

bool parse_bool(const std::string& value, const std::string& where) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw InputError(where + ": expected true or false, found '" + value + "'");
}

}  // namespace

ScenarioConfig parse_scenario_config(std::istream& in, const std::string& source) {
    std::vector<std::pair<std::string, std::pair<std::string, std::string>>> entries;  // key -> (value, where)
    std::map<std::string, int> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError(where + ": expected 'key = value'");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw InputError(where + ": expected 'key = value'");
        if (seen[key]++) throw InputError(where + ": key '" + key + "' repeated");
        entries.push_back({key, {value, where}});
    }

    ScenarioConfig cfg;
    for (const auto& [key, vw] : entries)
        if (key == "scenario") cfg = preset_scenario(parse_number<int>(vw.first, vw.second));

    for (const auto& [key, vw] : entries) {
        const auto& [value, where] = vw;
        if (key == "scenario") continue;
        else if (key == "p") cfg.p = parse_number<int>(value, where);
        else if (key == "k") cfg.k = parse_number<int>(value, where);
        else if (key == "n") cfg.n = parse_number<int>(value, where);
        else if (key == "maf") cfg.maf = parse_number<double>(value, where);
        else if (key == "beta_x_low") cfg.beta_x_range.low = parse_number<double>(value, where);
        else if (key == "beta_x_high") cfg.beta_x_range.high = parse_number<double>(value, where);
        else if (key == "beta_w_low") cfg.beta_w_range.low = parse_number<double>(value, where);
        else if (key == "beta_w_high") cfg.beta_w_range.high = parse_number<double>(value, where);
        else if (key == "delta_low") cfg.delta_range.low = parse_number<double>(value, where);
        else if (key == "delta_high") cfg.delta_range.high = parse_number<double>(value, where);
        else if (key == "n_pleiotropic") cfg.n_pleiotropic = parse_number<int>(value, where);
        else if (key == "regime") cfg.regime = parse_regime(value);
        else if (key == "theta") cfg.theta = parse_number<double>(value, where);
        else if (key == "gamma_x") cfg.gamma_x = parse_number<double>(value, where);
        else if (key == "gamma_y") cfg.gamma_y = parse_number<double>(value, where);
        else if (key == "gamma_w") cfg.gamma_w = parse_number<double>(value, where);
        else if (key == "n_datasets") cfg.n_datasets = parse_number<int>(value, where);
        else if (key == "seed") cfg.rng_seed = parse_number<std::uint64_t>(value, where);
        else if (key == "freeze_parameters") cfg.freeze_parameters = parse_bool(value, where);
        else throw InputError(where + ": unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return parse_scenario_config(in, path);
}

void write_scenario_config(std::ostream& out, const ScenarioConfig& cfg) {
    char buf[64];
    auto num = [&](double v) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, ptr);
    };
    out << "p = " << cfg.p << "\nk = " << cfg.k << "\nn = " << cfg.n << "\nmaf = " << num(cfg.maf)
        << "\nbeta_x_low = " << num(cfg.beta_x_range.low) << "\nbeta_x_high = " << num(cfg.beta_x_range.high)
        << "\nbeta_w_low = " << num(cfg.beta_w_range.low) << "\nbeta_w_high = " << num(cfg.beta_w_range.high)
        << "\ndelta_low = " << num(cfg.delta_range.low) << "\ndelta_high = " << num(cfg.delta_range.high)
        << "\nn_pleiotropic = " << cfg.n_pleiotropic << "\nregime = " << to_string(cfg.regime)
        << "\ntheta = " << num(cfg.theta) << "\ngamma_x = " << num(cfg.gamma_x) << "\ngamma_y = " << num(cfg.gamma_y)
        << "\ngamma_w = " << num(cfg.gamma_w_value()) << "\nn_datasets = " << cfg.n_datasets
        << "\nseed = " << cfg.rng_seed << "\nfreeze_parameters = " << (cfg.freeze_parameters ? "true" : "false")
        << '\n';
}

}  // namespace mrpleio
