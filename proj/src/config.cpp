#include "relq/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "relq/model_io.hpp"

namespace relq {

void ExperimentConfig::apply_profile(const std::string& name) {
    if (name == "paper") {
        dqn.total_steps = 20000000;
    } else if (name == "desk") {
        dqn.total_steps = 500000;
    } else if (name == "smoke") {
        dqn.total_steps = 20000;
    } else {
        throw ConfigError("unknown profile: " + name + " (expected paper|desk|smoke)");
    }
    profile = name;
}

namespace {

struct Line {
    int number;
    std::string section;
    std::string key;
    std::string value;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const Line& l, const std::string& why) {
    throw ConfigError("config line " + std::to_string(l.number) + " [" + l.section + "] " +
                      l.key + ": " + why);
}

double parse_double(const Line& l) {
    try {
        size_t pos = 0;
        double v = std::stod(l.value, &pos);
        if (pos != l.value.size()) bad(l, "trailing characters in number");
        return v;
    } catch (const std::logic_error&) {
        bad(l, "expected a number, got '" + l.value + "'");
    }
}

int64_t parse_int(const Line& l) {
    int64_t v = 0;
    auto [p, ec] = std::from_chars(l.value.data(), l.value.data() + l.value.size(), v);
    if (ec != std::errc() || p != l.value.data() + l.value.size())
        bad(l, "expected an integer, got '" + l.value + "'");
    return v;
}

uint64_t parse_u64(const Line& l) {
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(l.value.data(), l.value.data() + l.value.size(), v);
    if (ec != std::errc() || p != l.value.data() + l.value.size())
        bad(l, "expected an unsigned integer, got '" + l.value + "'");
    return v;
}

bool parse_bool(const Line& l) {
    if (l.value == "true" || l.value == "1") return true;
    if (l.value == "false" || l.value == "0") return false;
    bad(l, "expected true|false");
}

}  // namespace

std::string region_to_string(const InitRegion& r) {
    if (r.quadrant == 0) return "annulus";
    return "quadrant:" + std::to_string(r.quadrant);
}

InitRegion region_from_string(const std::string& s) {
    if (s == "annulus") return {};
    if (s.rfind("quadrant:", 0) == 0) {
        const std::string n = s.substr(9);
        if (n.size() == 1 && n[0] >= '1' && n[0] <= '4') return {n[0] - '0'};
    }
    throw ConfigError("bad region '" + s + "' (expected annulus or quadrant:1..4)");
}

ExperimentConfig parse_config_text(const std::string& text, const ExperimentConfig& base) {
    ExperimentConfig cfg = base;
    std::istringstream in(text);
    std::string raw;
    Line l{0, "", "", ""};
    while (std::getline(in, raw)) {
        ++l.number;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.back() != ']') bad(l, "unterminated section header");
            l.section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            l.key = s;
            bad(l, "expected 'key = value'");
        }
        l.key = trim(s.substr(0, eq));
        l.value = trim(s.substr(eq + 1));

        if (l.section == "run") {
            if (l.key == "seed") cfg.seed = parse_u64(l);
            else if (l.key == "profile") cfg.apply_profile(l.value);
            else if (l.key == "region") cfg.region = region_from_string(l.value);
            else if (l.key == "head") cfg.head = score_head_from_name(l.value);
            else bad(l, "unknown key");
        } else if (l.section == "dqn") {
            if (l.key == "discount") cfg.dqn.discount = parse_double(l);
            else if (l.key == "learning_rate") cfg.dqn.learning_rate = parse_double(l);
            else if (l.key == "batch_size") cfg.dqn.batch_size = static_cast<int>(parse_int(l));
            else if (l.key == "target_alpha") cfg.dqn.target_alpha = parse_double(l);
            else if (l.key == "total_steps") cfg.dqn.total_steps = parse_int(l);
            else if (l.key == "l1_lambda") cfg.dqn.l1_lambda = parse_double(l);
            else if (l.key == "epsilon_start") cfg.dqn.epsilon_start = parse_double(l);
            else if (l.key == "epsilon_final") cfg.dqn.epsilon_final = parse_double(l);
            else if (l.key == "epsilon_decay_fraction")
                cfg.dqn.epsilon_decay_fraction = parse_double(l);
            else if (l.key == "replay_capacity") cfg.dqn.replay_capacity = parse_int(l);
            else if (l.key == "learning_starts") cfg.dqn.learning_starts = parse_int(l);
            else if (l.key == "train_reliability") cfg.dqn.train_reliability = parse_bool(l);
            else bad(l, "unknown key");
        } else if (l.section == "env") {
            if (l.key == "mass") cfg.env.mass = parse_double(l);
            else if (l.key == "resistance_gain") cfg.env.resistance_gain = parse_double(l);
            else if (l.key == "force_magnitude") cfg.env.force_magnitude = parse_double(l);
            else if (l.key == "time_step") cfg.env.time_step = parse_double(l);
            else if (l.key == "env_half_width") cfg.env.env_half_width = parse_double(l);
            else if (l.key == "goal_radius") cfg.env.goal_radius = parse_double(l);
            else if (l.key == "max_steps") cfg.env.max_steps = static_cast<int>(parse_int(l));
            else if (l.key == "init_radius_min") cfg.env.init_radius_min = parse_double(l);
            else if (l.key == "init_radius_max") cfg.env.init_radius_max = parse_double(l);
            else bad(l, "unknown key");
        } else if (l.section == "reliability") {
            if (l.key == "rnd_regularize") cfg.rnd_regularize = parse_bool(l);
            else bad(l, "unknown key");
        } else {
            bad(l, l.section.empty() ? "key before any [section]" : "unknown section");
        }
    }
    if (cfg.dqn.discount <= 0 || cfg.dqn.discount > 1)
        throw ConfigError("dqn.discount must be in (0,1]");
    if (cfg.env.mass <= 0 || cfg.env.resistance_gain <= 0 || cfg.env.time_step <= 0)
        throw ConfigError("env physical constants must be positive");
    if (cfg.env.init_radius_max > cfg.env.env_half_width * std::sqrt(2.0))
        throw ConfigError("init annulus extends outside the environment");
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path, const ExperimentConfig& base) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), base);
}

void write_resolved_config(std::ostream& os, const ExperimentConfig& cfg) {
    os.precision(std::numeric_limits<double>::max_digits10);
    os << "[run]\n";
    os << "seed = " << cfg.seed << "\n";
    os << "profile = " << cfg.profile << "\n";
    os << "region = " << region_to_string(cfg.region) << "\n";
    os << "head = " << score_head_name(cfg.head) << "\n";
    os << "[dqn]\n";
    os << "discount = " << cfg.dqn.discount << "\n";
    os << "learning_rate = " << cfg.dqn.learning_rate << "\n";
    os << "batch_size = " << cfg.dqn.batch_size << "\n";
    os << "target_alpha = " << cfg.dqn.target_alpha << "\n";
    os << "total_steps = " << cfg.dqn.total_steps << "\n";
    os << "l1_lambda = " << cfg.dqn.l1_lambda << "\n";
    os << "epsilon_start = " << cfg.dqn.epsilon_start << "\n";
    os << "epsilon_final = " << cfg.dqn.epsilon_final << "\n";
    os << "epsilon_decay_fraction = " << cfg.dqn.epsilon_decay_fraction << "\n";
    os << "replay_capacity = " << cfg.dqn.replay_capacity << "\n";
    os << "learning_starts = " << cfg.dqn.learning_starts << "\n";
    os << "train_reliability = " << (cfg.dqn.train_reliability ? "true" : "false") << "\n";
    os << "[env]\n";
    os << "mass = " << cfg.env.mass << "\n";
    os << "resistance_gain = " << cfg.env.resistance_gain << "\n";
    os << "force_magnitude = " << cfg.env.force_magnitude << "\n";
    os << "time_step = " << cfg.env.time_step << "\n";
    os << "env_half_width = " << cfg.env.env_half_width << "\n";
    os << "goal_radius = " << cfg.env.goal_radius << "\n";
    os << "max_steps = " << cfg.env.max_steps << "\n";
    os << "init_radius_min = " << cfg.env.init_radius_min << "\n";
    os << "init_radius_max = " << cfg.env.init_radius_max << "\n";
    os << "[reliability]\n";
    os << "rnd_regularize = " << (cfg.rnd_regularize ? "true" : "false") << "\n";
}

uint64_t file_fnv64(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot hash missing file " + path);
    uint64_t h = 1469598103934665603ull;
    char buf[1 << 14];
    while (f.read(buf, sizeof buf) || f.gcount() > 0) {
        for (std::streamsize i = 0; i < f.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const ExperimentConfig& cfg, const std::vector<std::string>& artifacts) {
    const auto path = std::filesystem::path(out_dir) / "manifest.txt";
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << "relq-manifest 1\n";
    f << "command = " << command << "\n";
    write_resolved_config(f, cfg);
    f << "[artifacts]\n";
    uint64_t combined = 1469598103934665603ull;
    f << std::hex;
    for (const std::string& a : artifacts) {
        const uint64_t h = file_fnv64((std::filesystem::path(out_dir) / a).string());
        f << a << " = " << h << "\n";
        combined ^= h;
        combined *= 1099511628211ull;
    }
    f << "combined = " << combined << "\n";
    if (!f.flush()) throw IoError("write failed: " + path.string());
}

}  // namespace relq
