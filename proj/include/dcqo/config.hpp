#pragma once

// Experiment configuration: flat "key = values" text grouped under [section]
// headers. Matrices are row-major; numbers may be separated by spaces or
// commas; '#' starts a comment.
//
//   [plant]      r_p (3, default 0 0 0), C_p (3)
//   [observer]   R_o (4), beta (2), C_o (2, optional override)
//   [observer2]  C_p (3), R_o (4), beta (2), C_o (2, optional)
//   [grid]       dt, horizon
//   [hilbert]    fock_n, dt, audit_horizon, audit_dt, safe_dim
//   [scenario]   T1, T2, qubit (plus | up), coherent
//   [initial]    z_p, q, p, w (2)
//   [run]        seed

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dcqo/observer_design.hpp"

namespace dcqo {

struct ObserverSpec {
    Row3 C_p = Row3(1.0, 0.0, 0.0);
    Mat2 R_o = Mat2::Identity();
    Vec2 beta = Vec2(-1.0, 0.0);
    std::optional<Row2> C_o;

    ObserverDesign design() const { return assemble_design(C_p, R_o, beta, C_o); }
};

struct ExperimentConfig {
    SpinPlant plant;
    ObserverSpec observer;
    ObserverSpec observer2{Row3(0.0, 1.0, 0.0), Mat2::Identity(), Vec2(0.0, -1.0), std::nullopt};

    double dt = 1e-3;
    double horizon = 100.0;

    int fock_n = 64;
    double hilbert_dt = 0.01;
    double audit_horizon = 5.0;
    double audit_dt = 0.1;
    int safe_dim = 0; // 0 selects default_safe_dim(fock_n)

    double scenario_t1 = 50.0;
    double scenario_t2 = 50.0;
    std::string scenario_qubit = "plus";
    double scenario_coherent = 0.0;

    double initial_z_p = 1.0;
    double initial_q = 0.0;
    double initial_p = 0.0;
    Vec2 initial_w = Vec2(1.0, 0.0);

    long seed = 0;

    ObserverDesign design() const { return observer.design(); }
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct RawEntry {
    int line = 0;
    std::string value;
};

using RawSection = std::map<std::string, RawEntry>;

inline std::vector<double> parse_numbers(const RawEntry& entry, const std::string& key, std::size_t count)
{
    std::string text = entry.value;
    for (char& c : text)
        if (c == ',') c = ' ';
    std::istringstream in(text);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size() || !std::isfinite(v))
            throw ConfigError("line " + std::to_string(entry.line) + ": field '" + key + "': '" + tok
                              + "' is not a finite number");
        out.push_back(v);
    }
    if (out.size() != count)
        throw ConfigError("line " + std::to_string(entry.line) + ": field '" + key + "' expects "
                          + std::to_string(count) + " value(s), got " + std::to_string(out.size()));
    return out;
}

class SectionReader {
public:
    SectionReader(const std::string& name, const RawSection& raw) : name_(name), raw_(raw) {}

    bool has(const std::string& key) const { return raw_.count(key) > 0; }

    std::vector<double> numbers(const std::string& key, std::size_t count) const
    {
        return parse_numbers(raw_.at(key), name_ + "." + key, count);
    }

    void require(const std::string& key) const
    {
        if (!has(key)) throw ConfigError("section [" + name_ + "]: missing required field '" + key + "'");
    }

    double scalar(const std::string& key, double fallback) const { return has(key) ? numbers(key, 1)[0] : fallback; }

    int integer(const std::string& key, int fallback) const
    {
        if (!has(key)) return fallback;
        const double v = numbers(key, 1)[0];
        if (v != std::floor(v))
            throw ConfigError("line " + std::to_string(raw_.at(key).line) + ": field '" + name_ + "." + key
                              + "' must be an integer");
        return static_cast<int>(v);
    }

    std::string word(const std::string& key, const std::string& fallback) const
    {
        return has(key) ? trim(raw_.at(key).value) : fallback;
    }

private:
    std::string name_;
    const RawSection& raw_;
};

inline ObserverSpec read_observer(const SectionReader& s, const ObserverSpec& base, bool needs_c_p)
{
    ObserverSpec o = base;
    s.require("R_o");
    s.require("beta");
    if (needs_c_p) s.require("C_p");
    if (s.has("C_p")) {
        const auto v = s.numbers("C_p", 3);
        o.C_p = Row3(v[0], v[1], v[2]);
    }
    const auto r = s.numbers("R_o", 4);
    o.R_o << r[0], r[1], r[2], r[3];
    const auto b = s.numbers("beta", 2);
    o.beta = Vec2(b[0], b[1]);
    if (s.has("C_o")) {
        const auto c = s.numbers("C_o", 2);
        o.C_o = Row2(c[0], c[1]);
    } else {
        o.C_o.reset();
    }
    return o;
}

} // namespace detail

inline ExperimentConfig parse_config(const std::string& text)
{
    static const std::map<std::string, std::vector<std::string>> schema = {
        {"plant", {"r_p", "C_p"}},
        {"observer", {"R_o", "beta", "C_o"}},
        {"observer2", {"C_p", "R_o", "beta", "C_o"}},
        {"grid", {"dt", "horizon"}},
        {"hilbert", {"fock_n", "dt", "audit_horizon", "audit_dt", "safe_dim"}},
        {"scenario", {"T1", "T2", "qubit", "coherent"}},
        {"initial", {"z_p", "q", "p", "w"}},
        {"run", {"seed"}},
    };

    std::map<std::string, detail::RawSection> sections;
    std::string current;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
            current = detail::trim(line.substr(1, line.size() - 2));
            if (!schema.count(current))
                throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" + current + "]");
            if (sections.count(current))
                throw ConfigError("line " + std::to_string(line_no) + ": duplicate section [" + current + "]");
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        if (current.empty()) throw ConfigError("line " + std::to_string(line_no) + ": field outside any section");
        const std::string key = detail::trim(line.substr(0, eq));
        const auto& allowed = schema.at(current);
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("line " + std::to_string(line_no) + ": unknown field '" + current + "." + key + "'");
        if (sections[current].count(key))
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate field '" + current + "." + key + "'");
        sections[current][key] = {line_no, detail::trim(line.substr(eq + 1))};
    }

    ExperimentConfig cfg;
    const detail::RawSection empty;
    auto reader = [&](const std::string& name) {
        auto it = sections.find(name);
        return detail::SectionReader(name, it == sections.end() ? empty : it->second);
    };

    {
        const auto s = reader("plant");
        s.require("C_p");
        const auto c = s.numbers("C_p", 3);
        cfg.plant.C_p = Row3(c[0], c[1], c[2]);
        if (s.has("r_p")) {
            const auto r = s.numbers("r_p", 3);
            cfg.plant.r_p = Vec3(r[0], r[1], r[2]);
        }
    }
    cfg.observer = detail::read_observer(reader("observer"), cfg.observer, false);
    cfg.observer.C_p = cfg.plant.C_p;
    if (sections.count("observer2")) cfg.observer2 = detail::read_observer(reader("observer2"), cfg.observer2, true);

    {
        const auto s = reader("grid");
        cfg.dt = s.scalar("dt", cfg.dt);
        cfg.horizon = s.scalar("horizon", cfg.horizon);
    }
    {
        const auto s = reader("hilbert");
        cfg.fock_n = s.integer("fock_n", cfg.fock_n);
        cfg.hilbert_dt = s.scalar("dt", cfg.hilbert_dt);
        cfg.audit_horizon = s.scalar("audit_horizon", cfg.audit_horizon);
        cfg.audit_dt = s.scalar("audit_dt", cfg.audit_dt);
        cfg.safe_dim = s.integer("safe_dim", cfg.safe_dim);
    }
    {
        const auto s = reader("scenario");
        cfg.scenario_t1 = s.scalar("T1", cfg.scenario_t1);
        cfg.scenario_t2 = s.scalar("T2", cfg.scenario_t2);
        cfg.scenario_qubit = s.word("qubit", cfg.scenario_qubit);
        cfg.scenario_coherent = s.scalar("coherent", cfg.scenario_coherent);
        if (cfg.scenario_qubit != "plus" && cfg.scenario_qubit != "up")
            throw ConfigError("field 'scenario.qubit' must be 'plus' or 'up'");
    }
    {
        const auto s = reader("initial");
        cfg.initial_z_p = s.scalar("z_p", cfg.initial_z_p);
        cfg.initial_q = s.scalar("q", cfg.initial_q);
        cfg.initial_p = s.scalar("p", cfg.initial_p);
        if (s.has("w")) {
            const auto w = s.numbers("w", 2);
            cfg.initial_w = Vec2(w[0], w[1]);
        }
    }
    cfg.seed = reader("run").integer("seed", 0);

    if (!(cfg.dt > 0.0)) throw ConfigError("field 'grid.dt' must be positive");
    if (!(cfg.horizon > 0.0)) throw ConfigError("field 'grid.horizon' must be positive");
    if (!(cfg.hilbert_dt > 0.0)) throw ConfigError("field 'hilbert.dt' must be positive");
    if (!(cfg.audit_dt > 0.0) || !(cfg.audit_horizon > 0.0))
        throw ConfigError("fields 'hilbert.audit_dt' and 'hilbert.audit_horizon' must be positive");
    if (cfg.scenario_t1 < 0.0 || cfg.scenario_t2 < 0.0) throw ConfigError("scenario durations must be non-negative");
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

/// Canonical text for a design; parse_config reads it back.
inline std::string format_design(const SpinPlant& plant, const ObserverDesign& d)
{
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::ostringstream out;
    out << "[plant]\n";
    out << "r_p = " << num(plant.r_p(0)) << " " << num(plant.r_p(1)) << " " << num(plant.r_p(2)) << "\n";
    out << "C_p = " << num(d.alpha(0)) << " " << num(d.alpha(1)) << " " << num(d.alpha(2)) << "\n\n";
    out << "[observer]\n";
    out << "R_o = " << num(d.R_o(0, 0)) << " " << num(d.R_o(0, 1)) << " " << num(d.R_o(1, 0)) << " "
        << num(d.R_o(1, 1)) << "\n";
    out << "beta = " << num(d.beta(0)) << " " << num(d.beta(1)) << "\n";
    out << "C_o = " << num(d.C_o(0)) << " " << num(d.C_o(1)) << "\n";
    return out.str();
}

} // namespace dcqo
