#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "conflictforge/errors.hpp"
#include "conflictforge/gateway.hpp"
#include "conflictforge/text.hpp"

namespace conflictforge {

/// Minimal INI reader: [section] headers, key = value lines, '#' comments,
/// ${VAR} environment interpolation in values.
class IniFile {
public:
    static IniFile parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    static IniFile parse(const std::string& content) {
        IniFile ini;
        std::istringstream in(content);
        std::string line, section;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto t = text::trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']') throw ConfigError("unterminated section at line " +
                                                       std::to_string(lineno));
                section = text::trim(t.substr(1, t.size() - 2));
                continue;
            }
            auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("expected key = value at line " + std::to_string(lineno));
            std::string key = text::trim(t.substr(0, eq));
            std::string value = interpolate(text::trim(t.substr(eq + 1)));
            ini.values_[section][key] = value;
        }
        return ini;
    }

    std::vector<std::string> sections_with_prefix(const std::string& prefix) const {
        std::vector<std::string> out;
        for (auto& [name, _] : values_)
            if (name.rfind(prefix, 0) == 0) out.push_back(name);
        return out;
    }

    std::optional<std::string> get(const std::string& section, const std::string& key) const {
        auto s = values_.find(section);
        if (s == values_.end()) return std::nullopt;
        auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        return k->second;
    }

    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const {
        return get(section, key).value_or(fallback);
    }

private:
    static std::string interpolate(std::string value) {
        size_t pos = 0;
        while ((pos = value.find("${", pos)) != std::string::npos) {
            auto end = value.find('}', pos);
            if (end == std::string::npos) break;
            std::string var = value.substr(pos + 2, end - pos - 2);
            const char* env = std::getenv(var.c_str());
            value.replace(pos, end - pos + 1, env ? env : "");
            pos += env ? std::string(env).size() : 0;
        }
        return value;
    }

    std::map<std::string, std::map<std::string, std::string>> values_;
};

struct RunConfig {
    std::string run_id = "run";
    std::string entity_dataset;
    std::string boolean_dataset;
    std::string subject_endpoint = "subject";
    std::string generator_endpoint = "generator";
    std::string judge_kind = "llm";  // remote | llm | scripted
    std::string judge_endpoint = "judge";
    std::string judge_url;           // remote judge only
    uint64_t seed = 7;
    uint64_t options_seed = 11;
    uint64_t order_seed = 13;
    uint64_t sampling_seed = 17;
    std::vector<std::string> scenario_kinds = {"SingleSource", "MultiSource"};
    std::vector<double> popularity_edges = {2, 2.5, 3, 3.5, 4, 4.5, 5};
    std::map<std::string, EndpointConfig> endpoints;

    const EndpointConfig& endpoint(const std::string& name) const {
        auto it = endpoints.find(name);
        if (it == endpoints.end()) throw ConfigError("undefined endpoint: " + name);
        return it->second;
    }

    void validate() const {
        for (auto& [_, cfg] : endpoints) cfg.validate();
        endpoint(subject_endpoint);
        endpoint(generator_endpoint);
        if (judge_kind == "llm") endpoint(judge_endpoint);
        for (size_t i = 1; i < popularity_edges.size(); ++i)
            if (popularity_edges[i] <= popularity_edges[i - 1])
                throw ConfigError("popularity bucket edges must be strictly increasing");
    }

    static RunConfig from_ini(const IniFile& ini) {
        RunConfig rc;
        rc.run_id = ini.get_or("run", "run_id", rc.run_id);
        rc.entity_dataset = ini.get_or("run", "entity_dataset", "");
        rc.boolean_dataset = ini.get_or("run", "boolean_dataset", "");
        rc.subject_endpoint = ini.get_or("run", "subject_endpoint", rc.subject_endpoint);
        rc.generator_endpoint = ini.get_or("run", "generator_endpoint", rc.generator_endpoint);
        rc.judge_kind = ini.get_or("run", "judge", rc.judge_kind);
        rc.judge_endpoint = ini.get_or("run", "judge_endpoint", rc.judge_endpoint);
        rc.judge_url = ini.get_or("run", "judge_url", "");
        rc.seed = std::stoull(ini.get_or("run", "seed", std::to_string(rc.seed)));
        rc.options_seed =
            std::stoull(ini.get_or("run", "options_seed", std::to_string(rc.options_seed)));
        rc.order_seed = std::stoull(ini.get_or("run", "order_seed", std::to_string(rc.order_seed)));
        rc.sampling_seed =
            std::stoull(ini.get_or("run", "sampling_seed", std::to_string(rc.sampling_seed)));
        if (auto kinds = ini.get("run", "scenarios")) rc.scenario_kinds = split_list(*kinds);
        if (auto edges = ini.get("run", "popularity_edges")) {
            rc.popularity_edges.clear();
            for (auto& e : split_list(*edges)) rc.popularity_edges.push_back(std::stod(e));
        }
        for (auto& section : ini.sections_with_prefix("endpoint.")) {
            EndpointConfig cfg;
            cfg.name = section.substr(std::string("endpoint.").size());
            cfg.base_url = ini.get_or(section, "base_url", "");
            cfg.model = ini.get_or(section, "model", "");
            cfg.decode.temperature = std::stod(ini.get_or(section, "temperature", "0"));
            cfg.decode.max_tokens = std::stoi(ini.get_or(section, "max_tokens", "512"));
            cfg.auth_env_var = ini.get_or(section, "auth_env_var", "");
            cfg.requests_per_minute = std::stoi(ini.get_or(section, "requests_per_minute", "60"));
            cfg.max_in_flight = std::stoi(ini.get_or(section, "max_in_flight", "4"));
            rc.endpoints[cfg.name] = cfg;
        }
        return rc;
    }

private:
    static std::vector<std::string> split_list(const std::string& csv) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream ss(csv);
        while (std::getline(ss, cur, ',')) {
            auto t = text::trim(cur);
            if (!t.empty()) out.push_back(t);
        }
        return out;
    }
};

}  // namespace conflictforge
