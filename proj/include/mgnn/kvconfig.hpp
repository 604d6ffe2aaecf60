#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgnn {

/// Flat key=value text config. Blank lines and lines starting with '#' are
/// skipped; later keys override earlier ones.
using KvConfig = std::map<std::string, std::string>;

inline KvConfig parse_kv(std::istream& in, const std::string& origin = "<config>") {
    KvConfig kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t a = line.find_first_not_of(" \t");
        if (a == std::string::npos || line[a] == '#') continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": expected key=value");
        std::string key = line.substr(a, eq - a);
        std::string val = line.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::size_t v = val.find_first_not_of(" \t");
        val = v == std::string::npos ? "" : val.substr(v);
        while (!val.empty() && (val.back() == ' ' || val.back() == '\t')) val.pop_back();
        kv[key] = val;
    }
    return kv;
}

inline KvConfig load_kv_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    return parse_kv(in, path);
}

inline std::string kv_get(const KvConfig& kv, const std::string& key, const std::string& dflt) {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
}

inline double kv_get_double(const KvConfig& kv, const std::string& key, double dflt) {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : std::stod(it->second);
}

inline long kv_get_long(const KvConfig& kv, const std::string& key, long dflt) {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : std::stol(it->second);
}

inline std::vector<std::size_t> kv_get_size_list(const KvConfig& kv, const std::string& key,
                                                 std::vector<std::size_t> dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    std::vector<std::size_t> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stoull(tok));
    return out;
}

} // namespace mgnn
