#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "mgnn/tensor.hpp"

namespace mgnn {

/// JSON map name -> {shape, row-major values}. nlohmann serializes doubles
/// with shortest round-trip representation, so reload is bit-exact.
inline void save_checkpoint(const ParameterStore& params, const std::string& path) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Parameter& p = params.at(i);
        j[p.name] = {{"shape", {p.value.rows, p.value.cols}}, {"values", p.value.data}};
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump(1) << "\n";
}

inline void load_checkpoint(ParameterStore& params, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = params.at(i);
        if (!j.contains(p.name))
            throw std::runtime_error("checkpoint missing parameter: " + p.name);
        const auto& e = j.at(p.name);
        std::size_t r = e.at("shape").at(0).get<std::size_t>();
        std::size_t c = e.at("shape").at(1).get<std::size_t>();
        if (r != p.value.rows || c != p.value.cols)
            throw std::runtime_error("checkpoint shape mismatch for " + p.name);
        p.value.data = e.at("values").get<std::vector<double>>();
        if (p.value.data.size() != r * c)
            throw std::runtime_error("checkpoint value count mismatch for " + p.name);
    }
}

} // namespace mgnn
