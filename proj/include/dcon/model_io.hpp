#pragma once

#include <cstdint>
#include <string>

#include "dcon/data.hpp"
#include "dcon/model.hpp"

namespace dcon {

inline constexpr int model_schema_version = 1;

struct ModelFile {
    Params params;
    ScalerState scaler;
    std::vector<std::string> feature_names;
    std::string target_name;
    double gamma = 0.0;
    std::uint64_t seed = 0;
    int epochs = 0;
    std::string stopping_reason;
    double initial_reg_loss = 0.0;
};

std::string model_to_json(const ModelFile& mf);
ModelFile model_from_json(const std::string& text);
void save_model(const std::string& path, const ModelFile& mf);
ModelFile load_model(const std::string& path);

}  // namespace dcon
