#include "dcon/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "dcon/errors.hpp"

namespace dcon {

using nlohmann::json;

namespace {

std::string g17(double v) { return fmt::format("{:.17g}", v); }

std::string vec_text(const Eigen::VectorXd& v) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + g17(v(i));
    return out + "]";
}

std::string range_text(const ColumnRange& r) { return "[" + g17(r.min) + ", " + g17(r.max) + "]"; }

std::string str_text(const std::string& s) { return json(s).dump(); }

double num(const json& j, const char* what) {
    if (!j.is_number()) throw validation_error(std::string("model file: '") + what + "' must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw validation_error(std::string("model file: '") + what + "' is not finite");
    return v;
}

Eigen::VectorXd json_vec(const json& j, const char* what, int expect) {
    if (!j.is_array() || static_cast<int>(j.size()) != expect)
        throw validation_error(std::string("model file: '") + what + "' has the wrong length");
    Eigen::VectorXd v(expect);
    for (int i = 0; i < expect; ++i) v(i) = num(j[i], what);
    return v;
}

ColumnRange json_range(const json& j, const char* what) {
    const Eigen::VectorXd v = json_vec(j, what, 2);
    return {v(0), v(1)};
}

const json& field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw validation_error(std::string("model file: missing field '") + key + "'");
    return *it;
}

}  // namespace

// Written by hand so every number carries 17 significant digits.
std::string model_to_json(const ModelFile& mf) {
    const Params& p = mf.params;
    std::string W = "[";
    for (int l = 0; l < p.N(); ++l) W += std::string(l ? ",\n    " : "\n    ") + vec_text(p.W.row(l).transpose());
    W += "\n  ]";
    std::string feats = "[";
    for (std::size_t i = 0; i < mf.scaler.features.size(); ++i) feats += (i ? ", " : "") + range_text(mf.scaler.features[i]);
    feats += "]";
    std::string names = "[";
    for (std::size_t i = 0; i < mf.feature_names.size(); ++i) names += (i ? ", " : "") + str_text(mf.feature_names[i]);
    names += "]";

    std::string out = "{\n";
    out += fmt::format("  \"schema_version\": {},\n", model_schema_version);
    out += fmt::format("  \"n\": {},\n  \"N\": {},\n", p.n(), p.N());
    out += "  \"alpha\": " + vec_text(p.alpha) + ",\n";
    out += "  \"W\": " + W + ",\n";
    out += "  \"b\": " + vec_text(p.b) + ",\n";
    out += "  \"feature_names\": " + names + ",\n";
    out += "  \"target_name\": " + str_text(mf.target_name) + ",\n";
    out += "  \"scaler\": {\n";
    out += std::string("    \"fitted\": ") + (mf.scaler.fitted ? "true" : "false") + ",\n";
    out += "    \"features\": " + feats + ",\n";
    out += "    \"target\": " + range_text(mf.scaler.target) + "\n  },\n";
    out += "  \"training\": {\n";
    out += "    \"gamma\": " + g17(mf.gamma) + ",\n";
    out += fmt::format("    \"seed\": {},\n", mf.seed);
    out += fmt::format("    \"epochs\": {},\n", mf.epochs);
    out += "    \"stopping_reason\": " + str_text(mf.stopping_reason) + ",\n";
    out += "    \"initial_reg_loss\": " + g17(mf.initial_reg_loss) + "\n  }\n}\n";
    return out;
}

ModelFile model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw validation_error(std::string("model file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw validation_error("model file: top level must be an object");
    const json& ver = field(j, "schema_version");
    if (!ver.is_number_integer() || ver.get<int>() != model_schema_version)
        throw validation_error("model file: unsupported schema_version");

    ModelFile mf;
    try {
        const int n = field(j, "n").get<int>();
        const int N = field(j, "N").get<int>();
        if (n < 1 || N < 1) throw validation_error("model file: n and N must be positive");
        Params& p = mf.params;
        p = zero_params(N, n);
        p.alpha = json_vec(field(j, "alpha"), "alpha", N);
        p.b = json_vec(field(j, "b"), "b", N);
        const json& W = field(j, "W");
        if (!W.is_array() || static_cast<int>(W.size()) != N) throw validation_error("model file: 'W' has the wrong shape");
        for (int l = 0; l < N; ++l) p.W.row(l) = json_vec(W[l], "W", n).transpose();

        mf.feature_names = field(j, "feature_names").get<std::vector<std::string>>();
        if (static_cast<int>(mf.feature_names.size()) != n)
            throw validation_error("model file: feature_names length does not match n");
        mf.target_name = field(j, "target_name").get<std::string>();

        const json& sc = field(j, "scaler");
        mf.scaler.fitted = field(sc, "fitted").get<bool>();
        const json& feats = field(sc, "features");
        if (!feats.is_array() || (mf.scaler.fitted && static_cast<int>(feats.size()) != n))
            throw validation_error("model file: scaler features do not match n");
        for (const auto& r : feats) mf.scaler.features.push_back(json_range(r, "scaler.features"));
        mf.scaler.target = json_range(field(sc, "target"), "scaler.target");

        const json& tr = field(j, "training");
        mf.gamma = num(field(tr, "gamma"), "gamma");
        mf.seed = field(tr, "seed").get<std::uint64_t>();
        mf.epochs = field(tr, "epochs").get<int>();
        mf.stopping_reason = field(tr, "stopping_reason").get<std::string>();
        mf.initial_reg_loss = num(field(tr, "initial_reg_loss"), "initial_reg_loss");
    } catch (const json::exception& e) {
        throw validation_error(std::string("model file: ") + e.what());
    }
    return mf;
}

void save_model(const std::string& path, const ModelFile& mf) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw validation_error("cannot write model file '" + path + "'");
    f << model_to_json(mf);
    if (!f) throw validation_error("failed writing model file '" + path + "'");
}

ModelFile load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw validation_error("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace dcon
