#include "abstain/io/model_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "abstain/common.hpp"

namespace abstain {

namespace {

constexpr int kModelFormatVersion = 1;

std::string encode_params(const Model& m) {
    std::ostringstream out;
    out.precision(17);
    auto block = [&out](const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
        out << "\n";
    };
    block(m.w1);
    block(m.b1);
    block(m.w2);
    block(m.b2);
    return out.str();
}

std::vector<double> decode_block(const std::string& line, std::size_t expected,
                                 const char* name) {
    std::istringstream ss(line);
    std::vector<double> v;
    double x;
    while (ss >> x) v.push_back(x);
    if (v.size() != expected)
        throw std::runtime_error("load_model: parameter block '" + std::string(name) + "' has " +
                                 std::to_string(v.size()) + " entries, expected " +
                                 std::to_string(expected));
    return v;
}

std::string checksum_hex(const std::string& text) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(text));
    return buf;
}

}  // namespace

void save_model(const std::string& path, const Model& model) {
    const std::string params = encode_params(model);
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["kind"] = model.kind == Model::Kind::linear ? "linear" : "mlp";
    j["input_dim"] = model.input_dim;
    j["output_count"] = model.output_count;
    j["hidden_width"] = model.hidden_width;
    j["clamp"] = model.clamp;
    j["provenance"] = {{"loss", model.loss_tag}, {"mu", model.mu},
                       {"phi", model.phi_tag},   {"cost", model.cost},
                       {"seed", model.seed}};
    j["checksum_fnv1a64"] = checksum_hex(params);
    j["params"] = params;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_model: cannot open " + path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_model: malformed file " + path + ": " + e.what());
    }
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
        throw std::runtime_error("load_model: unsupported format version " +
                                 std::to_string(version) + " (this build reads " +
                                 std::to_string(kModelFormatVersion) + ")");
    Model m;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear")
        m.kind = Model::Kind::linear;
    else if (kind == "mlp")
        m.kind = Model::Kind::mlp;
    else
        throw std::runtime_error("load_model: unknown kind '" + kind + "'");
    m.input_dim = j.at("input_dim").get<int>();
    m.output_count = j.at("output_count").get<int>();
    m.hidden_width = j.at("hidden_width").get<int>();
    m.clamp = j.at("clamp").get<double>();
    const auto& prov = j.at("provenance");
    m.loss_tag = prov.at("loss").get<std::string>();
    m.mu = prov.at("mu").get<double>();
    m.phi_tag = prov.at("phi").get<std::string>();
    m.cost = prov.at("cost").get<double>();
    m.seed = prov.at("seed").get<std::uint64_t>();

    const std::string params = j.at("params").get<std::string>();
    if (checksum_hex(params) != j.at("checksum_fnv1a64").get<std::string>())
        throw std::runtime_error("load_model: checksum mismatch in " + path);

    std::istringstream ss(params);
    std::string l1, l2, l3, l4;
    std::getline(ss, l1);
    std::getline(ss, l2);
    std::getline(ss, l3);
    std::getline(ss, l4);
    const bool mlp = m.kind == Model::Kind::mlp;
    const std::size_t rows1 = mlp ? static_cast<std::size_t>(m.hidden_width)
                                  : static_cast<std::size_t>(m.output_count);
    m.w1 = decode_block(l1, rows1 * static_cast<std::size_t>(m.input_dim), "w1");
    m.b1 = decode_block(l2, rows1, "b1");
    if (mlp) {
        m.w2 = decode_block(l3, static_cast<std::size_t>(m.output_count) * m.hidden_width, "w2");
        m.b2 = decode_block(l4, static_cast<std::size_t>(m.output_count), "b2");
    } else {
        m.w2 = decode_block(l3, 0, "w2");
        m.b2 = decode_block(l4, 0, "b2");
    }
    return m;
}

}  // namespace abstain
