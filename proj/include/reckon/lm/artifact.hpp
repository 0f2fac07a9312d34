#pragma once

// On-disk model layout (version "lm-v1"):
//
//   <dir>/manifest.json        config, tokenizer settings, vocabulary, tensor table
//   <dir>/tensors/<name>.f32   one blob per tensor: little-endian float32, row-major
//
// Each tensor entry records its shape and the CRC-32 of its blob. ADAM
// moments are stored as extra tensors prefixed "adam_m." and "adam_v.".

#include "reckon/error.hpp"
#include "reckon/lm/model.hpp"

#include <nlohmann/json.hpp>
#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <set>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace reckon::lm {

inline const std::string artifact_version = "lm-v1";

class ArtifactError : public Error {
public:
    using Error::Error;
};

inline nlohmann::json config_to_json(const LmConfig& c) {
    return {{"vocab_size", c.vocab_size},     {"embed_dim", c.embed_dim},       {"recurrent_units", c.recurrent_units},
            {"dense_units", c.dense_units},   {"dropout_rate", c.dropout_rate}, {"seq_len", c.seq_len},
            {"learning_rate", c.learning_rate}, {"beta1", c.beta1},             {"beta2", c.beta2},
            {"epsilon", c.epsilon},           {"clip_norm", c.clip_norm},       {"batch_size", c.batch_size},
            {"epochs", c.epochs},             {"seed", c.seed}};
}

inline LmConfig config_from_json(const nlohmann::json& j) {
    LmConfig c;
    c.vocab_size      = j.at("vocab_size").get<std::size_t>();
    c.embed_dim       = j.at("embed_dim").get<std::size_t>();
    c.recurrent_units = j.at("recurrent_units").get<std::size_t>();
    c.dense_units     = j.at("dense_units").get<std::size_t>();
    c.dropout_rate    = j.at("dropout_rate").get<double>();
    c.seq_len         = j.at("seq_len").get<std::size_t>();
    c.learning_rate   = j.at("learning_rate").get<double>();
    c.beta1           = j.at("beta1").get<double>();
    c.beta2           = j.at("beta2").get<double>();
    c.epsilon         = j.at("epsilon").get<double>();
    c.clip_norm       = j.at("clip_norm").get<double>();
    c.batch_size      = j.at("batch_size").get<std::size_t>();
    c.epochs          = j.at("epochs").get<std::size_t>();
    c.seed            = j.at("seed").get<std::uint64_t>();
    return c;
}

namespace detail {

inline std::uint32_t crc32_of(const std::string& bytes) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

template <typename Scalar>
std::string tensor_bytes(const Mat<Scalar>& t) {
    static_assert(std::endian::native == std::endian::little, "blob format is little-endian");
    std::string out(static_cast<std::size_t>(t.size()) * 4, '\0');
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
        for (Eigen::Index c = 0; c < t.cols(); ++c, ++k) {
            const auto f = static_cast<float>(t(r, c));
            std::memcpy(out.data() + 4 * k, &f, 4);
        }
    }
    return out;
}

template <typename Scalar>
Mat<Scalar> tensor_from_bytes(const std::string& bytes, Eigen::Index rows, Eigen::Index cols) {
    Mat<Scalar> t(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c, ++k) {
            float f = 0.0f;
            std::memcpy(&f, bytes.data() + 4 * k, 4);
            t(r, c) = static_cast<Scalar>(f);
        }
    }
    return t;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ArtifactError("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

/// Writes the model under `dir`. Values are stored as float32, so a
/// float model round-trips exactly.
template <typename Scalar>
void save_model(const LmModel<Scalar>& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "tensors");
    const auto names  = LmParams<Scalar>::tensor_names();
    const auto params = model.params.tensors();

    nlohmann::json tensors = nlohmann::json::array();
    auto write = [&](const std::string& name, const Mat<Scalar>& t) {
        const auto bytes = detail::tensor_bytes(t);
        const auto rel   = "tensors/" + name + ".f32";
        std::ofstream out(dir / rel, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw ArtifactError("cannot write '" + (dir / rel).string() + "'");
        tensors.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}, {"file", rel},
                           {"crc32", detail::crc32_of(bytes)}});
    };
    for (std::size_t i = 0; i < params.size(); ++i) write(names[i], *params[i]);
    for (std::size_t i = 0; i < model.adam.m.size(); ++i) {
        write("adam_m." + names[i], model.adam.m[i]);
        write("adam_v." + names[i], model.adam.v[i]);
    }

    nlohmann::json manifest;
    manifest["version"]    = artifact_version;
    manifest["config"]     = config_to_json(model.config);
    manifest["vocab"]      = model.vocab.tokens();
    manifest["preprocess"] = {{"min_token_len", model.preprocess.min_token_len},
                              {"stopwords", model.preprocess.stopwords},
                              {"placeholders", model.preprocess.placeholders}};
    manifest["adam_step"]  = model.adam.t;
    manifest["tensors"]    = tensors;
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
    if (!out) throw ArtifactError("cannot write manifest in '" + dir.string() + "'");
}

template <typename Scalar>
LmModel<Scalar> load_model(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(detail::slurp(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw ArtifactError(std::string("invalid manifest: ") + e.what());
    }
    const auto version = manifest.value("version", std::string("<missing>"));
    if (version != artifact_version) {
        throw ArtifactError("artifact version '" + version + "' does not match expected '" + artifact_version + "'");
    }
    try {
        const auto config = config_from_json(manifest.at("config"));
        auto tokens       = manifest.at("vocab").get<std::vector<std::string>>();
        if (tokens.size() < 2 || tokens[0] != pad_token || tokens[1] != unk_token) {
            throw ArtifactError("vocabulary must start with PAD and UNK");
        }
        const LmVocabulary vocab(std::vector<std::string>(tokens.begin() + 2, tokens.end()));
        PreprocessConfig pre;
        const auto& pj    = manifest.at("preprocess");
        pre.min_token_len = pj.at("min_token_len").get<std::size_t>();
        pre.stopwords     = pj.at("stopwords").get<std::set<std::string>>();
        pre.placeholders  = pj.at("placeholders").get<std::set<std::string>>();

        auto model   = zero_model<Scalar>(config, vocab, std::move(pre));
        model.adam.t = manifest.at("adam_step").get<std::uint64_t>();

        std::map<std::string, Mat<Scalar>*> slots;
        const auto names = LmParams<Scalar>::tensor_names();
        auto params      = model.params.tensors();
        for (std::size_t i = 0; i < names.size(); ++i) {
            slots[names[i]]             = params[i];
            slots["adam_m." + names[i]] = &model.adam.m[i];
            slots["adam_v." + names[i]] = &model.adam.v[i];
        }
        std::size_t loaded = 0;
        for (const auto& entry : manifest.at("tensors")) {
            const auto name = entry.at("name").get<std::string>();
            auto slot       = slots.find(name);
            if (slot == slots.end()) throw ArtifactError("unknown tensor '" + name + "'");
            const auto rows = entry.at("rows").get<Eigen::Index>();
            const auto cols = entry.at("cols").get<Eigen::Index>();
            if (rows != slot->second->rows() || cols != slot->second->cols()) {
                throw ArtifactError("tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                                    std::to_string(cols) + ", config implies " + std::to_string(slot->second->rows()) +
                                    "x" + std::to_string(slot->second->cols()));
            }
            const auto bytes = detail::slurp(dir / entry.at("file").get<std::string>());
            if (bytes.size() != static_cast<std::size_t>(rows * cols) * 4) {
                throw ArtifactError("tensor '" + name + "' blob has the wrong size");
            }
            if (detail::crc32_of(bytes) != entry.at("crc32").get<std::uint32_t>()) {
                throw ArtifactError("checksum mismatch for tensor '" + name + "'");
            }
            *slot->second = detail::tensor_from_bytes<Scalar>(bytes, rows, cols);
            ++loaded;
        }
        if (loaded != slots.size()) {
            throw ArtifactError("manifest lists " + std::to_string(loaded) + " tensors, expected " +
                                std::to_string(slots.size()));
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ArtifactError(std::string("invalid manifest: ") + e.what());
    }
}

}  // namespace reckon::lm
