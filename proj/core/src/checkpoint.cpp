#include "slotgen/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <type_traits>

#include <json.hpp>

namespace slotgen::seq2seq {

namespace {

constexpr const char* kMagic = "SLOTGEN-CKPT v1\n";

template <typename T>
const char* dtype_name() {
    return std::is_same_v<T, float> ? "f32" : "f64";
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::string& path, const Seq2SeqModel<T>& model,
                     const CheckpointMeta& meta) {
    nlohmann::ordered_json j;
    j["dtype"] = dtype_name<T>();
    j["config"] = {{"embed_dim", model.config.embed_dim},
                   {"hidden_dim", model.config.hidden_dim},
                   {"attention_dim", model.config.attention_dim},
                   {"dropout", model.config.dropout},
                   {"max_target_len", model.config.max_target_len},
                   {"beam_size", model.config.beam_size},
                   {"learning_rate", model.config.learning_rate},
                   {"lr_decay", model.config.lr_decay},
                   {"batch_size", model.config.batch_size},
                   {"max_epochs", model.config.max_epochs},
                   {"patience", model.config.patience},
                   {"seed", model.config.seed}};
    j["vocab"] = model.vocab.tokens();

    auto manifest = nlohmann::ordered_json::array();
    // for_each takes a mutable reference; the cast is write-free
    auto& params = const_cast<ParamSet<T>&>(model.params);
    params.for_each([&manifest](const std::string& name, Tensor<T>& t) {
        manifest.push_back({{"name", name}, {"shape", t.shape()}});
    });
    j["params"] = manifest;
    j["epoch"] = meta.epoch;
    j["dev_bleu_history"] = meta.dev_bleu_history;
    j["bpe_codes"] = meta.bpe_codes_ref;
    j["seed"] = meta.seed;
    if (!meta.preprocess_json.empty())
        j["preprocess"] = nlohmann::ordered_json::parse(meta.preprocess_json);

    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot write " + path);
    out.write(kMagic, static_cast<std::streamsize>(std::strlen(kMagic)));
    const std::string config = j.dump();
    write_u64(out, config.size());
    out.write(config.data(), static_cast<std::streamsize>(config.size()));
    params.for_each([&out](const std::string&, Tensor<T>& t) {
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.size() * sizeof(T)));
    });
    if (!out) raise(Errc::io_error, "short write to " + path);
}

template <typename T>
Seq2SeqModel<T> load_checkpoint(const std::string& path, CheckpointMeta* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::io_error, "cannot open " + path);

    std::string magic(std::strlen(kMagic), '\0');
    in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
    if (!in || magic != kMagic)
        raise(Errc::io_error, path + ": not a SLOTGEN-CKPT v1 file");

    const std::uint64_t config_len = read_u64(in);
    std::string config_str(config_len, '\0');
    in.read(config_str.data(), static_cast<std::streamsize>(config_len));
    if (!in) raise(Errc::io_error, path + ": truncated config block");

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(config_str);
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::io_error, path + ": bad config block: " + e.what());
    }
    if (j.value("dtype", "") != dtype_name<T>())
        raise(Errc::io_error, path + ": checkpoint dtype is " + j.value("dtype", "?") +
                                  ", expected " + dtype_name<T>());

    ModelConfig cfg;
    const auto& c = j.at("config");
    cfg.embed_dim = c.at("embed_dim").get<std::size_t>();
    cfg.hidden_dim = c.at("hidden_dim").get<std::size_t>();
    cfg.attention_dim = c.at("attention_dim").get<std::size_t>();
    cfg.dropout = c.at("dropout").get<double>();
    cfg.max_target_len = c.at("max_target_len").get<std::size_t>();
    cfg.beam_size = c.at("beam_size").get<std::size_t>();
    cfg.learning_rate = c.at("learning_rate").get<double>();
    cfg.lr_decay = c.at("lr_decay").get<double>();
    cfg.batch_size = c.at("batch_size").get<std::size_t>();
    cfg.max_epochs = c.at("max_epochs").get<std::size_t>();
    cfg.patience = c.at("patience").get<std::size_t>();
    cfg.seed = c.at("seed").get<std::uint64_t>();

    std::vector<std::string> vocab_tokens = j.at("vocab").get<std::vector<std::string>>();
    if (vocab_tokens.size() < 4) raise(Errc::io_error, path + ": vocabulary block too short");
    // reserved tokens are re-added by the vocabulary; strip them from the dump
    std::vector<std::string> extra(vocab_tokens.begin() + 4, vocab_tokens.end());
    Seq2SeqModel<T> model(cfg, Vocabulary::from_tokens(extra));

    std::size_t pi = 0;
    const auto& manifest = j.at("params");
    model.params.for_each([&](const std::string& name, Tensor<T>& t) {
        if (pi >= manifest.size()) raise(Errc::io_error, path + ": parameter manifest too short");
        const auto& entry = manifest[pi++];
        if (entry.at("name").get<std::string>() != name ||
            entry.at("shape").get<std::vector<std::size_t>>() != t.shape())
            raise(Errc::io_error, path + ": parameter mismatch at " + name);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(T)));
    });
    if (!in || pi != manifest.size())
        raise(Errc::io_error, path + ": truncated parameter blobs");

    if (meta != nullptr) {
        meta->epoch = j.value("epoch", std::size_t{0});
        meta->dev_bleu_history = j.value("dev_bleu_history", std::vector<double>{});
        meta->bpe_codes_ref = j.value("bpe_codes", "");
        meta->seed = j.value("seed", std::uint64_t{0});
        meta->preprocess_json = j.contains("preprocess") ? j.at("preprocess").dump() : "";
    }
    return model;
}

template void save_checkpoint<float>(const std::string&, const Seq2SeqModel<float>&,
                                     const CheckpointMeta&);
template void save_checkpoint<double>(const std::string&, const Seq2SeqModel<double>&,
                                      const CheckpointMeta&);
template Seq2SeqModel<float> load_checkpoint<float>(const std::string&, CheckpointMeta*);
template Seq2SeqModel<double> load_checkpoint<double>(const std::string&, CheckpointMeta*);

}  // namespace slotgen::seq2seq
