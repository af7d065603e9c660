#pragma once

#include <string>
#include <vector>

#include "slotgen/seq2seq.hpp"

namespace slotgen::seq2seq {

/// Everything a checkpoint carries besides config, vocabulary and weights.
struct CheckpointMeta {
    std::size_t epoch = 0;
    std::vector<double> dev_bleu_history;
    /// Reference to the BPE codes file, relative to the checkpoint location;
    /// empty when the pipeline ran without subword encoding.
    std::string bpe_codes_ref;
    std::uint64_t seed = 0;
    /// Input-side preprocessing needed to run generation from raw pages
    /// (tag map, normalized slot types); JSON, empty when not applicable.
    std::string preprocess_json;
};

/// Single-file container: header line `SLOTGEN-CKPT v1`, a length-prefixed
/// JSON block (config, vocabulary, parameter manifest, metadata), then the
/// raw little-endian parameter blobs in manifest order.
template <typename T>
void save_checkpoint(const std::string& path, const Seq2SeqModel<T>& model,
                     const CheckpointMeta& meta);

template <typename T>
Seq2SeqModel<T> load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

extern template void save_checkpoint<float>(const std::string&, const Seq2SeqModel<float>&,
                                            const CheckpointMeta&);
extern template void save_checkpoint<double>(const std::string&, const Seq2SeqModel<double>&,
                                             const CheckpointMeta&);
extern template Seq2SeqModel<float> load_checkpoint<float>(const std::string&, CheckpointMeta*);
extern template Seq2SeqModel<double> load_checkpoint<double>(const std::string&,
                                                             CheckpointMeta*);

}  // namespace slotgen::seq2seq
