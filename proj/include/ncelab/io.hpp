#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ncelab/corpus.hpp"
#include "ncelab/model.hpp"
#include "ncelab/nce.hpp"
#include "ncelab/trainer.hpp"

namespace ncelab::io {

/// Shortest decimal that parses back to the same double ("%.17g").
std::string format_exact(double x);

std::string read_file(const std::filesystem::path& path);
/// Throws IoError when the file cannot be written.
void write_file(const std::filesystem::path& path, const std::string& contents);

/// Whitespace-separated tokens of a corpus file.
std::vector<std::string> read_corpus(const std::filesystem::path& path);

/// One token per line; line number is id.
std::string format_vocab(const Vocabulary& vocab);
Vocabulary parse_vocab(const std::string& text);

/// gt v1 <|V|>
/// <tok_0> ... <tok_{|V|-1}>
/// marginal <p_0> ... <p_{|V|-1}>
/// <|V| rows of |V| probabilities>
std::string format_truth(const GroundTruthTable& truth);
GroundTruthTable parse_truth(const std::string& text);

/// A model file carries its vocabulary.
struct ModelFile {
  Vocabulary vocab;
  ModelParams params;
};

/// lblm v1 <|V|> <d> <z_mode>
/// vocab
/// <|V| token lines>
/// target_emb <rows> <cols>      (then one line per row)
/// context_emb <rows> <cols>
/// bias <n>                       (one line)
/// log_zc <n>                     (one line)
std::string format_model(const Vocabulary& vocab, const ModelParams& params);
ModelFile parse_model(const std::string& text);

/// CSV with header epoch,cross_entropy,kl_truth,median_abs_log_z,objective,seconds.
/// Floats use 9 significant digits; kl_truth is empty without a truth table and
/// seconds is empty unless `with_seconds`.
std::string format_metrics(std::span<const MetricsRow> rows, bool with_seconds);

std::string format_proxy_line(const Vocabulary& vocab, const ProxyExample& ex);

}  // namespace ncelab::io
