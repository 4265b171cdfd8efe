#include "ncelab/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace ncelab::io {

std::string format_exact(double x) { return fmt::format("{:.17g}", x); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << contents;
  out.flush();
  if (!out) throw IoError(fmt::format("error writing '{}'", path.string()));
}

std::vector<std::string> read_corpus(const std::filesystem::path& path) { return tokenize(read_file(path)); }

namespace {

// Line cursor with 1-based line numbers for error messages.
class Lines {
 public:
  Lines(const std::string& text, std::string what) : what_(std::move(what)) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines_.push_back(std::move(line));
    }
  }

  bool done() const { return pos_ >= lines_.size(); }
  std::size_t line_no() const { return pos_; }

  const std::string& next() {
    if (done()) fail("unexpected end of file");
    return lines_[pos_++];
  }

  std::vector<std::string> fields() { return tokenize(next()); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(fmt::format("{}: line {}: {}", what_, pos_, msg));
  }

  double number(const std::string& s) const {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) fail(fmt::format("bad number '{}'", s));
    return v;
  }

  std::size_t count(const std::string& s) const {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      fail(fmt::format("bad integer '{}'", s));
    }
    if (pos != s.size()) fail(fmt::format("bad integer '{}'", s));
    return static_cast<std::size_t>(v);
  }

  std::vector<double> numbers(std::size_t expected) {
    const auto f = fields();
    if (f.size() != expected) fail(fmt::format("expected {} values, found {}", expected, f.size()));
    std::vector<double> out;
    out.reserve(expected);
    for (const auto& s : f) out.push_back(number(s));
    return out;
  }

 private:
  std::string what_;
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

void append_row(std::string& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ' ';
    out += format_exact(values[i]);
  }
  out += '\n';
}

}  // namespace

std::string format_vocab(const Vocabulary& vocab) {
  std::string out;
  for (const auto& w : vocab.words()) {
    out += w;
    out += '\n';
  }
  return out;
}

Vocabulary parse_vocab(const std::string& text) {
  Lines lines(text, "vocabulary");
  std::vector<std::string> words;
  while (!lines.done()) {
    const auto f = lines.fields();
    if (f.size() != 1) lines.fail("expected exactly one token");
    words.push_back(f[0]);
  }
  try {
    return Vocabulary(std::move(words));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(fmt::format("vocabulary: {}", e.what()));
  }
}

std::string format_truth(const GroundTruthTable& truth) {
  const std::size_t v = truth.vocab_size();
  std::string out = fmt::format("gt v1 {}\n", v);
  for (std::size_t i = 0; i < v; ++i) {
    if (i) out += ' ';
    out += truth.words.empty() ? fmt::format("w{}", i) : truth.words[i];
  }
  out += "\nmarginal";
  for (double p : truth.context_marginal) out += ' ' + format_exact(p);
  out += '\n';
  for (std::size_t c = 0; c < v; ++c) append_row(out, truth.row(static_cast<ContextId>(c)));
  return out;
}

GroundTruthTable parse_truth(const std::string& text) {
  Lines lines(text, "ground truth");
  const auto header = lines.fields();
  if (header.size() != 3 || header[0] != "gt") lines.fail("expected header 'gt v1 <|V|>'");
  if (header[1] != "v1") lines.fail(fmt::format("unsupported ground truth version '{}'", header[1]));
  const std::size_t v = lines.count(header[2]);
  GroundTruthTable truth;
  truth.words = lines.fields();
  if (truth.words.size() != v) lines.fail(fmt::format("expected {} vocabulary tokens", v));
  auto marginal = lines.fields();
  if (marginal.empty() || marginal[0] != "marginal") lines.fail("expected 'marginal' line");
  if (marginal.size() != v + 1) lines.fail(fmt::format("expected {} marginal values", v));
  for (std::size_t i = 1; i < marginal.size(); ++i) truth.context_marginal.push_back(lines.number(marginal[i]));
  truth.cond.reserve(v * v);
  for (std::size_t c = 0; c < v; ++c) {
    const auto row = lines.numbers(v);
    truth.cond.insert(truth.cond.end(), row.begin(), row.end());
  }
  try {
    truth.validate();
    Vocabulary check(truth.words);
  } catch (const Error& e) {
    throw ParseError(fmt::format("ground truth: {}", e.what()));
  }
  return truth;
}

std::string format_model(const Vocabulary& vocab, const ModelParams& params) {
  if (vocab.size() != params.vocab_size()) throw Error("model and vocabulary sizes differ");
  const std::size_t v = params.vocab_size();
  const std::size_t d = params.dim();
  std::string out = fmt::format("lblm v1 {} {} {}\nvocab\n", v, d, to_string(params.z_mode));
  out += format_vocab(vocab);
  out += fmt::format("target_emb {} {}\n", v, d);
  for (std::size_t i = 0; i < v; ++i) append_row(out, params.target_emb.row(i));
  out += fmt::format("context_emb {} {}\n", v + 1, d);
  for (std::size_t i = 0; i <= v; ++i) append_row(out, params.context_emb.row(i));
  out += fmt::format("bias {}\n", v);
  append_row(out, params.bias);
  out += fmt::format("log_zc {}\n", v + 1);
  append_row(out, params.log_zc);
  return out;
}

ModelFile parse_model(const std::string& text) {
  Lines lines(text, "model");
  const auto header = lines.fields();
  if (header.size() != 5 || header[0] != "lblm") lines.fail("expected header 'lblm v1 <|V|> <d> <z_mode>'");
  if (header[1] != "v1") lines.fail(fmt::format("unsupported model version '{}'", header[1]));
  const std::size_t v = lines.count(header[2]);
  const std::size_t d = lines.count(header[3]);
  if (v < 2 || d < 1) lines.fail("bad model dimensions");
  ZMode mode;
  try {
    mode = parse_zmode(header[4]);
  } catch (const Error& e) {
    lines.fail(e.what());
  }
  if (lines.fields() != std::vector<std::string>{"vocab"}) lines.fail("expected 'vocab'");
  std::vector<std::string> words;
  for (std::size_t i = 0; i < v; ++i) {
    const auto f = lines.fields();
    if (f.size() != 1) lines.fail("expected one vocabulary token");
    words.push_back(f[0]);
  }
  ModelFile file{Vocabulary{}, ModelParams(v, d, mode)};
  try {
    file.vocab = Vocabulary(std::move(words));
  } catch (const Error& e) {
    lines.fail(e.what());
  }

  auto block_header = [&](const std::string& name, std::vector<std::size_t> dims) {
    const auto f = lines.fields();
    std::vector<std::string> expected{name};
    for (auto x : dims) expected.push_back(std::to_string(x));
    if (f != expected) lines.fail(fmt::format("expected block header '{}'", fmt::join(expected, " ")));
  };
  block_header("target_emb", {v, d});
  for (std::size_t i = 0; i < v; ++i) {
    const auto row = lines.numbers(d);
    std::copy(row.begin(), row.end(), file.params.target_emb.row(i).begin());
  }
  block_header("context_emb", {v + 1, d});
  for (std::size_t i = 0; i <= v; ++i) {
    const auto row = lines.numbers(d);
    std::copy(row.begin(), row.end(), file.params.context_emb.row(i).begin());
  }
  block_header("bias", {v});
  file.params.bias = lines.numbers(v);
  block_header("log_zc", {v + 1});
  file.params.log_zc = lines.numbers(v + 1);
  if (!file.params.all_finite()) lines.fail("non-finite parameter");
  if (mode == ZMode::FIXED_ONE)
    for (double z : file.params.log_zc)
      if (z != 0.0) lines.fail("log_zc must be zero when z_mode is fixed");
  return file;
}

std::string format_metrics(std::span<const MetricsRow> rows, bool with_seconds) {
  std::string out = "epoch,cross_entropy,kl_truth,median_abs_log_z,objective,seconds\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{:.9g},{},{:.9g},{:.9g},{}\n", r.epoch, r.cross_entropy,
                       r.kl_truth ? fmt::format("{:.9g}", *r.kl_truth) : std::string{}, r.median_abs_log_z,
                       r.objective, with_seconds ? fmt::format("{:.9g}", r.seconds) : std::string{});
  }
  return out;
}

std::string format_proxy_line(const Vocabulary& vocab, const ProxyExample& ex) {
  std::string out = vocab.context_token(ex.context) + ' ' + vocab.word_of(ex.w_true) + " |";
  for (WordId w : ex.w_noise) out += ' ' + vocab.word_of(w);
  return out;
}

}  // namespace ncelab::io
