#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ncelab/io.hpp"
#include "test_support.hpp"

using namespace ncelab;

namespace {

Vocabulary abc() { return Vocabulary({"a", "b", "c"}); }

bool same_params(const ModelParams& a, const ModelParams& b) {
  if (a.size() != b.size() || a.z_mode != b.z_mode) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.coord(i) != b.coord(i)) return false;
  return true;
}

}  // namespace

TEST_CASE("format_exact round trips doubles") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::nextafter(1.0, 2.0)})
    CHECK(std::stod(io::format_exact(x)) == x);
}

TEST_CASE("vocabulary round trip and errors") {
  const auto v = abc();
  CHECK(io::parse_vocab(io::format_vocab(v)) == v);
  CHECK_THROWS_AS(io::parse_vocab("a\nb\na\n"), ParseError);
  CHECK_THROWS_AS(io::parse_vocab("a b\nc\n"), ParseError);
  CHECK_THROWS_AS(io::parse_vocab("a\n"), ParseError);
}

TEST_CASE("ground truth round trip") {
  ZipfTruthOptions o;
  o.vocab_size = 5;
  auto t = make_zipf_truth(o);
  const auto back = io::parse_truth(io::format_truth(t));
  CHECK(back.words == t.words);
  CHECK(back.cond == t.cond);
  CHECK(back.context_marginal == t.context_marginal);
}

TEST_CASE("ground truth parse errors") {
  CHECK_THROWS_AS(io::parse_truth("gt v2 2\na b\nmarginal 0.5 0.5\n0.5 0.5\n0.5 0.5\n"), ParseError);
  CHECK_THROWS_AS(io::parse_truth("gt v1 2\na b\nmarginal 0.5 0.5\n0.5 0.5\n"), ParseError);
  CHECK_THROWS_AS(io::parse_truth("gt v1 2\na b\nmarginal 0.5 0.5\n0.5 0.6\n0.5 0.5\n"), ParseError);
  CHECK_NOTHROW(io::parse_truth("gt v1 2\na b\nmarginal 0.5 0.5\n0.5 0.5\n0.25 0.75\n"));
}

TEST_CASE("model round trip is bit-exact") {
  for (ZMode mode : {ZMode::EXACT, ZMode::LEARNED_ZC, ZMode::FIXED_ONE}) {
    const auto p = ncelab::testing::random_model(3, 4, mode, 8);
    const auto text = io::format_model(abc(), p);
    const auto file = io::parse_model(text);
    CHECK(file.vocab == abc());
    CHECK(same_params(file.params, p));
    CHECK(io::format_model(file.vocab, file.params) == text);
  }
}

TEST_CASE("model layout") {
  const ModelParams p(3, 2, ZMode::LEARNED_ZC);
  const auto text = io::format_model(abc(), p);
  CHECK(text.rfind("lblm v1 3 2 learned\nvocab\na\nb\nc\ntarget_emb 3 2\n", 0) == 0);
  CHECK(text.find("context_emb 4 2\n") != std::string::npos);
  CHECK(text.find("bias 3\n0 0 0\n") != std::string::npos);
  CHECK(text.find("log_zc 4\n0 0 0 0\n") != std::string::npos);
}

TEST_CASE("model parse errors") {
  const auto good = io::format_model(abc(), ModelParams(3, 2, ZMode::FIXED_ONE));
  CHECK_THROWS_AS(io::parse_model("nope\n"), ParseError);
  CHECK_THROWS_AS(io::parse_model(good.substr(0, good.size() / 2)), ParseError);
  std::string bad_zc = good;
  bad_zc.replace(bad_zc.rfind("0 0 0 0"), 7, "0 1 0 0");
  CHECK_THROWS_WITH_AS(io::parse_model(bad_zc), doctest::Contains("log_zc"), ParseError);
  std::string bad_num = good;
  bad_num.replace(bad_num.rfind("0 0 0 0"), 7, "0 x 0 0");
  CHECK_THROWS_AS(io::parse_model(bad_num), ParseError);
  std::string bad_mode = good;
  bad_mode.replace(bad_mode.find("fixed"), 5, "other");
  CHECK_THROWS_AS(io::parse_model(bad_mode), ParseError);
}

TEST_CASE("metrics CSV") {
  std::vector<MetricsRow> rows(2);
  rows[0] = {1, 1.5, 0.25, 0.125, -3.0, 0.5};
  rows[1] = {2, 1.25, std::nullopt, 0.0625, -2.0, 1.0};
  CHECK(io::format_metrics(rows, false) ==
        "epoch,cross_entropy,kl_truth,median_abs_log_z,objective,seconds\n"
        "1,1.5,0.25,0.125,-3,\n"
        "2,1.25,,0.0625,-2,\n");
  CHECK(io::format_metrics(rows, true).find("1,1.5,0.25,0.125,-3,0.5\n") != std::string::npos);
}

TEST_CASE("proxy line") {
  const auto v = abc();
  CHECK(io::format_proxy_line(v, {3, 1, {0, 2, 2}}) == "<s> b | a c c");
  CHECK(io::format_proxy_line(v, {0, 2, {1}}) == "a c | b");
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "ncelab_test_io";
  std::filesystem::create_directories(dir);
  io::write_file(dir / "c.txt", "a b\n c  a\n");
  CHECK(io::read_corpus(dir / "c.txt") == std::vector<std::string>{"a", "b", "c", "a"});
  CHECK_THROWS_AS(io::read_file(dir / "missing.txt"), IoError);
  CHECK_THROWS_AS(io::write_file(dir / "no" / "such" / "dir.txt", "x"), IoError);
  std::filesystem::remove_all(dir);
}
