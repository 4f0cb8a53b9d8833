#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "hyperslim/checkpoint.hpp"
#include "hyperslim/config.hpp"
#include "hyperslim/error.hpp"
#include "hyperslim/image.hpp"
#include "hyperslim/prune.hpp"
#include "support/oracles.hpp"

using namespace hyperslim;
using namespace hyperslim::testing;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hyperslim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("hpck encodes the documented layout") {
  const std::vector<NamedTensor> tensors = {
      {"a", Tensor({2}, std::vector<double>{1.0, -0.5})}};
  const std::string bytes = encode_hpck(tensors);
  // magic 4 + version 4 + count 4 + name len 2 + name 1 + ndim 1 + dim 4 + 16
  REQUIRE(bytes.size() == 36);
  CHECK(bytes.substr(0, 4) == "HPCK");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 1);
  CHECK(bytes[12] == 1);
  CHECK(bytes[14] == 'a');
  CHECK(bytes[15] == 1);
  CHECK(bytes[16] == 2);
  // 1.0 little endian
  CHECK(static_cast<unsigned char>(bytes[27]) == 0x3F);
  CHECK(static_cast<unsigned char>(bytes[26]) == 0xF0);

  const auto back = decode_hpck(bytes);
  REQUIRE(back.size() == 1);
  CHECK(back[0].first == "a");
  CHECK(bit_identical(back[0].second, tensors[0].second));

  CHECK_THROWS_AS(decode_hpck("HPCX" + bytes.substr(4)), FormatError);
  CHECK_THROWS_AS(decode_hpck(bytes.substr(0, bytes.size() - 1)), FormatError);
  CHECK_THROWS_AS(decode_hpck(bytes + "x"), FormatError);
  std::string bad_version = bytes;
  bad_version[4] = 2;
  CHECK_THROWS_AS(decode_hpck(bad_version), FormatError);
}

TEST_CASE("network checkpoints round-trip byte for byte") {
  const NetworkConfig cfg = default_hyperprior_config(4, 6);
  Network net = build_hyperprior(cfg);
  const auto dir = scratch_dir("ckpt");
  save_network(net, dir / "a.hpck");
  const Network back = load_network(dir / "a.hpck", cfg);
  save_network(back, dir / "b.hpck");
  std::ifstream a(dir / "a.hpck", std::ios::binary), b(dir / "b.hpck", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
  CHECK(count_parameters(back, CountScope::kTotal) ==
        count_parameters(net, CountScope::kTotal));

  std::mt19937_64 rng(3);
  const Tensor x = random_tensor({1, 3, 64, 64}, rng, 0.0, 1.0);
  CHECK(bit_identical(forward_eval(net, x).x_hat, forward_eval(back, x).x_hat));

  CHECK_THROWS_AS(load_network(dir / "missing.hpck", cfg), ValidationError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pruned checkpoints load into their slim shape") {
  const NetworkConfig cfg = default_hyperprior_config(8, 6);
  Network net = build_hyperprior(cfg);
  manual_uniform_prune(net, 0.5);
  const std::size_t hyper = count_parameters(net, CountScope::kHyperPath);
  const Network back = network_from_tensors(network_tensors(net), cfg);
  CHECK(count_parameters(back, CountScope::kHyperPath) == hyper);
  CHECK(back.hyper_latent_channels() == 4);
  CHECK(encode_hpck(network_tensors(back)) == encode_hpck(network_tensors(net)));

  // Compactors and masks survive too.
  Network soft = build_hyperprior(cfg);
  attach_and_freeze(soft);
  const Network soft_back = network_from_tensors(network_tensors(soft), cfg);
  CHECK(soft_back.compactor_count() == 5);
}

TEST_CASE("pnm decoding") {
  std::string p6 = "P6\n# comment\n2 1\n255\n";
  p6 += std::string("\xff\x00\x80\x00\x00\x00", 6);
  const Tensor t = decode_pnm(p6);
  CHECK(t.shape() == Shape{1, 3, 1, 2});
  CHECK(t.at(0, 0, 0, 0) == 1.0);
  CHECK(t.at(0, 2, 0, 0) == 128.0 / 255.0);
  CHECK(t.at(0, 1, 0, 1) == 0.0);

  const Tensor g = decode_pnm(std::string("P5 1 1 255\n") + '\x40');
  CHECK(g.shape() == Shape{1, 3, 1, 1});
  for (std::size_t c = 0; c < 3; ++c) CHECK(g.at(0, c, 0, 0) == 64.0 / 255.0);

  try {
    decode_pnm("P6 1 1 65535\n\x01\x02\x03\x04\x05\x06", "deep.ppm");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("deep.ppm") != std::string::npos);
  }
  CHECK_THROWS_AS(decode_pnm("P3 1 1 255\n1 2 3", "ascii.ppm"), FormatError);
  CHECK_THROWS_AS(decode_pnm("P6 2 2 255\n\x01", "short.ppm"), FormatError);

  const auto images = synthetic_images(1, 64, 64, 4);
  CHECK(bit_identical(decode_pnm(encode_ppm(images[0])), images[0]));
  for (double v : images[0].values()) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("image directories, padding and crops") {
  const auto dir = scratch_dir("images");
  const auto images = synthetic_images(3, 70, 90, 5);
  write_ppm(dir / "b.ppm", images[1]);
  write_ppm(dir / "a.ppm", images[0]);
  write_ppm(dir / "c.pnm", images[2]);
  { std::ofstream(dir / "notes.txt") << "skip"; }
  const auto files = list_images(dir);
  REQUIRE(files.size() == 3);
  CHECK(files[0].filename() == "a.ppm");
  const auto loaded = load_images(dir);
  CHECK(bit_identical(loaded[1], images[1]));
  std::filesystem::remove_all(dir);

  const Tensor padded = reflect_pad(images[0], 64);
  CHECK(padded.shape() == Shape{1, 3, 128, 128});
  CHECK(padded.at(0, 1, 70, 5) == images[0].at(0, 1, 68, 5));
  CHECK(padded.at(0, 1, 3, 90) == images[0].at(0, 1, 3, 88));
  CHECK(bit_identical(crop(padded, 0, 0, 70, 90), images[0]));

  const auto p1 = sample_patches(images, 6, 64, 9);
  const auto p2 = sample_patches(images, 6, 64, 9);
  const auto p3 = sample_patches(images, 6, 64, 10);
  bool all_same = true;
  bool any_diff = false;
  for (std::size_t i = 0; i < 6; ++i) {
    all_same = all_same && bit_identical(p1[i], p2[i]);
    any_diff = any_diff || !bit_identical(p1[i], p3[i]);
  }
  CHECK(all_same);
  CHECK(any_diff);
  CHECK_THROWS_AS(sample_patches(images, 1, 128, 0), ValidationError);
}

TEST_CASE("batch sampler covers each epoch once") {
  BatchSampler s(10, 4, 1);
  std::vector<int> seen(10, 0);
  for (int b = 0; b < 5; ++b)
    for (std::size_t i : s.next()) ++seen[i];
  for (int c : seen) CHECK(c == 2);
}

TEST_CASE("run config parsing") {
  const RunConfig d = parse_run_config("{}");
  CHECK(d.network.n == 32);
  CHECK(d.network.m == 48);

  const RunConfig c = parse_run_config(
      R"({"N": 8, "M": 12, "lambda": 0.02, "beta": 1e-4, "prune_target": 0.5,
          "seed": 7, "prune_steps": 10})");
  CHECK(c.network.n == 8);
  CHECK(c.network.path(PathId::kHyperDecoder).back().out_channels == 12);
  CHECK(c.prune.lambda == 0.02);
  CHECK(c.pretrain.lambda == 0.02);
  CHECK(c.prune.beta == 1e-4);
  CHECK(c.prune.seed == 7);
  CHECK(c.prune.max_steps == 10);

  CHECK_THROWS_AS(parse_run_config(R"({"N": 8, "colour": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"prune_target": 1.5})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"beta": -1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"paths": {"h_x": []}})"), ConfigError);

  // The canonical dump parses back to itself.
  const std::string dumped = run_config_json(c);
  CHECK(run_config_json(parse_run_config(dumped)) == dumped);
}
