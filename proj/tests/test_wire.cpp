#include <doctest.h>

#include <random>

#include "mmms/errors.hpp"
#include "mmms/wire.hpp"
#include "oracles.hpp"

using namespace mmms;
using wire::json;

namespace {

PredictRequest random_request(std::mt19937_64& rng) {
  const int h = 1 + static_cast<int>(rng() % 64), w = 1 + static_cast<int>(rng() % 64);
  PredictRequest r;
  r.image_id = "img_" + std::to_string(rng() % 1000);
  r.surface = static_cast<int>(rng() % 5);
  const int n = static_cast<int>(rng() % 8);
  for (int i = 0; i < n; ++i) {
    r.clicks.push_back({static_cast<int>(rng() % h), static_cast<int>(rng() % w),
                        (rng() & 1) ? Polarity::positive : Polarity::negative});
  }
  r.prev_mask = oracle::to_mask(oracle::random_bits(rng, h * w, (rng() % 101) / 100.0), h, w);
  return r;
}

}  // namespace

TEST_CASE("base64 known vectors and round trip") {
  const auto enc = [](std::string s) {
    return wire::base64_encode(std::vector<std::uint8_t>(s.begin(), s.end()));
  };
  CHECK(enc("") == "");
  CHECK(enc("f") == "Zg==");
  CHECK(enc("fo") == "Zm8=");
  CHECK(enc("foo") == "Zm9v");
  CHECK(enc("foobar") == "Zm9vYmFy");
  std::mt19937_64 rng(51);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint8_t> bytes(rng() % 100);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    CHECK(wire::base64_decode(wire::base64_encode(bytes)) == bytes);
  }
  CHECK_THROWS_AS(wire::base64_decode("Zm9v!"), ProtocolError);
  CHECK_THROWS_AS(wire::base64_decode("Zm9"), ProtocolError);
}

TEST_CASE("predict requests survive encode and decode") {
  std::mt19937_64 rng(52);
  for (int t = 0; t < 1000; ++t) {
    const PredictRequest r = random_request(rng);
    const json j = json::parse(wire::encode_predict(r).dump());
    CHECK(wire::decode_predict(j) == r);
  }
}

TEST_CASE("rasters round trip at their bit depth") {
  Tensor3 t(3, 2, 2);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(i * 37 % 256) / 255.0f;
  CHECK(wire::decode_raster(wire::encode_raster(t, 8), "rgb") == t);
  Tensor3 d(2, 2, 1);
  for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] = static_cast<float>(i * 20000) / 65535.0f;
  CHECK(wire::decode_raster(wire::encode_raster(d, 16), "depth") == d);
  auto bad = wire::encode_raster(d, 16);
  bad["bits"] = 12;
  CHECK_THROWS_AS(wire::decode_raster(bad, "depth"), ProtocolError);
}

TEST_CASE("malformed replies name the offending field") {
  json reply = {{"type", "mask"}, {"mask", {{"h", 2}, {"w", 2}, {"counts", {1, 2}}}}};
  try {
    wire::decode_mask_reply(reply, 2, 2);
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(std::string(e.what()).find("mask.counts") != std::string::npos);
    CHECK_FALSE(e.payload().empty());
  }
  reply["mask"] = {{"h", 3}, {"w", 1}, {"counts", {3}}};
  CHECK_THROWS_AS(wire::decode_mask_reply(reply, 2, 2), ProtocolError);
  reply["mask"] = {{"h", 2}, {"w", 2}, {"counts", {-1, 5}}};
  CHECK_THROWS_AS(wire::decode_mask_reply(reply, 2, 2), ProtocolError);
  CHECK_THROWS_AS(wire::decode_mask_reply(json{{"type", "mask"}}, 2, 2), ProtocolError);

  try {
    wire::parse_message("{oops");
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(e.payload() == "{oops");
  }
  CHECK_THROWS_AS(wire::parse_message("[1,2]"), ProtocolError);
  CHECK_THROWS_AS(wire::parse_message("{\"type\":3}"), ProtocolError);
  CHECK(wire::parse_message("{\"type\":\"ready\"}").at("type") == "ready");
}

TEST_CASE("hello and prepare messages") {
  const json hello = wire::encode_hello(48, 64, {"depth"});
  CHECK(hello.dump() == R"({"modalities":["depth"],"resolution":[48,64],"type":"hello"})");
  Sample s;
  s.id = "x";
  s.rgb = Tensor3(2, 2, 3, 1.0f);
  s.modalities.push_back({"depth", Tensor3(2, 2, 1, 0.0f)});
  const json p = wire::encode_prepare(s);
  CHECK(p.at("type") == "prepare");
  CHECK(wire::decode_raster(p.at("tensors").at("rgb"), "rgb") == s.rgb);
  CHECK(p.at("tensors").at("depth").at("bits") == 16);
}
