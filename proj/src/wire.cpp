#include "mmms/wire.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "mmms/errors.hpp"

namespace mmms::wire {
namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

[[noreturn]] void fail(const std::string& what, const json& j) {
  throw ProtocolError(what, j.dump());
}

const json& require(const json& j, const char* key, const std::string& field) {
  if (!j.is_object() || !j.contains(key)) fail("missing field '" + field + "." + key + "'", j);
  return j.at(key);
}

int require_int(const json& j, const char* key, const std::string& field) {
  const json& v = require(j, key, field);
  if (!v.is_number_integer()) fail("field '" + field + "." + key + "' must be an integer", j);
  return v.get<int>();
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(rest == 2 ? kAlphabet[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::array<int, 256> table{};
  table.fill(-1);
  for (int i = 0; i < 64; ++i) table[static_cast<unsigned char>(kAlphabet[i])] = i;
  if (text.size() % 4 != 0) throw ProtocolError("base64 length not a multiple of 4", std::string(text));
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      const char ch = text[i + static_cast<std::size_t>(j)];
      if (ch == '=' && i + 4 == text.size() && j >= 2) {
        vals[j] = 0;
        ++pad;
      } else {
        vals[j] = table[static_cast<unsigned char>(ch)];
        if (vals[j] < 0 || pad > 0) {
          throw ProtocolError("invalid base64 character", std::string(text.substr(i, 4)));
        }
      }
    }
    const std::uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

json encode_rle(const RleMask& rle) {
  return {{"h", rle.height}, {"w", rle.width}, {"counts", rle.counts}};
}

RleMask decode_rle(const json& j, const std::string& field) {
  RleMask rle;
  rle.height = require_int(j, "h", field);
  rle.width = require_int(j, "w", field);
  const json& counts = require(j, "counts", field);
  if (!counts.is_array()) fail("field '" + field + ".counts' must be an array", j);
  std::uint64_t total = 0;
  for (const json& c : counts) {
    if (!c.is_number_unsigned() && !(c.is_number_integer() && c.get<long long>() >= 0)) {
      fail("field '" + field + ".counts' must hold non-negative integers", j);
    }
    const auto v = c.get<std::uint64_t>();
    if (v > 0xffffffffull) fail("field '" + field + ".counts' entry too large", j);
    rle.counts.push_back(static_cast<std::uint32_t>(v));
    total += v;
  }
  if (rle.height < 1 || rle.width < 1) fail("field '" + field + "' has invalid dimensions", j);
  if (total != static_cast<std::uint64_t>(rle.height) * static_cast<std::uint64_t>(rle.width)) {
    fail("field '" + field + ".counts' sums to " + std::to_string(total) + ", expected " +
             std::to_string(static_cast<std::uint64_t>(rle.height) * rle.width),
         j);
  }
  return rle;
}

json encode_raster(const Tensor3& tensor, int bits) {
  const double max_raw = bits == 16 ? 65535.0 : 255.0;
  std::vector<std::uint8_t> bytes;
  bytes.reserve(tensor.size() * (bits == 16 ? 2 : 1));
  for (float v : tensor.values()) {
    const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
    const auto raw = static_cast<std::uint16_t>(std::lround(clamped * max_raw));
    bytes.push_back(static_cast<std::uint8_t>(raw & 0xff));
    if (bits == 16) bytes.push_back(static_cast<std::uint8_t>(raw >> 8));
  }
  return {{"h", tensor.height()},
          {"w", tensor.width()},
          {"c", tensor.channels()},
          {"bits", bits},
          {"data", base64_encode(bytes)}};
}

Tensor3 decode_raster(const json& j, const std::string& field) {
  const int h = require_int(j, "h", field);
  const int w = require_int(j, "w", field);
  const int c = require_int(j, "c", field);
  const int bits = require_int(j, "bits", field);
  if (bits != 8 && bits != 16) fail("field '" + field + ".bits' must be 8 or 16", j);
  if (h < 1 || w < 1 || c < 1) fail("field '" + field + "' has invalid dimensions", j);
  const json& data = require(j, "data", field);
  if (!data.is_string()) fail("field '" + field + ".data' must be a base64 string", j);
  const auto bytes = base64_decode(data.get<std::string>());
  Tensor3 t(h, w, c);
  const std::size_t per = bits == 16 ? 2 : 1;
  if (bytes.size() != t.size() * per) fail("field '" + field + ".data' has the wrong length", j);
  const float scale = bits == 16 ? 65535.0f : 255.0f;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const unsigned raw = per == 2 ? (bytes[2 * i] | (bytes[2 * i + 1] << 8)) : bytes[i];
    t.data()[i] = static_cast<float>(raw) / scale;
  }
  return t;
}

json encode_hello(int height, int width, const std::vector<std::string>& modalities) {
  return {{"type", "hello"}, {"resolution", {height, width}}, {"modalities", modalities}};
}

json encode_prepare(const Sample& sample) {
  json tensors = json::object();
  tensors["rgb"] = encode_raster(sample.rgb, 8);
  for (const auto& m : sample.modalities) tensors[m.name] = encode_raster(m.tensor, 16);
  return {{"type", "prepare"}, {"image_id", sample.id}, {"tensors", std::move(tensors)}};
}

json encode_predict(const PredictRequest& request) {
  json clicks = json::array();
  for (const Click& c : request.clicks) {
    clicks.push_back({{"y", c.row}, {"x", c.col}, {"positive", c.positive()}});
  }
  json j = {{"type", "predict"},
            {"image_id", request.image_id},
            {"clicks", std::move(clicks)},
            {"prev_mask", encode_rle(rle_encode(request.prev_mask))}};
  if (request.surface != 0) j["surface"] = request.surface;
  return j;
}

PredictRequest decode_predict(const json& j) {
  PredictRequest req;
  const json& id = require(j, "image_id", "predict");
  if (!id.is_string()) fail("field 'predict.image_id' must be a string", j);
  req.image_id = id.get<std::string>();
  if (j.contains("surface")) req.surface = require_int(j, "surface", "predict");
  const json& clicks = require(j, "clicks", "predict");
  if (!clicks.is_array()) fail("field 'predict.clicks' must be an array", j);
  req.prev_mask = rle_decode(decode_rle(require(j, "prev_mask", "predict"), "prev_mask"));
  for (const json& c : clicks) {
    Click click;
    click.row = require_int(c, "y", "clicks[]");
    click.col = require_int(c, "x", "clicks[]");
    const json& pos = require(c, "positive", "clicks[]");
    if (!pos.is_boolean()) fail("field 'clicks[].positive' must be a boolean", j);
    click.polarity = pos.get<bool>() ? Polarity::positive : Polarity::negative;
    if (!req.prev_mask.contains(click.row, click.col)) fail("click outside prev_mask bounds", j);
    req.clicks.push_back(click);
  }
  return req;
}

json encode_mask_reply(const BinaryMask& mask) {
  return {{"type", "mask"}, {"mask", encode_rle(rle_encode(mask))}};
}

BinaryMask decode_mask_reply(const json& j, int height, int width) {
  const RleMask rle = decode_rle(require(j, "mask", "reply"), "mask");
  if (rle.height != height || rle.width != width) {
    fail("field 'mask' is " + std::to_string(rle.height) + "x" + std::to_string(rle.width) +
             ", expected " + std::to_string(height) + "x" + std::to_string(width),
         j);
  }
  return rle_decode(rle);
}

json parse_message(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw ProtocolError("reply is not valid JSON", std::string(line));
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw ProtocolError("reply lacks a string 'type' field", std::string(line));
  }
  return j;
}

}  // namespace mmms::wire
