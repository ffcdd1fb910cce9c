#pragma once

// Newline-delimited JSON protocol spoken with out-of-process predictors.
//
//   {"type":"hello","resolution":[H,W],"modalities":["depth",...]}   -> {"type":"ready"}
//   {"type":"prepare","image_id":ID,"tensors":{"rgb":RASTER,"<modality>":RASTER}}
//                                                                  -> {"type":"prepared"}
//   {"type":"predict","image_id":ID,"clicks":[{"y":r,"x":c,"positive":b},...],
//    "prev_mask":{"h":H,"w":W,"counts":[...]}}                     -> {"type":"mask","mask":RLE}
//   any reply {"type":"error","message":...} aborts the current run.
//
// RASTER: {"h":H,"w":W,"c":C,"bits":8|16,"data":base64(little-endian row-major samples)}

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mmms/dataset.hpp"
#include "mmms/predictor.hpp"
#include "mmms/rle.hpp"

namespace mmms::wire {

using nlohmann::json;

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws ProtocolError on characters outside the alphabet or bad padding.
std::vector<std::uint8_t> base64_decode(std::string_view text);

json encode_rle(const RleMask& rle);
// `field` names the location in error messages.
RleMask decode_rle(const json& j, const std::string& field);

json encode_raster(const Tensor3& tensor, int bits);
Tensor3 decode_raster(const json& j, const std::string& field);

json encode_hello(int height, int width, const std::vector<std::string>& modalities);
json encode_prepare(const Sample& sample);

json encode_predict(const PredictRequest& request);
PredictRequest decode_predict(const json& j);

json encode_mask_reply(const BinaryMask& mask);
BinaryMask decode_mask_reply(const json& j, int height, int width);

// Parses one line; ProtocolError (carrying the raw line) when it is not a
// JSON object with a string "type".
json parse_message(std::string_view line);

}  // namespace mmms::wire
