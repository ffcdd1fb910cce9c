// Minimal out-of-process predictor: answers every predict with the previous
// mask it was sent. The first argument selects a misbehavior for tests:
//   echo | malformed | hang | crash | error | crash-once:MARKER_FILE

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include "mmms/errors.hpp"
#include "mmms/wire.hpp"

namespace {

void send(const nlohmann::json& j) { std::cout << j.dump() << '\n' << std::flush; }

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "echo";
  std::string line;
  while (std::getline(std::cin, line)) {
    nlohmann::json msg;
    try {
      msg = mmms::wire::parse_message(line);
    } catch (const mmms::ProtocolError& e) {
      send({{"type", "error"}, {"message", e.what()}});
      continue;
    }
    const std::string type = msg["type"].get<std::string>();
    if (type == "hello") {
      send({{"type", "ready"}});
    } else if (type == "prepare") {
      send({{"type", "prepared"}});
    } else if (type == "predict") {
      if (mode == "hang") std::this_thread::sleep_for(std::chrono::hours(1));
      if (mode == "crash") return 3;
      if (mode.rfind("crash-once:", 0) == 0) {
        const std::filesystem::path marker = mode.substr(11);
        if (!std::filesystem::exists(marker)) {
          std::ofstream(marker) << "crashed\n";
          return 3;
        }
      }
      if (mode == "error") {
        send({{"type", "error"}, {"message", "synthetic failure"}});
        continue;
      }
      try {
        const mmms::PredictRequest req = mmms::wire::decode_predict(msg);
        nlohmann::json reply = mmms::wire::encode_mask_reply(req.prev_mask);
        if (mode == "malformed") reply["mask"]["counts"] = {1, 2, 3};
        send(reply);
      } catch (const mmms::Error& e) {
        send({{"type", "error"}, {"message", e.what()}});
      }
    } else {
      send({{"type", "error"}, {"message", "unknown message type " + type}});
    }
  }
  return 0;
}
