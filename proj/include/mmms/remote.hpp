#pragma once

// Predictor living in a child process, spoken to over the line protocol in
// mmms/wire.hpp. The child's stdin and stdout are both ends of one socket.

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>
#include <sys/types.h>

#include <json.hpp>

#include "mmms/predictor.hpp"

namespace mmms {

// A `/bin/sh -c` child with line-oriented I/O and per-call deadlines.
class ChildProcess {
 public:
  explicit ChildProcess(const std::string& command);
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  // Both throw ChildExitError when the peer is gone and TimeoutError when
  // the deadline passes.
  void send_line(const std::string& line, std::chrono::steady_clock::time_point deadline);
  std::string read_line(std::chrono::steady_clock::time_point deadline);

  // Kills the child and reaps it; returns a description of how it ended.
  std::string terminate();
  pid_t pid() const noexcept { return pid_; }

 private:
  std::string exit_description();

  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  std::optional<int> status_;
};

struct RemoteParams {
  std::string command;
  std::chrono::milliseconds timeout{10'000};
  int restarts = 1;  // per image
};

class RemotePredictor final : public Predictor {
 public:
  explicit RemotePredictor(RemoteParams params);
  ~RemotePredictor() override;

  std::string describe() const override;
  void prepare(const Sample& sample) override;
  PredictResponse predict(const PredictRequest& request) override;

  // Number of children started so far.
  int spawn_count() const noexcept { return spawns_; }

 private:
  void start(int height, int width, const std::vector<std::string>& modalities);
  void stop();
  nlohmann::json exchange(const nlohmann::json& message, const std::string& expected);
  void send_prepare();

  RemoteParams params_;
  std::unique_ptr<ChildProcess> child_;
  int spawns_ = 0;
  int restarts_left_ = 0;
  // Resolution and modality names announced in the hello of the current child.
  int hello_height_ = 0;
  int hello_width_ = 0;
  std::vector<std::string> hello_modalities_;
  std::string prepared_line_;
  std::string prepared_id_;
  int height_ = 0;
  int width_ = 0;
};

}  // namespace mmms
