#include "mmms/remote.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>
#include <thread>

#include "mmms/errors.hpp"
#include "mmms/wire.hpp"

namespace mmms {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kMaxLine = std::size_t{1} << 30;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  if (left.count() <= 0) return 0;
  return static_cast<int>(std::min<long long>(left.count(), 1'000'000));
}

std::string truncate(const std::string& s, std::size_t n = 200) {
  return s.size() <= n ? s : s.substr(0, n) + "...";
}

}  // namespace

ChildProcess::ChildProcess(const std::string& command) {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    throw ChildExitError(std::string("socketpair: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    throw ChildExitError(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    // dup2 clears CLOEXEC on the new descriptors.
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(sv[1]);
  pid_ = pid;
  fd_ = sv[0];
  ::fcntl(fd_, F_SETFL, ::fcntl(fd_, F_GETFL) | O_NONBLOCK);
}

ChildProcess::~ChildProcess() {
  if (pid_ > 0 && !status_) {
    ::shutdown(fd_, SHUT_RDWR);
    for (int i = 0; i < 20 && !status_; ++i) {
      int st = 0;
      if (::waitpid(pid_, &st, WNOHANG) == pid_) {
        status_ = st;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (!status_) terminate();
  }
  if (fd_ >= 0) ::close(fd_);
}

std::string ChildProcess::exit_description() {
  if (!status_) {
    int st = 0;
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(pid_, &st, WNOHANG) == pid_) {
        status_ = st;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }
  if (!status_) return "closed its channel";
  if (WIFEXITED(*status_)) return "exited with status " + std::to_string(WEXITSTATUS(*status_));
  if (WIFSIGNALED(*status_)) return "killed by signal " + std::to_string(WTERMSIG(*status_));
  return "ended";
}

std::string ChildProcess::terminate() {
  if (!status_ && pid_ > 0) {
    // the shell may have forked the real predictor; take the whole group
    ::kill(-pid_, SIGKILL);
    ::kill(pid_, SIGKILL);
    int st = 0;
    if (::waitpid(pid_, &st, 0) == pid_) status_ = st;
  }
  return exit_description();
}

void ChildProcess::send_line(const std::string& line, Clock::time_point deadline) {
  std::string data = line;
  data.push_back('\n');
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n > 0) {
      sent += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      pollfd p{fd_, POLLOUT, 0};
      const int ms = remaining_ms(deadline);
      if (ms == 0 || ::poll(&p, 1, ms) == 0) {
        throw TimeoutError("child did not accept input before the deadline");
      }
      continue;
    }
    throw ChildExitError("child " + exit_description() + " while receiving a request");
  }
}

std::string ChildProcess::read_line(Clock::time_point deadline) {
  for (;;) {
    const std::size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return line;
    }
    if (buffer_.size() > kMaxLine) throw ProtocolError("reply line too long", truncate(buffer_));
    pollfd p{fd_, POLLIN, 0};
    const int ms = remaining_ms(deadline);
    const int ready = ms == 0 ? 0 : ::poll(&p, 1, ms);
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) throw TimeoutError("no reply from child before the deadline");
    char chunk[65536];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n > 0) {
      buffer_.append(chunk, static_cast<std::size_t>(n));
      continue;
    }
    if (n < 0 && (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK)) continue;
    std::string msg = "child " + exit_description();
    if (!buffer_.empty()) msg += " after partial reply";
    throw ChildExitError(msg);
  }
}

RemotePredictor::RemotePredictor(RemoteParams params) : params_(std::move(params)) {
  if (params_.command.empty()) throw ConfigError("remote predictor needs a command");
  if (params_.timeout.count() <= 0) throw ConfigError("remote timeout must be positive");
}

RemotePredictor::~RemotePredictor() = default;

std::string RemotePredictor::describe() const {
  return "remote(" + params_.command + ",timeout_ms=" + std::to_string(params_.timeout.count()) +
         ")";
}

void RemotePredictor::stop() {
  if (child_) child_->terminate();
  child_.reset();
}

nlohmann::json RemotePredictor::exchange(const nlohmann::json& message, const std::string& expected) {
  const auto deadline = Clock::now() + params_.timeout;
  try {
    child_->send_line(message.dump(), deadline);
    const std::string line = child_->read_line(deadline);
    nlohmann::json reply = wire::parse_message(line);
    const std::string type = reply.at("type").get<std::string>();
    if (type == "error") {
      const auto it = reply.find("message");
      const std::string text = it != reply.end() && it->is_string() ? it->get<std::string>() : line;
      throw RemoteError("child reported an error: " + text);
    }
    if (type != expected) {
      throw ProtocolError("expected reply type '" + expected + "', got '" + type + "'", line);
    }
    return reply;
  } catch (const TimeoutError&) {
    // The child's state is unknown after a missed deadline.
    stop();
    throw;
  } catch (const ProtocolError&) {
    stop();
    throw;
  }
}

void RemotePredictor::start(int height, int width, const std::vector<std::string>& modalities) {
  child_ = std::make_unique<ChildProcess>(params_.command);
  ++spawns_;
  hello_height_ = height;
  hello_width_ = width;
  hello_modalities_ = modalities;
  exchange(wire::encode_hello(height, width, modalities), "ready");
}

void RemotePredictor::send_prepare() {
  const auto deadline = Clock::now() + params_.timeout;
  try {
    child_->send_line(prepared_line_, deadline);
    const std::string line = child_->read_line(deadline);
    const nlohmann::json reply = wire::parse_message(line);
    const std::string type = reply.at("type").get<std::string>();
    if (type == "error") throw RemoteError("child rejected prepare: " + truncate(line));
    if (type != "prepared") {
      throw ProtocolError("expected reply type 'prepared', got '" + type + "'", line);
    }
  } catch (const TimeoutError&) {
    stop();
    throw;
  } catch (const ProtocolError&) {
    stop();
    throw;
  }
}

void RemotePredictor::prepare(const Sample& sample) {
  std::vector<std::string> names;
  for (const NamedTensor& m : sample.modalities) names.push_back(m.name);
  restarts_left_ = params_.restarts;
  prepared_line_ = wire::encode_prepare(sample).dump();
  prepared_id_ = sample.id;
  height_ = sample.height();
  width_ = sample.width();
  for (;;) {
    try {
      if (!child_) start(height_, width_, names);
      send_prepare();
      return;
    } catch (const ChildExitError&) {
      stop();
      if (restarts_left_-- <= 0) throw;
    }
  }
}

PredictResponse RemotePredictor::predict(const PredictRequest& request) {
  if (prepared_line_.empty()) throw PredictorError("remote: predict before prepare");
  if (request.prev_mask.height() != height_ || request.prev_mask.width() != width_) {
    throw DimensionError("remote: previous mask does not match the prepared image");
  }
  const nlohmann::json message = wire::encode_predict(request);
  const auto start_time = Clock::now();
  for (;;) {
    try {
      if (!child_) {
        start(hello_height_, hello_width_, hello_modalities_);
        send_prepare();
      }
      const nlohmann::json reply = exchange(message, "mask");
      PredictResponse response;
      try {
        response.probabilities = to_probabilities(wire::decode_mask_reply(reply, height_, width_));
      } catch (const ProtocolError&) {
        stop();
        throw;
      }
      response.timing.click_seconds =
          std::chrono::duration<double>(Clock::now() - start_time).count();
      return response;
    } catch (const ChildExitError&) {
      stop();
      if (restarts_left_-- <= 0) throw;
    }
  }
}

}  // namespace mmms
