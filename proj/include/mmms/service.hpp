#pragma once

// Annotation service: live multi-surface sessions behind an HTTP+JSON API.
//
//   POST   /api/sessions                     {image_id, predictor?, config?}
//   POST   /api/sessions/{id}/clicks         {surface, y, x, positive}
//   POST   /api/sessions/{id}/undo
//   POST   /api/sessions/{id}/surface        {surface}
//   POST   /api/sessions/{id}/select-worst
//   GET    /api/sessions/{id}/state
//   DELETE /api/sessions/{id}
//   GET    /api/datasets
//   GET    /...                              static UI assets

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmms/dataset.hpp"
#include "mmms/errors.hpp"
#include "mmms/eval.hpp"
#include "mmms/predictor_factory.hpp"
#include "mmms/rle.hpp"

namespace mmms {

struct ClickRecord {
  int surface = 0;
  Click click;

  friend bool operator==(const ClickRecord&, const ClickRecord&) = default;
};

struct SessionSurface {
  std::vector<Click> clicks;
  bool locked = false;  // budget spent without reaching theta_iou
};

struct SessionSnapshot {
  JointMask joint;
  std::vector<SessionSurface> surfaces;  // index k-1 for surface k
};

// Replays a click log: each click is appended to its surface, the predictor
// sees that surface's clicks and its current joint extraction, and the result
// is reinserted with the revisit rule. The predictor must be prepared.
SessionSnapshot replay_click_log(Predictor& predictor, const Sample& sample,
                                 const std::vector<ClickRecord>& log, const EvalConfig& cfg);

struct ClickOutcome {
  RleMask mask;     // the clicked surface after the update
  RleMask changed;  // joint-mask pixels whose label changed
  std::vector<double> ious;
  double avg_iou = 0.0;
  int clicks_used = 0;
  bool locked = false;
};

// Thrown for requests against a surface whose click budget is spent.
class SurfaceLockedError : public Error {
 public:
  using Error::Error;
};

class UnknownSessionError : public Error {
 public:
  using Error::Error;
};

class Session {
 public:
  Session(std::string id, Sample sample, std::unique_ptr<Predictor> predictor, EvalConfig cfg,
          std::string predictor_spec);

  const std::string& id() const noexcept { return id_; }
  std::mutex& mutex() noexcept { return mu_; }

  // Callers hold mutex().
  ClickOutcome click(int surface, Click click);
  void undo();
  void select_surface(int surface);
  std::optional<int> select_worst() const;
  nlohmann::json state() const;
  const SessionSnapshot& snapshot() const noexcept { return snap_; }
  const std::vector<ClickRecord>& log() const noexcept { return log_; }

  std::chrono::steady_clock::time_point last_used;

 private:
  void check_surface(int surface) const;
  std::vector<double> ious() const;

  std::string id_;
  Sample sample_;
  std::unique_ptr<Predictor> predictor_;
  EvalConfig cfg_;
  std::string predictor_spec_;
  SessionSnapshot snap_;
  std::vector<ClickRecord> log_;
  int current_surface_ = 1;
  RleMask last_changed_;
  std::mutex mu_;
};

struct ServiceOptions {
  DatasetManifest manifest;
  std::string default_predictor = "classical";
  FactoryContext context;
  EvalParams eval;
  std::chrono::seconds idle_timeout{30 * 60};
  std::filesystem::path static_dir;  // empty disables static serving
};

class SessionManager {
 public:
  explicit SessionManager(ServiceOptions options);

  // Returns the new session id.
  std::string create(const std::string& image_id, const std::string& predictor_spec,
                     const EvalParams& params);
  std::shared_ptr<Session> find(const std::string& id);
  bool erase(const std::string& id);
  // Drops sessions idle for longer than the timeout; returns how many.
  int expire(std::chrono::steady_clock::time_point now);
  std::size_t size() const;
  const ServiceOptions& options() const noexcept { return options_; }

 private:
  PredictorFactory factory_for(const std::string& spec);

  ServiceOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, PredictorFactory> factories_;
  std::uint64_t next_id_ = 1;
};

class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  // Binds to an ephemeral port and returns it (or -1).
  int bind_any_port(const std::string& host);
  bool bind(const std::string& host, int port);
  // Blocks until stop().
  bool listen();
  void stop();

  SessionManager& sessions();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mmms
