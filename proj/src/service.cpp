#include "mmms/service.hpp"

#include <httplib.h>

#include "mmms/errors.hpp"
#include "mmms/wire.hpp"

namespace mmms {
namespace {

using nlohmann::json;

json rle_json(const RleMask& rle) { return wire::encode_rle(rle); }

RleMask changed_pixels(const JointMask& before, const JointMask& after) {
  std::vector<std::uint8_t> bits(before.size());
  const auto a = before.labels();
  const auto b = after.labels();
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = a[i] != b[i] ? 1 : 0;
  return rle_encode(BinaryMask(before.height(), before.width(), std::move(bits)));
}

// One click of the interactive loop, applied to `snap` in place.
BinaryMask apply_click(Predictor& predictor, const Sample& sample, SessionSnapshot& snap,
                       const ClickRecord& record, const EvalConfig& cfg) {
  SessionSurface& surface = snap.surfaces[static_cast<std::size_t>(record.surface - 1)];
  std::vector<Click> clicks = surface.clicks;
  clicks.push_back(record.click);
  PredictRequest request{sample.id, record.surface, clicks,
                         joint_extract(snap.joint, record.surface)};
  BinaryMask mask = binarize(predictor.predict(request).probabilities, cfg.mask_threshold());
  require_same_shape(mask, request.prev_mask, "predictor output");
  snap.joint = joint_insert_revisit(snap.joint, record.surface, mask);
  surface.clicks = std::move(clicks);
  const double v = iou(mask, joint_extract(sample.gt_joint, record.surface));
  surface.locked = static_cast<int>(surface.clicks.size()) >= cfg.n_max() && v < cfg.theta_iou();
  return mask;
}

SessionSnapshot empty_snapshot(const Sample& sample) {
  const JointMask& gt = sample.gt_joint;
  return {JointMask(gt.height(), gt.width(), gt.surface_count()),
          std::vector<SessionSurface>(static_cast<std::size_t>(gt.surface_count()))};
}

json click_json(const Click& c) {
  return {{"y", c.row}, {"x", c.col}, {"positive", c.positive()}};
}

}  // namespace

SessionSnapshot replay_click_log(Predictor& predictor, const Sample& sample,
                                 const std::vector<ClickRecord>& log, const EvalConfig& cfg) {
  SessionSnapshot snap = empty_snapshot(sample);
  for (const ClickRecord& r : log) {
    if (r.surface < 1 || r.surface > sample.gt_joint.surface_count()) {
      throw ConfigError("click log names unknown surface " + std::to_string(r.surface));
    }
    apply_click(predictor, sample, snap, r, cfg);
  }
  return snap;
}

Session::Session(std::string id, Sample sample, std::unique_ptr<Predictor> predictor, EvalConfig cfg,
                 std::string predictor_spec)
    : last_used(std::chrono::steady_clock::now()),
      id_(std::move(id)),
      sample_(std::move(sample)),
      predictor_(std::move(predictor)),
      cfg_(cfg),
      predictor_spec_(std::move(predictor_spec)),
      snap_(empty_snapshot(sample_)) {
  if (sample_.gt_joint.surface_count() < 1) {
    throw DatasetError("image '" + sample_.id + "' has no surfaces");
  }
  predictor_->prepare(sample_);
  last_changed_ = rle_encode(BinaryMask(sample_.height(), sample_.width()));
}

void Session::check_surface(int surface) const {
  if (surface < 1 || surface > sample_.gt_joint.surface_count()) {
    throw ConfigError("surface " + std::to_string(surface) + " outside [1, " +
                      std::to_string(sample_.gt_joint.surface_count()) + "]");
  }
}

std::vector<double> Session::ious() const { return surface_ious(snap_.joint, sample_.gt_joint); }

ClickOutcome Session::click(int surface, Click click) {
  check_surface(surface);
  const SessionSurface& current = snap_.surfaces[static_cast<std::size_t>(surface - 1)];
  if (current.locked || static_cast<int>(current.clicks.size()) >= cfg_.n_max()) {
    throw SurfaceLockedError("surface " + std::to_string(surface) + " has used its " +
                             std::to_string(cfg_.n_max()) + "-click budget");
  }
  if (click.row < 0 || click.col < 0 || click.row >= sample_.height() ||
      click.col >= sample_.width()) {
    throw ConfigError("click (" + std::to_string(click.row) + ", " + std::to_string(click.col) +
                      ") outside the image");
  }
  SessionSnapshot next = snap_;
  const ClickRecord record{surface, click};
  const BinaryMask mask = apply_click(*predictor_, sample_, next, record, cfg_);
  last_changed_ = changed_pixels(snap_.joint, next.joint);
  snap_ = std::move(next);
  log_.push_back(record);
  current_surface_ = surface;

  ClickOutcome out;
  out.mask = rle_encode(mask);
  out.changed = last_changed_;
  out.ious = ious();
  for (double v : out.ious) out.avg_iou += v;
  out.avg_iou /= static_cast<double>(out.ious.size());
  const SessionSurface& s = snap_.surfaces[static_cast<std::size_t>(surface - 1)];
  out.clicks_used = static_cast<int>(s.clicks.size());
  out.locked = s.locked;
  return out;
}

void Session::undo() {
  if (log_.empty()) throw ConfigError("nothing to undo");
  std::vector<ClickRecord> shorter(log_.begin(), log_.end() - 1);
  SessionSnapshot snap = replay_click_log(*predictor_, sample_, shorter, cfg_);
  last_changed_ = changed_pixels(snap_.joint, snap.joint);
  snap_ = std::move(snap);
  log_ = std::move(shorter);
}

void Session::select_surface(int surface) {
  check_surface(surface);
  current_surface_ = surface;
}

std::optional<int> Session::select_worst() const {
  std::vector<bool> locked;
  for (const SessionSurface& s : snap_.surfaces) locked.push_back(s.locked);
  const std::vector<double> v = ious();
  return select_worst_surface(v, locked, cfg_.theta_iou());
}

json Session::state() const {
  const std::vector<double> v = ious();
  json surfaces = json::array();
  double avg = 0.0;
  for (std::size_t k = 0; k < snap_.surfaces.size(); ++k) {
    const SessionSurface& s = snap_.surfaces[k];
    json clicks = json::array();
    for (const Click& c : s.clicks) clicks.push_back(click_json(c));
    surfaces.push_back({{"id", k + 1},
                        {"clicks", std::move(clicks)},
                        {"clicks_used", s.clicks.size()},
                        {"locked", s.locked},
                        {"iou", v[k]},
                        {"mask", rle_json(rle_encode(joint_extract(snap_.joint, static_cast<int>(k) + 1)))}});
    avg += v[k];
  }
  avg /= static_cast<double>(v.size());
  json log = json::array();
  for (const ClickRecord& r : log_) {
    json entry = click_json(r.click);
    entry["surface"] = r.surface;
    log.push_back(std::move(entry));
  }
  return {{"session_id", id_},
          {"image_id", sample_.id},
          {"predictor", predictor_spec_},
          {"height", sample_.height()},
          {"width", sample_.width()},
          {"n_max", cfg_.n_max()},
          {"theta_iou", cfg_.theta_iou()},
          {"theta_avg", cfg_.theta_avg()},
          {"current_surface", current_surface_},
          {"surfaces", std::move(surfaces)},
          {"avg_iou", avg},
          {"changed", rle_json(last_changed_)},
          {"log", std::move(log)}};
}

SessionManager::SessionManager(ServiceOptions options) : options_(std::move(options)) {
  options_.context.manifest = &options_.manifest;
}

PredictorFactory SessionManager::factory_for(const std::string& spec) {
  std::lock_guard lock(mu_);
  const auto it = factories_.find(spec);
  if (it != factories_.end()) return it->second;
  PredictorFactory f = make_predictor_factory(spec, options_.context);
  factories_.emplace(spec, f);
  return f;
}

std::string SessionManager::create(const std::string& image_id, const std::string& predictor_spec,
                                   const EvalParams& params) {
  const std::string spec = predictor_spec.empty() ? options_.default_predictor : predictor_spec;
  const EvalConfig cfg(params);
  bool known = false;
  for (const std::string& id : options_.manifest.images) known = known || id == image_id;
  if (!known) throw DatasetError("unknown image '" + image_id + "'");
  Sample sample = load_sample(options_.manifest, image_id);
  std::unique_ptr<Predictor> predictor = factory_for(spec)();
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = "s" + std::to_string(next_id_++);
  }
  auto session = std::make_shared<Session>(id, std::move(sample), std::move(predictor), cfg, spec);
  std::lock_guard lock(mu_);
  sessions_.emplace(id, std::move(session));
  return id;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw UnknownSessionError("unknown session '" + id + "'");
  return it->second;
}

bool SessionManager::erase(const std::string& id) {
  std::lock_guard lock(mu_);
  return sessions_.erase(id) > 0;
}

int SessionManager::expire(std::chrono::steady_clock::time_point now) {
  std::lock_guard lock(mu_);
  int dropped = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::unique_lock session_lock(it->second->mutex(), std::try_to_lock);
    if (session_lock.owns_lock() && now - it->second->last_used > options_.idle_timeout) {
      session_lock.unlock();
      it = sessions_.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  return dropped;
}

std::size_t SessionManager::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

struct Service::Impl {
  explicit Impl(ServiceOptions options) : manager(std::move(options)) {}

  SessionManager manager;
  httplib::Server server;
};

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, {{"error", message}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("request body is not a JSON object");
  return j;
}

template <typename T>
T field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

// Runs `body` and maps library errors onto HTTP statuses.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const UnknownSessionError& e) {
    reply_error(res, 404, e.what());
  } catch (const SurfaceLockedError& e) {
    reply_error(res, 409, e.what());
  } catch (const PredictorError& e) {
    reply_error(res, 502, e.what());
  } catch (const DatasetError& e) {
    reply_error(res, 404, e.what());
  } catch (const Error& e) {
    reply_error(res, 400, e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, e.what());
  }
}

// Locks the session named in the path and runs `body` on it.
template <typename F>
void with_session(SessionManager& mgr, const httplib::Request& req, httplib::Response& res,
                  F&& body) {
  guarded(res, [&] {
    std::shared_ptr<Session> s = mgr.find(req.matches[1]);
    std::lock_guard lock(s->mutex());
    s->last_used = std::chrono::steady_clock::now();
    body(*s);
  });
}

}  // namespace

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  SessionManager& mgr = impl_->manager;
  httplib::Server& srv = impl_->server;

  srv.set_pre_routing_handler([&mgr](const httplib::Request&, httplib::Response&) {
    mgr.expire(std::chrono::steady_clock::now());
    return httplib::Server::HandlerResponse::Unhandled;
  });

  srv.Get("/api/datasets", [&mgr](const httplib::Request&, httplib::Response& res) {
    const DatasetManifest& m = mgr.options().manifest;
    json modalities = json::array();
    for (const ModalitySpec& s : m.modalities) {
      modalities.push_back({{"name", s.name}, {"channels", s.channels}});
    }
    reply(res, 200,
          {{"root", m.root.string()}, {"images", m.images}, {"modalities", std::move(modalities)},
           {"gt", m.gt_format}});
  });

  srv.Post("/api/sessions", [&mgr](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      EvalParams params = mgr.options().eval;
      if (const auto it = body.find("config"); it != body.end() && it->is_object()) {
        params.theta_iou = it->value("theta_iou", params.theta_iou);
        params.theta_avg = it->value("theta_avg", params.theta_avg);
        params.n_max = it->value("n_max", params.n_max);
      }
      const std::string spec = body.value("predictor", std::string());
      const std::string id = mgr.create(field<std::string>(body, "image_id"), spec, params);
      const std::shared_ptr<Session> s = mgr.find(id);
      std::lock_guard lock(s->mutex());
      json surfaces = json::array();
      for (std::size_t k = 1; k <= s->snapshot().surfaces.size(); ++k) surfaces.push_back(k);
      reply(res, 201, {{"session_id", id}, {"surfaces", std::move(surfaces)}});
    });
  });

  srv.Post(R"(/api/sessions/([^/]+)/clicks)", [&mgr](const httplib::Request& req,
                                                      httplib::Response& res) {
    with_session(mgr, req, res, [&](Session& s) {
      const json body = parse_body(req);
      Click click{field<int>(body, "y"), field<int>(body, "x"),
                  field<bool>(body, "positive") ? Polarity::positive : Polarity::negative};
      const ClickOutcome out = s.click(field<int>(body, "surface"), click);
      reply(res, 200,
            {{"mask", rle_json(out.mask)},
             {"changed", rle_json(out.changed)},
             {"ious", out.ious},
             {"iou", out.ious[static_cast<std::size_t>(field<int>(body, "surface") - 1)]},
             {"avg_iou", out.avg_iou},
             {"clicks_used", out.clicks_used},
             {"locked", out.locked}});
    });
  });

  srv.Post(R"(/api/sessions/([^/]+)/undo)", [&mgr](const httplib::Request& req,
                                                    httplib::Response& res) {
    with_session(mgr, req, res, [&](Session& s) {
      s.undo();
      reply(res, 200, s.state());
    });
  });

  srv.Post(R"(/api/sessions/([^/]+)/surface)", [&mgr](const httplib::Request& req,
                                                       httplib::Response& res) {
    with_session(mgr, req, res, [&](Session& s) {
      s.select_surface(field<int>(parse_body(req), "surface"));
      reply(res, 200, s.state());
    });
  });

  srv.Post(R"(/api/sessions/([^/]+)/select-worst)", [&mgr](const httplib::Request& req,
                                                            httplib::Response& res) {
    with_session(mgr, req, res, [&](Session& s) {
      const std::optional<int> k = s.select_worst();
      if (k) s.select_surface(*k);
      reply(res, 200, {{"surface", k ? json(*k) : json(nullptr)}});
    });
  });

  srv.Get(R"(/api/sessions/([^/]+)/state)", [&mgr](const httplib::Request& req,
                                                   httplib::Response& res) {
    with_session(mgr, req, res, [&](Session& s) { reply(res, 200, s.state()); });
  });

  srv.Delete(R"(/api/sessions/([^/]+))", [&mgr](const httplib::Request& req,
                                               httplib::Response& res) {
    guarded(res, [&] {
      if (!mgr.erase(req.matches[1])) throw UnknownSessionError("unknown session");
      reply(res, 200, {{"deleted", true}});
    });
  });

  const std::filesystem::path& assets = mgr.options().static_dir;
  if (!assets.empty()) {
    if (!srv.set_mount_point("/", assets.string())) {
      throw ConfigError("static asset directory not found: " + assets.string());
    }
  }
}

Service::~Service() = default;

int Service::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool Service::bind(const std::string& host, int port) {
  return impl_->server.bind_to_port(host, port);
}

bool Service::listen() { return impl_->server.listen_after_bind(); }

void Service::stop() { impl_->server.stop(); }

SessionManager& Service::sessions() { return impl_->manager; }

}  // namespace mmms
