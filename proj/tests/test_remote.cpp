#include <doctest.h>

#include <signal.h>

#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "mmms/errors.hpp"
#include "mmms/eval.hpp"
#include "mmms/remote.hpp"
#include "mmms/synth.hpp"
#include "oracles.hpp"

using namespace mmms;
using namespace std::chrono_literals;

namespace {

RemoteParams params(const std::string& mode, std::chrono::milliseconds timeout = 5000ms) {
  return RemoteParams{std::string(MMMS_ECHO_PREDICTOR) + " " + mode, timeout, 1};
}

PredictRequest request_for(const Sample& s, std::mt19937_64& rng) {
  PredictRequest r;
  r.image_id = s.id;
  r.surface = 1;
  r.clicks.push_back({static_cast<int>(rng() % s.height()), static_cast<int>(rng() % s.width()),
                      Polarity::positive});
  r.prev_mask = oracle::to_mask(oracle::random_bits(rng, s.height() * s.width(), 0.3), s.height(),
                                s.width());
  return r;
}

// Members of a process group that are still running (zombies excluded).
int live_members(pid_t group) {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator("/proc")) {
    std::ifstream in(entry.path() / "stat");
    std::string line;
    if (!std::getline(in, line)) continue;
    const auto close = line.rfind(')');
    if (close == std::string::npos) continue;
    std::istringstream rest(line.substr(close + 2));
    char state = 0;
    long ppid = 0, pgrp = 0;
    rest >> state >> ppid >> pgrp;
    if (pgrp == group && state != 'Z' && state != 'X') ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("echo child returns the previous mask unchanged") {
  RemotePredictor p(params("echo"));
  std::mt19937_64 rng(61);
  for (int img = 0; img < 4; ++img) {
    const Sample s = fixtures::box_sample(8 + img * 9, 30 - img * 5, 1, 4, 1, 4);
    p.prepare(s);
    for (int t = 0; t < 50; ++t) {
      const PredictRequest r = request_for(s, rng);
      const auto resp = p.predict(r);
      CHECK(binarize(resp.probabilities, 0.5) == r.prev_mask);
    }
  }
  CHECK(p.spawn_count() == 1);
  CHECK(p.describe().find("remote(") == 0);
}

TEST_CASE("malformed replies raise a protocol error naming the field") {
  RemotePredictor p(params("malformed"));
  const Sample s = fixtures::box_sample(6, 6, 1, 3, 1, 3);
  p.prepare(s);
  std::mt19937_64 rng(62);
  try {
    p.predict(request_for(s, rng));
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(std::string(e.what()).find("mask") != std::string::npos);
    CHECK(e.payload().find("\"counts\":[1,2,3]") != std::string::npos);
  }
}

TEST_CASE("a hanging child times out and is replaced") {
  RemotePredictor p(params("hang", 300ms));
  const Sample s = fixtures::box_sample(6, 6, 1, 3, 1, 3);
  p.prepare(s);
  std::mt19937_64 rng(63);
  const auto start = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(p.predict(request_for(s, rng)), TimeoutError);
  CHECK(std::chrono::steady_clock::now() - start < 3s);
  CHECK_THROWS_AS(p.predict(request_for(s, rng)), TimeoutError);
  CHECK(p.spawn_count() == 2);
}

TEST_CASE("crashing children are restarted once per image") {
  const Sample s = fixtures::box_sample(6, 6, 1, 3, 1, 3);
  std::mt19937_64 rng(64);
  RemotePredictor crash(params("crash"));
  crash.prepare(s);
  CHECK_THROWS_AS(crash.predict(request_for(s, rng)), ChildExitError);
  CHECK(crash.spawn_count() == 2);

  fixtures::TempDir dir;
  RemotePredictor once(params("crash-once:" + (dir.path() / "marker").string()));
  once.prepare(s);
  const PredictRequest r = request_for(s, rng);
  CHECK(binarize(once.predict(r).probabilities, 0.5) == r.prev_mask);
  CHECK(once.spawn_count() == 2);
}

TEST_CASE("child-reported errors and missing commands") {
  const Sample s = fixtures::box_sample(6, 6, 1, 3, 1, 3);
  std::mt19937_64 rng(65);
  RemotePredictor err(params("error"));
  err.prepare(s);
  CHECK_THROWS_AS(err.predict(request_for(s, rng)), RemoteError);

  RemotePredictor missing(RemoteParams{"/nonexistent/predictor-binary", 2000ms, 1});
  CHECK_THROWS_AS(missing.prepare(s), ChildExitError);
}

TEST_CASE("timeouts are recorded per image and the run continues") {
  fixtures::TempDir dir;
  SynthParams sp;
  sp.count = 2;
  sp.height = 32;
  sp.width = 32;
  const DatasetManifest m = generate_synthetic(sp, dir.path());
  const PredictorFactory factory = [] { return std::make_unique<RemotePredictor>(params("hang", 200ms)); };
  const auto results = evaluate_dataset(m, factory, EvalConfig(EvalParams{}), {});
  REQUIRE(results.size() == 2);
  for (const auto& r : results) {
    REQUIRE(r.error.has_value());
    CHECK(r.error->find("deadline") != std::string::npos);
  }
}

TEST_CASE("terminating a child also ends what its shell started") {
  ChildProcess child("sleep 30 & wait");
  const pid_t group = child.pid();
  std::this_thread::sleep_for(50ms);
  CHECK(live_members(group) == 2);
  child.terminate();
  CHECK(live_members(group) == 0);
}
