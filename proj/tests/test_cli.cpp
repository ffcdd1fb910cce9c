#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "fixtures.hpp"
#include "mmms/report.hpp"

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(MMMS_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::ordered_json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::ordered_json::parse(in);
}

}  // namespace

TEST_CASE("cli exit codes and outputs") {
  fixtures::TempDir dir;
  const std::string data = (dir.path() / "data").string();
  CHECK(run("gen-synth --seed 4 --count 3 --height 64 --width 64 --out " + data) == 0);
  CHECK(std::filesystem::exists(dir.path() / "data" / "manifest.json"));

  const auto single = dir.path() / "single.json";
  CHECK(run("eval-single --dataset " + data +
            " --predictor classical --theta-iou 80 --theta-iou 90 --out " + single.string()) == 0);
  const auto sj = read_json(single);
  CHECK(sj.at("mode") == "single");
  CHECK(sj.at("metrics").at("noc").size() == 2);
  CHECK(sj.at("metrics").at("multi").is_null());

  const auto multi = dir.path() / "multi.json";
  const auto csv = dir.path() / "multi.csv";
  CHECK(run("eval-multi --dataset " + data + " --predictor oracle --out " + multi.string() +
            " --csv " + csv.string()) == 0);
  const mmms::EvalReport r = mmms::report_from_json(read_json(multi));
  REQUIRE(r.multi.has_value());
  CHECK(r.multi->nocms == 1.0);
  CHECK(r.noc[0].noc == 1.0);
  CHECK(std::filesystem::file_size(csv) > 0);

  // configuration errors
  const std::string scratch = " --out " + (dir.path() / "scratch.json").string();
  CHECK(run("eval-multi --dataset " + data + " --theta-iou 60 --theta-avg 70" + scratch) == 2);
  CHECK(run("eval-multi --dataset " + data + " --predictor magic" + scratch) == 2);
  CHECK(run("eval-multi") == 2);
  CHECK(run("gen-synth --out " + data + "2 --overlap sideways") == 2);
  // dataset errors
  CHECK(run("eval-multi --dataset " + (dir.path() / "nowhere").string() + scratch) == 3);
  // predictor errors
  CHECK(run("eval-multi --dataset " + data + " --predictor 'remote:" + MMMS_ECHO_PREDICTOR +
            " crash'" + scratch) == 4);
}

TEST_CASE("cli feature extraction feeds the neural predictor") {
  fixtures::TempDir dir;
  const std::string data = (dir.path() / "data").string();
  const std::string feats = (dir.path() / "feats").string();
  REQUIRE(run("gen-synth --seed 8 --count 2 --height 48 --width 48 --out " + data) == 0);
  CHECK(run("extract-features --dataset " + data +
            " --backbone stub:3 --resolution 64 --patch 8 --dim 32 --depth 4 --out " + feats) == 0);
  CHECK(std::filesystem::exists(dir.path() / "feats" / "synth_0000.mmft"));
  const std::string opts = "res=64,patch=8,dim=32,depth=4,head=16,seed=3";
  const auto a = dir.path() / "a.json";
  const auto b = dir.path() / "b.json";
  CHECK(run("eval-multi --dataset " + data + " --max-clicks 3 --predictor neural:" + opts +
            ",features=" + feats + " --out " + a.string()) == 0);
  CHECK(run("eval-multi --dataset " + data + " --max-clicks 3 --predictor neural:" + opts +
            " --out " + b.string()) == 0);
  auto ja = read_json(a);
  auto jb = read_json(b);
  CHECK(ja.at("metrics") == jb.at("metrics"));
  CHECK(ja.at("images") == jb.at("images"));
  CHECK(run("eval-multi --dataset " + data + " --predictor neural:" + opts + ",features=" +
            (dir.path() / "missing").string() + " --out " +
            (dir.path() / "c.json").string()) == 2);
}
