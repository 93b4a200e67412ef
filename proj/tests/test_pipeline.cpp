#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "phasecal/error.hpp"
#include "phasecal/inference.hpp"
#include "phasecal/kv_config.hpp"
#include "phasecal/pipeline.hpp"
#include "phasecal/simulator.hpp"

using namespace phasecal;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "phasecal_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Exec {
  int code;
  std::string output;
};

Exec cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + PHASECAL_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

RunConfig small_run(const fs::path& out) {
  RunConfig cfg;
  cfg.out = out;
  cfg.simulation.validation_videos = 2;
  cfg.simulation.test_videos = 2;
  cfg.simulation.frames_mean = 400.0;
  cfg.analysis.sweep = true;
  return cfg;
}

}  // namespace

TEST_CASE("key-value config files") {
  const auto dir = scratch("kv");
  {
    std::ofstream f(dir / "a.conf");
    f << "# comment\n\nseed = 7\n  threshold=0.4  \n";
  }
  const auto kv = load_kv_file(dir / "a.conf");
  REQUIRE(kv.size() == 2);
  CHECK(kv[0] == std::pair<std::string, std::string>{"seed", "7"});
  CHECK(kv[1] == std::pair<std::string, std::string>{"threshold", "0.4"});
  CHECK(render_kv({{"b", "2"}, {"a", "1"}}) == "a = 1\nb = 2\n");

  {
    std::ofstream f(dir / "bad.conf");
    f << "seed = 1\nnot a pair\n";
  }
  try {
    load_kv_file(dir / "bad.conf");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("pipeline output is deterministic and echoes its config") {
  const auto a = scratch("run_a");
  const auto b = scratch("run_b");
  const auto ra = run_pipeline(small_run(a));
  run_pipeline(small_run(b));

  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_directory()) {
      CHECK_MESSAGE(fs::exists(e.path() / "run_config.txt"), e.path().string());
      continue;
    }
    ++files;
    const auto rel = fs::relative(e.path(), a);
    REQUIRE_MESSAGE(fs::exists(b / rel), rel.string());
    CHECK_MESSAGE(slurp(e.path()) == slurp(b / rel), rel.string());
  }
  CHECK(files > 20);
  CHECK(fs::exists(a / "report" / "report.txt"));
  CHECK(fs::exists(a / "report" / "report.json"));
  CHECK(fs::exists(a / "calibration" / "reliability_after.csv"));
  CHECK(fs::exists(a / "inference" / kConfidenceCalibratedName / "trace.csv"));
  CHECK(slurp(a / "run_config.txt").find("seed = 42") != std::string::npos);

  CHECK(ra.threshold >= 0.1);
  CHECK(ra.threshold <= 0.9);
  CHECK(ra.sweep.size() == 9);
  CHECK(ra.calibration.fitted.value() > 1.5);
}

TEST_CASE("analysis rejects mismatched inputs") {
  CHECK_THROWS_AS(analyze({}, {}, AnalysisConfig{}), Error);
  RunConfig cfg = small_run(scratch("bad_run"));
  cfg.simulation.noise.base_accuracy = 0.1;
  try {
    run_pipeline(cfg);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "simulate");
    CHECK(std::string(e.what()).rfind("simulate: ", 0) == 0);
  }
}

TEST_CASE("command line") {
  const auto dir = scratch("cli");
  const auto log = dir / "log.txt";

  SUBCASE("help and selftest") {
    CHECK(cli("--help", log).code == 0);
    const auto st = cli("selftest", log);
    CHECK(st.code == 0);
    CHECK(st.output.find("FAIL") == std::string::npos);
    CHECK(cli("frobnicate", log).code == 2);
  }

  SUBCASE("threshold zero reproduces the baseline") {
    REQUIRE(cli("simulate --videos 1 --val-videos 1 --frames-mean 300 --out \"" + (dir / "data").string() + "\"", log)
                .code == 0);
    const auto vid = dir / "data" / "test" / "test01";
    const auto out = dir / "pred.csv";
    const auto r = cli("infer --strategy confidence --threshold 0 --base \"" + (vid / "base.csv").string() +
                           "\" --bank \"" + vid.string() + "\" --out \"" + out.string() + "\"",
                       log);
    REQUIRE_MESSAGE(r.code == 0, r.output);
    const auto pred = load_timelines(out);
    REQUIRE(pred.size() == 1);
    CHECK(pred[0].indices() == load_logits(vid / "base.csv").argmax());
    CHECK(fs::exists(dir / "infer_config.txt"));

    const auto ev = cli("evaluate --pred \"" + out.string() + "\" --gt \"" + (vid / "gt.csv").string() +
                            "\" --out \"" + (dir / "eval").string() + "\"",
                        log);
    CHECK_MESSAGE(ev.code == 0, ev.output);
    CHECK(fs::exists(dir / "eval" / "report.txt"));
  }

  SUBCASE("missing transition model is named") {
    fs::create_directories(dir / "emptybank");
    const auto r = cli("infer --strategy transition --bank \"" + (dir / "emptybank").string() + "\" --out \"" +
                           (dir / "x.csv").string() + "\"",
                       log);
    CHECK(r.code == 2);
    CHECK(r.output.find("trans_1_2.csv") != std::string::npos);
  }

  SUBCASE("flags override the config file") {
    {
      std::ofstream f(dir / "run.conf");
      f << "videos = 1\nval-videos = 1\nframes-mean = 200\nseed = 5\n";
    }
    const auto out = dir / "run";
    const auto r = cli("run --config \"" + (dir / "run.conf").string() + "\" --seed 9 --out \"" + out.string() + "\"",
                       log);
    REQUIRE_MESSAGE(r.code == 0, r.output);
    const auto echo = slurp(out / "run_config.txt");
    CHECK(echo.find("seed = 9") != std::string::npos);
    CHECK(echo.find("frames-mean = 200") != std::string::npos);
    CHECK(fs::exists(out / "data" / "test" / "test01" / "base.csv"));
    CHECK_FALSE(fs::exists(out / "data" / "test" / "test02"));
  }

  SUBCASE("bad input exits with the input error code") {
    {
      std::ofstream f(dir / "bad.csv");
      f << "video_id,frame_idx,phase\nv,0,9\n";
    }
    const auto r = cli("evaluate --pred \"" + (dir / "bad.csv").string() + "\" --gt \"" + (dir / "bad.csv").string() +
                           "\" --out \"" + (dir / "e").string() + "\"",
                       log);
    CHECK(r.code == 2);
    CHECK(r.output.find(":2:") != std::string::npos);
  }
}
