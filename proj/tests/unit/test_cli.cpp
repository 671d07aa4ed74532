#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "anneal/cli.hpp"
#include "anneal/dataio.hpp"

namespace fs = std::filesystem;
using namespace anneal;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "anneal");
  std::vector<const char*> argv;
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("anneal-cli-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& leaf) const { return (path / leaf).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

const std::vector<std::string> kAllSchedules{"--schedules", "log,cosine,step,constant",
                                             "--gamma", "0.5", "--step-size", "20"};

}  // namespace

TEST_CASE("schedule dump prints the CSV") {
  const auto r = run_cli({"schedule", "dump", "--kind", "constant", "--epochs", "3"});
  CHECK(r.code == 0);
  CHECK(r.out == "epoch,lr\n0,0.0001\n1,0.0001\n2,0.0001\n");

  const auto log = run_cli({"schedule", "dump", "--kind", "log", "--epochs", "21", "--eta-min",
                            "0.001", "--restart-lr", "0.1", "--initial-decay", "10", "--interval",
                            "10", "--mult", "2", "--warmup", "0"});
  CHECK(log.code == 0);
  CHECK(log.out.find("\n0,0.1242868534\n") != std::string::npos);
  CHECK(log.out.find("\n9,0.07500197236\n") != std::string::npos);
  CHECK(log.out.find("\n10,0.1242868534\n") != std::string::npos);
}

TEST_CASE("schedule dump writes files") {
  TempDir dir;
  const auto r = run_cli({"schedule", "dump", "--kind", "cosine", "--epochs", "10", "--out",
                          dir.str("lr.csv"), "--svg", dir.str("lr.svg")});
  CHECK(r.code == 0);
  CHECK(first_line(slurp(dir.path / "lr.csv")) == "epoch,lr");
  CHECK(slurp(dir.path / "lr.svg").find("<svg") != std::string::npos);
}

TEST_CASE("invalid schedule parameters are usage errors") {
  const auto r = run_cli({"schedule", "dump", "--kind", "log", "--epochs", "5", "--mult", "0.5"});
  CHECK(r.code == 2);
  CHECK(r.err.find("restart_interval_multiplier") != std::string::npos);
  CHECK(run_cli({"schedule", "dump", "--kind", "linear", "--epochs", "5"}).code == 2);
  CHECK(run_cli({"schedule", "dump", "--kind", "step", "--epochs", "5"}).code == 2);
  CHECK(run_cli({"schedule", "dump", "--kind", "log", "--epochs", "0"}).code == 2);
  CHECK(run_cli({"schedule", "dump", "--kind", "log"}).code == 2);
  CHECK(run_cli({"schedule", "dump", "--kind", "log", "--epochs", "5", "--log-base", "x"}).code == 2);
  CHECK(run_cli({"bogus"}).code == 2);
}

TEST_CASE("compare writes one CSV per schedule plus a plot") {
  TempDir dir;
  std::vector<std::string> args{"compare", "--epochs", "5", "--out", dir.path.string()};
  args.insert(args.end(), kAllSchedules.begin(), kAllSchedules.end());
  const auto r = run_cli(args);
  REQUIRE(r.code == 0);
  for (const std::string name : {"log", "cosine", "step", "constant"}) {
    const auto csv = slurp(dir.path / (name + ".csv"));
    CHECK(first_line(csv) == "epoch,mean_loss,accuracy,lr_min,lr_mean,lr_max");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    CHECK(slurp(dir.path / (name + ".meta")).find("schedule=" + name) != std::string::npos);
  }
  CHECK(slurp(dir.path / "compare.svg").find("<svg") != std::string::npos);
}

TEST_CASE("a single-schedule compare matches train") {
  TempDir a;
  TempDir b;
  CHECK(run_cli({"compare", "--schedules", "cosine", "--epochs", "4", "--out", a.path.string()}).code == 0);
  CHECK(run_cli({"train", "--schedule", "cosine", "--epochs", "4", "--out", b.path.string()}).code == 0);
  CHECK(slurp(a.path / "cosine.csv") == slurp(b.path / "cosine.csv"));
  CHECK(slurp(a.path / "cosine.meta") == slurp(b.path / "cosine.meta"));
}

TEST_CASE("compare rejects empty, missing and duplicate schedule lists") {
  TempDir dir;
  CHECK(run_cli({"compare", "--epochs", "2", "--out", dir.path.string()}).code == 2);
  CHECK(run_cli({"compare", "--schedules", "", "--epochs", "2", "--out", dir.path.string()}).code == 2);
  CHECK(run_cli({"compare", "--schedules", "log,log", "--epochs", "2", "--out", dir.path.string()})
            .code == 2);
}

TEST_CASE("reruns are byte-identical and ANNEAL_SEED changes the run") {
  TempDir a;
  TempDir b;
  TempDir c;
  ::unsetenv("ANNEAL_SEED");
  CHECK(run_cli({"train", "--schedule", "log", "--epochs", "3", "--out", a.path.string()}).code == 0);
  CHECK(run_cli({"train", "--schedule", "log", "--epochs", "3", "--out", b.path.string()}).code == 0);
  CHECK(slurp(a.path / "log.csv") == slurp(b.path / "log.csv"));
  CHECK(slurp(a.path / "log.meta").find("seed=7\n") != std::string::npos);

  ::setenv("ANNEAL_SEED", "123", 1);
  CHECK(run_cli({"train", "--schedule", "log", "--epochs", "3", "--out", c.path.string()}).code == 0);
  CHECK(slurp(c.path / "log.meta").find("seed=123\n") != std::string::npos);
  CHECK(slurp(c.path / "log.csv") != slurp(a.path / "log.csv"));
  ::setenv("ANNEAL_SEED", "abc", 1);
  CHECK(run_cli({"train", "--schedule", "log", "--epochs", "3", "--out", c.path.string()}).code == 2);
  ::unsetenv("ANNEAL_SEED");
}

TEST_CASE("train can save the model") {
  TempDir dir;
  const auto r = run_cli({"train", "--schedule", "constant", "--epochs", "1", "--out",
                          dir.path.string(), "--save-model", dir.str("m.bin")});
  CHECK(r.code == 0);
  CHECK(slurp(dir.path / "m.bin").substr(0, 5) == "MNET1");
}

TEST_CASE("cifar inspect") {
  TempDir dir;
  std::vector<Cifar10Record> records(2);
  records[0].label = 3;
  records[1].label = 7;
  write_bytes(dir.path / "ok.bin", serialize_cifar10(records));
  const auto ok = run_cli({"cifar", "inspect", dir.str("ok.bin")});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("2 records\n") == 0);
  CHECK(ok.out.find("label 3: 1\n") != std::string::npos);
  CHECK(ok.out.find("label 7: 1\n") != std::string::npos);
  CHECK(ok.out.find("label 0: 0\n") != std::string::npos);
  CHECK(ok.out.find("first record checksum: ") != std::string::npos);

  write_bytes(dir.path / "empty.bin", {});
  const auto empty = run_cli({"cifar", "inspect", dir.str("empty.bin")});
  CHECK(empty.code == 0);
  CHECK(empty.out.find("first record checksum: none") != std::string::npos);

  write_bytes(dir.path / "short.bin", std::vector<std::uint8_t>(3072, 0));
  const auto bad = run_cli({"cifar", "inspect", dir.str("short.bin")});
  CHECK(bad.code == 3);
  CHECK(bad.err.find("offset 0") != std::string::npos);

  CHECK(run_cli({"cifar", "inspect", dir.str("missing.bin")}).code == 3);
}

TEST_CASE("help shows defaults") {
  const auto r = run_cli({"train", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("0.9") != std::string::npos);
  CHECK(r.out.find("--momentum") != std::string::npos);
}

TEST_CASE("landscape bench") {
  TempDir dir;
  const auto r = run_cli({"landscape", "bench", "--function", "rastrigin", "--start", "3.1,2.8",
                          "--steps", "200", "--schedules", "log,cosine", "--out", dir.path.string()});
  CHECK(r.code == 0);
  CHECK(first_line(slurp(dir.path / "rastrigin-log.csv")) == "step,f,best_f,lr");
  CHECK(fs::exists(dir.path / "rastrigin-cosine.csv"));
  CHECK(fs::exists(dir.path / "landscape.svg"));

  const auto newton = run_cli({"landscape", "bench", "--start", "0.1,0.1", "--steps", "5",
                               "--schedules", "constant", "--eta0", "1", "--optimizer", "newton",
                               "--out", dir.path.string()});
  CHECK(newton.code == 0);
  CHECK(run_cli({"landscape", "bench", "--function", "sphere", "--start", "1", "--steps", "5",
                 "--out", dir.path.string()})
            .code == 2);
  const auto diverge = run_cli({"landscape", "bench", "--start", "3.1,2.8", "--steps", "1000",
                                "--schedules", "constant", "--eta0", "10", "--momentum", "0",
                                "--out", dir.path.string()});
  CHECK(diverge.code == 4);
}
