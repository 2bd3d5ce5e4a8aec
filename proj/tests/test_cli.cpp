#include "lovm/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>

using namespace lovm;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / ("lovm_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

Run swab(const std::string& args) {
  const fs::path log = scratch() / "out.txt";
  const std::string cmd = std::string(SWAB_BIN) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text_file(log);
  return r;
}

std::string at(const std::string& name) { return (scratch() / name).string(); }

const std::string& small_universe() {
  static const std::string dir = [] {
    const std::string d = at("uni");
    swab("synth --out " + d + " --seed 3 --datasets 4 --classes 5 --models 7 --dim 12");
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("validate accepts synthetic output and reports the format") {
  const Run r = swab("validate " + small_universe());
  CHECK(r.code == 0);
  CHECK(r.out.find("format: swab-mat") != std::string::npos);
  CHECK(r.out.find("config: {") != std::string::npos);
  CHECK(r.out.find("dataset_0: ok") != std::string::npos);

  const std::string csv = at("uni_csv");
  CHECK(swab("synth --csv --out " + csv + " --seed 3 --datasets 3 --classes 4 --models 6 --dim 8").code == 0);
  const Run c = swab("validate " + csv + "/d0");
  CHECK(c.code == 0);
  CHECK(c.out.find("format: csv") != std::string::npos);
}

TEST_CASE("validate reports a truncated matrix") {
  const std::string d = at("trunc");
  fs::remove_all(d);
  fs::copy(small_universe() + "/d1", d, fs::copy_options::recursive);
  const fs::path victim = fs::path(d) / "classnames.swab";
  REQUIRE(fs::exists(victim));
  fs::resize_file(victim, fs::file_size(victim) - 8);
  const Run r = swab("validate " + d);
  CHECK(r.code == 1);
  CHECK(r.out.find("payload shorter than header rows") != std::string::npos);
}

TEST_CASE("rank recovers the truth under perfect transfer and is reproducible") {
  const std::string u = at("flat");
  REQUIRE(swab("synth --out " + u + " --seed 4 --datasets 2 --classes 5 --models 10 --dim 12 --clusters 1 --noise 0")
              .code == 0);
  const std::string args = "rank --target " + u + "/d0 --source " + u + "/d0 --branch swab-c --seeds 1";
  REQUIRE(swab(args + " --json " + at("r1.json")).code == 0);
  REQUIRE(swab(args + " --json " + at("r2.json")).code == 0);
  const std::string a = read_text_file(at("r1.json"));
  CHECK(a == read_text_file(at("r2.json")));

  const auto j = nlohmann::json::parse(a);
  const auto truth = nlohmann::json::parse(read_text_file(fs::path(u) / "truth.json")).at("dataset_0");
  double last = 0.0;
  for (const auto& m : j.at("models")) {
    const std::string id = m.at("model_id");
    const double t = truth.at(static_cast<std::size_t>(std::stoi(id.substr(id.find('_') + 1))));
    CHECK(t > last);
    last = t;
  }
}

TEST_CASE("rank with the average-rank branch orders by the uniform baseline") {
  const std::string u = small_universe();
  REQUIRE(swab("rank --target " + u + "/d0 --source " + u + "/d1 --source " + u + "/d2 --branch avg-rank --json " +
               at("avg.json"))
              .code == 0);
  const auto j = nlohmann::json::parse(read_text_file(at("avg.json")));
  CHECK(j.at("primary_method") == "avg-rank");
  double last = -1.0;
  for (const auto& m : j.at("models")) {
    CHECK(m.at("rank").get<double>() == m.at("ranks").at("avg-rank").get<double>());
    CHECK(m.at("average_rank").get<double>() >= last);
    last = m.at("average_rank").get<double>();
  }
}

TEST_CASE("bench writes byte-identical reports") {
  const std::string u = small_universe();
  REQUIRE(swab("bench " + u + " --seeds 1..3 --out " + at("b1")).code == 0);
  const Run second = swab("bench " + u + " --seeds 1..3 --threads 2 --out " + at("b2"));
  REQUIRE(second.code == 0);
  CHECK(second.out.find("swab-m") != std::string::npos);
  for (const char* f : {"report.json", "per_dataset.csv", "predictions.csv"}) {
    CHECK(read_text_file(fs::path(at("b1")) / f) == read_text_file(fs::path(at("b2")) / f));
  }
  const auto rep = nlohmann::json::parse(read_text_file(fs::path(at("b1")) / "report.json"));
  CHECK(rep.at("config").at("seeds").size() == 3);

  const Run rerun = swab("bench " + u + " --config " + (fs::path(at("b1")) / "report.json").string() + " --out " +
                         at("b3"));
  REQUIRE(rerun.code == 0);
  CHECK(read_text_file(fs::path(at("b1")) / "report.json") == read_text_file(fs::path(at("b3")) / "report.json"));
}

TEST_CASE("exit codes") {
  const std::string d = at("noacc");
  fs::remove_all(d);
  fs::copy(small_universe(), d, fs::copy_options::recursive);
  const fs::path manifest = fs::path(d) / "d1" / "manifest.json";
  auto m = nlohmann::json::parse(read_text_file(manifest));
  m.at("models").at(0).erase("class_accuracies");
  write_text_file(manifest, m.dump(2));
  const Run r = swab("bench " + d + " --seeds 1 --out " + at("b4"));
  CHECK(r.code == 2);
  CHECK(r.out.find("class_accuracies") != std::string::npos);

  CHECK(swab("bench " + small_universe() + " --alpha 2 --out " + at("b5")).code == 1);
  CHECK(swab("validate " + at("nowhere")).code == 1);
}
