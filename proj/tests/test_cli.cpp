// Copyright 2026 The cohdet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include "test_util.hpp"

namespace fs = std::filesystem;
using testing::fixture;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

struct Scratch {
  fs::path dir = fs::temp_directory_path() / ("cohdet_cli_" + std::to_string(::getpid()));
  Scratch() { fs::create_directories(dir); }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

const fs::path& scratch() {
  static const Scratch s;
  return s.dir;
}

std::string path(const std::string& name) { return (scratch() / name).string(); }

Run run(const std::string& args) {
  const std::string log = path("stdout.txt");
  const std::string cmd = std::string(COHDET_CLI) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = [&] {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }();
  return r;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const std::string corpus = fixture("corpus.jsonl");

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run("--help").code == 0);
  const auto unknown = run("stats --corpus " + corpus + " --out " + path("s.json") + " --bogus");
  CHECK(unknown.code == 2);
  CHECK(run("stats --corpus " + corpus).code == 2);
  const auto bad = run("ingest --corpus " + fixture("bad_span.jsonl") + " --out " + path("x.jsonl"));
  CHECK(bad.code == 1);
  CHECK(bad.output.find("error:") != std::string::npos);
  const auto single = run("train --corpus " + fixture("single_class.jsonl") + " --out " +
                          path("m.jsonl") + " --checkpoint " + path("c.ckpt"));
  CHECK(single.code == 1);
  CHECK(single.output.find("SingleClassDataset") != std::string::npos);
}

TEST_CASE("ingest round trip") {
  REQUIRE(run("ingest --corpus " + corpus + " --out " + path("a.jsonl")).code == 0);
  REQUIRE(run("ingest --corpus " + path("a.jsonl") + " --out " + path("b.jsonl")).code == 0);
  CHECK(slurp(path("a.jsonl")) == slurp(path("b.jsonl")));
  REQUIRE(run("ingest --corpus " + corpus + " --out " + path("s.jsonl") + " --sample 2 --seed 4").code == 0);
  std::size_t lines = 0;
  for (char ch : slurp(path("s.jsonl"))) lines += ch == '\n';
  CHECK(lines == 2);
}

TEST_CASE("graph and stats outputs") {
  REQUIRE(run("graph --corpus " + corpus + " --out " + path("g.jsonl")).code == 0);
  std::istringstream g(slurp(path("g.jsonl")));
  std::string line;
  std::size_t records = 0;
  while (std::getline(g, line)) {
    CHECK(nlohmann::json::parse(line).is_object());
    ++records;
  }
  CHECK(records == 6);

  REQUIRE(run("stats --corpus " + corpus + " --out " + path("st.json") + " --dump " + path("d.tsv")).code == 0);
  const auto report = nlohmann::json::parse(slurp(path("st.json")));
  CHECK(report.is_object());
  CHECK_FALSE(slurp(path("d.tsv")).empty());
  REQUIRE(run("stats --corpus " + corpus + " --out " + path("st2.json") + " --threads 3").code == 0);
  CHECK(slurp(path("st.json")) == slurp(path("st2.json")));
}

TEST_CASE("perturb is reproducible") {
  const std::string base = "perturb --corpus " + corpus + " --perturb-kind insert --seed 9 --out ";
  REQUIRE(run(base + path("p1.jsonl")).code == 0);
  REQUIRE(run(base + path("p2.jsonl")).code == 0);
  CHECK(slurp(path("p1.jsonl")) == slurp(path("p2.jsonl")));
  CHECK(slurp(path("p1.jsonl")) != slurp(corpus));
  CHECK(run("perturb --corpus " + corpus + " --out " + path("p3.jsonl")).code == 1);
}

TEST_CASE("cues") {
  REQUIRE(run("cues --corpus " + fixture("cue_pairs.jsonl") + " --out " + path("cues.tsv")).code == 0);
  const auto table = slurp(path("cues.tsv"));
  CHECK(table.rfind("token\tapplicability\tproductivity\tcoverage\n", 0) == 0);
  CHECK(table.find("indeed\t4\t0.750000\t0.666667\n") != std::string::npos);

  write_file(path("signs.txt"), "0.2 0.1 -0.3 0.4\n");
  const auto r = run("cues --corpus " + fixture("cue_pairs.jsonl") + " --out " + path("cues2.tsv") +
                     " --signs " + path("signs.txt"));
  REQUIRE(r.code == 0);
  CHECK(r.output.find("gamma_1\t0.750000") != std::string::npos);
  CHECK(r.output.find("gamma_4\t0.000000\ngamma_5\t-") != std::string::npos);
  CHECK(run("cues --corpus " + corpus + " --out " + path("cues3.tsv")).code == 1);
}

TEST_CASE("train then eval") {
  write_file(path("tiny.cfg"),
             "embed_dim = 6\nhidden_dim = 5\nbatch_size = 2\nmax_epochs = 3\nlr = 0.05\nseed = 11\n");
  const std::string train = "train --corpus " + corpus + " --config " + path("tiny.cfg") +
                            " --checkpoint " + path("t.ckpt") + " --out ";
  REQUIRE(run(train + path("m1.jsonl")).code == 0);
  const auto first_ckpt = slurp(path("t.ckpt"));
  REQUIRE(run(train + path("m2.jsonl")).code == 0);
  CHECK(slurp(path("m1.jsonl")) == slurp(path("m2.jsonl")));
  CHECK(slurp(path("t.ckpt")) == first_ckpt);

  std::istringstream log(slurp(path("m1.jsonl")));
  std::string line;
  std::size_t epochs = 0;
  while (std::getline(log, line)) {
    const auto rec = nlohmann::json::parse(line);
    CHECK(rec.contains("epoch"));
    ++epochs;
  }
  CHECK(epochs >= 1);
  CHECK(epochs <= 3);

  REQUIRE(run("eval --corpus " + corpus + " --checkpoint " + path("t.ckpt") + " --out " +
              path("e.json") + " --perturb-kind delete --seed 2")
              .code == 0);
  const auto report = nlohmann::json::parse(slurp(path("e.json")));
  const double clean = report["clean"]["accuracy"];
  const double perturbed = report["perturbed"]["accuracy"];
  CHECK(report["accuracy_delta"].get<double>() == doctest::Approx(perturbed - clean));
}
