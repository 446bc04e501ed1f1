#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bvmdp/errors.h"
#include "bvmdp/experiments.h"

namespace bvmdp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bvmdp_test_" + name);
  fs::remove_all(p);
  return p;
}

json small_beta(const fs::path& out) {
  return json{{"experiment", "beta-moments"},
              {"seed", 7},
              {"nu", {{"total_mass", 1.0}, {"base", {{"kind", "uniform"}}}}},
              {"t", 0.5},
              {"n_list", {1000}},
              {"reps", 5000},
              {"out", out.string()}};
}

json small_coupling(const fs::path& out, int workers) {
  return json{{"experiment", "coupling-rate"},
              {"seed", 3},
              {"nu_list", {{{"total_mass", 1.0}, {"base", {{"kind", "normal"}}}}}},
              {"F0", {{"kind", "normal"}}},
              {"n_list", {16, 32, 64, 128}},
              {"reps", 30},
              {"workers", workers},
              {"out", out.string()}};
}

std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BVMDP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Registry, HasAllExperiments) {
  std::vector<std::string> names;
  for (const auto& e : experiment_registry()) {
    names.push_back(e.name);
    EXPECT_FALSE(e.csv_columns.empty()) << e.name;
  }
  for (const char* want : {"laplace-uniformity", "bv-laplace", "coupling-rate", "kiefer-rate",
                           "true-cdf", "tail-bounds", "beta-moments", "maxima", "distributional",
                           "lindeberg"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
  }
}

TEST(Config, BetaTDomainMessage) {
  json j = small_beta(scratch("t"));
  j["t"] = 1.5;
  EXPECT_NE(config_error(j).find("t must satisfy 0 ≤ t < 1"), std::string::npos);
}

TEST(Config, RejectsUnknownExperimentAndBadFields) {
  json j = small_beta(scratch("bad"));
  j["experiment"] = "nope";
  EXPECT_NE(config_error(j).find("nope"), std::string::npos);

  j = small_beta(scratch("bad"));
  j["reps"] = 0;
  EXPECT_NE(config_error(j).find("reps"), std::string::npos);

  j = small_beta(scratch("bad"));
  j["seed"] = -3;
  EXPECT_NE(config_error(j).find("seed"), std::string::npos);

  j = small_beta(scratch("bad"));
  j["reps"] = 2.5;
  EXPECT_NE(config_error(j).find("reps"), std::string::npos);

  j = small_coupling(scratch("bad"), 1);
  j["n_list"] = {16, -32, 64, 128};
  EXPECT_NE(config_error(j).find("n_list"), std::string::npos);

  j = small_coupling(scratch("bad"), 1);
  j["n_list"] = {16, 48};
  EXPECT_FALSE(config_error(j).empty());

  j = small_beta(scratch("bad"));
  j["nu"]["total_mass"] = -1.0;
  EXPECT_NE(config_error(j).find("nu"), std::string::npos);
}

TEST(Config, SmokeConfigsParse) {
  for (const auto& entry : fs::directory_iterator(fs::path(BVMDP_CONFIG_DIR) / "smoke")) {
    EXPECT_NO_THROW(parse_config(read_json_file(entry.path()))) << entry.path();
  }
  for (const auto& entry : fs::directory_iterator(fs::path(BVMDP_CONFIG_DIR) / "acceptance")) {
    EXPECT_NO_THROW(parse_config(read_json_file(entry.path()))) << entry.path();
  }
}

TEST(Config, Overrides) {
  ConfigOverrides o;
  o.seed = 99;
  o.n = 500;
  o.reps = 12;
  o.out = "elsewhere";
  const auto c = parse_config(apply_overrides(small_beta(scratch("o")), o));
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.n_list, std::vector<std::size_t>{500});
  EXPECT_EQ(c.reps, 12u);
  EXPECT_EQ(c.out, "elsewhere");
}

TEST(Run, BetaMomentsWritesOutputs) {
  const fs::path out = scratch("beta");
  const RunManifest m = run_experiment(parse_config(small_beta(out)));
  EXPECT_TRUE(m.all_pass());
  for (const char* f : {"records.csv", "summary.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_EQ(m.digests.at("records.csv"), sha256_file(out / "records.csv"));
  const RunManifest back = manifest_from_json(read_json_file(out / "manifest.json"));
  EXPECT_EQ(back.digests, m.digests);
  EXPECT_EQ(back.verdicts.size(), m.verdicts.size());
  EXPECT_EQ(back.version, kArtifactVersion);
}

TEST(Run, SameSeedSameDigests) {
  const RunManifest a = run_experiment(parse_config(small_beta(scratch("det_a"))));
  const RunManifest b = run_experiment(parse_config(small_beta(scratch("det_b"))));
  EXPECT_EQ(a.digests, b.digests);
  json other = small_beta(scratch("det_c"));
  other["seed"] = 8;
  EXPECT_NE(run_experiment(parse_config(other)).digests.at("records.csv"),
            a.digests.at("records.csv"));
}

TEST(Run, WorkerCountDoesNotChangeDigests) {
  const RunManifest a = run_experiment(parse_config(small_coupling(scratch("w1"), 1)));
  const RunManifest b = run_experiment(parse_config(small_coupling(scratch("w3"), 3)));
  EXPECT_EQ(a.digests.at("records.csv"), b.digests.at("records.csv"));
  EXPECT_EQ(a.digests.at("summary.json"), b.digests.at("summary.json"));
}

TEST(Report, EmptyPassingAndMixed) {
  const Report empty = build_report({});
  EXPECT_TRUE(empty.rows.empty());
  EXPECT_TRUE(empty.all_pass());

  const fs::path pass_dir = scratch("rep_pass");
  run_experiment(parse_config(small_beta(pass_dir)));
  const Report one = build_report({pass_dir / "manifest.json"});
  ASSERT_EQ(one.rows.size(), 1u);
  EXPECT_TRUE(one.all_pass());
  std::ostringstream text;
  write_report_text(text, one);
  EXPECT_NE(text.str().find("pass"), std::string::npos);

  // A failing manifest: the same run judged against a wrong target.
  const fs::path fail_dir = scratch("rep_fail");
  json bad = small_beta(fail_dir);
  bad["reps"] = 20;
  bad["tolerances"] = {{"rel_error", 1e-9}};
  EXPECT_FALSE(run_experiment(parse_config(bad)).all_pass());
  const Report mixed = build_report({pass_dir / "manifest.json", fail_dir / "manifest.json"});
  EXPECT_EQ(mixed.rows.size(), 2u);
  EXPECT_FALSE(mixed.all_pass());
  std::ostringstream csv;
  write_report_csv(csv, mixed);
  EXPECT_NE(csv.str().find(",fail\n"), std::string::npos);

  EXPECT_THROW(build_report({scratch("missing") / "manifest.json"}), FilesystemError);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  const fs::path good = dir / "good.json";
  std::ofstream(good) << small_beta(dir / "good_out").dump();
  EXPECT_EQ(run_cli("run " + good.string()), 0);

  json bad = small_beta(dir / "bad_out");
  bad["t"] = 1.5;
  const fs::path bad_path = dir / "bad.json";
  std::ofstream(bad_path) << bad.dump();
  EXPECT_EQ(run_cli("run " + bad_path.string()), 2);

  json failing = small_beta(dir / "fail_out");
  failing["reps"] = 20;
  failing["tolerances"] = {{"rel_error", 1e-9}};
  const fs::path fail_path = dir / "fail.json";
  std::ofstream(fail_path) << failing.dump();
  EXPECT_EQ(run_cli("run " + fail_path.string()), 1);

  EXPECT_EQ(run_cli("report"), 0);
  EXPECT_EQ(run_cli("report " + (dir / "good_out" / "manifest.json").string()), 0);
  EXPECT_EQ(run_cli("report " + (dir / "good_out" / "manifest.json").string() + " " +
                    (dir / "fail_out" / "manifest.json").string()),
            1);
  EXPECT_EQ(run_cli("report " + (dir / "nowhere.json").string()), 1);
  EXPECT_EQ(run_cli("list"), 0);
  EXPECT_EQ(run_cli("run " + good.string() + " --seed 5 --reps 100 --out " +
                    (dir / "override_out").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "override_out" / "manifest.json"));
}

}  // namespace
}  // namespace bvmdp
