#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "qsuggest/error.hpp"
#include "qsuggest/pipeline.hpp"
#include "qsuggest/text.hpp"

using namespace qsuggest;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"([lda]
topics = 6
iterations = 120
burn_in = 40
inference_iterations = 40
inference_burn_in = 20
[ranker]
trees = 15
[synth]
topics = 6
documents = 400
users = 150
sessions = 900
weeks = 3
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Pipeline : public ::testing::Test {
 protected:
  static fs::path root() { return fs::temp_directory_path() / "qsuggest_pipeline_test"; }

  static ExperimentConfig config_in(const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream(dir / "run.conf") << kSmallConfig << "[paths]\nlogs = " << (dir / "data/events.tsv").string()
                                    << "\ncorpus = " << (dir / "data/corpus.tsv").string()
                                    << "\nground_truth = " << (dir / "data/truth.tsv").string()
                                    << "\nmodel_dir = " << (dir / "model").string()
                                    << "\nreport_dir = " << (dir / "report").string() << '\n';
    return load_config(dir / "run.conf", [](const std::string&) { return std::nullopt; });
  }

  static int cli(const fs::path& dir, const std::string& args, std::string* out = nullptr) {
    const auto capture = dir / "cli.out";
    const auto cmd = std::string(QSUGGEST_CLI) + " -c " + (dir / "run.conf").string() + " " + args +
                     " > " + capture.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (out != nullptr) *out = slurp(capture);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static void SetUpTestSuite() {
    fs::remove_all(root());
    config_ = new ExperimentConfig(config_in(root() / "a"));
    std::ostringstream log;
    run_synth(*config_, log);
    run_ingest(*config_, log);
  }
  static void TearDownTestSuite() {
    delete config_;
    fs::remove_all(root());
  }

  static ExperimentConfig* config_;
};

ExperimentConfig* Pipeline::config_ = nullptr;

}  // namespace

TEST_F(Pipeline, StatsUseTheUsualRowLabels) {
  std::ostringstream out;
  run_stats(*config_, out);
  for (const char* label : {"#search sessions", "#events", "#events/session", "#queries",
                            "#query/session", "#clicked url", "#clicks/session"}) {
    EXPECT_NE(out.str().find(label), std::string::npos) << label;
  }
  std::string via_cli;
  EXPECT_EQ(cli(root() / "a", "stats", &via_cli), 0);
  EXPECT_EQ(via_cli, out.str());
}

TEST_F(Pipeline, SuggestBeforeTrainRankerNamesTheMissingStage) {
  std::ostringstream log;
  run_train_lda(*config_, log);
  run_build_hierarchy(*config_, log);
  fs::remove(ensemble_path(*config_, "Click"));
  fs::remove(ensemble_path(*config_, "Ours"));
  SuggestRequest req;
  req.query = "anything";
  try {
    run_suggest(*config_, req);
    FAIL() << "expected a missing artifact";
  } catch (const MissingArtifactError& e) {
    EXPECT_NE(std::string(e.what()).find("train-ranker"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("ensemble_"), std::string::npos) << e.what();
  }
  std::string out;
  EXPECT_EQ(cli(root() / "a", "suggest -q anything", &out), 3);
  EXPECT_NE(out.find("train-ranker"), std::string::npos) << out;
}

TEST_F(Pipeline, FullPathAndSuggest) {
  std::ostringstream log;
  run_train_lda(*config_, log);
  run_build_hierarchy(*config_, log);
  run_train_ranker(*config_, log);
  const auto output = run_evaluate(*config_, log);
  ASSERT_FALSE(output.result.runs.empty());
  const auto report = slurp(output.report);
  EXPECT_NE(report.find("[results]"), std::string::npos);
  EXPECT_NE(report.find("refinement_union = true"), std::string::npos);
  EXPECT_NE(report.find("refinement_inserted"), std::string::npos);
  EXPECT_TRUE(fs::exists(fs::path(config_->report_dir) / "effective.conf"));
  EXPECT_TRUE(fs::exists(output.impressions));

  // All three methods see the same impressions in each fold.
  for (std::size_t i = 0; i + 2 < output.result.runs.size(); i += 3) {
    const auto& runs = output.result.runs;
    ASSERT_EQ(runs[i].records.size(), runs[i + 1].records.size());
    ASSERT_EQ(runs[i].records.size(), runs[i + 2].records.size());
    for (std::size_t r = 0; r < runs[i].records.size(); ++r) {
      EXPECT_EQ(runs[i].records[r].impression_id, runs[i + 2].records[r].impression_id);
    }
  }

  // Base returns the hierarchy's list unchanged.
  std::ifstream hin(artifact_path(*config_, artifact::kHierarchy));
  const auto hierarchy = ConceptHierarchy::load(hin);
  const auto& some = hierarchy.nodes()[hierarchy.nodes().size() / 2].text;
  SuggestRequest req;
  req.query = some;
  req.method = "Base";
  const auto base = run_suggest(*config_, req);
  const auto direct = suggest(hierarchy, some, config_->list_size);
  ASSERT_EQ(base.size(), direct.suggestions.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    EXPECT_EQ(base[i].text, direct.suggestions[i]);
    EXPECT_EQ(base[i].base_rank, static_cast<int>(i + 1));
  }

  req.method = "Ours";
  req.history = {{"", EventType::kQuery, 0, "first query", {}}};
  const auto ours = run_suggest(*config_, req);
  EXPECT_EQ(ours.size(), base.size());
  for (const auto& s : ours) EXPECT_EQ(at(s.features, Feature::kQueryNo), 2.0);

  std::string out;
  EXPECT_EQ(cli(root() / "a", "suggest -m Click --history \"q:first query\" -q \"" + some + "\"", &out), 0);
  EXPECT_NE(out.find(direct.suggestions.empty() ? "" : direct.suggestions.front()), std::string::npos);
}

TEST_F(Pipeline, CliExitCodes) {
  const auto dir = root() / "a";
  EXPECT_EQ(cli(dir, "no-such-command"), 2);
  EXPECT_EQ(cli(dir, "suggest"), 2);  // --query is required
  std::ofstream(dir / "bad.conf") << "[ranker]\nbogus = 1\n";
  const auto cmd = std::string(QSUGGEST_CLI) + " -c " + (dir / "bad.conf").string() + " stats > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 2);

  const auto empty = root() / "empty";
  config_in(empty);
  EXPECT_EQ(cli(empty, "stats"), 3);
  EXPECT_EQ(cli(empty, "train-lda"), 3);
  fs::create_directories(empty / "data");
  std::ofstream(empty / "data/events.tsv") << "garbage line\n";
  std::ofstream(empty / "data/corpus.tsv") << "d1\tsome text\n";
  EXPECT_EQ(cli(empty, "ingest"), 4);
}
