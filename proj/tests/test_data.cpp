#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "vckw/data.hpp"
#include "vckw/synth.hpp"

using namespace vckw;

namespace {

Sample small_sample() {
  Sample s;
  s.video_id = "vid-1";
  s.clip_features = Matrix::from_rows({{1.0, 0.0}, {0.5, 0.5}, {0.0, 1.0}});
  s.word_features = Matrix::from_rows({{0.25, -0.75}});
  s.words = {"hello"};
  s.relevant_clips = {0, 2};
  s.saliency_labels = std::vector<int>{3, 1, 0};
  s.moment_spans = std::vector<Window>{{0.0, 2.0}, {4.0, 6.0}};
  s.clip_duration_sec = 2.0;
  s.meta = {{"note", "fixture"}};
  return s;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("vckw_data_test_" + std::to_string(std::random_device{}()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("sample validation catches malformed fields") {
  REQUIRE_NOTHROW(small_sample().validate());

  Sample s = small_sample();
  s.video_id.clear();
  REQUIRE_THROWS_AS(s.validate(), validation_error);

  s = small_sample();
  s.word_features = Matrix::from_rows({{1.0, 2.0, 3.0}});
  REQUIRE_THROWS_WITH(s.validate(), Catch::Matchers::ContainsSubstring("word_features dim"));

  s = small_sample();
  s.relevant_clips = {0, 3};
  REQUIRE_THROWS_WITH(s.validate(), Catch::Matchers::ContainsSubstring("out of range"));

  s = small_sample();
  s.relevant_clips = {2, 0};
  REQUIRE_THROWS_WITH(s.validate(), Catch::Matchers::ContainsSubstring("sorted"));

  s = small_sample();
  s.words = {"a", "b"};
  REQUIRE_THROWS_WITH(s.validate(), Catch::Matchers::ContainsSubstring("words length"));

  s = small_sample();
  s.saliency_labels = std::vector<int>{1};
  REQUIRE_THROWS_WITH(s.validate(), Catch::Matchers::ContainsSubstring("saliency_labels"));

  s = small_sample();
  s.moment_spans = std::vector<Window>{{3.0, 3.0}};
  REQUIRE_THROWS_WITH(s.validate(), Catch::Matchers::ContainsSubstring("start >= end"));

  s = small_sample();
  s.clip_duration_sec = 0.0;
  REQUIRE_THROWS_WITH(s.validate(), Catch::Matchers::ContainsSubstring("clip_duration_sec"));

  s = small_sample();
  s.clip_features(1, 1) = std::numeric_limits<double>::infinity();
  REQUIRE_THROWS_WITH(s.validate(), Catch::Matchers::ContainsSubstring("non-finite"));
}

TEST_CASE("relevance mask marks exactly the listed clips") {
  const Sample s = small_sample();
  REQUIRE(s.relevance_mask() == std::vector<std::uint8_t>{1, 0, 1});
}

TEST_CASE("sample json round trip is exact") {
  const Sample s = small_sample();
  const json j = sample_to_json(s);
  const Sample back = sample_from_json(j, "test");
  REQUIRE(back.video_id == s.video_id);
  REQUIRE(back.clip_features == s.clip_features);
  REQUIRE(back.word_features == s.word_features);
  REQUIRE(back.words == s.words);
  REQUIRE(back.relevant_clips == s.relevant_clips);
  REQUIRE(back.saliency_labels == s.saliency_labels);
  REQUIRE(back.moment_spans->size() == 2);
  REQUIRE((*back.moment_spans)[1] == (*s.moment_spans)[1]);
  REQUIRE(back.clip_duration_sec == s.clip_duration_sec);
  REQUIRE(sample_to_json(back).dump() == j.dump());
}

TEST_CASE("sample json round trip survives random doubles") {
  SynthConfig cfg;
  cfg.num_samples = 3;
  cfg.clips = 10;
  cfg.words = 4;
  cfg.segments = 3;
  cfg.dim = 7;
  const Dataset ds = synth_generate(cfg, 99);
  for (const Sample& s : ds.samples) {
    const std::string line = sample_to_json(s).dump();
    const Sample back = sample_from_json(json::parse(line), "test");
    REQUIRE(sample_to_json(back).dump() == line);
    REQUIRE(back.clip_features == s.clip_features);
  }
}

TEST_CASE("missing and null optional fields load cleanly") {
  json j = sample_to_json(small_sample());
  j.erase("saliency_labels");
  j["moment_spans"] = nullptr;
  const Sample s = sample_from_json(j, "test");
  REQUIRE_FALSE(s.saliency_labels.has_value());
  REQUIRE_FALSE(s.moment_spans.has_value());

  json missing = sample_to_json(small_sample());
  missing.erase("clip_features");
  REQUIRE_THROWS_WITH(sample_from_json(missing, "here"),
                      Catch::Matchers::ContainsSubstring("clip_features"));
}

TEST_CASE("relevant clips are sorted and deduplicated on load") {
  json j = sample_to_json(small_sample());
  j["relevant_clips"] = {2, 0, 2, 1};
  const Sample s = sample_from_json(j, "test");
  REQUIRE(s.relevant_clips == std::vector<int>{0, 1, 2});
}

TEST_CASE("dataset file round trip") {
  TempDir tmp;
  SynthConfig cfg;
  cfg.num_samples = 4;
  cfg.clips = 12;
  cfg.words = 5;
  cfg.segments = 4;
  cfg.dim = 6;
  const Dataset ds = synth_generate(cfg, 5);
  const std::string path = tmp.file("ds.jsonl");
  save_dataset(ds, path);

  const Dataset back = load_dataset(path);
  REQUIRE(back.samples.size() == ds.samples.size());
  for (size_t i = 0; i < ds.samples.size(); ++i)
    REQUIRE(sample_to_json(back.samples[i]).dump() == sample_to_json(ds.samples[i]).dump());
  REQUIRE(back.metadata["d"] == cfg.dim);

  // one sample per line
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  REQUIRE(lines == cfg.num_samples);
}

TEST_CASE("dataset loader reports the offending line") {
  TempDir tmp;
  const std::string path = tmp.file("bad.jsonl");
  {
    std::ofstream out(path);
    out << sample_to_json(small_sample()).dump() << "\n";
    out << "{not json}\n";
  }
  REQUIRE_THROWS_WITH(load_dataset(path), Catch::Matchers::ContainsSubstring(":2"));
  REQUIRE_THROWS_AS(load_dataset(tmp.file("missing.jsonl")), validation_error);
}

TEST_CASE("dataset dimension mismatch is rejected") {
  TempDir tmp;
  Sample a = small_sample();
  Sample b = small_sample();
  b.video_id = "vid-2";
  b.clip_features = Matrix::from_rows({{1.0, 0.0, 0.0}});
  b.word_features = Matrix::from_rows({{1.0, 0.0, 0.0}});
  b.relevant_clips = {0};
  b.saliency_labels = std::vector<int>{3};
  b.moment_spans.reset();
  const std::string path = tmp.file("mixed.jsonl");
  {
    std::ofstream out(path);
    out << sample_to_json(a).dump() << "\n" << sample_to_json(b).dump() << "\n";
  }
  REQUIRE_THROWS_WITH(load_dataset(path), Catch::Matchers::ContainsSubstring("dim"));
}

TEST_CASE("prediction round trip sorts windows by score") {
  TempDir tmp;
  PredictionRecord r;
  r.video_id = "vid-9";
  r.windows = {{0.0, 2.0, 0.25}, {2.0, 6.0, 0.9}, {1.0, 3.0, 0.5}};
  r.saliency = {0.1, -0.4, 2.5};
  const std::string path = tmp.file("pred.jsonl");
  save_predictions({r}, path);

  const std::vector<PredictionRecord> back = load_predictions(path);
  REQUIRE(back.size() == 1);
  REQUIRE(back[0].video_id == "vid-9");
  REQUIRE(back[0].windows.size() == 3);
  REQUIRE(back[0].windows[0].score == 0.9);
  REQUIRE(back[0].windows[1].score == 0.5);
  REQUIRE(back[0].windows[2].score == 0.25);
  REQUIRE(back[0].saliency == r.saliency);

  // stable under ties: equal scores keep insertion order
  PredictionRecord t;
  t.video_id = "tie";
  t.windows = {{0.0, 1.0, 0.5}, {1.0, 2.0, 0.5}};
  t.saliency = {0.0};
  save_predictions({t}, path);
  const auto tied = load_predictions(path);
  REQUIRE(tied[0].windows[0].start_sec == 0.0);
  REQUIRE(tied[0].windows[1].start_sec == 1.0);
}

TEST_CASE("format_double round trips exactly") {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 12345.6789, 0.0, 2.0}) {
    const std::string s = format_double(v);
    REQUIRE(std::strtod(s.c_str(), nullptr) == v);
  }
}
