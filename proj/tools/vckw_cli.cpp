// Command-line front end: synthesize data, run the clustering / keyword /
// inference pipeline, train the toy objective, and score predictions.
// Exit codes: 0 success, 2 invalid input or arguments, 3 numeric failure.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vckw/vckw.hpp"

namespace {

using vckw::json;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vckw::validation_error("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw vckw::validation_error("config file " + path + ": " + e.what());
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw vckw::validation_error("cannot open " + path + " for writing");
  return out;
}

// Shared pipeline flags. Precedence: explicit flag > config file > default.
struct RunFlags {
  std::string config_path;
  double tau = 0.0;
  double lambda_kw = 0.0;
  int target_clusters = 0;
  int proj_dim = 0;
  double lr = 0.0;
  int steps = 0;
  std::uint64_t seed = 0;
  int batch_size = 0;
  CLI::Option* o_tau = nullptr;
  CLI::Option* o_lambda = nullptr;
  CLI::Option* o_target = nullptr;
  CLI::Option* o_proj = nullptr;
  CLI::Option* o_lr = nullptr;
  CLI::Option* o_steps = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_batch = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file with pipeline settings");
    o_tau = cmd->add_option("--tau", tau, "keyword softmax temperature (default 0.1)");
    o_lambda = cmd->add_option("--lambda-kw", lambda_kw, "keyword loss weight (default 0.3)");
    o_target = cmd->add_option("--target-clusters", target_clusters,
                               "cluster count to select from the hierarchy (default ceil(sqrt(L)))");
    o_proj = cmd->add_option("--proj-dim", proj_dim, "saliency projection width (0 = feature dim)");
    o_lr = cmd->add_option("--lr", lr, "learning rate (default 1e-3)");
    o_steps = cmd->add_option("--steps", steps, "gradient steps (default 300)");
    o_seed = cmd->add_option("--seed", seed, "rng seed (default 0)");
    o_batch = cmd->add_option("--batch-size", batch_size, "training batch size (default 8)");
  }

  vckw::RunConfig resolve() const {
    vckw::RunConfig c;
    if (!config_path.empty()) c = vckw::RunConfig::from_json(load_json_file(config_path));
    if (o_tau->count()) c.tau = tau;
    if (o_lambda->count()) c.lambda_kw = lambda_kw;
    if (o_target->count()) c.target_clusters = target_clusters;
    if (o_proj->count()) c.proj_dim = proj_dim;
    if (o_lr->count()) c.learning_rate = lr;
    if (o_steps->count()) c.steps = steps;
    if (o_seed->count()) c.seed = seed;
    if (o_batch->count()) c.batch_size = batch_size;
    c.validate();
    return c;
  }
};

std::string csv_row(std::initializer_list<double> values) {
  std::string row;
  for (double v : values) {
    if (!row.empty()) row += ",";
    row += vckw::format_double(v);
  }
  return row;
}

int cmd_synth(const std::string& out_path, const vckw::SynthConfig& cfg, std::uint64_t seed) {
  const vckw::Dataset ds = vckw::synth_generate(cfg, seed);
  vckw::save_dataset(ds, out_path);
  std::cout << "wrote " << ds.samples.size() << " samples to " << out_path << "\n";
  return 0;
}

int cmd_cluster(const std::string& in_path, const std::string& out_path,
                const vckw::RunConfig& cfg) {
  const vckw::Dataset ds = vckw::load_dataset(in_path);
  std::ostringstream buf;
  for (const vckw::Sample& s : ds.samples) {
    const vckw::PartitionHierarchy h = vckw::build_hierarchy(s.clip_features);
    const vckw::ClusterContext ctx = vckw::select_partition(h, cfg.target_clusters);
    json j;
    j["video_id"] = s.video_id;
    j["cluster_assignment"] = ctx.assignment;
    j["cluster_count"] = ctx.cluster_count;
    std::vector<int> level_counts;
    for (const vckw::Partition& p : h.levels) level_counts.push_back(p.cluster_count);
    j["level_counts"] = level_counts;
    buf << j.dump() << "\n";
  }
  if (out_path.empty()) {
    std::cout << buf.str();
  } else {
    open_out(out_path) << buf.str();
    std::cout << "wrote cluster assignments for " << ds.samples.size() << " samples to "
              << out_path << "\n";
  }
  return 0;
}

int cmd_keywords(const std::string& in_path, const std::string& out_path,
                 const vckw::RunConfig& cfg) {
  const vckw::Dataset ds = vckw::load_dataset(in_path);
  std::ostringstream buf;
  for (const vckw::Sample& s : ds.samples) {
    const vckw::PartitionHierarchy h = vckw::build_hierarchy(s.clip_features);
    const vckw::ClusterContext ctx = vckw::select_partition(h, cfg.target_clusters);
    const vckw::KeywordWeights kw =
        vckw::compute_keyword_weights(s.word_features, ctx.features, cfg.tau);
    json j;
    j["words"] = s.words;
    j["weights"] = kw.weights;
    buf << j.dump() << "\n";
  }
  if (out_path.empty()) {
    std::cout << buf.str();
  } else {
    open_out(out_path) << buf.str();
    std::cout << "wrote keyword weights for " << ds.samples.size() << " samples to " << out_path
              << "\n";
  }
  return 0;
}

int cmd_infer(const std::string& in_path, const std::string& out_path, std::string signals_path,
              const vckw::RunConfig& cfg) {
  const vckw::Dataset ds = vckw::load_dataset(in_path);
  const std::vector<vckw::SampleInference> results = vckw::infer_dataset(ds, cfg);
  std::vector<vckw::PredictionRecord> preds;
  preds.reserve(results.size());
  for (const vckw::SampleInference& r : results) preds.push_back(r.prediction);
  vckw::save_predictions(preds, out_path);

  if (signals_path.empty()) signals_path = out_path + ".signals.jsonl";
  std::ofstream sig = open_out(signals_path);
  for (size_t i = 0; i < results.size(); ++i)
    sig << vckw::inference_to_signals_json(results[i], ds.samples[i].words).dump() << "\n";
  std::cout << "wrote " << preds.size() << " predictions to " << out_path << " and signals to "
            << signals_path << "\n";
  return 0;
}

int cmd_train(const std::string& in_path, const std::string& out_path,
              const vckw::RunConfig& cfg) {
  const vckw::Dataset ds = vckw::load_dataset(in_path);
  const vckw::TrainResult res = vckw::train_toy(ds, cfg);

  std::ostringstream csv;
  csv << "step,l_ck,l_vk,l_kw,total\n";
  for (const vckw::StepRow& r : res.history)
    csv << r.step << "," << csv_row({r.l_ck, r.l_vk, r.l_kw, r.total}) << "\n";
  if (!out_path.empty()) {
    open_out(out_path) << csv.str();
    std::cout << "wrote " << res.history.size() << " step rows to " << out_path << "\n";
  }

  const vckw::StepRow& first = res.history.front();
  const vckw::StepRow& last = res.history.back();
  std::cout << "steps: " << cfg.steps << "  lambda_kw: " << vckw::format_double(cfg.lambda_kw)
            << "  lr: " << vckw::format_double(cfg.learning_rate) << "\n";
  std::cout << "keyword loss: " << vckw::format_double(first.l_kw) << " -> "
            << vckw::format_double(last.l_kw) << "\n";
  std::cout << "alignment: " << vckw::format_double(res.initial_alignment) << " -> "
            << vckw::format_double(res.final_alignment) << " (gain "
            << vckw::format_double(res.final_alignment - res.initial_alignment) << ")\n";
  return 0;
}

int cmd_gradcheck(const std::string& in_path, const vckw::RunConfig& cfg, double step,
                  int coords, double tol) {
  vckw::Dataset ds;
  if (in_path.empty()) {
    vckw::SynthConfig sc;
    sc.num_samples = std::min(cfg.batch_size, 4);
    sc.clips = 12;
    sc.words = 4;
    sc.segments = 3;
    sc.dim = 8;
    ds = vckw::synth_generate(sc, cfg.seed);
  } else {
    ds = vckw::load_dataset(in_path);
  }
  const vckw::BatchInputs batch = vckw::make_training_batch(ds, cfg);

  struct Row {
    const char* loss;
    vckw::LossFn fn;
  };
  const std::vector<Row> rows = {
      {"clip_keyword", [](const vckw::BatchInputs& b) { return vckw::clip_keyword_loss(b); }},
      {"video_keyword", [](const vckw::BatchInputs& b) { return vckw::video_keyword_loss(b); }},
      {"keyword_total", [](const vckw::BatchInputs& b) { return vckw::keyword_loss(b); }},
  };

  bool ok = true;
  std::cout << "loss,block,coords,max_rel_err,mean_rel_err\n";
  for (const Row& row : rows) {
    const vckw::GradCheckReport rep = vckw::grad_check(row.fn, batch, step, coords, cfg.seed);
    for (const vckw::BlockCheck& b : rep.blocks) {
      std::cout << row.loss << "," << b.block << "," << b.coords_checked << ","
                << vckw::format_double(b.max_rel_err) << ","
                << vckw::format_double(b.mean_rel_err) << "\n";
      if (b.max_rel_err > tol) ok = false;
    }
  }
  if (!ok) {
    std::cerr << "error: analytic gradients disagree with finite differences beyond "
              << vckw::format_double(tol) << "\n";
    return 3;
  }
  std::cout << "all gradients within " << vckw::format_double(tol) << "\n";
  return 0;
}

int cmd_eval(const std::string& in_path, const std::string& pred_path,
             const std::string& out_path, const vckw::RunConfig& cfg) {
  const vckw::Dataset ds = vckw::load_dataset(in_path);
  const std::vector<vckw::PredictionRecord> preds = vckw::load_predictions(pred_path);
  const vckw::EvalReport rep = vckw::evaluate_predictions(ds, preds, cfg);

  std::ostringstream csv;
  csv << "metric,value\n";
  csv << "R1@0.5," << vckw::format_double(rep.r1_at_050) << "\n";
  csv << "R1@0.7," << vckw::format_double(rep.r1_at_070) << "\n";
  csv << "mAP@0.5," << vckw::format_double(rep.map.at(0.5)) << "\n";
  csv << "mAP@0.75," << vckw::format_double(rep.map.at(0.75)) << "\n";
  csv << "mAP_avg," << vckw::format_double(rep.map.average) << "\n";
  if (rep.hit_at_1) csv << "HIT@1," << vckw::format_double(*rep.hit_at_1) << "\n";

  std::cout << "samples: " << rep.num_samples << " (" << rep.num_labeled
            << " with saliency labels)\n";
  std::cout << "R1@0.5    " << vckw::format_double(rep.r1_at_050) << "\n";
  std::cout << "R1@0.7    " << vckw::format_double(rep.r1_at_070) << "\n";
  std::cout << "mAP@0.5   " << vckw::format_double(rep.map.at(0.5)) << "\n";
  std::cout << "mAP@0.75  " << vckw::format_double(rep.map.at(0.75)) << "\n";
  std::cout << "mAP avg   " << vckw::format_double(rep.map.average) << "\n";
  std::cout << "HIT@1     " << (rep.hit_at_1 ? vckw::format_double(*rep.hit_at_1) : "n/a")
            << "\n";
  if (!out_path.empty()) {
    open_out(out_path) << csv.str();
    std::cout << "wrote metrics to " << out_path << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& in_path, const std::string& out_path,
              const vckw::RunConfig& cfg, const std::vector<double>& lambdas) {
  const vckw::Dataset ds = vckw::load_dataset(in_path);
  const std::vector<vckw::SweepRow> rows = vckw::sweep_lambda(ds, cfg, lambdas);
  std::ostringstream csv;
  csv << "lambda_kw,initial_total,final_total,final_l_ck,final_l_vk,final_l_kw,alignment_gain\n";
  for (const vckw::SweepRow& r : rows)
    csv << csv_row({r.lambda_kw, r.initial_total, r.final_total, r.final_l_ck, r.final_l_vk,
                    r.final_l_kw, r.alignment_gain})
        << "\n";
  std::cout << csv.str();
  if (!out_path.empty()) {
    open_out(out_path) << csv.str();
    std::cout << "wrote sweep results to " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"video-context keyword attention pipeline"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a planted-scene dataset");
  std::string synth_out;
  std::string synth_config;
  std::uint64_t synth_seed = 0;
  vckw::SynthConfig sc;
  synth->add_option("--out", synth_out, "output dataset (jsonl)")->required();
  synth->add_option("--config", synth_config, "JSON file with generator settings");
  synth->add_option("--seed", synth_seed, "rng seed");
  auto* o_num = synth->add_option("--num-samples", sc.num_samples, "videos to generate");
  auto* o_clips = synth->add_option("--clips", sc.clips, "clips per video");
  auto* o_words = synth->add_option("--words", sc.words, "query words per video");
  auto* o_segments = synth->add_option("--segments", sc.segments, "scene segments per video");
  auto* o_dim = synth->add_option("--dim", sc.dim, "feature dimension");
  auto* o_sigma = synth->add_option("--sigma", sc.sigma, "noise scale");
  auto* o_scale = synth->add_option("--feature-scale", sc.feature_scale, "global feature scale");
  auto* o_dur = synth->add_option("--clip-duration", sc.clip_duration_sec, "seconds per clip");
  auto* o_tseg = synth->add_option("--target-segment", sc.target_segment,
                                   "segment forming the ground-truth moment");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "temporally weighted first-neighbor clustering");
  std::string cluster_in, cluster_out;
  RunFlags cluster_flags;
  cluster->add_option("--in", cluster_in, "input dataset (jsonl)")->required();
  cluster->add_option("--out", cluster_out, "output assignments (jsonl, default stdout)");
  cluster_flags.attach(cluster);

  // keywords
  auto* keywords = app.add_subcommand("keywords", "keyword weights from clustered features");
  std::string kw_in, kw_out;
  RunFlags kw_flags;
  keywords->add_option("--in", kw_in, "input dataset (jsonl)")->required();
  keywords->add_option("--out", kw_out, "output weights (jsonl, default stdout)");
  kw_flags.attach(keywords);

  // infer
  auto* infer = app.add_subcommand("infer", "predict moment windows and saliency");
  std::string infer_in, infer_out, infer_signals;
  RunFlags infer_flags;
  infer->add_option("--in", infer_in, "input dataset (jsonl)")->required();
  infer->add_option("--out", infer_out, "output predictions (jsonl)")->required();
  infer->add_option("--signals", infer_signals,
                    "output per-clip signals (jsonl, default <out>.signals.jsonl)");
  infer_flags.attach(infer);

  // train
  auto* train = app.add_subcommand("train", "gradient descent on the keyword losses");
  std::string train_in, train_out;
  RunFlags train_flags;
  train->add_option("--in", train_in, "input dataset (jsonl)")->required();
  train->add_option("--out", train_out, "loss history csv");
  train_flags.attach(train);

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "analytic gradients vs finite differences");
  std::string gc_in;
  RunFlags gc_flags;
  double gc_step = 1e-5, gc_tol = 1e-4;
  int gc_coords = 50;
  gradcheck->add_option("--in", gc_in, "input dataset (jsonl, default: built-in batch)");
  gradcheck->add_option("--step", gc_step, "finite-difference step");
  gradcheck->add_option("--coords", gc_coords, "coordinates sampled per block");
  gradcheck->add_option("--tol", gc_tol, "max relative error accepted");
  gc_flags.attach(gradcheck);

  // eval
  auto* eval = app.add_subcommand("eval", "score predictions against a dataset");
  std::string eval_in, eval_pred, eval_out;
  RunFlags eval_flags;
  eval->add_option("--in", eval_in, "input dataset (jsonl)")->required();
  eval->add_option("--pred", eval_pred, "predictions (jsonl)")->required();
  eval->add_option("--out", eval_out, "metrics csv");
  eval_flags.attach(eval);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "rerun training across keyword loss weights");
  std::string sweep_in, sweep_out;
  std::vector<double> sweep_lambdas = {0.1, 0.3, 0.5, 0.7, 0.9};
  RunFlags sweep_flags;
  sweep->add_option("--in", sweep_in, "input dataset (jsonl)")->required();
  sweep->add_option("--out", sweep_out, "sweep results csv");
  sweep->add_option("--lambdas", sweep_lambdas, "keyword loss weights to try")
      ->delimiter(',');
  sweep_flags.attach(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      if (!synth_config.empty()) {
        vckw::SynthConfig file_cfg = vckw::SynthConfig::from_json(load_json_file(synth_config));
        if (!o_num->count()) sc.num_samples = file_cfg.num_samples;
        if (!o_clips->count()) sc.clips = file_cfg.clips;
        if (!o_words->count()) sc.words = file_cfg.words;
        if (!o_segments->count()) sc.segments = file_cfg.segments;
        if (!o_dim->count()) sc.dim = file_cfg.dim;
        if (!o_sigma->count()) sc.sigma = file_cfg.sigma;
        if (!o_scale->count()) sc.feature_scale = file_cfg.feature_scale;
        if (!o_dur->count()) sc.clip_duration_sec = file_cfg.clip_duration_sec;
        if (!o_tseg->count()) sc.target_segment = file_cfg.target_segment;
        sc.word_segments = file_cfg.word_segments;
      }
      return cmd_synth(synth_out, sc, synth_seed);
    }
    if (cluster->parsed()) return cmd_cluster(cluster_in, cluster_out, cluster_flags.resolve());
    if (keywords->parsed()) return cmd_keywords(kw_in, kw_out, kw_flags.resolve());
    if (infer->parsed())
      return cmd_infer(infer_in, infer_out, infer_signals, infer_flags.resolve());
    if (train->parsed()) return cmd_train(train_in, train_out, train_flags.resolve());
    if (gradcheck->parsed())
      return cmd_gradcheck(gc_in, gc_flags.resolve(), gc_step, gc_coords, gc_tol);
    if (eval->parsed()) return cmd_eval(eval_in, eval_pred, eval_out, eval_flags.resolve());
    if (sweep->parsed())
      return cmd_sweep(sweep_in, sweep_out, sweep_flags.resolve(), sweep_lambdas);
  } catch (const vckw::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const vckw::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
