/* Copyright 2026 The OVSNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Command-line front end: score / build / fuse / eval / sweep / pc-sample /
// pc-loss. Machine output goes to --out files or stdout; logs and warnings go
// to stderr. Exit codes: 0 success, 2 configuration error, 3 data error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ovsnet/ovsnet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

void emit_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw ovsnet::DataError("cannot open output file: " + out_path);
  out << text;
  if (!out) throw ovsnet::DataError("write failed: " + out_path);
}

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ovsnet::DataError("cannot open file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ovsnet::DataError("malformed JSON in " + path + ": " + e.what());
  }
}

std::vector<ovsnet::InventoryRecord> read_inventory_jsonl(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ovsnet::DataError("cannot open inventory: " + path);
  std::vector<ovsnet::InventoryRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
      ovsnet::InventoryRecord rec;
      rec.image_id = j.at("image_id").get<std::string>();
      rec.mask_path = j.at("mask_path").get<std::string>();
      rec.categories = j.at("categories").get<std::vector<std::string>>();
      records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw ovsnet::DataError("inventory " + path + " line " +
                              std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<ovsnet::CategoryScore> scores_from_json(const json& j,
                                                    const std::string& path) {
  try {
    std::vector<ovsnet::CategoryScore> scores;
    for (const auto& item : j.at("scores")) {
      scores.push_back({item.at("name").get<std::string>(),
                        item.at("max_train_similarity").get<double>()});
    }
    return scores;
  } catch (const json::exception& e) {
    throw ovsnet::DataError("scores file " + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// score

struct ScoreOptions {
  std::string candidates;
  std::string train_vocab;
  std::string out;
};

void run_score(const ScoreOptions& opt) {
  const ovsnet::EmbeddingSet candidates = ovsnet::read_emb1(opt.candidates);
  const ovsnet::EmbeddingSet vocab = ovsnet::read_emb1(opt.train_vocab);
  if (!candidates.labels) {
    throw ovsnet::DataError("candidates file lacks a label sidecar: " +
                            opt.candidates + ".labels.json");
  }
  if (!vocab.labels) {
    throw ovsnet::DataError("train vocabulary lacks a label sidecar: " +
                            opt.train_vocab + ".labels.json");
  }
  const auto scores = ovsnet::score_categories(candidates, vocab);
  const auto stats = ovsnet::similarity_stats(scores);

  json scores_json = json::array();
  for (const auto& s : scores) {
    scores_json.push_back(
        {{"name", s.name}, {"max_train_similarity", s.max_train_similarity}});
  }
  const json out{{"format_version", std::string(ovsnet::kFormatVersion)},
                 {"config",
                  {{"subcommand", "score"},
                   {"candidates", opt.candidates},
                   {"train_vocab", opt.train_vocab}}},
                 {"train_vocab_hash", ovsnet::hash_embedding_set(vocab)},
                 {"scores", scores_json},
                 {"stats", ovsnet::stats_to_json(stats)}};
  emit_text(out.dump(2) + "\n", opt.out);
  std::cerr << ovsnet::stats_table(stats);
}

// ---------------------------------------------------------------------------
// build

struct BuildOptions {
  std::string inventory;
  std::string scores;
  std::string exclude;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  std::string out;
};

void run_build(const BuildOptions& opt) {
  if (opt.sigma2 > opt.sigma1) {
    throw ovsnet::ConfigError("sigma2 (" + std::to_string(opt.sigma2) +
                              ") must not exceed sigma1 (" +
                              std::to_string(opt.sigma1) + ")");
  }
  const auto inventory = read_inventory_jsonl(opt.inventory);
  const json scores_doc = parse_json_file(opt.scores);
  const auto scores = scores_from_json(scores_doc, opt.scores);

  ovsnet::BuildOptions build;
  build.train_vocab_hash = scores_doc.value("train_vocab_hash", "");
  if (!opt.exclude.empty()) {
    const json ex = parse_json_file(opt.exclude);
    if (!ex.is_array()) {
      throw ovsnet::DataError("exclusion list must be a JSON array: " +
                              opt.exclude);
    }
    for (const auto& item : ex) build.exclude.push_back(item.get<std::string>());
  }

  const ovsnet::BenchManifest manifest = ovsnet::filter_and_remap(
      inventory, scores, opt.sigma1, opt.sigma2, build);

  json j = ovsnet::manifest_to_json(manifest);
  j["config"] = {{"subcommand", "build"},
                 {"inventory", opt.inventory},
                 {"scores", opt.scores},
                 {"exclude", opt.exclude},
                 {"sigma1", opt.sigma1},
                 {"sigma2", opt.sigma2}};
  emit_text(ovsnet::canonical_json(j), opt.out);

  for (const auto& r : manifest.records) {
    if (r.decision == ovsnet::Decision::kDropped) {
      std::cerr << "dropped " << r.image_id << ": " << r.drop_reason << "\n";
    }
  }
  if (manifest.empty_benchmark()) {
    std::cerr << "warning: empty benchmark (no image survived sigma1="
              << opt.sigma1 << ")\n";
  } else {
    std::cerr << "kept " << manifest.kept_count() << " of "
              << manifest.records.size() << " images\n";
  }
}

// ---------------------------------------------------------------------------
// fuse

struct FuseOptions {
  std::string fq;
  std::string fc;
  std::string out;
  std::string out_query;
  ovsnet::FusionConfig cfg;
  bool iterate = false;
  bool closed_form = false;
  bool l2_normalize_inputs = false;
  std::string reduce = "none";
};

void run_fuse(const FuseOptions& opt) {
  opt.cfg.validate();
  ovsnet::EmbeddingSet f_q = ovsnet::read_emb1(opt.fq);
  ovsnet::EmbeddingSet f_c = ovsnet::read_emb1(opt.fc);
  if (opt.l2_normalize_inputs) {
    for (Eigen::Index r = 0; r < f_q.count(); ++r) {
      f_q.values.row(r) = ovsnet::l2_normalize(f_q.values.row(r).transpose());
    }
    for (Eigen::Index r = 0; r < f_c.count(); ++r) {
      f_c.values.row(r) = ovsnet::l2_normalize(f_c.values.row(r).transpose());
    }
  }

  const bool use_iterate = opt.iterate;  // default is the closed form
  const ovsnet::FusionResult result =
      use_iterate ? ovsnet::gfa_iterate(f_q, f_c, opt.cfg)
                  : ovsnet::gfa_closed_form(f_q, f_c, opt.cfg);

  ovsnet::EmbeddingSet fused;
  if (opt.reduce == "none") {
    fused.values = result.fused_clip;
    fused.labels = f_c.labels;
  } else {
    const ovsnet::Embedding row = ovsnet::reduce_fused(
        result, opt.reduce == "mean" ? ovsnet::ReduceMode::kMean
                                     : ovsnet::ReduceMode::kFirst);
    fused.values = row.transpose();
  }
  ovsnet::write_emb1(opt.out, fused);
  if (!opt.out_query.empty()) {
    ovsnet::EmbeddingSet query;
    query.values = result.fused_query;
    query.labels = f_q.labels;
    ovsnet::write_emb1(opt.out_query, query);
  }

  const json report{
      {"format_version", std::string(ovsnet::kFormatVersion)},
      {"config",
       {{"subcommand", "fuse"},
        {"fq", opt.fq},
        {"fc", opt.fc},
        {"out", opt.out},
        {"lambda", opt.cfg.lambda},
        {"omega", opt.cfg.omega},
        {"max_iters", opt.cfg.max_iters},
        {"tolerance", opt.cfg.tolerance},
        {"normalize_mode",
         opt.cfg.normalize_mode == ovsnet::NormalizeMode::kColumnSoftmax
             ? "column_softmax"
             : "column_l1"},
        {"solver", use_iterate ? "iterate" : "closed_form"},
        {"l2_normalize_inputs", opt.l2_normalize_inputs},
        {"reduce", opt.reduce}}},
      {"iterations_used", result.iterations_used},
      {"converged", result.converged},
      {"spectral_radius_estimate", result.spectral_radius_estimate}};
  std::cout << report.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string manifest;
  std::string pred_dir;
  std::string gt_dir;
  std::string miou_mode = "present";
  bool include_others = false;
  std::string out;
  unsigned jobs = 0;
};

void run_eval(const EvalOptions& opt) {
  const ovsnet::BenchManifest manifest =
      ovsnet::manifest_from_json(parse_json_file(opt.manifest));
  const std::size_t num_categories = manifest.category_index.size();
  if (num_categories == 0) {
    throw ovsnet::DataError("manifest has an empty category index");
  }
  const std::size_t others_id = num_categories;

  // Categories absent from final_categories evaluate as "others".
  const std::set<std::string> finals(manifest.final_categories.begin(),
                                     manifest.final_categories.end());
  std::vector<std::uint16_t> effective(num_categories);
  for (std::size_t i = 0; i < num_categories; ++i) {
    effective[i] = finals.count(manifest.category_index[i])
                       ? static_cast<std::uint16_t>(i)
                       : static_cast<std::uint16_t>(others_id);
  }

  std::vector<const ovsnet::ImageRecord*> kept;
  for (const auto& r : manifest.records) {
    if (r.decision == ovsnet::Decision::kKept) kept.push_back(&r);
  }
  if (kept.empty()) {
    throw ovsnet::DataError("manifest contains no kept images to evaluate");
  }

  auto remap = [&](ovsnet::SegMask& mask, const std::string& what,
                   const std::string& image_id) {
    for (auto& v : mask.labels) {
      if (v == ovsnet::SegMask::kIgnore) continue;
      if (v == others_id) continue;
      if (v >= num_categories) {
        throw ovsnet::DataError(what + " mask for image " + image_id +
                                " contains class id " + std::to_string(v) +
                                " outside the category index");
      }
      v = effective[v];
    }
  };

  const unsigned jobs = opt.jobs > 0 ? opt.jobs : ovsnet::default_jobs();
  std::vector<ovsnet::ConfusionAccumulator> partial(
      kept.size(), ovsnet::ConfusionAccumulator(num_categories + 1, others_id));
  ovsnet::parallel_for(kept.size(), jobs, [&](std::size_t i) {
    const ovsnet::ImageRecord& rec = *kept[i];
    const fs::path gt_path = fs::path(opt.gt_dir) / rec.mask_path;
    const fs::path pred_path = fs::path(opt.pred_dir) / rec.mask_path;
    if (!fs::exists(pred_path)) {
      throw ovsnet::DataError("missing prediction for image " + rec.image_id +
                              ": " + pred_path.string());
    }
    ovsnet::SegMask gt = ovsnet::read_msk1(gt_path);
    ovsnet::SegMask pred = ovsnet::read_msk1(pred_path);
    remap(gt, "ground-truth", rec.image_id);
    remap(pred, "prediction", rec.image_id);
    if (!gt.same_shape(pred)) {
      throw ovsnet::DataError("mask shapes differ for image " + rec.image_id);
    }
    // Pixels the ground truth ignores are excluded from scoring; neutralize
    // the prediction there so identity predictions evaluate cleanly.
    for (std::size_t p = 0; p < gt.labels.size(); ++p) {
      if (gt.labels[p] == ovsnet::SegMask::kIgnore) pred.labels[p] = 0;
    }
    ovsnet::confusion_update(partial[i], gt, pred);
  });
  ovsnet::ConfusionAccumulator acc(num_categories + 1, others_id);
  for (const auto& p : partial) acc.merge(p);

  const ovsnet::MiouMode mode = opt.miou_mode == "all"
                                    ? ovsnet::MiouMode::kAllClasses
                                    : ovsnet::MiouMode::kPresentClasses;
  const ovsnet::MiouResult selected =
      ovsnet::miou(acc, mode, opt.include_others);
  const double miou_present =
      ovsnet::miou(acc, ovsnet::MiouMode::kPresentClasses, opt.include_others)
          .miou;
  const double miou_all =
      ovsnet::miou(acc, ovsnet::MiouMode::kAllClasses, opt.include_others).miou;

  json per_class = json::array();
  for (const auto& entry : selected.per_class) {
    const std::string name = entry.class_id == others_id
                                 ? std::string(ovsnet::kOthersCategory)
                                 : manifest.category_index[entry.class_id];
    per_class.push_back({{"class_id", entry.class_id},
                         {"name", name},
                         {"iou", entry.iou},
                         {"intersection", entry.intersection},
                         {"union", entry.union_count},
                         {"gt_pixels", entry.gt_pixels},
                         {"pred_pixels", entry.pred_pixels},
                         {"in_mean", entry.in_mean}});
  }
  const json out{{"format_version", std::string(ovsnet::kFormatVersion)},
                 {"config",
                  {{"subcommand", "eval"},
                   {"manifest", opt.manifest},
                   {"pred_dir", opt.pred_dir},
                   {"gt_dir", opt.gt_dir},
                   {"miou_mode", opt.miou_mode},
                   {"include_others", opt.include_others}}},
                 {"images_evaluated", kept.size()},
                 {"miou", selected.miou},
                 {"miou_present_classes", miou_present},
                 {"miou_all_classes", miou_all},
                 {"per_class", per_class}};
  emit_text(out.dump(2) + "\n", opt.out);

  char row[160];
  std::snprintf(row, sizeof(row), "%-24s %8s %12s %12s %8s\n", "class", "iou",
                "intersect", "union", "in_mean");
  std::cerr << row;
  for (const auto& entry : selected.per_class) {
    const std::string name = entry.class_id == others_id
                                 ? std::string(ovsnet::kOthersCategory)
                                 : manifest.category_index[entry.class_id];
    std::snprintf(row, sizeof(row), "%-24s %8.4f %12lld %12lld %8s\n",
                  name.c_str(), entry.iou,
                  static_cast<long long>(entry.intersection),
                  static_cast<long long>(entry.union_count),
                  entry.in_mean ? "yes" : "no");
    std::cerr << row;
  }
  std::snprintf(row, sizeof(row), "miou %.6f over %zu images\n", selected.miou,
                kept.size());
  std::cerr << row;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOptions {
  std::string regions;
  std::string gt_dir;
  std::string base_classes;
  std::string distractors;
  std::vector<int> steps;
  std::uint64_t seed = 0;
  std::string out;
};

void run_sweep(const SweepOptions& opt) {
  for (std::size_t i = 0; i < opt.steps.size(); ++i) {
    if (opt.steps[i] < 0 || (i > 0 && opt.steps[i] <= opt.steps[i - 1])) {
      throw ovsnet::ConfigError(
          "steps must be strictly increasing and non-negative");
    }
  }
  const ovsnet::EmbeddingSet regions = ovsnet::read_emb1(opt.regions);
  const ovsnet::EmbeddingSet base = ovsnet::read_emb1(opt.base_classes);
  const ovsnet::EmbeddingSet distractors = ovsnet::read_emb1(opt.distractors);

  // Image pairs: every <stem>.gt.msk1 in --gt-dir with its sibling
  // <stem>.reg.msk1, taken in lexicographic order.
  std::vector<fs::path> gt_files;
  for (const auto& entry : fs::directory_iterator(opt.gt_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 8 && name.ends_with(".gt.msk1")) {
      gt_files.push_back(entry.path());
    }
  }
  std::sort(gt_files.begin(), gt_files.end());
  if (gt_files.empty()) {
    throw ovsnet::DataError("no *.gt.msk1 files under " + opt.gt_dir);
  }
  std::vector<ovsnet::SweepImage> images;
  for (const auto& gt_path : gt_files) {
    std::string reg_name = gt_path.filename().string();
    reg_name.replace(reg_name.size() - 8, 8, ".reg.msk1");
    const fs::path reg_path = gt_path.parent_path() / reg_name;
    if (!fs::exists(reg_path)) {
      throw ovsnet::DataError("missing region raster for " + gt_path.string() +
                              " (expected " + reg_path.string() + ")");
    }
    images.push_back(
        {ovsnet::read_msk1(gt_path), ovsnet::read_msk1(reg_path)});
  }

  const ovsnet::SweepResult result = ovsnet::class_count_sweep(
      images, regions, base, distractors, opt.steps, opt.seed);

  const json config{{"subcommand", "sweep"},
                    {"regions", opt.regions},
                    {"gt_dir", opt.gt_dir},
                    {"base_classes", opt.base_classes},
                    {"distractors", opt.distractors},
                    {"steps", opt.steps},
                    {"seed", opt.seed}};
  std::string csv;
  csv += "# format_version: " + std::string(ovsnet::kFormatVersion) + "\n";
  csv += "# config: " + config.dump() + "\n";
  csv += "# distractor_source: " + result.distractor_source + "\n";
  csv += "count,miou\n";
  json points = json::array();
  for (const auto& point : result.points) {
    char line[64];
    std::snprintf(line, sizeof(line), "%zu,%.9f\n", point.num_categories,
                  point.miou);
    csv += line;
    points.push_back({{"count", point.num_categories}, {"miou", point.miou}});
  }
  emit_text(csv, opt.out);
  const json report{{"format_version", std::string(ovsnet::kFormatVersion)},
                    {"config", config},
                    {"distractor_source", result.distractor_source},
                    {"points", points}};
  std::cout << report.dump(2) << "\n";
  std::cerr << "sweep over " << images.size() << " images, "
            << result.points.size() << " steps\n";
}

// ---------------------------------------------------------------------------
// pc-sample / pc-loss

struct PcSampleOptions {
  double gamma = 2.0;
  std::uint64_t seed = 0;
  std::uint64_t count = 100000;
  bool emit_draws = false;
  std::string out;
};

void run_pc_sample(const PcSampleOptions& opt) {
  ovsnet::ProxyConfig cfg;
  cfg.gamma = opt.gamma;
  cfg.seed = opt.seed;
  cfg.validate();
  if (opt.count == 0) throw ovsnet::ConfigError("pc-sample: count must be >= 1");
  ovsnet::Rng rng(opt.seed);
  double sum = 0.0, sum_sq = 0.0;
  json draws = json::array();
  for (std::uint64_t i = 0; i < opt.count; ++i) {
    const double a = ovsnet::sample_alpha(cfg, rng);
    sum += a;
    sum_sq += a * a;
    if (opt.emit_draws) draws.push_back(a);
  }
  const double n = static_cast<double>(opt.count);
  const double mean = sum / n;
  json out{{"format_version", std::string(ovsnet::kFormatVersion)},
           {"config",
            {{"subcommand", "pc-sample"},
             {"gamma", opt.gamma},
             {"seed", opt.seed},
             {"count", opt.count}}},
           {"mean", mean},
           {"variance", sum_sq / n - mean * mean}};
  if (opt.emit_draws) out["draws"] = std::move(draws);
  emit_text(out.dump(2) + "\n", opt.out);
}

struct PcLossOptions {
  std::string fq;
  std::string fc;
  std::string ft;
  double gamma = 2.0;
  std::uint64_t seed = 0;
  std::string pairing = "derangement";
  bool check_grad = false;
  std::string out;
};

void run_pc_loss(const PcLossOptions& opt) {
  ovsnet::ProxyConfig cfg;
  cfg.gamma = opt.gamma;
  cfg.seed = opt.seed;
  cfg.pairing = opt.pairing == "all-pairs" ? ovsnet::Pairing::kAllPairs
                                           : ovsnet::Pairing::kRandomDerangement;
  const ovsnet::EmbeddingSet f_q = ovsnet::read_emb1(opt.fq);
  const ovsnet::EmbeddingSet f_c = ovsnet::read_emb1(opt.fc);
  const ovsnet::EmbeddingSet f_t = ovsnet::read_emb1(opt.ft);
  const ovsnet::ProxyBatch batch = ovsnet::build_proxy_batch(f_q, f_c, f_t, cfg);
  const ovsnet::ProxyLoss loss = ovsnet::proxy_loss(batch);

  json out{{"format_version", std::string(ovsnet::kFormatVersion)},
           {"config",
            {{"subcommand", "pc-loss"},
             {"fq", opt.fq},
             {"fc", opt.fc},
             {"ft", opt.ft},
             {"gamma", opt.gamma},
             {"seed", opt.seed},
             {"pairing", opt.pairing}}},
           {"batch_size", batch.size()},
           {"l_pq", loss.l_pq},
           {"l_pc", loss.l_pc},
           {"total", loss.total}};
  if (opt.check_grad) {
    const double h = 1e-5;
    out["check_grad"] = {{"h", h},
                         {"max_rel_error", ovsnet::proxy_grad_fd_error(batch, h)}};
  }
  emit_text(out.dump(2) + "\n", opt.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding-space fusion, proxy calibration, benchmark "
               "construction, and segmentation evaluation"};
  app.require_subcommand(1);

  ScoreOptions score;
  auto* score_cmd = app.add_subcommand(
      "score", "Score candidate categories against a training vocabulary");
  score_cmd->add_option("--candidates", score.candidates, "candidate EMB1 file")
      ->required();
  score_cmd->add_option("--train-vocab", score.train_vocab,
                        "training vocabulary EMB1 file")
      ->required();
  score_cmd->add_option("--out", score.out, "output JSON path (default stdout)");
  score_cmd->callback([&] { run_score(score); });

  BuildOptions build;
  auto* build_cmd = app.add_subcommand(
      "build", "Filter and remap an image inventory into a benchmark manifest");
  build_cmd->add_option("--inventory", build.inventory, "image inventory JSONL")
      ->required();
  build_cmd->add_option("--scores", build.scores, "score JSON from `score`")
      ->required();
  build_cmd->add_option("--sigma1", build.sigma1, "image filter threshold")
      ->required();
  build_cmd->add_option("--sigma2", build.sigma2, "category remap threshold")
      ->required();
  build_cmd->add_option("--exclude", build.exclude,
                        "JSON array of categories to exclude");
  build_cmd->add_option("--out", build.out, "manifest output path")->required();
  build_cmd->callback([&] { run_build(build); });

  FuseOptions fuse;
  auto* fuse_cmd =
      app.add_subcommand("fuse", "Fuse query embeddings with CLIP features");
  fuse_cmd->add_option("--fq", fuse.fq, "query embeddings EMB1")->required();
  fuse_cmd->add_option("--fc", fuse.fc, "CLIP feature EMB1")->required();
  fuse_cmd->add_option("--lambda", fuse.cfg.lambda, "affinity scale");
  fuse_cmd->add_option("--omega", fuse.cfg.omega, "fusion factor in (0,1)");
  fuse_cmd->add_option("--max-iters", fuse.cfg.max_iters, "iteration budget");
  fuse_cmd->add_option("--tolerance", fuse.cfg.tolerance,
                       "Frobenius convergence threshold");
  std::string normalize_mode = "softmax";
  fuse_cmd
      ->add_option("--normalize-mode", normalize_mode,
                   "affinity normalization: softmax|l1")
      ->check(CLI::IsMember({"softmax", "l1"}));
  auto* iterate_flag =
      fuse_cmd->add_flag("--iterate", fuse.iterate, "run the explicit iteration");
  fuse_cmd->add_flag("--closed-form", fuse.closed_form,
                     "solve the fixed point directly (default)")
      ->excludes(iterate_flag);
  fuse_cmd->add_flag("--l2-normalize-inputs", fuse.l2_normalize_inputs,
                     "L2-normalize input rows before fusing");
  fuse_cmd->add_option("--reduce", fuse.reduce, "row reduction: none|mean|first")
      ->check(CLI::IsMember({"none", "mean", "first"}));
  fuse_cmd->add_option("--out", fuse.out, "fused CLIP EMB1 output")->required();
  fuse_cmd->add_option("--out-query", fuse.out_query,
                       "optional fused query EMB1 output");
  fuse_cmd->callback([&] {
    fuse.cfg.normalize_mode = normalize_mode == "l1"
                                  ? ovsnet::NormalizeMode::kColumnL1
                                  : ovsnet::NormalizeMode::kColumnSoftmax;
    run_fuse(fuse);
  });

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand(
      "eval", "Compute mIoU of predicted masks against a manifest");
  eval_cmd->add_option("--manifest", eval.manifest, "benchmark manifest JSON")
      ->required();
  eval_cmd->add_option("--pred-dir", eval.pred_dir, "predicted MSK1 directory")
      ->required();
  eval_cmd->add_option("--gt-dir", eval.gt_dir, "ground-truth MSK1 directory")
      ->required();
  eval_cmd
      ->add_option("--miou-mode", eval.miou_mode,
                   "averaging mode: present|all")
      ->check(CLI::IsMember({"present", "all"}));
  eval_cmd->add_flag("--include-others", eval.include_others,
                     "include the others class in the mean");
  eval_cmd->add_option("--jobs", eval.jobs,
                       "worker threads (default $OVSNET_JOBS or 1)");
  eval_cmd->add_option("--out", eval.out, "metrics JSON path (default stdout)");
  eval_cmd->callback([&] { run_eval(eval); });

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "mIoU sensitivity to the number of inference categories");
  sweep_cmd->add_option("--regions", sweep.regions, "region embeddings EMB1")
      ->required();
  sweep_cmd
      ->add_option("--gt-dir", sweep.gt_dir,
                   "directory of <stem>.gt.msk1 / <stem>.reg.msk1 pairs")
      ->required();
  sweep_cmd->add_option("--base-classes", sweep.base_classes,
                        "base class embeddings EMB1")
      ->required();
  sweep_cmd->add_option("--distractors", sweep.distractors,
                        "distractor pool EMB1")
      ->required();
  sweep_cmd->add_option("--steps", sweep.steps,
                        "comma-separated distractor counts")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--seed", sweep.seed, "shuffle seed");
  sweep_cmd->add_option("--out", sweep.out, "CSV output path")->required();
  sweep_cmd->callback([&] { run_sweep(sweep); });

  PcSampleOptions pc_sample;
  auto* pc_sample_cmd = app.add_subcommand(
      "pc-sample", "Draw Beta(gamma, gamma) mixing weights");
  pc_sample_cmd->add_option("--gamma", pc_sample.gamma, "Beta shape");
  pc_sample_cmd->add_option("--seed", pc_sample.seed, "RNG seed");
  pc_sample_cmd->add_option("--count", pc_sample.count, "number of draws");
  pc_sample_cmd->add_flag("--emit-draws", pc_sample.emit_draws,
                          "include the draws in the report");
  pc_sample_cmd->add_option("--out", pc_sample.out,
                            "output JSON path (default stdout)");
  pc_sample_cmd->callback([&] { run_pc_sample(pc_sample); });

  PcLossOptions pc_loss;
  auto* pc_loss_cmd = app.add_subcommand(
      "pc-loss", "Mix aligned embedding triples and report proxy losses");
  pc_loss_cmd->add_option("--fq", pc_loss.fq, "query EMB1")->required();
  pc_loss_cmd->add_option("--fc", pc_loss.fc, "CLIP EMB1")->required();
  pc_loss_cmd->add_option("--ft", pc_loss.ft, "text EMB1")->required();
  pc_loss_cmd->add_option("--gamma", pc_loss.gamma, "Beta shape");
  pc_loss_cmd->add_option("--seed", pc_loss.seed, "RNG seed");
  pc_loss_cmd
      ->add_option("--pairing", pc_loss.pairing,
                   "pair selection: derangement|all-pairs")
      ->check(CLI::IsMember({"derangement", "all-pairs"}));
  pc_loss_cmd->add_flag("--check-grad", pc_loss.check_grad,
                        "verify analytic gradients with finite differences");
  pc_loss_cmd->add_option("--out", pc_loss.out,
                          "output JSON path (default stdout)");
  pc_loss_cmd->callback([&] { run_pc_loss(pc_loss); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  } catch (const ovsnet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ovsnet::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
