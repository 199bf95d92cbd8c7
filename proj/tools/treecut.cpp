// treecut command-line tool: build region trees over superpixels, run MAP
// and posterior-sample segmentations, evaluate against annotations, and
// grid-search model parameters.

#include <algorithm>
#include <cstdio>
#include <functional>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "treecut/treecut.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace treecut;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return text;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << text;
  if (!out) throw IoError(path + ": write failed");
}

json load_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
}

// Applies config-file values to options the user did not pass explicitly.
class ConfigBinder {
 public:
  template <typename T>
  void bind(CLI::Option* opt, std::string key, T* target) {
    appliers_.push_back([opt, key = std::move(key), target](const json& cfg) {
      if (opt->count() == 0 && cfg.contains(key)) *target = cfg.at(key).get<T>();
    });
  }
  void apply(const json& cfg) const {
    for (const auto& fn : appliers_) fn(cfg);
  }

 private:
  std::vector<std::function<void(const json&)>> appliers_;
};

struct GlobalOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = ".";
};

void echo_config(const GlobalOptions& global, const std::string& command, json body,
                 const std::string& file_name) {
  body["command"] = command;
  body["seed"] = global.seed;
  body["jobs"] = global.jobs;
  body["out_dir"] = global.out_dir;
  const std::string text = body.dump(2) + "\n";
  std::cout << "config " << body.dump() << "\n";
  write_text_file((fs::path(global.out_dir) / file_name).string(), text);
}

void ensure_out_dir(const GlobalOptions& global) {
  std::error_code ec;
  fs::create_directories(global.out_dir, ec);
  if (ec) throw IoError(global.out_dir + ": cannot create output directory");
}

Metric parse_metric(const std::string& name) {
  if (name == "covering") return Metric::covering;
  if (name == "pri") return Metric::pri;
  if (name == "vi") return Metric::vi;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

// Median region colors, per channel independently; even counts take the
// lower middle value so renders are deterministic.
Image render_segmentation(const Image& img, const Segmentation& seg) {
  std::vector<std::vector<double>> channel(
      static_cast<std::size_t>(seg.num_regions) * 3);
  for (std::size_t p = 0; p < seg.labels.size(); ++p)
    for (int c = 0; c < 3; ++c)
      channel[static_cast<std::size_t>(seg.labels[p]) * 3 + c].push_back(
          img.pixels[p][c]);
  std::vector<Color> median(seg.num_regions);
  for (int r = 0; r < seg.num_regions; ++r)
    for (int c = 0; c < 3; ++c) {
      auto& vals = channel[static_cast<std::size_t>(r) * 3 + c];
      const std::size_t k = (vals.size() - 1) / 2;
      std::nth_element(vals.begin(), vals.begin() + k, vals.end());
      median[r][c] = vals[k];
    }
  Image out;
  out.width = seg.width;
  out.height = seg.height;
  out.pixels.resize(seg.labels.size());
  for (std::size_t p = 0; p < seg.labels.size(); ++p)
    out.pixels[p] = median[seg.labels[p]];
  return out;
}

SuperpixelMap load_superpixels(const std::string& path) {
  const GrayMap raw = read_pgm16(path);
  SuperpixelMap sp;
  sp.width = raw.width;
  sp.height = raw.height;
  sp.labels = raw.values;
  int max_id = -1;
  for (int v : raw.values) max_id = std::max(max_id, v);
  sp.num_superpixels = max_id + 1;
  validate(sp);
  return sp;
}

double cut_score(const RegionTree& tree, const ModelParams& params,
                 const std::vector<double>& logliks, const CutConfig& cut) {
  double lik = 0.0;
  for (int id : cut.active) lik += logliks[tree.index_of(id)];
  return prior_log_prob(tree, params, cut) + lik;
}

// ---- tree ---------------------------------------------------------------

struct TreeOptions {
  std::string image_path;
  std::string mode = "grid";
  int cell = 8;
  int count = 64;
};

int cmd_tree(const GlobalOptions& global, const TreeOptions& opt) {
  if (opt.image_path.empty()) throw std::invalid_argument("tree: --image is required");
  ensure_out_dir(global);
  const Image img = read_ppm(opt.image_path);
  validate(img);
  SuperpixelMap sp;
  if (opt.mode == "grid") {
    sp = grid_superpixels(img, opt.cell);
  } else if (opt.mode == "color") {
    sp = color_superpixels(img, opt.count, global.seed);
  } else {
    throw std::invalid_argument("tree: unknown superpixel mode '" + opt.mode + "'");
  }
  const RegionTree tree = build_tree_agglomerative(img, sp);

  const fs::path out(global.out_dir);
  write_text_file((out / "tree.json").string(), export_tree(tree));
  write_superpixels((out / "superpixels.pgm").string(), sp);
  echo_config(global, "tree",
              {{"image", opt.image_path},
               {"mode", opt.mode},
               {"cell", opt.cell},
               {"count", opt.count}},
              "tree_config.json");
  std::cout << "nodes=" << tree.size() << " leaves=" << tree.num_leaves()
            << " superpixels=" << sp.num_superpixels << "\n";
  return 0;
}

// ---- segment --------------------------------------------------------------

struct SegmentOptions {
  std::string image_path, tree_path, superpixels_path;
  double p = 0.968;
  double lambda = 0.0004;
  double epsilon = 1e-6;
  std::string likelihood = "gaussian";
  std::string gt_path;
  std::string mode = "map";
  double k = 0.5;
};

int cmd_segment(const GlobalOptions& global, const SegmentOptions& opt) {
  if (opt.image_path.empty() || opt.tree_path.empty() || opt.superpixels_path.empty())
    throw std::invalid_argument("segment: --image, --tree, --superpixels are required");
  ensure_out_dir(global);
  const Image img = read_ppm(opt.image_path);
  validate(img);
  const SuperpixelMap sp = load_superpixels(opt.superpixels_path);
  const RegionTree tree = import_tree(read_text_file(opt.tree_path));
  check_tree_matches(tree, sp);

  LikelihoodConfig cfg;
  cfg.lambda = opt.lambda;
  cfg.epsilon = opt.epsilon;
  if (opt.likelihood == "gt")
    cfg.mode = LikelihoodMode::ground_truth;
  else if (opt.likelihood != "gaussian")
    throw std::invalid_argument("segment: unknown likelihood '" + opt.likelihood + "'");

  CutConfig cut;
  std::optional<double> log_map;
  if (opt.mode == "map") {
    std::optional<Segmentation> gt;
    if (cfg.mode == LikelihoodMode::ground_truth) {
      if (opt.gt_path.empty())
        throw std::invalid_argument("segment: --likelihood gt requires --gt");
      gt = read_segmentation(opt.gt_path);
    }
    const auto logliks =
        region_loglik_table(tree, img, sp, gt ? &*gt : nullptr, cfg);
    const auto params = global_params(tree, opt.p);
    auto result = map_cut(tree, params, logliks);
    cut = std::move(result.first);
    log_map = result.second;
  } else if (opt.mode == "threshold") {
    cut = threshold_tree(tree, opt.k);
  } else {
    throw std::invalid_argument("segment: unknown mode '" + opt.mode + "'");
  }

  const Segmentation seg = cut_to_segmentation(cut, tree, sp);
  const fs::path out(global.out_dir);
  write_segmentation((out / "labels.pgm").string(), seg);
  write_ppm((out / "render.ppm").string(), render_segmentation(img, seg));
  write_text_file((out / "cut.json").string(), export_cut(cut));
  echo_config(global, "segment",
              {{"image", opt.image_path},
               {"tree", opt.tree_path},
               {"superpixels", opt.superpixels_path},
               {"p", opt.p},
               {"lambda", opt.lambda},
               {"epsilon", opt.epsilon},
               {"likelihood", opt.likelihood},
               {"gt", opt.gt_path},
               {"mode", opt.mode},
               {"k", opt.k}},
              "segment_config.json");
  std::cout << "regions=" << seg.num_regions;
  if (log_map)
    std::cout << " log_map=" << fmt(*log_map);
  else
    std::cout << " k=" << fmt(opt.k);
  std::cout << "\n";
  return 0;
}

// ---- sample ---------------------------------------------------------------

struct SampleOptions {
  std::string image_path, tree_path, superpixels_path;
  double p = 0.968;
  double lambda = 0.0004;
  double epsilon = 1e-6;
  int samples = 1;
};

int cmd_sample(const GlobalOptions& global, const SampleOptions& opt) {
  if (opt.samples < 1) throw std::invalid_argument("sample: --samples must be >= 1");
  if (opt.image_path.empty() || opt.tree_path.empty() || opt.superpixels_path.empty())
    throw std::invalid_argument("sample: --image, --tree, --superpixels are required");
  ensure_out_dir(global);
  const Image img = read_ppm(opt.image_path);
  validate(img);
  const SuperpixelMap sp = load_superpixels(opt.superpixels_path);
  const RegionTree tree = import_tree(read_text_file(opt.tree_path));
  check_tree_matches(tree, sp);

  LikelihoodConfig cfg;
  cfg.lambda = opt.lambda;
  cfg.epsilon = opt.epsilon;
  const auto logliks = region_loglik_table(tree, img, sp, nullptr, cfg);
  const auto params = global_params(tree, opt.p);
  const auto tables = compute_posterior_tables(tree, params, logliks);
  const double total = tables.total[tree.root_index()];

  const fs::path out(global.out_dir);
  std::string csv = "sample,regions,log_posterior\n";
  Rng rng(global.seed);
  for (int s = 0; s < opt.samples; ++s) {
    const CutConfig cut = sample_cut(tree, tables, rng);
    const Segmentation seg = cut_to_segmentation(cut, tree, sp);
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%03d.pgm", s);
    write_segmentation((out / name).string(), seg);
    csv += std::to_string(s) + "," + std::to_string(seg.num_regions) + "," +
           fmt(cut_score(tree, params, logliks, cut) - total) + "\n";
  }
  write_text_file((out / "samples.csv").string(), csv);
  echo_config(global, "sample",
              {{"image", opt.image_path},
               {"tree", opt.tree_path},
               {"superpixels", opt.superpixels_path},
               {"p", opt.p},
               {"lambda", opt.lambda},
               {"epsilon", opt.epsilon},
               {"samples", opt.samples}},
              "sample_config.json");
  std::cout << "samples=" << opt.samples << " log_total=" << fmt(total) << "\n";
  return 0;
}

// ---- eval -----------------------------------------------------------------

struct EvalOptions {
  std::string seg_path;
  double param = 0.0;
  std::vector<std::string> annotation_paths;
  std::string manifest_path;
  std::string image_id;
  std::string metrics = "covering,pri,vi";
};

struct EvalImage {
  std::string id;
  AnnotationSet annotations;
  std::vector<std::pair<double, std::string>> segmentations;  // (param, path)
};

std::vector<EvalImage> eval_manifest(const std::string& path) {
  const json doc = load_json_file(path);
  if (!doc.is_array())
    throw ValidationError(path + ": eval manifest must be a JSON array");
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    return fs::path(p).is_absolute() ? p : (base / p).string();
  };
  std::vector<EvalImage> images;
  for (const auto& entry : doc) {
    EvalImage img;
    img.id = entry.value("id", "image" + std::to_string(images.size()));
    img.annotations.image_id = img.id;
    if (!entry.contains("annotations") || !entry["annotations"].is_array())
      throw ValidationError(path + ": entry missing 'annotations'");
    for (const auto& a : entry["annotations"])
      img.annotations.segmentations.push_back(
          read_segmentation(resolve(a.get<std::string>())));
    if (!entry.contains("segmentations") || !entry["segmentations"].is_array())
      throw ValidationError(path + ": entry missing 'segmentations'");
    for (const auto& s : entry["segmentations"])
      img.segmentations.emplace_back(s.value("param", 0.0),
                                     resolve(s.at("path").get<std::string>()));
    images.push_back(std::move(img));
  }
  if (images.empty()) throw ValidationError(path + ": eval manifest is empty");
  return images;
}

int cmd_eval(const GlobalOptions& global, const EvalOptions& opt) {
  ensure_out_dir(global);
  std::vector<EvalImage> images;
  if (!opt.manifest_path.empty()) {
    images = eval_manifest(opt.manifest_path);
  } else {
    if (opt.seg_path.empty() || opt.annotation_paths.empty())
      throw std::invalid_argument("eval: need --seg and --annotations, or --manifest");
    EvalImage img;
    img.id = opt.image_id.empty() ? fs::path(opt.seg_path).stem().string()
                                  : opt.image_id;
    img.annotations.image_id = img.id;
    for (const auto& a : opt.annotation_paths)
      img.annotations.segmentations.push_back(read_segmentation(a));
    img.segmentations.emplace_back(opt.param, opt.seg_path);
    images.push_back(std::move(img));
  }
  for (const auto& img : images) validate(img.annotations);

  std::vector<ImageSweep> sweeps(images.size());
  parallel_for(images.size(), global.jobs, [&](std::size_t i) {
    ImageSweep sweep;
    sweep.image_id = images[i].id;
    for (const auto& [param, seg_path] : images[i].segmentations) {
      const Segmentation seg = read_segmentation(seg_path);
      sweep.params.push_back(param);
      sweep.reports.push_back(evaluate(seg, images[i].annotations));
    }
    sweeps[i] = std::move(sweep);
  });

  std::string csv = "image_id,param,covering,pri,vi\n";
  for (const auto& sweep : sweeps)
    for (std::size_t j = 0; j < sweep.params.size(); ++j)
      csv += sweep.image_id + "," + fmt(sweep.params[j]) + "," +
             fmt(sweep.reports[j].covering) + "," + fmt(sweep.reports[j].pri) + "," +
             fmt(sweep.reports[j].vi) + "\n";

  // Mean rows over images, per parameter, when the sweep is rectangular.
  const auto& params0 = sweeps.front().params;
  const bool rectangular = std::all_of(
      sweeps.begin(), sweeps.end(),
      [&](const ImageSweep& s) { return s.params == params0; });
  if (rectangular) {
    for (std::size_t j = 0; j < params0.size(); ++j) {
      MetricReport mean;
      for (const auto& sweep : sweeps) {
        mean.covering += sweep.reports[j].covering;
        mean.pri += sweep.reports[j].pri;
        mean.vi += sweep.reports[j].vi;
      }
      mean.covering /= static_cast<double>(sweeps.size());
      mean.pri /= static_cast<double>(sweeps.size());
      mean.vi /= static_cast<double>(sweeps.size());
      csv += "mean," + fmt(params0[j]) + "," + fmt(mean.covering) + "," +
             fmt(mean.pri) + "," + fmt(mean.vi) + "\n";
      std::cout << "mean param=" << fmt(params0[j]) << " covering=" << fmt(mean.covering)
                << " pri=" << fmt(mean.pri) << " vi=" << fmt(mean.vi) << "\n";
    }
  }
  const fs::path out(global.out_dir);
  write_text_file((out / "metrics.csv").string(), csv);

  // ODS/OIS for a parameter sweep.
  if (rectangular && params0.size() >= 2) {
    json summary;
    for (const auto& name : {"covering", "pri", "vi"}) {
      if (opt.metrics.find(name) == std::string::npos) continue;
      const auto r = ods_ois_eval(sweeps, parse_metric(name));
      summary[name] = {{"ods", r.ods}, {"best_param", r.best_param}, {"ois", r.ois}};
      std::cout << name << " ods=" << fmt(r.ods) << " best_param=" << fmt(r.best_param)
                << " ois=" << fmt(r.ois) << "\n";
    }
    write_text_file((out / "ods_ois.json").string(), summary.dump(2) + "\n");
  }

  echo_config(global, "eval",
              {{"seg", opt.seg_path},
               {"param", opt.param},
               {"annotations", opt.annotation_paths},
               {"manifest", opt.manifest_path},
               {"metrics", opt.metrics}},
              "eval_config.json");
  return 0;
}

// ---- tune -----------------------------------------------------------------

struct TuneOptions {
  std::string manifest_path;
  std::string p_grid;        // comma-separated values
  std::string p_grid_dense;  // count:min:max
  std::string lambda_grid = "0.0004";
  std::string k_grid;  // baseline threshold sweep
  std::string metric = "covering";
  double epsilon = 1e-6;
  bool scale = false;
};

std::vector<double> parse_csv_doubles(const std::string& text, const char* what) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size() && !text.empty()) {
    const std::size_t comma = text.find(',', start);
    const std::string tok =
        text.substr(start, comma == std::string::npos ? comma : comma - start);
    try {
      values.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": bad number '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

std::vector<TuningItem> tune_manifest(const std::string& path) {
  const json doc = load_json_file(path);
  if (!doc.is_array())
    throw ValidationError(path + ": tune manifest must be a JSON array");
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    return fs::path(p).is_absolute() ? p : (base / p).string();
  };
  std::vector<TuningItem> items;
  for (const auto& entry : doc) {
    for (const char* key : {"image", "tree", "superpixels", "annotations"})
      if (!entry.contains(key))
        throw ValidationError(path + ": entry missing '" + std::string(key) + "'");
    Image img = read_ppm(resolve(entry["image"].get<std::string>()));
    validate(img);
    SuperpixelMap sp = load_superpixels(resolve(entry["superpixels"].get<std::string>()));
    RegionTree tree = import_tree(read_text_file(resolve(entry["tree"].get<std::string>())));
    check_tree_matches(tree, sp);
    AnnotationSet gts;
    gts.image_id = entry.value(
        "id", fs::path(entry["image"].get<std::string>()).stem().string());
    for (const auto& a : entry["annotations"])
      gts.segmentations.push_back(read_segmentation(resolve(a.get<std::string>())));
    validate(gts);
    items.push_back(TuningItem{gts.image_id, std::move(img), std::move(sp),
                               std::move(tree), std::move(gts)});
  }
  if (items.empty()) throw ValidationError(path + ": tune manifest is empty");
  return items;
}

int cmd_tune(const GlobalOptions& global, const TuneOptions& opt) {
  if (opt.manifest_path.empty())
    throw std::invalid_argument("tune: --manifest is required");
  ensure_out_dir(global);
  const auto items = tune_manifest(opt.manifest_path);
  const Metric metric = parse_metric(opt.metric);
  const fs::path out(global.out_dir);

  json config_body{{"manifest", opt.manifest_path}, {"metric", opt.metric},
                   {"epsilon", opt.epsilon},        {"p_grid", opt.p_grid},
                   {"p_grid_dense", opt.p_grid_dense}, {"lambda_grid", opt.lambda_grid},
                   {"k_grid", opt.k_grid},          {"scale", opt.scale}};

  // Baseline sweep over UCM thresholds.
  if (!opt.k_grid.empty()) {
    const auto k_values = parse_csv_doubles(opt.k_grid, "--k-grid");
    const auto result = grid_search_threshold(items, k_values, metric, global.jobs);
    std::string csv = "k,score\n";
    for (const auto& row : result.rows)
      csv += fmt(row.k) + "," + fmt(row.score) + "\n";
    write_text_file((out / "tune_results.csv").string(), csv);
    const json summary{{"best_k", result.best_k}, {"score", result.score}};
    write_text_file((out / "tune_summary.json").string(), summary.dump(2) + "\n");
    echo_config(global, "tune", config_body, "tune_config.json");
    std::cout << "best_k=" << fmt(result.best_k) << " score=" << fmt(result.score)
              << "\n";
    return 0;
  }

  ParamGrid grid;
  if (!opt.p_grid.empty()) {
    grid.p_values = parse_csv_doubles(opt.p_grid, "--p-grid");
  } else if (!opt.p_grid_dense.empty()) {
    int count;
    double lo, hi;
    if (std::sscanf(opt.p_grid_dense.c_str(), "%d:%lf:%lf", &count, &lo, &hi) != 3)
      throw std::invalid_argument("--p-grid-dense expects COUNT:MIN:MAX");
    grid.p_values = dense_p_grid(count, lo, hi);
  } else {
    grid.p_values = dense_p_grid(100, 0.0001, 0.9999);
  }
  grid.lambda_values = parse_csv_doubles(opt.lambda_grid, "--lambda-grid");
  validate(grid);

  LikelihoodConfig cfg;
  cfg.epsilon = opt.epsilon;

  auto run_grid = [&](const std::vector<TuningItem>& subset) {
    return grid_search(subset, grid, metric, cfg, global.jobs);
  };

  if (!opt.scale) {
    const auto result = run_grid(items);
    std::string csv = "p,lambda,score\n";
    for (const auto& row : result.rows)
      csv += fmt(row.p) + "," + fmt(row.lambda) + "," + fmt(row.score) + "\n";
    write_text_file((out / "tune_results.csv").string(), csv);
    const json summary{{"best_p", result.best_p},
                       {"best_lambda", result.best_lambda},
                       {"score", result.score}};
    write_text_file((out / "tune_summary.json").string(), summary.dump(2) + "\n");
    echo_config(global, "tune", config_body, "tune_config.json");
    std::cout << "best_p=" << fmt(result.best_p)
              << " best_lambda=" << fmt(result.best_lambda)
              << " score=" << fmt(result.score) << "\n";
    return 0;
  }

  // Scale-specific protocol: bucket by annotation segment count, train per
  // bucket (and on everything), evaluate mean covering per bucket.
  std::vector<AnnotationSet> annotations;
  for (const auto& item : items) annotations.push_back(item.annotations);
  const ScaleSplit split = scale_split(annotations);
  auto subset = [&](const std::vector<std::size_t>& ids) {
    std::vector<TuningItem> sub;
    for (std::size_t i : ids) sub.push_back(items[i]);
    return sub;
  };
  auto train = [&](const std::vector<std::size_t>& ids) {
    const auto r = run_grid(subset(ids));
    return std::pair<double, double>{r.best_p, r.best_lambda};
  };
  auto eval_fn = [&](const std::pair<double, double>& params,
                     const std::vector<std::size_t>& ids) {
    double sum = 0.0;
    const auto sub = subset(ids);
    for (const auto& item : sub) {
      LikelihoodConfig c = cfg;
      c.lambda = params.second;
      const auto table =
          region_loglik_table(item.tree, item.image, item.superpixels, nullptr, c);
      const auto cut = map_cut(item.tree, global_params(item.tree, params.first),
                               table).first;
      sum += covering_vs_annotations(
          cut_to_segmentation(cut, item.tree, item.superpixels), item.annotations);
    }
    return sum / static_cast<double>(sub.size());
  };
  const auto matrix = cross_scale_matrix(split, split, train, eval_fn);

  std::string csv = "trained_on,test_coarse,test_medium,test_fine\n";
  json summary;
  for (int row = 0; row < 4; ++row) {
    const auto bucket = static_cast<ScaleBucket>(row);
    csv += scale_bucket_name(bucket);
    json jrow;
    if (!matrix.trained[row]) {
      csv += ",skipped,skipped,skipped";
      jrow["skipped"] = true;
    } else {
      jrow["best_p"] = matrix.trained[row]->first;
      jrow["best_lambda"] = matrix.trained[row]->second;
      for (int col = 0; col < 3; ++col) {
        if (matrix.scores[row][col]) {
          csv += "," + fmt(*matrix.scores[row][col]);
          jrow[std::string("test_") +
               scale_bucket_name(static_cast<ScaleBucket>(col))] =
              *matrix.scores[row][col];
        } else {
          csv += ",empty";
        }
      }
    }
    csv += "\n";
    summary[scale_bucket_name(bucket)] = std::move(jrow);
  }
  write_text_file((out / "cross_scale.csv").string(), csv);
  write_text_file((out / "tune_summary.json").string(), summary.dump(2) + "\n");
  echo_config(global, "tune", config_body, "tune_config.json");
  std::cout << "scale buckets: coarse=" << split.coarse.size()
            << " medium=" << split.medium.size() << " fine=" << split.fine.size()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tree-cut segmentation: region trees, exact tree-cut inference,\n"
               "sampling, evaluation, and parameter tuning"};
  app.require_subcommand(1);

  GlobalOptions global;
  ConfigBinder binder;
  app.add_option("--config", global.config_path, "JSON config file; explicit flags win");
  auto* seed_opt = app.add_option("--seed", global.seed, "random seed");
  auto* jobs_opt = app.add_option("--jobs", global.jobs, "worker thread cap");
  auto* out_opt = app.add_option("--out-dir", global.out_dir, "output directory");
  binder.bind(seed_opt, "seed", &global.seed);
  binder.bind(jobs_opt, "jobs", &global.jobs);
  binder.bind(out_opt, "out_dir", &global.out_dir);

  TreeOptions tree_opt;
  auto* tree_cmd = app.add_subcommand("tree", "build superpixels and a region tree");
  tree_cmd->fallthrough();
  binder.bind(tree_cmd->add_option("--image", tree_opt.image_path, "input PPM (P6)"),
              "image", &tree_opt.image_path);
  binder.bind(tree_cmd->add_option("--mode", tree_opt.mode, "grid|color"), "mode",
              &tree_opt.mode);
  binder.bind(tree_cmd->add_option("--cell", tree_opt.cell, "grid cell size"), "cell",
              &tree_opt.cell);
  binder.bind(tree_cmd->add_option("--count", tree_opt.count, "color superpixel target"),
              "count", &tree_opt.count);

  SegmentOptions seg_opt;
  auto* seg_cmd = app.add_subcommand("segment", "MAP or threshold segmentation");
  seg_cmd->fallthrough();
  binder.bind(seg_cmd->add_option("--image", seg_opt.image_path, "input PPM"),
              "image", &seg_opt.image_path);
  binder.bind(seg_cmd->add_option("--tree", seg_opt.tree_path, "tree JSON"),
              "tree", &seg_opt.tree_path);
  binder.bind(seg_cmd->add_option("--superpixels", seg_opt.superpixels_path,
                                  "superpixel PGM"),
              "superpixels", &seg_opt.superpixels_path);
  binder.bind(seg_cmd->add_option("--p", seg_opt.p, "global activation probability"),
              "p", &seg_opt.p);
  binder.bind(seg_cmd->add_option("--lambda", seg_opt.lambda, "likelihood scale"),
              "lambda", &seg_opt.lambda);
  binder.bind(seg_cmd->add_option("--epsilon", seg_opt.epsilon, "covariance ridge"),
              "epsilon", &seg_opt.epsilon);
  binder.bind(seg_cmd->add_option("--likelihood", seg_opt.likelihood, "gaussian|gt"),
              "likelihood", &seg_opt.likelihood);
  binder.bind(seg_cmd->add_option("--gt", seg_opt.gt_path, "ground-truth PGM for gt mode"),
              "gt", &seg_opt.gt_path);
  binder.bind(seg_cmd->add_option("--mode", seg_opt.mode, "map|threshold"), "mode",
              &seg_opt.mode);
  binder.bind(seg_cmd->add_option("--k", seg_opt.k, "UCM threshold"), "k", &seg_opt.k);

  SampleOptions sample_opt;
  auto* sample_cmd = app.add_subcommand("sample", "posterior segmentation samples");
  sample_cmd->fallthrough();
  binder.bind(sample_cmd->add_option("--image", sample_opt.image_path, "input PPM"),
              "image", &sample_opt.image_path);
  binder.bind(sample_cmd->add_option("--tree", sample_opt.tree_path, "tree JSON"),
              "tree", &sample_opt.tree_path);
  binder.bind(sample_cmd->add_option("--superpixels", sample_opt.superpixels_path,
                                     "superpixel PGM"),
              "superpixels", &sample_opt.superpixels_path);
  binder.bind(sample_cmd->add_option("--p", sample_opt.p, "global activation probability"),
              "p", &sample_opt.p);
  binder.bind(sample_cmd->add_option("--lambda", sample_opt.lambda, "likelihood scale"),
              "lambda", &sample_opt.lambda);
  binder.bind(sample_cmd->add_option("--epsilon", sample_opt.epsilon, "covariance ridge"),
              "epsilon", &sample_opt.epsilon);
  binder.bind(sample_cmd->add_option("--samples", sample_opt.samples, "sample count"),
              "samples", &sample_opt.samples);

  EvalOptions eval_opt;
  auto* eval_cmd = app.add_subcommand("eval", "score segmentations against annotations");
  eval_cmd->fallthrough();
  binder.bind(eval_cmd->add_option("--seg", eval_opt.seg_path, "segmentation PGM"),
              "seg", &eval_opt.seg_path);
  binder.bind(eval_cmd->add_option("--param", eval_opt.param, "parameter tag for --seg"),
              "param", &eval_opt.param);
  binder.bind(eval_cmd->add_option("--annotations", eval_opt.annotation_paths,
                                   "annotation PGMs")
                  ->delimiter(','),
              "annotations", &eval_opt.annotation_paths);
  binder.bind(eval_cmd->add_option("--manifest", eval_opt.manifest_path,
                                   "eval manifest JSON"),
              "manifest", &eval_opt.manifest_path);
  binder.bind(eval_cmd->add_option("--id", eval_opt.image_id, "image id for --seg"),
              "id", &eval_opt.image_id);
  binder.bind(eval_cmd->add_option("--metrics", eval_opt.metrics,
                                   "subset of covering,pri,vi"),
              "metrics", &eval_opt.metrics);

  TuneOptions tune_opt;
  auto* tune_cmd = app.add_subcommand("tune", "grid-search parameters on a dataset");
  tune_cmd->fallthrough();
  binder.bind(tune_cmd->add_option("--manifest", tune_opt.manifest_path,
                                   "tune manifest JSON"),
              "manifest", &tune_opt.manifest_path);
  binder.bind(tune_cmd->add_option("--p-grid", tune_opt.p_grid, "comma-separated p values"),
              "p_grid", &tune_opt.p_grid);
  binder.bind(tune_cmd->add_option("--p-grid-dense", tune_opt.p_grid_dense,
                                   "COUNT:MIN:MAX dense-near-1 grid"),
              "p_grid_dense", &tune_opt.p_grid_dense);
  binder.bind(tune_cmd->add_option("--lambda-grid", tune_opt.lambda_grid,
                                   "comma-separated lambda values"),
              "lambda_grid", &tune_opt.lambda_grid);
  binder.bind(tune_cmd->add_option("--k-grid", tune_opt.k_grid,
                                   "baseline threshold sweep (UCM weights)"),
              "k_grid", &tune_opt.k_grid);
  binder.bind(tune_cmd->add_option("--metric", tune_opt.metric, "covering|pri|vi"),
              "metric", &tune_opt.metric);
  binder.bind(tune_cmd->add_option("--epsilon", tune_opt.epsilon, "covariance ridge"),
              "epsilon", &tune_opt.epsilon);
  binder.bind(tune_cmd->add_flag("--scale", tune_opt.scale,
                                 "coarse/medium/fine cross-training matrix"),
              "scale", &tune_opt.scale);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!global.config_path.empty()) binder.apply(load_json_file(global.config_path));
    if (tree_cmd->parsed()) return cmd_tree(global, tree_opt);
    if (seg_cmd->parsed()) return cmd_segment(global, seg_opt);
    if (sample_cmd->parsed()) return cmd_sample(global, sample_opt);
    if (eval_cmd->parsed()) return cmd_eval(global, eval_opt);
    if (tune_cmd->parsed()) return cmd_tune(global, tune_opt);
    std::cerr << "treecut: no command\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "treecut: io error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "treecut: validation error: " << e.what() << "\n";
    return 4;
  } catch (const ResourceLimitError& e) {
    std::cerr << "treecut: resource limit: " << e.what() << "\n";
    return 5;
  } catch (const std::invalid_argument& e) {
    std::cerr << "treecut: argument error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "treecut: error: " << e.what() << "\n";
    return 1;
  }
}
