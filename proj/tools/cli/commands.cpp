/* Copyright 2026 The camrefine Authors. All Rights Reserved.

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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>

#include "app.hpp"
#include "camrefine/backend.hpp"
#include "camrefine/condinfer.hpp"
#include "camrefine/dataio.hpp"
#include "camrefine/errors.hpp"
#include "camrefine/kv.hpp"
#include "camrefine/metrics.hpp"
#include "camrefine/parallel.hpp"
#include "camrefine/pseudo.hpp"
#include "camrefine/refine_loss.hpp"
#include <nlohmann/json.hpp>

namespace camrefine::cli {
namespace {

using nlohmann::json;
using Report = std::vector<std::pair<std::string, std::string>>;

void Require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kConfig, what);
}

void RequireOut(const RunConfig& c) {
  Require(!c.out.empty(), "--out is required");
  Require(c.workers >= 1, "--workers must be at least 1");
}

ClassifierHandle LoadClassifier(const RunConfig& c) {
  Require(!c.model.empty(), "--model is required");
  if (!fs::exists(c.model)) {
    throw Error(ErrorCode::kMissingFile, "model " + c.model.string() + " not found");
  }
  fs::path manifest = c.manifest;
  if (manifest.empty()) manifest = fs::path(c.model).replace_extension(".manifest");
  return LoadModel(c.model, ModelManifest::FromFile(manifest));
}

dataio::DatasetIndex LoadIndex(const RunConfig& c, bool images, bool labels) {
  Require(!c.list.empty(), "--list is required");
  if (images) Require(!c.images.empty(), "--images is required");
  if (labels) Require(!c.labels.empty(), "--labels is required");
  dataio::DatasetRoots roots;
  roots.images = c.images;
  if (!c.labels.empty()) roots.labels = c.labels;
  if (!c.saliency.empty()) roots.saliency = c.saliency;
  if (!c.class_file.empty()) roots.class_file = c.class_file;
  return dataio::LoadDataset(c.list, roots);
}

std::vector<float> Thresholds(const RunConfig& c) {
  return c.thresholds.empty() ? pseudo::DefaultThresholdGrid() : c.thresholds;
}

// <id>_<class>.npy files in a map directory, grouped by id in class order.
std::map<std::string, std::vector<fs::path>> ScanMaps(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kMissingFile, "map directory " + dir.string() + " not found");
  }
  static const std::regex pattern(R"((.+)_([0-9]+)\.npy)");
  std::map<std::string, std::map<int, fs::path>> found;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && std::regex_match(name, m, pattern)) {
      found[m[1]][std::stoi(m[2])] = e.path();
    }
  }
  std::map<std::string, std::vector<fs::path>> out;
  for (auto& [id, by_class] : found) {
    for (auto& [cls, path] : by_class) out[id].push_back(path);
  }
  return out;
}

std::vector<ResponseMap> LoadMaps(const std::map<std::string, std::vector<fs::path>>& index,
                                  const std::string& id) {
  std::vector<ResponseMap> maps;
  if (auto it = index.find(id); it != index.end()) {
    for (const fs::path& p : it->second) maps.push_back(dataio::LoadResponseMap(p));
  }
  return maps;
}

void ExpectSize(const std::string& what, int h, int w, int want_h, int want_w) {
  if (h != want_h || w != want_w) {
    throw Error(ErrorCode::kDimension, what + " is " + std::to_string(h) + "x" +
                                           std::to_string(w) + ", expected " +
                                           std::to_string(want_h) + "x" +
                                           std::to_string(want_w));
  }
}

struct Failure {
  std::string id;
  std::string stage;
  std::string message;
};

// Per-entry outcome slots filled by the worker pool.
struct EntryResult {
  std::optional<Failure> failure;
  std::vector<fs::path> written;  // relative to the output directory
};

// Runs `fn` over every entry; exceptions become per-entry failures.
template <typename Fn>
std::vector<EntryResult> ForEachEntry(const dataio::DatasetIndex& index, int workers, Fn&& fn) {
  std::vector<EntryResult> results(index.entries.size());
  ParallelFor(index.entries.size(), workers, [&](std::size_t i) {
    try {
      fn(index.entries[i], &results[i]);
    } catch (const std::exception& e) {
      results[i].failure = Failure{index.entries[i].id, "process", e.what()};
    }
  });
  return results;
}

void WriteText(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

// Writes failures.json, report.txt and digests.txt, echoes the report and
// returns the exit status.
int Finish(const RunConfig& c, const dataio::DatasetIndex& index,
           std::vector<EntryResult>& results, Report report, std::ostream& out) {
  std::vector<Failure> failures;
  for (const auto& r : index.rejected) failures.push_back({r.id, "load", r.reason});
  std::size_t processed = 0;
  std::vector<fs::path> written;
  for (auto& r : results) {
    if (r.failure) {
      failures.push_back(*r.failure);
    } else {
      ++processed;
    }
    written.insert(written.end(), r.written.begin(), r.written.end());
  }
  std::stable_sort(failures.begin(), failures.end(),
                   [](const Failure& a, const Failure& b) { return a.id < b.id; });

  json fj = json::array();
  for (const Failure& f : failures) {
    fj.push_back({{"id", f.id}, {"stage", f.stage}, {"message", f.message}});
  }
  WriteText(c.out / "failures.json", json{{"failures", fj}}.dump(2) + "\n");

  Report head = {{"command", c.command},
                 {"config_digest", ConfigDigest(c)},
                 {"processed", std::to_string(processed)},
                 {"failed", std::to_string(failures.size())}};
  report.insert(report.begin(), head.begin(), head.end());
  const std::string text = kv::Format(report);
  WriteText(c.out / "report.txt", text);

  written.push_back("failures.json");
  written.push_back("report.txt");
  std::sort(written.begin(), written.end());
  std::string digests;
  for (const fs::path& rel : written) {
    digests += Sha256File(c.out / rel) + "  " + rel.generic_string() + "\n";
  }
  WriteText(c.out / "digests.txt", digests);

  out << text;
  out << processed << " processed, " << failures.size() << " failed\n";
  return failures.empty() ? kExitOk : kExitPartialFailure;
}

fs::path MapName(const std::string& id, int class_id) {
  return fs::path("maps") / (id + "_" + std::to_string(class_id) + ".npy");
}

void SaveMaps(const RunConfig& c, const std::string& id, const std::vector<ResponseMap>& maps,
              EntryResult* result) {
  const std::string digest = ConfigDigest(c);
  for (const ResponseMap& m : maps) {
    const fs::path rel = MapName(id, m.class_id());
    dataio::SaveResponseMap(m, c.out / rel, digest);
    result->written.push_back(rel);
    result->written.push_back(dataio::SidecarPath(rel));
  }
}

std::string CountMaps(const std::vector<EntryResult>& results) {
  std::size_t n = 0;
  for (const auto& r : results) {
    for (const fs::path& p : r.written) n += p.extension() == ".npy";
  }
  return std::to_string(n);
}

std::vector<int> PresentClasses(const ClassifierHandle& handle, const dataio::DatasetEntry& e,
                                const ImageTensor& image) {
  if (e.classes) return *e.classes;
  return ClassesAboveThreshold(handle, Forward(handle, image).scores);
}

json RectJson(const Rect& r) { return json::array({r.top, r.left, r.height, r.width}); }

json TraceJson(const std::string& id, const condinfer::PipelineResult& result) {
  json classes = json::array();
  for (const auto& cr : result.classes) {
    json split = nullptr;
    if (cr.split) {
      json patches = json::array();
      for (const Rect& r : cr.split->patches) patches.push_back(RectJson(r));
      split = {{"mode", condinfer::SplitModeName(cr.split->mode)},
               {"patches", patches},
               {"overlap", cr.split->overlap ? RectJson(*cr.split->overlap) : json(nullptr)}};
    }
    json patches = json::array();
    for (const auto& p : cr.patches) {
      json iterations = json::array();
      for (const auto& rec : p.trace.records) {
        iterations.push_back({{"iteration", rec.iteration},
                              {"erased_pixels", rec.erased_pixels},
                              {"newly_activated", rec.newly_activated}});
      }
      patches.push_back({{"rect", RectJson(p.rect)},
                         {"stopped_by_rule", p.trace.stopped_by_rule},
                         {"iterations", iterations}});
    }
    classes.push_back({{"class_id", cr.class_id},
                       {"split", split},
                       {"fallback_reason", cr.fallback_reason},
                       {"patches", patches}});
  }
  return {{"id", id}, {"classes", classes}};
}

int ForegroundClassCount(const LabelMap& gt) {
  std::set<int> seen;
  for (std::uint8_t l : gt.data) {
    if (l != 0 && l != kIgnoreLabel) seen.insert(l);
  }
  return static_cast<int>(seen.size());
}

LabelMap Predict(const std::vector<ResponseMap>& maps, float threshold, int h, int w) {
  if (maps.empty()) return LabelMap(h, w, std::uint8_t{0});
  return pseudo::GeneratePseudoLabels(maps, threshold);
}

void AppendBreakdown(const std::vector<metrics::ImageEvaluation>& images, int size,
                     Report* report) {
  const metrics::ClassCountBreakdown b = metrics::BreakdownByClassCount(images, size);
  const char* names[] = {"one_class", "two_classes", "three_plus_classes"};
  for (int k = 0; k < 3; ++k) {
    const auto miou = b.BucketMiou(k);
    report->push_back({std::string("bucket_") + names[k] + "_images",
                       std::to_string(b.images[k])});
    report->push_back({std::string("bucket_") + names[k] + "_miou",
                       miou ? kv::FormatFloat(*miou) : "no data"});
  }
}

void AppendPerClass(const metrics::ConfusionMatrix& cm, Report* report) {
  const auto iou = cm.PerClassIou();
  const auto& names = dataio::VocClassNames();
  for (std::size_t k = 0; k < iou.size(); ++k) {
    if (!iou[k]) continue;
    const std::string name = k == 0 ? "background" : names[k - 1];
    report->push_back({"iou_" + name, kv::FormatFloat(*iou[k])});
  }
}

const int kMatrixSize = 21;

}  // namespace

int CmdCam(const RunConfig& c, std::ostream& out) {
  RequireOut(c);
  const ClassifierHandle handle = LoadClassifier(c);
  const dataio::DatasetIndex index = LoadIndex(c, true, false);
  auto results = ForEachEntry(index, c.workers, [&](const dataio::DatasetEntry& e,
                                                    EntryResult* r) {
    const ImageTensor image = dataio::ReadImage(e.image);
    std::vector<ResponseMap> maps;
    for (int cls : PresentClasses(handle, e, image)) {
      maps.push_back(ClassConditionalMap(handle, image, cls));
    }
    SaveMaps(c, e.id, maps, r);
  });
  return Finish(c, index, results, {{"maps_written", CountMaps(results)}}, out);
}

int CmdInfer(const RunConfig& c, std::ostream& out) {
  RequireOut(c);
  condinfer::PipelineOptions options;
  options.refinement.max_iterations = c.max_iterations;
  options.refinement.erase_threshold = c.erase_threshold;
  options.refinement.stop_fraction = c.stop_fraction;
  options.refinement.Validate();
  options.split = c.split;
  const ClassifierHandle handle = LoadClassifier(c);
  const dataio::DatasetIndex index = LoadIndex(c, true, false);
  // Workers go to entries first; a single entry gets them for its patches.
  options.workers = index.entries.size() > 1 ? 1 : c.workers;
  auto results = ForEachEntry(index, c.workers, [&](const dataio::DatasetEntry& e,
                                                    EntryResult* r) {
    const ImageTensor image = dataio::ReadImage(e.image);
    std::vector<int> classes = PresentClasses(handle, e, image);
    condinfer::PipelineResult result;
    if (!classes.empty()) result = condinfer::RunPipeline(handle, image, classes, options);
    std::vector<ResponseMap> maps;
    for (const auto& cr : result.classes) maps.push_back(cr.map);
    SaveMaps(c, e.id, maps, r);
    const fs::path trace = fs::path("traces") / (e.id + ".json");
    WriteText(c.out / trace, TraceJson(e.id, result).dump(2) + "\n");
    r->written.push_back(trace);
  });
  return Finish(c, index, results, {{"maps_written", CountMaps(results)}}, out);
}

int CmdEval(const RunConfig& c, std::ostream& out) {
  RequireOut(c);
  Require(c.maps.empty() != c.predictions.empty(),
          "exactly one of --maps or --predictions is required");
  const dataio::DatasetIndex index = LoadIndex(c, false, true);
  const std::vector<float> thresholds = Thresholds(c);

  std::map<std::string, std::vector<fs::path>> map_index;
  if (!c.maps.empty()) map_index = ScanMaps(c.maps);
  std::vector<std::optional<LabelMap>> gts(index.entries.size());
  std::vector<std::vector<ResponseMap>> maps(index.entries.size());
  std::vector<std::optional<LabelMap>> preds(index.entries.size());
  auto results = ForEachEntry(index, c.workers, [&](const dataio::DatasetEntry& e,
                                                    EntryResult*) {
    const std::size_t i = static_cast<std::size_t>(&e - index.entries.data());
    LabelMap gt = dataio::ReadLabelPng(*e.label);
    if (!c.maps.empty()) {
      auto m = LoadMaps(map_index, e.id);
      for (const ResponseMap& r : m) {
        ExpectSize("map for class " + std::to_string(r.class_id()), r.height(), r.width(),
                   gt.height, gt.width);
        if (r.class_id() >= kMatrixSize - 1) {
          throw Error(ErrorCode::kContract, "class id " + std::to_string(r.class_id()) +
                                                " outside the VOC classes");
        }
      }
      maps[i] = std::move(m);
    } else {
      LabelMap pred = dataio::ReadLabelPng(c.predictions / (e.id + ".png"));
      ExpectSize("prediction", pred.height, pred.width, gt.height, gt.width);
      preds[i] = std::move(pred);
    }
    gts[i] = std::move(gt);
  });

  Report report;
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].failure) ok.push_back(i);
  }
  if (!ok.empty()) {
    std::vector<metrics::ImageEvaluation> images;
    metrics::ConfusionMatrix overall(kMatrixSize);
    if (!c.maps.empty()) {
      std::vector<pseudo::SweepSample> samples;
      for (std::size_t i : ok) samples.push_back({maps[i], &*gts[i]});
      const pseudo::ThresholdSweepResult sweep =
          pseudo::SweepBestMiou(samples, thresholds, kMatrixSize - 1, c.workers);
      report.push_back({"best_threshold", kv::FormatFloat(sweep.best_threshold)});
      report.push_back({"best_miou", kv::FormatFloat(sweep.best_miou)});
      metrics::RecallCounts recall;
      for (std::size_t i : ok) recall.Add(maps[i], *gts[i]);
      report.push_back({"activated_recall",
                        recall.foreground ? kv::FormatFloat(recall.Recall()) : "undefined"});
      for (std::size_t t = 0; t < thresholds.size(); ++t) {
        report.push_back({"miou_at_" + kv::FormatFloat(thresholds[t]),
                          kv::FormatFloat(sweep.miou_per_threshold[t])});
      }
      for (std::size_t i : ok) {
        const LabelMap& gt = *gts[i];
        LabelMap pred = Predict(maps[i], sweep.best_threshold, gt.height, gt.width);
        images.push_back({metrics::Accumulate(metrics::ConfusionMatrix(kMatrixSize), pred, gt),
                          ForegroundClassCount(gt)});
        overall += images.back().cm;
      }
      if (!c.csv.empty()) {
        std::string csv = "threshold,miou\n";
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
          csv += kv::FormatFloat(thresholds[t]) + "," +
                 kv::FormatFloat(sweep.miou_per_threshold[t]) + "\n";
        }
        WriteText(c.csv, csv);
      }
    } else {
      for (std::size_t i : ok) {
        images.push_back(
            {metrics::Accumulate(metrics::ConfusionMatrix(kMatrixSize), *preds[i], *gts[i]),
             ForegroundClassCount(*gts[i])});
        overall += images.back().cm;
      }
      report.push_back({"miou", kv::FormatFloat(metrics::MeanIou(overall))});
    }
    AppendBreakdown(images, kMatrixSize, &report);
    AppendPerClass(overall, &report);
  }
  return Finish(c, index, results, report, out);
}

int CmdPseudo(const RunConfig& c, std::ostream& out) {
  RequireOut(c);
  Require(!c.maps.empty(), "--maps is required");
  float threshold = 0.0f;
  if (c.bg_threshold) {
    threshold = *c.bg_threshold;
  } else {
    Require(!c.report.empty(), "one of --bg-threshold or --report is required");
    const auto kv = kv::ReadFile(c.report);
    auto it = kv.find("best_threshold");
    if (it == kv.end()) {
      throw Error(ErrorCode::kFormat, c.report.string() + ": no best_threshold entry");
    }
    threshold = static_cast<float>(kv::ParseDouble(it->second, "best_threshold"));
  }
  const dataio::DatasetIndex index = LoadIndex(c, false, false);
  const auto map_index = ScanMaps(c.maps);
  std::vector<std::optional<LabelMap>> pseudo_labels(index.entries.size());
  std::vector<std::optional<SaliencyMap>> saliency(index.entries.size());
  std::vector<std::optional<LabelMap>> gts(index.entries.size());
  auto results = ForEachEntry(index, c.workers, [&](const dataio::DatasetEntry& e,
                                                    EntryResult* r) {
    const std::size_t i = static_cast<std::size_t>(&e - index.entries.data());
    const auto maps = LoadMaps(map_index, e.id);
    std::optional<LabelMap> gt;
    if (e.label) gt = dataio::ReadLabelPng(*e.label);
    LabelMap labels(1, 1, std::uint8_t{0});
    if (!maps.empty()) {
      labels = pseudo::GeneratePseudoLabels(maps, threshold);
    } else if (gt) {
      labels = LabelMap(gt->height, gt->width, std::uint8_t{0});
    } else if (!e.image.empty()) {
      const ImageTensor image = dataio::ReadImage(e.image);
      labels = LabelMap(image.height(), image.width(), std::uint8_t{0});
    } else {
      throw Error(ErrorCode::kMissingFile, "no response maps and no image to size the output");
    }
    if (gt) ExpectSize("ground truth", gt->height, gt->width, labels.height, labels.width);
    if (e.saliency) {
      SaliencyMap s = dataio::ReadSaliencyPng(*e.saliency);
      ExpectSize("saliency map", s.height, s.width, labels.height, labels.width);
      saliency[i] = std::move(s);
    }
    const fs::path rel = fs::path("pseudo") / (e.id + ".png");
    dataio::WriteLabelPng(labels, c.out / rel);
    r->written.push_back(rel);
    pseudo_labels[i] = std::move(labels);
    gts[i] = std::move(gt);
  });

  Report report = {{"bg_threshold", kv::FormatFloat(threshold)}};
  metrics::ConfusionMatrix cm(kMatrixSize);
  bool any_gt = false;
  std::vector<std::uint8_t> all_labels;
  std::vector<float> all_saliency;
  double tau_sum = 0.0;
  int tau_count = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].failure) continue;
    if (gts[i]) {
      cm.Add(*pseudo_labels[i], *gts[i]);
      any_gt = true;
    }
    if (saliency[i]) {
      tau_sum += metrics::ConflictTemperature(*pseudo_labels[i], *saliency[i]);
      ++tau_count;
      all_labels.insert(all_labels.end(), pseudo_labels[i]->data.begin(),
                        pseudo_labels[i]->data.end());
      all_saliency.insert(all_saliency.end(), saliency[i]->data.begin(),
                          saliency[i]->data.end());
    }
  }
  if (any_gt) report.push_back({"miou", kv::FormatFloat(metrics::MeanIou(cm))});
  if (tau_count > 0) {
    const int n = static_cast<int>(all_labels.size());
    report.push_back({"tau_mean", kv::FormatFloat(tau_sum / tau_count)});
    report.push_back({"tau_batch", kv::FormatFloat(metrics::ConflictTemperature(
                                       LabelMap(1, n, all_labels),
                                       SaliencyMap(1, n, all_saliency)))});
  }
  return Finish(c, index, results, report, out);
}

int CmdLossCheck(const RunConfig& c, std::ostream& out) {
  Require(c.instances >= 1, "--instances must be at least 1");
  Require(!c.loss_classes.empty(), "--classes must not be empty");
  double max_rel = 0.0, max_abs = 0.0, tau0_gap = 0.0;
  int checked = 0;
  for (int s = 0; s < c.instances; ++s) {
    const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(s);
    for (int classes : c.loss_classes) {
      for (bool zero_tau : {false, true}) {
        const loss::LossInstance inst =
            loss::RandomInstance(seed, classes, c.loss_height, c.loss_width, zero_tau);
        const loss::GradientCheck g = loss::CheckTotalLossGradient(inst, c.alpha, c.step);
        max_rel = std::max(max_rel, g.max_relative_error);
        max_abs = std::max(max_abs, g.max_absolute_error);
        if (zero_tau) {
          const auto r = loss::TotalLoss(inst.pred, inst.pseudo, inst.saliency, c.alpha);
          tau0_gap = std::max(tau0_gap, std::abs(r.breakdown.total - r.breakdown.l_seg));
        }
        ++checked;
      }
    }
  }
  const bool pass = max_rel < c.tolerance && tau0_gap <= 1e-12;
  const Report report = {{"command", c.command},
                         {"instances", std::to_string(checked)},
                         {"max_relative_error", kv::FormatFloat(max_rel)},
                         {"max_absolute_error", kv::FormatFloat(max_abs)},
                         {"tau0_total_minus_seg", kv::FormatFloat(tau0_gap)},
                         {"tolerance", kv::FormatFloat(c.tolerance)},
                         {"status", pass ? "pass" : "fail"}};
  const std::string text = kv::Format(report);
  if (!c.out.empty()) WriteText(c.out / "report.txt", text);
  out << text;
  return pass ? kExitOk : kExitHardError;
}

int CmdOverlay(const RunConfig& c, std::ostream& out) {
  RequireOut(c);
  Require(!c.maps.empty(), "--maps is required");
  const dataio::DatasetIndex index = LoadIndex(c, true, false);
  const auto map_index = ScanMaps(c.maps);
  auto results = ForEachEntry(index, c.workers, [&](const dataio::DatasetEntry& e,
                                                    EntryResult* r) {
    const ImageTensor image = dataio::ReadImage(e.image);
    for (const ResponseMap& m : LoadMaps(map_index, e.id)) {
      ExpectSize("map for class " + std::to_string(m.class_id()), m.height(), m.width(),
                 image.height(), image.width());
      std::vector<std::uint8_t> rgb(static_cast<std::size_t>(image.height()) * image.width() * 3);
      const auto px = image.data();
      const auto v = m.data();
      for (std::size_t p = 0; p < v.size(); ++p) {
        // Jet colour ramp.
        const float x = std::clamp(v[p], 0.0f, 1.0f);
        const float jet[3] = {std::clamp(1.5f - std::abs(4 * x - 3), 0.0f, 1.0f),
                              std::clamp(1.5f - std::abs(4 * x - 2), 0.0f, 1.0f),
                              std::clamp(1.5f - std::abs(4 * x - 1), 0.0f, 1.0f)};
        for (int ch = 0; ch < 3; ++ch) {
          const float blended = 0.5f * px[p * 3 + ch] + 0.5f * jet[ch];
          rgb[p * 3 + ch] = static_cast<std::uint8_t>(std::lround(255.0f * blended));
        }
      }
      const fs::path rel =
          fs::path("overlays") / (e.id + "_" + std::to_string(m.class_id()) + ".png");
      dataio::WriteRgbPng(c.out / rel, image.height(), image.width(), rgb);
      r->written.push_back(rel);
    }
  });
  return Finish(c, index, results, {}, out);
}

}  // namespace camrefine::cli
