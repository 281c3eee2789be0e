#include "sgrt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace sgrt {
namespace {

PrPoint point(double threshold, std::size_t tp, std::size_t fp, std::size_t positives) {
  const std::size_t predicted = tp + fp;
  return {threshold, predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 1.0,
          static_cast<double>(tp) / static_cast<double>(positives)};
}

void exact_sweep(std::span<const float> scores, std::span<const float> targets, PrCurve& curve) {
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return scores[a] > scores[b]; });
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const float t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) (targets[order[i]] > 0.5f ? tp : fp) += 1;
    curve.points.push_back(point(t, tp, fp, curve.positives));
  }
}

void binned_sweep(std::span<const float> scores, std::span<const float> targets, PrCurve& curve) {
  std::vector<std::size_t> pos(kSweepBins, 0), neg(kSweepBins, 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int bin = std::clamp(static_cast<int>(std::floor(static_cast<double>(scores[i]) * kSweepBins)), 0,
                               kSweepBins - 1);
    (targets[i] > 0.5f ? pos : neg)[bin] += 1;
  }
  std::size_t tp = 0, fp = 0;
  for (int b = kSweepBins - 1; b >= 0; --b) {
    if (pos[b] == 0 && neg[b] == 0) continue;
    tp += pos[b];
    fp += neg[b];
    curve.points.push_back(point(static_cast<double>(b) / kSweepBins, tp, fp, curve.positives));
  }
}

void check_pair(const Batch& scores, const Batch& targets) {
  if (scores.size() != targets.size())
    throw ShapeError("score batch has " + std::to_string(scores.size()) + " images, targets " +
                     std::to_string(targets.size()));
  const Shape s = batch_shape(scores);
  if (s.channels != kClassCount)
    throw ShapeError("scores must have " + std::to_string(kClassCount) + " channels, got " + s.str());
  for (const auto& t : targets) assert_shape(t, s);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

PrCurve pr_curve(std::span<const float> scores, std::span<const float> targets, SweepMode mode, std::string label) {
  if (scores.size() != targets.size())
    throw ShapeError(std::to_string(scores.size()) + " scores but " + std::to_string(targets.size()) + " targets");
  PrCurve curve;
  curve.label = std::move(label);
  curve.decisions = scores.size();
  for (float t : targets) curve.positives += t > 0.5f;
  if (curve.positives == 0)
    throw DegenerateClassError("class " + (curve.label.empty() ? std::string("?") : curve.label) +
                               " has no positive pixels; recall is undefined");
  for (float s : scores)
    if (!(s >= 0.0f && s <= 1.0f)) throw PreconditionError("scores must lie in [0, 1]");
  if (mode == SweepMode::kAuto) mode = scores.size() <= kExactSweepLimit ? SweepMode::kExact : SweepMode::kBinned;
  if (mode == SweepMode::kExact)
    exact_sweep(scores, targets, curve);
  else
    binned_sweep(scores, targets, curve);
  return curve;
}

PrCurve pixel_pr_curve(const Batch& scores, const Batch& targets, int cls, SweepMode mode) {
  check_pair(scores, targets);
  if (cls < 0 || cls >= kClassCount) throw PreconditionError("class index out of range");
  std::vector<float> s, t;
  for (std::size_t b = 0; b < scores.size(); ++b)
    for (std::size_t p = 0; p < scores[b].shape().pixels(); ++p) {
      s.push_back(scores[b][p * kClassCount + cls]);
      t.push_back(targets[b][p * kClassCount + cls]);
    }
  return pr_curve(s, t, mode, std::string(kClassNames[cls]));
}

PrCurve micro_pr_curve(const Batch& scores, const Batch& targets, SweepMode mode) {
  check_pair(scores, targets);
  std::vector<float> s, t;
  for (std::size_t b = 0; b < scores.size(); ++b) {
    s.insert(s.end(), scores[b].values().begin(), scores[b].values().end());
    t.insert(t.end(), targets[b].values().begin(), targets[b].values().end());
  }
  return pr_curve(s, t, mode, "all");
}

double average_precision(const PrCurve& curve) {
  if (curve.points.empty()) throw PreconditionError("average_precision of an empty curve");
  double ap = 0.0, prev_recall = 0.0;
  for (const auto& p : curve.points) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

EvalReport evaluate_scores(const Batch& scores, const Batch& targets, SweepMode mode) {
  check_pair(scores, targets);
  EvalReport r;
  auto fill = [](ClassResult& out, auto&& make) {
    try {
      out.curve = make();
      out.positives = out.curve.positives;
      out.ap = average_precision(out.curve);
      out.defined = true;
    } catch (const DegenerateClassError&) {
      out.defined = false;
    }
  };
  for (int c = 0; c < kClassCount; ++c) {
    r.classes[c].label = kClassNames[c];
    fill(r.classes[c], [&] { return pixel_pr_curve(scores, targets, c, mode); });
  }
  r.all.label = "all";
  fill(r.all, [&] { return micro_pr_curve(scores, targets, mode); });
  return r;
}

std::pair<Batch, Batch> collect_scores(const SegModel& model, const SampleSource& source,
                                       const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw PreconditionError("evaluation needs at least one sample");
  const Shape in = model.input_shape();
  std::pair<Batch, Batch> out;
  for (const std::size_t i : indices) {
    const SegmentationSample s = subsample_sample(source.load(i), in.height, in.width);
    out.first.push_back(sigmoid(model.predict(s.image)));
    out.second.push_back(mask_to_targets(s.mask));
  }
  return out;
}

EvalReport evaluate_model(const SegModel& model, const SampleSource& source, const std::vector<std::size_t>& indices,
                          SweepMode mode) {
  const auto [scores, targets] = collect_scores(model, source, indices);
  return evaluate_scores(scores, targets, mode);
}

void export_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write_curve = [&](const ClassResult& c) {
    const auto path = dir / ("pr_" + c.label + ".csv");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "threshold,precision,recall\n";
    for (const auto& p : c.curve.points) out << fmt(p.threshold) << ',' << fmt(p.precision) << ',' << fmt(p.recall) << '\n';
  };
  for (const auto& c : report.classes) write_curve(c);
  write_curve(report.all);
  write_summary_csv({report}, dir / "summary.csv");
  const auto json_path = dir / "summary.json";
  std::ofstream js(json_path);
  if (!js) throw IoError("cannot write " + json_path.string());
  js << summary_json(report) << '\n';
}

void write_summary_csv(const std::vector<EvalReport>& reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "class";
  for (const auto& r : reports) out << ',' << r.configuration;
  out << '\n';
  for (const auto& [label, index] : kSummaryRows) {
    out << label;
    for (const auto& r : reports) {
      const ClassResult& c = index < 0 ? r.all : r.classes[index];
      out << ',' << (c.defined ? fmt(c.ap) : std::string("n/a"));
    }
    out << '\n';
  }
}

std::string summary_json(const EvalReport& report) {
  nlohmann::ordered_json root;
  root["configuration"] = report.configuration;
  root["rows"] = nlohmann::ordered_json::array();
  for (const auto& [label, index] : kSummaryRows) {
    const ClassResult& c = index < 0 ? report.all : report.classes[index];
    nlohmann::ordered_json row;
    row["class"] = label;
    row["ap"] = c.defined ? nlohmann::ordered_json(c.ap) : nlohmann::ordered_json(nullptr);
    row["positive_pixels"] = c.positives;
    root["rows"].push_back(row);
  }
  return root.dump(2);
}

}  // namespace sgrt
