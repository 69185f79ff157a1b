#include "cmsa/metrics.hpp"

#include <cstdio>
#include <fstream>

#include "cmsa/errors.hpp"

namespace cmsa {

double iou(const Tensor& predicted, const Tensor& truth) {
  if (predicted.shape() != truth.shape()) {
    throw DimError("iou: mask shapes " + shape_to_string(predicted.shape()) + " and " +
                   shape_to_string(truth.shape()) + " differ");
  }
  const double* a = predicted.data();
  const double* b = truth.data();
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool pa = a[i] != 0.0;
    const bool pb = b[i] != 0.0;
    inter += pa && pb;
    uni += pa || pb;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double prec_at(const std::vector<double>& ious, double x) {
  if (ious.empty()) return 0.0;
  std::size_t hits = 0;
  for (double v : ious) hits += v > x;
  return static_cast<double>(hits) / static_cast<double>(ious.size());
}

MetricsReport evaluate(const Model& model, const std::vector<Sample>& samples, double threshold) {
  NoGradGuard no_grad;
  MetricsReport report;
  std::size_t inter_total = 0, union_total = 0;
  std::vector<double> ious;
  ious.reserve(samples.size());

  for (const Sample& s : samples) {
    Tensor prob = model.forward(s.image, s.tokens);
    std::vector<double> pred(prob.size());
    const double* pp = prob.data();
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = pp[i] > threshold ? 1.0 : 0.0;
    Tensor pred_mask = Tensor::from_data(prob.shape(), std::move(pred));

    const double v = iou(pred_mask, s.mask);
    report.per_sample.emplace_back(s.id, v);
    ious.push_back(v);

    const double* a = pred_mask.data();
    const double* b = s.mask.data();
    for (std::size_t i = 0; i < pred_mask.size(); ++i) {
      const bool pa = a[i] != 0.0;
      const bool pb = b[i] != 0.0;
      inter_total += pa && pb;
      union_total += pa || pb;
    }
  }

  report.overall_iou =
      union_total == 0 ? 1.0
                       : static_cast<double>(inter_total) / static_cast<double>(union_total);
  double sum = 0.0;
  for (double v : ious) sum += v;
  report.mean_iou = ious.empty() ? 0.0 : sum / static_cast<double>(ious.size());
  for (std::size_t i = 0; i < kPrecThresholds.size(); ++i) {
    report.prec[i] = prec_at(ious, kPrecThresholds[i]);
  }
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id,iou\n";
  for (const auto& [id, v] : report.per_sample) out << id << "," << fmt(v) << "\n";
  if (!out) throw IoError("short write to " + path.string());
}

void write_summary(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "overall_iou=" << fmt(report.overall_iou) << "\n";
  out << "mean_iou=" << fmt(report.mean_iou) << "\n";
  for (std::size_t i = 0; i < kPrecThresholds.size(); ++i) {
    char key[32];
    std::snprintf(key, sizeof(key), "prec@%.1f", kPrecThresholds[i]);
    out << key << "=" << fmt(report.prec[i]) << "\n";
  }
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace cmsa
