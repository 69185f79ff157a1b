#pragma once

#include <array>
#include <filesystem>
#include <utility>
#include <vector>

#include "cmsa/model.hpp"
#include "cmsa/synthdata.hpp"
#include "cmsa/tensor.hpp"

namespace cmsa {

constexpr std::array<double, 5> kPrecThresholds{0.5, 0.6, 0.7, 0.8, 0.9};

struct MetricsReport {
  std::vector<std::pair<int, double>> per_sample;  // (sample id, IoU)
  double overall_iou = 0.0;  // cumulative intersection / cumulative union
  double mean_iou = 0.0;     // mean of per-sample IoUs
  std::array<double, 5> prec{};  // prec@0.5 .. prec@0.9, strictly greater
};

/// |a ∩ b| / |a ∪ b| on binary masks; 1 when both are empty.
double iou(const Tensor& predicted, const Tensor& truth);

/// Fraction of samples with IoU strictly greater than x.
double prec_at(const std::vector<double>& ious, double x);

/// Thresholds each probability map at `threshold` and aggregates.
MetricsReport evaluate(const Model& model, const std::vector<Sample>& samples,
                       double threshold = 0.5);

/// CSV with header "id,iou", one row per sample.
void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report);

/// Key=value lines: overall_iou, mean_iou, prec@0.5 .. prec@0.9.
void write_summary(const std::filesystem::path& path, const MetricsReport& report);

}  // namespace cmsa
