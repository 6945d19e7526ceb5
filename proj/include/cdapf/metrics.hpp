#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "cdapf/raster.hpp"

namespace cdapf {

struct IoU {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
  double score = 0.0;
};

// |target & prediction| / |target | prediction|, counted in integers and
// divided once. Throws EmptyUnion when both masks are empty.
IoU iou(const BinaryMask& target, const BinaryMask& prediction);

struct ClassIoU {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
  std::optional<double> score;  // nullopt when the union is empty

  friend bool operator==(const ClassIoU&, const ClassIoU&) = default;
};

struct IoUReport {
  std::map<SegmentClass, ClassIoU> per_class;
  std::optional<double> mean_iou;  // unweighted mean of defined scores

  friend bool operator==(const IoUReport&, const IoUReport&) = default;
};

struct EvaluateOptions {
  // Background is the complement of the parts and is left out of the
  // published per-part table; opt in to score it anyway.
  bool include_background = false;
};

// One entry per class present in either set; a class missing on one side
// is scored against an empty mask.
IoUReport evaluate(const MaskSet& targets, const MaskSet& predictions,
                   EvaluateOptions options = {});

// Per-image mean: each class averages its defined per-image scores.
// Counts are summed for reference.
IoUReport mean_of_reports(std::span<const IoUReport> reports);

// Dataset aggregate: counts summed across images, then divided once.
IoUReport aggregate_reports(std::span<const IoUReport> reports);

enum class ReportMode { PerImageMean, DatasetAggregate };

struct FormattedReport {
  std::string text;  // aligned table
  std::string csv;   // header "attribute,iou"
};

// Rows sorted by descending score, ties by class id, scores with two
// decimals, then undefined classes, then the mean row.
FormattedReport format_report(const IoUReport& report);
FormattedReport format_report(std::span<const IoUReport> reports, ReportMode mode);

}  // namespace cdapf
