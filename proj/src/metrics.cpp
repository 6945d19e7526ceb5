#include "cdapf/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <set>
#include <sstream>
#include <vector>

#include "cdapf/error.hpp"

namespace cdapf {
namespace {

ClassIoU score_counts(std::uint64_t intersection, std::uint64_t union_) {
  ClassIoU c{intersection, union_, std::nullopt};
  if (union_ > 0) c.score = static_cast<double>(intersection) / static_cast<double>(union_);
  return c;
}

void fill_mean(IoUReport& report) {
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& [cls, c] : report.per_class)
    if (c.score) {
      sum += *c.score;
      ++defined;
    }
  report.mean_iou = defined ? std::optional<double>(sum / static_cast<double>(defined)) : std::nullopt;
}

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

IoU iou(const BinaryMask& target, const BinaryMask& prediction) {
  if (target.width() != prediction.width() || target.height() != prediction.height())
    throw Error(ErrorCode::DimensionMismatch, "iou: target and prediction sizes differ");
  const auto a = target.words();
  const auto b = prediction.words();
  std::uint64_t inter = 0;
  std::uint64_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += static_cast<std::uint64_t>(std::popcount(a[i] & b[i]));
    uni += static_cast<std::uint64_t>(std::popcount(a[i] | b[i]));
  }
  if (uni == 0) throw Error(ErrorCode::EmptyUnion, "iou is undefined: both masks are empty");
  return {inter, uni, static_cast<double>(inter) / static_cast<double>(uni)};
}

IoUReport evaluate(const MaskSet& targets, const MaskSet& predictions, EvaluateOptions options) {
  if (targets.dims() != predictions.dims())
    throw Error(ErrorCode::DimensionMismatch, "evaluate: target and prediction sizes differ");
  std::set<SegmentClass> classes;
  for (const auto& [cls, m] : targets.masks()) classes.insert(cls);
  for (const auto& [cls, m] : predictions.masks()) classes.insert(cls);
  if (!options.include_background) classes.erase(SegmentClass::Background);

  IoUReport report;
  for (const auto cls : classes) {
    const BinaryMask t = targets.get_or_empty(cls);
    const BinaryMask p = predictions.get_or_empty(cls);
    const std::uint64_t inter = mask_intersect(t, p).area();
    const std::uint64_t uni = t.area() + p.area() - inter;
    report.per_class.emplace(cls, score_counts(inter, uni));
  }
  fill_mean(report);
  return report;
}

IoUReport mean_of_reports(std::span<const IoUReport> reports) {
  struct Acc {
    std::uint64_t inter = 0, uni = 0;
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<SegmentClass, Acc> acc;
  for (const auto& r : reports)
    for (const auto& [cls, c] : r.per_class) {
      auto& a = acc[cls];
      a.inter += c.intersection;
      a.uni += c.union_;
      if (c.score) {
        a.sum += *c.score;
        ++a.n;
      }
    }
  IoUReport out;
  for (const auto& [cls, a] : acc) {
    ClassIoU c{a.inter, a.uni, std::nullopt};
    if (a.n) c.score = a.sum / static_cast<double>(a.n);
    out.per_class.emplace(cls, c);
  }
  fill_mean(out);
  return out;
}

IoUReport aggregate_reports(std::span<const IoUReport> reports) {
  std::map<SegmentClass, std::pair<std::uint64_t, std::uint64_t>> acc;
  for (const auto& r : reports)
    for (const auto& [cls, c] : r.per_class) {
      acc[cls].first += c.intersection;
      acc[cls].second += c.union_;
    }
  IoUReport out;
  for (const auto& [cls, counts] : acc) out.per_class.emplace(cls, score_counts(counts.first, counts.second));
  fill_mean(out);
  return out;
}

FormattedReport format_report(const IoUReport& report) {
  std::vector<std::pair<SegmentClass, double>> defined;
  std::vector<SegmentClass> undefined;
  for (const auto& [cls, c] : report.per_class) {
    if (c.score)
      defined.emplace_back(cls, *c.score);
    else
      undefined.push_back(cls);
  }
  // per_class iterates in id order, so a stable sort keeps ties by id.
  std::stable_sort(defined.begin(), defined.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& [cls, score] : defined)
    rows.emplace_back(std::string(class_display_name(cls)), two_decimals(score));
  for (const auto cls : undefined) rows.emplace_back(std::string(class_display_name(cls)), "undefined");
  rows.emplace_back("Mean IoU", report.mean_iou ? two_decimals(*report.mean_iou) : "undefined");

  const std::string head_name = "Attribute name";
  const std::string head_score = "IoU score";
  std::size_t name_width = head_name.size();
  for (const auto& [name, score] : rows) name_width = std::max(name_width, name.size());

  std::ostringstream text;
  std::ostringstream csv;
  auto line = [&](const std::string& a, const std::string& b) {
    text << a << std::string(name_width - a.size() + 2, ' ') << b << '\n';
  };
  line(head_name, head_score);
  text << std::string(name_width + 2 + head_score.size(), '-') << '\n';
  csv << "attribute,iou\n";
  for (const auto& [name, score] : rows) {
    line(name, score);
    csv << name << ',' << score << '\n';
  }
  return {text.str(), csv.str()};
}

FormattedReport format_report(std::span<const IoUReport> reports, ReportMode mode) {
  return format_report(mode == ReportMode::PerImageMean ? mean_of_reports(reports)
                                                        : aggregate_reports(reports));
}

}  // namespace cdapf
