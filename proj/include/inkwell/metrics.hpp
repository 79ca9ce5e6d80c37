#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "inkwell/threshold.hpp"

namespace inkwell {

/// Pixel tallies with text as the positive class.
struct Confusion {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
};

Confusion confusion(const BinaryMap& pred, const BinaryMap& gt);

/// Harmonic mean of precision and recall, in percent; 0 when both are 0.
double f_measure(const Confusion& c);

/// Two-subiteration Zhang-Suen thinning of the text pixels, run to a fixpoint.
/// Pixels outside the map count as background. Stroke ends are not protected:
/// a 3x7 bar thins to columns 1..4 of its middle row.
BinaryMap skeletonize(const BinaryMap& map);

/// F-measure with recall replaced by the fraction of skeleton(gt) pixels that
/// pred marks as text. An empty skeleton gives pRecall 0.
double pseudo_f_measure(const BinaryMap& pred, const BinaryMap& gt);

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(C^2 / MSE) with C = 1 on {0,1} labels; identical maps give kPsnrCap.
double psnr(const BinaryMap& pred, const BinaryMap& gt);

/// Number of 8x8 blocks (partial edge blocks included) holding both labels.
std::uint64_t nubn(const BinaryMap& gt);

/// Normalized 5x5 reciprocal-distance weights: 1/sqrt(di^2+dj^2) off centre,
/// 1 at the centre, scaled to unit sum. Indexed [di+2][dj+2].
const std::array<std::array<double, 5>, 5>& drd_weights();

/// Distortion of flipping pixel (x, y) to pred's label:
/// sum of W(i,j) * |gt(neighbour) - pred(x,y)|, gt border-replicated.
double drd_pixel(const BinaryMap& pred, const BinaryMap& gt, int x, int y);

/// Sum of per-flip distortion over NUBN; nullopt when NUBN is 0.
std::optional<double> drd(const BinaryMap& pred, const BinaryMap& gt);

struct MetricsReport {
    double fm = 0.0;
    double fps = 0.0;
    double psnr = 0.0;
    std::optional<double> drd;
    std::uint64_t nubn = 0;
};

MetricsReport evaluate(const BinaryMap& pred, const BinaryMap& gt);

/// Flat `key=value` lines: fm, fps, psnr, drd (or "undefined"), nubn.
std::string format_report_kv(const MetricsReport& r);
MetricsReport parse_report_kv(const std::string& text);

/// JSON object with the same field names; drd is null when undefined.
std::string format_report_json(const MetricsReport& r);
MetricsReport parse_report_json(const std::string& text);

}  // namespace inkwell
