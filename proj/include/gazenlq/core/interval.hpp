#pragma once

#include <algorithm>

namespace gazenlq {

/// Half-open time span in seconds.
struct Interval {
    double start = 0.0;
    double end = 0.0;

    double length() const { return end - start; }
    double midpoint() const { return 0.5 * (start + end); }
    bool valid() const { return start < end; }

    bool operator==(const Interval&) const = default;
};

/// |a ∩ b| / |a ∪ b|; 0 when the union is empty.
inline double temporal_iou(const Interval& a, const Interval& b) {
    const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
    const double uni = (a.end - a.start) + (b.end - b.start) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace gazenlq
