#ifndef DISCTREE_GEOMETRY_HPP
#define DISCTREE_GEOMETRY_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace disctree {

using Point = std::vector<double>;

// Axis-aligned box, a sub-box of [0,1]^d with strictly positive volume.
struct HyperRect {
    std::vector<double> lower;
    std::vector<double> upper;

    HyperRect() = default;
    HyperRect(std::vector<double> lo, std::vector<double> hi)
        : lower(std::move(lo)), upper(std::move(hi)) {
        validate();
    }

    static HyperRect unit_cube(std::size_t d) {
        return HyperRect(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0));
    }

    std::size_t dim() const { return lower.size(); }

    void validate() const {
        if (lower.size() != upper.size() || lower.empty())
            throw std::invalid_argument("HyperRect: mismatched or empty bounds");
        for (std::size_t j = 0; j < lower.size(); ++j) {
            if (!(lower[j] < upper[j]))
                throw std::invalid_argument("HyperRect: lower[" + std::to_string(j) +
                                            "] must be < upper[" + std::to_string(j) + "]");
            if (lower[j] < 0.0 || upper[j] > 1.0)
                throw std::invalid_argument("HyperRect: bounds must lie in [0,1]");
        }
    }

    // Half-open membership [lower, upper) per dimension, closed where upper == 1.
    bool contains(const Point& x) const {
        if (x.size() != dim())
            throw std::invalid_argument("HyperRect::contains: dimension mismatch");
        for (std::size_t j = 0; j < dim(); ++j) {
            if (x[j] < lower[j]) return false;
            if (x[j] >= upper[j] && !(upper[j] == 1.0 && x[j] == 1.0)) return false;
        }
        return true;
    }

    // Closed-box membership, used for preconditions on rescaling.
    bool contains_closed(const Point& x) const {
        if (x.size() != dim())
            throw std::invalid_argument("HyperRect::contains_closed: dimension mismatch");
        for (std::size_t j = 0; j < dim(); ++j)
            if (x[j] < lower[j] || x[j] > upper[j]) return false;
        return true;
    }

    double width(std::size_t j) const { return upper[j] - lower[j]; }

    Point center() const {
        Point c(dim());
        for (std::size_t j = 0; j < dim(); ++j) c[j] = 0.5 * (lower[j] + upper[j]);
        return c;
    }
};

inline double rect_volume(const HyperRect& rect) {
    double v = 1.0;
    for (std::size_t j = 0; j < rect.dim(); ++j) v *= rect.width(j);
    return v;
}

// I.i.d. samples in [0,1]^d.
struct SampleSet {
    std::vector<Point> points;

    SampleSet() = default;
    explicit SampleSet(std::vector<Point> pts) : points(std::move(pts)) { validate(); }

    std::size_t size() const { return points.size(); }
    std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }

    void validate() const {
        if (points.empty())
            throw std::invalid_argument("SampleSet: empty sample");
        const std::size_t d = points.front().size();
        if (d == 0) throw std::invalid_argument("SampleSet: zero-dimensional points");
        for (const auto& p : points) {
            if (p.size() != d)
                throw std::invalid_argument("SampleSet: inconsistent point dimensions");
            for (double c : p) {
                if (!std::isfinite(c))
                    throw std::invalid_argument("SampleSet: non-finite coordinate");
                if (c < 0.0 || c > 1.0)
                    throw std::invalid_argument("SampleSet: coordinate outside [0,1]");
            }
        }
    }
};

// Affine map of points in rect onto [0,1]^d.
inline std::vector<Point> rescale_to_unit(const std::vector<Point>& points,
                                          const HyperRect& rect) {
    std::vector<Point> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        if (!rect.contains_closed(p))
            throw std::domain_error("rescale_to_unit: point outside rect");
        Point q(rect.dim());
        for (std::size_t j = 0; j < rect.dim(); ++j)
            q[j] = (p[j] - rect.lower[j]) / rect.width(j);
        out.push_back(std::move(q));
    }
    return out;
}

}  // namespace disctree

#endif  // DISCTREE_GEOMETRY_HPP
