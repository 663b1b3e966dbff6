#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace plantshape {

inline constexpr int kStemPoints = 9 + 1;      // anchor + 8 intermediates + tip
inline constexpr int kStemCoords = 18;         // points 1..9, x and y
inline constexpr double kMinutesPerStep = 5.0; // one timestep of wall time

struct Point2 {
    double x = 0.0; // cm, positive toward the right light source
    double y = 0.0; // cm, positive upward

    bool finite() const { return std::isfinite(x) && std::isfinite(y); }

    friend bool operator==(const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; }
};

inline double distance(const Point2& a, const Point2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Ordered stem description: points[0] is the anchor, points[9] the growth tip.
struct StemPolyline {
    std::array<Point2, kStemPoints> points{};

    StemPolyline() = default;

    explicit StemPolyline(const std::vector<Point2>& pts) {
        if (pts.size() != kStemPoints)
            throw std::invalid_argument("StemPolyline requires exactly 10 points, got " +
                                        std::to_string(pts.size()));
        for (int i = 0; i < kStemPoints; ++i) points[i] = pts[i];
    }

    const Point2& anchor() const { return points[0]; }
    const Point2& tip() const { return points[kStemPoints - 1]; }
    Point2& tip() { return points[kStemPoints - 1]; }

    bool finite() const {
        for (const auto& p : points)
            if (!p.finite()) return false;
        return true;
    }

    friend bool operator==(const StemPolyline& a, const StemPolyline& b) {
        return a.points == b.points;
    }
};

enum class LightCondition { Left, Right };

inline char light_code(LightCondition b) { return b == LightCondition::Left ? 'L' : 'R'; }

inline LightCondition light_from_code(char c) {
    if (c == 'L') return LightCondition::Left;
    if (c == 'R') return LightCondition::Right;
    throw std::invalid_argument(std::string("unknown light condition code '") + c + "'");
}

// Signed direction of the active light along x: LEFT lies at negative x.
inline double light_sign(LightCondition b) { return b == LightCondition::Left ? -1.0 : 1.0; }

inline LightCondition mirror(LightCondition b) {
    return b == LightCondition::Left ? LightCondition::Right : LightCondition::Left;
}

struct TrackedFrame {
    StemPolyline stem;
    LightCondition light = LightCondition::Left;
    long t = 0; // timestep index, 5 minutes each

    friend bool operator==(const TrackedFrame& a, const TrackedFrame& b) {
        return a.stem == b.stem && a.light == b.light && a.t == b.t;
    }
};

// One training pair: 18 current coords, 18 next coords, light bit.
struct RegressionVector {
    std::array<double, kStemCoords> current{};
    std::array<double, kStemCoords> next{};
    LightCondition light = LightCondition::Left;

    friend bool operator==(const RegressionVector& a, const RegressionVector& b) {
        return a.current == b.current && a.next == b.next && a.light == b.light;
    }
};

// Axis-aligned rectangle.
struct Obstacle {
    Point2 center;
    double width = 0.0;  // cm
    double height = 0.0; // cm

    Obstacle() = default;
    Obstacle(Point2 c, double w, double h) : center(c), width(w), height(h) {
        if (w <= 0.0 || h <= 0.0) throw std::invalid_argument("obstacle dimensions must be positive");
    }

    double left() const { return center.x - width / 2.0; }
    double right() const { return center.x + width / 2.0; }
    double bottom() const { return center.y - height / 2.0; }
    double top() const { return center.y + height / 2.0; }
};

struct Scenario {
    Point2 target;
    double target_radius = 2.0; // cm
    std::vector<Obstacle> obstacles;
};

inline StemPolyline mirror_x(const StemPolyline& s) {
    StemPolyline out = s;
    for (auto& p : out.points) p.x = -p.x;
    return out;
}

inline TrackedFrame mirror_x(const TrackedFrame& f) {
    return TrackedFrame{mirror_x(f.stem), mirror(f.light), f.t};
}

inline RegressionVector mirror_x(const RegressionVector& v) {
    RegressionVector out = v;
    for (int i = 0; i < kStemCoords; i += 2) {
        out.current[i] = -v.current[i];
        out.next[i] = -v.next[i];
    }
    out.light = mirror(v.light);
    return out;
}

// Extracts the 18 regression coordinates (points 1..9) of a stem.
inline std::array<double, kStemCoords> stem_coords(const StemPolyline& s) {
    std::array<double, kStemCoords> c{};
    for (int i = 1; i < kStemPoints; ++i) {
        c[2 * (i - 1)] = s.points[i].x;
        c[2 * (i - 1) + 1] = s.points[i].y;
    }
    return c;
}

// Inverse of stem_coords; the anchor is pinned at the origin.
inline StemPolyline stem_from_coords(const std::array<double, kStemCoords>& c) {
    StemPolyline s;
    s.points[0] = {0.0, 0.0};
    for (int i = 1; i < kStemPoints; ++i) s.points[i] = {c[2 * (i - 1)], c[2 * (i - 1) + 1]};
    return s;
}

// ---------------------------------------------------------------------------
// Serialization. Line-oriented UTF-8 text; decimal with 17 significant digits
// so all finite doubles round-trip exactly.

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

inline double parse_double(const std::string& tok, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": bad number '" + tok + "'");
    }
}

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream is(line);
    std::string t;
    while (is >> t) toks.push_back(t);
    return toks;
}

} // namespace detail

inline constexpr const char* kFrameFileHeader = "# plantshape frames v1";
inline constexpr const char* kRegressionFileHeader = "# plantshape regression v1";

inline void serialize_frames(const std::vector<TrackedFrame>& frames, std::ostream& os) {
    os << kFrameFileHeader << '\n';
    std::string line;
    for (const auto& f : frames) {
        line.clear();
        line += std::to_string(f.t);
        line += ' ';
        line += light_code(f.light);
        for (const auto& p : f.stem.points) {
            line += ' ';
            detail::append_double(line, p.x);
            line += ' ';
            detail::append_double(line, p.y);
        }
        os << line << '\n';
    }
}

inline std::vector<TrackedFrame> deserialize_frames(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(is, line) || line != kFrameFileHeader)
        throw std::runtime_error("line 1: missing frame file header");
    ++line_no;
    std::vector<TrackedFrame> frames;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto toks = detail::split_ws(line);
        if (toks.size() != 2 + 2 * kStemPoints)
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(2 + 2 * kStemPoints) + " fields, got " +
                                     std::to_string(toks.size()));
        TrackedFrame f;
        f.t = std::stol(toks[0]);
        if (toks[1].size() != 1)
            throw std::runtime_error("line " + std::to_string(line_no) + ": bad light field");
        f.light = light_from_code(toks[1][0]);
        for (int i = 0; i < kStemPoints; ++i) {
            f.stem.points[i].x = detail::parse_double(toks[2 + 2 * i], line_no);
            f.stem.points[i].y = detail::parse_double(toks[3 + 2 * i], line_no);
        }
        frames.push_back(f);
    }
    return frames;
}

inline void serialize_regression(const std::vector<RegressionVector>& vecs, std::ostream& os) {
    os << kRegressionFileHeader << '\n';
    std::string line;
    for (const auto& v : vecs) {
        line.clear();
        line += light_code(v.light);
        for (double c : v.current) {
            line += ' ';
            detail::append_double(line, c);
        }
        for (double n : v.next) {
            line += ' ';
            detail::append_double(line, n);
        }
        os << line << '\n';
    }
}

inline std::vector<RegressionVector> deserialize_regression(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(is, line) || line != kRegressionFileHeader)
        throw std::runtime_error("line 1: missing regression file header");
    ++line_no;
    std::vector<RegressionVector> vecs;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto toks = detail::split_ws(line);
        if (toks.size() != 1 + 2 * kStemCoords)
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(1 + 2 * kStemCoords) + " fields, got " +
                                     std::to_string(toks.size()));
        RegressionVector v;
        if (toks[0].size() != 1)
            throw std::runtime_error("line " + std::to_string(line_no) + ": bad light field");
        v.light = light_from_code(toks[0][0]);
        for (int i = 0; i < kStemCoords; ++i)
            v.current[i] = detail::parse_double(toks[1 + i], line_no);
        for (int i = 0; i < kStemCoords; ++i)
            v.next[i] = detail::parse_double(toks[1 + kStemCoords + i], line_no);
        vecs.push_back(v);
    }
    return vecs;
}

} // namespace plantshape
