#pragma once

#include <cmath>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "raster.hpp"

namespace plantshape {

struct PixelPoint {
    int x = 0; // column
    int y = 0; // row, growing downward

    friend bool operator==(const PixelPoint& a, const PixelPoint& b) {
        return a.x == b.x && a.y == b.y;
    }
};

inline double pixel_distance(const PixelPoint& a, const PixelPoint& b) {
    return std::hypot(double(a.x - b.x), double(a.y - b.y));
}

// Per-pixel interval [low, high] of green values seen in the plant-free
// setup images.
struct SetupEnvelope {
    GreenMatrix low;
    GreenMatrix high;
};

struct TrackerConfig {
    double theta1 = 0.2;   // plant-pixel threshold on the remapped green channel
    double theta2 = 30.0;  // band half-width in (sampled) pixels
    int downsample = 8;    // stride sampling factor
    double px_per_cm = 0.0;   // scale of the original (pre-stride) image
    PixelPoint anchor_px{};   // anchor in original image coordinates

    void validate() const {
        if (!(theta1 > 0.0 && theta1 < 1.0)) throw std::invalid_argument("theta1 must be in (0,1)");
        if (theta2 <= 0.0) throw std::invalid_argument("theta2 must be positive");
        if (downsample < 1) throw std::invalid_argument("downsample must be >= 1");
        if (px_per_cm <= 0.0) throw std::invalid_argument("px_per_cm must be positive");
    }
};

inline SetupEnvelope build_envelope(const std::vector<RgbImage>& setup_images, int downsample = 1) {
    if (setup_images.empty()) throw std::invalid_argument("need at least one setup image");
    SetupEnvelope env;
    env.low = green_matrix(setup_images[0], downsample);
    env.high = env.low;
    for (std::size_t k = 1; k < setup_images.size(); ++k) {
        GreenMatrix m = green_matrix(setup_images[k], downsample);
        if (m.width != env.low.width || m.height != env.low.height)
            throw std::invalid_argument("setup image dimensions differ");
        for (std::size_t i = 0; i < m.values.size(); ++i) {
            env.low.values[i] = std::min(env.low.values[i], m.values[i]);
            env.high.values[i] = std::max(env.high.values[i], m.values[i]);
        }
    }
    return env;
}

// A pixel contains plant material iff its green value escapes the setup
// envelope widened by theta1 on both sides.
inline std::vector<PixelPoint> extract_plant_pixels(const RgbImage& image, const SetupEnvelope& env,
                                                    const TrackerConfig& cfg) {
    GreenMatrix r = green_matrix(image, cfg.downsample);
    if (r.width != env.low.width || r.height != env.low.height)
        throw std::invalid_argument("image dimensions do not match the envelope");
    std::vector<PixelPoint> out;
    for (int row = 0; row < r.height; ++row)
        for (int col = 0; col < r.width; ++col) {
            const double v = r.at(row, col);
            if (v < env.low.at(row, col) - cfg.theta1 || v > env.high.at(row, col) + cfg.theta1)
                out.push_back(PixelPoint{col, row});
        }
    return out;
}

// Corner point c: furthest from the anchor in Manhattan xy. High point h:
// furthest in y only. h wins when strictly closer to the previous tip.
inline PixelPoint select_tip(const std::vector<PixelPoint>& pixels, const PixelPoint& anchor,
                             const PixelPoint& prev_tip) {
    if (pixels.empty()) throw std::invalid_argument("cannot select a tip from an empty pixel set");
    PixelPoint c = pixels[0];
    PixelPoint h = pixels[0];
    long best_c = -1;
    long best_h = -1;
    for (const auto& p : pixels) {
        const long mc = std::labs(long(anchor.x) - p.x) + std::labs(long(anchor.y) - p.y);
        const long mh = std::labs(long(anchor.y) - p.y);
        if (mc > best_c) {
            best_c = mc;
            c = p;
        }
        if (mh > best_h) {
            best_h = mh;
            h = p;
        }
    }
    return pixel_distance(prev_tip, h) < pixel_distance(prev_tip, c) ? h : c;
}

// x-averages of plant pixels in 8 horizontal bands evenly spaced in y between
// anchor and tip. A band with no pixels inherits the nearest populated band
// toward the anchor, falling back to the anchor column.
inline std::vector<Point2> band_averages(const std::vector<PixelPoint>& pixels,
                                         const PixelPoint& anchor, const PixelPoint& tip,
                                         const TrackerConfig& cfg) {
    if (pixels.empty()) throw std::invalid_argument("empty pixel set");
    if (anchor == tip) throw std::invalid_argument("tip coincides with anchor");
    std::vector<Point2> bands(8);
    bool any = false;
    double fallback_x = anchor.x;
    for (int k = 0; k < 8; ++k) {
        const double frac = (k + 1) / 9.0;
        const double yk = anchor.y + frac * (double(tip.y) - anchor.y);
        double sum = 0.0;
        long count = 0;
        for (const auto& p : pixels) {
            if (std::abs(p.y - yk) < cfg.theta2) {
                sum += p.x;
                ++count;
            }
        }
        if (count > 0) {
            bands[k] = {sum / double(count), yk};
            fallback_x = bands[k].x;
            any = true;
        } else {
            bands[k] = {fallback_x, yk};
        }
    }
    if (!any) throw std::runtime_error("all bands empty");
    return bands;
}

// Smoothing via Iterative Averaging: three passes of midpoint replacement
// over 1-based interior index sets {2,4,6,8}, {3,5,7,9}, {2,4,6,8}.
// Within a pass, updates run in ascending index order using already-updated
// values. Anchor and tip are never touched.
inline StemPolyline sia_smooth(const StemPolyline& stem) {
    StemPolyline s = stem;
    auto apply = [&](std::initializer_list<int> one_based) {
        for (int i1 : one_based) {
            const int i = i1 - 1;
            s.points[i].x = (s.points[i - 1].x + s.points[i + 1].x) / 2.0;
            s.points[i].y = (s.points[i - 1].y + s.points[i + 1].y) / 2.0;
        }
    };
    apply({2, 4, 6, 8});
    apply({3, 5, 7, 9});
    apply({2, 4, 6, 8});
    return s;
}

struct TrackResult {
    std::vector<TrackedFrame> frames;
    std::vector<long> skipped; // timestep indices with no plant pixels
};

// Full per-sequence pipeline: plant pixels -> tip -> band averages -> SIA ->
// cm conversion (y inverted) -> anchor unification. lights[i] is the light
// condition at timestep i (from the side-channel log).
inline TrackResult track_sequence(const std::vector<RgbImage>& images, const SetupEnvelope& env,
                                  const TrackerConfig& cfg,
                                  const std::vector<LightCondition>& lights) {
    cfg.validate();
    if (lights.size() < images.size())
        throw std::invalid_argument("light log shorter than image sequence");
    const double eff_px_per_cm = cfg.px_per_cm / cfg.downsample;
    const PixelPoint anchor{cfg.anchor_px.x / cfg.downsample, cfg.anchor_px.y / cfg.downsample};

    TrackResult res;
    PixelPoint prev_tip = anchor;
    for (std::size_t n = 0; n < images.size(); ++n) {
        auto pixels = extract_plant_pixels(images[n], env, cfg);
        if (pixels.empty()) {
            res.skipped.push_back(long(n));
            continue;
        }
        const PixelPoint tip = select_tip(pixels, anchor, prev_tip);
        prev_tip = tip;
        auto bands = band_averages(pixels, anchor, tip, cfg);

        StemPolyline px_stem;
        px_stem.points[0] = {double(anchor.x), double(anchor.y)};
        for (int k = 0; k < 8; ++k) px_stem.points[k + 1] = bands[k];
        px_stem.points[9] = {double(tip.x), double(tip.y)};
        px_stem = sia_smooth(px_stem);

        TrackedFrame f;
        for (int i = 0; i < kStemPoints; ++i)
            f.stem.points[i] = {px_stem.points[i].x / eff_px_per_cm,
                                -px_stem.points[i].y / eff_px_per_cm};
        f.light = lights[n];
        f.t = long(n);
        res.frames.push_back(f);
    }

    // anchor unification: subtract the mean anchor from every point
    if (!res.frames.empty()) {
        double ax = 0.0, ay = 0.0;
        for (const auto& f : res.frames) {
            ax += f.stem.points[0].x;
            ay += f.stem.points[0].y;
        }
        ax /= double(res.frames.size());
        ay /= double(res.frames.size());
        for (auto& f : res.frames)
            for (auto& p : f.stem.points) {
                p.x -= ax;
                p.y -= ay;
            }
    }
    return res;
}

// Parses a light log of `t side` lines (side in {L,R}) into a dense vector.
inline std::vector<LightCondition> parse_light_log(std::istream& is) {
    std::vector<LightCondition> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto toks = detail::split_ws(line);
        if (toks.size() != 2 || toks[1].size() != 1)
            throw std::runtime_error("light log line " + std::to_string(line_no) +
                                     ": expected 't side'");
        const long t = std::stol(toks[0]);
        if (t != long(out.size()))
            throw std::runtime_error("light log line " + std::to_string(line_no) +
                                     ": timesteps must be dense and start at 0");
        out.push_back(light_from_code(toks[1][0]));
    }
    return out;
}

} // namespace plantshape
