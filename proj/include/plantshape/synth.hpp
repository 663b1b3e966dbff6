#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"
#include "raster.hpp"

namespace plantshape {

// Parametric plant used as ground truth in tests and as the source of LSTM
// training data. A test fixture, not a biological model.
struct PlantParams {
    double growth_rate = 3.0 / 288.0;  // cm per 5-minute step (3 cm/day)
    double phototropic_gain = 0.05;    // cm/step of tip drift toward the active light
    double nutation_amp = 0.02;        // cm/step lateral oscillation amplitude
    double nutation_period = 24.0;     // steps per oscillation
    double stiffening_halflife = 600.0; // steps; mobility halves every halflife
    Point2 light_left{-35.0, 30.0};    // cm relative to the anchor
    Point2 light_right{35.0, 30.0};

    void validate() const {
        if (growth_rate <= 0.0 || phototropic_gain < 0.0 || nutation_amp < 0.0 ||
            stiffening_halflife <= 0.0)
            throw std::invalid_argument("plant parameters must be positive");
        if (nutation_period < 2.0) throw std::invalid_argument("nutation_period must be >= 2");
    }
};

struct PlantState {
    StemPolyline stem;
    std::array<double, kStemPoints> mobility{}; // anchor 0, growing toward the tip
    long phase = 0;                             // nutation phase counter
};

inline PlantState initial_plant_state(double seedling_height_cm = 1.0) {
    PlantState st;
    for (int i = 0; i < kStemPoints; ++i) {
        st.stem.points[i] = {0.0, seedling_height_cm * i / 9.0};
        st.mobility[i] = i / 9.0;
    }
    st.phase = 0;
    return st;
}

namespace detail {

// Resamples a y-monotone polyline so the 10 points are evenly spaced in y
// between the anchor and the tip. x is linearly interpolated along segments.
inline StemPolyline resample_even_y(const StemPolyline& s) {
    const double tip_y = s.tip().y;
    if (tip_y <= 0.0) return s;
    StemPolyline out;
    out.points[0] = s.points[0];
    out.points[kStemPoints - 1] = s.tip();
    int seg = 0;
    for (int i = 1; i < kStemPoints - 1; ++i) {
        const double ty = tip_y * i / 9.0;
        while (seg < kStemPoints - 2 && s.points[seg + 1].y < ty) ++seg;
        const Point2& a = s.points[seg];
        const Point2& b = s.points[seg + 1];
        const double dy = b.y - a.y;
        const double u = dy > 0.0 ? (ty - a.y) / dy : 0.0;
        out.points[i] = {a.x + u * (b.x - a.x), ty};
    }
    return out;
}

} // namespace detail

// One 5-minute step of growth, phototropic drift, nutation, and relaxation
// of interior points toward their neighbors' midpoint (scaled by mobility).
inline PlantState step(const PlantState& state, LightCondition light, const PlantParams& params) {
    const StemPolyline& s = state.stem;
    StemPolyline next;
    next.points[0] = {0.0, 0.0}; // the anchor never moves

    for (int i = 1; i < kStemPoints - 1; ++i) {
        const Point2 mid{(s.points[i - 1].x + s.points[i + 1].x) / 2.0,
                         (s.points[i - 1].y + s.points[i + 1].y) / 2.0};
        next.points[i] = {s.points[i].x + state.mobility[i] * (mid.x - s.points[i].x),
                          s.points[i].y + state.mobility[i] * (mid.y - s.points[i].y)};
    }

    // tip: extend along the current heading, then drift laterally
    double hx = s.points[9].x - s.points[8].x;
    double hy = s.points[9].y - s.points[8].y;
    const double hn = std::hypot(hx, hy);
    if (hn > 0.0) {
        hx /= hn;
        hy /= hn;
    } else {
        hx = 0.0;
        hy = 1.0;
    }
    if (hy < 0.0) { // keep the tip rising
        hx = 0.0;
        hy = 1.0;
    }
    Point2 tip = s.points[9];
    tip.x += params.growth_rate * hx;
    tip.y += params.growth_rate * hy;
    const double nut = params.nutation_amp *
                       std::sin(2.0 * 3.14159265358979323846 * state.phase / params.nutation_period);
    tip.x += state.mobility[9] * light_sign(light) * (params.phototropic_gain + nut);
    next.points[9] = tip;

    PlantState out;
    out.stem = detail::resample_even_y(next);
    const double decay = std::pow(2.0, -1.0 / params.stiffening_halflife);
    for (int i = 0; i < kStemPoints; ++i) out.mobility[i] = state.mobility[i] * decay;
    out.phase = state.phase + 1;
    return out;
}

// Light schedule: step index -> active side.
using LightSchedule = std::function<LightCondition(long)>;

// The open-loop schedule from the dataset experiments: toggle every 6 hours.
inline LightSchedule openloop_schedule(long steps_per_interval = 72) {
    return [steps_per_interval](long i) {
        return (i / steps_per_interval) % 2 == 0 ? LightCondition::Left : LightCondition::Right;
    };
}

// Runs the plant for `steps` steps; frame i records the stem before step i
// together with the light applied during that step.
inline std::vector<TrackedFrame> generate_dataset(const PlantParams& params,
                                                  const LightSchedule& schedule, long steps,
                                                  PlantState initial = initial_plant_state()) {
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    params.validate();
    std::vector<TrackedFrame> frames;
    frames.reserve(std::size_t(steps));
    PlantState st = std::move(initial);
    for (long i = 0; i < steps; ++i) {
        const LightCondition b = schedule(i);
        frames.push_back(TrackedFrame{st.stem, b, i});
        st = step(st, b, params);
    }
    return frames;
}

// Number of maximal constant-light runs in a frame sequence.
inline int count_light_runs(const std::vector<TrackedFrame>& frames) {
    if (frames.empty()) return 0;
    int runs = 1;
    for (std::size_t i = 1; i < frames.size(); ++i)
        if (frames[i].light != frames[i - 1].light) ++runs;
    return runs;
}

// ---------------------------------------------------------------------------
// Rendering, for vision-tracker round-trip tests.

struct RenderConfig {
    int width = 320;
    int height = 200;
    double px_per_cm = 4.0;
    double anchor_row = 180.0; // pixel row of the anchor (rows grow downward)
    double anchor_col = 160.0;
    int stem_px_radius = 1;      // brush radius; stroke width = 2r+1
    std::uint8_t bg_green = 40;  // flat background level (matte box board)
    std::uint8_t stem_green = 220;
};

inline Point2 cm_to_px(const Point2& p, const RenderConfig& cfg) {
    return {cfg.anchor_col + p.x * cfg.px_per_cm, cfg.anchor_row - p.y * cfg.px_per_cm};
}

// Draws the stem as a green polyline on the flat setup background.
// Returns true in *clipped if any part of the stem fell outside the frame.
inline RgbImage render_stem(const StemPolyline& stem, const RenderConfig& cfg,
                            bool* clipped = nullptr) {
    RgbImage img(cfg.width, cfg.height);
    for (int r = 0; r < cfg.height; ++r)
        for (int c = 0; c < cfg.width; ++c)
            img.set_rgb(r, c, 30, cfg.bg_green, 30);
    bool clip = false;
    auto paint = [&](double col, double row) {
        const int ic = int(std::lround(col));
        const int ir = int(std::lround(row));
        for (int dr = -cfg.stem_px_radius; dr <= cfg.stem_px_radius; ++dr)
            for (int dc = -cfg.stem_px_radius; dc <= cfg.stem_px_radius; ++dc) {
                const int rr = ir + dr;
                const int cc = ic + dc;
                if (rr < 0 || rr >= cfg.height || cc < 0 || cc >= cfg.width) {
                    clip = true;
                    continue;
                }
                img.set_rgb(rr, cc, 30, cfg.stem_green, 30);
            }
    };
    for (int i = 0; i + 1 < kStemPoints; ++i) {
        const Point2 a = cm_to_px(stem.points[i], cfg);
        const Point2 b = cm_to_px(stem.points[i + 1], cfg);
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        const int n = std::max(1, int(std::ceil(len * 2.0)));
        for (int k = 0; k <= n; ++k) {
            const double u = double(k) / n;
            paint(a.x + u * (b.x - a.x), a.y + u * (b.y - a.y));
        }
    }
    if (clipped) *clipped = clip;
    return img;
}

// Plain background image, used to build the setup envelope in tests.
inline RgbImage render_background(const RenderConfig& cfg) {
    RgbImage img(cfg.width, cfg.height);
    for (int r = 0; r < cfg.height; ++r)
        for (int c = 0; c < cfg.width; ++c)
            img.set_rgb(r, c, 30, cfg.bg_green, 30);
    return img;
}

inline RgbImage render_frame(const PlantState& state, const PlantParams& params,
                             const RenderConfig& cfg, bool* clipped = nullptr) {
    (void)params;
    return render_stem(state.stem, cfg, clipped);
}

} // namespace plantshape
