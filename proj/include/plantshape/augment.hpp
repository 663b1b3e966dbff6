#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"
#include "rng.hpp"

namespace plantshape {

struct ExclusionRect {
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;

    bool contains(const Point2& p) const {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
    }
};

struct AugmentConfig {
    int theta3 = 100;       // neighborhood size for tip statistics
    double omega = 0.1;     // noise scale
    int n_noisy = 3;        // number of noisy sequences
    std::vector<int> lambda_exponents = {-3, -4, -5, -6};
    double jump_factor = 20.0;
    std::vector<long> generic_indices;       // frames marking the smoothest movements
    std::vector<ExclusionRect> exclusions;   // sparse-region pruning, default empty

    void validate() const {
        if (theta3 < 1) throw std::invalid_argument("theta3 must be >= 1");
        if (omega < 0.0) throw std::invalid_argument("omega must be non-negative");
        if (n_noisy < 0) throw std::invalid_argument("n_noisy must be >= 0");
        if (jump_factor <= 0.0) throw std::invalid_argument("jump_factor must be positive");
    }
};

// Neighborhood mean and standard deviation of the theta3 growth tips nearest
// to frame j's tip among frames sharing its light condition.
struct TipStats {
    double mu_x = 0.0, mu_y = 0.0;
    double sigma_x = 0.0, sigma_y = 0.0;
};

inline TipStats tip_neighborhood(const std::vector<TrackedFrame>& frames, std::size_t j,
                                 const AugmentConfig& cfg) {
    if (j >= frames.size()) throw std::invalid_argument("frame index out of range");
    const Point2 tip = frames[j].stem.tip();
    const LightCondition b = frames[j].light;

    struct Cand {
        double dist;
        std::size_t idx;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (i == j || frames[i].light != b) continue;
        cands.push_back({distance(frames[i].stem.tip(), tip), i});
    }
    if (cands.empty()) throw std::runtime_error("no frames share the light condition of frame " +
                                                std::to_string(j));
    auto by_dist = [](const Cand& a, const Cand& b2) {
        return a.dist != b2.dist ? a.dist < b2.dist : a.idx < b2.idx;
    };
    const std::size_t k = std::min<std::size_t>(cands.size(), std::size_t(cfg.theta3));
    std::partial_sort(cands.begin(), cands.begin() + k, cands.end(), by_dist);
    cands.resize(k);

    TipStats st;
    for (const auto& c : cands) {
        st.mu_x += frames[c.idx].stem.tip().x;
        st.mu_y += frames[c.idx].stem.tip().y;
    }
    st.mu_x /= double(k);
    st.mu_y /= double(k);
    double vx = 0.0, vy = 0.0;
    for (const auto& c : cands) {
        const Point2 t = frames[c.idx].stem.tip();
        vx += (t.x - st.mu_x) * (t.x - st.mu_x);
        vy += (t.y - st.mu_y) * (t.y - st.mu_y);
    }
    st.sigma_x = std::sqrt(vx / double(k));
    st.sigma_y = std::sqrt(vy / double(k));
    return st;
}

// Extent of each intermediate coordinate across the sequence relative to the
// extent of the matching tip coordinate. Zero tip extent yields zero.
struct ExtentRatios {
    // index 0..7 maps to stem points 1..8
    std::array<double, 8> x{};
    std::array<double, 8> y{};
};

inline ExtentRatios extent_ratios(const std::vector<TrackedFrame>& frames) {
    if (frames.empty()) throw std::invalid_argument("empty frame sequence");
    auto range_of = [&](auto&& get) {
        double lo = get(frames[0]);
        double hi = lo;
        for (const auto& f : frames) {
            lo = std::min(lo, get(f));
            hi = std::max(hi, get(f));
        }
        return hi - lo;
    };
    const double tip_rx = range_of([](const TrackedFrame& f) { return f.stem.tip().x; });
    const double tip_ry = range_of([](const TrackedFrame& f) { return f.stem.tip().y; });
    ExtentRatios w;
    for (int i = 0; i < 8; ++i) {
        const double rx = range_of([i](const TrackedFrame& f) { return f.stem.points[i + 1].x; });
        const double ry = range_of([i](const TrackedFrame& f) { return f.stem.points[i + 1].y; });
        w.x[i] = tip_rx > 0.0 ? rx / tip_rx : 0.0;
        w.y[i] = tip_ry > 0.0 ? ry / tip_ry : 0.0;
    }
    return w;
}

// One noisy copy of the sequence: tips displaced by draws from the
// neighborhood statistics, intermediates following the tip displacement
// scaled by their extent ratios. Per-frame RNG streams derived from
// (seed, frame index) keep the result independent of evaluation order.
inline std::vector<TrackedFrame> make_noisy_sequence(const std::vector<TrackedFrame>& frames,
                                                     const AugmentConfig& cfg,
                                                     std::uint64_t rng_seed) {
    cfg.validate();
    const ExtentRatios w = extent_ratios(frames);
    std::vector<TrackedFrame> out(frames.size());
    for (std::size_t j = 0; j < frames.size(); ++j) {
        const TipStats st = tip_neighborhood(frames, j, cfg);
        Rng rng(derive_seed(rng_seed, "noisy-frame", j));
        TrackedFrame f = frames[j];
        const Point2 tip = f.stem.tip();

        const double nx = tip.x + rng.gaussian(st.mu_x, st.sigma_x * cfg.omega);
        const double ny = tip.y + rng.gaussian(st.mu_y, st.sigma_y * cfg.omega);
        f.stem.tip() = {nx, ny};
        const double dx = nx - tip.x;
        const double dy = ny - tip.y;

        for (int i = 0; i < 8; ++i) {
            Point2& p = f.stem.points[i + 1];
            const double mu2x = p.x + dx * w.x[i];
            const double mu2y = p.y + dy * w.y[i];
            const double s2x = st.sigma_x * cfg.omega * w.x[i];
            const double s2y = st.sigma_y * cfg.omega * w.y[i];
            p.x = rng.gaussian(mu2x, s2x * cfg.omega);
            p.y = rng.gaussian(mu2y, s2y * cfg.omega);
        }
        out[j] = f;
    }
    return out;
}

// 64 rigid micro-translations (all sign/exponent combinations per axis) of
// the selected frames; one output sequence per offset so that consecutive
// selected frames can still be paired.
inline std::vector<std::vector<TrackedFrame>> generic_translations(
    const std::vector<TrackedFrame>& frames, const AugmentConfig& cfg) {
    cfg.validate();
    if (cfg.generic_indices.empty())
        throw std::invalid_argument("generic_indices must be nonempty");
    std::vector<double> offsets;
    for (int lam : cfg.lambda_exponents) {
        offsets.push_back(std::pow(10.0, lam));
        offsets.push_back(-std::pow(10.0, lam));
    }
    std::vector<std::vector<TrackedFrame>> out;
    out.reserve(offsets.size() * offsets.size());
    for (double ox : offsets)
        for (double oy : offsets) {
            std::vector<TrackedFrame> seq;
            seq.reserve(cfg.generic_indices.size());
            for (long idx : cfg.generic_indices) {
                if (idx < 0 || std::size_t(idx) >= frames.size())
                    throw std::invalid_argument("generic index out of range: " + std::to_string(idx));
                TrackedFrame f = frames[std::size_t(idx)];
                for (auto& p : f.stem.points) {
                    p.x += ox;
                    p.y += oy;
                }
                seq.push_back(f);
            }
            out.push_back(std::move(seq));
        }
    return out;
}

// Convenience heuristic for picking generic_indices: the contiguous window
// of the requested length whose tip has the lowest total jerk. Never used
// unless explicitly requested.
inline std::vector<long> suggest_generic_indices(const std::vector<TrackedFrame>& frames,
                                                 std::size_t count) {
    if (count < 2 || frames.size() < count)
        throw std::invalid_argument("window does not fit the sequence");
    auto jerk = [&](std::size_t i) {
        // third difference of the tip position
        const Point2 a = frames[i].stem.tip();
        const Point2 b = frames[i + 1].stem.tip();
        const Point2 c = frames[i + 2].stem.tip();
        const Point2 d = frames[i + 3].stem.tip();
        return std::hypot(d.x - 3 * c.x + 3 * b.x - a.x, d.y - 3 * c.y + 3 * b.y - a.y);
    };
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s + count <= frames.size(); ++s) {
        double score = 0.0;
        for (std::size_t i = s; i + 3 < s + count; ++i) score += jerk(i);
        if (score < best_score) {
            best_score = score;
            best = s;
        }
    }
    std::vector<long> idx(count);
    std::iota(idx.begin(), idx.end(), long(best));
    return idx;
}

namespace detail {

inline void pair_sequence(const std::vector<TrackedFrame>& seq, std::vector<RegressionVector>& out) {
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        if (seq[i + 1].t != seq[i].t + 1) continue; // gap in the sequence
        RegressionVector v;
        v.current = stem_coords(seq[i].stem);
        v.next = stem_coords(seq[i + 1].stem);
        v.light = seq[i].light;
        out.push_back(v);
    }
}

inline double mean_abs_change(const RegressionVector& v) {
    double s = 0.0;
    for (int i = 0; i < kStemCoords; ++i) s += std::abs(v.next[i] - v.current[i]);
    return s / kStemCoords;
}

} // namespace detail

// Union of all source sequences, mirrored, paired by timestep, and filtered.
inline std::vector<RegressionVector> build_regression_set(
    const std::vector<TrackedFrame>& frames, const std::vector<std::vector<TrackedFrame>>& noisy,
    const std::vector<std::vector<TrackedFrame>>& generic, const AugmentConfig& cfg) {
    cfg.validate();

    auto pruned = [&](const std::vector<TrackedFrame>& seq) {
        if (cfg.exclusions.empty()) return seq;
        std::vector<TrackedFrame> out;
        for (const auto& f : seq) {
            bool drop = false;
            for (const auto& r : cfg.exclusions)
                if (r.contains(f.stem.tip())) {
                    drop = true;
                    break;
                }
            if (!drop) out.push_back(f);
        }
        return out;
    };

    std::vector<const std::vector<TrackedFrame>*> sources;
    std::vector<std::vector<TrackedFrame>> owned;
    owned.push_back(pruned(frames));
    for (const auto& s : noisy) owned.push_back(pruned(s));
    for (const auto& s : generic) owned.push_back(pruned(s));

    std::vector<RegressionVector> pairs;
    for (const auto& seq : owned) {
        detail::pair_sequence(seq, pairs);
        std::vector<TrackedFrame> mirrored;
        mirrored.reserve(seq.size());
        for (const auto& f : seq) mirrored.push_back(mirror_x(f));
        detail::pair_sequence(mirrored, pairs);
    }

    // duplicate filter
    std::vector<RegressionVector> kept;
    kept.reserve(pairs.size());
    for (const auto& v : pairs)
        if (v.current != v.next) kept.push_back(v);
    if (kept.empty()) return kept;

    // jump filter: per-pair mean absolute change against the dataset mean
    double dataset_mean = 0.0;
    for (const auto& v : kept) dataset_mean += detail::mean_abs_change(v);
    dataset_mean /= double(kept.size());

    std::vector<RegressionVector> out;
    out.reserve(kept.size());
    for (const auto& v : kept)
        if (detail::mean_abs_change(v) <= cfg.jump_factor * dataset_mean) out.push_back(v);
    return out;
}

// Whole augmentation stage under one seed.
inline std::vector<RegressionVector> augment(const std::vector<TrackedFrame>& frames,
                                             const AugmentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::vector<std::vector<TrackedFrame>> noisy;
    for (int n = 0; n < cfg.n_noisy; ++n)
        noisy.push_back(make_noisy_sequence(frames, cfg, derive_seed(seed, "noisy-seq", n)));
    std::vector<std::vector<TrackedFrame>> generic;
    if (!cfg.generic_indices.empty()) generic = generic_translations(frames, cfg);
    return build_regression_set(frames, noisy, generic, cfg);
}

} // namespace plantshape
