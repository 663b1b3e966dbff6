#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "augment.hpp"
#include "config.hpp"
#include "lstm.hpp"
#include "manifest.hpp"
#include "neat.hpp"
#include "svg.hpp"
#include "synth.hpp"
#include "tasksim.hpp"
#include "tracker.hpp"

namespace plantshape {

class StageError : public std::runtime_error {
public:
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error("stage " + stage + ": " + what), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// Optional externally supplied inputs (only needed for the track stage).
struct PipelinePaths {
    std::string images_dir;  // directory of numbered .ppm frames
    std::string setup_dir;   // plant-free setup images
    std::string light_log;   // `t side` lines
};

namespace detail {

inline std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << content;
}

inline std::vector<RgbImage> load_ppm_dir(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".ppm") names.push_back(e.path().string());
    std::sort(names.begin(), names.end());
    std::vector<RgbImage> images;
    images.reserve(names.size());
    for (const auto& n : names) images.push_back(read_ppm(n));
    return images;
}

} // namespace detail

// Executes the requested stages in dependency order, appending one manifest
// entry per stage. A stage failure is recorded and rethrown as StageError.
inline RunManifest run_pipeline(const PipelineConfig& cfg, const std::set<std::string>& stages,
                                const std::string& out_dir, const std::string& config_text = "",
                                const PipelinePaths& paths = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::uint64_t master = cfg.pipeline.master_seed;

    RunManifest manifest;
    {
        RunManifest::Entry e;
        e.stage = "config";
        e.status = "ok";
        e.seed = master;
        e.inputs["<config>"] = digest_bytes(config_text);
        manifest.append(e);
    }

    const std::string frames_path = detail::join(out_dir, "frames.txt");
    const std::string regression_path = detail::join(out_dir, "regression.txt");
    const std::string model_path = detail::join(out_dir, "model.ckpt");
    const std::string genome_path = detail::join(out_dir, "champion.genome");
    const std::string stats_path = detail::join(out_dir, "stats.csv");

    auto run_stage = [&](const std::string& name, std::uint64_t seed,
                         const std::vector<std::string>& inputs,
                         const std::vector<std::string>& outputs, auto&& body) {
        if (!stages.count(name)) return;
        RunManifest::Entry e;
        e.stage = name;
        e.seed = seed;
        try {
            for (const auto& p : inputs) {
                if (!fs::exists(p)) throw std::runtime_error("missing input file: " + p);
                e.inputs[p] = digest_file(p);
            }
            body();
            for (const auto& p : outputs) e.outputs[p] = digest_file(p);
            e.status = "ok";
            manifest.append(e);
        } catch (const std::exception& ex) {
            e.status = "failed";
            e.error = ex.what();
            manifest.append(e);
            manifest.write(detail::join(out_dir, "manifest.jsonl"));
            throw StageError(name, ex.what());
        }
    };

    run_stage("synth", derive_seed(master, "synth"), {}, {frames_path}, [&] {
        auto frames = generate_dataset(cfg.synth.plant, openloop_schedule(cfg.synth.schedule_interval),
                                       cfg.synth.steps, initial_plant_state(cfg.synth.seedling_height));
        std::ostringstream ss;
        serialize_frames(frames, ss);
        detail::write_text_file(frames_path, ss.str());
    });

    run_stage("track", derive_seed(master, "track"),
              {paths.light_log}, {frames_path}, [&] {
                  if (paths.images_dir.empty() || paths.setup_dir.empty())
                      throw std::runtime_error("track stage requires images_dir and setup_dir");
                  auto setup = detail::load_ppm_dir(paths.setup_dir);
                  auto images = detail::load_ppm_dir(paths.images_dir);
                  std::ifstream log(paths.light_log);
                  auto lights = parse_light_log(log);
                  auto env = build_envelope(setup, cfg.tracker.downsample);
                  auto res = track_sequence(images, env, cfg.tracker, lights);
                  std::ostringstream ss;
                  serialize_frames(res.frames, ss);
                  detail::write_text_file(frames_path, ss.str());
              });

    run_stage("augment", derive_seed(master, "augment"), {frames_path}, {regression_path}, [&] {
        std::ifstream is(frames_path);
        auto frames = deserialize_frames(is);
        auto vectors = augment(frames, cfg.augment, derive_seed(master, "augment"));
        std::ostringstream ss;
        serialize_regression(vectors, ss);
        detail::write_text_file(regression_path, ss.str());
    });

    run_stage("train", derive_seed(master, "train"), {regression_path},
              {model_path, detail::join(out_dir, "train_report.csv")}, [&] {
                  std::ifstream is(regression_path);
                  auto data = deserialize_regression(is);
                  const std::uint64_t init_seed = derive_seed(master, "train-init");
                  LstmModel model;
                  model.init_weights(init_seed);
                  TrainConfig tc = cfg.train;
                  tc.shuffle_seed = derive_seed(master, "train-shuffle");
                  auto report = train(model, data, tc);
                  std::ostringstream ck;
                  save_checkpoint(model, init_seed, ck);
                  detail::write_text_file(model_path, ck.str());
                  std::ostringstream rep;
                  rep << "epoch,train_loss,val_loss\n";
                  char buf[32];
                  for (std::size_t i = 0; i < report.train_loss.size(); ++i) {
                      std::snprintf(buf, sizeof buf, "%.17g", report.train_loss[i]);
                      rep << (i + 1) << ',' << buf << ',';
                      std::snprintf(buf, sizeof buf, "%.17g", report.val_loss[i]);
                      rep << buf << '\n';
                  }
                  rep << "# stop_epoch=" << report.stop_epoch << " best_epoch=" << report.best_epoch
                      << " test_mae=" << report.test_mae << '\n';
                  detail::write_text_file(detail::join(out_dir, "train_report.csv"), rep.str());
              });

    run_stage("evolve", derive_seed(master, "evolve"), {model_path}, {genome_path, stats_path}, [&] {
        std::ifstream is(model_path);
        auto model = load_checkpoint(is);
        const auto set = builtin_scenarios(cfg.pipeline.scenario_set);
        auto eval = [&](const neat::Genome& g) {
            return evaluate_genome(g, model, set, cfg.task, cfg.neat_params.sigmoid_slope);
        };
        auto result = neat::evolve(eval, kControllerInputs, 1, cfg.neat_params,
                                   cfg.pipeline.generations, derive_seed(master, "evolve"));
        std::ostringstream gs;
        neat::save_genome(result.champion, gs);
        detail::write_text_file(genome_path, gs.str());
        std::ostringstream st;
        st << "generation,best_fitness,species\n";
        char buf[32];
        for (std::size_t i = 0; i < result.stats.best_fitness.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", result.stats.best_fitness[i]);
            st << i << ',' << buf << ',' << result.stats.species_count[i] << '\n';
        }
        detail::write_text_file(stats_path, st.str());
    });

    if (stages.count("simulate") || stages.count("plot")) {
        const auto set = builtin_scenarios(cfg.pipeline.scenario_set);
        std::vector<std::string> trace_paths, svg_paths;
        for (std::size_t i = 0; i < set.scenarios.size(); ++i) {
            trace_paths.push_back(detail::join(out_dir, "trace_s" + std::to_string(i + 1) + ".csv"));
            svg_paths.push_back(detail::join(out_dir, "trace_s" + std::to_string(i + 1) + ".svg"));
        }

        run_stage("simulate", derive_seed(master, "simulate"), {model_path, genome_path},
                  trace_paths, [&] {
                      std::ifstream mis(model_path);
                      auto model = load_checkpoint(mis);
                      std::ifstream gis(genome_path);
                      auto genome = neat::load_genome(gis);
                      for (std::size_t i = 0; i < set.scenarios.size(); ++i) {
                          neat::Phenotype ph(genome, cfg.neat_params.sigmoid_slope);
                          LstmForward fwd(model);
                          auto trace = rollout(
                              [&](const std::vector<double>& in) { return ph.activate(in)[0]; },
                              fwd.as_fn(), set.scenarios[i], cfg.task);
                          std::ostringstream ss;
                          write_trace_csv(trace, ss);
                          detail::write_text_file(trace_paths[i], ss.str());
                      }
                  });

        run_stage("plot", derive_seed(master, "plot"), trace_paths, svg_paths, [&] {
            for (std::size_t i = 0; i < set.scenarios.size(); ++i) {
                std::ifstream mis(model_path);
                auto model = load_checkpoint(mis);
                std::ifstream gis(genome_path);
                auto genome = neat::load_genome(gis);
                neat::Phenotype ph(genome, cfg.neat_params.sigmoid_slope);
                LstmForward fwd(model);
                auto trace = rollout(
                    [&](const std::vector<double>& in) { return ph.activate(in)[0]; }, fwd.as_fn(),
                    set.scenarios[i], cfg.task);
                SvgCanvas canvas(-kWorkspaceXHalf, kWorkspaceXHalf, 0.0, kWorkspaceYMax);
                for (const auto& o : set.scenarios[i].obstacles) canvas.rect(o, "#b0b0b0");
                canvas.circle(set.scenarios[i].target, set.scenarios[i].target_radius, "red");
                const std::size_t stride = std::max<std::size_t>(1, trace.stems.size() / 40);
                for (std::size_t k = 0; k < trace.stems.size(); k += stride)
                    canvas.polyline(trace.stems[k], "#9ad19a", 0.8);
                canvas.polyline(trace.stems.back(), "#1a7a1a", 1.6);
                std::ostringstream ss;
                canvas.write(ss);
                detail::write_text_file(svg_paths[i], ss.str());
            }
        });
    }

    manifest.write(detail::join(out_dir, "manifest.jsonl"));
    return manifest;
}

} // namespace plantshape
