// Command-line entry point: one binary, one subcommand per pipeline stage.
// Exit codes: 0 success, 2 configuration/usage error, 3 stage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <plantshape/pipeline.hpp>

namespace {

int g_verbosity = 1; // 0 quiet, 1 normal, 2 debug; PLANTSHAPE_LOG overrides

void log_info(const std::string& msg) {
    if (g_verbosity >= 1) std::cerr << "plantshape: " << msg << '\n';
}

void log_debug(const std::string& msg) {
    if (g_verbosity >= 2) std::cerr << "plantshape[debug]: " << msg << '\n';
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw plantshape::ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

plantshape::PipelineConfig load_config(const std::string& path, std::string* text_out = nullptr) {
    std::string text;
    if (!path.empty()) text = read_file(path);
    if (text_out) *text_out = text;
    return plantshape::validate_config(text);
}

// "left:2" / "middle:1" -> one scenario of a builtin set (1-based index).
plantshape::Scenario parse_scenario(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw plantshape::ConfigError("scenario must look like left:2 or middle:1");
    const std::string tag = spec.substr(0, colon);
    const std::string full = tag == "left" ? "left_target"
                           : tag == "middle" ? "middle_target"
                                             : tag;
    const auto set = plantshape::builtin_scenarios(full);
    std::size_t idx = 0;
    try {
        idx = std::stoul(spec.substr(colon + 1));
    } catch (...) {
        throw plantshape::ConfigError("bad scenario index in '" + spec + "'");
    }
    if (idx < 1 || idx > set.scenarios.size())
        throw plantshape::ConfigError("scenario index out of range (1.." +
                                      std::to_string(set.scenarios.size()) + ")");
    return set.scenarios[idx - 1];
}

void write_or_throw(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << content;
}

} // namespace

int main(int argc, char** argv) {
    if (const char* lv = std::getenv("PLANTSHAPE_LOG")) {
        const std::string v = lv;
        if (v == "quiet" || v == "0") g_verbosity = 0;
        else if (v == "debug" || v == "2") g_verbosity = 2;
    }

    CLI::App app{"growing-plant shaping toolchain"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "configuration file (sectioned key = value)");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic tracked-frame dataset");
    std::string synth_out = "frames.txt";
    synth->add_option("--out", synth_out, "output frames file");

    // track
    auto* track = app.add_subcommand("track", "extract stem geometry from image sequences");
    std::string track_images, track_setup, track_log, track_out = "frames.txt";
    track->add_option("--images", track_images, "directory of .ppm frames")->required();
    track->add_option("--setup", track_setup, "directory of plant-free setup .ppm images")->required();
    track->add_option("--light-log", track_log, "light log file (`t side` per line)")->required();
    track->add_option("--out", track_out, "output frames file");

    // augment
    auto* augment_cmd = app.add_subcommand("augment", "expand tracked frames into regression vectors");
    std::string aug_frames = "frames.txt", aug_out = "regression.txt";
    std::uint64_t aug_seed = 1;
    augment_cmd->add_option("--frames", aug_frames, "input frames file");
    augment_cmd->add_option("--out", aug_out, "output regression file");
    augment_cmd->add_option("--seed", aug_seed, "noise seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "train the forward model");
    std::string train_data = "regression.txt", train_out = "model.ckpt", train_report;
    std::uint64_t train_seed = 1;
    train_cmd->add_option("--data", train_data, "regression data file");
    train_cmd->add_option("--out", train_out, "checkpoint output");
    train_cmd->add_option("--report", train_report, "optional loss-curve CSV");
    train_cmd->add_option("--seed", train_seed, "weight-init / shuffle seed");

    // evolve
    auto* evolve_cmd = app.add_subcommand("evolve", "evolve a light controller against the model");
    std::string ev_model = "model.ckpt", ev_out = "champion.genome", ev_stats, ev_set;
    int ev_gens = -1;
    std::uint64_t ev_seed = 1;
    evolve_cmd->add_option("--model", ev_model, "forward-model checkpoint");
    evolve_cmd->add_option("--out", ev_out, "champion genome output");
    evolve_cmd->add_option("--stats", ev_stats, "optional per-generation stats CSV");
    evolve_cmd->add_option("--generations", ev_gens, "generation count");
    evolve_cmd->add_option("--scenario-set", ev_set, "left_target or middle_target");
    evolve_cmd->add_option("--seed", ev_seed, "evolution seed");

    // simulate
    auto* sim = app.add_subcommand("simulate", "roll out a genome in a scenario");
    std::string sim_genome, sim_model, sim_scenario, sim_trace = "trace.csv";
    sim->add_option("--genome", sim_genome, "controller genome")->required();
    sim->add_option("--model", sim_model, "forward-model checkpoint")->required();
    sim->add_option("--scenario", sim_scenario, "scenario, e.g. left:2")->required();
    sim->add_option("--trace", sim_trace, "trace CSV output");

    // plot
    auto* plot = app.add_subcommand("plot", "render a rollout as an SVG overlay");
    std::string plot_genome, plot_model, plot_scenario, plot_svg = "trace.svg";
    plot->add_option("--genome", plot_genome, "controller genome")->required();
    plot->add_option("--model", plot_model, "forward-model checkpoint")->required();
    plot->add_option("--scenario", plot_scenario, "scenario, e.g. left:2")->required();
    plot->add_option("--svg", plot_svg, "SVG output");

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "run several stages end to end");
    std::string pipe_out = "out", pipe_stages = "synth,augment,train,evolve,simulate,plot";
    std::string pipe_images, pipe_setup, pipe_log;
    pipe->add_option("--out", pipe_out, "output directory");
    pipe->add_option("--stages", pipe_stages, "comma-separated stage subset");
    pipe->add_option("--images", pipe_images, "image directory (track stage)");
    pipe->add_option("--setup", pipe_setup, "setup image directory (track stage)");
    pipe->add_option("--light-log", pipe_log, "light log file (track stage)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    using namespace plantshape;
    try {
        std::string config_text;
        PipelineConfig cfg = load_config(config_path, &config_text);

        if (synth->parsed()) {
            log_debug("synth: " + std::to_string(cfg.synth.steps) + " steps");
            auto frames = generate_dataset(cfg.synth.plant,
                                           openloop_schedule(cfg.synth.schedule_interval),
                                           cfg.synth.steps,
                                           initial_plant_state(cfg.synth.seedling_height));
            std::ostringstream ss;
            serialize_frames(frames, ss);
            write_or_throw(synth_out, ss.str());
            log_info("wrote " + std::to_string(frames.size()) + " frames to " + synth_out);
        } else if (track->parsed()) {
            auto setup = detail::load_ppm_dir(track_setup);
            auto images = detail::load_ppm_dir(track_images);
            std::ifstream log(track_log);
            if (!log) throw std::runtime_error("cannot open light log: " + track_log);
            auto lights = parse_light_log(log);
            auto env = build_envelope(setup, cfg.tracker.downsample);
            auto res = track_sequence(images, env, cfg.tracker, lights);
            std::ostringstream ss;
            serialize_frames(res.frames, ss);
            write_or_throw(track_out, ss.str());
            log_info("tracked " + std::to_string(res.frames.size()) + " frames (" +
                     std::to_string(res.skipped.size()) + " skipped) to " + track_out);
        } else if (augment_cmd->parsed()) {
            std::ifstream is(aug_frames);
            if (!is) throw std::runtime_error("cannot open frames file: " + aug_frames);
            auto frames = deserialize_frames(is);
            auto vectors = augment(frames, cfg.augment, aug_seed);
            std::ostringstream ss;
            serialize_regression(vectors, ss);
            write_or_throw(aug_out, ss.str());
            log_info("augmented " + std::to_string(frames.size()) + " frames into " +
                     std::to_string(vectors.size()) + " vectors at " + aug_out);
        } else if (train_cmd->parsed()) {
            std::ifstream is(train_data);
            if (!is) throw std::runtime_error("cannot open data file: " + train_data);
            auto data = deserialize_regression(is);
            LstmModel model;
            model.init_weights(derive_seed(train_seed, "train-init"));
            TrainConfig tc = cfg.train;
            tc.shuffle_seed = derive_seed(train_seed, "train-shuffle");
            auto report = train(model, data, tc);
            std::ostringstream ck;
            save_checkpoint(model, train_seed, ck);
            write_or_throw(train_out, ck.str());
            if (!train_report.empty()) {
                std::ostringstream rep;
                rep << "epoch,train_loss,val_loss\n";
                for (std::size_t i = 0; i < report.train_loss.size(); ++i)
                    rep << (i + 1) << ',' << report.train_loss[i] << ',' << report.val_loss[i]
                        << '\n';
                write_or_throw(train_report, rep.str());
            }
            log_info("trained to test MAE " + std::to_string(report.test_mae) + " (stopped epoch " +
                     std::to_string(report.stop_epoch) + "), saved " + train_out);
        } else if (evolve_cmd->parsed()) {
            std::ifstream is(ev_model);
            if (!is) throw std::runtime_error("cannot open checkpoint: " + ev_model);
            auto model = load_checkpoint(is);
            const std::string set_tag = ev_set.empty() ? cfg.pipeline.scenario_set : ev_set;
            const int gens = ev_gens > 0 ? ev_gens : cfg.pipeline.generations;
            const auto set = builtin_scenarios(set_tag);
            auto eval = [&](const neat::Genome& g) {
                return evaluate_genome(g, model, set, cfg.task, cfg.neat_params.sigmoid_slope);
            };
            auto result = neat::evolve(eval, kControllerInputs, 1, cfg.neat_params, gens, ev_seed);
            std::ostringstream gs;
            neat::save_genome(result.champion, gs);
            write_or_throw(ev_out, gs.str());
            if (!ev_stats.empty()) {
                std::ostringstream st;
                st << "generation,best_fitness,species\n";
                for (std::size_t i = 0; i < result.stats.best_fitness.size(); ++i)
                    st << i << ',' << result.stats.best_fitness[i] << ','
                       << result.stats.species_count[i] << '\n';
                write_or_throw(ev_stats, st.str());
            }
            log_info("champion fitness " + std::to_string(result.champion.fitness) + " after " +
                     std::to_string(gens) + " generations, saved " + ev_out);
        } else if (sim->parsed() || plot->parsed()) {
            const bool plotting = plot->parsed();
            const std::string genome_path = plotting ? plot_genome : sim_genome;
            const std::string model_path = plotting ? plot_model : sim_model;
            const std::string scenario_spec = plotting ? plot_scenario : sim_scenario;
            std::ifstream mis(model_path);
            if (!mis) throw std::runtime_error("cannot open checkpoint: " + model_path);
            auto model = load_checkpoint(mis);
            std::ifstream gis(genome_path);
            if (!gis) throw std::runtime_error("cannot open genome: " + genome_path);
            auto genome = neat::load_genome(gis);
            const Scenario scenario = parse_scenario(scenario_spec);
            neat::Phenotype ph(genome, cfg.neat_params.sigmoid_slope);
            LstmForward fwd(model);
            auto trace = rollout(
                [&](const std::vector<double>& in) { return ph.activate(in)[0]; }, fwd.as_fn(),
                scenario, cfg.task);
            if (plotting) {
                SvgCanvas canvas(-kWorkspaceXHalf, kWorkspaceXHalf, 0.0, kWorkspaceYMax);
                for (const auto& o : scenario.obstacles) canvas.rect(o, "#b0b0b0");
                canvas.circle(scenario.target, scenario.target_radius, "red");
                const std::size_t stride = std::max<std::size_t>(1, trace.stems.size() / 40);
                for (std::size_t k = 0; k < trace.stems.size(); k += stride)
                    canvas.polyline(trace.stems[k], "#9ad19a", 0.8);
                canvas.polyline(trace.stems.back(), "#1a7a1a", 1.6);
                std::ostringstream ss;
                canvas.write(ss);
                write_or_throw(plot_svg, ss.str());
                log_info("wrote " + plot_svg);
            } else {
                std::ostringstream ss;
                write_trace_csv(trace, ss);
                write_or_throw(sim_trace, ss.str());
                log_info("fitness " + std::to_string(trace.fitness_value) + ", " +
                         std::to_string(trace.stems.size()) + " states, wrote " + sim_trace);
            }
        } else if (pipe->parsed()) {
            std::set<std::string> stages;
            std::istringstream ss(pipe_stages);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                tok = detail::trim(tok);
                if (tok.empty()) continue;
                static const std::set<std::string> known = {"synth",  "track",    "augment", "train",
                                                            "evolve", "simulate", "plot"};
                if (!known.count(tok)) throw ConfigError("unknown stage '" + tok + "'");
                stages.insert(tok);
            }
            if (stages.empty()) throw ConfigError("no stages requested");
            PipelinePaths paths;
            paths.images_dir = pipe_images;
            paths.setup_dir = pipe_setup;
            paths.light_log = pipe_log;
            auto manifest = run_pipeline(cfg, stages, pipe_out, config_text, paths);
            log_info("pipeline complete: " + std::to_string(manifest.entries().size()) +
                     " manifest entries in " + pipe_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "plantshape: config error: " << e.what() << '\n';
        return 2;
    } catch (const StageError& e) {
        std::cerr << "plantshape: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "plantshape: error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
