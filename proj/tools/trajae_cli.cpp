// trajae command line: preprocessing, corpora, training, compression,
// simplification and the scenario grid.
//
// Exit codes: 0 success, 1 configuration error, 2 data error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "trajae/ae/codec.hpp"
#include "trajae/experiment.hpp"
#include "trajae/io.hpp"
#include "trajae/preprocess.hpp"
#include "trajae/simplify.hpp"

namespace fs = std::filesystem;
using namespace trajae;
using namespace trajae::experiment;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::string scenario = "20:4";
    std::string mode = "spatial3d";
    std::string format = "all";
    std::string input;
    std::string model;
    bool stub_ae = false;
};

ExperimentConfig load_config(const Common& c)
{
    ExperimentConfig cfg;
    if (!c.config_path.empty()) {
        std::ifstream is(c.config_path);
        if (!is)
            fail(Errc::config, "cannot read config " + c.config_path);
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            fail(Errc::config, std::string("config is not valid JSON: ") + e.what());
        }
        apply_json(cfg, j);
    }
    if (c.seed)
        cfg.seed = *c.seed;
    validate(cfg);
    return cfg;
}

fs::path out_dir(const Common& c)
{
    fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        fail(Errc::io, "cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    std::ofstream os(path);
    if (!os)
        fail(Errc::io, "cannot write " + path.string());
    os << j.dump(2) << '\n';
}

/// Resolved configuration plus the command and its arguments.
void echo_config(const fs::path& dir, const std::string& command, const ExperimentConfig& cfg,
                 nlohmann::json args)
{
    nlohmann::json j;
    j["command"] = command;
    j["config"] = to_json(cfg);
    j["arguments"] = std::move(args);
    write_json(dir / "resolved_config.json", j);
}

std::vector<Trajectory> load_or_generate(const Common& c, Mode mode, const ExperimentConfig& cfg)
{
    if (!c.input.empty()) {
        auto f = io::read_trajectories_file(c.input);
        if (f.mode != mode)
            fail(Errc::mode_mismatch, "input is " + std::string(to_string(f.mode)) + " but --dataset-mode is " +
                                          to_string(mode));
        return std::move(f.trajectories);
    }
    Rng root(cfg.seed);
    const std::uint64_t seeds[2] = {root.next(), root.next()};
    return corpus_for(mode, cfg, seeds[mode == Mode::Spatial3D ? 0 : 1]);
}

void print_result(const ScenarioResult& r)
{
    std::printf("%-22s train %zu test %zu  AE frechet %s  interpolated frechet %s\n",
                r.scenario.name().c_str(), r.train_count, r.test_count,
                experiment::detail::cell_text(r.cell("AE", metric_frechet).mean()).c_str(),
                experiment::detail::cell_text(r.cell("interpolated", metric_frechet).mean()).c_str());
    std::fflush(stdout);
}

// ---------------------------------------------------------------------------

void cmd_preprocess(const Common& c)
{
    const auto cfg = load_config(c);
    if (c.input.empty())
        fail(Errc::config, "preprocess needs --input");
    std::ifstream is(c.input);
    if (!is)
        fail(Errc::io, "cannot open " + c.input);
    const auto parsed = preprocess::parse_taxi_log(is);
    const auto res = preprocess::preprocess_log(parsed.fixes, cfg.preprocess);
    const auto dir = out_dir(c);
    io::write_trajectories_file((dir / "trajectories.csv").string(), res.trajectories, Mode::GeoTemporal);
    nlohmann::json stats = res.stats;
    stats["malformed_lines"] = parsed.malformed;
    write_json(dir / "preprocess_stats.json", stats);
    echo_config(dir, "preprocess", cfg, {{"input", c.input}});
    std::printf("%zu trajectories, %zu points\n", res.stats.trajectories_out, res.stats.points_out);
}

void cmd_generate(const Common& c, const std::string& kind_name, std::size_t count)
{
    auto cfg = load_config(c);
    if (count > 0)
        cfg.corpus_size = count;
    const auto kind = corpus_kind_from_string(kind_name);
    const auto dir = out_dir(c);
    if (kind == CorpusKind::TaxiLike) {
        const auto log = synthetic_taxi_log(cfg.corpus_size, cfg.seed, cfg.corpus);
        std::ofstream os(dir / "raw_log.txt");
        preprocess::write_taxi_log(os, log);
        const auto res = preprocess::preprocess_log(log, cfg.preprocess);
        io::write_trajectories_file((dir / "corpus.csv").string(), res.trajectories, Mode::GeoTemporal);
        write_json(dir / "preprocess_stats.json", res.stats);
        std::printf("%zu fixes, %zu trajectories after preprocessing\n", log.size(),
                    res.trajectories.size());
    } else {
        const auto ts = smooth3d_corpus(cfg.corpus_size, cfg.seed, cfg.corpus);
        io::write_trajectories_file((dir / "corpus.csv").string(), ts, Mode::Spatial3D);
        std::printf("%zu trajectories\n", ts.size());
    }
    echo_config(dir, "generate", cfg, {{"kind", kind_name}, {"count", cfg.corpus_size}});
}

void cmd_train(const Common& c)
{
    const auto cfg = load_config(c);
    const Mode mode = ae::mode_from_string(c.mode);
    const auto s = parse_scenario(mode, c.scenario);
    const auto corpus = load_or_generate(c, mode, cfg);
    Rng rng(cfg.seed);
    const std::uint64_t split_seed = rng.next();
    const std::uint64_t train_seed = rng.next();
    const auto data = prepare_data(corpus, s, cfg, split_seed);
    std::vector<double> history;
    ae::ModelParams model;
    train_reconstructor(s, data.train, cfg, train_seed, &history, &model);

    const auto dir = out_dir(c);
    auto loss = cfg.train.loss_kind;
    if (loss == ae::LossKind::EquirectPlusTimeSq && mode != Mode::GeoTemporal)
        loss = ae::LossKind::RescaledEuclidean;
    ae::save_model((dir / "model.json").string(), model,
                   ae::CheckpointMeta{train_seed, loss, cfg.train.reverse_input});
    std::ofstream hs(dir / "loss_history.csv");
    hs << "epoch,loss\n";
    for (std::size_t e = 0; e < history.size(); ++e)
        hs << e + 1 << ',' << io::format_double(history[e]) << '\n';
    echo_config(dir, "train", cfg,
                {{"scenario", s.name()}, {"input", c.input}, {"train_count", data.train.size()}});
    std::printf("trained %s on %zu sequences, loss %s -> %s\n", s.name().c_str(), data.train.size(),
                io::format_double(history.front()).c_str(), io::format_double(history.back()).c_str());
}

void cmd_compress(const Common& c)
{
    const auto cfg = load_config(c);
    if (c.model.empty() || c.input.empty())
        fail(Errc::config, "compress needs --model and --input");
    ae::CheckpointMeta meta;
    const auto model = ae::load_model(c.model, &meta);
    const auto f = io::read_trajectories_file(c.input);
    if (f.mode != model.mode)
        fail(Errc::mode_mismatch, "input mode differs from the model's");
    std::vector<ae::LatentCode> codes;
    std::vector<std::string> ids;
    for (const auto& t : f.trajectories)
        for (const auto& piece : chunk(t, model.seq_len)) {
            codes.push_back(ae::compress(model, piece, meta.reverse_input));
            ids.push_back(piece.id());
        }
    const auto dir = out_dir(c);
    ae::write_latents_file((dir / "latents.bin").string(), codes);
    std::ofstream idx(dir / "latent_ids.csv");
    idx << "record,id\n";
    for (std::size_t k = 0; k < ids.size(); ++k)
        idx << k << ',' << ids[k] << '\n';
    echo_config(dir, "compress", cfg, {{"model", c.model}, {"input", c.input}});
    std::printf("%zu codes of %zu values\n", codes.size(),
                codes.empty() ? std::size_t{0} : codes.front().value_count());
}

void cmd_reconstruct(const Common& c)
{
    const auto cfg = load_config(c);
    if (c.model.empty() || c.input.empty())
        fail(Errc::config, "reconstruct needs --model and --input");
    const auto model = ae::load_model(c.model);
    const auto codes = ae::read_latents_file(c.input);
    std::vector<Trajectory> out;
    for (const auto& code : codes) {
        if (code.seq_len != model.seq_len || code.z.size() != model.latent_dim)
            fail(Errc::dimension_mismatch, "latent record does not fit the model");
        auto t = ae::reconstruct(model, code);
        t.set_id("r" + code.id);
        out.push_back(std::move(t));
    }
    const auto dir = out_dir(c);
    io::write_trajectories_file((dir / "reconstructed.csv").string(), out, model.mode);
    echo_config(dir, "reconstruct", cfg, {{"model", c.model}, {"input", c.input}});
    std::printf("%zu trajectories\n", out.size());
}

void cmd_simplify(const Common& c, std::optional<double> epsilon, std::size_t target, std::string algo_name)
{
    const auto cfg = load_config(c);
    if (c.input.empty())
        fail(Errc::config, "simplify needs --input");
    if (epsilon.has_value() == (target > 0))
        fail(Errc::config, "give exactly one of --epsilon and --target-points");
    const auto f = io::read_trajectories_file(c.input);
    if (algo_name.empty())
        algo_name = f.mode == Mode::GeoTemporal ? "tdtr" : "dp";
    SimplifyAlgo algo;
    if (algo_name == "dp")
        algo = SimplifyAlgo::DP;
    else if (algo_name == "tdtr")
        algo = SimplifyAlgo::TDTR;
    else
        fail(Errc::config, "unknown algorithm '" + algo_name + "'");

    std::vector<std::pair<std::string, Simplified>> items;
    nlohmann::json eps = nlohmann::json::array();
    for (const auto& t : f.trajectories) {
        if (epsilon) {
            items.emplace_back(t.id(), simplify(t, *epsilon, algo, cfg.preprocess.planet));
            eps.push_back(*epsilon);
        } else {
            auto r = find_epsilon_for_target(t, std::min(target, t.size()), algo, cfg.preprocess.planet);
            eps.push_back(r.epsilon);
            items.emplace_back(t.id(), std::move(r.simplified));
        }
    }
    const auto dir = out_dir(c);
    std::ofstream os(dir / "simplified.csv");
    write_simplified(os, items, f.mode);
    echo_config(dir, "simplify", cfg,
                {{"input", c.input}, {"algorithm", algo_name}, {"target_points", target},
                 {"epsilon", eps}});
    std::printf("%zu trajectories simplified\n", items.size());
}

void cmd_evaluate(const Common& c)
{
    const auto cfg = load_config(c);
    const auto format = report_format_from_string(c.format);
    const Mode mode = ae::mode_from_string(c.mode);
    const auto s = parse_scenario(mode, c.scenario);
    const Reconstructor stub = c.stub_ae ? identity_reconstructor() : Reconstructor{};
    EvaluationReport rep;
    if (c.input.empty()) {
        rep = run_grid({s}, cfg, print_result, stub);
    } else {
        const auto corpus = load_or_generate(c, mode, cfg);
        Rng rng(cfg.seed);
        const std::uint64_t split_seed = rng.next();
        const std::uint64_t train_seed = rng.next();
        rep.metrics = metric_names(cfg.include_dtw_i);
        rep.config = to_json(cfg);
        rep.scenarios.push_back(run_scenario(s, prepare_data(corpus, s, cfg, split_seed), cfg, train_seed, stub));
        print_result(rep.scenarios.back());
    }
    const auto dir = out_dir(c);
    emit_report(rep, dir, format);
    echo_config(dir, "evaluate", cfg,
                {{"scenario", s.name()}, {"input", c.input}, {"stub_ae", c.stub_ae}, {"format", c.format}});
}

void cmd_grid(const Common& c, const std::string& only_mode)
{
    const auto cfg = load_config(c);
    const auto format = report_format_from_string(c.format);
    std::vector<Scenario> scenarios;
    for (const auto& s : scenario_grid())
        if (only_mode.empty() || to_string(s.mode) == only_mode)
            scenarios.push_back(s);
    if (scenarios.empty())
        fail(Errc::config, "unknown dataset mode '" + only_mode + "'");
    const auto rep = run_grid(scenarios, cfg, print_result,
                              c.stub_ae ? identity_reconstructor() : Reconstructor{});
    const auto dir = out_dir(c);
    emit_report(rep, dir, format);
    echo_config(dir, "grid", cfg,
                {{"dataset_mode", only_mode.empty() ? "all" : only_mode},
                 {"stub_ae", c.stub_ae},
                 {"format", c.format}});
}

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config_path, "JSON configuration file");
    sub->add_option("--seed", c.seed, "master seed (overrides the config)");
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"trajae: LSTM autoencoder and line-simplification trajectory compression"};
    app.require_subcommand(1);
    Common c;
    std::string kind = "smooth3d", algo, only_mode;
    std::size_t count = 0, target = 0;
    std::optional<double> epsilon;

    auto* pre = app.add_subcommand("preprocess", "clean a raw taxi log into trajectories");
    add_common(pre, c);
    pre->add_option("--input", c.input, "log with id,timestamp,lon,lat lines")->required();

    auto* gen = app.add_subcommand("generate", "write a synthetic corpus");
    add_common(gen, c);
    gen->add_option("--kind", kind, "smooth3d or taxi-like")->capture_default_str();
    gen->add_option("--count", count, "trajectories (vehicles for taxi-like)");

    auto* tr = app.add_subcommand("train", "train an autoencoder for one scenario");
    add_common(tr, c);
    tr->add_option("--scenario", c.scenario, "<seq_len>:<ratio>")->capture_default_str();
    tr->add_option("--dataset-mode", c.mode, "spatial3d or geotemporal")->capture_default_str();
    tr->add_option("--input", c.input, "trajectory CSV (default: synthetic corpus)");

    auto* comp = app.add_subcommand("compress", "encode trajectories with a trained model");
    add_common(comp, c);
    comp->add_option("--model", c.model, "model checkpoint")->required();
    comp->add_option("--input", c.input, "trajectory CSV")->required();

    auto* rec = app.add_subcommand("reconstruct", "decode latent records");
    add_common(rec, c);
    rec->add_option("--model", c.model, "model checkpoint")->required();
    rec->add_option("--input", c.input, "latent file")->required();

    auto* simp = app.add_subcommand("simplify", "DP or TD-TR simplification");
    add_common(simp, c);
    simp->add_option("--input", c.input, "trajectory CSV")->required();
    simp->add_option("--epsilon", epsilon, "fixed tolerance");
    simp->add_option("--target-points", target, "search the tolerance for this many kept points");
    simp->add_option("--algo", algo, "dp or tdtr (default by dataset mode)");

    auto* ev = app.add_subcommand("evaluate", "compare AE and simplification for one scenario");
    add_common(ev, c);
    ev->add_option("--scenario", c.scenario, "<seq_len>:<ratio>")->capture_default_str();
    ev->add_option("--dataset-mode", c.mode, "spatial3d or geotemporal")->capture_default_str();
    ev->add_option("--format", c.format, "csv, json or all")->capture_default_str();
    ev->add_option("--input", c.input, "trajectory CSV (default: synthetic corpus)");
    ev->add_flag("--stub-ae", c.stub_ae, "skip training; the AE rows use the original trajectory");

    auto* grid = app.add_subcommand("grid", "run all 14 scenarios");
    add_common(grid, c);
    grid->add_option("--format", c.format, "csv, json or all")->capture_default_str();
    grid->add_option("--dataset-mode", only_mode, "restrict to one dataset mode");
    grid->add_flag("--stub-ae", c.stub_ae, "skip training; the AE rows use the original trajectory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*pre)
            cmd_preprocess(c);
        else if (*gen)
            cmd_generate(c, kind, count);
        else if (*tr)
            cmd_train(c);
        else if (*comp)
            cmd_compress(c);
        else if (*rec)
            cmd_reconstruct(c);
        else if (*simp)
            cmd_simplify(c, epsilon, target, algo);
        else if (*ev)
            cmd_evaluate(c);
        else if (*grid)
            cmd_grid(c, only_mode);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.is_configuration() ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
