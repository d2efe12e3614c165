// Command-line front end: graph diffusion precomputation, the three
// experiment benches, and the executable verification suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gadc/errors.hpp"
#include "gadc/experiment.hpp"
#include "gadc/verify.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> runs;
    std::optional<std::string> out_dir;
    std::optional<std::string> option;
    std::optional<double> lambda;
    std::optional<unsigned> K;
    std::optional<double> epsilon;
    std::optional<std::string> kind;
    bool drop_low_order = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "experiment config file (JSON)");
    cmd->add_option("--seed", f.seed, "base seed");
    cmd->add_option("--runs", f.runs, "number of repeated runs");
    cmd->add_option("--out", f.out_dir, "output directory");
    cmd->add_option("--option", f.option, "transition option: plain, 1, 2, 3 or 4");
    cmd->add_option("--lambda", f.lambda, "smoothing weight (> 0)");
    cmd->add_option("--K", f.K, "series truncation order");
    cmd->add_option("--epsilon", f.epsilon, "perturbation budget (>= 0)");
    cmd->add_option("--kind", f.kind, "normalization kind: sym or row")
        ->check(CLI::IsMember({"sym", "row"}));
    cmd->add_flag("--drop-low-order", f.drop_low_order, "discard the k=0 and k=1 terms");
}

gadc::ExperimentConfig resolve_config(const CommonFlags& f) {
    gadc::ExperimentConfig cfg;
    if (!f.config_path.empty()) cfg = gadc::load_experiment_config(f.config_path);
    if (f.seed) cfg.base_seed = *f.seed;
    if (f.runs) cfg.runs = *f.runs;
    if (f.out_dir) cfg.out_dir = *f.out_dir;
    if (f.option) cfg.diffusion.option = gadc::transition_option_from_string(*f.option);
    if (f.lambda) cfg.diffusion.lambda = *f.lambda;
    if (f.K) cfg.diffusion.K = *f.K;
    if (f.epsilon) cfg.diffusion.epsilon = *f.epsilon;
    if (f.kind)
        cfg.diffusion.kind =
            *f.kind == "sym" ? gadc::NormKind::symmetric : gadc::NormKind::row_stochastic;
    if (f.drop_low_order) cfg.diffusion.drop_low_order = true;
    cfg.validate();
    return cfg;
}

void emit(const gadc::json& report, const gadc::ExperimentConfig& cfg,
          const std::string& name) {
    gadc::write_report_files(report, cfg.out_dir, name);
    std::cout << report.dump(2) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph adversarial diffusion toolkit"};
    app.require_subcommand(1);

    CommonFlags diffuse_flags, denoise_flags, attack_flags, hetero_flags;
    std::string features_out = "aggregated_features.mat";
    std::string verify_level = "fast";

    CLI::App* cmd_diffuse =
        app.add_subcommand("diffuse", "precompute aggregated features F = S X");
    add_common_flags(cmd_diffuse, diffuse_flags);
    cmd_diffuse->add_option("--features-out", features_out,
                            "output path for the aggregated feature container");

    CLI::App* cmd_denoise = app.add_subcommand(
        "denoise-bench", "feature-noise benchmark with paired controls");
    add_common_flags(cmd_denoise, denoise_flags);

    CLI::App* cmd_attack = app.add_subcommand(
        "attack-bench", "structure-attack benchmark: option 4 vs plain");
    add_common_flags(cmd_attack, attack_flags);

    CLI::App* cmd_hetero = app.add_subcommand(
        "heterophily-sweep", "epsilon sweep of the edge-masked cosine option");
    add_common_flags(cmd_hetero, hetero_flags);

    CLI::App* cmd_verify =
        app.add_subcommand("verify", "run the executable verification suite");
    cmd_verify->add_option("--level", verify_level, "fast or full")
        ->check(CLI::IsMember({"fast", "full"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad flags are input errors
    }

    try {
        if (cmd_diffuse->parsed()) {
            const gadc::ExperimentConfig cfg = resolve_config(diffuse_flags);
            std::filesystem::create_directories(cfg.out_dir);
            const std::filesystem::path fpath =
                std::filesystem::path(features_out).is_absolute()
                    ? std::filesystem::path(features_out)
                    : std::filesystem::path(cfg.out_dir) / features_out;
            emit(gadc::run_diffuse(cfg, fpath.string()), cfg, "diffuse_report");
        } else if (cmd_denoise->parsed()) {
            const gadc::ExperimentConfig cfg = resolve_config(denoise_flags);
            emit(gadc::run_denoise_bench(cfg), cfg, "denoise_report");
        } else if (cmd_attack->parsed()) {
            const gadc::ExperimentConfig cfg = resolve_config(attack_flags);
            emit(gadc::run_attack_bench(cfg), cfg, "attack_report");
        } else if (cmd_hetero->parsed()) {
            const gadc::ExperimentConfig cfg = resolve_config(hetero_flags);
            emit(gadc::run_heterophily_sweep(cfg), cfg, "heterophily_report");
        } else if (cmd_verify->parsed()) {
            const gadc::verify::Level level = verify_level == "full"
                                                  ? gadc::verify::Level::full
                                                  : gadc::verify::Level::fast;
            bool all_pass = true;
            for (const gadc::verify::CheckResult& r : gadc::verify::run_all(level)) {
                std::printf("[%s] %-28s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                            r.detail.c_str());
                all_pass = all_pass && r.pass;
            }
            return all_pass ? 0 : 1;
        }
    } catch (const gadc::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return gadc::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
