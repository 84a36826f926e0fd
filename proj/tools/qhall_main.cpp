// qhall: config-driven runner for the ladder simulations.
//
// Exit status: 0 ok, 2 configuration error, 3 numeric error, 1 anything else
// (I/O failures, internal errors).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "qhall/app/config.hpp"
#include "qhall/app/presets.hpp"
#include "qhall/app/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;
constexpr int kNumericError = 3;

// Output directory override; --out still wins.
constexpr const char* kOutEnv = "QHALL_OUT_DIR";

qhall::app::ExperimentConfig resolve(const std::string& arg) {
    namespace app = qhall::app;
    if (std::filesystem::exists(arg)) {
        return app::load_config(arg);
    }
    if (auto text = app::preset_text(arg)) {
        return app::parse_config(*text);
    }
    throw app::ConfigError(arg, "no such config file or preset");
}

template <typename F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const qhall::NumericError& e) {
        std::cerr << "qhall: numeric error: " << e.what() << "\n";
        return kNumericError;
    } catch (const qhall::InvalidArgument& e) {
        std::cerr << "qhall: config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "qhall: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    namespace app = qhall::app;
    CLI::App cli{"Single-excitation simulator for synthetic quantum Hall ladders"};
    cli.set_version_flag("--version", std::string(app::code_version()));
    cli.require_subcommand(1);

    std::string config_arg, out_dir;
    std::uint64_t seed = 0;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    bool plots = false;

    auto* run = cli.add_subcommand("run", "Run an experiment config (file path or preset name)");
    run->add_option("config", config_arg, "Config file or preset name")->required();
    auto* out_opt = run->add_option("--out", out_dir, "Output directory (overrides $QHALL_OUT_DIR and the config)");
    auto* seed_opt = run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024));
    run->add_flag("--plots", plots, "Also write SVG plots");

    auto* check = cli.add_subcommand("validate", "Parse and validate a config without running it");
    check->add_option("config", config_arg, "Config file or preset name")->required();

    auto* presets = cli.add_subcommand("presets", "Inspect shipped presets");
    presets->require_subcommand(1);
    auto* list = presets->add_subcommand("list", "List preset names");
    std::string preset_name;
    auto* show = presets->add_subcommand("show", "Print a preset config");
    show->add_option("name", preset_name, "Preset name")->required();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    if (*run) {
        return guarded([&] {
            app::ExperimentConfig config = resolve(config_arg);
            if (*seed_opt) {
                config.seed = seed;
            }
            if (*out_opt) {
                config.output.dir = out_dir;
            } else if (const char* env = std::getenv(kOutEnv); env && *env) {
                config.output.dir = env;
            }
            config.output.plots = config.output.plots || plots;
            app::validate(config);
            app::RunOptions options;
            options.threads = threads;
            const app::ResultBundle bundle = app::run(config, options);
            const auto files = app::emit_bundle(bundle, config.output.dir, config.output.plots, app::emit_config(config));
            for (const auto& line : bundle.summary) {
                std::cout << line << "\n";
            }
            std::cout << "wrote " << files.size() << " files to " << config.output.dir << " (config " << bundle.config_hash
                      << ", content " << bundle.content_hash() << ")\n";
            return kOk;
        });
    }
    if (*check) {
        return guarded([&] {
            const app::ExperimentConfig config = resolve(config_arg);
            std::cout << "ok: " << app::to_string(config.experiment) << ", " << config.cases.size()
                      << (config.cases.size() == 1 ? " case" : " cases") << ", config hash "
                      << app::hex_hash(app::config_hash(config)) << "\n";
            return kOk;
        });
    }
    if (*list) {
        for (const auto& name : app::preset_names()) {
            std::cout << name << "\n";
        }
        return kOk;
    }
    if (*show) {
        const auto text = app::preset_text(preset_name);
        if (!text) {
            std::cerr << "qhall: config error: no preset named \"" << preset_name << "\"\n";
            return kConfigError;
        }
        std::cout << *text;
        return kOk;
    }
    return kOk;
}
