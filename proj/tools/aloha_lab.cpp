// Experiment runner for the slotted-ALOHA random-access lab. Parses flags
// and/or a config file into an experiment description and executes it; see
// aloha/runner.hpp for the artifact layout.
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aloha/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{
        "Slotted-ALOHA random-access lab: exponential-backoff baselines and a "
        "shared DQN transmission policy"};
    app.set_config("--config", "", "Flat key=value file mirroring the flags");
    app.allow_config_extras(false);

    std::string mode;
    std::vector<std::string> policies;
    std::vector<std::string> lambda_args;
    std::string out_dir = "out";
    std::string checkpoint;
    std::string nseb_reset = "own";
    bool serial = false;
    aloha::experiment_spec spec;

    app.add_option("--mode", mode, "train | eval | sweep | policy-table")->required();
    app.add_option("--policy", policies, "dqn | nseb | seb (repeatable)");
    app.add_option("--sigma", spec.sigma, "Backoff factor for EB policies")
        ->capture_default_str();
    app.add_option("--lambda", lambda_args,
                   "Total arrival rate; a value or start:stop:step (repeatable)");
    app.add_option("--users", spec.n_users, "Number of users")->capture_default_str();
    app.add_option("--slots", spec.slots,
                   "Slots per episode, or per training phase in train mode "
                   "(0 = policy default)")
        ->capture_default_str();
    app.add_option("--seeds", spec.seeds,
                   "Seed list (default 1..5 for eval/sweep, 1 for train)");
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--checkpoint", checkpoint,
                   "Checkpoint file, or the checkpoints/ directory of a training run");
    app.add_option("--nseb-reset", nseb_reset,
                   "nSEB counter recovery rule: own (reset on own success) | "
                   "feedback (reset on any feedback 1) | step (decrement on feedback 1)")
        ->capture_default_str();
    std::string seb_reset = "step";
    app.add_option("--seb-reset", seb_reset,
                   "SEB counter recovery rule: step | feedback | own")
        ->capture_default_str();
    app.add_flag("--serial", serial, "Run evaluation units on a single thread");

    CLI11_PARSE(app, argc, argv);

    try {
        spec.mode = aloha::parse_run_mode(mode);
        spec.policies = policies;
        spec.lambdas = aloha::parse_lambda_args(lambda_args);
        spec.out_dir = out_dir;
        spec.checkpoint = checkpoint;
        const auto to_reset = [](const std::string& v, const char* flag) {
            if (v == "feedback") return aloha::backoff_reset::on_feedback_success;
            if (v == "own") return aloha::backoff_reset::on_own_success;
            if (v == "step") return aloha::backoff_reset::step_down_on_feedback;
            throw std::invalid_argument(std::string(flag) +
                                        " must be 'feedback', 'own' or 'step'");
        };
        spec.nseb_reset = to_reset(nseb_reset, "--nseb-reset");
        spec.seb_reset = to_reset(seb_reset, "--seb-reset");
        if (serial) spec.execution = aloha::exec_mode::serial;
        if (spec.seeds.empty())
            spec.seeds = spec.mode == aloha::experiment_spec::run_mode::train
                             ? std::vector<std::uint64_t>{1}
                             : std::vector<std::uint64_t>{1, 2, 3, 4, 5};
        return aloha::run(spec);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
