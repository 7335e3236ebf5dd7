#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aloha/policy.hpp"
#include "aloha/sweep.hpp"
#include "aloha/train.hpp"

namespace aloha {

// A fully described experiment, assembled from CLI flags and/or a config file.
struct experiment_spec {
    enum class run_mode { train, eval, sweep, policy_table };

    run_mode mode = run_mode::eval;
    // Policy names: "dqn", "nseb", "seb". EB entries use `sigma`. Empty list in
    // sweep mode selects the standard comparison set: nSEB and SEB at both
    // sigma 1.35 and 2, plus the DQN when a checkpoint is supplied.
    std::vector<std::string> policies;
    double sigma = 2.0;
    std::vector<double> lambdas;
    int n_users = 10;
    // 0 picks the per-policy default: 100,000 slots for EB baselines and
    // 30,000 for the DQN. In train mode this overrides the slots per phase.
    long slots = 0;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path out_dir = "out";
    std::filesystem::path checkpoint;  // file, or the checkpoints/ dir of a training run
    backoff_reset nseb_reset = backoff_reset::on_own_success;
    backoff_reset seb_reset = backoff_reset::step_down_on_feedback;
    train_schedule schedule;
    exec_mode execution = exec_mode::openmp;

    void validate() const;  // throws std::invalid_argument with a field diagnostic
};

experiment_spec::run_mode parse_run_mode(const std::string& name);

// Expands "a:b:step" into an inclusive ascending list; a plain number becomes
// a single value. Values are snapped to 9 decimals so grid points compare
// equal to their literal spellings.
std::vector<double> parse_lambda_args(const std::vector<std::string>& args);

// Executes the experiment and writes its artifacts under spec.out_dir:
//   summary.json           every mode
//   curves.csv             eval/sweep: policy,lambda,seed,throughput,system_aop
//   boxplot.csv            eval/sweep: per-user percentile rows
//   policy_table.csv       train/policy-table: lambda,state_label,transmit_prob
//   trace.csv              train: per-slot learning trace
//   checkpoints/*.json     train: one network per lambda
// Files are written to a temporary name and renamed into place, so a crash
// leaves stale targets untouched and flags partial output with a .tmp suffix.
// Returns the process exit status (0 on success).
int run(const experiment_spec& spec);

// Formatting helpers shared by the artifact writers and their tests.
std::string format_double(double v);     // 17 significant digits
std::string lambda_tag(double lambda);   // short spelling used in file names
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace aloha
