#include "aloha/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "json.hpp"

#include "aloha/metrics.hpp"
#include "aloha/qnet.hpp"

namespace aloha {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string lambda_tag(double lambda) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", lambda);
    return buf;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out << text;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

experiment_spec::run_mode parse_run_mode(const std::string& name) {
    if (name == "train") return experiment_spec::run_mode::train;
    if (name == "eval") return experiment_spec::run_mode::eval;
    if (name == "sweep") return experiment_spec::run_mode::sweep;
    if (name == "policy-table") return experiment_spec::run_mode::policy_table;
    throw std::invalid_argument("unknown mode '" + name +
                                "' (expected train, eval, sweep or policy-table)");
}

namespace {

// Snapping to 9 decimals makes range-generated values compare equal to their
// literal spellings (0.2 + 2*0.05 becomes exactly the double of "0.3").
double snap(double x) { return std::round(x * 1e9) / 1e9; }

double parse_double_strict(const std::string& text, const char* what) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string(what) + ": cannot parse '" + text + "'");
    }
    if (pos != text.size())
        throw std::invalid_argument(std::string(what) + ": trailing characters in '" + text + "'");
    if (!std::isfinite(v))
        throw std::invalid_argument(std::string(what) + ": non-finite value '" + text + "'");
    return v;
}

}  // namespace

std::vector<double> parse_lambda_args(const std::vector<std::string>& args) {
    std::vector<double> out;
    for (const std::string& arg : args) {
        const auto c1 = arg.find(':');
        if (c1 == std::string::npos) {
            out.push_back(snap(parse_double_strict(arg, "--lambda")));
            continue;
        }
        const auto c2 = arg.find(':', c1 + 1);
        if (c2 == std::string::npos || arg.find(':', c2 + 1) != std::string::npos)
            throw std::invalid_argument("--lambda range must be start:stop:step, got '" + arg +
                                        "'");
        const double start = parse_double_strict(arg.substr(0, c1), "--lambda range start");
        const double stop =
            parse_double_strict(arg.substr(c1 + 1, c2 - c1 - 1), "--lambda range stop");
        const double step = parse_double_strict(arg.substr(c2 + 1), "--lambda range step");
        if (!(step > 0)) throw std::invalid_argument("--lambda range step must be positive");
        if (stop < start) throw std::invalid_argument("--lambda range stop is below start");
        for (int i = 0;; ++i) {
            const double v = snap(start + i * step);
            if (v > stop + 1e-9) break;
            out.push_back(v);
        }
    }
    return out;
}

void experiment_spec::validate() const {
    if (n_users < 1) throw std::invalid_argument("--users must be at least 1");
    if (slots < 0) throw std::invalid_argument("--slots must be nonnegative");
    if (out_dir.empty()) throw std::invalid_argument("--out must not be empty");

    const std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
    if (uniq.size() != seeds.size())
        throw std::invalid_argument("--seeds contains duplicate entries");

    bool has_eb = false, has_dqn = false;
    for (const std::string& p : policies) {
        if (p == "nseb" || p == "seb")
            has_eb = true;
        else if (p == "dqn")
            has_dqn = true;
        else
            throw std::invalid_argument("unknown policy '" + p +
                                        "' (expected dqn, nseb or seb)");
    }
    if (has_eb && !(sigma > 1))
        throw std::invalid_argument("--sigma must exceed 1 for backoff policies");
    for (double l : lambdas)
        if (!(l > 0) || !std::isfinite(l))
            throw std::invalid_argument("--lambda values must be positive");

    switch (mode) {
    case run_mode::train:
        if (seeds.size() != 1)
            throw std::invalid_argument("train mode needs exactly one master seed");
        if (!policies.empty())
            throw std::invalid_argument(
                "train mode always trains the shared network; --policy does not apply");
        if (!lambdas.empty() && !std::is_sorted(lambdas.begin(), lambdas.end()))
            throw std::invalid_argument("train mode needs an ascending lambda grid");
        break;
    case run_mode::eval:
        if (policies.empty()) throw std::invalid_argument("eval mode needs --policy");
        [[fallthrough]];
    case run_mode::sweep:
        if (lambdas.empty())
            throw std::invalid_argument("eval and sweep modes need --lambda");
        if (seeds.empty()) throw std::invalid_argument("eval and sweep modes need --seeds");
        if (has_dqn && checkpoint.empty())
            throw std::invalid_argument("dqn evaluation needs --checkpoint");
        break;
    case run_mode::policy_table:
        if (checkpoint.empty())
            throw std::invalid_argument("policy-table mode needs --checkpoint");
        if (lambdas.size() != 1)
            throw std::invalid_argument(
                "policy-table mode labels its rows with exactly one --lambda");
        break;
    }
}

namespace {

// Loads networks lazily: a checkpoint path may be a single file (one network
// for every lambda) or a training run's checkpoints/ directory holding
// lambda_<value>.json files.
class checkpoint_store {
public:
    explicit checkpoint_store(fs::path root) : root_(std::move(root)) {}

    const qnetwork* get(double lambda) {
        if (root_.empty())
            throw std::invalid_argument("dqn evaluation needs --checkpoint");
        const std::string key = fs::is_directory(root_) ? lambda_tag(lambda) : std::string();
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            const fs::path file =
                key.empty() ? root_ : root_ / ("lambda_" + key + ".json");
            if (!fs::exists(file))
                throw std::invalid_argument("no checkpoint for lambda " + lambda_tag(lambda) +
                                            ": " + file.string());
            it = cache_.emplace(key, std::make_unique<qnetwork>(load_checkpoint(file))).first;
        }
        return it->second.get();
    }

private:
    fs::path root_;
    std::map<std::string, std::unique_ptr<qnetwork>> cache_;
};

struct pol_desc {
    std::string name;  // "nseb" | "seb" | "dqn"
    double sigma = 0;
};

std::vector<pol_desc> resolve_policy_set(const experiment_spec& spec) {
    std::vector<pol_desc> descs;
    if (!spec.policies.empty()) {
        for (const std::string& name : spec.policies) descs.push_back({name, spec.sigma});
        return descs;
    }
    // standard comparison set for sweeps
    descs = {{"nseb", 1.35}, {"seb", 1.35}, {"nseb", 2.0}, {"seb", 2.0}};
    if (!spec.checkpoint.empty()) descs.push_back({"dqn", 0});
    return descs;
}

policy_spec make_policy_spec(const experiment_spec& spec, const pol_desc& desc,
                             double lambda, checkpoint_store& store) {
    policy_spec ps;
    if (desc.name == "dqn") {
        ps.k = policy_spec::kind::dqn;
        ps.beta = spec.schedule.beta_max;
        ps.net = store.get(lambda);
    } else if (desc.name == "nseb") {
        ps.k = policy_spec::kind::nseb;
        ps.sigma = desc.sigma;
        ps.nseb_reset = spec.nseb_reset;
    } else {
        ps.k = policy_spec::kind::seb;
        ps.sigma = desc.sigma;
        ps.seb_reset = spec.seb_reset;
    }
    return ps;
}

long default_slots(const pol_desc& desc) { return desc.name == "dqn" ? 30000 : 100000; }

const char* reset_name(backoff_reset r) {
    switch (r) {
        case backoff_reset::on_feedback_success: return "on_feedback_success";
        case backoff_reset::on_own_success: return "on_own_success";
        case backoff_reset::step_down_on_feedback: return "step_down_on_feedback";
    }
    return "unknown";
}

nlohmann::json schedule_json(const train_schedule& s) {
    nlohmann::json j;
    j["gamma"] = s.gamma;
    j["alpha_init"] = s.alpha_init;
    j["alpha_decay_base"] = s.alpha_decay_base;
    j["alpha_floor"] = s.alpha_floor;
    j["alpha_update_interval"] = s.alpha_update_interval;
    j["alpha_transfer"] = s.alpha_transfer;
    j["alpha_settle"] = s.alpha_settle;
    j["settle_tail_slots"] = s.settle_tail_slots;
    j["peak_tail_slots"] = s.peak_tail_slots;
    j["settle_lambda_min"] = s.settle_lambda_min;
    j["peak_lambda_min"] = s.peak_lambda_min;
    j["beta_start"] = s.beta_start;
    j["beta_max"] = s.beta_max;
    j["train_slots_per_lambda"] = s.train_slots_per_lambda;
    j["target_sync_interval"] = s.target_sync_interval;
    j["eval_slots"] = s.eval_slots;
    j["replay_capacity"] = s.replay_capacity;
    j["batch_size"] = s.batch_size;
    j["layers"] = s.layers;
    j["lambda_grid"] = s.lambda_grid;
    return j;
}

void run_eval_sweep(const experiment_spec& spec) {
    checkpoint_store store(spec.checkpoint);
    const std::vector<pol_desc> descs = resolve_policy_set(spec);

    std::vector<sweep_unit> units;
    for (const pol_desc& desc : descs)
        for (double lambda : spec.lambdas)
            for (std::uint64_t seed : spec.seeds) {
                sweep_unit u;
                u.policy = make_policy_spec(spec, desc, lambda, store);
                u.lambda = lambda;
                u.n_users = spec.n_users;
                u.slots = spec.slots > 0 ? spec.slots : default_slots(desc);
                u.seed = seed;
                units.push_back(std::move(u));
            }

    const std::vector<metrics_log> logs = run_sweep(units, spec.execution);

    std::string curves = "policy,lambda,seed,throughput,system_aop\n";
    std::string boxplot =
        "policy,lambda,seed,user,p25,p50,p75,whisker_low,whisker_high,mean\n";
    nlohmann::json results = nlohmann::json::array();
    for (std::size_t i = 0; i < units.size(); ++i) {
        const sweep_unit& u = units[i];
        const metrics_log& log = logs[i];
        const std::string pol_id = u.policy.id();
        const double tput = throughput(log);
        const aop_summary aop = average_aop(log);

        curves += pol_id + "," + format_double(u.lambda) + "," + std::to_string(u.seed) +
                  "," + format_double(tput) + "," + format_double(aop.system) + "\n";

        const auto stats = per_user_aop_stats(log);
        for (int n = 0; n < spec.n_users; ++n) {
            const percentile_summary& s = stats[static_cast<std::size_t>(n)];
            boxplot += pol_id + "," + format_double(u.lambda) + "," +
                       std::to_string(u.seed) + "," + std::to_string(n) + "," +
                       format_double(s.p25) + "," + format_double(s.p50) + "," +
                       format_double(s.p75) + "," + format_double(s.whisker_low) + "," +
                       format_double(s.whisker_high) + "," + format_double(s.mean) + "\n";
        }

        nlohmann::json row;
        row["policy"] = pol_id;
        row["lambda"] = u.lambda;
        row["seed"] = u.seed;
        row["slots"] = u.slots;
        row["throughput"] = tput;
        row["per_user_throughput"] = per_user_throughput(log);
        row["per_user_aop"] = aop.per_user;
        row["system_aop"] = aop.system;
        row["user_mean_aop"] = aop.user_mean;
        row["discard_rate"] = discard_rate(log);
        results.push_back(std::move(row));
    }

    // seed-mean aggregates, in (policy, lambda) declaration order
    nlohmann::json aggregates = nlohmann::json::array();
    std::size_t i = 0;
    for ([[maybe_unused]] const pol_desc& desc : descs)
        for (double lambda : spec.lambdas) {
            double tput_sum = 0, aop_sum = 0;
            std::string pol_id;
            for (std::size_t s = 0; s < spec.seeds.size(); ++s, ++i) {
                tput_sum += results[i]["throughput"].get<double>();
                aop_sum += results[i]["system_aop"].get<double>();
                pol_id = results[i]["policy"].get<std::string>();
            }
            nlohmann::json row;
            row["policy"] = pol_id;
            row["lambda"] = lambda;
            row["mean_throughput"] = tput_sum / static_cast<double>(spec.seeds.size());
            row["mean_system_aop"] = aop_sum / static_cast<double>(spec.seeds.size());
            aggregates.push_back(std::move(row));
        }

    nlohmann::json summary;
    summary["mode"] = spec.mode == experiment_spec::run_mode::eval ? "eval" : "sweep";
    summary["n_users"] = spec.n_users;
    summary["nseb_reset"] = reset_name(spec.nseb_reset);
    summary["seb_reset"] = reset_name(spec.seb_reset);
    summary["results"] = std::move(results);
    summary["aggregates"] = std::move(aggregates);
    summary["run_complete"] = true;

    write_text_atomic(spec.out_dir / "curves.csv", curves);
    write_text_atomic(spec.out_dir / "boxplot.csv", boxplot);
    write_text_atomic(spec.out_dir / "summary.json", summary.dump(2) + "\n");
}

void run_train(const experiment_spec& spec) {
    train_schedule sched = spec.schedule;
    if (!spec.lambdas.empty()) sched.lambda_grid = spec.lambdas;
    if (spec.slots > 0) sched.train_slots_per_lambda = spec.slots;
    sched.validate();
    const std::uint64_t master_seed = spec.seeds.front();

    fs::create_directories(spec.out_dir / "checkpoints");

    std::string trace = "global_slot,phase_slot,lambda,alpha,beta,loss,reward,transitions\n";
    const trace_sink sink = [&trace](const train_trace_row& r) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%ld,%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n",
                      r.global_slot, r.phase_slot, r.lambda, r.alpha, r.beta, r.loss,
                      r.reward, r.transitions);
        trace += buf;
    };

    const std::vector<phase_result> phases =
        transfer_sweep(sched, spec.n_users, master_seed, sink);

    std::string table_csv = "lambda,state_label,transmit_prob\n";
    nlohmann::json phases_json = nlohmann::json::array();
    const auto& labels = policy_table::labels();
    for (const phase_result& phase : phases) {
        const std::string file = "lambda_" + lambda_tag(phase.lambda) + ".json";
        write_text_atomic(spec.out_dir / "checkpoints" / file,
                          checkpoint_string(phase.checkpoint));

        nlohmann::json table_json;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            table_csv += format_double(phase.lambda) + "," + labels[j] + "," +
                         format_double(phase.table.transmit_prob[j]) + "\n";
            table_json[labels[j]] = phase.table.transmit_prob[j];
        }
        nlohmann::json row;
        row["lambda"] = phase.lambda;
        row["checkpoint"] = "checkpoints/" + file;
        row["policy_table"] = std::move(table_json);
        phases_json.push_back(std::move(row));
    }

    nlohmann::json summary;
    summary["mode"] = "train";
    summary["n_users"] = spec.n_users;
    summary["master_seed"] = master_seed;
    summary["schedule"] = schedule_json(sched);
    summary["phases"] = std::move(phases_json);
    summary["run_complete"] = true;

    write_text_atomic(spec.out_dir / "policy_table.csv", table_csv);
    write_text_atomic(spec.out_dir / "trace.csv", trace);
    write_text_atomic(spec.out_dir / "summary.json", summary.dump(2) + "\n");
}

void run_policy_table(const experiment_spec& spec) {
    if (fs::is_directory(spec.checkpoint))
        throw std::invalid_argument(
            "policy-table mode needs a checkpoint file, not a directory");
    const qnetwork net = load_checkpoint(spec.checkpoint);
    const policy_table table = extract_policy_table(net, spec.schedule.beta_max);
    const double lambda = spec.lambdas.front();

    std::string table_csv = "lambda,state_label,transmit_prob\n";
    nlohmann::json table_json;
    const auto& labels = policy_table::labels();
    for (std::size_t j = 0; j < labels.size(); ++j) {
        table_csv += format_double(lambda) + "," + labels[j] + "," +
                     format_double(table.transmit_prob[j]) + "\n";
        table_json[labels[j]] = table.transmit_prob[j];
    }

    nlohmann::json summary;
    summary["mode"] = "policy-table";
    summary["lambda"] = lambda;
    summary["beta"] = spec.schedule.beta_max;
    summary["checkpoint"] = spec.checkpoint.string();
    summary["policy_table"] = std::move(table_json);
    summary["run_complete"] = true;

    write_text_atomic(spec.out_dir / "policy_table.csv", table_csv);
    write_text_atomic(spec.out_dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace

int run(const experiment_spec& spec) {
    spec.validate();
    fs::create_directories(spec.out_dir);
    switch (spec.mode) {
    case experiment_spec::run_mode::train:
        run_train(spec);
        break;
    case experiment_spec::run_mode::eval:
    case experiment_spec::run_mode::sweep:
        run_eval_sweep(spec);
        break;
    case experiment_spec::run_mode::policy_table:
        run_policy_table(spec);
        break;
    }
    return 0;
}

}  // namespace aloha
