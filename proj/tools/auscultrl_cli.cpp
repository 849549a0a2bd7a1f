// Command-line front end: cohort generation, feature extraction, training,
// cross-validated evaluation, greedy simulation, point histograms and the
// HTTP guidance service.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "auscultrl/auscultrl.hpp"
#include "auscultrl/service.hpp"

namespace {

using namespace auscultrl;

std::string num(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::vector<Examination> cohort_or_default(const std::string& path, std::size_t n, std::uint64_t seed) {
    if (!path.empty()) return load_cohort(path);
    CohortConfig c;
    c.seed = seed;
    return generate_cohort(n, c);
}

AgentKind agent_of(const nlohmann::json& metadata) {
    return metadata.value("agent", "interactive") == "static" ? AgentKind::Static : AgentKind::Interactive;
}

struct ModelChoice {
    QNetwork params;
    AgentKind agent = AgentKind::Interactive;
};

// Without a checkpoint the network is the untrained initialization for `seed`.
ModelChoice model_or_init(const std::string& path, std::uint64_t seed) {
    if (path.empty()) return {init_params(derive_seed(seed, {0x1417})), AgentKind::Interactive};
    auto ck = load_checkpoint(path, default_layer_sizes());
    return {std::move(ck.params), agent_of(ck.metadata)};
}

std::string describe(const Rollout& r) {
    std::string path;
    for (int a : r.actions) {
        if (a >= kPointCount) break;
        if (!path.empty()) path += ',';
        path += std::to_string(a + 1);
    }
    std::string outcome;
    if (r.declared_label)
        outcome = "declare " + std::to_string(*r.declared_label) + (merge_to_alarm(*r.declared_label) ? " (alarm)" : " (not alarm)");
    else
        outcome = "limit reached";
    const bool correct = r.predicted_alarm == merge_to_alarm(r.label);
    return r.exam_id + " label " + std::to_string(r.label) + " path [" + path + "] -> " + outcome + " aps " +
           std::to_string(r.auscultations) + " reward " + num(r.total_reward) + (correct ? " correct" : " wrong");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reinforcement-learning guide for interactive lung auscultation"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "Global random seed")->capture_default_str();

    // cohort
    auto* cohort_cmd = app.add_subcommand("cohort", "Generate a synthetic examination cohort");
    std::size_t cohort_n = 570;
    std::string cohort_out;
    double noise_sigma = CohortConfig{}.noise_sigma;
    cohort_cmd->add_option("--n", cohort_n, "Number of examinations")->capture_default_str();
    cohort_cmd->add_option("--out", cohort_out, "Output cohort file")->required();
    cohort_cmd->add_option("--noise-sigma", noise_sigma, "Observation noise")->capture_default_str();
    cohort_cmd->add_option("--seed", seed, "Random seed");

    // features
    auto* features_cmd = app.add_subcommand("features", "Extract the 8 features from a raster file");
    std::string raster_path;
    double threshold = 0.5;
    features_cmd->add_option("--raster", raster_path, "Raster file")->required();
    features_cmd->add_option("--threshold", threshold, "Event and pathology threshold")->capture_default_str();

    // shared training options
    TrainConfig tcfg;
    std::string cohort_path;
    std::size_t default_n = 570;
    bool use_static = false;
    auto add_train_opts = [&](CLI::App* cmd) {
        cmd->add_option("--episodes", tcfg.episodes, "Training episodes")->capture_default_str();
        cmd->add_option("--gamma", tcfg.gamma, "Discount factor")->capture_default_str();
        cmd->add_option("--lr", tcfg.adam.lr, "Adam learning rate")->capture_default_str();
        cmd->add_option("--batch", tcfg.batch_size, "Replay batch size")->capture_default_str();
        cmd->add_option("--replay", tcfg.replay_capacity, "Replay capacity")->capture_default_str();
        cmd->add_option("--target-sync", tcfg.target_sync_interval, "Target sync interval (updates)")->capture_default_str();
        cmd->add_flag("--static", use_static, "Exhaustive 12-point baseline agent");
    };
    auto add_cohort_opts = [&](CLI::App* cmd) {
        cmd->add_option("--cohort", cohort_path, "Cohort file (default: synthetic cohort from --seed)");
        cmd->add_option("--cohort-size", default_n, "Size of the generated cohort when --cohort is absent")->capture_default_str();
        cmd->add_option("--seed", seed, "Random seed");
    };

    // train
    auto* train_cmd = app.add_subcommand("train", "Train an agent on a cohort");
    std::string ckpt_out, curves_prefix;
    add_train_opts(train_cmd);
    add_cohort_opts(train_cmd);
    train_cmd->add_option("--out", ckpt_out, "Checkpoint output path");
    train_cmd->add_option("--curves", curves_prefix, "Write <prefix>_reward.csv and <prefix>_aps.csv");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Repeated k-fold evaluation");
    std::string model_path, report_out, table_out;
    int folds = 5, repeats = 30;
    add_train_opts(eval_cmd);
    add_cohort_opts(eval_cmd);
    eval_cmd->add_option("--model", model_path, "Score this checkpoint on each test fold instead of training per fold");
    eval_cmd->add_option("--folds", folds, "Folds")->capture_default_str();
    eval_cmd->add_option("--repeats", repeats, "Random repeats")->capture_default_str();
    eval_cmd->add_option("--out", report_out, "Write the report JSON here");
    eval_cmd->add_option("--table", table_out, "Write the per-fold CSV table here");

    // simulate / histogram
    auto* sim_cmd = app.add_subcommand("simulate", "Greedy episodes with per-episode paths");
    auto* hist_cmd = app.add_subcommand("histogram", "Most auscultated points over greedy rollouts");
    std::size_t sim_n = 100;
    for (auto* cmd : {sim_cmd, hist_cmd}) {
        cmd->add_option("--model", model_path, "Checkpoint (default: untrained network from --seed)");
        cmd->add_option("--n", sim_n, "Number of episodes")->capture_default_str();
        add_cohort_opts(cmd);
    }

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP guidance service");
    int port = 8080;
    std::string host = "127.0.0.1";
    std::vector<std::string> model_paths;
    long idle_timeout = 1800;
    serve_cmd->add_option("--port", port, "Listen port")->capture_default_str();
    serve_cmd->add_option("--host", host, "Listen address")->capture_default_str();
    serve_cmd->add_option("--model", model_paths, "Checkpoint(s); the model id is the file stem")->required();
    serve_cmd->add_option("--idle-timeout", idle_timeout, "Session idle timeout in seconds")->capture_default_str();
    serve_cmd->add_option("--seed", seed, "Seed for session ids");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cohort_cmd) {
            CohortConfig c;
            c.seed = seed;
            c.noise_sigma = noise_sigma;
            save_cohort(generate_cohort(cohort_n, c), cohort_out);
            std::cout << "wrote " << cohort_n << " examinations to " << cohort_out << '\n';
        } else if (*features_cmd) {
            const auto f = extract_features(load_raster(raster_path), FeatureConfig{threshold, threshold});
            for (std::size_t i = 0; i < kFeatureCount; ++i) std::cout << (i ? "," : "") << num(f[i]);
            std::cout << '\n';
        } else if (*train_cmd) {
            const auto cohort = cohort_or_default(cohort_path, default_n, seed);
            tcfg.seed = seed;
            const AgentKind kind = use_static ? AgentKind::Static : AgentKind::Interactive;
            AgentTrainConfig ac;
            ac.train = tcfg;
            TrainResult r;
            if (tcfg.episodes == 0) {
                r.params = init_params(derive_seed(seed, {0x1417}), tcfg.layer_sizes);
                r.adam = AdamState::for_params(r.params, tcfg.adam);
            } else {
                r = train_agent(kind, cohort, {}, ac);
            }
            nlohmann::json meta{{"agent", kind == AgentKind::Static ? "static" : "interactive"},
                                {"train", tcfg.to_json()},
                                {"seed", seed},
                                {"cohort", cohort_path.empty() ? "synthetic" : cohort_path},
                                {"cohort_size", cohort.size()},
                                {"updates", r.updates}};
            if (!ckpt_out.empty()) save_checkpoint(r.params, r.adam, meta, ckpt_out);
            if (!curves_prefix.empty())
                write_curves(r.curves, curves_prefix + "_reward.csv", curves_prefix + "_aps.csv");
            double total = 0.0;
            for (double x : r.curves.rewards) total += x;
            std::cout << "episodes " << r.curves.rewards.size() << " updates " << r.updates << " mean_reward "
                      << num(r.curves.rewards.empty() ? 0.0 : total / static_cast<double>(r.curves.rewards.size()))
                      << '\n';
        } else if (*eval_cmd) {
            const auto cohort = cohort_or_default(cohort_path, default_n, seed);
            EvalReport rep;
            if (!model_path.empty()) {
                auto m = model_or_init(model_path, seed);
                rep = cross_validate_model(m.params, cohort, folds, repeats, seed, m.agent);
            } else {
                CvConfig cv;
                cv.folds = folds;
                cv.repeats = repeats;
                cv.seed = seed;
                cv.agent = use_static ? AgentKind::Static : AgentKind::Interactive;
                cv.training.train = tcfg;
                rep = cross_validate(cohort, cv);
            }
            const auto j = report_to_json(rep);
            if (!report_out.empty()) {
                std::ofstream out(report_out);
                out << j.dump(2) << '\n';
            }
            if (!table_out.empty()) write_fold_table(rep, table_out);
            std::cout << j.dump(2) << '\n';
        } else if (*sim_cmd || *hist_cmd) {
            const auto cohort = cohort_or_default(cohort_path, default_n, seed);
            if (cohort.empty()) throw PreconditionError("cohort is empty");
            const auto m = model_or_init(model_path, seed);
            std::vector<Examination> exams;
            for (std::size_t i = 0; i < sim_n; ++i) exams.push_back(cohort[i % cohort.size()]);
            const auto rollouts = greedy_rollouts(m.params, exams, EvalConfig{seed, {}, m.agent});
            if (*sim_cmd) {
                for (std::size_t i = 0; i < rollouts.size(); ++i)
                    std::cout << "episode " << i + 1 << ' ' << describe(rollouts[i]) << '\n';
                const auto rep = report_from_rollouts(rollouts);
                std::cout << "bac " << num(rep.bac) << " mean_aps " << num(rep.mean_aps) << " limit_hits "
                          << rep.limit_hits << '\n';
            } else {
                const auto h = point_histogram(rollouts);
                std::int64_t total = 0;
                std::cout << "point,count\n";
                for (int p = 0; p < kPointCount; ++p) {
                    std::cout << p + 1 << ',' << h[static_cast<std::size_t>(p)] << '\n';
                    total += h[static_cast<std::size_t>(p)];
                }
                std::cout << "total," << total << '\n';
            }
        } else if (*serve_cmd) {
            auto registry = std::make_shared<ModelRegistry>();
            for (const auto& p : model_paths) {
                auto ck = load_checkpoint(p, default_layer_sizes());
                registry->add(std::filesystem::path(p).stem().string(), std::move(ck.params), ck.metadata);
            }
            auto sessions = std::make_shared<SessionManager>(registry, std::chrono::seconds(idle_timeout), seed);
            GuideService service(sessions);
            httplib::Server server;
            service.register_routes(server);
            std::cerr << "listening on " << host << ':' << port << '\n';
            if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
