#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsattr/players.hpp"
#include "tsattr/types.hpp"

namespace tsattr {

// Black-box scalar predictor f: R^{T x D} -> R with batched evaluation and a
// forward-call counter for budget accounting.
class Predictor {
public:
    virtual ~Predictor() = default;

    // One output per window, in order. Outputs are validated to be finite.
    std::vector<double> evaluate(std::span<const Window> windows);
    double evaluate_one(const Window& window);

    long long forward_calls() const noexcept { return calls_; }
    void reset_forward_calls() noexcept { calls_ = 0; }

    virtual bool concurrency_safe() const noexcept { return true; }

protected:
    virtual std::vector<double> do_evaluate(std::span<const Window> windows) = 0;

private:
    long long calls_ = 0;
};

// f(X) = sum_{t,d} W[t,d] * X[t,d].
class LinearPredictor : public Predictor {
public:
    explicit LinearPredictor(Eigen::MatrixXd weights);
    const Eigen::MatrixXd& weights() const { return weights_; }

protected:
    std::vector<double> do_evaluate(std::span<const Window> windows) override;

private:
    Eigen::MatrixXd weights_;
};

// Player-mean feature of one player: g_p(X) = mean over the player's cells of
// (X[t,d] - mu[d]). Mean-replacement masking of the player drives g_p to
// exactly zero.
double player_mean_feature(const Window& window, const Player& player,
                           const Eigen::VectorXd& mu);

// f(X) = sum_p w_p * g_p(X) over a fixed reference player set.
class PlayerAdditivePredictor : public Predictor {
public:
    PlayerAdditivePredictor(Eigen::VectorXd weights, std::shared_ptr<const PlayerSet> players,
                            Eigen::VectorXd mu);
    const Eigen::VectorXd& player_weights() const { return weights_; }
    const PlayerSet& reference_players() const { return *players_; }
    const Eigen::VectorXd& mu() const { return mu_; }

protected:
    std::vector<double> do_evaluate(std::span<const Window> windows) override;

private:
    Eigen::VectorXd weights_;
    std::shared_ptr<const PlayerSet> players_;
    Eigen::VectorXd mu_;
};

struct PlayerPairTerm {
    int p = 0;
    int q = 0;
    double coefficient = 0.0;
};

// f(X) = sum_p w_p * g_p(X) + sum_{(p,q)} c_pq * g_p(X) * g_q(X).
class PlayerInteractionPredictor : public Predictor {
public:
    PlayerInteractionPredictor(Eigen::VectorXd linear_weights,
                               std::vector<PlayerPairTerm> pairs,
                               std::shared_ptr<const PlayerSet> players, Eigen::VectorXd mu);

protected:
    std::vector<double> do_evaluate(std::span<const Window> windows) override;

private:
    Eigen::VectorXd weights_;
    std::vector<PlayerPairTerm> pairs_;
    std::shared_ptr<const PlayerSet> players_;
    Eigen::VectorXd mu_;
};

struct ExternalPredictorOptions {
    std::vector<std::string> command;  // argv, argv[0] resolved via PATH
    std::vector<std::pair<std::string, std::string>> env;
    double timeout_seconds = 30.0;
    bool concurrency_safe = false;
};

// Bridges to a child process over newline-delimited JSON on stdin/stdout:
//   request  {"id": n, "windows": [[[row floats] x T] x N]}
//   reply    {"id": n, "outputs": [floats x N]}
// The id must echo. A dead child is restarted once per request before the
// evaluation fails; timeouts and malformed replies fail immediately.
class ExternalPredictor : public Predictor {
public:
    explicit ExternalPredictor(ExternalPredictorOptions options);
    ~ExternalPredictor() override;

    ExternalPredictor(const ExternalPredictor&) = delete;
    ExternalPredictor& operator=(const ExternalPredictor&) = delete;

    bool concurrency_safe() const noexcept override { return options_.concurrency_safe; }

protected:
    std::vector<double> do_evaluate(std::span<const Window> windows) override;

private:
    void start();
    void stop() noexcept;
    std::vector<double> roundtrip(std::span<const Window> windows);
    std::string read_reply_line(double timeout_seconds);

    ExternalPredictorOptions options_;
    int child_pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string read_buffer_;
    std::uint64_t next_id_ = 0;
};

}  // namespace tsattr
