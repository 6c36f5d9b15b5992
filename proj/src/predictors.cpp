#include "tsattr/predictors.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <stdexcept>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

namespace tsattr {

namespace {

// Signals a dead child so the caller can run the restart-once policy.
struct ChildExited : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void ignore_sigpipe_once() {
    static const int installed = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return 0;
    }();
    (void)installed;
}

}  // namespace

std::vector<double> Predictor::evaluate(std::span<const Window> windows) {
    calls_ += static_cast<long long>(windows.size());
    std::vector<double> outputs = do_evaluate(windows);
    if (outputs.size() != windows.size()) {
        throw std::runtime_error("predictor returned " + std::to_string(outputs.size()) +
                                 " outputs for " + std::to_string(windows.size()) + " windows");
    }
    for (double v : outputs) {
        if (!std::isfinite(v)) throw std::runtime_error("predictor returned non-finite output");
    }
    return outputs;
}

double Predictor::evaluate_one(const Window& window) {
    return evaluate(std::span<const Window>(&window, 1)).front();
}

LinearPredictor::LinearPredictor(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
    if (weights_.size() == 0) throw std::invalid_argument("LinearPredictor: empty weights");
}

std::vector<double> LinearPredictor::do_evaluate(std::span<const Window> windows) {
    std::vector<double> out;
    out.reserve(windows.size());
    for (const auto& w : windows) {
        if (w.rows() != weights_.rows() || w.cols() != weights_.cols()) {
            throw std::invalid_argument("LinearPredictor: window shape mismatch");
        }
        out.push_back((weights_.array() * w.array()).sum());
    }
    return out;
}

double player_mean_feature(const Window& window, const Player& player,
                           const Eigen::VectorXd& mu) {
    double sum = 0.0;
    for (int t = player.segment.start; t < player.segment.end; ++t) {
        for (int d : player.variables) {
            sum += window(t - 1, d - 1) - mu(d - 1);
        }
    }
    return sum / player.cell_count();
}

namespace {

void check_player_window(const Window& w, const PlayerSet& ps, const Eigen::VectorXd& mu,
                         const char* who) {
    if (w.rows() != ps.T || w.cols() != ps.D) {
        throw std::invalid_argument(std::string(who) + ": window shape mismatch");
    }
    if (mu.size() != ps.D) {
        throw std::invalid_argument(std::string(who) + ": mu length mismatch");
    }
}

Eigen::VectorXd all_player_features(const Window& w, const PlayerSet& ps,
                                    const Eigen::VectorXd& mu) {
    Eigen::VectorXd g(ps.size());
    for (int p = 0; p < ps.size(); ++p) {
        g(p) = player_mean_feature(w, ps.players[static_cast<std::size_t>(p)], mu);
    }
    return g;
}

}  // namespace

PlayerAdditivePredictor::PlayerAdditivePredictor(Eigen::VectorXd weights,
                                                 std::shared_ptr<const PlayerSet> players,
                                                 Eigen::VectorXd mu)
    : weights_(std::move(weights)), players_(std::move(players)), mu_(std::move(mu)) {
    if (!players_) throw std::invalid_argument("PlayerAdditivePredictor: null player set");
    if (weights_.size() != players_->size()) {
        throw std::invalid_argument("PlayerAdditivePredictor: one weight per player required");
    }
}

std::vector<double> PlayerAdditivePredictor::do_evaluate(std::span<const Window> windows) {
    std::vector<double> out;
    out.reserve(windows.size());
    for (const auto& w : windows) {
        check_player_window(w, *players_, mu_, "PlayerAdditivePredictor");
        out.push_back(weights_.dot(all_player_features(w, *players_, mu_)));
    }
    return out;
}

PlayerInteractionPredictor::PlayerInteractionPredictor(Eigen::VectorXd linear_weights,
                                                       std::vector<PlayerPairTerm> pairs,
                                                       std::shared_ptr<const PlayerSet> players,
                                                       Eigen::VectorXd mu)
    : weights_(std::move(linear_weights)),
      pairs_(std::move(pairs)),
      players_(std::move(players)),
      mu_(std::move(mu)) {
    if (!players_) throw std::invalid_argument("PlayerInteractionPredictor: null player set");
    if (weights_.size() != players_->size()) {
        throw std::invalid_argument("PlayerInteractionPredictor: one weight per player required");
    }
    for (const auto& pair : pairs_) {
        if (pair.p < 0 || pair.p >= players_->size() || pair.q < 0 ||
            pair.q >= players_->size()) {
            throw std::invalid_argument("PlayerInteractionPredictor: pair index out of range");
        }
    }
}

std::vector<double> PlayerInteractionPredictor::do_evaluate(std::span<const Window> windows) {
    std::vector<double> out;
    out.reserve(windows.size());
    for (const auto& w : windows) {
        check_player_window(w, *players_, mu_, "PlayerInteractionPredictor");
        Eigen::VectorXd g = all_player_features(w, *players_, mu_);
        double v = weights_.dot(g);
        for (const auto& pair : pairs_) v += pair.coefficient * g(pair.p) * g(pair.q);
        out.push_back(v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// External subprocess predictor
// ---------------------------------------------------------------------------

ExternalPredictor::ExternalPredictor(ExternalPredictorOptions options)
    : options_(std::move(options)) {
    if (options_.command.empty()) {
        throw std::invalid_argument("ExternalPredictor: empty command line");
    }
    if (!(options_.timeout_seconds > 0.0)) {
        throw std::invalid_argument("ExternalPredictor: timeout must be positive");
    }
}

ExternalPredictor::~ExternalPredictor() { stop(); }

void ExternalPredictor::start() {
    if (child_pid_ >= 0) return;
    ignore_sigpipe_once();

    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
        throw std::runtime_error("ExternalPredictor: pipe() failed");
    }

    pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("ExternalPredictor: fork() failed");
    if (pid == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        close(to_child[0]);
        close(to_child[1]);
        close(from_child[0]);
        close(from_child[1]);
        for (const auto& [key, value] : options_.env) {
            setenv(key.c_str(), value.c_str(), 1);
        }
        std::vector<char*> argv;
        argv.reserve(options_.command.size() + 1);
        for (const auto& arg : options_.command) argv.push_back(const_cast<char*>(arg.c_str()));
        argv.push_back(nullptr);
        execvp(argv[0], argv.data());
        _exit(127);
    }

    close(to_child[0]);
    close(from_child[1]);
    child_pid_ = pid;
    to_child_ = to_child[1];
    from_child_ = from_child[0];
    read_buffer_.clear();
}

void ExternalPredictor::stop() noexcept {
    if (to_child_ >= 0) {
        close(to_child_);
        to_child_ = -1;
    }
    if (from_child_ >= 0) {
        close(from_child_);
        from_child_ = -1;
    }
    if (child_pid_ >= 0) {
        int status = 0;
        // Give the child a moment to exit on closed stdin, then force it.
        for (int i = 0; i < 20; ++i) {
            pid_t r = waitpid(child_pid_, &status, WNOHANG);
            if (r == child_pid_ || r < 0) {
                child_pid_ = -1;
                return;
            }
            usleep(10 * 1000);
        }
        kill(child_pid_, SIGKILL);
        waitpid(child_pid_, &status, 0);
        child_pid_ = -1;
    }
}

std::string ExternalPredictor::read_reply_line(double timeout_seconds) {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::duration_cast<clock::duration>(
                                             std::chrono::duration<double>(timeout_seconds));
    for (;;) {
        auto newline = read_buffer_.find('\n');
        if (newline != std::string::npos) {
            std::string line = read_buffer_.substr(0, newline);
            read_buffer_.erase(0, newline + 1);
            return line;
        }
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - clock::now());
        if (remaining.count() <= 0) {
            throw std::runtime_error("ExternalPredictor: timeout waiting for reply");
        }
        pollfd pfd{from_child_, POLLIN, 0};
        int ready = poll(&pfd, 1, static_cast<int>(remaining.count()));
        if (ready < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error("ExternalPredictor: poll() failed");
        }
        if (ready == 0) {
            throw std::runtime_error("ExternalPredictor: timeout waiting for reply");
        }
        char buf[4096];
        ssize_t n = read(from_child_, buf, sizeof(buf));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error("ExternalPredictor: read() failed");
        }
        if (n == 0) throw ChildExited("ExternalPredictor: child closed its output");
        read_buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

std::vector<double> ExternalPredictor::roundtrip(std::span<const Window> windows) {
    nlohmann::json request;
    const std::uint64_t id = next_id_++;
    request["id"] = id;
    auto batch = nlohmann::json::array();
    for (const auto& w : windows) {
        auto rows = nlohmann::json::array();
        for (Eigen::Index t = 0; t < w.rows(); ++t) {
            auto row = nlohmann::json::array();
            for (Eigen::Index d = 0; d < w.cols(); ++d) row.push_back(w(t, d));
            rows.push_back(std::move(row));
        }
        batch.push_back(std::move(rows));
    }
    request["windows"] = std::move(batch);
    std::string line = request.dump();
    line.push_back('\n');

    std::size_t written = 0;
    while (written < line.size()) {
        ssize_t n = write(to_child_, line.data() + written, line.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            if (errno == EPIPE) throw ChildExited("ExternalPredictor: child closed its input");
            throw std::runtime_error("ExternalPredictor: write() failed");
        }
        written += static_cast<std::size_t>(n);
    }

    std::string reply = read_reply_line(options_.timeout_seconds);
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(reply);
    } catch (const nlohmann::json::exception&) {
        throw std::runtime_error("ExternalPredictor: malformed reply line: " + reply);
    }
    if (!parsed.is_object() || !parsed.contains("id") || !parsed.contains("outputs")) {
        throw std::runtime_error("ExternalPredictor: malformed reply line: " + reply);
    }
    if (parsed.at("id").get<std::uint64_t>() != id) {
        throw std::runtime_error("ExternalPredictor: reply id mismatch");
    }
    auto outputs = parsed.at("outputs").get<std::vector<double>>();
    if (outputs.size() != windows.size()) {
        throw std::runtime_error("ExternalPredictor: reply has wrong output count");
    }
    return outputs;
}

std::vector<double> ExternalPredictor::do_evaluate(std::span<const Window> windows) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        start();
        try {
            return roundtrip(windows);
        } catch (const ChildExited&) {
            stop();
            if (attempt == 1) {
                throw std::runtime_error(
                    "ExternalPredictor: child process exited; restart failed");
            }
        } catch (...) {
            // Timeouts and protocol violations poison the line stream.
            stop();
            throw;
        }
    }
    throw std::runtime_error("ExternalPredictor: unreachable");
}

}  // namespace tsattr
