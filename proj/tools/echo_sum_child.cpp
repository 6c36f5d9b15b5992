// Reference child for the external-predictor line protocol: reads one JSON
// request per line on stdin and replies with the per-window sum of entries.
// The fault flags exercise the client's timeout, malformed-reply and restart
// handling in the conformance tests.

#include <chrono>
#include <cstring>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

int main(int argc, char** argv) {
    long sleep_ms = 0;
    long malformed_after = 0;  // reply with garbage on the Nth request (1-based)
    long exit_after = 0;       // exit cleanly after N replies
    bool wrong_id = false;     // echo id + 1 instead of id

    for (int i = 1; i < argc; ++i) {
        auto next_long = [&](const char* flag) {
            if (i + 1 >= argc) {
                std::cerr << "echo-sum-child: " << flag << " needs a value\n";
                std::exit(64);
            }
            return std::stol(argv[++i]);
        };
        if (std::strcmp(argv[i], "--sleep-ms") == 0) {
            sleep_ms = next_long("--sleep-ms");
        } else if (std::strcmp(argv[i], "--malformed-after") == 0) {
            malformed_after = next_long("--malformed-after");
        } else if (std::strcmp(argv[i], "--exit-after") == 0) {
            exit_after = next_long("--exit-after");
        } else if (std::strcmp(argv[i], "--wrong-id") == 0) {
            wrong_id = true;
        } else {
            std::cerr << "echo-sum-child: unknown flag " << argv[i] << "\n";
            return 64;
        }
    }

    std::string line;
    long replies = 0;
    while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        nlohmann::json request;
        try {
            request = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            std::cerr << "echo-sum-child: bad request: " << e.what() << "\n";
            return 65;
        }

        if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));

        ++replies;
        if (malformed_after > 0 && replies == malformed_after) {
            std::cout << "this is not json\n" << std::flush;
            continue;
        }

        nlohmann::json reply;
        reply["id"] = wrong_id ? request.at("id").get<std::uint64_t>() + 1
                               : request.at("id").get<std::uint64_t>();
        auto outputs = nlohmann::json::array();
        for (const auto& window : request.at("windows")) {
            double sum = 0.0;
            for (const auto& row : window) {
                for (const auto& v : row) sum += v.get<double>();
            }
            outputs.push_back(sum);
        }
        reply["outputs"] = std::move(outputs);
        std::cout << reply.dump() << "\n" << std::flush;

        if (exit_after > 0 && replies >= exit_after) return 0;
    }
    return 0;
}
