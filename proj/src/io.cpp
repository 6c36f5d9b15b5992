#include "tsattr/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include <unistd.h>

namespace tsattr {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

}  // namespace

Window read_window_csv(const fs::path& path, std::vector<std::string>* variable_names_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("missing file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument(path.string() + ": empty file, expected a header row");
    }
    auto names = split_csv_line(line);
    const std::size_t d = names.size();
    if (d == 0) throw std::invalid_argument(path.string() + ": empty header row");

    std::vector<std::vector<double>> rows;
    int row_index = 0;
    while (std::getline(in, line)) {
        if (line.empty() && in.eof()) break;
        ++row_index;
        auto fields = split_csv_line(line);
        if (fields.size() != d) {
            throw std::invalid_argument(path.string() + ": row " + std::to_string(row_index) +
                                        ": expected " + std::to_string(d) + " columns, got " +
                                        std::to_string(fields.size()));
        }
        std::vector<double> values(d);
        for (std::size_t c = 0; c < d; ++c) {
            const std::string& f = fields[c];
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(v)) {
                throw std::invalid_argument(path.string() + ": row " + std::to_string(row_index) +
                                            ", column " + std::to_string(c + 1) +
                                            ": non-numeric cell '" + f + "'");
            }
            values[c] = v;
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) {
        throw std::invalid_argument(path.string() + ": no data rows");
    }

    Window w(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t c = 0; c < d; ++c) {
            w(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = rows[t][c];
        }
    }
    if (variable_names_out != nullptr) *variable_names_out = std::move(names);
    return w;
}

void write_window_csv(const fs::path& path, const Window& window,
                      const std::vector<std::string>& variable_names) {
    if (static_cast<Eigen::Index>(variable_names.size()) != window.cols()) {
        throw std::invalid_argument("write_window_csv: variable name count mismatch");
    }
    std::string out;
    for (std::size_t i = 0; i < variable_names.size(); ++i) {
        if (i > 0) out += ',';
        out += variable_names[i];
    }
    out += '\n';
    for (Eigen::Index t = 0; t < window.rows(); ++t) {
        for (Eigen::Index c = 0; c < window.cols(); ++c) {
            if (c > 0) out += ',';
            out += format_double(window(t, c));
        }
        out += '\n';
    }
    atomic_write(path, out);
}

DatasetManifest read_manifest(const fs::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    DatasetManifest m;
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    for (const auto& p : j.at("windows")) {
        m.windows.push_back(base / p.get<std::string>());
    }
    if (j.contains("background")) {
        for (const auto& p : j.at("background")) {
            m.background.push_back(base / p.get<std::string>());
        }
    }
    if (j.contains("variable_names")) {
        m.variable_names = j.at("variable_names").get<std::vector<std::string>>();
    }
    m.T = j.value("T", 0);
    m.D = j.value("D", 0);
    if (j.contains("labels")) m.labels = j.at("labels").get<std::vector<double>>();
    return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
    nlohmann::json j;
    auto windows = nlohmann::json::array();
    for (const auto& p : manifest.windows) windows.push_back(p.filename().string());
    j["windows"] = std::move(windows);
    if (!manifest.background.empty()) {
        auto background = nlohmann::json::array();
        for (const auto& p : manifest.background) background.push_back(p.filename().string());
        j["background"] = std::move(background);
    }
    j["variable_names"] = manifest.variable_names;
    j["T"] = manifest.T;
    j["D"] = manifest.D;
    if (!manifest.labels.empty()) j["labels"] = manifest.labels;
    atomic_write(path, j.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& manifest_path) {
    DatasetManifest m = read_manifest(manifest_path);
    if (m.windows.empty()) {
        throw std::invalid_argument(manifest_path.string() + ": manifest lists no windows");
    }
    if (!m.labels.empty() && m.labels.size() != m.windows.size()) {
        throw std::invalid_argument(manifest_path.string() + ": one label per window required");
    }

    Dataset ds;
    ds.labels = m.labels;

    auto load_one = [&](const fs::path& p) {
        std::vector<std::string> names;
        Window w = read_window_csv(p, &names);
        if (ds.T == 0) {
            ds.T = static_cast<int>(w.rows());
            ds.D = static_cast<int>(w.cols());
            ds.variable_names = names;
        } else if (w.rows() != ds.T || w.cols() != ds.D) {
            throw std::invalid_argument(p.string() + ": window shape " +
                                        std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                                        " differs from dataset shape " + std::to_string(ds.T) +
                                        "x" + std::to_string(ds.D));
        }
        return w;
    };

    for (const auto& p : m.windows) ds.windows.push_back(load_one(p));
    for (const auto& p : m.background) ds.background.push_back(load_one(p));
    if (ds.background.empty()) ds.background = ds.windows;

    if (m.T != 0 && m.T != ds.T) {
        throw std::invalid_argument(manifest_path.string() + ": manifest T=" +
                                    std::to_string(m.T) + " but files have T=" +
                                    std::to_string(ds.T));
    }
    if (m.D != 0 && m.D != ds.D) {
        throw std::invalid_argument(manifest_path.string() + ": manifest D=" +
                                    std::to_string(m.D) + " but files have D=" +
                                    std::to_string(ds.D));
    }
    if (!m.variable_names.empty()) ds.variable_names = m.variable_names;
    return ds;
}

}  // namespace tsattr
