#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsattr/types.hpp"

namespace tsattr {

// Shortest round-trip decimal representation.
std::string format_double(double v);

// Write-temp-then-rename so rerunning a command never leaves partial files.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_text_file(const std::filesystem::path& path);

// One window per CSV: a header row of variable names, then T rows of D
// comma-separated values, time ascending. Parse errors carry the file, the
// 1-based data row and the 1-based column.
Window read_window_csv(const std::filesystem::path& path,
                       std::vector<std::string>* variable_names_out = nullptr);
void write_window_csv(const std::filesystem::path& path, const Window& window,
                      const std::vector<std::string>& variable_names);

struct DatasetManifest {
    std::vector<std::filesystem::path> windows;
    std::vector<std::filesystem::path> background;  // empty: use `windows`
    std::vector<std::string> variable_names;
    int T = 0;
    int D = 0;
    std::vector<double> labels;  // optional, one per window
};

// Manifest JSON: {"windows": [..], "background": [..], "variable_names": [..],
// "T": int, "D": int, "labels": [..]}; paths resolve relative to the manifest.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct Dataset {
    std::vector<Window> windows;
    std::vector<Window> background;
    std::vector<std::string> variable_names;
    std::vector<double> labels;
    int T = 0;
    int D = 0;
};

// Loads and validates every window named by a manifest: consistent (T, D),
// finite values, header matching the manifest variable names.
Dataset load_dataset(const std::filesystem::path& manifest_path);

}  // namespace tsattr
