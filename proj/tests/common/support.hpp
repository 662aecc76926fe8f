#pragma once

#include "cpdp/dataset.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <unistd.h>

namespace cpdp::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("cpdp-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Two-class source at (3,3) faulty / (0,0) clean with sigma 1, and a target
// drawn from the same law shifted by (+5,+5).
inline ProjectDataset shifted_pair_source() {
    return synthesize({400, 2, {3.0, 3.0}, {0.0, 0.0}, 1.0, 0.4, 11, "source"});
}

inline ProjectDataset shifted_pair_target() {
    return shifted(synthesize({400, 2, {3.0, 3.0}, {0.0, 0.0}, 1.0, 0.4, 12, "target"}), {5.0, 5.0},
                   "target");
}

// CSV with `faulty` rows labeled 1 followed by `n - faulty` rows labeled 0.
inline std::string labeled_csv(std::size_t n, std::size_t faulty) {
    std::ostringstream out;
    out << "id,loc,wmc,bug\n";
    for (std::size_t i = 0; i < n; ++i) {
        out << "f" << i << ',' << (10 + i % 7) << ',' << (i % 5) << ',' << (i < faulty ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace cpdp::testing
