#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

namespace testsupport {

inline std::filesystem::path fixture_path(const std::string& name) {
    return std::filesystem::path(DISTRAG_FIXTURE_DIR) / name;
}

// unique scratch directory under the system temp dir, removed on destruction
class TempDir {
public:
    TempDir() {
        std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() /
                ("distrag-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace testsupport
