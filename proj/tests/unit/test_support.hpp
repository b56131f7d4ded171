#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "fakejob/ingest.hpp"

namespace fakejob::testing {

inline std::filesystem::path data_dir() { return FAKEJOB_TEST_DATA_DIR; }

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("fakejob_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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

inline ingest::RawPosting posting(std::int64_t id, std::string title, std::string description, int label) {
    ingest::RawPosting p;
    p.job_id = id;
    p.title = std::move(title);
    p.description = std::move(description);
    p.fraudulent = label;
    return p;
}

}  // namespace fakejob::testing
