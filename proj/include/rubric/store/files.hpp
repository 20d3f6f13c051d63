#pragma once

#include "rubric/error.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace rubric::store {

namespace fs = std::filesystem;

// Called after the temporary file is durable and before it is renamed over
// the target. Tests throw from it to simulate a crash at that point.
using FaultHook = std::function<void(const fs::path& target)>;

inline std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoFailure, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoFailure, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace detail {

inline void write_all(int fd, const std::uint8_t* data, std::size_t size, const fs::path& path) {
    while (size > 0) {
        const auto n = ::write(fd, data, size);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw Error(Errc::IoFailure, "write failed for " + path.string() + ": " + std::strerror(errno));
        }
        data += n;
        size -= static_cast<std::size_t>(n);
    }
}

inline void fsync_dir(const fs::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
}

}  // namespace detail

// Write-to-temp, fsync, rename. Readers see either the old or the new file.
inline void atomic_write(const fs::path& path, std::span<const std::uint8_t> bytes, const FaultHook& hook = {}) {
    static std::atomic<std::uint64_t> counter{0};
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp-" + std::to_string(::getpid()) + "-" +
                                std::to_string(counter++));
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) {
        throw Error(Errc::IoFailure, "cannot create " + tmp.string() + ": " + std::strerror(errno));
    }
    try {
        detail::write_all(fd, bytes.data(), bytes.size(), tmp);
        if (::fsync(fd) != 0) {
            throw Error(Errc::IoFailure, "fsync failed for " + tmp.string());
        }
    } catch (...) {
        ::close(fd);
        fs::remove(tmp, ec);
        throw;
    }
    ::close(fd);
    if (hook) {
        hook(path);
    }
    if (::rename(tmp.c_str(), path.c_str()) != 0) {
        const std::string reason = std::strerror(errno);
        fs::remove(tmp, ec);
        throw Error(Errc::IoFailure, "rename to " + path.string() + " failed: " + reason);
    }
    detail::fsync_dir(dir);
}

inline void atomic_write(const fs::path& path, std::string_view text, const FaultHook& hook = {}) {
    atomic_write(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), hook);
}

// Advisory exclusive lock on a lock file (flock). Locks are per open file
// description, so two threads of one process contend like two processes.
class FileLock {
public:
    FileLock(const fs::path& path, std::chrono::milliseconds timeout) : m_path(path) {
        m_fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (m_fd < 0) {
            throw Error(Errc::IoFailure, "cannot open lock " + path.string() + ": " + std::strerror(errno));
        }
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (::flock(m_fd, LOCK_EX | LOCK_NB) != 0) {
            if (errno != EWOULDBLOCK && errno != EINTR) {
                ::close(m_fd);
                throw Error(Errc::IoFailure, "flock failed on " + path.string());
            }
            if (std::chrono::steady_clock::now() >= deadline) {
                ::close(m_fd);
                throw Error(Errc::LockTimeout, "timed out waiting for " + path.string());
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
        }
    }

    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

    ~FileLock() {
        if (m_fd >= 0) {
            ::flock(m_fd, LOCK_UN);
            ::close(m_fd);
        }
    }

private:
    fs::path m_path;
    int m_fd = -1;
};

}  // namespace rubric::store
