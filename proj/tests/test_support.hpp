#pragma once

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "posture/error.hpp"

namespace posture {

inline std::string data_dir() {
    if (const char* env = std::getenv("POSTURE_AUDIT_HOME")) return env;
#ifdef POSTURE_DATA_DIR
    return POSTURE_DATA_DIR;
#else
    return "data";
#endif
}

// Runs f, which must throw Error; returns its code.
template <typename F>
Errc code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error to be thrown");
    return Errc::Internal;
}

// Self-cleaning scratch directory for file round-trip tests.
class TempDir {
public:
    TempDir() {
        char tmpl[] = "/tmp/posture-test-XXXXXX";
        path_ = mkdtemp(tmpl);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const { return path_ + "/" + name; }

private:
    std::string path_;
};

} // namespace posture
