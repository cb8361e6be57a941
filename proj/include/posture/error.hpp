#pragma once

#include <stdexcept>
#include <string>

namespace posture {

enum class Errc {
    SchemaError,
    InvariantViolation,
    UnsupportedCombination,
    UnknownCipher,
    Unreachable,
    NoChainPresented,
    HandshakeFailure,
    EmptyChain,
    DerSyntaxError,
    UnsatisfiableSpec,
    BandMismatch,
    OutOfRange,
    MalformedVersion,
    DuplicateDomain,
    RegionMismatch,
    EmptyInput,
    UnknownRun,
    ConfigError,
    IoError,
    PortExhaustion,
    ScenarioInvalid,
    Internal,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) {
    throw Error(code, msg);
}

} // namespace posture
