#pragma once

#include <stdexcept>
#include <string>

namespace finadapt {

// Error categories map onto CLI exit codes: usage -> 1, everything else -> 2.
enum class ErrorKind {
    usage,
    data,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline Error usage_error(const std::string& msg) { return Error(ErrorKind::usage, msg); }
inline Error data_error(const std::string& msg) { return Error(ErrorKind::data, msg); }
inline Error io_error(const std::string& msg) { return Error(ErrorKind::io, msg); }

// Faults raised while reading binary record/checkpoint/dump files. Each fault
// kind is distinguishable so callers and tests can tell them apart.
enum class FileFault {
    bad_magic,
    version_mismatch,
    truncated,
    corrupt,
};

class FileFormatError : public Error {
public:
    FileFormatError(FileFault fault, const std::string& msg)
        : Error(ErrorKind::data, msg), fault_(fault) {}

    FileFault fault() const { return fault_; }

private:
    FileFault fault_;
};

} // namespace finadapt
