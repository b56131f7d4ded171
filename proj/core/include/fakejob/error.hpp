#pragma once

#include <stdexcept>
#include <string>

namespace fakejob {

// Root of every exception thrown by the library. The CLI maps each family
// to a distinct exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t record)
        : Error(what), record_(record) {}

    /// 1-based physical record number (the header is record 1).
    std::size_t record() const noexcept { return record_; }

private:
    std::size_t record_;
};

class DataError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class ContractError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

enum class StoreFailure {
    missing_file,
    malformed_manifest,
    checksum_mismatch,
    layout_mismatch,
    version_mismatch,
    unwritable,
};

class ModelStoreError : public Error {
public:
    ModelStoreError(StoreFailure kind, const std::string& what)
        : Error(what), kind_(kind) {}

    StoreFailure kind() const noexcept { return kind_; }

private:
    StoreFailure kind_;
};

}  // namespace fakejob
