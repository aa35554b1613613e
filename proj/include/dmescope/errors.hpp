#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dmescope {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed snapshot, script or app-spec document. `offset` is a byte offset
/// into the input when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error("parse error at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class LoadError : public Error {
public:
    LoadError(const std::string& path, const std::string& what)
        : Error("load error at " + path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// A widget, container or snapshot could not be found.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Caller violated an operation precondition.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Backend or remote environment could not be reached.
class TransportError : public Error {
public:
    using Error::Error;
};

class UnscriptedPrompt : public Error {
public:
    UnscriptedPrompt(const std::string& tag, const std::string& digest)
        : Error("unscripted prompt (tag=" + tag + ", digest=" + digest + ")"), tag_(tag), digest_(digest) {}

    const std::string& tag() const noexcept { return tag_; }
    const std::string& digest() const noexcept { return digest_; }

private:
    std::string tag_;
    std::string digest_;
};

}  // namespace dmescope
