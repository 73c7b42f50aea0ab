#pragma once

#include <stdexcept>
#include <string>

namespace surfminer {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct IoFailure : Error {
    explicit IoFailure(const std::string& what) : Error("io failure: " + what) {}
};

struct DuplicateFileId : Error {
    explicit DuplicateFileId(const std::string& id) : Error("duplicate file id: " + id) {}
};

struct ManifestVersionMismatch : Error {
    explicit ManifestVersionMismatch(const std::string& what)
        : Error("manifest version mismatch: " + what) {}
};

struct ChecksumMismatch : Error {
    explicit ChecksumMismatch(const std::string& what) : Error("checksum mismatch: " + what) {}
};

struct EmptyInput : Error {
    explicit EmptyInput(const std::string& what) : Error("empty input: " + what) {}
};

struct EmptyData : Error {
    explicit EmptyData(const std::string& what) : Error("empty data: " + what) {}
};

struct WidthMismatch : Error {
    explicit WidthMismatch(const std::string& what) : Error("width mismatch: " + what) {}
};

struct MissingArtifacts : Error {
    explicit MissingArtifacts(const std::string& what) : Error("missing artifacts: " + what) {}
};

struct NonInteractiveEnvironment : Error {
    NonInteractiveEnvironment() : Error("no interactive terminal available for labeling") {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error("config error: " + what) {}
};

// Raised by the pipeline orchestrator; names the stage that failed.
struct StageFailure : Error {
    std::string stage;
    StageFailure(const std::string& stage_name, const std::string& cause)
        : Error("stage '" + stage_name + "' failed: " + cause), stage(stage_name) {}
};

}  // namespace surfminer
