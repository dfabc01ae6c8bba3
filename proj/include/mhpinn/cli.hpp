#pragma once

#include <string>
#include <vector>

#include "mhpinn/training.hpp"

namespace mhpinn {

/// Entry point behind main(): parses argv and runs one subcommand
/// (gen-ics, train, pca, reference, eval). Returns the process exit code:
/// 0 success, 2 usage errors (unknown flag/subcommand, bad value),
/// 1 runtime failures. Errors print one line to stderr.
int dispatch(int argc, const char* const* argv);

/// Flat JSON key-value config file -> TrainConfig. Unknown keys are errors.
TrainConfig load_train_config(const std::string& path);

/// FNV-1a of the canonical (sorted-key) config serialization.
std::uint64_t config_hash(const std::string& canonical_json);

/// Run metadata written at the end of every subcommand run.
struct RunManifest {
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string version;
    std::string started;
    std::string finished;
    std::vector<std::string> outputs;
};

/// Atomic write (temp file + rename) of the manifest JSON.
void write_manifest(const RunManifest& m, const std::string& path);

}  // namespace mhpinn
