#pragma once

// Predictor selection from a command-line string:
//
//   oracle                 ground-truth oracle
//   oracle:FILE            scripted oracle (see load_oracle_scripts)
//   classical[:k=v,...]    eps, bg, modalities (names joined with '+')
//   neural[:k=v,...]       res, patch, dim, depth, mlp, head, enc, cs, seed,
//                          modalities ('+'-joined or "none"), features (archive dir)
//   remote:COMMAND         child process speaking the line protocol

#include <chrono>
#include <cstdint>
#include <map>
#include <string>

#include "mmms/dataset.hpp"
#include "mmms/eval.hpp"

namespace mmms {

struct PredictorSpec {
  std::string kind;
  std::string argument;  // oracle file or remote command
  std::map<std::string, std::string> options;
};

// Throws ConfigError on unknown kinds or malformed options.
PredictorSpec parse_predictor_spec(const std::string& text);

struct FactoryContext {
  const DatasetManifest* manifest = nullptr;  // supplies default neural modalities
  std::chrono::milliseconds remote_timeout{10'000};
  std::uint64_t seed = 0;
};

PredictorFactory make_predictor_factory(const std::string& spec, const FactoryContext& context);

}  // namespace mmms
