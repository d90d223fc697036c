#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repovul/corpus.hpp"
#include "repovul/depgraph.hpp"
#include "repovul/detection.hpp"
#include "repovul/retrieval.hpp"

namespace repovul {

void to_json(nlohmann::json& j, const FunctionSpan& s);
void from_json(const nlohmann::json& j, FunctionSpan& s);
void to_json(nlohmann::json& j, const FunctionSample& s);
void from_json(const nlohmann::json& j, FunctionSample& s);
void to_json(nlohmann::json& j, const Dependency& d);
void from_json(const nlohmann::json& j, Dependency& d);
void to_json(nlohmann::json& j, const DependencySet& d);
void from_json(const nlohmann::json& j, DependencySet& d);
void to_json(nlohmann::json& j, const RetrievalResult& r);
void from_json(const nlohmann::json& j, RetrievalResult& r);
void to_json(nlohmann::json& j, const DetectionOutcome& o);
void from_json(const nlohmann::json& j, DetectionOutcome& o);

// Every JSONL artifact starts with {"_header":{"artifact":..,"config_hash":..,"format":1}}.
struct ArtifactHeader {
  std::string artifact;
  std::string config_hash;
};

void write_jsonl(const std::filesystem::path& file, const ArtifactHeader& header,
                 const std::vector<nlohmann::json>& records);

// Throws Error{Io} when missing and Error{ArtifactMismatch} when the header
// names another artifact or configuration.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& file, const ArtifactHeader& expected);

void write_text(const std::filesystem::path& file, const std::string& text);
std::string read_text(const std::filesystem::path& file);

}  // namespace repovul
