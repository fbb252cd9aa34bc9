#pragma once

// JSON encodings of plans, story state, configs and run artifacts. Every
// top-level document carries "schema_version"; readers reject versions they
// do not know.

#include <string>
#include <vector>

#include <json.hpp>

#include "storyloom/backends.hpp"
#include "storyloom/orchestrator.hpp"
#include "storyloom/story_model.hpp"

namespace loom {

inline constexpr int kSchemaVersion = 1;

using nlohmann::json;

void to_json(json& j, const Premise& v);
void from_json(const json& j, Premise& v);
void to_json(json& j, const CharacterSheet& v);
void from_json(const json& j, CharacterSheet& v);
void to_json(json& j, const OutlineNode& v);
void from_json(const json& j, OutlineNode& v);
void to_json(json& j, const Plan& v);
void from_json(const json& j, Plan& v);
void to_json(json& j, const Fact& v);
void from_json(const json& j, Fact& v);
void to_json(json& j, const AttributeEntry& v);
void from_json(const json& j, AttributeEntry& v);
void to_json(json& j, const Passage& v);
void from_json(const json& j, Passage& v);
void to_json(json& j, const StoryState& v);
void from_json(const json& j, StoryState& v);
void to_json(json& j, const GenParams& v);
void from_json(const json& j, GenParams& v);
void to_json(json& j, const RunConfig& v);
void from_json(const json& j, RunConfig& v);
void to_json(json& j, const CandidateLog& v);
void from_json(const json& j, CandidateLog& v);
void to_json(json& j, const FlagLog& v);
void from_json(const json& j, FlagLog& v);
void to_json(json& j, const StepLog& v);
void from_json(const json& j, StepLog& v);
void to_json(json& j, const AlignmentEvent& v);
void from_json(const json& j, AlignmentEvent& v);
void to_json(json& j, const StoryArtifact& v);
void from_json(const json& j, StoryArtifact& v);
void to_json(json& j, const PromptRecord& v);

// Versioned documents.
json plan_document(const Plan& plan);
Plan plan_from_document(const json& doc);
json artifact_document(const StoryArtifact& artifact);
StoryArtifact artifact_from_document(const json& doc);
json prompts_document(const std::vector<PromptRecord>& records);

// Throws ConfigError when the version field is missing or unknown.
void check_schema_version(const json& doc);

// Stable formatting (two-space indent, trailing newline).
std::string dump(const json& doc);

// Writes through a temporary file and rename. Throws ConfigError on I/O failure.
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace loom
