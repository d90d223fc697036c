#include "repovul/serialize.hpp"

#include <fstream>
#include <sstream>

#include "repovul/error.hpp"

namespace repovul {

using nlohmann::json;

void to_json(json& j, const FunctionSpan& s) {
  j = json{{"name", s.name},
           {"path", s.path},
           {"start_line", s.start_line},
           {"end_line", s.end_line},
           {"signature_text", s.signature_text},
           {"body_text", s.body_text}};
}

void from_json(const json& j, FunctionSpan& s) {
  j.at("name").get_to(s.name);
  j.at("path").get_to(s.path);
  j.at("start_line").get_to(s.start_line);
  j.at("end_line").get_to(s.end_line);
  j.at("signature_text").get_to(s.signature_text);
  j.at("body_text").get_to(s.body_text);
}

void to_json(json& j, const FunctionSample& s) {
  j = json{{"sample_id", s.sample_id},
           {"code", s.code},
           {"label", s.label},
           {"cwe_ids", s.cwe_ids},
           {"origin", {{"patch_id", s.patch_id}, {"span", s.span}}},
           {"commit_timestamp", s.commit_timestamp}};
}

void from_json(const json& j, FunctionSample& s) {
  j.at("sample_id").get_to(s.sample_id);
  j.at("code").get_to(s.code);
  j.at("label").get_to(s.label);
  j.at("cwe_ids").get_to(s.cwe_ids);
  j.at("origin").at("patch_id").get_to(s.patch_id);
  j.at("origin").at("span").get_to(s.span);
  j.at("commit_timestamp").get_to(s.commit_timestamp);
}

void to_json(json& j, const Dependency& d) {
  j = json{{"name", d.name}, {"path", d.path}, {"start_line", d.start_line},
           {"vul_related", d.vul_related}, {"code", d.code}};
}

void from_json(const json& j, Dependency& d) {
  j.at("name").get_to(d.name);
  j.at("path").get_to(d.path);
  j.at("start_line").get_to(d.start_line);
  j.at("vul_related").get_to(d.vul_related);
  j.at("code").get_to(d.code);
}

void to_json(json& j, const DependencySet& d) {
  j = json{{"sample_id", d.sample_id}, {"callees", d.callees}, {"callers", d.callers}};
}

void from_json(const json& j, DependencySet& d) {
  j.at("sample_id").get_to(d.sample_id);
  j.at("callees").get_to(d.callees);
  j.at("callers").get_to(d.callers);
  for (auto& c : d.callees) c.kind = DepKind::Callee;
  for (auto& c : d.callers) c.kind = DepKind::Caller;
}

namespace {

json ranking_json(const Ranking& ranking) {
  json arr = json::array();
  for (const auto& r : ranking) {
    arr.push_back({{"kind", to_string(r.kind)}, {"name", r.name}, {"path", r.path},
                   {"start_line", r.start_line}, {"score", r.score}, {"rank", r.rank}});
  }
  return arr;
}

Ranking ranking_from(const json& arr) {
  Ranking out;
  for (const auto& r : arr) {
    RankedDependency d;
    d.kind = dep_kind_from_string(r.at("kind").get<std::string>());
    r.at("name").get_to(d.name);
    r.at("path").get_to(d.path);
    r.at("start_line").get_to(d.start_line);
    r.at("score").get_to(d.score);
    r.at("rank").get_to(d.rank);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

void to_json(json& j, const RetrievalResult& r) {
  j = json{{"sample_id", r.sample_id}, {"scorer_id", to_string(r.scorer_id)}, {"k", r.k},
           {"ranked", ranking_json(r.ranked())}};
  if (r.no_candidates) j["no_candidates"] = true;
  if (r.scorer_id == ScorerId::Random) {
    json trials = json::array();
    for (const auto& t : r.trials) trials.push_back(ranking_json(t));
    j["trials"] = std::move(trials);
  }
}

void from_json(const json& j, RetrievalResult& r) {
  j.at("sample_id").get_to(r.sample_id);
  r.scorer_id = scorer_id_from_string(j.at("scorer_id").get<std::string>());
  j.at("k").get_to(r.k);
  r.no_candidates = j.value("no_candidates", false);
  r.trials.clear();
  if (j.contains("trials")) {
    for (const auto& t : j.at("trials")) r.trials.push_back(ranking_from(t));
  } else {
    r.trials.push_back(ranking_from(j.at("ranked")));
  }
}

void to_json(json& j, const DetectionOutcome& o) {
  j = json{{"sample_id", o.sample_id}, {"detector_id", o.detector_id}, {"strategy", to_string(o.strategy)},
           {"predicted", o.predicted}, {"score", o.score}};
  if (o.error) j["error"] = *o.error;
}

void from_json(const json& j, DetectionOutcome& o) {
  j.at("sample_id").get_to(o.sample_id);
  j.at("detector_id").get_to(o.detector_id);
  o.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  j.at("predicted").get_to(o.predicted);
  j.at("score").get_to(o.score);
  if (j.contains("error")) o.error = j.at("error").get<std::string>();
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + file.string());
}

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_jsonl(const std::filesystem::path& file, const ArtifactHeader& header,
                 const std::vector<json>& records) {
  std::string text;
  text += json{{"_header", {{"artifact", header.artifact}, {"config_hash", header.config_hash}, {"format", 1}}}}.dump();
  text += '\n';
  for (const auto& r : records) {
    text += r.dump();
    text += '\n';
  }
  write_text(file, text);
}

std::vector<json> read_jsonl(const std::filesystem::path& file, const ArtifactHeader& expected) {
  const std::string text = read_text(file);
  std::istringstream in(text);
  std::string line;
  std::vector<json> records;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Io, file.string() + ": " + e.what());
    }
    if (!header_seen) {
      if (!j.contains("_header")) throw Error(ErrorCode::ArtifactMismatch, file.string() + " has no header");
      const auto& h = j["_header"];
      if (h.value("artifact", "") != expected.artifact) {
        throw Error(ErrorCode::ArtifactMismatch, file.string() + " is not a " + expected.artifact + " artifact");
      }
      if (h.value("config_hash", "") != expected.config_hash) {
        throw Error(ErrorCode::ArtifactMismatch,
                    file.string() + " was produced under a different configuration (" +
                        h.value("config_hash", "") + " != " + expected.config_hash + ")");
      }
      header_seen = true;
      continue;
    }
    records.push_back(std::move(j));
  }
  if (!header_seen) throw Error(ErrorCode::ArtifactMismatch, file.string() + " is empty");
  return records;
}

}  // namespace repovul
