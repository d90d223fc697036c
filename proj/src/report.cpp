#include <cstdio>
#include <sstream>

#include "repovul/pipeline.hpp"

namespace repovul {

using nlohmann::json;

namespace {

std::string pct(const json& v) {
  if (v.is_null()) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v.get<double>() * 100.0);
  return buf;
}

std::string fixed4(const json& v) {
  if (v.is_null()) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v.get<double>());
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_report_markdown(const json& report) {
  std::ostringstream md;
  md << "# Evaluation report\n\n";
  md << "Samples: " << report.value("samples", 0) << "\n\n";

  const json& split = report.at("split");
  md << "## Split\n\n";
  md << "Strategy: " << split.value("strategy", "") << ", grouped by patch: "
     << (split.value("group_by_patch", false) ? "yes" : "no") << "\n\n";
  md << "| train | valid | test |\n|---:|---:|---:|\n";
  md << "| " << split.at("sizes").value("train", 0) << " | " << split.at("sizes").value("valid", 0) << " | "
     << split.at("sizes").value("test", 0) << " |\n\n";
  if (split.contains("valid_from")) {
    md << "Validation from " << split.at("valid_from").get<std::string>() << ", test from "
       << split.at("test_from").get<std::string>() << "\n\n";
  }

  md << "## Detection\n\n";
  md << "| scope | detector | strategy | evaluated | errors | TP | FP | TN | FN | precision | recall | F1 | MCC |\n";
  md << "|---|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& row : report.at("detection")) {
    const json& cm = row.at("confusion");
    md << "| " << row.at("scope").get<std::string>() << " | " << row.at("detector").get<std::string>() << " | "
       << row.at("strategy").get<std::string>() << " | " << row.at("evaluated") << " | " << row.at("errors")
       << " | " << cm.at("tp") << " | " << cm.at("fp") << " | " << cm.at("tn") << " | " << cm.at("fn") << " | "
       << pct(row.at("precision")) << " | " << pct(row.at("recall")) << " | " << pct(row.at("f1")) << " | "
       << pct(row.at("mcc")) << " |\n";
  }
  md << "\nValues in percent.\n\n";

  const json& retrieval = report.at("retrieval");
  md << "## Retrieval\n\n";
  md << "Scorer: " << retrieval.value("scorer", "") << ", averaging: " << retrieval.value("averaging", "");
  if (retrieval.contains("trials")) md << ", trials: " << retrieval.at("trials");
  md << "\n\n";
  const bool micro = retrieval.value("averaging", "macro") == "micro";
  md << "| scope | K | Pre@K | Pre@K (capped) | Rec@K |\n|---|---:|---:|---:|---:|\n";
  for (const auto& [scope, summary] : retrieval.at("scopes").items()) {
    for (const auto& r : summary.at("at_k")) {
      md << "| " << scope << " | " << r.at("k") << " | " << pct(r.at(micro ? "precision_micro" : "precision"))
         << " | " << pct(r.at("precision_capped")) << " | " << pct(r.at(micro ? "recall_micro" : "recall"))
         << " |\n";
    }
  }
  md << "\n";

  if (!report.at("per_cwe").empty()) {
    md << "## Per CWE (test split, at most " << report.value("cwe_cap", 0) << " samples per CWE)\n\n";
    md << "| strategy | CWE | samples | detector | correct | F1 |\n|---|---|---:|---|---:|---:|\n";
    for (const auto& row : report.at("per_cwe")) {
      for (const auto& [detector, d] : row.at("detectors").items()) {
        md << "| " << row.at("strategy").get<std::string>() << " | " << row.at("cwe").get<std::string>()
           << (row.value("unknown", false) ? " (absent)" : "") << " | " << row.at("samples") << " | " << detector
           << " | " << d.at("correct") << " | " << pct(d.at("f1")) << " |\n";
      }
    }
    md << "\n";
  }

  if (!report.at("overlap").empty()) {
    md << "## Detector overlap (correct predictions)\n\n";
    md << "| strategy | scope | union | intersection | exclusive |\n|---|---|---:|---:|---|\n";
    for (const auto& row : report.at("overlap")) {
      std::string exclusive;
      for (const auto& [detector, n] : row.at("exclusive").items()) {
        if (!exclusive.empty()) exclusive += ", ";
        exclusive += detector + "=" + n.dump();
      }
      md << "| " << row.at("strategy").get<std::string>() << " | " << row.at("scope").get<std::string>() << " | "
         << row.at("union") << " | " << row.at("intersection") << " | " << exclusive << " |\n";
    }
    md << "\n";
  }
  return md.str();
}

std::string render_cwe_csv(const json& report) {
  std::ostringstream csv;
  csv << "strategy,cwe,unknown,samples,detector,correct,tp,fp,tn,fn,precision,recall,f1,mcc\n";
  for (const auto& row : report.at("per_cwe")) {
    for (const auto& [detector, d] : row.at("detectors").items()) {
      const json& cm = d.at("confusion");
      csv << row.at("strategy").get<std::string>() << ',' << row.at("cwe").get<std::string>() << ','
          << (row.value("unknown", false) ? 1 : 0) << ',' << row.at("samples") << ',' << csv_field(detector) << ','
          << d.at("correct") << ',' << cm.at("tp") << ',' << cm.at("fp") << ',' << cm.at("tn") << ','
          << cm.at("fn") << ',' << fixed4(d.at("precision")) << ',' << fixed4(d.at("recall")) << ','
          << fixed4(d.at("f1")) << ',' << fixed4(d.at("mcc")) << '\n';
    }
  }
  return csv.str();
}

std::string render_overlap_csv(const json& report) {
  std::ostringstream csv;
  csv << "strategy,scope,detector,correct,exclusive,union,intersection\n";
  for (const auto& row : report.at("overlap")) {
    for (const auto& [detector, n] : row.at("correct").items()) {
      csv << row.at("strategy").get<std::string>() << ',' << row.at("scope").get<std::string>() << ','
          << csv_field(detector) << ',' << n << ',' << row.at("exclusive").at(detector) << ','
          << row.at("union") << ',' << row.at("intersection") << '\n';
    }
  }
  return csv.str();
}

}  // namespace repovul
