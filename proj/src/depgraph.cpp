#include "repovul/depgraph.hpp"

#include <algorithm>
#include <set>

#include "repovul/error.hpp"
#include "repovul/lexer.hpp"

namespace repovul {

const FunctionSpan* FunctionIndex::find(const Location& loc) const {
  const auto it = by_file.find(loc.path);
  if (it == by_file.end()) return nullptr;
  const auto& spans = it->second;
  const auto s = std::lower_bound(spans.begin(), spans.end(), loc.start_line,
                                  [](const FunctionSpan& a, std::size_t line) { return a.start_line < line; });
  return s != spans.end() && s->start_line == loc.start_line ? &*s : nullptr;
}

const FunctionSpan* FunctionIndex::enclosing(std::string_view path, std::size_t offset) const {
  const auto it = by_file.find(std::string(path));
  if (it == by_file.end()) return nullptr;
  const auto& spans = it->second;
  auto s = std::upper_bound(spans.begin(), spans.end(), offset,
                            [](std::size_t off, const FunctionSpan& a) { return off < a.start_offset; });
  if (s == spans.begin()) return nullptr;
  --s;
  return offset < s->end_offset ? &*s : nullptr;
}

std::string_view to_string(DepKind kind) { return kind == DepKind::Callee ? "callee" : "caller"; }

DepKind dep_kind_from_string(std::string_view s) {
  if (s == "callee") return DepKind::Callee;
  if (s == "caller") return DepKind::Caller;
  throw Error(ErrorCode::InvalidArgument, "unknown dependency kind: " + std::string(s));
}

std::size_t DependencySet::vul_count() const {
  const auto flagged = [](const Dependency& d) { return d.vul_related; };
  return static_cast<std::size_t>(std::count_if(callees.begin(), callees.end(), flagged) +
                                  std::count_if(callers.begin(), callers.end(), flagged));
}

FunctionIndex index_repo(const RepoSnapshot& snapshot) {
  FunctionIndex index;
  for (const auto& [path, text] : snapshot.files) {
    if (!is_source_path(path)) continue;
    SliceResult sliced = slice_functions(text, path);
    for (const SkipEntry& s : sliced.skipped) index.skipped.push_back({path, s.line, s.reason});
    if (sliced.spans.empty()) continue;

    const std::string masked = mask_source(text, true);
    const LineTable lines(text);
    for (const FunctionSpan& span : sliced.spans) {
      const Location loc{path, span.start_line};
      index.by_name[span.name].push_back(loc);
      std::set<std::string> names;
      const std::string_view body(masked.data() + span.brace_offset, span.end_offset - span.brace_offset);
      const auto toks = lex(body);
      for (std::size_t k = 0; k + 1 < toks.size(); ++k) {
        const Token& t = toks[k];
        if (t.kind != Token::Kind::Identifier || toks[k + 1].text != "(") continue;
        if (is_call_excluded(t.text)) continue;
        if (k > 0 && (toks[k - 1].text == "." || toks[k - 1].text == "->")) continue;
        const std::size_t offset = span.brace_offset + t.offset;
        index.call_sites[std::string(t.text)].push_back({path, lines.line_of(offset), offset});
        names.insert(std::string(t.text));
      }
      index.calls_by_function[loc] = {names.begin(), names.end()};
    }
    index.by_file[path] = std::move(sliced.spans);
  }
  // snapshot.files is path-ordered, so by_name and call_sites are already sorted.
  return index;
}

namespace {

Dependency make_dep(DepKind kind, const FunctionSpan& span) {
  return {kind, span.name, span.body_text, span.path, span.start_line, false};
}

}  // namespace

DependencySet extract_dependencies(const FunctionSample& sample, const FunctionIndex& index) {
  const Location self{sample.span.path, sample.span.start_line};
  const FunctionSpan* own = index.find(self);
  if (own == nullptr || own->name != sample.span.name) {
    throw Error(ErrorCode::UnknownSample, sample.sample_id + " (" + self.path + ":" +
                                              std::to_string(self.start_line) + ")");
  }
  DependencySet deps;
  deps.sample_id = sample.sample_id;

  std::set<Location> callee_locs;
  for (const std::string& name : index.calls_by_function.at(self)) {
    const auto it = index.by_name.find(name);
    if (it == index.by_name.end()) continue;
    for (const Location& loc : it->second) {
      if (loc != self) callee_locs.insert(loc);
    }
  }
  for (const Location& loc : callee_locs) deps.callees.push_back(make_dep(DepKind::Callee, *index.find(loc)));

  std::set<Location> caller_locs;
  if (const auto it = index.call_sites.find(own->name); it != index.call_sites.end()) {
    for (const CallSite& site : it->second) {
      const FunctionSpan* caller = index.enclosing(site.path, site.offset);
      if (caller == nullptr) continue;
      Location loc{caller->path, caller->start_line};
      if (loc != self) caller_locs.insert(std::move(loc));
    }
  }
  for (const Location& loc : caller_locs) deps.callers.push_back(make_dep(DepKind::Caller, *index.find(loc)));
  return deps;
}

DependencySet label_vul_dependencies(DependencySet deps, const PatchRecord& patch,
                                     const FunctionIndex& index) {
  auto mark = [&](Dependency& d) {
    const FunctionSpan* span = index.find(d.location());
    d.vul_related = span != nullptr && patch_touches(patch, d.path, span->start_line, span->end_line);
  };
  std::for_each(deps.callees.begin(), deps.callees.end(), mark);
  std::for_each(deps.callers.begin(), deps.callers.end(), mark);
  return deps;
}

}  // namespace repovul
