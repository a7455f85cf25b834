#include "qacgen/qacformat.hpp"

#include "qacgen/errors.hpp"
#include "qacgen/util.hpp"

namespace qacgen {

namespace {

std::string normalize_field(std::string_view s, const SerializeOptions& opts) {
  std::string v = flatten_newlines(s);
  if (opts.lowercase) v = to_lower(v);
  return std::string(trim(v));
}

std::string field_after_marker(std::string_view line, std::string_view marker) {
  return std::string(trim(line.substr(marker.size())));
}

}  // namespace

QATriple normalize(const QATriple& t, SerializeOptions opts) {
  return {normalize_field(t.question, opts), normalize_field(t.answer, opts),
          normalize_field(t.context, opts)};
}

QacDocument serialize_qac(const QATriple& triple, SerializeOptions opts) {
  if (auto err = validate(triple)) throw SerializationError("cannot serialize triple: " + *err);
  QATriple n = normalize(triple, opts);
  return {std::string(kQuestionMarker) + " " + n.question + "\n" + kAnswerMarker + " " + n.answer +
          "\n" + kContextMarker + " " + n.context};
}

QATriple parse_qac(const QacDocument& doc) {
  auto lines = split_lines(doc.text);
  if (lines.empty() || !lines[0].starts_with(kQuestionMarker)) {
    throw ParseError("document must begin with 'question:'", 1);
  }
  int answer_line = -1;
  int context_line = -1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int lineno = static_cast<int>(i + 1);
    if (lines[i].starts_with(kQuestionMarker)) {
      throw ParseError("duplicate 'question:' marker", lineno);
    }
    if (lines[i].starts_with(kAnswerMarker)) {
      if (answer_line != -1) throw ParseError("duplicate 'answer:' marker", lineno);
      if (context_line != -1) throw ParseError("'answer:' after 'context:'", lineno);
      answer_line = static_cast<int>(i);
    } else if (lines[i].starts_with(kContextMarker)) {
      if (context_line != -1) throw ParseError("duplicate 'context:' marker", lineno);
      if (answer_line == -1) throw ParseError("'context:' before 'answer:'", lineno);
      context_line = static_cast<int>(i);
    }
  }
  const int end = static_cast<int>(lines.size()) + 1;
  if (answer_line == -1) throw ParseError("missing 'answer:' marker", end);
  if (context_line == -1) throw ParseError("missing 'context:' marker", end);

  auto gather = [&](int first, int last, std::string_view marker, const char* sep) {
    std::vector<std::string> parts{field_after_marker(lines[first], marker)};
    for (int i = first + 1; i < last; ++i) parts.emplace_back(trim(lines[i]));
    return std::string(trim(join(parts, sep)));
  };
  QATriple t;
  t.question = gather(0, answer_line, kQuestionMarker, " ");
  t.answer = gather(answer_line, context_line, kAnswerMarker, " ");
  t.context = gather(context_line, static_cast<int>(lines.size()), kContextMarker, "\n");
  if (t.question.empty()) throw ParseError("empty question", 1);
  if (t.answer.empty()) throw ParseError("empty answer", answer_line + 1);
  if (t.context.empty()) throw ParseError("empty context", context_line + 1);
  return t;
}

std::string qa_prompt(const std::string& question, const std::string& answer,
                      SerializeOptions opts) {
  return std::string(kQuestionMarker) + " " + normalize_field(question, opts) + "\n" +
         kAnswerMarker + " " + normalize_field(answer, opts) + "\n" + kContextMarker;
}

QATriple cast_example(const LabeledExample& ex, const TaskSpec& spec) {
  if (!spec.has_class(ex.label)) {
    throw CastError("label '" + ex.label + "' is not a class of task '" + spec.task_id() + "'");
  }
  const auto& word = spec.verbalize(ex.label);
  if (trim(word).empty()) throw CastError("empty verbalized label for '" + ex.label + "'");
  return {spec.question(), word, ex.text};
}

std::vector<QacDocument> cast_dataset(const FewShotSet& few_shot, const TaskSpec& spec,
                                      SerializeOptions opts) {
  std::vector<QacDocument> docs;
  docs.reserve(few_shot.examples.size());
  for (std::size_t i = 0; i < few_shot.examples.size(); ++i) {
    try {
      docs.push_back(serialize_qac(cast_example(few_shot.examples[i], spec), opts));
    } catch (const Error& e) {
      throw CastError("example " + std::to_string(i) + ": " + e.what());
    }
  }
  return docs;
}

nlohmann::ordered_json IngestResult::stats_json() const {
  nlohmann::ordered_json j;
  j["triples"] = triples.size();
  j["skipped_unanswerable"] = skipped_unanswerable;
  j["rejected"] = rejected.size();
  nlohmann::ordered_json rej = nlohmann::ordered_json::array();
  for (const auto& r : rejected) rej.push_back({{"line", r.line}, {"reason", r.reason}});
  j["rejected_lines"] = rej;
  j["warnings"] = warnings;
  return j;
}

IngestResult ingest_squad(const nlohmann::json& root) {
  IngestResult out;
  auto require = [](const nlohmann::json& node, const char* key, const std::string& path,
                    nlohmann::json::value_t type) -> const nlohmann::json& {
    if (!node.is_object() || !node.contains(key)) {
      throw IngestError("missing '" + std::string(key) + "' at " + path);
    }
    const auto& child = node.at(key);
    if (child.type() != type) {
      throw IngestError("unexpected type for '" + std::string(key) + "' at " + path);
    }
    return child;
  };
  using vt = nlohmann::json::value_t;
  const auto& data = require(root, "data", "$", vt::array);
  int qa_index = 0;
  for (std::size_t a = 0; a < data.size(); ++a) {
    const std::string apath = "$.data[" + std::to_string(a) + "]";
    const auto& paragraphs = require(data[a], "paragraphs", apath, vt::array);
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      const std::string ppath = apath + ".paragraphs[" + std::to_string(p) + "]";
      const auto& context = require(paragraphs[p], "context", ppath, vt::string);
      const auto& qas = require(paragraphs[p], "qas", ppath, vt::array);
      for (std::size_t q = 0; q < qas.size(); ++q) {
        const std::string qpath = ppath + ".qas[" + std::to_string(q) + "]";
        ++qa_index;
        const auto& question = require(qas[q], "question", qpath, vt::string);
        const auto& answers = require(qas[q], "answers", qpath, vt::array);
        if (answers.empty()) {
          ++out.skipped_unanswerable;
          continue;
        }
        const auto& answer = require(answers[0], "text", qpath + ".answers[0]", vt::string);
        QATriple t{question.get<std::string>(), answer.get<std::string>(), context.get<std::string>()};
        if (auto err = validate(t)) {
          out.rejected.push_back({qa_index, qpath + ": " + *err});
          continue;
        }
        out.triples.push_back(std::move(t));
      }
    }
  }
  if (out.triples.empty()) out.warnings.emplace_back("no triples produced");
  return out;
}

IngestResult ingest_canonical(const std::filesystem::path& path) {
  IngestResult out;
  auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int lineno = static_cast<int>(i + 1);
    if (trim(lines[i]).empty()) continue;
    try {
      auto j = nlohmann::json::parse(lines[i]);
      QATriple t{j.at("question").get<std::string>(), j.at("answer").get<std::string>(),
                 j.at("context").get<std::string>()};
      if (auto err = validate(t)) {
        out.rejected.push_back({lineno, *err});
        continue;
      }
      out.triples.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      out.rejected.push_back({lineno, e.what()});
    }
  }
  if (out.triples.empty()) out.warnings.emplace_back("no triples produced");
  return out;
}

std::string canonical_jsonl(std::span<const QATriple> triples) {
  std::string out;
  for (const auto& t : triples) {
    nlohmann::ordered_json j;
    j["question"] = t.question;
    j["answer"] = t.answer;
    j["context"] = t.context;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string write_corpus(std::span<const QacDocument> docs,
                         const std::optional<std::string>& end_of_text) {
  std::string out;
  for (const auto& d : docs) {
    out += d.text;
    out += '\n';
    if (end_of_text) {
      out += *end_of_text;
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

std::vector<QacDocument> read_corpus(std::string_view text,
                                     const std::optional<std::string>& end_of_text) {
  std::vector<QacDocument> docs;
  std::vector<std::string> block;
  auto flush = [&] {
    if (!block.empty() && end_of_text && block.back() == *end_of_text) block.pop_back();
    if (!block.empty()) docs.push_back({join(block, "\n")});
    block.clear();
  };
  for (auto& line : split_lines(text)) {
    if (line.empty()) {
      flush();
    } else {
      block.push_back(std::move(line));
    }
  }
  flush();
  return docs;
}

}  // namespace qacgen
