#include "corpus.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace sparft {

using nlohmann::json;

namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r") == std::string::npos;
}

template <typename Fn>
void for_each_record(const std::string& text, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::Parse, at_line(lineno) + "malformed JSON: " + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::Parse, at_line(lineno) + "record is not a JSON object");
    fn(j, lineno);
  }
}

std::uint32_t count_field(const json& j, const char* key, std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::Parse, at_line(lineno) + "missing '" + key + "'");
  if (!it->is_number_integer() || it->get<std::int64_t>() < 0 ||
      it->get<std::int64_t>() > std::numeric_limits<std::uint32_t>::max())
    fail(ErrorCode::Parse, at_line(lineno) + "'" + key + "' must be a nonnegative integer");
  return it->get<std::uint32_t>();
}

std::string id_field(const json& j, std::size_t lineno) {
  auto it = j.find("id");
  if (it == j.end()) fail(ErrorCode::Parse, at_line(lineno) + "missing 'id'");
  if (!it->is_string() || it->get_ref<const std::string&>().empty())
    fail(ErrorCode::Parse, at_line(lineno) + "'id' must be a non-empty string");
  return it->get<std::string>();
}

}  // namespace

Corpus::Corpus(std::vector<Example> examples) : examples_(std::move(examples)) {
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const Example& ex = examples_[i];
    require(!ex.id.empty(), "example " + std::to_string(i) + " has an empty id");
    if (i == 0) {
      dim_ = ex.embedding.size();
    } else if (ex.embedding.size() != dim_) {
      fail(ErrorCode::DimensionMismatch, "example '" + ex.id + "' has dimension " +
                                             std::to_string(ex.embedding.size()) + ", expected " +
                                             std::to_string(dim_));
    }
    require(ex.successes <= ex.attempts, "example '" + ex.id + "' has successes > attempts");
    if (ex.difficulty)
      require(*ex.difficulty >= 0.0 && *ex.difficulty <= 100.0,
              "example '" + ex.id + "' has difficulty outside [0, 100]");
    if (!index_.emplace(ex.id, i).second)
      fail(ErrorCode::DuplicateId, "duplicate id '" + ex.id + "'");
  }
}

std::optional<std::size_t> Corpus::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> Corpus::difficulties() const {
  std::vector<double> out;
  out.reserve(examples_.size());
  for (const auto& ex : examples_) {
    if (!ex.difficulty) fail(ErrorCode::MissingId, "example '" + ex.id + "' has no difficulty");
    out.push_back(*ex.difficulty);
  }
  return out;
}

void Corpus::set_attempts(std::size_t i, std::uint32_t attempts, std::uint32_t successes) {
  Example& ex = examples_.at(i);
  ex.difficulty = estimate_difficulty(successes, attempts);
  ex.attempts = attempts;
  ex.successes = successes;
}

double estimate_difficulty(std::uint32_t successes, std::uint32_t attempts) {
  require(attempts >= 1, "difficulty is undefined for zero attempts");
  require(successes <= attempts, "successes exceed attempts");
  return 100.0 * (1.0 - static_cast<double>(successes) / static_cast<double>(attempts));
}

Corpus parse_corpus(const std::string& text) {
  std::vector<Example> examples;
  std::size_t dim = 0;
  std::map<std::string, std::size_t> seen;
  for_each_record(text, [&](const json& j, std::size_t lineno) {
    Example ex;
    ex.id = id_field(j, lineno);
    auto emb = j.find("embedding");
    if (emb == j.end() || !emb->is_array() || emb->empty())
      fail(ErrorCode::Parse, at_line(lineno) + "'embedding' must be a non-empty array");
    ex.embedding.reserve(emb->size());
    for (const auto& v : *emb) {
      if (!v.is_number()) fail(ErrorCode::Parse, at_line(lineno) + "non-numeric embedding entry");
      ex.embedding.push_back(v.get<double>());
    }
    if (examples.empty()) {
      dim = ex.embedding.size();
    } else if (ex.embedding.size() != dim) {
      fail(ErrorCode::DimensionMismatch, at_line(lineno) + "embedding dimension " +
                                             std::to_string(ex.embedding.size()) +
                                             " does not match " + std::to_string(dim));
    }
    if (auto meta = j.find("meta"); meta != j.end() && !meta->is_null()) {
      if (!meta->is_object()) fail(ErrorCode::Parse, at_line(lineno) + "'meta' must be an object");
      for (const auto& [k, v] : meta->items()) {
        if (!v.is_string())
          fail(ErrorCode::Parse, at_line(lineno) + "meta value '" + k + "' must be a string");
        ex.meta.emplace(k, v.get<std::string>());
      }
    }
    if (auto d = j.find("difficulty"); d != j.end() && !d->is_null()) {
      if (!d->is_number()) fail(ErrorCode::Parse, at_line(lineno) + "'difficulty' must be a number");
      double v = d->get<double>();
      if (!(v >= 0.0 && v <= 100.0))
        fail(ErrorCode::Parse, at_line(lineno) + "'difficulty' outside [0, 100]");
      ex.difficulty = v;
    }
    if (!seen.emplace(ex.id, lineno).second)
      fail(ErrorCode::DuplicateId, at_line(lineno) + "duplicate id '" + ex.id + "' (first on line " +
                                       std::to_string(seen[ex.id]) + ")");
    examples.push_back(std::move(ex));
  });
  return Corpus(std::move(examples));
}

Corpus load_corpus(const std::filesystem::path& path) { return parse_corpus(read_file(path)); }

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& ex : corpus.examples()) {
    json j;
    j["id"] = ex.id;
    j["embedding"] = ex.embedding;
    j["meta"] = ex.meta;
    if (ex.difficulty) j["difficulty"] = *ex.difficulty;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file(path, serialize_corpus(corpus));
}

std::vector<AttemptRecord> parse_attempts(const std::string& text) {
  std::vector<AttemptRecord> out;
  for_each_record(text, [&](const json& j, std::size_t lineno) {
    AttemptRecord rec;
    rec.id = id_field(j, lineno);
    rec.attempts = count_field(j, "attempts", lineno);
    rec.successes = count_field(j, "successes", lineno);
    if (rec.successes > rec.attempts)
      fail(ErrorCode::Parse, at_line(lineno) + "successes exceed attempts for '" + rec.id + "'");
    out.push_back(std::move(rec));
  });
  return out;
}

AnnotateResult annotate_difficulty(const Corpus& corpus, const std::vector<AttemptRecord>& log) {
  AnnotateResult result{corpus, {}};
  std::vector<bool> covered(corpus.size(), false);
  for (const auto& rec : log) {
    auto idx = corpus.find(rec.id);
    if (!idx) {
      result.warnings.push_back("attempts log references unknown id '" + rec.id + "'");
      continue;
    }
    if (covered[*idx]) fail(ErrorCode::DuplicateId, "attempts log repeats id '" + rec.id + "'");
    if (rec.attempts == 0)
      fail(ErrorCode::InvalidArgument, "id '" + rec.id + "' has zero attempts");
    result.corpus.set_attempts(*idx, rec.attempts, rec.successes);
    covered[*idx] = true;
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!covered[i])
      fail(ErrorCode::MissingId, "attempts log has no entry for id '" + corpus[i].id + "'");
  }
  return result;
}

AnnotateResult annotate_difficulty(const Corpus& corpus, const std::filesystem::path& attempts_log) {
  return annotate_difficulty(corpus, parse_attempts(read_file(attempts_log)));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << bytes;
  if (!out) fail(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

}  // namespace sparft
