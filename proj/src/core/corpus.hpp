#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sparft {

struct Example {
  std::string id;
  std::vector<double> embedding;
  std::uint32_t attempts = 0;
  std::uint32_t successes = 0;
  std::optional<double> difficulty;  // in [0, 100]
  std::map<std::string, std::string> meta;
};

// Ordered, validated collection of examples sharing one embedding dimension.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Example> examples);

  const std::vector<Example>& examples() const noexcept { return examples_; }
  std::size_t size() const noexcept { return examples_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return examples_.empty(); }
  const Example& operator[](std::size_t i) const { return examples_[i]; }

  // Index of the example with this id, if any.
  std::optional<std::size_t> find(const std::string& id) const;

  std::vector<double> difficulties() const;

  // Records attempt counts on example i and derives its difficulty.
  void set_attempts(std::size_t i, std::uint32_t attempts, std::uint32_t successes);

 private:
  std::vector<Example> examples_;
  std::size_t dim_ = 0;
  std::map<std::string, std::size_t> index_;
};

// 100 * (1 - successes / attempts).
double estimate_difficulty(std::uint32_t successes, std::uint32_t attempts);

Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(const std::string& text);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string serialize_corpus(const Corpus& corpus);

struct AttemptRecord {
  std::string id;
  std::uint32_t attempts = 0;
  std::uint32_t successes = 0;
};

std::vector<AttemptRecord> parse_attempts(const std::string& text);

struct AnnotateResult {
  Corpus corpus;
  std::vector<std::string> warnings;
};

// Every corpus id must appear in the log; ids the corpus does not know are
// reported as warnings.
AnnotateResult annotate_difficulty(const Corpus& corpus, const std::vector<AttemptRecord>& log);
AnnotateResult annotate_difficulty(const Corpus& corpus, const std::filesystem::path& attempts_log);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace sparft
