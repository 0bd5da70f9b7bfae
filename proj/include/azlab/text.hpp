#pragma once

// SQuAD v1.1 loading, vocabulary, offset-tracking tokenization and
// sliding-window featurization of (question, passage) pairs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace azlab {

/// Half-open byte range into a UTF-8 string.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

/// Half-open index interval.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end == begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct SquadAnswer {
  std::string text;
  std::size_t answer_start = 0;  ///< code-point offset, as stored in the JSON
  std::size_t byte_start = 0;    ///< the same offset in bytes of the UTF-8 context
  bool consistent = false;       ///< context[byte_start, +len(text)) == text
};

struct SquadExample {
  std::string qas_id;
  std::string question;
  std::string context;
  std::vector<SquadAnswer> answers;

  /// Usable as a training example: has a first answer that matches the context.
  bool trainable() const { return !answers.empty() && answers.front().consistent; }
};

/// Parses a SQuAD v1.1 document (data → paragraphs → qas → answers).
/// Throws std::invalid_argument naming the JSON path of the offending node.
std::vector<SquadExample> load_squad(const nlohmann::json& document);
std::vector<SquadExample> load_squad_file(const std::filesystem::path& path);

/// Byte offset of the `code_point`-th code point of `text` (text.size() if past the end).
std::size_t utf8_byte_offset(std::string_view text, std::size_t code_point);

class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kCls = 2;
  static constexpr std::size_t kSep = 3;
  static constexpr std::size_t kNumReserved = 4;

  /// Reserved tokens only.
  Vocab();
  /// Rebuilds from an id-ordered token list whose first entries are the reserved tokens.
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::size_t id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  void add(std::string token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// A raw word piece with its byte span (before vocabulary lookup).
struct Word {
  std::string text;
  CharSpan span;
};

/// Splits on ASCII whitespace; every ASCII punctuation character is its own
/// word. Spans cover every non-whitespace byte exactly once.
std::vector<Word> split_words(std::string_view text, bool lowercase = true);

/// Most frequent words first, ties broken lexicographically; at most
/// `max_size` entries including the reserved ones.
Vocab build_vocab(std::span<const std::string> corpus, std::size_t max_size, bool lowercase = true);

struct Token {
  std::size_t id = Vocab::kUnk;
  CharSpan span;
};

std::vector<Token> tokenize(std::string_view text, const Vocab& vocab, bool lowercase = true);

/// Index geometry of one featurized window:
/// [CLS] question [SEP] passage [SEP] padding.
struct SequenceLayout {
  std::size_t cls_index = 0;
  IndexRange question;
  std::size_t sep1_index = 0;
  IndexRange passage;
  std::size_t sep2_index = 0;
  IndexRange pad;

  std::size_t length() const { return pad.end; }
  /// Disjoint, ordered, covering [0, length()), with a non-empty passage.
  bool valid() const;
  /// Builds the layout for a question of `question_len` tokens and a passage
  /// window of `passage_len` tokens in a sequence of `max_seq_length`.
  static SequenceLayout make(std::size_t question_len, std::size_t passage_len, std::size_t max_seq_length);
  friend bool operator==(const SequenceLayout&, const SequenceLayout&) = default;
};

struct FeaturizeConfig {
  std::size_t max_seq_length = 128;
  std::size_t doc_stride = 32;
  std::size_t max_query_length = 64;
  bool lowercase = true;
};

struct Feature {
  std::vector<std::size_t> input_ids;
  std::vector<std::uint8_t> segment_ids;
  SequenceLayout layout;
  /// Byte spans in the context of the passage tokens, aligned with layout.passage.
  std::vector<CharSpan> passage_spans;
  /// End of the passage token just before this window (0 if none) and start of
  /// the one just after it (npos if none); used to decide if an answer fits.
  std::size_t outside_before_end = 0;
  std::size_t outside_after_begin = std::string::npos;
  std::optional<std::size_t> gold_start;
  std::optional<std::size_t> gold_end;
  std::string qas_id;
  std::size_t example_index = 0;
  std::size_t window_index = 0;
  bool question_truncated = false;

  /// Context byte span of the token at sequence index `index`, if it is a passage token.
  std::optional<CharSpan> token_span(std::size_t index) const;
  bool has_gold() const { return gold_start.has_value() && gold_end.has_value(); }
  friend bool operator==(const Feature&, const Feature&) = default;
};

/// Sliding-window featurization. Window starts advance by
/// min(doc_stride, window length), so every passage token is covered even
/// when doc_stride exceeds the passage capacity.
std::vector<Feature> featurize(const SquadExample& example, const Vocab& vocab, const FeaturizeConfig& config,
                               std::size_t example_index = 0);

/// Features for a whole dataset, in example order.
std::vector<Feature> featurize_all(std::span<const SquadExample> examples, const Vocab& vocab,
                                   const FeaturizeConfig& config);

/// Smallest window token interval covering the answer's non-whitespace bytes,
/// or nullopt if any part of the answer lies outside this window.
std::optional<std::pair<std::size_t, std::size_t>> map_answer_span(const Feature& feature, std::size_t answer_byte_start,
                                                                   std::string_view answer_text);

}  // namespace azlab
