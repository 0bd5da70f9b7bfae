#include "azlab/text.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>
#include <fstream>
#include <map>
#include <stdexcept>

namespace azlab {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

const nlohmann::json& child(const nlohmann::json& node, const char* key, const std::string& path,
                            nlohmann::json::value_t type) {
  if (!node.is_object()) throw std::invalid_argument("SQuAD: " + path + " is not an object");
  auto it = node.find(key);
  if (it == node.end()) throw std::invalid_argument("SQuAD: missing key '" + std::string(key) + "' at " + path);
  if (it->type() != type &&
      !(type == nlohmann::json::value_t::number_integer && it->is_number_unsigned())) {
    throw std::invalid_argument("SQuAD: " + path + "." + key + " has unexpected type " + it->type_name());
  }
  return *it;
}

}  // namespace

std::size_t utf8_byte_offset(std::string_view text, std::size_t code_point) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if ((c & 0xC0) == 0x80) continue;  // continuation byte
    if (seen == code_point) return i;
    ++seen;
  }
  return text.size();
}

std::vector<SquadExample> load_squad(const nlohmann::json& document) {
  using vt = nlohmann::json::value_t;
  std::vector<SquadExample> out;
  const auto& data = child(document, "data", "$", vt::array);
  for (std::size_t a = 0; a < data.size(); ++a) {
    const std::string apath = "$.data[" + std::to_string(a) + "]";
    const auto& paragraphs = child(data[a], "paragraphs", apath, vt::array);
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      const std::string ppath = apath + ".paragraphs[" + std::to_string(p) + "]";
      const auto& context = child(paragraphs[p], "context", ppath, vt::string).get_ref<const std::string&>();
      const auto& qas = child(paragraphs[p], "qas", ppath, vt::array);
      for (std::size_t q = 0; q < qas.size(); ++q) {
        const std::string qpath = ppath + ".qas[" + std::to_string(q) + "]";
        SquadExample ex;
        ex.qas_id = child(qas[q], "id", qpath, vt::string).get<std::string>();
        ex.question = child(qas[q], "question", qpath, vt::string).get<std::string>();
        ex.context = context;
        const auto& answers = child(qas[q], "answers", qpath, vt::array);
        for (std::size_t k = 0; k < answers.size(); ++k) {
          const std::string kpath = qpath + ".answers[" + std::to_string(k) + "]";
          SquadAnswer ans;
          ans.text = child(answers[k], "text", kpath, vt::string).get<std::string>();
          const auto& start = child(answers[k], "answer_start", kpath, vt::number_integer);
          if (start.get<long long>() < 0) throw std::invalid_argument("SQuAD: negative answer_start at " + kpath);
          ans.answer_start = start.get<std::size_t>();
          ans.byte_start = utf8_byte_offset(context, ans.answer_start);
          ans.consistent = ans.byte_start + ans.text.size() <= context.size() &&
                           std::string_view(context).substr(ans.byte_start, ans.text.size()) == ans.text;
          ex.answers.push_back(std::move(ans));
        }
        out.push_back(std::move(ex));
      }
    }
  }
  return out;
}

std::vector<SquadExample> load_squad_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open SQuAD file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in " + path.string() + ": " + e.what());
  }
  return load_squad(doc);
}

Vocab::Vocab() {
  for (const char* t : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) add(t);
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  if (tokens.size() < kNumReserved) throw std::invalid_argument("vocabulary lacks the reserved tokens");
  for (std::size_t i = 0; i < kNumReserved; ++i) {
    if (tokens[i] != v.tokens_[i]) {
      throw std::invalid_argument("vocabulary entry " + std::to_string(i) + " is '" + tokens[i] + "', expected '" +
                                  v.tokens_[i] + "'");
    }
  }
  for (std::size_t i = kNumReserved; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw std::invalid_argument("duplicate vocabulary entry '" + tokens[i] + "'");
    v.add(std::move(tokens[i]));
  }
  return v;
}

void Vocab::add(std::string token) {
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
}

std::size_t Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

std::vector<Word> split_words(std::string_view text, bool lowercase) {
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (!is_punct(c)) {
      while (j < text.size() && !is_space(static_cast<unsigned char>(text[j])) &&
             !is_punct(static_cast<unsigned char>(text[j])))
        ++j;
    }
    std::string word(text.substr(i, j - i));
    if (lowercase) std::transform(word.begin(), word.end(), word.begin(), ascii_lower);
    out.push_back({std::move(word), {i, j}});
    i = j;
  }
  return out;
}

Vocab build_vocab(std::span<const std::string> corpus, std::size_t max_size, bool lowercase) {
  if (max_size <= Vocab::kNumReserved) {
    throw std::invalid_argument("vocabulary size " + std::to_string(max_size) + " leaves no room beyond the " +
                                std::to_string(Vocab::kNumReserved) + " reserved tokens");
  }
  std::map<std::string, std::size_t> counts;
  const Vocab reserved;
  for (const auto& text : corpus)
    for (auto& w : split_words(text, lowercase))
      if (!reserved.contains(w.text)) ++counts[w.text];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = reserved.tokens();
  for (const auto& [word, n] : ranked) {
    if (tokens.size() >= max_size) break;
    tokens.push_back(word);
  }
  return Vocab::from_tokens(std::move(tokens));
}

std::vector<Token> tokenize(std::string_view text, const Vocab& vocab, bool lowercase) {
  std::vector<Token> out;
  for (const auto& w : split_words(text, lowercase)) out.push_back({vocab.id(w.text), w.span});
  return out;
}

bool SequenceLayout::valid() const {
  return cls_index == 0 && question.begin == 1 && sep1_index == question.end && passage.begin == sep1_index + 1 &&
         !passage.empty() && sep2_index == passage.end && pad.begin == sep2_index + 1 && pad.end >= pad.begin;
}

SequenceLayout SequenceLayout::make(std::size_t question_len, std::size_t passage_len, std::size_t max_seq_length) {
  if (passage_len == 0) throw std::invalid_argument("layout needs a non-empty passage window");
  if (question_len + passage_len + 3 > max_seq_length) {
    throw std::invalid_argument("question (" + std::to_string(question_len) + ") + passage (" +
                                std::to_string(passage_len) + ") + 3 specials exceed max_seq_length " +
                                std::to_string(max_seq_length));
  }
  SequenceLayout l;
  l.cls_index = 0;
  l.question = {1, 1 + question_len};
  l.sep1_index = l.question.end;
  l.passage = {l.sep1_index + 1, l.sep1_index + 1 + passage_len};
  l.sep2_index = l.passage.end;
  l.pad = {l.sep2_index + 1, max_seq_length};
  return l;
}

std::optional<CharSpan> Feature::token_span(std::size_t index) const {
  if (!layout.passage.contains(index)) return std::nullopt;
  return passage_spans[index - layout.passage.begin];
}

std::vector<Feature> featurize(const SquadExample& example, const Vocab& vocab, const FeaturizeConfig& config,
                               std::size_t example_index) {
  std::vector<Token> query = tokenize(example.question, vocab, config.lowercase);
  bool truncated = false;
  if (query.size() > config.max_query_length) {
    query.resize(config.max_query_length);
    truncated = true;
  }
  const std::vector<Token> passage = tokenize(example.context, vocab, config.lowercase);
  if (passage.empty()) throw std::invalid_argument("featurize: example '" + example.qas_id + "' has an empty passage");
  if (config.max_seq_length < query.size() + 4) {
    throw std::invalid_argument("featurize: max_seq_length " + std::to_string(config.max_seq_length) +
                                " leaves no passage room for example '" + example.qas_id + "'");
  }
  if (config.doc_stride == 0) throw std::invalid_argument("featurize: doc_stride must be positive");
  const std::size_t capacity = config.max_seq_length - query.size() - 3;

  std::vector<Feature> out;
  std::size_t start = 0;
  for (std::size_t window = 0;; ++window) {
    const std::size_t len = std::min(capacity, passage.size() - start);
    Feature f;
    f.layout = SequenceLayout::make(query.size(), len, config.max_seq_length);
    f.input_ids.assign(config.max_seq_length, Vocab::kPad);
    f.segment_ids.assign(config.max_seq_length, 0);
    f.input_ids[f.layout.cls_index] = Vocab::kCls;
    for (std::size_t i = 0; i < query.size(); ++i) f.input_ids[f.layout.question.begin + i] = query[i].id;
    f.input_ids[f.layout.sep1_index] = Vocab::kSep;
    for (std::size_t i = 0; i < len; ++i) {
      f.input_ids[f.layout.passage.begin + i] = passage[start + i].id;
      f.segment_ids[f.layout.passage.begin + i] = 1;
      f.passage_spans.push_back(passage[start + i].span);
    }
    f.input_ids[f.layout.sep2_index] = Vocab::kSep;
    f.segment_ids[f.layout.sep2_index] = 1;
    f.outside_before_end = start > 0 ? passage[start - 1].span.end : 0;
    f.outside_after_begin = start + len < passage.size() ? passage[start + len].span.begin : std::string::npos;
    f.qas_id = example.qas_id;
    f.example_index = example_index;
    f.window_index = window;
    f.question_truncated = truncated;
    if (example.trainable()) {
      const auto& ans = example.answers.front();
      if (auto span = map_answer_span(f, ans.byte_start, ans.text)) {
        f.gold_start = span->first;
        f.gold_end = span->second;
      }
    }
    out.push_back(std::move(f));
    if (start + len >= passage.size()) break;
    start += std::min(len, config.doc_stride);
  }
  return out;
}

std::vector<Feature> featurize_all(std::span<const SquadExample> examples, const Vocab& vocab,
                                   const FeaturizeConfig& config) {
  std::vector<Feature> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto fs = featurize(examples[i], vocab, config, i);
    std::move(fs.begin(), fs.end(), std::back_inserter(out));
  }
  return out;
}

std::optional<std::pair<std::size_t, std::size_t>> map_answer_span(const Feature& feature, std::size_t answer_byte_start,
                                                                   std::string_view answer_text) {
  std::size_t first = 0;
  while (first < answer_text.size() && is_space(static_cast<unsigned char>(answer_text[first]))) ++first;
  std::size_t last = answer_text.size();
  while (last > first && is_space(static_cast<unsigned char>(answer_text[last - 1]))) --last;
  if (first == last) return std::nullopt;
  const std::size_t gold_begin = answer_byte_start + first;
  const std::size_t gold_end = answer_byte_start + last;
  if (feature.outside_before_end > gold_begin) return std::nullopt;
  if (feature.outside_after_begin != std::string::npos && feature.outside_after_begin < gold_end) return std::nullopt;

  const auto& spans = feature.passage_spans;
  std::optional<std::size_t> s, e;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i].end > gold_begin && spans[i].begin < gold_end) {
      if (!s) s = i;
      e = i;
    }
  }
  if (!s) return std::nullopt;
  return std::make_pair(feature.layout.passage.begin + *s, feature.layout.passage.begin + *e);
}

}  // namespace azlab
