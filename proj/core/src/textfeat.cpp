#include "nimbus/textfeat.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "nimbus/error.hpp"

namespace nimbus::textfeat {

namespace {

std::string lowercase_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::vector<std::string> split_on(std::string_view text, char separator) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(separator, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      return parts;
    }
    parts.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return in;
}

}  // namespace

const char* to_string(CoarseTag tag) {
  switch (tag) {
    case CoarseTag::kNoun: return "NOUN";
    case CoarseTag::kAdj: return "ADJ";
    case CoarseTag::kAdv: return "ADV";
    case CoarseTag::kVerbBase: return "VERB_BASE";
    case CoarseTag::kVerbPast: return "VERB_PAST";
    case CoarseTag::kVerbGerund: return "VERB_GERUND";
    case CoarseTag::kVerbParticiple: return "VERB_PARTICIPLE";
    case CoarseTag::kExclaim: return "EXCLAIM";
    case CoarseTag::kQuestion: return "QUESTION";
  }
  return "?";
}

std::optional<CoarseTag> parse_coarse_tag(std::string_view text) {
  if (text == "NOUN") return CoarseTag::kNoun;
  if (text == "ADJ") return CoarseTag::kAdj;
  if (text == "ADV") return CoarseTag::kAdv;
  if (text == "VERB_BASE") return CoarseTag::kVerbBase;
  if (text == "VERB_PAST") return CoarseTag::kVerbPast;
  if (text == "VERB_GERUND") return CoarseTag::kVerbGerund;
  if (text == "VERB_PARTICIPLE") return CoarseTag::kVerbParticiple;
  if (text == "EXCLAIM") return CoarseTag::kExclaim;
  if (text == "QUESTION") return CoarseTag::kQuestion;
  return std::nullopt;
}

std::optional<CoarseTag> coarse_tag_for(std::string_view fine_tag) {
  if (fine_tag == "NN" || fine_tag == "NNS" || fine_tag == "NNP" || fine_tag == "NNPS") {
    return CoarseTag::kNoun;
  }
  if (fine_tag == "JJ" || fine_tag == "JJR" || fine_tag == "JJS") return CoarseTag::kAdj;
  if (fine_tag == "RB" || fine_tag == "RBR" || fine_tag == "RBS") return CoarseTag::kAdv;
  if (fine_tag == "VB" || fine_tag == "VBP" || fine_tag == "VBZ") return CoarseTag::kVerbBase;
  if (fine_tag == "VBD") return CoarseTag::kVerbPast;
  if (fine_tag == "VBG") return CoarseTag::kVerbGerund;
  if (fine_tag == "VBN") return CoarseTag::kVerbParticiple;
  return std::nullopt;
}

// --- Lexicon ---------------------------------------------------------------

void Lexicon::add_lemma(const std::string& form, CoarseTag tag, const std::string& lemma) {
  lemma_map_[TokenTag{form, tag}] = lemma;
}

void Lexicon::add_senses(const std::string& lemma, std::vector<std::string> synset_ids) {
  lemma_senses_[lemma] = std::move(synset_ids);
}

void Lexicon::add_synset(const std::string& id, std::vector<std::string> lemmas) {
  synset_lemmas_[id] = std::move(lemmas);
}

void Lexicon::add_hypernyms(const std::string& id, std::vector<std::string> hypernym_ids) {
  hypernyms_[id] = std::move(hypernym_ids);
}

void Lexicon::validate() const {
  for (const auto& [lemma, ids] : lemma_senses_) {
    for (const auto& id : ids) {
      if (!synset_lemmas_.contains(id)) {
        throw DataError("lexicon: sense list of '" + lemma + "' references unknown synset " + id);
      }
    }
  }
  for (const auto& [id, targets] : hypernyms_) {
    if (!synset_lemmas_.contains(id)) {
      throw DataError("lexicon: hypernym record for unknown synset " + id);
    }
    for (const auto& target : targets) {
      if (!synset_lemmas_.contains(target)) {
        throw DataError("lexicon: synset " + id + " has unknown hypernym " + target);
      }
    }
  }

  // Iterative three-color DFS over the hypernym edges.
  enum class Color : std::uint8_t { kWhite, kGray, kBlack };
  std::unordered_map<std::string, Color> color;
  for (const auto& [id, _] : synset_lemmas_) color[id] = Color::kWhite;
  for (const auto& [root, _] : synset_lemmas_) {
    if (color[root] != Color::kWhite) continue;
    std::vector<std::pair<std::string, std::size_t>> stack{{root, 0}};
    color[root] = Color::kGray;
    while (!stack.empty()) {
      auto& [node, next_edge] = stack.back();
      const auto it = hypernyms_.find(node);
      const std::size_t degree = it == hypernyms_.end() ? 0 : it->second.size();
      if (next_edge >= degree) {
        color[node] = Color::kBlack;
        stack.pop_back();
        continue;
      }
      const std::string& target = it->second[next_edge++];
      if (color[target] == Color::kGray) {
        throw DataError("lexicon: hypernym cycle through synset " + target);
      }
      if (color[target] == Color::kWhite) {
        color[target] = Color::kGray;
        stack.emplace_back(target, 0);
      }
    }
  }
}

std::optional<std::string> Lexicon::lemma_of(const std::string& form, CoarseTag tag) const {
  const auto it = lemma_map_.find(TokenTag{form, tag});
  if (it == lemma_map_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::string>* Lexicon::senses_of(const std::string& lemma) const {
  const auto it = lemma_senses_.find(lemma);
  return it == lemma_senses_.end() ? nullptr : &it->second;
}

const std::vector<std::string>* Lexicon::lemmas_of_synset(const std::string& id) const {
  const auto it = synset_lemmas_.find(id);
  return it == synset_lemmas_.end() ? nullptr : &it->second;
}

const std::vector<std::string>* Lexicon::hypernyms_of(const std::string& id) const {
  const auto it = hypernyms_.find(id);
  return it == hypernyms_.end() ? nullptr : &it->second;
}

Lexicon Lexicon::load(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  Lexicon lexicon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_on(line, '\t');
    const auto fail = [&](const std::string& why) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + why);
    };
    if (fields[0] == "LEMMA") {
      if (fields.size() != 4) fail("LEMMA record needs 4 tab-separated fields");
      const auto tag = parse_coarse_tag(fields[2]);
      if (!tag) fail("unknown coarse tag '" + fields[2] + "'");
      lexicon.add_lemma(fields[1], *tag, fields[3]);
    } else if (fields[0] == "SENSES") {
      if (fields.size() != 3) fail("SENSES record needs 3 tab-separated fields");
      lexicon.add_senses(fields[1], split_on(fields[2], ','));
    } else if (fields[0] == "SYNSET") {
      if (fields.size() != 3) fail("SYNSET record needs 3 tab-separated fields");
      lexicon.add_synset(fields[1], split_on(fields[2], ','));
    } else if (fields[0] == "HYPER") {
      if (fields.size() != 3) fail("HYPER record needs 3 tab-separated fields");
      lexicon.add_hypernyms(fields[1], split_on(fields[2], ','));
    } else {
      fail("unknown record type '" + fields[0] + "'");
    }
  }
  lexicon.validate();
  return lexicon;
}

// --- BagOfWords / ConversionList -------------------------------------------

void BagOfWords::add(const TokenTag& pair) {
  const auto it = lookup_.find(pair);
  if (it != lookup_.end()) {
    ++entries_[it->second].count;
    return;
  }
  const auto index = static_cast<std::uint32_t>(entries_.size());
  lookup_.emplace(pair, index);
  entries_.push_back(BagEntry{pair, index, 1});
}

void BagOfWords::add_with_count(const TokenTag& pair, std::uint64_t count) {
  const auto index = static_cast<std::uint32_t>(entries_.size());
  lookup_.emplace(pair, index);
  entries_.push_back(BagEntry{pair, index, count});
}

const BagEntry* BagOfWords::find(const TokenTag& pair) const {
  const auto it = lookup_.find(pair);
  return it == lookup_.end() ? nullptr : &entries_[it->second];
}

void ConversionList::add(const TokenTag& from, const TokenTag& to) {
  lookup_.emplace(from, static_cast<std::uint32_t>(entries_.size()));
  entries_.emplace_back(from, to);
}

const TokenTag* ConversionList::find(const TokenTag& from) const {
  const auto it = lookup_.find(from);
  return it == lookup_.end() ? nullptr : &entries_[it->second].second;
}

// --- Operations ------------------------------------------------------------

std::vector<TokenTag> split_compounds(const std::vector<TokenTag>& tokens) {
  std::vector<TokenTag> out;
  out.reserve(tokens.size());
  for (const TokenTag& pair : tokens) {
    if (pair.token.find_first_of("-/") == std::string::npos) {
      out.push_back(pair);
      continue;
    }
    std::string segment;
    for (const char c : pair.token) {
      if (c == '-' || c == '/') {
        if (!segment.empty()) out.push_back(TokenTag{segment, pair.tag});
        segment.clear();
      } else {
        segment.push_back(c);
      }
    }
    if (!segment.empty()) out.push_back(TokenTag{segment, pair.tag});
  }
  return out;
}

std::vector<TokenTag> filter_tokens(
    const std::vector<std::pair<std::string, std::string>>& raw, const Stoplist& stoplist) {
  std::vector<TokenTag> out;
  out.reserve(raw.size());
  for (const auto& [token, fine_tag] : raw) {
    std::string lower = lowercase_ascii(token);
    if (lower.empty() || stoplist.contains(lower)) continue;
    if (lower == "!") {
      out.push_back(TokenTag{"!", CoarseTag::kExclaim});
      continue;
    }
    if (lower == "?") {
      out.push_back(TokenTag{"?", CoarseTag::kQuestion});
      continue;
    }
    const auto coarse = coarse_tag_for(fine_tag);
    if (!coarse) continue;
    out.push_back(TokenTag{std::move(lower), *coarse});
  }
  return out;
}

TokenTag lemmatize(const TokenTag& pair, const Lexicon& lexicon) {
  if (auto lemma = lexicon.lemma_of(pair.token, pair.tag)) {
    return TokenTag{std::move(*lemma), pair.tag};
  }
  return pair;
}

std::vector<TokenTag> prepare_message(
    const std::vector<std::pair<std::string, std::string>>& raw, const Stoplist& stoplist,
    const Lexicon& lexicon) {
  std::vector<TokenTag> tokens = split_compounds(filter_tokens(raw, stoplist));
  for (TokenTag& pair : tokens) pair = lemmatize(pair, lexicon);
  return tokens;
}

BagOfWords build_bag(const std::vector<std::vector<TokenTag>>& corpus) {
  BagOfWords bag;
  for (const auto& message : corpus) {
    for (const TokenTag& pair : message) bag.add(pair);
  }
  return bag;
}

namespace {

// Breadth-first search over the synset graph for a kept substitute of a
// below-threshold pair. Level 0 holds the pair's own synsets in sense order;
// each further level the hypernyms of the previous one, deduplicated in
// first-encounter order. Within a level, candidates are scanned in (sense
// order, lemma position) order.
std::optional<TokenTag> convert_via_bfs(const TokenTag& pair, const Lexicon& lexicon,
                                        const BagOfWords& bag, std::uint64_t threshold) {
  const std::vector<std::string>* senses = lexicon.senses_of(pair.token);
  if (senses == nullptr || senses->empty()) return std::nullopt;

  std::unordered_set<std::string> visited;
  std::vector<std::string> level;
  for (const std::string& id : *senses) {
    if (visited.insert(id).second) level.push_back(id);
  }

  while (!level.empty()) {
    for (const std::string& synset : level) {
      const std::vector<std::string>* lemmas = lexicon.lemmas_of_synset(synset);
      if (lemmas == nullptr) continue;
      for (const std::string& lemma : *lemmas) {
        if (lemma == pair.token) continue;
        const TokenTag candidate{lemma, pair.tag};
        const BagEntry* entry = bag.find(candidate);
        if (entry != nullptr && entry->count > threshold) return candidate;
      }
    }
    std::vector<std::string> next;
    for (const std::string& synset : level) {
      const std::vector<std::string>* ups = lexicon.hypernyms_of(synset);
      if (ups == nullptr) continue;
      for (const std::string& up : *ups) {
        if (visited.insert(up).second) next.push_back(up);
      }
    }
    level = std::move(next);
  }
  return std::nullopt;
}

}  // namespace

PruneResult prune_bag(const BagOfWords& bag, const Lexicon& lexicon, std::uint64_t threshold) {
  PruneResult result;
  for (const BagEntry& entry : bag.entries()) {
    if (entry.count > threshold) result.kept.add_with_count(entry.pair, entry.count);
  }
  for (const BagEntry& entry : bag.entries()) {
    if (entry.count > threshold) continue;
    if (auto target = convert_via_bfs(entry.pair, lexicon, bag, threshold)) {
      result.conversions.add(entry.pair, *target);
    }
  }
  return result;
}

SparseBinaryVector vectorize(const std::vector<TokenTag>& tokens, const BagOfWords& bag,
                             const ConversionList& conversions) {
  SparseBinaryVector vector;
  vector.dimension = static_cast<std::uint32_t>(bag.size());
  std::vector<std::uint32_t>& on = vector.on_indices;
  for (const TokenTag& pair : tokens) {
    const BagEntry* direct = bag.find(pair);
    if (direct != nullptr) {
      on.push_back(direct->index);
      continue;
    }
    if (const TokenTag* target = conversions.find(pair)) {
      const BagEntry* entry = bag.find(*target);
      if (entry != nullptr) on.push_back(entry->index);
    }
  }
  std::sort(on.begin(), on.end());
  on.erase(std::unique(on.begin(), on.end()), on.end());
  return vector;
}

// --- File formats ----------------------------------------------------------

std::vector<std::vector<std::pair<std::string, std::string>>> load_tagged_corpus(
    const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<std::vector<std::pair<std::string, std::string>>> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::pair<std::string, std::string>> message;
    std::istringstream tokens(line);
    std::string item;
    while (tokens >> item) {
      const std::size_t underscore = item.rfind('_');
      if (underscore == std::string::npos || underscore == 0 || underscore + 1 == item.size()) {
        throw DataError(path + ":" + std::to_string(line_no) + ": token '" + item +
                        "' is not of the form token_POS");
      }
      message.emplace_back(item.substr(0, underscore), item.substr(underscore + 1));
    }
    corpus.push_back(std::move(message));
  }
  return corpus;
}

std::vector<std::pair<std::string, std::string>> tokenize_fallback(std::string_view line) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string word;
  const auto flush = [&] {
    if (!word.empty()) {
      out.emplace_back(word, "NN");
      word.clear();
    }
  };
  for (const char c : line) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      flush();
    } else if (c == '!' || c == '?') {
      flush();
      out.emplace_back(std::string(1, c), ".");
    } else if (std::isalnum(u) || c == '-' || c == '/' || c == '\'' || c == '#' || c == '@') {
      word.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

Stoplist load_stoplist(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  Stoplist stoplist;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    stoplist.insert(lowercase_ascii(line));
  }
  return stoplist;
}

void save_bag(const BagOfWords& bag, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const BagEntry& entry : bag.entries()) {
    out << entry.pair.token << '\t' << to_string(entry.pair.tag) << '\t' << entry.index << '\t'
        << entry.count << '\n';
  }
}

BagOfWords load_bag(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  BagOfWords bag;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_on(line, '\t');
    if (fields.size() != 4) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 tab-separated fields");
    }
    const auto tag = parse_coarse_tag(fields[1]);
    if (!tag) throw DataError(path + ":" + std::to_string(line_no) + ": bad tag " + fields[1]);
    const auto index = static_cast<std::uint32_t>(std::stoul(fields[2]));
    if (index != bag.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": indices must be dense and in order");
    }
    bag.add_with_count(TokenTag{fields[0], *tag}, std::stoull(fields[3]));
  }
  return bag;
}

void save_conversions(const ConversionList& conversions, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& [from, to] : conversions.entries()) {
    out << from.token << '\t' << to_string(from.tag) << '\t' << to.token << '\t'
        << to_string(to.tag) << '\n';
  }
}

ConversionList load_conversions(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  ConversionList conversions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_on(line, '\t');
    if (fields.size() != 4) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 tab-separated fields");
    }
    const auto from_tag = parse_coarse_tag(fields[1]);
    const auto to_tag = parse_coarse_tag(fields[3]);
    if (!from_tag || !to_tag) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad coarse tag");
    }
    conversions.add(TokenTag{fields[0], *from_tag}, TokenTag{fields[2], *to_tag});
  }
  return conversions;
}

}  // namespace nimbus::textfeat
