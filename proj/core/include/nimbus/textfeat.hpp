#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace nimbus::textfeat {

/// Coarse part-of-speech classes. Fine Penn-style tags collapse onto these
/// during filtering; verb tenses stay separate because they carry signal for
/// time-of-occurrence labels. Exclamation and question marks survive as their
/// own classes with fixed tokens "!" and "?".
enum class CoarseTag : std::uint8_t {
  kNoun,
  kAdj,
  kAdv,
  kVerbBase,
  kVerbPast,
  kVerbGerund,
  kVerbParticiple,
  kExclaim,
  kQuestion,
};

const char* to_string(CoarseTag tag);
std::optional<CoarseTag> parse_coarse_tag(std::string_view text);

/// Coarse class for a Penn-style fine tag, or nullopt for tags that are
/// filtered out (determiners, particles, conjunctions, pronouns, punctuation
/// and everything else without a mapping).
std::optional<CoarseTag> coarse_tag_for(std::string_view fine_tag);

/// A lowercase token paired with its coarse tag. The token is never empty and
/// contains no whitespace.
struct TokenTag {
  std::string token;
  CoarseTag tag = CoarseTag::kNoun;

  friend bool operator==(const TokenTag&, const TokenTag&) = default;
  friend auto operator<=>(const TokenTag&, const TokenTag&) = default;
};

struct TokenTagHash {
  std::size_t operator()(const TokenTag& pair) const {
    const std::size_t h = std::hash<std::string>{}(pair.token);
    return h ^ (static_cast<std::size_t>(pair.tag) + 0x9e3779b9u + (h << 6) + (h >> 2));
  }
};

using Stoplist = std::unordered_set<std::string>;

/// Lemma dictionary plus a synset graph: per-lemma sense lists ordered by
/// frequency, per-synset lemma lists, and hypernym edges. Loaded from a
/// tab-separated text file, validated for dangling synset references and
/// hypernym cycles.
class Lexicon {
 public:
  static Lexicon load(const std::string& path);

  void add_lemma(const std::string& form, CoarseTag tag, const std::string& lemma);
  void add_senses(const std::string& lemma, std::vector<std::string> synset_ids);
  void add_synset(const std::string& id, std::vector<std::string> lemmas);
  void add_hypernyms(const std::string& id, std::vector<std::string> hypernym_ids);

  /// Checks referential integrity and hypernym acyclicity. Throws DataError.
  void validate() const;

  std::optional<std::string> lemma_of(const std::string& form, CoarseTag tag) const;

  /// Synset ids for a lemma, most common sense first. Null when unknown.
  const std::vector<std::string>* senses_of(const std::string& lemma) const;
  const std::vector<std::string>* lemmas_of_synset(const std::string& id) const;
  const std::vector<std::string>* hypernyms_of(const std::string& id) const;

 private:
  std::unordered_map<TokenTag, std::string, TokenTagHash> lemma_map_;
  std::unordered_map<std::string, std::vector<std::string>> lemma_senses_;
  std::unordered_map<std::string, std::vector<std::string>> synset_lemmas_;
  std::unordered_map<std::string, std::vector<std::string>> hypernyms_;
};

struct BagEntry {
  TokenTag pair;
  std::uint32_t index = 0;
  std::uint64_t count = 0;
};

/// Token-tag vocabulary with dense feature indices assigned in first-seen
/// order and per-pair occurrence counts over the training corpus.
class BagOfWords {
 public:
  /// Records one occurrence, creating the entry on first sight.
  void add(const TokenTag& pair);
  /// Appends an entry with an explicit count; the index is the next free one.
  void add_with_count(const TokenTag& pair, std::uint64_t count);

  const BagEntry* find(const TokenTag& pair) const;
  bool contains(const TokenTag& pair) const { return find(pair) != nullptr; }
  std::size_t size() const { return entries_.size(); }
  /// Entries in index order (index i lives at position i).
  const std::vector<BagEntry>& entries() const { return entries_; }

 private:
  std::vector<BagEntry> entries_;
  std::unordered_map<TokenTag, std::uint32_t, TokenTagHash> lookup_;
};

/// Map from pruned below-threshold pairs to retained substitutes discovered
/// by the hypernym search. Iteration follows insertion order.
class ConversionList {
 public:
  void add(const TokenTag& from, const TokenTag& to);
  const TokenTag* find(const TokenTag& from) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<TokenTag, TokenTag>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<TokenTag, TokenTag>> entries_;
  std::unordered_map<TokenTag, std::uint32_t, TokenTagHash> lookup_;
};

/// Binary feature vector stored as the sorted list of active indices.
struct SparseBinaryVector {
  std::uint32_t dimension = 0;
  std::vector<std::uint32_t> on_indices;

  friend bool operator==(const SparseBinaryVector&, const SparseBinaryVector&) = default;
};

/// Splits tokens containing '-' or '/' into their non-empty segments, each
/// inheriting the parent tag. Tokens without separators pass through; a token
/// made only of separators disappears.
std::vector<TokenTag> split_compounds(const std::vector<TokenTag>& tokens);

/// Drops stop words and unmapped fine tags, lowercases the survivors and
/// collapses fine tags onto CoarseTag. "!" and "?" survive as kExclaim and
/// kQuestion regardless of how the tagger labeled them.
std::vector<TokenTag> filter_tokens(
    const std::vector<std::pair<std::string, std::string>>& raw, const Stoplist& stoplist);

/// Dictionary lookup of the lemma for (form, tag); unknown forms pass through
/// unchanged so that non-standard spellings keep their own feature.
TokenTag lemmatize(const TokenTag& pair, const Lexicon& lexicon);

/// Runs filter -> split -> lemmatize over one tagged message.
std::vector<TokenTag> prepare_message(
    const std::vector<std::pair<std::string, std::string>>& raw, const Stoplist& stoplist,
    const Lexicon& lexicon);

/// Counts every occurrence of every (token, tag) pair across the corpus.
BagOfWords build_bag(const std::vector<std::vector<TokenTag>>& corpus);

struct PruneResult {
  BagOfWords kept;
  ConversionList conversions;
};

/// Keeps pairs occurring more than `threshold` times (indices re-densified in
/// original order). Every below-threshold pair is resolved by a breadth-first
/// search over the synset graph: level 0 holds the synonym lemmas of the
/// pair's senses in sense order, each further level the hypernym synsets'
/// lemmas. The first lemma (other than the query itself) found in the kept
/// bag under the same tag becomes the conversion target; pairs without one
/// are dropped.
PruneResult prune_bag(const BagOfWords& bag, const Lexicon& lexicon, std::uint64_t threshold);

/// Binary vector over the pruned bag: a feature is on iff some token maps to
/// it directly or through the conversion list. Duplicates collapse.
SparseBinaryVector vectorize(const std::vector<TokenTag>& tokens, const BagOfWords& bag,
                             const ConversionList& conversions);

// ---------------------------------------------------------------------------
// File formats (line-delimited UTF-8; see docs/formats.md)

/// One message per line, tokens as token_POS separated by single spaces.
/// The split is on the last underscore, so tokens may contain underscores.
std::vector<std::vector<std::pair<std::string, std::string>>> load_tagged_corpus(
    const std::string& path);

/// Whitespace/punctuation fallback tokenizer for raw text. Everything gets
/// the NN tag except '!' and '?', which become their own tokens. Meant for
/// demos where no tagger output is available.
std::vector<std::pair<std::string, std::string>> tokenize_fallback(std::string_view line);

Stoplist load_stoplist(const std::string& path);

void save_bag(const BagOfWords& bag, const std::string& path);
BagOfWords load_bag(const std::string& path);
void save_conversions(const ConversionList& conversions, const std::string& path);
ConversionList load_conversions(const std::string& path);

}  // namespace nimbus::textfeat
