#include "doctest.h"

#include "nimbus/error.hpp"
#include "nimbus/lsa.hpp"
#include "nimbus/textfeat.hpp"

#include "temp_dir.hpp"

#include <string>
#include <vector>

using namespace nimbus;
using namespace nimbus::textfeat;
using testutil::TempDir;

namespace {

const Stoplist kEmptyStops;

std::vector<std::vector<TokenTag>> toy_messages(const Lexicon& lexicon, const Stoplist& stops) {
  const auto corpus = load_tagged_corpus(testutil::data_dir() + "/toy_corpus.txt");
  std::vector<std::vector<TokenTag>> prepared;
  prepared.reserve(corpus.size());
  for (const auto& raw : corpus) prepared.push_back(prepare_message(raw, stops, lexicon));
  return prepared;
}

struct ToyPipeline {
  Lexicon lexicon;
  Stoplist stops;
  std::vector<std::vector<TokenTag>> messages;
  BagOfWords bag;
  PruneResult pruned;
  std::vector<SparseBinaryVector> vectors;

  explicit ToyPipeline(std::uint64_t threshold)
      : lexicon(Lexicon::load(testutil::data_dir() + "/toy_lexicon.txt")),
        stops(load_stoplist(testutil::data_dir() + "/stopwords.txt")),
        messages(toy_messages(lexicon, stops)),
        bag(build_bag(messages)),
        pruned(prune_bag(bag, lexicon, threshold)) {
    for (const auto& msg : messages) {
      vectors.push_back(vectorize(msg, pruned.kept, pruned.conversions));
    }
  }
};

}  // namespace

TEST_CASE("fine tags collapse onto coarse classes") {
  CHECK(coarse_tag_for("NN") == CoarseTag::kNoun);
  CHECK(coarse_tag_for("NNPS") == CoarseTag::kNoun);
  CHECK(coarse_tag_for("JJR") == CoarseTag::kAdj);
  CHECK(coarse_tag_for("RBS") == CoarseTag::kAdv);
  CHECK(coarse_tag_for("VB") == CoarseTag::kVerbBase);
  CHECK(coarse_tag_for("VBZ") == CoarseTag::kVerbBase);
  CHECK(coarse_tag_for("VBD") == CoarseTag::kVerbPast);
  CHECK(coarse_tag_for("VBG") == CoarseTag::kVerbGerund);
  CHECK(coarse_tag_for("VBN") == CoarseTag::kVerbParticiple);
  CHECK_FALSE(coarse_tag_for("DT").has_value());
  CHECK_FALSE(coarse_tag_for("CC").has_value());
  CHECK_FALSE(coarse_tag_for(".").has_value());
}

TEST_CASE("filter_tokens lowercases, drops unmapped tags and keeps punctuation classes") {
  auto out = filter_tokens({{"The", "DT"}, {"Rain", "NN"}}, kEmptyStops);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == TokenTag{"rain", CoarseTag::kNoun});

  out = filter_tokens({{"!", "."}, {",", ","}}, kEmptyStops);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == TokenTag{"!", CoarseTag::kExclaim});

  out = filter_tokens({{"snowing", "VBG"}}, kEmptyStops);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == TokenTag{"snowing", CoarseTag::kVerbGerund});

  out = filter_tokens({{"?", "."}}, kEmptyStops);
  REQUIRE(out.size() == 1);
  CHECK(out[0].tag == CoarseTag::kQuestion);
}

TEST_CASE("filter_tokens applies the stoplist to the lowercased form") {
  Stoplist stops{"the", "is"};
  auto out = filter_tokens({{"THE", "DT"}, {"Is", "VBZ"}, {"rain", "NN"}}, stops);
  REQUIRE(out.size() == 1);
  CHECK(out[0].token == "rain");
}

TEST_CASE("split_compounds splits on dash and slash, keeping the tag") {
  auto out = split_compounds({{"ice-cold", CoarseTag::kAdj}});
  REQUIRE(out.size() == 2);
  CHECK(out[0] == TokenTag{"ice", CoarseTag::kAdj});
  CHECK(out[1] == TokenTag{"cold", CoarseTag::kAdj});

  out = split_compounds({{"hot/humid", CoarseTag::kAdj}});
  REQUIRE(out.size() == 2);
  CHECK(out[0].token == "hot");
  CHECK(out[1].token == "humid");

  out = split_compounds({{"--/-", CoarseTag::kNoun}, {"plain", CoarseTag::kNoun}});
  REQUIRE(out.size() == 1);
  CHECK(out[0].token == "plain");
}

TEST_CASE("lemmatize maps known forms per tag and passes unknowns through") {
  Lexicon lexicon = Lexicon::load(testutil::data_dir() + "/toy_lexicon.txt");
  CHECK(lemmatize({"dogs", CoarseTag::kNoun}, lexicon) == TokenTag{"dog", CoarseTag::kNoun});
  CHECK(lemmatize({"raining", CoarseTag::kVerbGerund}, lexicon) ==
        TokenTag{"rain", CoarseTag::kVerbGerund});
  // The mapping is keyed on (form, tag): the noun "raining" is unknown.
  CHECK(lemmatize({"raining", CoarseTag::kNoun}, lexicon).token == "raining");
  CHECK(lemmatize({"zorp", CoarseTag::kNoun}, lexicon).token == "zorp");
}

TEST_CASE("bag assigns dense indices in first-seen order and counts repeats") {
  BagOfWords bag;
  bag.add({"a", CoarseTag::kNoun});
  bag.add({"b", CoarseTag::kNoun});
  bag.add({"a", CoarseTag::kNoun});
  bag.add({"a", CoarseTag::kAdj});
  REQUIRE(bag.size() == 3);
  const BagEntry* a = bag.find({"a", CoarseTag::kNoun});
  REQUIRE(a != nullptr);
  CHECK(a->index == 0);
  CHECK(a->count == 2);
  CHECK(bag.find({"a", CoarseTag::kAdj})->index == 2);
  CHECK(bag.find({"c", CoarseTag::kNoun}) == nullptr);
  for (std::size_t i = 0; i < bag.entries().size(); ++i) CHECK(bag.entries()[i].index == i);
}

TEST_CASE("pruning keeps strictly-above-threshold pairs and converts via hypernyms") {
  Lexicon lexicon = Lexicon::load(testutil::data_dir() + "/toy_lexicon.txt");

  SUBCASE("below-threshold pair converts to its hypernym") {
    BagOfWords bag;
    bag.add_with_count({"dog", CoarseTag::kNoun}, 7);
    bag.add_with_count({"poodle", CoarseTag::kNoun}, 2);
    PruneResult r = prune_bag(bag, lexicon, 5);
    CHECK(r.kept.size() == 1);
    CHECK(r.kept.find({"dog", CoarseTag::kNoun})->index == 0);
    REQUIRE(r.conversions.size() == 1);
    const TokenTag* to = r.conversions.find({"poodle", CoarseTag::kNoun});
    REQUIRE(to != nullptr);
    CHECK(*to == TokenTag{"dog", CoarseTag::kNoun});
  }

  SUBCASE("pairs with no reachable retained lemma are dropped") {
    BagOfWords bag;
    bag.add_with_count({"dog", CoarseTag::kNoun}, 7);
    bag.add_with_count({"zorp", CoarseTag::kNoun}, 1);
    PruneResult r = prune_bag(bag, lexicon, 5);
    CHECK(r.kept.size() == 1);
    CHECK(r.conversions.size() == 0);
    CHECK(r.conversions.find({"zorp", CoarseTag::kNoun}) == nullptr);
  }

  SUBCASE("search walks multiple levels when intermediates are also pruned") {
    BagOfWords bag;
    bag.add_with_count({"animal", CoarseTag::kNoun}, 9);
    bag.add_with_count({"cat", CoarseTag::kNoun}, 3);
    bag.add_with_count({"lion", CoarseTag::kNoun}, 2);
    PruneResult r = prune_bag(bag, lexicon, 5);
    CHECK(r.kept.size() == 1);
    REQUIRE(r.conversions.size() == 2);
    CHECK(*r.conversions.find({"cat", CoarseTag::kNoun}) ==
          TokenTag{"animal", CoarseTag::kNoun});
    CHECK(*r.conversions.find({"lion", CoarseTag::kNoun}) ==
          TokenTag{"animal", CoarseTag::kNoun});
  }

  SUBCASE("the tag travels with the query, so cross-tag matches never happen") {
    BagOfWords bag;
    bag.add_with_count({"rain", CoarseTag::kNoun}, 9);
    bag.add_with_count({"rain", CoarseTag::kVerbGerund}, 1);
    PruneResult r = prune_bag(bag, lexicon, 5);
    // The gerund cannot land on the noun feature; no other gerund exists.
    CHECK(r.conversions.size() == 0);
  }
}

TEST_CASE("conversion targets always clear the threshold") {
  for (std::uint64_t threshold : {0ull, 2ull, 5ull}) {
    ToyPipeline pipe(threshold);
    for (const auto& [from, to] : pipe.pruned.conversions.entries()) {
      const BagEntry* target = pipe.bag.find(to);
      REQUIRE(target != nullptr);
      CHECK(target->count > threshold);
      CHECK(pipe.pruned.kept.contains(to));
      CHECK_FALSE(pipe.pruned.kept.contains(from));
    }
  }
}

TEST_CASE("pruning partitions the vocabulary into kept, converted and dropped") {
  ToyPipeline pipe(5);
  std::size_t kept = 0, converted = 0, dropped = 0;
  for (const BagEntry& entry : pipe.bag.entries()) {
    const bool in_kept = pipe.pruned.kept.contains(entry.pair);
    const bool in_conv = pipe.pruned.conversions.find(entry.pair) != nullptr;
    CHECK_FALSE((in_kept && in_conv));
    if (in_kept) {
      ++kept;
      CHECK(entry.count > 5);
      // Counts survive the re-indexing untouched.
      CHECK(pipe.pruned.kept.find(entry.pair)->count == entry.count);
    } else {
      CHECK(entry.count <= 5);
      in_conv ? ++converted : ++dropped;
    }
  }
  CHECK(kept == pipe.pruned.kept.size());
  CHECK(converted == pipe.pruned.conversions.size());
  CHECK(kept + converted + dropped == pipe.bag.size());
  CHECK(kept == 9);
  CHECK(converted == 7);
  CHECK(dropped == 8);
}

TEST_CASE("vectorize maps direct hits and conversions onto sorted unique indices") {
  ToyPipeline pipe(5);
  const std::vector<TokenTag> msg{{"poodle", CoarseTag::kNoun},
                                  {"dog", CoarseTag::kNoun},
                                  {"zorp", CoarseTag::kNoun},
                                  {"rain", CoarseTag::kNoun}};
  SparseBinaryVector v = vectorize(msg, pipe.pruned.kept, pipe.pruned.conversions);
  CHECK(v.dimension == 9);
  // poodle converts onto dog's feature; the duplicate collapses.
  CHECK(v.on_indices == std::vector<std::uint32_t>{0, 5});

  SparseBinaryVector again = vectorize(msg, pipe.pruned.kept, pipe.pruned.conversions);
  CHECK(v == again);
}

TEST_CASE("the toy corpus reproduces the frozen goldens byte for byte") {
  struct Case {
    std::uint64_t threshold;
    const char* suffix;
  };
  for (const Case c : {Case{5, "k5"}, Case{0, "k0"}}) {
    CAPTURE(c.threshold);
    ToyPipeline pipe(c.threshold);
    TempDir dir;

    save_bag(pipe.pruned.kept, dir.file("bag.tsv"));
    save_conversions(pipe.pruned.conversions, dir.file("conversions.tsv"));
    lsa::save_sparse_matrix(lsa::from_binary_vectors(pipe.vectors), dir.file("vectors.smat"));

    const std::string golden = testutil::data_dir() + "/golden/";
    CHECK(testutil::slurp(dir.file("bag.tsv")) ==
          testutil::slurp(golden + "bag_" + c.suffix + ".tsv"));
    CHECK(testutil::slurp(dir.file("conversions.tsv")) ==
          testutil::slurp(golden + "conversions_" + c.suffix + ".tsv"));
    CHECK(testutil::slurp(dir.file("vectors.smat")) ==
          testutil::slurp(golden + "vectors_" + c.suffix + ".smat"));
  }
}

TEST_CASE("rerunning the pipeline is byte-identical") {
  TempDir dir;
  std::string first, second;
  for (int run = 0; run < 2; ++run) {
    ToyPipeline pipe(5);
    const std::string path = dir.file("bag_run" + std::to_string(run) + ".tsv");
    save_bag(pipe.pruned.kept, path);
    save_conversions(pipe.pruned.conversions,
                     dir.file("conv_run" + std::to_string(run) + ".tsv"));
    (run == 0 ? first : second) =
        testutil::slurp(path) + testutil::slurp(dir.file("conv_run" + std::to_string(run) + ".tsv"));
  }
  CHECK(first == second);
}

TEST_CASE("bag and conversion files round-trip") {
  ToyPipeline pipe(5);
  TempDir dir;
  save_bag(pipe.pruned.kept, dir.file("bag.tsv"));
  save_conversions(pipe.pruned.conversions, dir.file("conv.tsv"));

  BagOfWords bag = load_bag(dir.file("bag.tsv"));
  REQUIRE(bag.size() == pipe.pruned.kept.size());
  for (const BagEntry& entry : pipe.pruned.kept.entries()) {
    const BagEntry* loaded = bag.find(entry.pair);
    REQUIRE(loaded != nullptr);
    CHECK(loaded->index == entry.index);
    CHECK(loaded->count == entry.count);
  }

  ConversionList conv = load_conversions(dir.file("conv.tsv"));
  REQUIRE(conv.size() == pipe.pruned.conversions.size());
  for (const auto& [from, to] : pipe.pruned.conversions.entries()) {
    const TokenTag* loaded = conv.find(from);
    REQUIRE(loaded != nullptr);
    CHECK(*loaded == to);
  }
}

TEST_CASE("load_bag rejects out-of-order indices") {
  TempDir dir;
  const std::string path =
      dir.write("bad.tsv", "rain\tNOUN\t1\t8\ncold\tADJ\t0\t6\n");
  CHECK_THROWS_AS(load_bag(path), DataError);
}

TEST_CASE("load_tagged_corpus splits on the last underscore") {
  TempDir dir;
  const std::string path = dir.write("c.txt", "ice_cream_NN is_VBZ\r\nwow_UH\n");
  auto corpus = load_tagged_corpus(path);
  REQUIRE(corpus.size() == 2);
  REQUIRE(corpus[0].size() == 2);
  CHECK(corpus[0][0].first == "ice_cream");
  CHECK(corpus[0][0].second == "NN");
  CHECK(corpus[1][0].second == "UH");
}

TEST_CASE("load_tagged_corpus names the offending line") {
  TempDir dir;
  const std::string path = dir.write("c.txt", "fine_NN\nbroken\n");
  CHECK_THROWS_WITH_AS(load_tagged_corpus(path), doctest::Contains("broken"), DataError);
}

TEST_CASE("tokenize_fallback keeps words, hashtags and terminal punctuation") {
  auto tokens = tokenize_fallback("So cold!! #weather @bob, right?");
  std::vector<std::pair<std::string, std::string>> expected{
      {"So", "NN"}, {"cold", "NN"}, {"!", "."}, {"!", "."},
      {"#weather", "NN"}, {"@bob", "NN"}, {"right", "NN"}, {"?", "."}};
  CHECK(tokens == expected);
}

TEST_CASE("lexicon validation rejects dangling references and cycles") {
  SUBCASE("dangling sense") {
    Lexicon lex;
    lex.add_synset("S1", {"dog"});
    lex.add_senses("dog", {"S1", "S9"});
    CHECK_THROWS_WITH_AS(lex.validate(), doctest::Contains("S9"), DataError);
  }
  SUBCASE("dangling hypernym") {
    Lexicon lex;
    lex.add_synset("S1", {"dog"});
    lex.add_hypernyms("S1", {"S7"});
    CHECK_THROWS_WITH_AS(lex.validate(), doctest::Contains("S7"), DataError);
  }
  SUBCASE("hypernym cycle") {
    Lexicon lex;
    lex.add_synset("S1", {"a"});
    lex.add_synset("S2", {"b"});
    lex.add_synset("S3", {"c"});
    lex.add_hypernyms("S1", {"S2"});
    lex.add_hypernyms("S2", {"S3"});
    lex.add_hypernyms("S3", {"S1"});
    CHECK_THROWS_WITH_AS(lex.validate(), doctest::Contains("cycle"), DataError);
  }
  SUBCASE("diamond sharing is not a cycle") {
    Lexicon lex;
    lex.add_synset("S1", {"a"});
    lex.add_synset("S2", {"b"});
    lex.add_synset("S3", {"c"});
    lex.add_synset("S4", {"d"});
    lex.add_hypernyms("S1", {"S2", "S3"});
    lex.add_hypernyms("S2", {"S4"});
    lex.add_hypernyms("S3", {"S4"});
    CHECK_NOTHROW(lex.validate());
  }
}

TEST_CASE("bfs respects sense order before moving up a level") {
  // chilly's first sense leads to hot (pruned); the second sense holds cold
  // (kept). The match must come from the second sense at level zero, not from
  // any hypernym.
  Lexicon lexicon = Lexicon::load(testutil::data_dir() + "/toy_lexicon.txt");
  BagOfWords bag;
  bag.add_with_count({"cold", CoarseTag::kAdj}, 6);
  bag.add_with_count({"hot", CoarseTag::kAdj}, 3);
  bag.add_with_count({"chilly", CoarseTag::kAdj}, 2);
  PruneResult r = prune_bag(bag, lexicon, 5);
  REQUIRE(r.conversions.size() == 1);
  CHECK(*r.conversions.find({"chilly", CoarseTag::kAdj}) == TokenTag{"cold", CoarseTag::kAdj});
}
