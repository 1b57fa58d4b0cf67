#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "qsuggest/corpus_index.hpp"
#include "qsuggest/error.hpp"
#include "qsuggest/text.hpp"

using namespace qsuggest;

namespace {

InvertedIndex small_index() {
  return InvertedIndex::build({make_document("d1", "a b"), make_document("d2", "b c")});
}

using Ids = std::vector<std::string>;

}  // namespace

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("Lecture-Notes 2012"), (Ids{"lecture", "notes", "2012"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("université"), (Ids{"université"}));
}

TEST(Tokenize, UnicodeCaseAndPunctuation) {
  EXPECT_EQ(tokenize("ÉCOLE Straße"), (Ids{"école", "straße"}));
  EXPECT_EQ(tokenize("ΑΘΗΝΑ, Москва!"), (Ids{"αθηνα", "москва"}));
  EXPECT_EQ(tokenize("fees–deadline «notes»"), (Ids{"fees", "deadline", "notes"}));
  EXPECT_EQ(tokenize("  ...  "), Ids{});
}

TEST(Utf8, MalformedBytesDoNotJoinTokens) {
  const std::string bad = std::string("ab") + '\xff' + "cd";
  EXPECT_EQ(tokenize(bad), (Ids{"ab", "cd"}));
  EXPECT_EQ(encode_utf8(decode_utf8("héllo ✓")), "héllo ✓");
}

TEST(BuildIndex, Postings) {
  const auto index = small_index();
  ASSERT_EQ(index.postings("b").size(), 2u);
  EXPECT_EQ(index.document(index.postings("b")[0]).doc_id, "d1");
  EXPECT_EQ(index.document(index.postings("b")[1]).doc_id, "d2");
  ASSERT_EQ(index.postings("a").size(), 1u);
  EXPECT_EQ(index.document(index.postings("a")[0]).doc_id, "d1");
  EXPECT_EQ(index.document_frequency("zzz"), 0u);
}

TEST(BuildIndex, EmptyCollection) {
  const auto index = InvertedIndex::build({});
  EXPECT_EQ(index.size(), 0u);
  EXPECT_EQ(index.vocabulary_size(), 0u);
  EXPECT_TRUE(index.docs_containing_all_terms("a").empty());
}

TEST(BuildIndex, RepeatedTermHasSetSemantics) {
  const auto index = InvertedIndex::build({make_document("d1", "b b b")});
  EXPECT_EQ(index.postings("b").size(), 1u);
}

TEST(BuildIndex, DuplicateIdIsAnError) {
  EXPECT_THROW(InvertedIndex::build({make_document("d1", "a"), make_document("d1", "b")}), DataError);
}

TEST(ContainsAll, Examples) {
  const auto index = small_index();
  EXPECT_EQ(index.doc_ids_containing_all_terms("b"), (Ids{"d1", "d2"}));
  EXPECT_TRUE(index.doc_ids_containing_all_terms("a c").empty());
  EXPECT_TRUE(index.doc_ids_containing_all_terms("zebra").empty());
  EXPECT_TRUE(index.doc_ids_containing_all_terms("").empty());
  EXPECT_EQ(index.doc_ids_containing_all_terms("B b"), (Ids{"d1", "d2"}));
}

TEST(ReadCorpus, ParsesAndRoundTrips) {
  std::istringstream in("d1\tCampus map\n# comment\nd2\tLibrary fees\n");
  const auto docs = read_corpus(in);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[1].tokens, (Ids{"library", "fees"}));
  std::ostringstream out;
  write_corpus(out, docs);
  std::istringstream again(out.str());
  const auto docs2 = read_corpus(again);
  ASSERT_EQ(docs2.size(), 2u);
  EXPECT_EQ(docs2[0].text, "Campus map");
}

TEST(ReadCorpus, MalformedLineIsAnError) {
  std::istringstream in("no tab here\n");
  EXPECT_THROW(read_corpus(in), DataError);
}

// Brute force over random corpora: every posting and every conjunctive query.
TEST(ContainsAll, MatchesFullScanOnRandomCorpora) {
  std::mt19937 gen(3);
  const std::vector<std::string> words{"a", "b", "c", "d", "e", "f", "g", "h"};
  for (int corpus = 0; corpus < 5; ++corpus) {
    std::vector<Document> docs;
    const int n = 1 + static_cast<int>(gen() % 200);
    for (int i = 0; i < n; ++i) {
      std::string text;
      const int len = static_cast<int>(gen() % 6);
      for (int k = 0; k < len; ++k) text += words[gen() % words.size()] + " ";
      docs.push_back(make_document("d" + std::to_string(i), text));
    }
    const auto index = InvertedIndex::build(docs);
    for (const auto& w : words) {
      for (auto d : index.postings(w)) {
        const auto& t = index.document(d).tokens;
        EXPECT_NE(std::find(t.begin(), t.end(), w), t.end());
      }
      EXPECT_TRUE(std::is_sorted(index.postings(w).begin(), index.postings(w).end()));
    }
    for (int q = 0; q < 1000; ++q) {
      std::string query;
      std::set<std::string> terms;
      const int len = 1 + static_cast<int>(gen() % 3);
      for (int k = 0; k < len; ++k) {
        const auto& w = words[gen() % words.size()];
        query += w + " ";
        terms.insert(w);
      }
      Ids expected;
      for (const auto& d : docs) {
        const std::set<std::string> have(d.tokens.begin(), d.tokens.end());
        if (std::includes(have.begin(), have.end(), terms.begin(), terms.end())) expected.push_back(d.doc_id);
      }
      std::sort(expected.begin(), expected.end());
      const auto got = index.doc_ids_containing_all_terms(query);
      ASSERT_EQ(got, expected) << query;
      // Adding a word never grows the result.
      const auto narrower = index.doc_ids_containing_all_terms(query + " " + words[gen() % words.size()]);
      EXPECT_LE(narrower.size(), got.size());
      EXPECT_TRUE(std::includes(got.begin(), got.end(), narrower.begin(), narrower.end()));
    }
  }
}
