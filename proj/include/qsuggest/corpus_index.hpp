#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qsuggest {

struct Document {
  std::string doc_id;
  std::string text;
  std::vector<std::string> tokens;
};

Document make_document(std::string doc_id, std::string text);

/// Corpus file: one `doc_id<TAB>text` per line. Throws DataError on a
/// malformed line.
std::vector<Document> read_corpus(std::istream& in);
void write_corpus(std::ostream& out, std::span<const Document> docs);

using DocIndex = std::uint32_t;

/// Immutable term -> document postings over a static collection.
class InvertedIndex {
 public:
  InvertedIndex() = default;

  /// Throws DataError on a duplicate doc_id.
  static InvertedIndex build(std::vector<Document> docs);

  std::size_t size() const { return docs_.size(); }
  std::span<const Document> documents() const { return docs_; }
  const Document& document(DocIndex i) const { return docs_.at(i); }
  std::optional<DocIndex> find(std::string_view doc_id) const;

  /// Sorted, duplicate-free.
  std::span<const DocIndex> postings(std::string_view term) const;
  std::size_t document_frequency(std::string_view term) const { return postings(term).size(); }
  std::size_t vocabulary_size() const { return postings_.size(); }

  /// D_q: documents containing every distinct token of the query. An empty
  /// token list yields an empty set.
  std::vector<DocIndex> docs_containing_all_terms(std::string_view query) const;
  std::vector<std::string> doc_ids_containing_all_terms(std::string_view query) const;

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, DocIndex> by_id_;
  std::unordered_map<std::string, std::vector<DocIndex>> postings_;
};

}  // namespace qsuggest
