#include "qsuggest/corpus_index.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "qsuggest/error.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest {

Document make_document(std::string doc_id, std::string text) {
  Document doc{std::move(doc_id), std::move(text), {}};
  doc.tokens = tokenize(doc.text);
  return doc;
}

std::vector<Document> read_corpus(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw DataError(fmt::format("corpus line {}: expected doc_id<TAB>text", line_no));
    }
    docs.push_back(make_document(line.substr(0, tab), line.substr(tab + 1)));
  }
  return docs;
}

void write_corpus(std::ostream& out, std::span<const Document> docs) {
  for (const auto& d : docs) out << d.doc_id << '\t' << d.text << '\n';
}

InvertedIndex InvertedIndex::build(std::vector<Document> docs) {
  InvertedIndex index;
  index.docs_ = std::move(docs);
  for (std::size_t i = 0; i < index.docs_.size(); ++i) {
    const auto& doc = index.docs_[i];
    const auto id = static_cast<DocIndex>(i);
    if (!index.by_id_.emplace(doc.doc_id, id).second) {
      throw DataError(fmt::format("duplicate doc_id '{}'", doc.doc_id));
    }
    for (const auto& term : doc.tokens) {
      auto& list = index.postings_[term];
      // Documents are visited in index order, so a repeat can only be at the back.
      if (list.empty() || list.back() != id) list.push_back(id);
    }
  }
  return index;
}

std::optional<DocIndex> InvertedIndex::find(std::string_view doc_id) const {
  const auto it = by_id_.find(std::string(doc_id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::span<const DocIndex> InvertedIndex::postings(std::string_view term) const {
  const auto it = postings_.find(std::string(term));
  if (it == postings_.end()) return {};
  return it->second;
}

std::vector<DocIndex> InvertedIndex::docs_containing_all_terms(std::string_view query) const {
  auto terms = tokenize(query);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  if (terms.empty()) return {};

  std::vector<std::span<const DocIndex>> lists;
  for (const auto& t : terms) {
    auto p = postings(t);
    if (p.empty()) return {};
    lists.push_back(p);
  }
  std::sort(lists.begin(), lists.end(),
            [](const auto& a, const auto& b) { return a.size() < b.size(); });

  std::vector<DocIndex> result(lists.front().begin(), lists.front().end());
  std::vector<DocIndex> scratch;
  for (std::size_t i = 1; i < lists.size() && !result.empty(); ++i) {
    scratch.clear();
    std::set_intersection(result.begin(), result.end(), lists[i].begin(), lists[i].end(),
                          std::back_inserter(scratch));
    result.swap(scratch);
  }
  return result;
}

std::vector<std::string> InvertedIndex::doc_ids_containing_all_terms(std::string_view query) const {
  std::vector<std::string> ids;
  for (auto i : docs_containing_all_terms(query)) ids.push_back(docs_[i].doc_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace qsuggest
