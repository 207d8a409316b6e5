#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dsse {

using DocId = std::uint64_t;
using GroupId = std::string;

inline const GroupId kDefaultGroup = "G1";

struct Document
{
    DocId id = 0;
    std::string name;
    std::string body;
    GroupId group = kDefaultGroup;
};

struct Corpus
{
    std::vector<Document> documents;
    std::set<GroupId> groups;

    std::size_t n() const { return documents.size(); }

    /// Throws DomainError when ids are not exactly 1..n, names repeat, or a
    /// document's group is not listed.
    void validate() const;

    const Document* find(DocId id) const;
    const Document* find(std::string_view name) const;
};

/// Keyword extractor. Output must be deterministic and duplicate free.
using Tokenizer = std::function<std::set<std::string>(std::string_view)>;

/// Lowercases ASCII, splits on anything that is not [a-z0-9], drops tokens
/// shorter than two characters. Throws DecodeError on malformed UTF-8.
std::set<std::string> default_tokenize(std::string_view body);

std::set<std::string> extract_keywords(std::string_view body, const Tokenizer& tokenizer = default_tokenize);

bool is_valid_utf8(std::string_view s);

struct InvertedIndex
{
    // keyword -> strictly ascending doc ids
    std::map<std::string, std::vector<DocId>> entries;

    std::size_t z() const { return entries.size(); }

    const std::vector<DocId>* find(const std::string& keyword) const;
};

InvertedIndex build_inverted_index(const Corpus& corpus, const Tokenizer& tokenizer = default_tokenize);

/// Parses `name<TAB>group` lines. Blank lines and lines starting with '#' are skipped.
std::map<std::string, GroupId> read_group_map(const std::filesystem::path& path);

/// Loads every regular file in `dir` (sorted by filename) as a document; ids are
/// assigned 1..n in that order starting at `first_id`. Documents missing from
/// `groups` fall into G1.
Corpus load_corpus_directory(const std::filesystem::path& dir,
                             const std::map<std::string, GroupId>& groups,
                             DocId first_id = 1);

} // namespace dsse
