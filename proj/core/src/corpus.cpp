#include "dsse/corpus.hpp"

#include "dsse/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace dsse {

void Corpus::validate() const
{
    std::set<std::string> names;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        const auto& d = documents[i];
        if (d.id != i + 1)
            throw DomainError("document ids must be 1..n in order; got " + std::to_string(d.id) + " at position " +
                              std::to_string(i + 1));
        if (!names.insert(d.name).second)
            throw DomainError("duplicate document name: " + d.name);
        if (!groups.contains(d.group))
            throw DomainError("document " + d.name + " has unknown group " + d.group);
    }
}

const Document* Corpus::find(DocId id) const
{
    if (id >= 1 && id <= documents.size() && documents[id - 1].id == id)
        return &documents[id - 1];
    auto it = std::find_if(documents.begin(), documents.end(), [&](const Document& d) { return d.id == id; });
    return it == documents.end() ? nullptr : &*it;
}

const Document* Corpus::find(std::string_view name) const
{
    auto it = std::find_if(documents.begin(), documents.end(), [&](const Document& d) { return d.name == name; });
    return it == documents.end() ? nullptr : &*it;
}

bool is_valid_utf8(std::string_view s)
{
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xe0) == 0xc0) {
            extra = 1;
            cp = c & 0x1f;
        } else if ((c & 0xf0) == 0xe0) {
            extra = 2;
            cp = c & 0x0f;
        } else if ((c & 0xf8) == 0xf0) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= s.size())
            return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xc0) != 0x80)
                return false;
            cp = (cp << 6) | (cc & 0x3f);
        }
        // overlong forms, surrogates, out of range
        if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
            (cp >= 0xd800 && cp <= 0xdfff) || cp > 0x10ffff)
            return false;
        i += extra + 1;
    }
    return true;
}

std::set<std::string> default_tokenize(std::string_view body)
{
    if (!is_valid_utf8(body))
        throw DecodeError("document body is not valid UTF-8");
    std::set<std::string> out;
    std::string current;
    auto flush = [&] {
        if (current.size() >= 2)
            out.insert(current);
        current.clear();
    };
    for (char ch : body) {
        const auto c = static_cast<unsigned char>(ch);
        if (c >= 'A' && c <= 'Z')
            current.push_back(static_cast<char>(c - 'A' + 'a'));
        else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))
            current.push_back(static_cast<char>(c));
        else
            flush();
    }
    flush();
    return out;
}

std::set<std::string> extract_keywords(std::string_view body, const Tokenizer& tokenizer)
{
    return tokenizer(body);
}

const std::vector<DocId>* InvertedIndex::find(const std::string& keyword) const
{
    auto it = entries.find(keyword);
    return it == entries.end() ? nullptr : &it->second;
}

InvertedIndex build_inverted_index(const Corpus& corpus, const Tokenizer& tokenizer)
{
    std::set<DocId> seen;
    for (const auto& d : corpus.documents) {
        if (d.id == 0)
            throw DomainError("document id 0 is reserved for fake identifiers");
        if (!seen.insert(d.id).second)
            throw DomainError("duplicate document id " + std::to_string(d.id));
    }
    InvertedIndex index;
    // Visiting in ascending id order keeps every posting list sorted without a final sort.
    std::vector<const Document*> order;
    order.reserve(corpus.documents.size());
    for (const auto& d : corpus.documents)
        order.push_back(&d);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });
    for (const auto* d : order) {
        for (const auto& w : tokenizer(d->body))
            index.entries[w].push_back(d->id);
    }
    return index;
}

std::map<std::string, GroupId> read_group_map(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open group map " + path.string());
    std::map<std::string, GroupId> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected name<TAB>group");
        out[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return out;
}

Corpus load_corpus_directory(const std::filesystem::path& dir,
                             const std::map<std::string, GroupId>& groups,
                             DocId first_id)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw ConfigError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file())
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    Corpus corpus;
    DocId next = first_id;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        Document d;
        d.id = next++;
        d.name = f.filename().string();
        d.body = ss.str();
        auto g = groups.find(d.name);
        d.group = g == groups.end() ? kDefaultGroup : g->second;
        corpus.groups.insert(d.group);
        corpus.documents.push_back(std::move(d));
    }
    return corpus;
}

} // namespace dsse
