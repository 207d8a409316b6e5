#include "fixtures.hpp"

#include <dsse/corpus.hpp>
#include <dsse/errors.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace dsse;
using namespace dsse::testing;

TEST(Tokenizer, EmptyBody)
{
    EXPECT_TRUE(extract_keywords("").empty());
}

TEST(Tokenizer, FoldsCaseAndDuplicates)
{
    EXPECT_EQ(extract_keywords("The cat, the CAT"), (std::set<std::string>{"the", "cat"}));
}

TEST(Tokenizer, DropsShortTokens)
{
    EXPECT_EQ(extract_keywords("a bb c-dd 7 42"), (std::set<std::string>{"bb", "dd", "42"}));
}

TEST(Tokenizer, RejectsMalformedUtf8)
{
    EXPECT_THROW(extract_keywords(std::string("ok \xC3\x28 bad")), DecodeError);
    EXPECT_THROW(extract_keywords(std::string("\xE2\x82")), DecodeError);
    EXPECT_NO_THROW(extract_keywords("caf\xC3\xA9 na\xC3\xAFve"));
}

TEST(Tokenizer, MatchesNaiveScannerOnRandomBodies)
{
    std::mt19937_64 rng(11);
    const std::string alphabet = "abcXYZ019 ,.;-_!\t\n";
    for (int doc = 0; doc < 10; ++doc) {
        std::string body;
        for (int i = 0; i < 400; ++i)
            body += alphabet[rng() % alphabet.size()];
        EXPECT_EQ(extract_keywords(body), naive_tokens(body)) << body;
    }
}

TEST(Tokenizer, PluggableTokenizerIsUsed)
{
    Tokenizer whole = [](std::string_view s) { return std::set<std::string>{std::string(s)}; };
    EXPECT_EQ(extract_keywords("Hello World", whole), (std::set<std::string>{"Hello World"}));
}

TEST(InvertedIndex, EmptyCorpus)
{
    Corpus c;
    EXPECT_EQ(build_inverted_index(c).z(), 0u);
}

TEST(InvertedIndex, WorkedExampleMembership)
{
    const auto ex = example41();
    const auto idx = build_inverted_index(ex.corpus);
    EXPECT_EQ(*idx.find("w1"), (std::vector<DocId>{2, 300}));
    EXPECT_EQ(*idx.find("w2"), (std::vector<DocId>{2, 56}));
    EXPECT_EQ(*idx.find("w3"), (std::vector<DocId>{300}));
    EXPECT_EQ(idx.z(), 3u);
    EXPECT_EQ(idx.find("w4"), nullptr);
}

TEST(InvertedIndex, MatchesBruteForceMembership)
{
    std::mt19937_64 rng(5);
    for (int round = 0; round < 5; ++round) {
        const auto c = random_corpus(rng, 50, 40);
        const auto idx = build_inverted_index(c);
        EXPECT_EQ(idx.entries, naive_index(c));
    }
}

TEST(InvertedIndex, Deterministic)
{
    std::mt19937_64 rng(9);
    const auto c = random_corpus(rng, 30, 20);
    EXPECT_EQ(build_inverted_index(c).entries, build_inverted_index(c).entries);
}

TEST(Corpus, RejectsDuplicateIds)
{
    Corpus c;
    c.groups = {"G1"};
    c.documents = {{1, "a", "x1", "G1"}, {1, "b", "x2", "G1"}};
    EXPECT_THROW(c.validate(), DomainError);
    EXPECT_THROW(build_inverted_index(c), DomainError);
}

TEST(Corpus, RejectsGapsDuplicateNamesAndUnknownGroups)
{
    Corpus gap;
    gap.groups = {"G1"};
    gap.documents = {{1, "a", "", "G1"}, {3, "b", "", "G1"}};
    EXPECT_THROW(gap.validate(), DomainError);

    Corpus names;
    names.groups = {"G1"};
    names.documents = {{1, "a", "", "G1"}, {2, "a", "", "G1"}};
    EXPECT_THROW(names.validate(), DomainError);

    Corpus groups;
    groups.groups = {"G1"};
    groups.documents = {{1, "a", "", "G9"}};
    EXPECT_THROW(groups.validate(), DomainError);
}

TEST(Corpus, LoadsDirectoryWithGroupSidecar)
{
    const auto dir = std::filesystem::temp_directory_path() / "dsse_corpus_dir";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir / "docs");
    std::ofstream(dir / "docs" / "b.txt") << "beta gamma";
    std::ofstream(dir / "docs" / "a.txt") << "alpha beta";
    std::ofstream(dir / "docs" / "c.txt") << "gamma";
    std::ofstream(dir / "groups.tsv") << "# name\tgroup\n\na.txt\tG2\nb.txt\tG3\n";

    const auto groups = read_group_map(dir / "groups.tsv");
    const auto c = load_corpus_directory(dir / "docs", groups);
    ASSERT_EQ(c.n(), 3u);
    EXPECT_EQ(c.documents[0].name, "a.txt");
    EXPECT_EQ(c.documents[0].id, 1u);
    EXPECT_EQ(c.documents[0].group, "G2");
    EXPECT_EQ(c.documents[1].group, "G3");
    EXPECT_EQ(c.documents[2].group, kDefaultGroup);
    EXPECT_EQ(c.groups, (std::set<GroupId>{"G1", "G2", "G3"}));
    EXPECT_NO_THROW(c.validate());
    std::filesystem::remove_all(dir);
}
