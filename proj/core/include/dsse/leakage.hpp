#pragma once

#include "dsse/config.hpp"
#include "dsse/corpus.hpp"
#include "dsse/system.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dsse {

// ---------------------------------------------------------------------------
// Histories
// ---------------------------------------------------------------------------

enum class OpKind
{
    Search,
    Delete,
    Add,
};

struct Operation
{
    OpKind kind = OpKind::Search;
    std::string keyword;         // search
    std::vector<GroupId> groups; // issuing user's groups; empty means the owner searches
    std::string name;            // delete
    std::vector<Document> docs;  // add; ids are assigned on replay
};

struct History
{
    Corpus corpus;
    std::vector<Operation> ops;

    std::set<GroupId> all_groups() const;
};

// Text form, one directive per line:
//   doc <name> <group> <body...>        setup document (ids follow line order)
//   search <keyword> [owner | G1,G2]    default issuer is the owner
//   delete <name>
//   add <name> <group> <body...>        starts an addition batch
//   and <name> <group> <body...>        adds a document to the current batch
History parse_history(std::string_view text);
History load_history(const std::filesystem::path& path);
std::string serialize_history(const History& h);

struct HistoryShape
{
    std::size_t n = 100;
    std::size_t vocabulary = 60;
    std::size_t ops = 50;
    std::size_t groups = 3;
    std::size_t min_words = 3;
    std::size_t max_words = 12;
};

/// Random history over a Zipf-distributed vocabulary. Mixes searches (some for
/// absent keywords), deletions and additions that introduce new keywords.
History random_history(std::uint64_t seed, const HistoryShape& shape = {});

// ---------------------------------------------------------------------------
// Plaintext reference
// ---------------------------------------------------------------------------

class PlainReference
{
public:
    struct Entry
    {
        std::string name;
        GroupId group;
        std::string body;
        std::set<std::string> keywords;
    };

    PlainReference(const Corpus& corpus, std::uint64_t upsilon, Tokenizer tokenizer = default_tokenize);

    /// Live documents containing `keyword`, optionally restricted to groups.
    std::vector<DocId> search(const std::string& keyword, const std::vector<GroupId>* groups = nullptr) const;

    void remove(const std::string& name);
    void add(DocId id, const Document& doc);

    /// 0 no row, 1 bit-vector keyword, 2 list keyword.
    int payload_type(const std::string& keyword) const;
    /// Kind of block that holds `id` for `keyword`.
    PayloadKind block_kind(const std::string& keyword, DocId id) const;

    const std::map<DocId, Entry>& documents() const { return docs_; }
    std::optional<DocId> id_of(const std::string& name) const;
    std::uint64_t n_setup() const { return n_setup_; }
    const std::map<std::string, PayloadKind>& setup_kinds() const { return setup_kind_; }

private:
    Tokenizer tokenizer_;
    std::uint64_t n_setup_ = 0;
    std::map<DocId, Entry> docs_;
    std::map<std::string, DocId> names_;
    std::map<std::string, PayloadKind> setup_kind_;
    std::set<std::string> added_keywords_;
};

/// Ciphertext length of a document as stored: padded body plus header.
std::size_t stored_ciphertext_length(std::size_t body_len, std::size_t keywords, std::size_t avg_w);

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

/// One appearance of a keyword in the history.
struct TraceItem
{
    std::size_t op = 0;
    char kind = 'S';      // S search, D deletion cell, A addition
    int payload_type = 0; // S: at search time; D: kind of the touched block; A: before the addition
    std::vector<Hit> hits;     // S
    std::uint32_t block = 0;   // D
    std::uint32_t slot = 0;    // D
    std::uint64_t count = 0;   // A

    auto operator<=>(const TraceItem&) const = default;
    std::string render() const;
};

struct TraceOp
{
    OpKind kind = OpKind::Search;
    std::vector<GroupId> labels; // search: token labels, sorted
    bool owner = false;
    DocId deleted = 0;
    std::size_t ciphertext_bytes = 0;
    std::size_t cells = 0;
    std::vector<std::tuple<DocId, std::size_t, GroupId>> added; // id, |C|, group

    bool operator==(const TraceOp&) const = default;
    std::string render() const;
};

/// Leakage of a history. Keyword identities are replaced by the equality
/// pattern: each keyword contributes its sorted list of appearances, and the
/// keyword lists themselves are sorted, so two traces compare equal exactly
/// when some renaming of keywords maps one onto the other.
struct Trace
{
    PublicParams params;
    std::map<DocId, std::size_t> lengths;
    std::map<DocId, GroupId> groups; // authorization mode
    std::size_t bitvec_entries = 0;
    std::size_t list_entries = 0;
    std::vector<TraceOp> ops;
    std::vector<std::vector<TraceItem>> keywords;

    std::vector<std::string> lines() const;
    std::string text() const;
    bool operator==(const Trace& o) const { return lines() == o.lines(); }
};

class TraceBuilder
{
public:
    Trace& trace() { return trace_; }
    void op(TraceOp op) { trace_.ops.push_back(std::move(op)); }
    void note(const std::string& keyword_key, TraceItem item) { items_[keyword_key].push_back(std::move(item)); }
    Trace finish();

private:
    Trace trace_;
    std::map<std::string, std::vector<TraceItem>> items_;
};

/// Empty when equal; otherwise the first differing line of each side.
std::string trace_diff(const Trace& expected, const Trace& actual);

struct SetupObservation
{
    PublicParams params;
    std::map<DocId, std::size_t> lengths;
    std::map<DocId, GroupId> groups;
    std::size_t bitvec_entries = 0;
    std::size_t list_entries = 0;
};

SetupObservation observe_setup(const CloudServer& server);

/// Trace as reconstructed from what the server saw: tags, touched blocks and
/// decrypted identifiers.
Trace server_trace(const SetupObservation& setup, const std::vector<Observation>& log);

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

/// Everything the server holds or receives: state after setup, state at the
/// end, and every token in order (wire encoded).
struct View
{
    Bytes setup_state;
    Bytes final_state;
    std::vector<Bytes> tokens;
};

struct ViewShape
{
    std::vector<std::string> lines;
    bool operator==(const ViewShape&) const = default;
};

/// Sizes and structure only: ciphertext lengths, entry block counts and kinds,
/// update-index cell counts, region population, helper levels, token types,
/// widths and tag equality pattern.
ViewShape view_shape(const View& view);

/// Empty when the shapes agree; otherwise names the first difference.
std::string shape_diff(const ViewShape& a, const ViewShape& b);

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

struct RunOptions
{
    bool keep_snapshots = false; // state after setup and after every operation
    bool check_decryption = true;
};

struct RealRun
{
    Trace ground_truth;
    Trace observed;
    View view;
    std::vector<Bytes> snapshots;
    std::size_t searches = 0;
    std::size_t result_mismatches = 0; // searches whose ids differ from the reference
    std::size_t false_accepts = 0;     // ids returned that the reference does not have
    std::size_t missed = 0;            // reference ids not returned
    std::size_t decrypt_failures = 0;
    std::size_t oracle_conflicts = 0;  // oracle inputs reused with a different plaintext
    std::vector<std::string> notes;
};

/// Replays the history against a fresh owner and server.
RealRun run_history(const History& history, const EngineConfig& config, const RunOptions& options = {});

struct SimulatedRun
{
    Trace observed; // what the server saw while the simulated view was replayed
    View view;
    std::vector<Bytes> snapshots;
    std::size_t programmed_search = 0;
    std::size_t programmed_deletion = 0;
};

/// Builds a view from the trace alone (random index, documents and update
/// index; tokens whose oracle answers are programmed on demand) and replays it
/// through the server code. Throws Error when the trace is inconsistent.
SimulatedRun simulate(const Trace& trace, std::uint64_t seed, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------------

struct AuditCheck
{
    std::string name;
    bool passed = false;
    std::string detail;
};

struct AuditReport
{
    std::vector<AuditCheck> checks;
    RealRun real;
    std::optional<SimulatedRun> simulated;

    bool passed() const;
    std::string text() const;
    std::string json_lines() const;
};

AuditReport audit(const History& history, const EngineConfig& config, std::uint64_t sim_seed = 1);

} // namespace dsse
