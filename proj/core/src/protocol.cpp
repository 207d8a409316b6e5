#include "dsse/protocol.hpp"

#include "dsse/errors.hpp"

#include <fstream>
#include <iterator>

namespace dsse {

namespace {

template <typename T>
Bytes raw(const Fixed256<T>& v)
{
    return Bytes(v.bytes.begin(), v.bytes.end());
}

template <typename T>
Fixed256<T> fixed(const Bytes& b)
{
    if (b.size() != 32)
        throw DecodeError("expected a 32-byte value");
    return fixed_from_view<T>(b);
}

void expect_fields(const Record& r, std::size_t n, const char* what)
{
    if (r.size() != n)
        throw DecodeError(std::string("malformed ") + what + " record");
}

void expect_done(const RecordReader& r)
{
    if (!r.done())
        throw DecodeError("trailing data after message");
}

} // namespace

Bytes encode(const Trapdoor& td)
{
    RecordWriter w;
    w.section("TRPD", {{raw(td.tag), raw(td.key)}});
    return w.bytes();
}

Bytes encode(const AuthTrapdoor& td)
{
    RecordWriter w;
    w.section("ATRP", {{raw(td.tag), field_u64(td.owner ? 1 : 0)}});
    std::vector<Record> comps;
    for (const auto& c : td.components)
        comps.push_back({field(c.group), raw(c.key)});
    w.section("ACMP", comps);
    return w.bytes();
}

Bytes encode(const DeletionToken& token)
{
    RecordWriter w;
    w.section("DTOK", {{raw(token.doc_tag), raw(token.key)}});
    return w.bytes();
}

Bytes encode(const AdditionRequest& request)
{
    std::vector<Record> recs;
    for (const auto& [tag, count] : request.items)
        recs.push_back({raw(tag), field_u64(count)});
    RecordWriter w;
    w.section("AREQ", recs);
    return w.bytes();
}

Bytes encode(const AdditionResponse& response, std::size_t eta)
{
    std::vector<Record> recs;
    for (const auto& item : response.items) {
        Record r{raw(item.tag), field_u64(item.counter)};
        for (const auto& b : item.blocks) {
            r.push_back(field_u64(b.column));
            r.push_back(encode_block(b.block, eta));
        }
        recs.push_back(std::move(r));
    }
    RecordWriter w;
    w.section("ARSP", recs);
    return w.bytes();
}

Bytes encode(const AdditionCommit& commit, std::size_t eta)
{
    std::vector<Record> upd;
    for (const auto& u : commit.updates) {
        Record r{raw(u.tag), field_u64(u.new_counter)};
        for (const auto& b : u.blocks) {
            r.push_back(field_u64(b.column));
            r.push_back(field_u64(b.fresh ? 1 : 0));
            r.push_back(encode_block(b.block, eta));
        }
        upd.push_back(std::move(r));
    }
    std::vector<Record> rows;
    for (const auto& row : commit.update_rows) {
        Record r{raw(row.entry.doc_tag), field_u64(row.id)};
        for (const auto& c : row.entry.cells)
            r.push_back(c);
        rows.push_back(std::move(r));
    }
    std::vector<Record> docs;
    for (const auto& d : commit.documents)
        docs.push_back({field_u64(d.id), field(d.group), d.ciphertext});
    RecordWriter w;
    w.section("KUPD", upd);
    w.section("UROW", rows);
    w.section("NDOC", docs);
    return w.bytes();
}

Trapdoor decode_trapdoor(Bytes data)
{
    RecordReader r(std::move(data));
    auto recs = r.section("TRPD");
    if (recs.size() != 1)
        throw DecodeError("malformed trapdoor");
    expect_fields(recs[0], 2, "trapdoor");
    expect_done(r);
    return {fixed<KeywordTagTag>(recs[0][0]), fixed<OracleKeyTag>(recs[0][1])};
}

AuthTrapdoor decode_auth_trapdoor(Bytes data)
{
    RecordReader r(std::move(data));
    auto head = r.section("ATRP");
    if (head.size() != 1)
        throw DecodeError("malformed authorization trapdoor");
    expect_fields(head[0], 2, "authorization trapdoor");
    AuthTrapdoor td;
    td.tag = fixed<KeywordTagTag>(head[0][0]);
    td.owner = as_u64(head[0][1]) != 0;
    for (const auto& c : r.section("ACMP")) {
        expect_fields(c, 2, "trapdoor component");
        td.components.push_back({as_string(c[0]), fixed<OracleKeyTag>(c[1])});
    }
    expect_done(r);
    return td;
}

DeletionToken decode_deletion_token(Bytes data)
{
    RecordReader r(std::move(data));
    auto recs = r.section("DTOK");
    if (recs.size() != 1)
        throw DecodeError("malformed deletion token");
    expect_fields(recs[0], 2, "deletion token");
    expect_done(r);
    return {fixed<KeywordTagTag>(recs[0][0]), fixed<OracleKeyTag>(recs[0][1])};
}

AdditionRequest decode_addition_request(Bytes data)
{
    RecordReader r(std::move(data));
    AdditionRequest req;
    for (const auto& rec : r.section("AREQ")) {
        expect_fields(rec, 2, "addition request");
        req.items.emplace_back(fixed<KeywordTagTag>(rec[0]), as_u64(rec[1]));
    }
    expect_done(r);
    return req;
}

AdditionResponse decode_addition_response(Bytes data)
{
    RecordReader r(std::move(data));
    AdditionResponse resp;
    for (const auto& rec : r.section("ARSP")) {
        if (rec.size() < 2 || rec.size() % 2 != 0)
            throw DecodeError("malformed addition response record");
        ServedItem item;
        item.tag = fixed<KeywordTagTag>(rec[0]);
        item.counter = as_u64(rec[1]);
        for (std::size_t i = 2; i < rec.size(); i += 2)
            item.blocks.push_back({static_cast<std::uint32_t>(as_u64(rec[i])), decode_block(rec[i + 1])});
        resp.items.push_back(std::move(item));
    }
    expect_done(r);
    return resp;
}

AdditionCommit decode_addition_commit(Bytes data)
{
    RecordReader r(std::move(data));
    AdditionCommit c;
    for (const auto& rec : r.section("KUPD")) {
        if (rec.size() < 2 || (rec.size() - 2) % 3 != 0)
            throw DecodeError("malformed keyword update record");
        KeywordUpdate u;
        u.tag = fixed<KeywordTagTag>(rec[0]);
        u.new_counter = as_u64(rec[1]);
        for (std::size_t i = 2; i < rec.size(); i += 3)
            u.blocks.push_back(
                {static_cast<std::uint32_t>(as_u64(rec[i])), decode_block(rec[i + 2]), as_u64(rec[i + 1]) != 0});
        c.updates.push_back(std::move(u));
    }
    for (const auto& rec : r.section("UROW")) {
        if (rec.size() < 2)
            throw DecodeError("malformed update-index record");
        UpdateRow row;
        row.entry.doc_tag = fixed<KeywordTagTag>(rec[0]);
        row.id = as_u64(rec[1]);
        for (std::size_t i = 2; i < rec.size(); ++i) {
            if (rec[i].size() != kAddressCellBytes)
                throw DecodeError("malformed update-index cell");
            row.entry.cells.push_back(rec[i]);
        }
        c.update_rows.push_back(std::move(row));
    }
    for (const auto& rec : r.section("NDOC")) {
        expect_fields(rec, 3, "document");
        c.documents.push_back({as_u64(rec[0]), as_string(rec[1]), rec[2]});
    }
    expect_done(r);
    return c;
}

void write_file(const std::filesystem::path& path, const Bytes& data)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

Bytes read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw NotFound("cannot read " + path.string());
    return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace dsse
