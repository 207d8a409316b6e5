#pragma once

#include "dsse/records.hpp"
#include "dsse/search_engine.hpp"
#include "dsse/system.hpp"
#include "dsse/update_engine.hpp"

namespace dsse {

// Binary encodings of everything that crosses the owner/user <-> server
// boundary, in the record format of records.hpp. The encoded forms are what the
// server's view contains.

Bytes encode(const Trapdoor& td);
Bytes encode(const AuthTrapdoor& td);
Bytes encode(const DeletionToken& token);
Bytes encode(const AdditionRequest& request);
Bytes encode(const AdditionResponse& response, std::size_t eta);
Bytes encode(const AdditionCommit& commit, std::size_t eta);

Trapdoor decode_trapdoor(Bytes data);
AuthTrapdoor decode_auth_trapdoor(Bytes data);
DeletionToken decode_deletion_token(Bytes data);
AdditionRequest decode_addition_request(Bytes data);
AdditionResponse decode_addition_response(Bytes data);
AdditionCommit decode_addition_commit(Bytes data);

void write_file(const std::filesystem::path& path, const Bytes& data);
Bytes read_file(const std::filesystem::path& path);

} // namespace dsse
