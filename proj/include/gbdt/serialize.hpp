#pragma once

// JSON and CSV encodings for triples, matrices, reports and solution fields.
// Matrices are arrays of rows whose entries are [re, im] pairs.

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "gbdt/linalg.hpp"
#include "gbdt/solution.hpp"
#include "gbdt/triple.hpp"
#include "gbdt/verify.hpp"

namespace gbdt {

using Json = nlohmann::ordered_json;

/// Formats a double with 17 significant digits ("%.17g").
std::string format_number(double v);

Json matrix_to_json(const CMatrix& M);
/// Throws InputError naming `what` when `j` is not a rectangular array of
/// [re, im] rows. `rows` / `cols` of -1 skip the shape check.
CMatrix matrix_from_json(const Json& j, const std::string& what,
                         Eigen::Index rows = -1, Eigen::Index cols = -1);

Json triple_to_json(const GBDTTriple& t);
/// Parses {n, m1, m2, A, S0, Pi0}; throws InputError on any inconsistency.
GBDTTriple triple_from_json(const Json& j);
GBDTTriple load_triple(const std::string& path);

Json identity_check_to_json(const IdentityCheck& c);

/// Array of {name, residual, bound, pass, context}; a NaN residual or a
/// missing bound is written as null.
Json report_to_json(const Report& r);

/// CSV with header x,t,block,row,col,re,im; rows are x-major, then t, then
/// block (Y before Hcal), row, col. Hcal rows carry t = the first t sample.
void write_field_csv(std::ostream& os, const SolutionField& f);

/// Parses a JSON document from a file; throws InputError on I/O or syntax
/// errors.
Json load_json(const std::string& path);

/// Serializes with two-space indentation and a trailing newline.
std::string dump_json(const Json& j);

}  // namespace gbdt
