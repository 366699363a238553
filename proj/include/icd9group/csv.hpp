#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace icd9group {

/// Minimal RFC-4180 CSV reader. Quoted fields may contain commas, doubled
/// quotes, and embedded newlines (the MIMIC export convention for TEXT).
/// Both LF and CRLF records are accepted.
class CsvReader {
public:
  /// Opens the file and consumes the header row. Throws DataError when the
  /// file is missing or the header is empty.
  explicit CsvReader(const std::string& path);
  ~CsvReader();

  CsvReader(const CsvReader&) = delete;
  CsvReader& operator=(const CsvReader&) = delete;

  const std::vector<std::string>& header() const { return header_; }

  /// Column index by name, or -1 when absent.
  int column(const std::string& name) const;

  /// Column index by name; throws DataError naming the file when absent.
  int require_column(const std::string& name) const;

  /// Reads the next record into `fields`. Returns false at end of input.
  /// Throws DataError (with a record number) on malformed quoting or when a
  /// record has more fields than the header.
  bool next(std::vector<std::string>& fields);

  /// 1-based number of the record most recently returned by next().
  long record_number() const { return record_number_; }

private:
  bool read_record(std::vector<std::string>& fields);

  std::string path_;
  std::ifstream* in_;
  std::vector<std::string> header_;
  long record_number_ = 0;
};

/// Quotes a field iff it contains a comma, quote, or newline.
std::string csv_escape(const std::string& field);

/// Writes one CSV record terminated by '\n'.
void csv_write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace icd9group
