#include "icd9group/csv.hpp"

#include <fstream>
#include <ostream>

#include "icd9group/errors.hpp"

namespace icd9group {

CsvReader::CsvReader(const std::string& path) : path_(path), in_(new std::ifstream(path, std::ios::binary)) {
  if (!*in_) {
    delete in_;
    in_ = nullptr;
    throw DataError("cannot open CSV file: " + path);
  }
  if (!read_record(header_) || header_.empty()) {
    throw DataError("CSV file has no header row: " + path);
  }
}

CsvReader::~CsvReader() { delete in_; }

int CsvReader::column(const std::string& name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int CsvReader::require_column(const std::string& name) const {
  int idx = column(name);
  if (idx < 0) throw DataError("missing required column " + name + " in " + path_);
  return idx;
}

bool CsvReader::next(std::vector<std::string>& fields) {
  if (!read_record(fields)) return false;
  ++record_number_;
  if (fields.size() > header_.size()) {
    throw DataError("record " + std::to_string(record_number_) + " in " + path_ + " has " +
                    std::to_string(fields.size()) + " fields, header has " +
                    std::to_string(header_.size()));
  }
  fields.resize(header_.size());  // short rows pad with empty fields
  return true;
}

bool CsvReader::read_record(std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int c;
  while ((c = in_->get()) != std::ifstream::traits_type::eof()) {
    any = true;
    char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in_->peek() == '"') {
          in_->get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      if (!field.empty()) {
        throw DataError("stray quote inside unquoted field near record " +
                        std::to_string(record_number_ + 1) + " in " + path_);
      }
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
    }
  }
  if (in_quotes) {
    throw DataError("unterminated quoted field at end of " + path_);
  }
  if (!any) return false;
  if (!field.empty() && field.back() == '\r') field.pop_back();
  fields.push_back(std::move(field));
  return true;
}

std::string csv_escape(const std::string& field) {
  bool needs_quotes = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void csv_write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

}  // namespace icd9group
