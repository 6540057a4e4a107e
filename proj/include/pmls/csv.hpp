#pragma once

#include <string>

#include "pmls/types.hpp"

namespace pmls {

enum class CsvSchema { kGeneric, kBankSalary };

CsvSchema schema_from(const std::string& name);

// generic: all-numeric columns, last column is the response.
// bankSalary: Gender (Female=1) and PCJob enter as given, EduLev becomes four
// dummies (level 5 reference), JobGrade five dummies (grade 6 reference),
// response is Salary; YrHired/YrBorn/YrsPrior are parsed but excluded.
Dataset ingest_csv(const std::string& path, CsvSchema schema);

Dataset parse_csv_text(const std::string& text, CsvSchema schema);

// Column order of the bank design matrix.
const std::vector<std::string>& bank_design_columns();

}  // namespace pmls
