#pragma once

#include <optional>
#include <string>
#include <vector>

namespace dip::reference {

/// Printed Sens / Prec / Spec / F1 for one row of a published table.
struct PrintedRow {
  double sensitivity = 0.0;
  double precision = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
};

/// A published confusion matrix with every printed metric value, transcribed
/// verbatim (including values that do not follow from the counts).
struct PublishedTable {
  std::string name;
  std::vector<std::string> classes;
  std::vector<std::vector<long>> counts;  ///< rows = actual
  std::vector<PrintedRow> rows;
  PrintedRow overall;
  double printed_accuracy = 0.0;
};

/// The eight published matrices: deterioration localization, deterioration
/// severity for scenarios 1 to 3, damage localization, damage severity for
/// stories 1 to 3.
const std::vector<PublishedTable>& published_tables();

}  // namespace dip::reference
