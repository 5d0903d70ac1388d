#pragma once

#include <string>
#include <vector>

#include "iflow/tensor.hpp"

namespace iflow {

// Plain numeric CSV, one matrix row per line. Loading skips a single leading
// header line when none of its fields parse as numbers; any other non-numeric
// field or a ragged row is an error naming the line.
void save_csv(const Tensor& x, const std::string& path);
Tensor load_csv(const std::string& path);

void save_labels(const std::vector<int>& labels, const std::string& path);
std::vector<int> load_labels(const std::string& path);

} // namespace iflow
