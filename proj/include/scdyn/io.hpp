#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scdyn {

// 17 significant digits: doubles round-trip exactly.
std::string format_g17(double v);

void write_text_file(const std::string& path, const std::string& content);

// rows of doubles, serialized with format_g17
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

std::uint64_t fnv1a64(const std::string& data);

}  // namespace scdyn
