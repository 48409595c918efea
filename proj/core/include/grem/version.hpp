#pragma once

namespace grem {
inline constexpr const char* kVersion = "0.3.1";
inline constexpr int kSnapshotFormat = 1;
inline constexpr int kCsvSchemaVersion = 1;
}  // namespace grem
