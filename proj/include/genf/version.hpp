#pragma once

namespace genf {

// Library version, stamped into every report file alongside the per-file
// schema versions so outputs can always be traced back to the code that
// produced them.
inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace genf
