#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cmr/volume.hpp"

namespace cmr {

enum class VolumeFormat { raw_json, nrrd };

/// raw+json container: a JSON header next to a flat little-endian f32
/// binary. The header path carries the .json extension, the payload the
/// same stem with .raw.
struct RawJsonArray {
    std::vector<int> shape;
    std::vector<double> spacing_mm;        // optional, empty if absent
    double frame_duration_ms = -1.0;       // < 0 when absent
    double grid_spacing_mm = -1.0;         // < 0 when absent (field containers)
    std::vector<float> data;
};

RawJsonArray load_raw_json(const std::filesystem::path& json_path);
void save_raw_json(const std::filesystem::path& json_path, const RawJsonArray& arr);

Volume4D load_volume4d(const std::filesystem::path& path, VolumeFormat format);
/// Infers the format from the extension (.json / .nrrd).
Volume4D load_volume4d(const std::filesystem::path& path);
void save_volume4d(const std::filesystem::path& json_path, const Volume4D& vol);

/// NRRD reader restricted to the 4D contract used here: type float,
/// encoding raw or gzip, kinds "list domain domain domain" (time fastest),
/// little endian. Anything else is rejected with a message naming the field.
Volume4D load_nrrd(const std::filesystem::path& path);

} // namespace cmr
