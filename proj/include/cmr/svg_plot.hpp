#pragma once

#include <filesystem>
#include <optional>

#include "cmr/descriptor.hpp"
#include "cmr/phases.hpp"

namespace cmr {

/// Two stacked panels: the normalized direction curve with its zero line
/// and key-frame markers, and the magnitude curve in millimeters.
void write_descriptor_plot(const std::filesystem::path& path, const MotionDescriptor& desc,
                           const std::optional<PhaseSet>& phases);

} // namespace cmr
