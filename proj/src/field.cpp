#include "cmr/field.hpp"

#include "cmr/errors.hpp"
#include "cmr/volume_io.hpp"

namespace cmr {

void save_field(const std::filesystem::path& json_path, const VectorField3D& field) {
    RawJsonArray arr;
    arr.shape = {field.shape.z, field.shape.y, field.shape.x, 3};
    arr.grid_spacing_mm = field.grid_spacing_mm;
    arr.data.assign(field.disp.begin(), field.disp.end());
    save_raw_json(json_path, arr);
}

VectorField3D load_field(const std::filesystem::path& json_path) {
    const RawJsonArray arr = load_raw_json(json_path);
    if (arr.shape.size() != 4 || arr.shape[3] != 3)
        throw io_error(json_path.string() + ": field container must have shape [Z,Y,X,3]");
    VectorField3D field({arr.shape[0], arr.shape[1], arr.shape[2]},
                        arr.grid_spacing_mm > 0.0 ? arr.grid_spacing_mm : 1.0);
    field.disp.assign(arr.data.begin(), arr.data.end());
    return field;
}

} // namespace cmr
