#include "cmr/volume_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <zlib.h>

#include <json.hpp>

#include "cmr/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cmr {

namespace {

bool host_is_little_endian() {
    const std::uint16_t probe = 0x0102;
    unsigned char b[2];
    std::memcpy(b, &probe, 2);
    return b[0] == 0x02;
}

void byteswap_f32(std::vector<float>& v) {
    for (float& f : v) {
        unsigned char b[4];
        std::memcpy(b, &f, 4);
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
        std::memcpy(&f, b, 4);
    }
}

fs::path raw_path_for(const fs::path& json_path) {
    fs::path p = json_path;
    p.replace_extension(".raw");
    return p;
}

std::vector<float> read_f32_file(const fs::path& path, std::size_t expected_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open data file: " + path.string());
    std::vector<float> out(expected_count);
    in.read(reinterpret_cast<char*>(out.data()),
            static_cast<std::streamsize>(expected_count * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != expected_count * sizeof(float))
        throw io_error("data file " + path.string() + " shorter than header-declared shape");
    if (!host_is_little_endian()) byteswap_f32(out);
    return out;
}

std::vector<float> gzip_inflate_f32(const std::vector<unsigned char>& compressed,
                                    std::size_t expected_count, const std::string& name) {
    std::vector<float> out(expected_count);
    z_stream strm{};
    if (inflateInit2(&strm, 15 + 32) != Z_OK) throw io_error("zlib init failed");
    strm.next_in = const_cast<Bytef*>(compressed.data());
    strm.avail_in = static_cast<uInt>(compressed.size());
    strm.next_out = reinterpret_cast<Bytef*>(out.data());
    strm.avail_out = static_cast<uInt>(expected_count * sizeof(float));
    const int rc = inflate(&strm, Z_FINISH);
    const bool filled = strm.avail_out == 0;
    inflateEnd(&strm);
    if (rc != Z_STREAM_END || !filled)
        throw io_error("gzip payload of " + name + " does not decode to the declared size");
    if (!host_is_little_endian()) byteswap_f32(out);
    return out;
}

} // namespace

RawJsonArray load_raw_json(const fs::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw io_error("missing file: " + json_path.string());
    json hdr;
    try {
        in >> hdr;
    } catch (const json::exception& e) {
        throw io_error("malformed JSON header " + json_path.string() + ": " + e.what());
    }

    RawJsonArray arr;
    if (!hdr.contains("shape") || !hdr["shape"].is_array())
        throw io_error(json_path.string() + ": header field 'shape' missing or not an array");
    for (const auto& v : hdr["shape"]) {
        const int d = v.get<int>();
        if (d < 1) throw io_error(json_path.string() + ": header field 'shape' has non-positive entry");
        arr.shape.push_back(d);
    }
    const std::string dtype = hdr.value("dtype", "f32");
    if (dtype != "f32")
        throw io_error(json_path.string() + ": header field 'dtype' must be \"f32\", got \"" + dtype + "\"");
    const std::string order = hdr.value("byte_order", "little");
    if (order != "little")
        throw io_error(json_path.string() + ": header field 'byte_order' must be \"little\"");
    if (hdr.contains("spacing_mm"))
        for (const auto& v : hdr["spacing_mm"]) arr.spacing_mm.push_back(v.get<double>());
    if (hdr.contains("frame_duration_ms")) arr.frame_duration_ms = hdr["frame_duration_ms"].get<double>();
    if (hdr.contains("grid_spacing_mm")) arr.grid_spacing_mm = hdr["grid_spacing_mm"].get<double>();

    std::size_t count = 1;
    for (int d : arr.shape) count *= static_cast<std::size_t>(d);
    arr.data = read_f32_file(raw_path_for(json_path), count);
    return arr;
}

void save_raw_json(const fs::path& json_path, const RawJsonArray& arr) {
    json hdr;
    hdr["shape"] = arr.shape;
    hdr["dtype"] = "f32";
    hdr["byte_order"] = "little";
    if (!arr.spacing_mm.empty()) hdr["spacing_mm"] = arr.spacing_mm;
    if (arr.frame_duration_ms >= 0.0) hdr["frame_duration_ms"] = arr.frame_duration_ms;
    if (arr.grid_spacing_mm >= 0.0) hdr["grid_spacing_mm"] = arr.grid_spacing_mm;

    if (json_path.has_parent_path()) fs::create_directories(json_path.parent_path());
    std::ofstream out(json_path);
    if (!out) throw io_error("cannot write header: " + json_path.string());
    out << hdr.dump(2) << "\n";

    std::vector<float> payload = arr.data;
    if (!host_is_little_endian()) byteswap_f32(payload);
    std::ofstream raw(raw_path_for(json_path), std::ios::binary);
    if (!raw) throw io_error("cannot write data file: " + raw_path_for(json_path).string());
    raw.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
}

Volume4D load_volume4d(const fs::path& path, VolumeFormat format) {
    if (format == VolumeFormat::nrrd) return load_nrrd(path);

    const RawJsonArray arr = load_raw_json(path);
    if (arr.shape.size() != 4)
        throw io_error(path.string() + ": expected 4 dimensions in 'shape', got " +
                       std::to_string(arr.shape.size()));
    if (arr.spacing_mm.size() != 3)
        throw io_error(path.string() + ": header field 'spacing_mm' must have 3 entries");

    Volume4D vol;
    vol.t_len = arr.shape[0];
    vol.spatial = {arr.shape[1], arr.shape[2], arr.shape[3]};
    vol.spacing_mm = {arr.spacing_mm[0], arr.spacing_mm[1], arr.spacing_mm[2]};
    if (arr.frame_duration_ms >= 0.0) vol.frame_duration_ms = arr.frame_duration_ms;
    vol.data = std::move(arr.data);
    vol.validate(path.string().c_str());
    return vol;
}

Volume4D load_volume4d(const fs::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".nrrd") return load_nrrd(path);
    if (ext == ".json") return load_volume4d(path, VolumeFormat::raw_json);
    throw io_error("cannot infer volume format from extension '" + ext + "' (use .json or .nrrd)");
}

void save_volume4d(const fs::path& json_path, const Volume4D& vol) {
    RawJsonArray arr;
    arr.shape = {vol.t_len, vol.spatial.z, vol.spatial.y, vol.spatial.x};
    arr.spacing_mm = {vol.spacing_mm[0], vol.spacing_mm[1], vol.spacing_mm[2]};
    if (vol.frame_duration_ms) arr.frame_duration_ms = *vol.frame_duration_ms;
    arr.data = vol.data;
    save_raw_json(json_path, arr);
}

Volume4D load_nrrd(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("missing file: " + path.string());

    std::string magic;
    std::getline(in, magic);
    if (magic.rfind("NRRD", 0) != 0)
        throw io_error(path.string() + ": not an NRRD file (bad magic)");

    int dimension = -1;
    std::vector<int> sizes;
    std::vector<std::string> kinds;
    std::vector<double> spacings;
    std::string type, encoding, endian;

    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) break;  // header/data separator
        if (line[0] == '#') continue;
        const auto colon = line.find(": ");
        if (colon == std::string::npos) {
            if (line.find(":=") != std::string::npos) continue;  // key:value metadata
            throw io_error(path.string() + ": malformed NRRD header line '" + line + "'");
        }
        const std::string key = line.substr(0, colon);
        const std::string value = line.substr(colon + 2);
        std::istringstream vs(value);
        if (key == "dimension") {
            vs >> dimension;
        } else if (key == "sizes") {
            int v;
            while (vs >> v) sizes.push_back(v);
        } else if (key == "type") {
            type = value;
        } else if (key == "encoding") {
            encoding = value;
        } else if (key == "endian") {
            endian = value;
        } else if (key == "kinds") {
            std::string k;
            while (vs >> k) kinds.push_back(k);
        } else if (key == "spacings") {
            std::string tok;
            while (vs >> tok) {
                if (tok == "nan" || tok == "NaN" || tok == "NAN")
                    spacings.push_back(std::numeric_limits<double>::quiet_NaN());
                else
                    spacings.push_back(std::stod(tok));
            }
        } else if (key == "data file" || key == "datafile") {
            throw io_error(path.string() + ": detached NRRD data files are not supported");
        }
        // other fields (space, content, ...) are ignored
    }

    if (dimension != 4)
        throw io_error(path.string() + ": expected 4 dimensions, header declares " +
                       std::to_string(dimension));
    if (type != "float")
        throw io_error(path.string() + ": field 'type' must be float, got '" + type + "'");
    if (encoding != "raw" && encoding != "gzip")
        throw io_error(path.string() + ": field 'encoding' must be raw or gzip, got '" + encoding + "'");
    if (!endian.empty() && endian != "little")
        throw io_error(path.string() + ": field 'endian' must be little, got '" + endian + "'");
    if (sizes.size() != 4)
        throw io_error(path.string() + ": field 'sizes' must have 4 entries");
    if (kinds != std::vector<std::string>{"list", "domain", "domain", "domain"})
        throw io_error(path.string() +
                       ": field 'kinds' must be 'list domain domain domain' (time axis first)");
    if (spacings.size() != 4)
        throw io_error(path.string() + ": field 'spacings' must have 4 entries (nan sz sy sx)");
    for (int i = 1; i < 4; ++i)
        if (!(spacings[i] > 0.0))
            throw io_error(path.string() + ": field 'spacings' has non-positive spatial entry");

    // NRRD lists axes fastest-first: sizes = [T, Z, Y, X], t varies fastest.
    const int t_len = sizes[0], nz = sizes[1], ny = sizes[2], nx = sizes[3];
    const std::size_t count = static_cast<std::size_t>(t_len) * nz * ny * nx;

    std::vector<float> file_order;
    if (encoding == "raw") {
        file_order.resize(count);
        in.read(reinterpret_cast<char*>(file_order.data()),
                static_cast<std::streamsize>(count * sizeof(float)));
        if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float))
            throw io_error(path.string() + ": raw payload shorter than 'sizes' declares");
        if (!host_is_little_endian()) byteswap_f32(file_order);
    } else {
        std::vector<unsigned char> compressed(std::istreambuf_iterator<char>(in), {});
        file_order = gzip_inflate_f32(compressed, count, path.string());
    }

    Volume4D vol;
    vol.t_len = t_len;
    vol.spatial = {nz, ny, nx};
    vol.spacing_mm = {spacings[1], spacings[2], spacings[3]};
    vol.data.resize(count);
    // transpose t-fastest file order to internal (t, z, y, x) with x fastest
    std::size_t src = 0;
    for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y)
            for (int z = 0; z < nz; ++z)
                for (int t = 0; t < t_len; ++t, ++src)
                    vol.at(t, z, y, x) = file_order[src];
    vol.validate(path.string().c_str());
    return vol;
}

} // namespace cmr
