#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pgs/plenoptic/cloud.hpp"

namespace pgs::ply {

// Naming pattern for the per-view color attributes. The k-th view's channels
// are <red><k>, <green><k>, <blue><k>; plain red/green/blue is accepted as a
// single-view cloud when no indexed attribute matches.
struct ViewColorNaming {
    std::string red = "red_";
    std::string green = "green_";
    std::string blue = "blue_";
};

// Reads an ASCII or binary little-endian PLY. The result carries faces when a
// face element is present (empty faces otherwise). Throws std::runtime_error
// on malformed headers, inconsistent view attributes, or bad face indices.
PlenopticMesh read_plenoptic(std::istream &in, const ViewColorNaming &naming = {});
PlenopticMesh read_plenoptic_file(const std::string &path, const ViewColorNaming &naming = {});

// Writes binary little-endian PLY. read(write(c)) reproduces positions
// bit-exactly (float32 storage) and colors byte-exactly.
void write_plenoptic(std::ostream &out, const PlenopticPointCloud &cloud,
                     const ViewColorNaming &naming = {});
void write_plenoptic(std::ostream &out, const PlenopticMesh &mesh,
                     const ViewColorNaming &naming = {});
void write_plenoptic_file(const std::string &path, const PlenopticPointCloud &cloud,
                          const ViewColorNaming &naming = {});
void write_plenoptic_file(const std::string &path, const PlenopticMesh &mesh,
                          const ViewColorNaming &naming = {});

std::string to_bytes(const PlenopticPointCloud &cloud, const ViewColorNaming &naming = {});

}  // namespace pgs::ply
