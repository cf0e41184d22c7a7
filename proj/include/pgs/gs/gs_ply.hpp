#pragma once

#include <iosfwd>
#include <string>

#include "pgs/gs/model.hpp"

namespace pgs::gs_ply {

// Serializes to the de facto splat-viewer PLY layout: binary little-endian,
// float32 properties x,y,z, nx,ny,nz (zeros), f_dc_0..2, f_rest_* (higher SH,
// channel-major), opacity (logit), scale_0..2 (log), rot_0..3 (wxyz).
std::string to_bytes(const GaussianModel &model);
void write(std::ostream &out, const GaussianModel &model);
void write_file(const std::string &path, const GaussianModel &model);

// Strict reader for the same layout; degree is inferred from the f_rest
// count. Anything else is a format error (std::runtime_error).
GaussianModel read(std::istream &in);
GaussianModel read_file(const std::string &path);
GaussianModel from_bytes(const std::string &bytes);

}  // namespace pgs::gs_ply
