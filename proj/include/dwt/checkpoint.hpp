#ifndef DWT_CHECKPOINT_HPP
#define DWT_CHECKPOINT_HPP

#include <string>

#include "dwt/network.hpp"

namespace dwt {

// Versioned binary container: magic "DWTCKP01", little-endian fields
// throughout, architecture specs, parameter tensors, and both domains'
// running statistics. Malformed files raise FormatError.
void save_checkpoint(const std::string& path, Network& net);
Network load_checkpoint(const std::string& path);

}  // namespace dwt

#endif  // DWT_CHECKPOINT_HPP
