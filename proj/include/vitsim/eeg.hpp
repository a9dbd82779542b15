#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vitsim {

using Epoch = std::vector<uint16_t>;

// Epoch files hold unsigned 16-bit ADC codes, one epoch = samples_per_epoch
// values. Two encodings, chosen by extension: .csv/.txt with one decimal
// value per line, anything else raw little-endian uint16. A file may hold
// any whole number of epochs; anything else is an error naming the line or
// byte offset.
std::vector<Epoch> load_epochs(const std::string& path, int samples_per_epoch);

void write_epochs_csv(const std::string& path, const std::vector<Epoch>& epochs);
void write_epochs_binary(const std::string& path, const std::vector<Epoch>& epochs);

// Seeded synthetic epochs, uniform over the full ADC range.
std::vector<Epoch> generate_epochs(uint64_t seed, int count, int samples_per_epoch);

}  // namespace vitsim
