#ifndef HOSPMORT_SAMPLES_IO_HPP
#define HOSPMORT_SAMPLES_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hospmort/gibbs.hpp"

namespace hospmort {

// Column names of samples.csv in order: chain, alpha.<id>, beta.<j>,
// mean coefficients, then the scalar hyperparameters.
std::vector<std::string> sample_columns(const PosteriorSamples& samples);

// Fingerprint of everything that determines the draws.
std::uint64_t config_hash(const SampleMeta& meta);

// Writes <dir>/samples.csv and <dir>/meta.json. Numbers are written in
// shortest round-trip form so a reload reproduces every draw bit for bit.
void write_samples(const PosteriorSamples& samples, const std::filesystem::path& dir);
PosteriorSamples read_samples(const std::filesystem::path& dir);

}  // namespace hospmort

#endif  // HOSPMORT_SAMPLES_IO_HPP
