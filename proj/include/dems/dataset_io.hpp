#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dems/experiments.hpp"
#include "dems/simlab.hpp"

namespace dems {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Parses a full token as a double; throws ValidationError otherwise.
double parse_double(const std::string& token);

/// Header `t,y1..ym,v1..vr[,x1..xn,w1..wn,z1..zm]`, one row per sample.
void write_dataset_csv(std::ostream& os, const Dataset& data);

/// Reads the dataset layout written above. Lines starting with '#' are
/// skipped. Truth columns are optional. dt is taken from the time column.
Dataset read_dataset_csv(std::istream& is);

void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

/// `scenario,method,s_real,seed,p,sse,runtime_s[,s_assumed]`.
void write_records_csv(std::ostream& os, const std::vector<BenchmarkRecord>& records,
                       bool with_s_assumed);

/// `t,x1..xn[,s][,F]`; s and F columns appear when the result carries them.
void write_estimates_csv(std::ostream& os, const Vector& times, const TrialResult& result);

/// `t_eval,s,F`.
void write_landscape_csv(std::ostream& os, const std::vector<LandscapeCurve>& curves);

/// `samples,q1,q2,q3,q4,on_axis`.
void write_quadrant_csv(std::ostream& os, std::size_t sample_count, const QuadrantResult& result);

/// `s,first,second` for a kept quadrant sample log.
void write_quadrant_samples_csv(std::ostream& os, const QuadrantResult& result);

std::uint64_t fnv1a64(const std::string& text);

/// Writes text to a file, replacing it. Throws std::runtime_error on I/O failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace dems
