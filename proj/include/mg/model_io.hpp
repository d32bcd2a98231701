#ifndef MG_MODEL_IO_HPP
#define MG_MODEL_IO_HPP

#include <stdexcept>
#include <string>

#include "mg/milp.hpp"

namespace mg {

struct IOError : std::runtime_error {
    explicit IOError(const std::string& what) : std::runtime_error(what) {}
};

enum class ModelFormat { mps, lp_text };

/// Writes the model deterministically (bit-stable for identical input).
/// MPS files re-import to an equivalent model; the LP text format is for
/// reading by humans and external tools only.
void export_model(const MilpModel& model, ModelFormat format, const std::string& path);

/// Reads a maximization MPS file written by export_model (or compatible).
MilpModel import_mps(const std::string& path);

}  // namespace mg

#endif  // MG_MODEL_IO_HPP
