#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sc {

/// Indices of the trainable parameter segments.
enum class Seg : int { theta1 = 0, theta2 = 1, theta3 = 2, theta4 = 3 };
inline constexpr int kNumSegments = 4;
inline constexpr const char* kSegNames[kNumSegments] = {"theta1", "theta2", "theta3",
                                                        "theta4"};

struct SegmentLayout {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  std::vector<std::size_t> shape;
};

/// Flat real parameter vector with named segments. Complex parameters are
/// stored as interleaved (real, imag) pairs.
struct ParamVector {
  std::vector<double> values;
  std::vector<SegmentLayout> segments;

  std::size_t size() const { return values.size(); }

  const SegmentLayout& layout(Seg s) const { return segments[static_cast<int>(s)]; }

  std::span<double> seg(Seg s) {
    const auto& l = layout(s);
    return {values.data() + l.offset, l.size};
  }
  std::span<const double> seg(Seg s) const {
    const auto& l = layout(s);
    return {values.data() + l.offset, l.size};
  }
};

/// Segment-layout builder; call add() in segment order.
ParamVector make_param_vector(const std::vector<SegmentLayout>& segs);

struct AdamState {
  std::int64_t step = 0;
  std::vector<double> m, v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(std::size_t n, double lr = 1e-3);

/// Standard Adam update with bias correction, applied in place to the
/// segments whose frozen flag is false. Frozen segments (values and moments)
/// are left bit-identical. `frozen` is indexed by segment order.
void adam_step(ParamVector& p, std::span<const double> grad, AdamState& s,
               const std::vector<bool>& frozen);

/// Differentiability contract: backward must be the exact vector-Jacobian
/// product of forward. Inputs/outputs are flat real vectors (complex data
/// interleaved). Checked by grad_check against central finite differences.
class DiffBlock {
 public:
  virtual ~DiffBlock() = default;
  virtual std::string name() const = 0;
  virtual std::size_t input_size() const = 0;
  virtual std::size_t param_size() const = 0;
  virtual std::vector<double> forward(std::span<const double> input,
                                      std::span<const double> params) const = 0;
  /// d_input/d_params must be pre-sized; written, not accumulated.
  virtual void backward(std::span<const double> input, std::span<const double> params,
                        std::span<const double> cotangent, std::span<double> d_input,
                        std::span<double> d_params) const = 0;
};

struct GradCheckOptions {
  double step = 1e-5;
  std::size_t max_coords = 50;  // per side (input / params)
  std::uint64_t seed = 7;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t n_checked = 0;
  std::string worst;  // "input[12]" / "param[3]"
  bool pass(double tol) const { return max_rel_err < tol; }
};

/// Compares backward against central finite differences of w . forward on a
/// random subsample of coordinates (up to max_coords each for input and
/// params). Relative error uses a floor tied to the gradient magnitude so
/// near-zero coordinates are compared absolutely.
GradCheckReport grad_check(const DiffBlock& block, std::span<const double> input,
                           std::span<const double> params,
                           const GradCheckOptions& opt = {});

/// Versioned JSON checkpoint of named segments with shape metadata.
void save_checkpoint(const ParamVector& p, const std::filesystem::path& path);
ParamVector load_checkpoint(const std::filesystem::path& path);

}  // namespace sc
