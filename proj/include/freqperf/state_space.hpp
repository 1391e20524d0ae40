#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "freqperf/errors.hpp"
#include "freqperf/parameters.hpp"

namespace freqperf {

enum class ControllerTag { generic, swing, broadcast, primal_dual, dapi };

inline const char* to_string(ControllerTag t) {
  switch (t) {
    case ControllerTag::generic: return "generic";
    case ControllerTag::swing: return "swing";
    case ControllerTag::broadcast: return "broadcast";
    case ControllerTag::primal_dual: return "primal_dual";
    case ControllerTag::dapi: return "dapi";
  }
  return "?";
}

enum class BlockKind { phase, frequency, multiplier, edge_multiplier, reserve };

inline const char* to_string(BlockKind k) {
  switch (k) {
    case BlockKind::phase: return "phase";
    case BlockKind::frequency: return "frequency";
    case BlockKind::multiplier: return "multiplier";
    case BlockKind::edge_multiplier: return "edge_multiplier";
    case BlockKind::reserve: return "reserve";
  }
  return "?";
}

enum class OutputKind { cost, frequency };

struct StateBlock {
  BlockKind kind;
  Eigen::Index offset;
  Eigen::Index size;
};

struct OutputBlock {
  OutputKind kind;
  Eigen::Index offset;
  Eigen::Index size;
};

/// What was removed from the raw (theta, nu) coordinates to make A Hurwitz.
struct DeflationRecord {
  DeflationStrategy strategy = DeflationStrategy::none;
  /// n x r, orthonormal columns spanning the removed angle directions.
  Eigen::MatrixXd angle_directions;
  /// |E| x c, orthonormal basis of the cycle space dropped from edge
  /// multipliers (empty for trees and for controllers without them).
  Eigen::MatrixXd edge_directions;
  /// G such that phi' G phi = theta' L theta for the retained phase states.
  Eigen::MatrixXd phase_metric;
};

/// Standard-form LTI model x' = A x + B eta, y = C x. Immutable once built.
class StateSpaceModel {
 public:
  StateSpaceModel(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C,
                  ControllerTag tag = ControllerTag::generic, std::vector<StateBlock> blocks = {},
                  std::vector<OutputBlock> outputs = {}, DeflationRecord deflation = {})
      : A_(std::move(A)),
        B_(std::move(B)),
        C_(std::move(C)),
        tag_(tag),
        blocks_(std::move(blocks)),
        outputs_(std::move(outputs)),
        deflation_(std::move(deflation)) {
    if (A_.rows() != A_.cols()) throw DimensionError("A must be square");
    if (B_.rows() != A_.rows()) throw DimensionError("B rows must match A");
    if (C_.cols() != A_.cols()) throw DimensionError("C columns must match A");
    Eigen::Index covered = 0;
    for (const auto& blk : blocks_) {
      if (blk.offset != covered) throw DimensionError("state blocks must tile the state vector");
      covered += blk.size;
    }
    if (!blocks_.empty() && covered != A_.rows()) {
      throw DimensionError("state blocks do not cover the state vector");
    }
  }

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const Eigen::MatrixXd& C() const { return C_; }
  ControllerTag controller() const { return tag_; }
  const std::vector<StateBlock>& blocks() const { return blocks_; }
  const std::vector<OutputBlock>& outputs() const { return outputs_; }
  const DeflationRecord& deflation() const { return deflation_; }

  Eigen::Index num_states() const { return A_.rows(); }
  Eigen::Index num_inputs() const { return B_.cols(); }
  Eigen::Index num_outputs() const { return C_.rows(); }

  std::optional<StateBlock> block(BlockKind kind) const {
    for (const auto& blk : blocks_) {
      if (blk.kind == kind) return blk;
    }
    return std::nullopt;
  }

  std::optional<OutputBlock> output(OutputKind kind) const {
    for (const auto& o : outputs_) {
      if (o.kind == kind) return o;
    }
    return std::nullopt;
  }

  /// Copy with a different output map; outputs are re-described by `outputs`.
  StateSpaceModel with_output(Eigen::MatrixXd C, std::vector<OutputBlock> outputs) const {
    return StateSpaceModel(A_, B_, std::move(C), tag_, blocks_, std::move(outputs), deflation_);
  }

  /// Largest real part over the spectrum of A.
  double max_real_eigenvalue() const {
    if (A_.rows() == 0) return -std::numeric_limits<double>::infinity();
    Eigen::EigenSolver<Eigen::MatrixXd> es(A_, false);
    return es.eigenvalues().real().maxCoeff();
  }

  /// Spectral radius of A.
  double max_abs_eigenvalue() const {
    if (A_.rows() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(A_, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }

 private:
  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
  Eigen::MatrixXd C_;
  ControllerTag tag_;
  std::vector<StateBlock> blocks_;
  std::vector<OutputBlock> outputs_;
  DeflationRecord deflation_;
};

}  // namespace freqperf
