#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace knl {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

/// Principal square root: Re sqrt(s) >= 0, branch cut on the negative real
/// axis. std::sqrt already implements this convention; the wrapper exists so
/// call sites document which branch they are on.
inline Complex principal_sqrt(Complex s) { return std::sqrt(s); }

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RankDeficient : Error {
  double smallest_sv;
  explicit RankDeficient(double sv)
      : Error("rank deficient block, smallest singular value " +
              std::to_string(sv)),
        smallest_sv(sv) {}
};

struct NonHermitian : Error {
  NonHermitian() : Error("matrix is not Hermitian within tolerance") {}
};

struct Breakdown : Error {
  int step;
  explicit Breakdown(int s)
      : Error("Lanczos breakdown at step " + std::to_string(s)), step(s) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

struct SingularGamma : Error {
  int index;
  explicit SingularGamma(int i)
      : Error("singular gamma_" + std::to_string(i) + " in extraction"),
        index(i) {}
};

struct ShiftOnSpectrum : Error {
  ShiftOnSpectrum() : Error("shift lies on the spectrum, singular pivot") {}
};

struct SingularStep : Error {
  int index;
  explicit SingularStep(int i)
      : Error("singular inner inverse at step " + std::to_string(i)),
        index(i) {}
};

struct MissingTail : Error {
  MissingTail() : Error("decomposition/params carry no usable tail") {}
};

struct SingularUpdate : Error {
  SingularUpdate() : Error("singular rank-p update in SMW evaluation") {}
};

struct AllNodesSkipped : Error {
  AllNodesSkipped() : Error("Re F indefinite at every contour node") {}
};

struct TooFewRitzValues : Error {
  TooFewRitzValues(int have, int need)
      : Error("contour needs " + std::to_string(need) + " Ritz values, got " +
              std::to_string(have)) {}
};

struct EmptyHistory : Error {
  EmptyHistory() : Error("empty phi history") {}
};

struct SingularPencil : Error {
  SingularPencil() : Error("singular first-order pencil") {}
};

struct MissingBasis : Error {
  MissingBasis() : Error("Lanczos basis was not stored (keep_basis off)") {}
};

struct NonPositiveSigma : Error {
  NonPositiveSigma() : Error("sigma must be positive everywhere") {}
};

struct DuplicateNode : Error {
  DuplicateNode() : Error("two source locations snap to the same node") {}
};

struct OutsideInterior : Error {
  OutsideInterior() : Error("source location outside the interior region") {}
};

struct ParseError : Error {
  int line;
  ParseError(int l, const std::string& what)
      : Error("parse error at line " + std::to_string(l) + ": " + what),
        line(l) {}
};

struct NotSymmetricHeader : Error {
  NotSymmetricHeader()
      : Error("Matrix Market header is not coordinate real symmetric") {}
};

struct SingularShift : Error {
  SingularShift() : Error("A + sI is singular at the requested shift") {}
};

}  // namespace knl
