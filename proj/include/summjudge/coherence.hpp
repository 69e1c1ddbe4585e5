#pragma once

// LSA coherence: sentences of a summary are embedded through a truncated SVD
// of their term-sentence matrix, and coherence is the mean cosine between
// adjacent sentences, mapped from [-1, 1] to [0, 1].

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "summjudge/textproc.hpp"

namespace summjudge::coherence {

enum class Weighting { tf, tf_idf };

std::string_view to_string(Weighting w);
std::optional<Weighting> parse_weighting(std::string_view name);

struct TermSentenceMatrix {
  std::vector<std::string> terms;  // first-seen order
  Eigen::MatrixXd matrix;          // terms x sentences
  Weighting weighting = Weighting::tf;
};

/// Full thin SVD, A = U * diag(sigma) * V^T, singular values nonincreasing.
struct SvdResult {
  Eigen::MatrixXd u;      // m x n
  Eigen::VectorXd sigma;  // n
  Eigen::MatrixXd v;      // n x n
};

struct LatentSentenceVectors {
  std::size_t k = 0;
  Eigen::MatrixXd vectors;          // k x sentences, column j = (sigma_i * v_ji)
  Eigen::VectorXd singular_values;  // k, nonincreasing
  Eigen::MatrixXd term_vectors;     // terms x k (left singular vectors)
};

inline constexpr std::size_t kDefaultRank = 2;
inline constexpr int kMaxJacobiSweeps = 80;

/// Sentences whose tokens all vanish are dropped. Throws ValidationError if
/// no sentence is left.
TermSentenceMatrix build_term_sentence_matrix(std::span<const std::string> sentences,
                                              Weighting weighting = Weighting::tf);

/// One-sided (Hestenes) Jacobi SVD. Throws NumericalError when the column
/// pairs are not mutually orthogonal after `max_sweeps` sweeps.
SvdResult jacobi_svd(const Eigen::MatrixXd& a, int max_sweeps = kMaxJacobiSweeps);

/// Numerical rank: singular values above max(m, n) * eps * sigma_max.
std::size_t numerical_rank(const Eigen::VectorXd& sigma, Eigen::Index rows, Eigen::Index cols);

/// Truncated SVD keeping min(k, rank) components. Each right singular vector
/// is sign-canonicalized so its largest-magnitude entry is positive.
LatentSentenceVectors reduce_svd(const Eigen::MatrixXd& matrix, std::size_t k);
LatentSentenceVectors reduce_svd(const TermSentenceMatrix& m, std::size_t k);

/// Adjacent-sentence coherence of a term-sentence matrix. A single column
/// scores 1. A latent vector of zero length has cosine 0 with its neighbours.
double coherence_from_matrix(const Eigen::MatrixXd& matrix, std::size_t k = kDefaultRank);

/// Throws ValidationError for an empty summary (no sentence with a word).
double coherence_score(std::string_view summary, std::size_t k = kDefaultRank,
                       Weighting weighting = Weighting::tf,
                       const textproc::AbbreviationList& abbreviations = textproc::AbbreviationList::builtin());

}  // namespace summjudge::coherence
