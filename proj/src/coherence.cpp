#include "summjudge/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "summjudge/error.hpp"

namespace summjudge::coherence {

std::string_view to_string(Weighting w) { return w == Weighting::tf ? "tf" : "tfidf"; }

std::optional<Weighting> parse_weighting(std::string_view name) {
  if (name == "tf") return Weighting::tf;
  if (name == "tfidf" || name == "tf_idf") return Weighting::tf_idf;
  return std::nullopt;
}

TermSentenceMatrix build_term_sentence_matrix(std::span<const std::string> sentences, Weighting weighting) {
  std::vector<std::vector<std::string>> tokenized;
  for (const auto& s : sentences) {
    auto words = textproc::tokenize_words(s);
    if (!words.empty()) tokenized.push_back(std::move(words));
  }
  if (tokenized.empty()) throw ValidationError("no sentence contains a word token");

  TermSentenceMatrix out;
  out.weighting = weighting;
  std::unordered_map<std::string, Eigen::Index> index;
  for (const auto& words : tokenized) {
    for (const auto& w : words) {
      if (index.emplace(w, static_cast<Eigen::Index>(out.terms.size())).second) out.terms.push_back(w);
    }
  }

  const auto rows = static_cast<Eigen::Index>(out.terms.size());
  const auto cols = static_cast<Eigen::Index>(tokenized.size());
  out.matrix = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (const auto& w : tokenized[static_cast<std::size_t>(j)]) out.matrix(index.at(w), j) += 1.0;
  }

  if (weighting == Weighting::tf_idf) {
    const double n = static_cast<double>(cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double df = static_cast<double>((out.matrix.row(i).array() > 0.0).count());
      out.matrix.row(i) *= std::log(n / df) + 1.0;
    }
  }
  return out;
}

SvdResult jacobi_svd(const Eigen::MatrixXd& a, int max_sweeps) {
  const Eigen::Index n = a.cols();
  Eigen::MatrixXd w = a;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  constexpr double kOrthTol = 1e-15;
  // Columns below this squared norm are numerically zero.
  const double negligible =
      std::numeric_limits<double>::epsilon() * std::numeric_limits<double>::epsilon() * a.squaredNorm();

  bool converged = n < 2;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (alpha <= negligible || beta <= negligible) continue;
        if (std::fabs(gamma) <= kOrthTol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
          const double wp = w(i, p);
          const double wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw NumericalError("Jacobi SVD did not converge within " + std::to_string(max_sweeps) + " sweeps");
  }

  Eigen::VectorXd norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms(j) = w.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return norms(x) > norms(y); });

  SvdResult out;
  out.sigma.resize(n);
  out.u = Eigen::MatrixXd::Zero(a.rows(), n);
  out.v.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto src = order[static_cast<std::size_t>(j)];
    out.sigma(j) = norms(src);
    out.v.col(j) = v.col(src);
    if (norms(src) > 0.0) out.u.col(j) = w.col(src) / norms(src);
  }
  return out;
}

std::size_t numerical_rank(const Eigen::VectorXd& sigma, Eigen::Index rows, Eigen::Index cols) {
  if (sigma.size() == 0) return 0;
  const double tol = static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() *
                     sigma.maxCoeff();
  return static_cast<std::size_t>((sigma.array() > tol).count());
}

LatentSentenceVectors reduce_svd(const Eigen::MatrixXd& matrix, std::size_t k) {
  if (k < 1) throw ValidationError("target rank k must be at least 1");
  if (!matrix.allFinite()) throw ValidationError("matrix has non-finite entries");
  const auto svd = jacobi_svd(matrix);
  const auto k_eff = static_cast<Eigen::Index>(std::min(k, numerical_rank(svd.sigma, matrix.rows(), matrix.cols())));

  LatentSentenceVectors out;
  out.k = static_cast<std::size_t>(k_eff);
  out.singular_values = svd.sigma.head(k_eff);
  out.term_vectors = svd.u.leftCols(k_eff);
  Eigen::MatrixXd v = svd.v.leftCols(k_eff);

  for (Eigen::Index i = 0; i < k_eff; ++i) {
    const double biggest = v.col(i).cwiseAbs().maxCoeff();
    Eigen::Index pivot = 0;
    while (std::fabs(v(pivot, i)) < biggest * (1.0 - 1e-12)) ++pivot;
    if (v(pivot, i) < 0.0) {
      v.col(i) = -v.col(i);
      out.term_vectors.col(i) = -out.term_vectors.col(i);
    }
  }
  out.vectors = out.singular_values.asDiagonal() * v.transpose();
  return out;
}

LatentSentenceVectors reduce_svd(const TermSentenceMatrix& m, std::size_t k) { return reduce_svd(m.matrix, k); }

double coherence_from_matrix(const Eigen::MatrixXd& matrix, std::size_t k) {
  if (matrix.cols() == 0) throw ValidationError("matrix has no sentences");
  if (matrix.cols() == 1) return 1.0;
  const auto latent = reduce_svd(matrix, k);
  if (latent.k == 0) throw ValidationError("term-sentence matrix is all zero");

  const double zero_tol = 1e-12 * latent.singular_values(0);
  double total = 0.0;
  const Eigen::Index pairs = latent.vectors.cols() - 1;
  for (Eigen::Index j = 0; j < pairs; ++j) {
    const auto a = latent.vectors.col(j);
    const auto b = latent.vectors.col(j + 1);
    const double na = a.norm();
    const double nb = b.norm();
    if (na <= zero_tol || nb <= zero_tol) continue;
    total += std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  }
  const double mean = total / static_cast<double>(pairs);
  return std::clamp((mean + 1.0) / 2.0, 0.0, 1.0);
}

double coherence_score(std::string_view summary, std::size_t k, Weighting weighting,
                       const textproc::AbbreviationList& abbreviations) {
  const auto sentences = textproc::split_sentences(summary, abbreviations);
  if (sentences.empty()) throw ValidationError("empty summary");
  const auto m = build_term_sentence_matrix(sentences, weighting);
  return coherence_from_matrix(m.matrix, k);
}

}  // namespace summjudge::coherence
