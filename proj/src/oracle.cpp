#include "asgt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "asgt/error.hpp"

namespace asgt {

namespace {

using nlohmann::json;

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

// u(s) = s^2/(1+s^2) and its derivatives; |u''| <= 2 everywhere.
double bump(double s) { return s * s / (1.0 + s * s); }
double bump_prime(double s) {
  const double q = 1.0 + s * s;
  return 2.0 * s / (q * q);
}

double softplus(double s) { return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }
double logistic(double s) { return s >= 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s)); }

Eigen::Index dimension_of(const Component& c) {
  return std::visit(overloaded{
                        [](const QuadraticComponent& q) { return q.A.cols(); },
                        [](const SigmoidComponent& s) { return s.c.cols(); },
                        [](const LogisticComponent& l) { return l.features.cols(); },
                    },
                    c);
}

ProblemFamily family_of(const Component& c) {
  return std::visit(overloaded{
                        [](const QuadraticComponent&) { return ProblemFamily::quadratic; },
                        [](const SigmoidComponent&) { return ProblemFamily::nonconvex_sigmoid; },
                        [](const LogisticComponent&) { return ProblemFamily::nonconvex_logistic; },
                    },
                    c);
}

double largest_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

double smoothness_of(const Component& c) {
  return std::visit(overloaded{
                        [](const QuadraticComponent& q) { return largest_eigenvalue(q.A.transpose() * q.A); },
                        [](const SigmoidComponent& s) {
                          return 2.0 * s.c.cwiseAbs().colwise().sum().maxCoeff() + s.mu;
                        },
                        [](const LogisticComponent& l) {
                          const Matrix weighted = l.features.transpose() * l.weights.asDiagonal() * l.features;
                          return 0.25 * largest_eigenvalue(weighted) + 2.0 * l.alpha;
                        },
                    },
                    c);
}

double component_value(const Component& c, const Vector& x) {
  return std::visit(
      overloaded{
          [&](const QuadraticComponent& q) { return 0.5 * (q.A * x - q.b).squaredNorm(); },
          [&](const SigmoidComponent& s) {
            double total = 0.5 * s.mu * x.squaredNorm();
            for (Eigen::Index r = 0; r < s.c.rows(); ++r)
              for (Eigen::Index d = 0; d < s.c.cols(); ++d) total += s.c(r, d) * bump(x[d] - s.t(r, d));
            return total;
          },
          [&](const LogisticComponent& l) {
            const Vector margins = l.labels.cwiseProduct(l.features * x);
            double total = 0.0;
            for (Eigen::Index k = 0; k < margins.size(); ++k) total += l.weights[k] * softplus(-margins[k]);
            for (Eigen::Index d = 0; d < x.size(); ++d) total += l.alpha * bump(x[d]);
            return total;
          },
      },
      c);
}

Vector logistic_regularizer_grad(const LogisticComponent& l, const Vector& x) {
  Vector g(x.size());
  for (Eigen::Index d = 0; d < x.size(); ++d) g[d] = l.alpha * bump_prime(x[d]);
  return g;
}

Vector component_grad(const Component& c, const Vector& x) {
  return std::visit(
      overloaded{
          [&](const QuadraticComponent& q) -> Vector { return q.A.transpose() * (q.A * x - q.b); },
          [&](const SigmoidComponent& s) -> Vector {
            Vector g = s.mu * x;
            for (Eigen::Index r = 0; r < s.c.rows(); ++r)
              for (Eigen::Index d = 0; d < s.c.cols(); ++d) g[d] += s.c(r, d) * bump_prime(x[d] - s.t(r, d));
            return g;
          },
          [&](const LogisticComponent& l) -> Vector {
            const Vector margins = l.labels.cwiseProduct(l.features * x);
            Vector coeff(margins.size());
            for (Eigen::Index k = 0; k < margins.size(); ++k)
              coeff[k] = -l.weights[k] * l.labels[k] * logistic(-margins[k]);
            return l.features.transpose() * coeff + logistic_regularizer_grad(l, x);
          },
      },
      c);
}

// Uniform-with-replacement minibatch, rescaled so its mean is the full gradient.
Vector minibatch_grad(const LogisticComponent& l, const Vector& x, std::size_t batch, std::mt19937_64& rng) {
  const auto samples = l.features.rows();
  std::uniform_int_distribution<Eigen::Index> pick(0, samples - 1);
  Vector g = logistic_regularizer_grad(l, x);
  const double scale = static_cast<double>(samples) / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const Eigen::Index k = pick(rng);
    const double margin = l.labels[k] * l.features.row(k).dot(x);
    g += (-scale * l.weights[k] * l.labels[k] * logistic(-margin)) * l.features.row(k).transpose();
  }
  return g;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Matrix matrix_from_json(const json& j, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw Error(ErrorKind::parse_error, "ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::string_view to_string(ProblemFamily family) {
  switch (family) {
    case ProblemFamily::quadratic: return "quadratic";
    case ProblemFamily::nonconvex_sigmoid: return "nonconvex-sigmoid";
    case ProblemFamily::nonconvex_logistic: return "nonconvex-logistic";
  }
  return "unknown";
}

std::string_view to_string(NoiseModel noise) {
  return noise == NoiseModel::gaussian ? "gaussian" : "minibatch";
}

ProblemFamily parse_family(std::string_view name) {
  if (name == "quadratic") return ProblemFamily::quadratic;
  if (name == "nonconvex-sigmoid") return ProblemFamily::nonconvex_sigmoid;
  if (name == "nonconvex-logistic") return ProblemFamily::nonconvex_logistic;
  throw Error(ErrorKind::invalid_argument, "unknown problem family '" + std::string(name) + "'");
}

NoiseModel parse_noise_model(std::string_view name) {
  if (name == "gaussian") return NoiseModel::gaussian;
  if (name == "minibatch") return NoiseModel::minibatch;
  throw Error(ErrorKind::invalid_argument, "unknown noise model '" + std::string(name) + "'");
}

ObjectiveOracle::ObjectiveOracle(std::vector<Component> components, double sigma, NoiseModel noise,
                                 std::size_t batch)
    : components_(std::move(components)), sigma_(sigma), noise_(noise), batch_(batch) {
  if (components_.empty()) throw Error(ErrorKind::invalid_argument, "objective needs at least one component");
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) throw Error(ErrorKind::invalid_argument, "sigma must be >= 0");
  family_ = family_of(components_.front());
  dimension_ = static_cast<std::size_t>(dimension_of(components_.front()));
  if (dimension_ == 0) throw Error(ErrorKind::invalid_argument, "dimension must be positive");
  for (const auto& c : components_) {
    if (family_of(c) != family_) throw Error(ErrorKind::invalid_argument, "components mix problem families");
    if (static_cast<std::size_t>(dimension_of(c)) != dimension_) {
      throw Error(ErrorKind::invalid_argument, "components disagree on dimension");
    }
    smoothness_.push_back(smoothness_of(c));
  }
  if (noise_ == NoiseModel::minibatch) {
    if (family_ != ProblemFamily::nonconvex_logistic) {
      throw Error(ErrorKind::invalid_argument, "minibatch noise needs per-sample losses (logistic family)");
    }
    if (batch_ == 0) throw Error(ErrorKind::invalid_argument, "minibatch size must be positive");
  }
}

double ObjectiveOracle::lower_bound() const {
  if (family_ != ProblemFamily::nonconvex_sigmoid) return 0.0;
  double bound = 0.0;
  for (const auto& c : components_) bound += std::get<SigmoidComponent>(c).c.cwiseMin(0.0).sum();
  return bound;
}

double ObjectiveOracle::value(AgentId i, const Vector& x) const { return component_value(components_.at(i), x); }

double ObjectiveOracle::total_value(const Vector& x) const {
  CompensatedSum total;
  for (const auto& c : components_) total.add(component_value(c, x));
  return total.value();
}

Vector ObjectiveOracle::grad(AgentId i, const Vector& x) const { return component_grad(components_.at(i), x); }

Vector ObjectiveOracle::stoch_grad(AgentId i, const Vector& x, const SampleDraw& draw) const {
  if (noise_ == NoiseModel::gaussian && sigma_ == 0.0) return grad(i, x);
  std::mt19937_64 rng(mix_seed(draw.stream, draw.label));
  if (noise_ == NoiseModel::minibatch) {
    return minibatch_grad(std::get<LogisticComponent>(components_.at(i)), x, batch_, rng);
  }
  // Isotropic split: each coordinate has variance sigma^2 / n, total sigma^2.
  std::normal_distribution<double> normal(0.0, sigma_ / std::sqrt(static_cast<double>(dimension_)));
  Vector g = grad(i, x);
  for (Eigen::Index d = 0; d < g.size(); ++d) g[d] += normal(rng);
  return g;
}

Vector ObjectiveOracle::full_grad_sum(const Vector& x) const {
  Vector total = Vector::Zero(static_cast<Eigen::Index>(dimension_));
  for (const auto& c : components_) total += component_grad(c, x);
  return total;
}

std::optional<Vector> ObjectiveOracle::minimizer() const {
  if (family_ != ProblemFamily::quadratic) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(dimension_);
  Matrix hessian = Matrix::Zero(n, n);
  Vector rhs = Vector::Zero(n);
  for (const auto& c : components_) {
    const auto& q = std::get<QuadraticComponent>(c);
    hessian += q.A.transpose() * q.A;
    rhs += q.A.transpose() * q.b;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(hessian);
  qr.setThreshold(1e-12);
  if (qr.rank() < n) {
    throw Error(ErrorKind::singular_system,
                "sum of A_i^T A_i has rank " + std::to_string(qr.rank()) + " < " + std::to_string(n));
  }
  return Vector(qr.solve(rhs));
}

ObjectiveOracle ObjectiveOracle::collapsed() const {
  if (components_.size() == 1) return *this;
  Component merged = std::visit(
      overloaded{
          [&](const QuadraticComponent&) -> Component {
            Eigen::Index rows = 0;
            for (const auto& c : components_) rows += std::get<QuadraticComponent>(c).A.rows();
            QuadraticComponent out{Matrix(rows, static_cast<Eigen::Index>(dimension_)), Vector(rows)};
            Eigen::Index at = 0;
            for (const auto& c : components_) {
              const auto& q = std::get<QuadraticComponent>(c);
              out.A.middleRows(at, q.A.rows()) = q.A;
              out.b.segment(at, q.b.size()) = q.b;
              at += q.A.rows();
            }
            return out;
          },
          [&](const SigmoidComponent&) -> Component {
            Eigen::Index rows = 0;
            for (const auto& c : components_) rows += std::get<SigmoidComponent>(c).c.rows();
            SigmoidComponent out{Matrix(rows, static_cast<Eigen::Index>(dimension_)),
                                 Matrix(rows, static_cast<Eigen::Index>(dimension_)), 0.0};
            Eigen::Index at = 0;
            for (const auto& c : components_) {
              const auto& s = std::get<SigmoidComponent>(c);
              out.c.middleRows(at, s.c.rows()) = s.c;
              out.t.middleRows(at, s.t.rows()) = s.t;
              out.mu += s.mu;
              at += s.c.rows();
            }
            return out;
          },
          [&](const LogisticComponent&) -> Component {
            Eigen::Index rows = 0;
            for (const auto& c : components_) rows += std::get<LogisticComponent>(c).features.rows();
            LogisticComponent out{Matrix(rows, static_cast<Eigen::Index>(dimension_)), Vector(rows), Vector(rows),
                                  0.0};
            Eigen::Index at = 0;
            for (const auto& c : components_) {
              const auto& l = std::get<LogisticComponent>(c);
              const auto k = l.features.rows();
              out.features.middleRows(at, k) = l.features;
              out.labels.segment(at, k) = l.labels;
              out.weights.segment(at, k) = l.weights;
              out.alpha += l.alpha;
              at += k;
            }
            return out;
          },
      },
      components_.front());
  return ObjectiveOracle({std::move(merged)}, sigma_, noise_, batch_);
}

ObjectiveOracle make_problem(const ProblemSpec& spec, std::size_t agents) {
  if (agents == 0) throw Error(ErrorKind::invalid_argument, "problem needs at least one agent");
  if (spec.dimension == 0 || spec.rows == 0) {
    throw Error(ErrorKind::invalid_argument, "problem dimension and rows must be positive");
  }
  const auto n = static_cast<Eigen::Index>(spec.dimension);
  const auto rows = static_cast<Eigen::Index>(spec.rows);
  std::mt19937_64 rng(mix_seed(spec.seed, 0x0bec7ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto gaussian_matrix = [&](Eigen::Index r, Eigen::Index c, double scale) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * normal(rng);
    return m;
  };

  std::vector<Component> components;
  components.reserve(agents);
  switch (spec.family) {
    case ProblemFamily::quadratic: {
      const double scale = spec.scale / std::sqrt(static_cast<double>(rows));
      for (std::size_t i = 0; i < agents; ++i) {
        QuadraticComponent q{gaussian_matrix(rows, n, scale), gaussian_matrix(rows, 1, 1.0).col(0)};
        components.emplace_back(std::move(q));
      }
      break;
    }
    case ProblemFamily::nonconvex_sigmoid: {
      for (std::size_t i = 0; i < agents; ++i) {
        SigmoidComponent s{Matrix(rows, n), gaussian_matrix(rows, n, 1.5), spec.mu};
        for (Eigen::Index r = 0; r < rows; ++r)
          for (Eigen::Index d = 0; d < n; ++d) s.c(r, d) = (0.5 + unit(rng)) / static_cast<double>(rows);
        components.emplace_back(std::move(s));
      }
      break;
    }
    case ProblemFamily::nonconvex_logistic: {
      const Vector planted = gaussian_matrix(n, 1, 1.0).col(0);
      for (std::size_t i = 0; i < agents; ++i) {
        LogisticComponent l{gaussian_matrix(rows, n, 1.0), Vector(rows),
                            Vector::Constant(rows, 1.0 / static_cast<double>(rows)), spec.alpha};
        for (Eigen::Index k = 0; k < rows; ++k) {
          // 10% label flips keep the data non-separable so F has a finite infimum region.
          const double sign = l.features.row(k).dot(planted) >= 0 ? 1.0 : -1.0;
          l.labels[k] = unit(rng) < 0.1 ? -sign : sign;
        }
        components.emplace_back(std::move(l));
      }
      break;
    }
  }
  return ObjectiveOracle(std::move(components), spec.sigma, spec.noise, spec.batch);
}

std::string serialize_oracle(const ObjectiveOracle& oracle) {
  json doc;
  doc["family"] = std::string(to_string(oracle.family()));
  doc["dimension"] = oracle.dimension();
  doc["sigma"] = oracle.sigma();
  doc["noise"] = std::string(to_string(oracle.noise_model()));
  doc["batch"] = oracle.batch();
  json comps = json::array();
  for (std::size_t i = 0; i < oracle.components(); ++i) {
    comps.push_back(std::visit(overloaded{
                                   [](const QuadraticComponent& q) {
                                     return json{{"A", matrix_to_json(q.A)}, {"b", vector_to_json(q.b)}};
                                   },
                                   [](const SigmoidComponent& s) {
                                     return json{{"c", matrix_to_json(s.c)}, {"t", matrix_to_json(s.t)}, {"mu", s.mu}};
                                   },
                                   [](const LogisticComponent& l) {
                                     return json{{"features", matrix_to_json(l.features)},
                                                 {"labels", vector_to_json(l.labels)},
                                                 {"weights", vector_to_json(l.weights)},
                                                 {"alpha", l.alpha}};
                                   },
                               },
                               oracle.component(i)));
  }
  doc["components"] = std::move(comps);
  return doc.dump(1);
}

ObjectiveOracle deserialize_oracle(std::string_view text) {
  try {
    const json doc = json::parse(text);
    const auto family = parse_family(doc.at("family").get<std::string>());
    const auto n = doc.at("dimension").get<Eigen::Index>();
    std::vector<Component> components;
    for (const auto& c : doc.at("components")) {
      switch (family) {
        case ProblemFamily::quadratic:
          components.emplace_back(QuadraticComponent{matrix_from_json(c.at("A"), n), vector_from_json(c.at("b"))});
          break;
        case ProblemFamily::nonconvex_sigmoid:
          components.emplace_back(SigmoidComponent{matrix_from_json(c.at("c"), n), matrix_from_json(c.at("t"), n),
                                                   c.at("mu").get<double>()});
          break;
        case ProblemFamily::nonconvex_logistic:
          components.emplace_back(LogisticComponent{matrix_from_json(c.at("features"), n),
                                                    vector_from_json(c.at("labels")),
                                                    vector_from_json(c.at("weights")), c.at("alpha").get<double>()});
          break;
      }
    }
    return ObjectiveOracle(std::move(components), doc.at("sigma").get<double>(),
                           parse_noise_model(doc.value("noise", std::string("gaussian"))),
                           doc.value("batch", std::size_t{1}));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("oracle document: ") + e.what());
  }
}

}  // namespace asgt
