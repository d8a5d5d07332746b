#include "pathvi/fields.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace pathvi::fields {

namespace {

constexpr double kDomainTol = 1e-9;

void check_domain(const Vector& x, int dim) {
  if (x.size() != dim) {
    throw InvalidInputError("field query: point has dimension " +
                            std::to_string(x.size()) + ", field expects " +
                            std::to_string(dim));
  }
  if (!x.allFinite()) {
    throw InvalidInputError("field query: point has non-finite entries");
  }
  if (x.norm() > 1.0 + kDomainTol) {
    throw DomainError("field query: point outside the unit ball, ||x|| = " +
                      std::to_string(x.norm()));
  }
}

std::string vec_to_json(const Vector& v) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << v[i];
  }
  os << "]";
  return os.str();
}

}  // namespace

Vector VectorField::value(const Vector& x) const {
  check_domain(x, dim_);
  value_queries_.fetch_add(1, std::memory_order_relaxed);
  return value_impl(x);
}

Matrix VectorField::jacobian(const Vector& x) const {
  check_domain(x, dim_);
  jac_queries_.fetch_add(1, std::memory_order_relaxed);
  return jacobian_impl(x);
}

void VectorField::reset_counters() const {
  value_queries_.store(0);
  jac_queries_.store(0);
}

Matrix VectorField::jacobian_impl(const Vector& x) const {
  const double h = 1e-6 * (1.0 + x.norm());
  Matrix j(dim_, dim_);
  Vector xp = x, xm = x;
  for (int c = 0; c < dim_; ++c) {
    xp[c] = x[c] + h;
    xm[c] = x[c] - h;
    j.col(c) = (value_impl(xp) - value_impl(xm)) / (2.0 * h);
    xp[c] = x[c];
    xm[c] = x[c];
  }
  return j;
}

// Perturbed field ------------------------------------------------------------

PerturbedField::PerturbedField(FieldPtr base, Matrix a, Vector b, double sigma,
                               std::uint64_t seed)
    : VectorField(base->dim(), base->bounds(), base->has_analytic_jacobian()),
      base_(std::move(base)),
      a_(std::move(a)),
      b_(std::move(b)),
      sigma_(sigma),
      seed_(seed) {}

Vector PerturbedField::value_impl(const Vector& x) const {
  return base_->value(x) + a_ * x + b_;
}

Matrix PerturbedField::jacobian_impl(const Vector& x) const {
  return base_->jacobian(x) + a_;
}

std::unique_ptr<VectorField> PerturbedField::clone() const {
  return std::make_unique<PerturbedField>(base_->clone(), a_, b_, sigma_, seed_);
}

std::string PerturbedField::describe() const {
  std::ostringstream os;
  os << "{\"kind\":\"perturbed\",\"sigma\":" << sigma_ << ",\"seed\":" << seed_
     << ",\"base\":" << base_->describe() << "}";
  return os.str();
}

std::unique_ptr<PerturbedField> perturb(const VectorField& f, double sigma,
                                        std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InvalidInputError("perturb: sigma must be finite and >= 0");
  }
  const int n = f.dim();
  auto [a, b] = numerics::sample_gaussian_linear(n, sigma * sigma / n, seed);
  return std::make_unique<PerturbedField>(f.clone(), std::move(a), std::move(b),
                                          sigma, seed);
}

// Builtins -------------------------------------------------------------------

namespace {

class AffineField final : public VectorField {
 public:
  AffineField(Matrix m, Vector c, LipschitzBounds b)
      : VectorField(static_cast<int>(m.rows()), b, true),
        m_(std::move(m)),
        c_(std::move(c)) {}

  std::unique_ptr<VectorField> clone() const override {
    return std::make_unique<AffineField>(m_, c_, bounds());
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "{\"kind\":\"affine\",\"dim\":" << dim() << ",\"c\":" << vec_to_json(c_)
       << "}";
    return os.str();
  }

  const Matrix& m() const { return m_; }
  const Vector& c() const { return c_; }

 protected:
  Vector value_impl(const Vector& x) const override { return m_ * x + c_; }
  Matrix jacobian_impl(const Vector&) const override { return m_; }

 private:
  Matrix m_;
  Vector c_;
};

class PolynomialField final : public VectorField {
 public:
  struct Coeffs {
    Vector a;
    Matrix b, c, d;
  };

  static Coeffs sample_coeffs(int dim, std::uint64_t seed, double scale) {
    numerics::Rng rng(seed);
    Coeffs co;
    co.a = Vector(dim);
    co.b = Matrix(dim, dim);
    co.c = Matrix(dim, dim);
    co.d = Matrix(dim, dim);
    const double s = scale / std::sqrt(static_cast<double>(dim));
    for (int i = 0; i < dim; ++i) co.a[i] = scale * rng.gaussian();
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) co.b(i, j) = s * rng.gaussian();
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) co.c(i, j) = 0.5 * s * rng.gaussian();
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) co.d(i, j) = 0.25 * s * rng.gaussian();
    return co;
  }

  // Safe overestimates on the closed unit ball (|x_j| <= 1, sum x_j^2 <= 1).
  static LipschitzBounds coeff_bounds(const Coeffs& co) {
    const double nb = co.b.norm(), nc = co.c.norm(), nd = co.d.norm();
    LipschitzBounds lb;
    lb.L0 = co.a.norm() + nb + nc + nd;
    lb.L1 = nb + 2.0 * nc + 3.0 * nd;
    lb.L2 = 2.0 * nc + 6.0 * nd;
    return lb;
  }

  PolynomialField(int dim, std::uint64_t seed, double scale)
      : PolynomialField(dim, seed, scale, sample_coeffs(dim, seed, scale)) {}

  std::unique_ptr<VectorField> clone() const override {
    return std::make_unique<PolynomialField>(dim(), seed_, scale_);
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "{\"kind\":\"polynomial\",\"dim\":" << dim() << ",\"seed\":" << seed_
       << ",\"scale\":" << scale_ << "}";
    return os.str();
  }

 protected:
  Vector value_impl(const Vector& x) const override {
    const Vector x2 = x.cwiseProduct(x);
    const Vector x3 = x2.cwiseProduct(x);
    return a_ + b_ * x + c_ * x2 + d_ * x3;
  }

  Matrix jacobian_impl(const Vector& x) const override {
    Matrix j = b_;
    for (int col = 0; col < dim(); ++col) {
      const double t = x[col];
      j.col(col) += 2.0 * t * c_.col(col) + 3.0 * t * t * d_.col(col);
    }
    return j;
  }

 private:
  PolynomialField(int dim, std::uint64_t seed, double scale, Coeffs co)
      : VectorField(dim, coeff_bounds(co), true),
        seed_(seed),
        scale_(scale),
        a_(std::move(co.a)),
        b_(std::move(co.b)),
        c_(std::move(co.c)),
        d_(std::move(co.d)) {}

  std::uint64_t seed_;
  double scale_;
  Vector a_;
  Matrix b_, c_, d_;
};

LipschitzBounds affine_bounds(const Matrix& m, const Vector& c) {
  LipschitzBounds b;
  b.L1 = numerics::operator_norm(m);
  b.L0 = b.L1 + c.norm();
  b.L2 = 0.0;
  return b;
}

}  // namespace

FieldPtr make_affine_field(Matrix m, Vector c, LipschitzBounds bounds) {
  if (m.rows() != m.cols() || m.rows() != c.size()) {
    throw InvalidInputError("affine field: M must be square and match c");
  }
  if (!m.allFinite() || !c.allFinite()) {
    throw InvalidInputError("affine field: non-finite coefficients");
  }
  return std::make_unique<AffineField>(std::move(m), std::move(c), bounds);
}

FieldPtr make_affine_field(Matrix m, Vector c) {
  LipschitzBounds b = affine_bounds(m, c);
  return make_affine_field(std::move(m), std::move(c), b);
}

FieldPtr make_zero_field(int dim) {
  return make_affine_field(Matrix::Zero(dim, dim), Vector::Zero(dim),
                           LipschitzBounds{0.0, 0.0, 0.0});
}

FieldPtr make_constant_field(Vector c) {
  const int n = static_cast<int>(c.size());
  LipschitzBounds b{c.norm(), 0.0, 0.0};
  return make_affine_field(Matrix::Zero(n, n), std::move(c), b);
}

FieldPtr make_fig1_displacement() {
  Matrix m(2, 2);
  m << 2, 1, 1, -3;
  Vector c(2);
  c << -1, 1;
  return make_affine_field(std::move(m), std::move(c));
}

FieldPtr make_radial_contraction(int dim, double c) {
  if (!(std::abs(c) < 1.0)) {
    throw InvalidInputError("radial contraction: need |c| < 1");
  }
  const double a = c - 1.0;
  return make_affine_field(a * Matrix::Identity(dim, dim), Vector::Zero(dim),
                           LipschitzBounds{std::abs(a), std::abs(a), 0.0});
}

FieldPtr make_polynomial_field(int dim, std::uint64_t seed, double scale) {
  if (dim < 1) throw InvalidInputError("polynomial field: dim must be >= 1");
  return std::make_unique<PolynomialField>(dim, seed, scale);
}

namespace {

class CallableField final : public VectorField {
 public:
  CallableField(int dim, std::function<Vector(const Vector&)> fn,
                LipschitzBounds b, std::string description)
      : VectorField(dim, b, false),
        fn_(std::move(fn)),
        description_(std::move(description)) {}

  std::unique_ptr<VectorField> clone() const override {
    return std::make_unique<CallableField>(dim(), fn_, bounds(), description_);
  }

  std::string describe() const override { return description_; }

 protected:
  Vector value_impl(const Vector& x) const override { return fn_(x); }

 private:
  std::function<Vector(const Vector&)> fn_;
  std::string description_;
};

}  // namespace

FieldPtr make_callable_field(int dim, std::function<Vector(const Vector&)> fn,
                             LipschitzBounds bounds, std::string description) {
  if (dim < 1) throw InvalidInputError("callable field: dim must be >= 1");
  return std::make_unique<CallableField>(dim, std::move(fn), bounds,
                                         std::move(description));
}

FieldPtr builtin_field(const std::string& name, int dim, std::uint64_t seed) {
  if (name == "zero") return make_zero_field(dim);
  if (name == "fig1-displacement") return make_fig1_displacement();
  if (name == "radial-contraction") return make_radial_contraction(dim, 0.5);
  if (name == "polynomial") return make_polynomial_field(dim, seed);
  throw ParseError("unknown builtin field '" + name + "'");
}

// Spec parsing ---------------------------------------------------------------

namespace {

using nlohmann::json;

Vector parse_vector(const json& arr, const char* key) {
  if (!arr.is_array()) throw ParseError(std::string(key) + " must be an array");
  Vector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw ParseError(std::string(key) + "[" + std::to_string(i) + "] is not a number");
    v[static_cast<int>(i)] = arr[i].get<double>();
  }
  return v;
}

Matrix parse_matrix(const json& arr, const char* key) {
  if (!arr.is_array() || arr.empty())
    throw ParseError(std::string(key) + " must be a non-empty array of rows");
  const std::size_t rows = arr.size();
  Matrix m;
  for (std::size_t i = 0; i < rows; ++i) {
    Vector row = parse_vector(arr[i], key);
    if (i == 0) {
      m = Matrix(rows, row.size());
    } else if (row.size() != m.cols()) {
      throw ParseError(std::string(key) + " rows have inconsistent lengths");
    }
    m.row(static_cast<int>(i)) = row;
  }
  return m;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ParseError("unknown key '" + it.key() + "' in field spec");
  }
}

LipschitzBounds parse_bounds(const json& j) {
  check_keys(j, {"L0", "L1", "L2"});
  LipschitzBounds b;
  b.L0 = j.value("L0", 0.0);
  b.L1 = j.value("L1", 0.0);
  b.L2 = j.value("L2", 0.0);
  if (b.L0 < 0 || b.L1 < 0 || b.L2 < 0) {
    throw ParseError("bounds must be non-negative");
  }
  return b;
}

}  // namespace

FieldPtr parse_field_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("field spec is not valid JSON: ") + e.what(),
                     e.byte);
  }
  if (!j.is_object()) throw ParseError("field spec must be a JSON object");
  check_keys(j, {"kind", "dim", "M", "c", "name", "coeffs", "bounds"});
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw ParseError("field spec needs a string 'kind'");
  }
  const std::string kind = j["kind"].get<std::string>();

  if (kind == "affine") {
    if (!j.contains("M") || !j.contains("c")) {
      throw ParseError("affine spec needs 'M' and 'c'");
    }
    Matrix m = parse_matrix(j["M"], "M");
    Vector c = parse_vector(j["c"], "c");
    if (m.rows() != m.cols()) throw ParseError("M must be square");
    if (c.size() != m.rows()) {
      throw ParseError("c has length " + std::to_string(c.size()) +
                       ", expected " + std::to_string(m.rows()));
    }
    if (j.contains("dim") && j["dim"].get<int>() != m.rows()) {
      throw ParseError("dim does not match M");
    }
    if (j.contains("bounds")) {
      return make_affine_field(std::move(m), std::move(c), parse_bounds(j["bounds"]));
    }
    return make_affine_field(std::move(m), std::move(c));
  }

  if (kind == "builtin") {
    if (!j.contains("name") || !j["name"].is_string()) {
      throw ParseError("builtin spec needs a string 'name'");
    }
    const int dim = j.value("dim", 2);
    std::uint64_t seed = 0;
    if (j.contains("coeffs")) {
      if (j["coeffs"].is_object() && j["coeffs"].contains("seed")) {
        seed = j["coeffs"]["seed"].get<std::uint64_t>();
      } else if (j["coeffs"].is_number()) {
        // radial contraction coefficient
        const std::string name = j["name"].get<std::string>();
        if (name == "radial-contraction") {
          return make_radial_contraction(dim, j["coeffs"].get<double>());
        }
        throw ParseError("numeric 'coeffs' only applies to radial-contraction");
      }
    }
    return builtin_field(j["name"].get<std::string>(), dim, seed);
  }

  if (kind == "polynomial") {
    if (!j.contains("dim")) throw ParseError("polynomial spec needs 'dim'");
    const int dim = j["dim"].get<int>();
    std::uint64_t seed = 0;
    double scale = 0.5;
    if (j.contains("coeffs")) {
      const json& c = j["coeffs"];
      if (!c.is_object()) throw ParseError("polynomial 'coeffs' must be an object");
      check_keys(c, {"seed", "scale"});
      seed = c.value("seed", std::uint64_t{0});
      scale = c.value("scale", 0.5);
    }
    return make_polynomial_field(dim, seed, scale);
  }

  throw ParseError("unknown field kind '" + kind + "'");
}

}  // namespace pathvi::fields
