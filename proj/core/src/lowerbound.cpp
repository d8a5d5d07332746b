#include "pathvi/lowerbound.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "pathvi/rng.hpp"

namespace pathvi::lowerbound {

// BitWord ---------------------------------------------------------------------

BitWord::BitWord(int bits) : bits_(bits) {
  if (bits < 1 || bits > 256) throw InvalidInputError("BitWord: bits must be in [1, 256]");
}

BitWord BitWord::from_string(const std::string& s) {
  BitWord w(static_cast<int>(s.size()));
  for (int i = 0; i < w.bits_; ++i) {
    if (s[i] != '0' && s[i] != '1') throw InvalidInputError("BitWord: bad character");
    w.set_bit(i, s[i] == '1');
  }
  return w;
}

bool BitWord::bit(int string_pos) const {
  const int b = bits_ - 1 - string_pos;  // integer bit index
  return (limbs_[b >> 6] >> (b & 63)) & 1u;
}

void BitWord::set_bit(int string_pos, bool v) {
  const int b = bits_ - 1 - string_pos;
  const std::uint64_t mask = std::uint64_t{1} << (b & 63);
  if (v) {
    limbs_[b >> 6] |= mask;
  } else {
    limbs_[b >> 6] &= ~mask;
  }
}

int BitWord::weight() const {
  int w = 0;
  for (std::uint64_t limb : limbs_) w += std::popcount(limb);
  return w;
}

int BitWord::hamming(const BitWord& o) const {
  int d = 0;
  for (int i = 0; i < 4; ++i) d += std::popcount(limbs_[i] ^ o.limbs_[i]);
  return d;
}

bool BitWord::increment() {
  for (int i = 0; i < 4; ++i) {
    if (++limbs_[i] != 0) break;
  }
  // Wrap detection: the bit at position `bits_` (just above the word) went hot.
  const int top = bits_;
  if (top < 256 && ((limbs_[top >> 6] >> (top & 63)) & 1u)) {
    limbs_[top >> 6] &= ~(std::uint64_t{1} << (top & 63));
    bool any = false;
    for (std::uint64_t limb : limbs_) any |= limb != 0;
    return any ? true : false;  // carry escaped the word: wrapped to zero
  }
  return true;
}

bool BitWord::next_with_min_weight(int d) {
  if (!increment()) return false;
  int w = weight();
  if (w >= d) return true;
  // Smallest value >= current with enough ones: fill the lowest zero bits.
  for (int b = 0; b < bits_ && w < d; ++b) {
    const std::uint64_t mask = std::uint64_t{1} << (b & 63);
    if (!(limbs_[b >> 6] & mask)) {
      limbs_[b >> 6] |= mask;
      ++w;
    }
  }
  return w >= d;
}

bool BitWord::operator<(const BitWord& o) const {
  for (int i = 3; i >= 0; --i) {
    if (limbs_[i] != o.limbs_[i]) return limbs_[i] < o.limbs_[i];
  }
  return false;
}

std::string BitWord::to_string() const {
  std::string s(bits_, '0');
  for (int i = 0; i < bits_; ++i) s[i] = bit(i) ? '1' : '0';
  return s;
}

// GV code ---------------------------------------------------------------------

const BitWord& GVCode::phi(Vertex u) const {
  if (u >= codewords.size()) throw InvalidInputError("GVCode::phi: vertex out of range");
  return codewords[u];
}

Vertex GVCode::psi(const BitWord& w) const {
  const auto it = std::lower_bound(codewords.begin(), codewords.end(), w);
  if (it == codewords.end() || !(*it == w)) {
    throw InvalidInputError("GVCode::psi: word is not a codeword");
  }
  return static_cast<Vertex>(it - codewords.begin());
}

GVCode build_gv_code(int k, std::uint64_t max_candidates) {
  if (k < 1 || k > 20) throw InvalidInputError("build_gv_code: k must be in [1, 20]");
  GVCode code;
  code.k = k;
  code.m = 10 * k;
  code.min_distance = (code.m + 3) / 4;
  const std::uint64_t target = std::uint64_t{1} << k;

  BitWord w(code.m);  // all-zero word: always the first codeword
  code.codewords.push_back(w);
  std::uint64_t examined = 0;
  while (code.codewords.size() < target) {
    if (!w.next_with_min_weight(code.min_distance)) {
      throw ConstructionError("build_gv_code: scan exhausted {0,1}^m",
                              code.codewords.size());
    }
    if (++examined > max_candidates) {
      throw ConstructionError("build_gv_code: candidate budget exhausted",
                              code.codewords.size());
    }
    bool ok = true;
    for (auto it = code.codewords.rbegin(); it != code.codewords.rend(); ++it) {
      if (w.hamming(*it) < code.min_distance) {
        ok = false;
        break;
      }
    }
    if (ok) code.codewords.push_back(w);
  }
  return code;
}

// Oracle base ------------------------------------------------------------------

EndOfLineOracle::EndOfLineOracle(int k) : k_(k) {
  if (k < 1 || k > 25) throw InvalidInputError("EndOfLineOracle: k must be in [1, 25]");
  s_cache_.resize(vertex_count());
  p_cache_.resize(vertex_count());
}

Vertex EndOfLineOracle::ask(char type, Vertex v) {
  if (v >= vertex_count()) throw InvalidInputError("oracle query: vertex out of range");
  auto& cache = type == 'S' ? s_cache_ : p_cache_;
  ++total_;
  if (cache[v]) {
    log_.push_back({type, v, *cache[v], false});
    return *cache[v];
  }
  const Vertex ans = type == 'S' ? successor_impl(v) : predecessor_impl(v);
  cache[v] = ans;
  ++fresh_;
  log_.push_back({type, v, ans, true});
  return ans;
}

Vertex EndOfLineOracle::successor(Vertex v) { return ask('S', v); }
Vertex EndOfLineOracle::predecessor(Vertex v) { return ask('P', v); }

// Explicit oracle --------------------------------------------------------------

ExplicitOracle::ExplicitOracle(int k, std::vector<Vertex> succ,
                               std::vector<Vertex> pred)
    : EndOfLineOracle(k), succ_(std::move(succ)), pred_(std::move(pred)) {
  if (succ_.size() != vertex_count() || pred_.size() != vertex_count()) {
    throw InvalidInputError("ExplicitOracle: tables must have 2^k entries");
  }
}

ExplicitOracle ExplicitOracle::path_graph(int k) {
  const Vertex n = Vertex{1} << k;
  std::vector<Vertex> succ(n), pred(n);
  for (Vertex v = 0; v < n; ++v) {
    succ[v] = v + 1 < n ? v + 1 : v;
    pred[v] = v > 0 ? v - 1 : v;
  }
  return {k, std::move(succ), std::move(pred)};
}

ExplicitOracle ExplicitOracle::permuted_path(int k, std::uint64_t seed) {
  const Vertex n = Vertex{1} << k;
  std::vector<Vertex> order(n);
  std::iota(order.begin(), order.end(), Vertex{0});
  numerics::Rng rng(seed);
  // Fisher-Yates over positions 1..n-1; vertex 0 stays the path start.
  for (Vertex i = n - 1; i >= 2; --i) {
    const auto j = static_cast<Vertex>(1 + rng.raw() % i);
    std::swap(order[i], order[j]);
  }
  std::vector<Vertex> succ(n), pred(n);
  for (Vertex v = 0; v < n; ++v) succ[v] = pred[v] = v;
  for (Vertex i = 0; i + 1 < n; ++i) {
    succ[order[i]] = order[i + 1];
    pred[order[i + 1]] = order[i];
  }
  return {k, std::move(succ), std::move(pred)};
}

// Adversarial oracle -----------------------------------------------------------

AdversarialOracle::AdversarialOracle(int k)
    : EndOfLineOracle(k),
      s_(vertex_count(), kNone),
      p_(vertex_count(), kNone),
      touched_(vertex_count(), false),
      on_path_(vertex_count(), false) {
  central_path_.push_back(0);
  on_path_[0] = true;
  touch(0);
}

void AdversarialOracle::touch(Vertex v) {
  if (!touched_[v]) {
    touched_[v] = true;
    ++touched_count_;
  }
}

void AdversarialOracle::commit_edge(Vertex a, Vertex b) {
  s_[a] = b;
  p_[b] = a;
  touch(a);
  touch(b);
}

Vertex AdversarialOracle::first_untouched(Vertex skip) const {
  for (Vertex v = 1; v < vertex_count(); ++v) {
    if (!touched_[v] && v != skip) return v;
  }
  return kNone;
}

void AdversarialOracle::extend_path(Vertex v) {
  // Append v and absorb any successor chain already committed from it.
  while (v != kNone && !on_path_[v]) {
    central_path_.push_back(v);
    on_path_[v] = true;
    v = s_[v];
  }
}

Vertex AdversarialOracle::successor_impl(Vertex v) {
  if (s_[v] != kNone) return s_[v];
  const Vertex free = first_untouched(v);
  if (free == kNone) {
    // Every vertex is touched: any answer exposes an end of the line.
    s_[v] = v;
    touch(v);
    return v;
  }
  commit_edge(v, free);
  if (on_path_[v] && central_path_.back() == v) extend_path(free);
  return free;
}

Vertex AdversarialOracle::predecessor_impl(Vertex v) {
  if (p_[v] != kNone) return p_[v];
  if (v == 0) {
    p_[0] = 0;  // the distinguished start has no predecessor
    return 0;
  }
  const Vertex end = central_path_.back();
  commit_edge(end, v);
  extend_path(v);
  return p_[v];
}

bool AdversarialOracle::witness_certified() const {
  for (Vertex x = 0; x < vertex_count(); ++x) {
    if (s_[x] != kNone) {
      const Vertex y = s_[x];
      if (y == x && x != 0 && p_[x] != kNone && p_[x] != x) return true;
      if (p_[y] != kNone && p_[y] != x && x != 0) return true;
    }
    if (p_[x] != kNone && x != 0) {
      const Vertex w = p_[x];
      if (w != x && s_[w] != kNone && s_[w] != x) return true;
    }
  }
  return false;
}

std::optional<ExplicitOracle> AdversarialOracle::try_complete() const {
  const Vertex n = vertex_count();
  std::vector<Vertex> succ(n, kNone), pred(n, kNone);
  for (Vertex v = 0; v < n; ++v) {
    if (s_[v] != kNone) succ[v] = s_[v];
    if (p_[v] != kNone) pred[v] = p_[v];
  }

  // Walk the central path, then splice every detached committed chain onto
  // its tail (heads ordered by id for determinism).
  std::vector<bool> placed(n, false);
  Vertex tail = 0;
  for (Vertex v = 0; v != kNone && !placed[v]; v = succ[v] == v ? kNone : succ[v]) {
    placed[v] = true;
    tail = v;
  }
  for (Vertex head = 1; head < n; ++head) {
    if (placed[head] || !touched_[head]) continue;
    if (pred[head] != kNone) continue;  // interior of some chain
    if (succ[tail] != kNone && succ[tail] != tail) return std::nullopt;
    if (succ[tail] == kNone) {
      succ[tail] = head;
      pred[head] = tail;
    }
    for (Vertex v = head; v != kNone && !placed[v]; v = succ[v] == v ? kNone : succ[v]) {
      placed[v] = true;
      tail = v;
    }
  }
  // Anything touched but not reached has a committed predecessor chain that
  // merges into the path; a correct adversary never leaves such leftovers.
  for (Vertex v = 0; v < n; ++v) {
    if (touched_[v] && !placed[v]) return std::nullopt;
  }

  if (succ[tail] == kNone) succ[tail] = tail;  // the line ends here
  if (pred[0] == kNone) pred[0] = 0;
  for (Vertex v = 0; v < n; ++v) {
    if (succ[v] == kNone) succ[v] = v;
    if (pred[v] == kNone) pred[v] = v;
  }

  ExplicitOracle done(k(), std::move(succ), std::move(pred));
  // The completion must replay the full query log verbatim.
  for (const auto& e : log()) {
    const Vertex want = e.answer;
    const Vertex got = e.type == 'S' ? done.succ()[e.v] : done.pred()[e.v];
    if (got != want) return std::nullopt;
  }
  return done;
}

// Hard instance ----------------------------------------------------------------

const char* to_string(Region::Kind k) {
  switch (k) {
    case Region::Kind::Background: return "Background";
    case Region::Kind::InitialTube: return "InitialTube";
    case Region::Kind::OriginBall: return "OriginBall";
    case Region::Kind::EdgeTube1: return "EdgeTube1";
    case Region::Kind::EdgeTube2: return "EdgeTube2";
    case Region::Kind::VertexTube: return "VertexTube";
    case Region::Kind::VertexBall1: return "VertexBall1";
    case Region::Kind::VertexBall2: return "VertexBall2";
    case Region::Kind::EdgeBall: return "EdgeBall";
  }
  return "?";
}

HardInstance::HardInstance(HardInstanceConfig cfg, GVCode code,
                           std::shared_ptr<EndOfLineOracle> oracle)
    : cfg_(cfg), code_(std::move(code)), oracle_(std::move(oracle)) {
  if (!oracle_ || oracle_->k() != cfg_.k || code_.k != cfg_.k) {
    throw InvalidInputError("HardInstance: oracle/code/k mismatch");
  }
  if (!(cfg_.eps > 0.0) || !(cfg_.gamma > 0.0) || cfg_.gamma > 1.0 / 16.0) {
    throw InvalidInputError("HardInstance: need eps > 0 and 0 < gamma <= 1/16");
  }
  n_ = 4 * code_.m;
  alpha_ = std::sqrt(3.0) * cfg_.gamma;
  const int half = n_ / 2;
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n_));
  enc_.reserve(code_.codewords.size());
  for (const BitWord& w : code_.codewords) {
    Vector e = Vector::Zero(half);
    for (int j = 0; j < code_.m; ++j) {
      const bool b = w.bit(j);
      e[j] = b ? inv_sqrt_n : 0.0;
      e[code_.m + j] = b ? 0.0 : inv_sqrt_n;  // complement block
    }
    enc_.push_back(std::move(e));
  }
}

std::shared_ptr<HardInstance> HardInstance::make(
    const HardInstanceConfig& cfg, std::shared_ptr<EndOfLineOracle> oracle) {
  return std::make_shared<HardInstance>(cfg, build_gv_code(cfg.k),
                                        std::move(oracle));
}

Vector HardInstance::vertex_point(Vertex u) const {
  Vector x = Vector::Zero(n_);
  x.head(n_ / 2) = enc_.at(u);
  return x;
}

Vector HardInstance::vertex_point_prime(Vertex u) const {
  Vector x = Vector::Zero(n_);
  x.tail(n_ / 2) = enc_.at(u);
  return x;
}

Vector HardInstance::edge_point(Vertex u, Vertex v) const {
  Vector x = Vector::Zero(n_);
  x.head(n_ / 2) = enc_.at(u);
  x.tail(n_ / 2) = enc_.at(v);
  return x;
}

bool HardInstance::initial_edge(Vertex* e0) const {
  const Vertex v = oracle_->successor(0);
  if (v == 0) return false;
  if (oracle_->predecessor(v) != 0) return false;
  *e0 = v;
  return true;
}

bool HardInstance::edge_drawn(Vertex u, Vertex v) const {
  return u != 0 && u != v && oracle_->successor(u) == v &&
         oracle_->predecessor(v) == u;
}

bool HardInstance::vertex_tube_drawn(Vertex u) const {
  if (u == 0) return false;
  const Vertex w = oracle_->predecessor(u);
  if (w == u || oracle_->successor(w) != u) return false;
  const Vertex y = oracle_->successor(u);
  if (y == u || oracle_->predecessor(y) != u) return false;
  return true;
}

namespace {

/// Squared distance of a half-vector (squared norm p2, inner product `dot`
/// with an Enc pattern of squared norm 1/4) to the segment {t Enc : t in [0,1]}.
double seg01_dist2(double dot, double p2) {
  const double t = std::clamp(4.0 * dot, 0.0, 1.0);
  return p2 - 2.0 * t * dot + 0.25 * t * t;
}

}  // namespace

Region HardInstance::classify_impl(const Vector& x) const {
  using Kind = Region::Kind;
  const int half = n_ / 2;
  const auto fh = x.head(half);
  const auto sh = x.tail(half);
  const double fh2 = fh.squaredNorm();
  const double sh2 = sh.squaredNorm();
  const std::size_t nc = enc_.size();
  std::vector<double> df(nc), ds(nc);
  for (std::size_t u = 0; u < nc; ++u) {
    df[u] = fh.dot(enc_[u]);
    ds[u] = sh.dot(enc_[u]);
  }
  const double g2 = cfg_.gamma * cfg_.gamma;
  const double a2 = alpha_ * alpha_;

  Region best;  // Background

  // Initial tube: the first-half block must vanish to within gamma before the
  // oracle is consulted.
  if (fh2 <= g2) {
    Vertex e0 = 0;
    if (initial_edge(&e0) && fh2 + seg01_dist2(ds[e0], sh2) <= g2) {
      best = {Kind::InitialTube, e0, 0};
    }
  }

  if (fh2 + sh2 <= g2) {
    Vertex e0 = 0;
    const bool has = initial_edge(&e0);
    best = {Kind::OriginBall, has ? e0 : 0, 0};
  }

  // Edge tube 1: first half pinned to Enc(u).
  for (std::size_t u = 0; u < nc; ++u) {
    const double fd2 = fh2 - 2.0 * df[u] + 0.25;
    if (fd2 > g2) continue;
    if (u != 0) {
      const Vertex v = oracle_->successor(static_cast<Vertex>(u));
      if (edge_drawn(static_cast<Vertex>(u), v) &&
          fd2 + seg01_dist2(ds[v], sh2) <= g2) {
        best = {Kind::EdgeTube1, static_cast<Vertex>(u), v};
      }
    }
    break;  // lattice separation makes the candidate unique
  }

  // Edge tube 2: second half pinned to Enc(v).
  for (std::size_t v = 0; v < nc; ++v) {
    const double sd2 = sh2 - 2.0 * ds[v] + 0.25;
    if (sd2 > g2) continue;
    const Vertex u = oracle_->predecessor(static_cast<Vertex>(v));
    if (edge_drawn(u, static_cast<Vertex>(v)) &&
        seg01_dist2(df[u], fh2) + sd2 <= g2) {
      best = {Kind::EdgeTube2, u, static_cast<Vertex>(v)};
    }
    break;
  }

  // Vertex tube: both halves move along Enc(u).
  for (std::size_t u = 0; u < nc; ++u) {
    const double lam = std::clamp(0.5 + 2.0 * ds[u] - 2.0 * df[u], 0.0, 1.0);
    const double d2 = fh2 - 2.0 * (1.0 - lam) * df[u] +
                      0.25 * (1.0 - lam) * (1.0 - lam) + sh2 -
                      2.0 * lam * ds[u] + 0.25 * lam * lam;
    if (d2 > g2) continue;
    if (vertex_tube_drawn(static_cast<Vertex>(u))) {
      best = {Kind::VertexTube, static_cast<Vertex>(u), 0};
    }
    break;
  }

  // Vertex ball 1 (around x_u).
  for (std::size_t u = 0; u < nc; ++u) {
    const double d2 = fh2 - 2.0 * df[u] + 0.25 + sh2;
    if (d2 > a2) continue;
    if (u != 0 && vertex_tube_drawn(static_cast<Vertex>(u))) {
      const Vertex v = oracle_->successor(static_cast<Vertex>(u));
      if (edge_drawn(static_cast<Vertex>(u), v)) {
        best = {Kind::VertexBall1, static_cast<Vertex>(u), v};
      }
    }
    break;
  }

  // Vertex ball 2 (around x'_u).
  for (std::size_t u = 0; u < nc; ++u) {
    const double d2 = fh2 + sh2 - 2.0 * ds[u] + 0.25;
    if (d2 > a2) continue;
    if (vertex_tube_drawn(static_cast<Vertex>(u))) {
      const Vertex w = oracle_->predecessor(static_cast<Vertex>(u));
      const bool in_drawn =
          w == 0 ? (oracle_->successor(0) == static_cast<Vertex>(u))
                 : edge_drawn(w, static_cast<Vertex>(u));
      if (in_drawn) best = {Kind::VertexBall2, static_cast<Vertex>(u), w};
    }
    break;
  }

  // Edge ball (around x_{(u,v)}).
  for (std::size_t u = 0; u < nc; ++u) {
    const double fd2 = fh2 - 2.0 * df[u] + 0.25;
    if (fd2 > a2) continue;
    if (u != 0) {
      const Vertex v = oracle_->successor(static_cast<Vertex>(u));
      if (edge_drawn(static_cast<Vertex>(u), v) &&
          fd2 + sh2 - 2.0 * ds[v] + 0.25 <= a2) {
        best = {Kind::EdgeBall, static_cast<Vertex>(u), v};
      }
    }
    break;
  }

  return best;
}

Region HardInstance::classify(const Vector& x) const {
  if (x.size() != n_) throw InvalidInputError("HardInstance::classify: wrong dimension");
  if (x.norm() > 1.0 + 1e-9) throw DomainError("HardInstance::classify: ||x|| > 1");
  return classify_impl(x);
}

Vector HardInstance::tube_displacement(const Vector& x, const Vector& a,
                                       const Vector& b) const {
  const Vector w = b - a;
  const double w2 = w.squaredNorm();
  const double t = std::clamp((x - a).dot(w) / w2, 0.0, 1.0);
  const double dist = (x - (a + t * w)).norm();
  const double mu = std::min(dist / cfg_.gamma, 1.0);
  const Vector d = w / std::sqrt(w2);
  Vector g = cfg_.eps * (1.0 - mu) * d;
  const double nx = x.norm();
  if (nx > 1e-300) g -= cfg_.eps * mu / nx * x;
  return g;
}

Vector HardInstance::corner_displacement(const Vector& x, const Vector& junction,
                                         const Vector& prev_end,
                                         const Vector& next_end) const {
  const double eps = cfg_.eps;
  const double gamma = cfg_.gamma;
  const Vector xhat = x / x.norm();

  Vector r_p = prev_end - junction;
  Vector r_n = next_end - junction;
  r_p.normalize();
  r_n.normalize();
  const double c = std::clamp(r_p.dot(r_n), -1.0, 1.0);
  if (1.0 + c < 1e-9) return -eps * xhat;  // never happens on the lattice

  const double phi = std::acos(c);
  const Vector bhat = (r_p + r_n).normalized();
  const double sin_half = std::sin(phi / 2.0);
  const double cos_half = std::cos(phi / 2.0);
  const double beta =
      std::min(gamma / sin_half, 0.85 * alpha_ / cos_half);
  const Vector y = junction + beta * bhat;
  const double foot = beta * cos_half;
  const Vector z_p = junction + foot * r_p;
  const Vector z_n = junction + foot * r_n;

  const Vector a0 = (z_p - y).normalized();
  Vector u2 = (z_n - y) - (z_n - y).dot(a0) * a0;
  const double u2n = u2.norm();
  if (u2n < 1e-14) return -eps * xhat;
  u2 /= u2n;
  const double theta_arc = std::atan2((z_n - y).dot(u2), (z_n - y).dot(a0));

  const double xi1 = (x - y).dot(a0);
  const double xi2 = (x - y).dot(u2);
  const double rho = std::atan2(xi2, xi1);

  if (rho >= 0.0 && rho <= theta_arc) {
    const double ar = (z_p - y).norm();
    const Vector tau = y + ar * (std::cos(rho) * a0 + std::sin(rho) * u2);
    const double mu = (x - tau).norm() / gamma;
    if (mu <= 1.0) {
      const Vector d_in = -r_p;
      const double d1 = d_in.dot(a0);
      const double d2 = d_in.dot(u2);
      const Vector sigma_dir = (d1 * std::cos(rho) - d2 * std::sin(rho)) * a0 +
                               (d1 * std::sin(rho) + d2 * std::cos(rho)) * u2;
      return eps * ((1.0 - mu) * sigma_dir - mu * xhat);
    }
  }

  // Outside the bend: the straight tube pieces beyond their feet planes, then
  // background. Ties between the two pieces go to the later region kind,
  // which is the incoming tube only for the ball around x_u (vertex tube vs
  // edge tube 1).
  const bool prev_wins = next_end.tail(n_ / 2).squaredNorm() > 0.0 &&
                         prev_end.head(n_ / 2).squaredNorm() == 0.0;
  auto straight = [&](const Vector& rdir, const Vector& flow) -> std::pair<bool, Vector> {
    const double t = (x - junction).dot(rdir);
    if (t < foot - 1e-12) return {false, Vector()};
    const double line_dist = ((x - junction) - t * rdir).norm();
    if (line_dist > gamma) return {false, Vector()};
    const double mu = line_dist / gamma;
    return {true, eps * ((1.0 - mu) * flow - mu * xhat)};
  };

  const auto prev_piece = straight(r_p, -r_p);
  const auto next_piece = straight(r_n, r_n);
  if (prev_piece.first && next_piece.first) {
    return prev_wins ? prev_piece.second : next_piece.second;
  }
  if (prev_piece.first) return prev_piece.second;
  if (next_piece.first) return next_piece.second;
  return -eps * xhat;
}

Vector HardInstance::displacement(const Vector& x) const {
  using Kind = Region::Kind;
  const Region r = classify(x);
  switch (r.kind) {
    case Kind::Background:
      return (-cfg_.eps / x.norm()) * x;
    case Kind::InitialTube:
      return tube_displacement(x, Vector::Zero(n_), vertex_point_prime(r.u));
    case Kind::OriginBall: {
      Vertex e0 = 0;
      if (!initial_edge(&e0)) {
        const double nx = x.norm();
        if (nx < 1e-300) return Vector::Zero(n_);
        return (-cfg_.eps / nx) * x;
      }
      const Vector xp = vertex_point_prime(e0);
      if (x.dot(xp) >= 0.0) {
        return tube_displacement(x, Vector::Zero(n_), xp);
      }
      const double nx = x.norm();
      const double mu = std::min(nx / cfg_.gamma, 1.0);
      Vector g = cfg_.eps * (1.0 - mu) * 2.0 * xp;
      if (nx > 1e-300) g -= cfg_.eps * mu / nx * x;
      return g;
    }
    case Kind::EdgeTube1:
      return tube_displacement(x, vertex_point(r.u), edge_point(r.u, r.v));
    case Kind::EdgeTube2:
      return tube_displacement(x, edge_point(r.u, r.v), vertex_point_prime(r.v));
    case Kind::VertexTube:
      return tube_displacement(x, vertex_point_prime(r.u), vertex_point(r.u));
    case Kind::VertexBall1:
      return corner_displacement(x, vertex_point(r.u), vertex_point_prime(r.u),
                                 edge_point(r.u, r.v));
    case Kind::VertexBall2: {
      const Vector prev_end =
          r.v == 0 ? Vector(Vector::Zero(n_)) : edge_point(r.v, r.u);
      return corner_displacement(x, vertex_point_prime(r.u), prev_end,
                                 vertex_point(r.u));
    }
    case Kind::EdgeBall:
      return corner_displacement(x, edge_point(r.u, r.v), vertex_point(r.u),
                                 vertex_point_prime(r.v));
  }
  return Vector::Zero(n_);
}

Vector HardInstance::brouwer(const Vector& x) const {
  Vector y = x + displacement(x);
  const double n = y.norm();
  if (n > 1.0) {
    clamp_count_.fetch_add(1, std::memory_order_relaxed);
    y /= n;
  }
  return y;
}

namespace {

class DisplacementField final : public fields::VectorField {
 public:
  explicit DisplacementField(std::shared_ptr<HardInstance> inst)
      : VectorField(inst->dim(), nominal_bounds(*inst), false),
        inst_(std::move(inst)) {}

  std::unique_ptr<VectorField> clone() const override {
    return std::make_unique<DisplacementField>(inst_);
  }

  std::string describe() const override {
    return "{\"kind\":\"hard-instance\",\"k\":" + std::to_string(inst_->k()) +
           "}";
  }

 protected:
  Vector value_impl(const Vector& x) const override {
    return inst_->displacement(x);
  }

 private:
  static fields::LipschitzBounds nominal_bounds(const HardInstance& inst) {
    fields::LipschitzBounds b;
    b.L0 = inst.eps();
    b.L1 = 200.0 * inst.eps() / inst.gamma();
    b.L2 = b.L1 / inst.gamma();  // nominal; the field is only Lipschitz
    return b;
  }

  std::shared_ptr<HardInstance> inst_;
};

}  // namespace

fields::FieldPtr displacement_field(std::shared_ptr<HardInstance> inst) {
  return std::make_unique<DisplacementField>(std::move(inst));
}

// Harness ------------------------------------------------------------------

HarnessResult query_harness(HardInstance& inst, QueryStrategy& strategy,
                            std::int64_t budget, std::uint64_t seed) {
  if (budget < 1) throw InvalidInputError("query_harness: budget must be >= 1");
  const std::uint64_t oracle_before = inst.oracle().fresh_queries();
  std::int64_t used = 0;
  auto query = [&](const Vector& x) -> Vector {
    if (used >= budget) throw BudgetError("query_harness: budget exhausted", budget);
    ++used;
    return inst.displacement(x);
  };

  std::optional<Vector> answer;
  try {
    answer = strategy.run(query, inst.dim(), budget, seed);
  } catch (const BudgetError&) {
    answer.reset();
  }

  HarnessResult hr;
  hr.value_queries = static_cast<std::uint64_t>(used);
  hr.oracle_queries = inst.oracle().fresh_queries() - oracle_before;
  if (answer) {
    hr.found = inst.displacement(*answer).norm() <= inst.solution_threshold();
  }
  return hr;
}

namespace {

class NullStrategy final : public QueryStrategy {
 public:
  std::string name() const override { return "null"; }
  std::optional<Vector> run(const std::function<Vector(const Vector&)>&, int,
                            std::int64_t, std::uint64_t) override {
    return std::nullopt;
  }
};

class RandomBallStrategy final : public QueryStrategy {
 public:
  std::string name() const override { return "random-ball"; }
  std::optional<Vector> run(const std::function<Vector(const Vector&)>& query,
                            int dim, std::int64_t budget,
                            std::uint64_t seed) override {
    numerics::Rng rng(seed);
    std::optional<Vector> best;
    double best_norm = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < budget; ++i) {
      const Vector x = rng.uniform_ball(dim);
      const double g = query(x).norm();
      if (g < best_norm) {
        best_norm = g;
        best = x;
      }
    }
    return best;
  }
};

class VertexSweepStrategy final : public QueryStrategy {
 public:
  explicit VertexSweepStrategy(std::shared_ptr<HardInstance> inst)
      : inst_(std::move(inst)) {}
  std::string name() const override { return "vertex-sweep"; }
  std::optional<Vector> run(const std::function<Vector(const Vector&)>& query,
                            int, std::int64_t budget, std::uint64_t) override {
    std::optional<Vector> best;
    double best_norm = std::numeric_limits<double>::infinity();
    std::int64_t used = 0;
    const Vertex n = inst_->oracle().vertex_count();
    for (Vertex u = 0; u < n && used + 2 <= budget; ++u) {
      for (const Vector& x :
           {inst_->vertex_point(u), inst_->vertex_point_prime(u)}) {
        const double g = query(x).norm();
        ++used;
        if (g < best_norm) {
          best_norm = g;
          best = x;
        }
      }
    }
    return best;
  }

 private:
  std::shared_ptr<HardInstance> inst_;
};

}  // namespace

std::unique_ptr<QueryStrategy> make_null_strategy() {
  return std::make_unique<NullStrategy>();
}

std::unique_ptr<QueryStrategy> make_random_ball_strategy() {
  return std::make_unique<RandomBallStrategy>();
}

std::unique_ptr<QueryStrategy> make_vertex_sweep_strategy(
    const std::shared_ptr<HardInstance>& inst) {
  return std::make_unique<VertexSweepStrategy>(inst);
}

}  // namespace pathvi::lowerbound
