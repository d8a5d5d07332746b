#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pathvi/fields.hpp"
#include "pathvi/numerics.hpp"

namespace pathvi::lowerbound {

using numerics::Vector;
using Vertex = std::uint32_t;

/// Binary word of up to 256 bits. Ordered as a bitstring read left to right,
/// i.e. string-lexicographic order coincides with integer order (string
/// position 0 is the most significant bit).
class BitWord {
 public:
  BitWord() = default;
  explicit BitWord(int bits);
  static BitWord from_string(const std::string& s);

  int bits() const { return bits_; }
  bool bit(int string_pos) const;        ///< position 0 = leftmost
  void set_bit(int string_pos, bool v);
  int weight() const;
  int hamming(const BitWord& o) const;

  /// Integer increment; returns false on wrap past 2^bits - 1.
  bool increment();
  /// Advance to the smallest word strictly greater than *this with
  /// weight >= d; returns false if none exists.
  bool next_with_min_weight(int d);

  bool operator==(const BitWord& o) const { return bits_ == o.bits_ && limbs_ == o.limbs_; }
  bool operator<(const BitWord& o) const;
  std::string to_string() const;

 private:
  int bits_ = 0;
  std::array<std::uint64_t, 4> limbs_{};  // limb 0 holds the least significant bits
};

/// Binary code of length m = 10k with 2^k codewords at pairwise Hamming
/// distance >= ceil(m/4), built by the greedy lexicographic scan.
struct GVCode {
  int k = 0;
  int m = 0;
  int min_distance = 0;
  std::vector<BitWord> codewords;  ///< in acceptance (= lexicographic) order

  const BitWord& phi(Vertex u) const;
  Vertex psi(const BitWord& w) const;
};

/// Greedy lexicographic construction: scan {0,1}^m in lexicographic order,
/// accept a word iff it is >= ceil(m/4) away from every accepted word, stop
/// at 2^k words. Candidates below the weight bar are skipped in bulk; the
/// scan aborts with the achieved size when `max_candidates` weight-eligible
/// words have been examined (a full scan of {0,1}^m is unreachable for
/// m beyond ~60, which caps the practical range around k <= 6).
GVCode build_gv_code(int k, std::uint64_t max_candidates = 400000000ULL);

// End-of-A-Line oracles -------------------------------------------------------

/// Query access to a successor/predecessor circuit pair on {0,1}^k.
/// Distinct (type, vertex) first-asks count as fresh queries; repeats replay
/// the recorded answer.
class EndOfLineOracle {
 public:
  explicit EndOfLineOracle(int k);
  virtual ~EndOfLineOracle() = default;

  int k() const { return k_; }
  Vertex vertex_count() const { return Vertex{1} << k_; }

  Vertex successor(Vertex v);
  Vertex predecessor(Vertex v);

  std::uint64_t fresh_queries() const { return fresh_; }
  std::uint64_t total_queries() const { return total_; }

  struct LogEntry {
    char type;  ///< 'S' or 'P'
    Vertex v;
    Vertex answer;
    bool fresh;
  };
  const std::vector<LogEntry>& log() const { return log_; }

 protected:
  virtual Vertex successor_impl(Vertex v) = 0;
  virtual Vertex predecessor_impl(Vertex v) = 0;

 private:
  Vertex ask(char type, Vertex v);
  int k_;
  std::uint64_t fresh_ = 0;
  std::uint64_t total_ = 0;
  std::vector<std::optional<Vertex>> s_cache_, p_cache_;
  std::vector<LogEntry> log_;
};

/// Oracle backed by explicit successor/predecessor tables. A vertex maps to
/// itself when it has no successor (resp. predecessor).
class ExplicitOracle final : public EndOfLineOracle {
 public:
  ExplicitOracle(int k, std::vector<Vertex> succ, std::vector<Vertex> pred);

  /// The single path 0 -> 1 -> ... -> 2^k - 1.
  static ExplicitOracle path_graph(int k);
  /// A single path 0 -> pi(1) -> ... -> pi(2^k - 1) with a seeded shuffle.
  static ExplicitOracle permuted_path(int k, std::uint64_t seed);

  const std::vector<Vertex>& succ() const { return succ_; }
  const std::vector<Vertex>& pred() const { return pred_; }

 protected:
  Vertex successor_impl(Vertex v) override { return succ_[v]; }
  Vertex predecessor_impl(Vertex v) override { return pred_[v]; }

 private:
  std::vector<Vertex> succ_, pred_;
};

/// The lazy adversary: fresh P-queries are answered with the current end of
/// the central path (which then absorbs the queried vertex); fresh S-queries
/// hand out the lexicographically first untouched vertex. Every answer
/// commits the matching reverse edge, so no end-of-line is certifiable until
/// every vertex has been touched.
class AdversarialOracle final : public EndOfLineOracle {
 public:
  explicit AdversarialOracle(int k);

  std::uint64_t touched_count() const { return touched_count_; }
  bool all_touched() const { return touched_count_ == vertex_count(); }

  /// True once the committed answers alone prove some vertex is a solution.
  bool witness_certified() const;

  /// Completes the committed answers into a full instance and verifies it
  /// replays the entire query log; nullopt if no consistent completion exists.
  std::optional<ExplicitOracle> try_complete() const;

 protected:
  Vertex successor_impl(Vertex v) override;
  Vertex predecessor_impl(Vertex v) override;

 private:
  static constexpr Vertex kNone = 0xffffffffu;
  void touch(Vertex v);
  void commit_edge(Vertex a, Vertex b);  // s[a] = b, p[b] = a
  Vertex first_untouched(Vertex skip) const;
  void extend_path(Vertex v);

  std::vector<Vertex> s_, p_;  // committed answers (kNone = uncommitted)
  std::vector<bool> touched_;
  std::uint64_t touched_count_ = 0;
  std::vector<Vertex> central_path_;
  std::vector<bool> on_path_;
};

// Hard Brouwer instance -------------------------------------------------------

struct Region {
  enum class Kind {
    Background,
    InitialTube,
    OriginBall,
    EdgeTube1,
    EdgeTube2,
    VertexTube,
    VertexBall1,
    VertexBall2,
    EdgeBall,
  };
  Kind kind = Kind::Background;
  Vertex u = 0;  ///< owning vertex (or edge tail)
  Vertex v = 0;  ///< edge head for edge regions; predecessor for VertexBall2
};

const char* to_string(Region::Kind k);

struct HardInstanceConfig {
  int k = 2;
  double eps = 0.05;  ///< displacement scale; the construction's native value is 1
  double gamma = 1.0 / 32.0;
};

/// The hard fixed-point instance: vertices of an End-of-A-Line instance are
/// embedded as well-separated points of the ball through the GV code, and a
/// displacement field routes a tube system along the hidden path. Region
/// classification consults the oracle lazily, behind geometric pre-filters,
/// so each field query costs O(1) oracle queries.
class HardInstance {
 public:
  HardInstance(HardInstanceConfig cfg, GVCode code,
               std::shared_ptr<EndOfLineOracle> oracle);
  static std::shared_ptr<HardInstance> make(const HardInstanceConfig& cfg,
                                            std::shared_ptr<EndOfLineOracle> oracle);

  int k() const { return cfg_.k; }
  int m() const { return code_.m; }
  int dim() const { return n_; }
  double eps() const { return cfg_.eps; }
  double gamma() const { return cfg_.gamma; }
  double alpha() const { return alpha_; }
  const GVCode& code() const { return code_; }
  EndOfLineOracle& oracle() const { return *oracle_; }

  Vector vertex_point(Vertex u) const;        ///< x_u
  Vector vertex_point_prime(Vertex u) const;  ///< x'_u
  Vector edge_point(Vertex u, Vertex v) const;

  Region classify(const Vector& x) const;
  Vector displacement(const Vector& x) const;  ///< G(x); F(x) = x + G(x)
  Vector brouwer(const Vector& x) const;       ///< x + G(x), radially clamped

  /// How often brouwer() had to clamp back into the ball (never for eps <= 0.1).
  std::uint64_t clamp_count() const { return clamp_count_.load(); }

  /// Norm floor below which a point counts as a discovered solution.
  double solution_threshold() const { return cfg_.eps / 130.0; }

 private:
  struct DecodeScratch;
  Region classify_impl(const Vector& x) const;
  Vector tube_displacement(const Vector& x, const Vector& a, const Vector& b) const;
  Vector corner_displacement(const Vector& x, const Vector& junction,
                             const Vector& prev_end, const Vector& next_end) const;

  bool initial_edge(Vertex* e0) const;
  bool edge_drawn(Vertex u, Vertex v) const;
  bool vertex_tube_drawn(Vertex u) const;

  HardInstanceConfig cfg_;
  GVCode code_;
  std::shared_ptr<EndOfLineOracle> oracle_;
  int n_ = 0;
  double alpha_ = 0.0;
  std::vector<Vector> enc_;  ///< Enc(u)/sqrt(n), length n/2 each
  mutable std::atomic<std::uint64_t> clamp_count_{0};
};

/// The displacement as a query-counted VectorField (finite-difference
/// Jacobian; the construction is only Lipschitz).
fields::FieldPtr displacement_field(std::shared_ptr<HardInstance> inst);

// Query-counting harness ------------------------------------------------------

struct HarnessResult {
  bool found = false;
  std::uint64_t value_queries = 0;
  std::uint64_t oracle_queries = 0;
};

class QueryStrategy {
 public:
  virtual ~QueryStrategy() = default;
  virtual std::string name() const = 0;
  /// May call `query` at most `budget` times; returns a candidate solution.
  virtual std::optional<Vector> run(
      const std::function<Vector(const Vector&)>& query, int dim,
      std::int64_t budget, std::uint64_t seed) = 0;
};

/// Runs the strategy against the instance displacement, counting field
/// queries and induced fresh oracle queries; found is true iff the returned
/// point has ||G|| <= eps/130 (below every region's non-solution floor).
HarnessResult query_harness(HardInstance& inst, QueryStrategy& strategy,
                            std::int64_t budget, std::uint64_t seed = 0);

/// Asks nothing and returns nothing.
std::unique_ptr<QueryStrategy> make_null_strategy();
/// Queries uniform random ball points and returns the smallest-||G|| one.
std::unique_ptr<QueryStrategy> make_random_ball_strategy();
/// Queries x_u and x'_u for every vertex in order, best-point output.
std::unique_ptr<QueryStrategy> make_vertex_sweep_strategy(
    const std::shared_ptr<HardInstance>& inst);

}  // namespace pathvi::lowerbound
