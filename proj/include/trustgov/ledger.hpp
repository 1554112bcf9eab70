#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trustgov/crypto.hpp"

namespace trustgov::ledger {

using crypto::Digest;

/// Pluggable signing interface. The default build ships a keyed-digest
/// signer (shared secret, HMAC-SHA256); the interface is shaped so an
/// asymmetric scheme can slot in behind it.
class Signer {
 public:
  virtual ~Signer() = default;
  virtual std::string author_id() const = 0;
  virtual std::vector<std::uint8_t> sign(std::span<const std::uint8_t> data) const = 0;
};

class KeyedDigestSigner : public Signer {
 public:
  KeyedDigestSigner(std::string author_id, std::string secret);
  std::string author_id() const override { return author_id_; }
  std::vector<std::uint8_t> sign(std::span<const std::uint8_t> data) const override;

 private:
  std::string author_id_;
  std::string secret_;
};

/// Author -> shared secret registry used to verify keyed-digest signatures.
class KeyRegistry {
 public:
  void register_key(const std::string& author_id, const std::string& secret);
  bool known(const std::string& author_id) const;
  bool verify(const std::string& author_id, std::span<const std::uint8_t> data,
              std::span<const std::uint8_t> signature) const;

  void save(const std::filesystem::path& p) const;
  static KeyRegistry load(const std::filesystem::path& p);

 private:
  std::map<std::string, std::string> secrets_;
};

struct LedgerBlock {
  std::uint64_t height = 0;
  std::int64_t timestamp_us = 0;  // simulated-clock microseconds
  std::string author_id;
  Digest payload_digest{};
  Digest prev_digest{};  // genesis links the all-zero digest
  std::vector<std::uint8_t> payload;
  std::vector<std::uint8_t> signature;  // over the canonical header bytes

  /// Fixed-order, explicit-length, little-endian serialization of
  /// (height, timestamp, author, payload_digest, prev_digest); the bytes
  /// that are signed and that the next block's prev_digest commits to.
  std::vector<std::uint8_t> header_bytes() const;
  Digest block_digest() const;
};

struct BatchPolicy {
  std::size_t batch_size = 16;
  double max_delay_s = 1.0;
};

enum class AnchorMode { synchronous, batched };

const char* to_string(AnchorMode m);

/// Append-only hash chain with one logical writer. Synchronous mode commits
/// (and persists, when file-backed) each payload before append returns;
/// batched mode queues payloads and flushes at batch_size or max_delay,
/// preserving order. Both modes produce identical chain contents for
/// identical payload sequences.
class Chain {
 public:
  Chain(std::shared_ptr<const Signer> signer, const KeyRegistry* registry);
  Chain(std::shared_ptr<const Signer> signer, const KeyRegistry* registry,
        std::filesystem::path log_path);
  ~Chain();

  Chain(const Chain&) = delete;
  Chain& operator=(const Chain&) = delete;

  void set_anchor_mode(AnchorMode mode, BatchPolicy policy = {});
  AnchorMode anchor_mode() const { return mode_; }

  /// Appends a payload with the writer's signature; returns the assigned
  /// height. Batched payloads get their height reserved immediately.
  std::uint64_t append(std::string_view payload, double timestamp_s);

  /// Flush any queued payloads whose max_delay has elapsed at `now_s`.
  void tick(double now_s);
  /// Commit everything still queued.
  void flush();

  std::size_t size() const { return blocks_.size(); }
  std::size_t pending() const { return queue_.size(); }
  const LedgerBlock& at(std::uint64_t height) const;
  const std::vector<LedgerBlock>& blocks() const { return blocks_; }

  /// Recompute every digest, linkage and signature over the committed prefix.
  /// Returns the lowest failing height, or nullopt when the chain checks out.
  std::optional<std::uint64_t> verify() const;

  void export_jsonl(std::ostream& out) const;

  static std::vector<LedgerBlock> load_file(const std::filesystem::path& log_path);
  static std::optional<std::uint64_t> verify_blocks(std::span<const LedgerBlock> blocks,
                                                    const KeyRegistry* registry);
  static void export_jsonl(std::span<const LedgerBlock> blocks, std::ostream& out);

 private:
  struct Queued {
    std::string payload;
    double timestamp_s = 0.0;
    double enqueued_s = 0.0;
  };

  LedgerBlock build_block(std::uint64_t height, const Queued& q) const;
  void commit(const LedgerBlock& block);
  void persist(const LedgerBlock& block);

  std::shared_ptr<const Signer> signer_;
  const KeyRegistry* registry_ = nullptr;
  AnchorMode mode_ = AnchorMode::synchronous;
  BatchPolicy batch_;
  std::vector<LedgerBlock> blocks_;
  std::deque<Queued> queue_;
  std::uint64_t next_height_ = 0;

  std::filesystem::path log_path_;
  std::filesystem::path index_path_;
  bool file_backed_ = false;
};

}  // namespace trustgov::ledger
