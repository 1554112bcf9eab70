#include "trustgov/ledger.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "trustgov/util.hpp"

namespace trustgov::ledger {

using util::ConfigError;

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> encode_block(const LedgerBlock& b) {
  std::vector<std::uint8_t> out;
  put_u64(out, b.height);
  put_u64(out, std::uint64_t(b.timestamp_us));
  put_u32(out, std::uint32_t(b.author_id.size()));
  out.insert(out.end(), b.author_id.begin(), b.author_id.end());
  out.insert(out.end(), b.payload_digest.begin(), b.payload_digest.end());
  out.insert(out.end(), b.prev_digest.begin(), b.prev_digest.end());
  put_u32(out, std::uint32_t(b.payload.size()));
  out.insert(out.end(), b.payload.begin(), b.payload.end());
  put_u32(out, std::uint32_t(b.signature.size()));
  out.insert(out.end(), b.signature.begin(), b.signature.end());
  return out;
}

LedgerBlock decode_block(const std::uint8_t* data, std::size_t len) {
  auto need = [&](std::size_t offset, std::size_t count) {
    if (offset + count > len) throw ConfigError("chain file truncated inside a block");
  };
  LedgerBlock b;
  std::size_t off = 0;
  need(off, 8);
  b.height = get_u64(data + off);
  off += 8;
  need(off, 8);
  b.timestamp_us = std::int64_t(get_u64(data + off));
  off += 8;
  need(off, 4);
  std::uint32_t author_len = get_u32(data + off);
  off += 4;
  need(off, author_len);
  b.author_id.assign(reinterpret_cast<const char*>(data + off), author_len);
  off += author_len;
  need(off, 32);
  std::memcpy(b.payload_digest.data(), data + off, 32);
  off += 32;
  need(off, 32);
  std::memcpy(b.prev_digest.data(), data + off, 32);
  off += 32;
  need(off, 4);
  std::uint32_t payload_len = get_u32(data + off);
  off += 4;
  need(off, payload_len);
  b.payload.assign(data + off, data + off + payload_len);
  off += payload_len;
  need(off, 4);
  std::uint32_t sig_len = get_u32(data + off);
  off += 4;
  need(off, sig_len);
  b.signature.assign(data + off, data + off + sig_len);
  off += sig_len;
  if (off != len) throw ConfigError("chain file block has trailing bytes");
  return b;
}

std::int64_t to_micros(double seconds) { return std::llround(seconds * 1e6); }

}  // namespace

KeyedDigestSigner::KeyedDigestSigner(std::string author_id, std::string secret)
    : author_id_(std::move(author_id)), secret_(std::move(secret)) {}

std::vector<std::uint8_t> KeyedDigestSigner::sign(std::span<const std::uint8_t> data) const {
  auto mac = crypto::hmac_sha256(
      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(secret_.data()),
                                    secret_.size()),
      data);
  return std::vector<std::uint8_t>(mac.begin(), mac.end());
}

void KeyRegistry::register_key(const std::string& author_id, const std::string& secret) {
  secrets_[author_id] = secret;
}

bool KeyRegistry::known(const std::string& author_id) const {
  return secrets_.count(author_id) > 0;
}

bool KeyRegistry::verify(const std::string& author_id, std::span<const std::uint8_t> data,
                         std::span<const std::uint8_t> signature) const {
  auto it = secrets_.find(author_id);
  if (it == secrets_.end()) return false;
  auto expected = crypto::hmac_sha256(
      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(it->second.data()),
                                    it->second.size()),
      data);
  return signature.size() == expected.size() &&
         std::memcmp(signature.data(), expected.data(), expected.size()) == 0;
}

void KeyRegistry::save(const std::filesystem::path& p) const {
  nlohmann::json j;
  for (const auto& [author, secret] : secrets_) j[author] = secret;
  util::write_file(p, j.dump(2) + "\n");
}

KeyRegistry KeyRegistry::load(const std::filesystem::path& p) {
  KeyRegistry reg;
  auto j = nlohmann::json::parse(util::read_file(p));
  for (const auto& [author, secret] : j.items()) reg.register_key(author, secret.get<std::string>());
  return reg;
}

std::vector<std::uint8_t> LedgerBlock::header_bytes() const {
  std::vector<std::uint8_t> out;
  put_u64(out, height);
  put_u64(out, std::uint64_t(timestamp_us));
  put_u32(out, std::uint32_t(author_id.size()));
  out.insert(out.end(), author_id.begin(), author_id.end());
  out.insert(out.end(), payload_digest.begin(), payload_digest.end());
  out.insert(out.end(), prev_digest.begin(), prev_digest.end());
  return out;
}

Digest LedgerBlock::block_digest() const {
  auto header = header_bytes();
  return crypto::sha256(std::span<const std::uint8_t>(header.data(), header.size()));
}

const char* to_string(AnchorMode m) {
  return m == AnchorMode::synchronous ? "synchronous" : "batched";
}

Chain::Chain(std::shared_ptr<const Signer> signer, const KeyRegistry* registry)
    : signer_(std::move(signer)), registry_(registry) {
  if (!signer_) throw ConfigError("chain requires a signer");
}

Chain::Chain(std::shared_ptr<const Signer> signer, const KeyRegistry* registry,
             std::filesystem::path log_path)
    : Chain(std::move(signer), registry) {
  log_path_ = std::move(log_path);
  index_path_ = log_path_;
  index_path_ += ".idx";
  file_backed_ = true;
  // Start fresh; runs own their output directory.
  std::ofstream(log_path_, std::ios::binary | std::ios::trunc);
  std::ofstream(index_path_, std::ios::trunc);
}

Chain::~Chain() {
  try {
    flush();
  } catch (...) {
    // Queued payloads stay queued; destruction must not throw.
  }
}

void Chain::set_anchor_mode(AnchorMode mode, BatchPolicy policy) {
  if (policy.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (policy.max_delay_s <= 0.0) throw ConfigError("max_delay_s must be > 0");
  mode_ = mode;
  batch_ = policy;
}

std::uint64_t Chain::append(std::string_view payload, double timestamp_s) {
  if (registry_ && !registry_->known(signer_->author_id()))
    throw ConfigError("unregistered chain author: " + signer_->author_id());

  std::uint64_t height = next_height_++;
  Queued q{std::string(payload), timestamp_s, timestamp_s};
  if (mode_ == AnchorMode::synchronous) {
    commit(build_block(height, q));
  } else {
    queue_.push_back(std::move(q));
    if (queue_.size() >= batch_.batch_size) flush();
  }
  return height;
}

void Chain::tick(double now_s) {
  if (queue_.empty()) return;
  if (now_s - queue_.front().enqueued_s >= batch_.max_delay_s) flush();
}

void Chain::flush() {
  while (!queue_.empty()) {
    std::uint64_t height = blocks_.size();
    commit(build_block(height, queue_.front()));
    queue_.pop_front();  // retained on commit failure, so the flush is retriable
  }
}

LedgerBlock Chain::build_block(std::uint64_t height, const Queued& q) const {
  LedgerBlock b;
  b.height = height;
  b.timestamp_us = to_micros(q.timestamp_s);
  b.author_id = signer_->author_id();
  b.payload.assign(q.payload.begin(), q.payload.end());
  b.payload_digest = crypto::sha256(std::span<const std::uint8_t>(b.payload.data(), b.payload.size()));
  b.prev_digest = blocks_.empty() ? Digest{} : blocks_.back().block_digest();
  auto header = b.header_bytes();
  b.signature = signer_->sign(std::span<const std::uint8_t>(header.data(), header.size()));
  return b;
}

void Chain::commit(const LedgerBlock& block) {
  persist(block);
  blocks_.push_back(block);
}

void Chain::persist(const LedgerBlock& block) {
  if (!file_backed_) return;
  std::ofstream log(log_path_, std::ios::binary | std::ios::app);
  if (!log) throw std::runtime_error("cannot open chain log: " + log_path_.string());
  auto offset = log.tellp();
  auto bytes = encode_block(block);
  std::vector<std::uint8_t> framed;
  put_u32(framed, std::uint32_t(bytes.size()));
  framed.insert(framed.end(), bytes.begin(), bytes.end());
  log.write(reinterpret_cast<const char*>(framed.data()), std::streamsize(framed.size()));
  if (!log) throw std::runtime_error("chain log write failed: " + log_path_.string());
  log.flush();

  std::ofstream idx(index_path_, std::ios::app);
  idx << block.height << ' ' << std::int64_t(offset) << '\n';
}

const LedgerBlock& Chain::at(std::uint64_t height) const {
  if (height >= blocks_.size()) throw util::InputError("block height out of range");
  return blocks_[height];
}

std::optional<std::uint64_t> Chain::verify() const {
  return verify_blocks(std::span<const LedgerBlock>(blocks_.data(), blocks_.size()), registry_);
}

std::optional<std::uint64_t> Chain::verify_blocks(std::span<const LedgerBlock> blocks,
                                                  const KeyRegistry* registry) {
  Digest prev{};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.height != i) return i;
    if (b.prev_digest != prev) return i;
    auto payload_digest =
        crypto::sha256(std::span<const std::uint8_t>(b.payload.data(), b.payload.size()));
    if (payload_digest != b.payload_digest) return i;
    if (registry) {
      auto header = b.header_bytes();
      if (!registry->verify(b.author_id, std::span<const std::uint8_t>(header.data(), header.size()),
                            std::span<const std::uint8_t>(b.signature.data(), b.signature.size())))
        return i;
    }
    prev = b.block_digest();
  }
  return std::nullopt;
}

void Chain::export_jsonl(std::ostream& out) const {
  export_jsonl(std::span<const LedgerBlock>(blocks_.data(), blocks_.size()), out);
}

void Chain::export_jsonl(std::span<const LedgerBlock> blocks, std::ostream& out) {
  for (const auto& b : blocks) {
    nlohmann::json j;
    j["height"] = b.height;
    j["timestamp_us"] = b.timestamp_us;
    j["author_id"] = b.author_id;
    j["payload_digest"] = crypto::to_hex(b.payload_digest);
    j["prev_digest"] = crypto::to_hex(b.prev_digest);
    j["payload"] = std::string(b.payload.begin(), b.payload.end());
    j["signature"] = crypto::to_hex(b.signature);
    out << j.dump() << '\n';
  }
}

std::vector<LedgerBlock> Chain::load_file(const std::filesystem::path& log_path) {
  std::ifstream in(log_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open chain log: " + log_path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  std::vector<LedgerBlock> blocks;
  std::size_t off = 0;
  while (off < data.size()) {
    if (off + 4 > data.size()) throw ConfigError("chain file truncated at frame header");
    std::uint32_t len = get_u32(data.data() + off);
    off += 4;
    if (off + len > data.size()) throw ConfigError("chain file truncated inside a frame");
    blocks.push_back(decode_block(data.data() + off, len));
    off += len;
  }
  return blocks;
}

}  // namespace trustgov::ledger
