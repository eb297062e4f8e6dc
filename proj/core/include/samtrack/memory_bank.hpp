#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "samtrack/tensor.hpp"

namespace samtrack {

struct MemoryEntry {
  long frame_index = 0;
  FeatureMap key;    // (h, w, ck)
  FeatureMap value;  // (h, w, cv)
  bool is_box_mask = false;  // box-to-segmentation placeholder awaiting swap
};

struct BankConfig {
  int capacity = 40;
  int interval = 5;
  bool always_include_last = true;
};

// Appearance memory. A FIFO ring stores every interval-th preserved frame up
// to `capacity`; a dedicated slot additionally mirrors the most recent
// preserved frame. interval == 0 freezes the bank after the first write, so
// only the initialization entry is ever consulted.
class MemoryBank {
 public:
  explicit MemoryBank(const BankConfig& cfg);

  // Stores the entry per the retention policy. Frames flagged not preserved
  // are dropped entirely. Returns true when anything was stored. Frame
  // indices must be strictly increasing.
  bool write(long frame_index, FeatureMap key, FeatureMap value,
             bool preserved, bool box_mask = false);

  // Swaps key/value into the entry still flagged as the box-mask placeholder
  // (ring and last slot both), clearing the flag. Throws StateError when no
  // such entry remains.
  void replace_box_mask_entry(const FeatureMap& key, const FeatureMap& value);

  // Joint softmax attention over every position of every visible entry:
  // logit(q, e, p) = <query_q, key_e_p>, normalized across all (e, p) pairs
  // so the weights per query pixel sum to one. Output is (qh, qw, cv).
  FeatureMap read(const FeatureMap& query) const;

  // Ring entries in insertion order, then the last slot when it holds a
  // frame the ring does not.
  std::vector<const MemoryEntry*> visible_entries() const;

  int ring_size() const { return static_cast<int>(ring_.size()); }
  bool has_last() const { return last_.has_value(); }
  long preserved_writes() const { return preserved_writes_; }
  const BankConfig& config() const { return cfg_; }

  const std::deque<MemoryEntry>& ring() const { return ring_; }
  const std::optional<MemoryEntry>& last() const { return last_; }

  // Checkpoint restore; replaces all state wholesale.
  void restore(std::deque<MemoryEntry> ring, std::optional<MemoryEntry> last,
               long preserved_writes, long last_frame);
  long last_frame() const { return last_frame_; }

 private:
  void validate_entry(long frame_index, const FeatureMap& key,
                      const FeatureMap& value) const;

  BankConfig cfg_;
  std::deque<MemoryEntry> ring_;
  std::optional<MemoryEntry> last_;
  long preserved_writes_ = 0;
  long last_frame_ = -1;
};

}  // namespace samtrack
