#include "samtrack/memory_bank.hpp"

#include <cmath>
#include <cstring>
#include <utility>

#include "samtrack/errors.hpp"

namespace samtrack {

MemoryBank::MemoryBank(const BankConfig& cfg) : cfg_(cfg) {
  if (cfg.capacity < 1) throw ConfigError("memory bank capacity must be >= 1");
  if (cfg.interval < 0) throw ConfigError("memory bank interval must be >= 0");
}

void MemoryBank::validate_entry(long frame_index, const FeatureMap& key,
                                const FeatureMap& value) const {
  if (frame_index <= last_frame_)
    throw StateError("memory bank: frame indices must increase");
  if (key.h != value.h || key.w != value.w)
    throw StateError("memory bank: key/value spatial mismatch");
  const MemoryEntry* prior =
      !ring_.empty() ? &ring_.front() : (last_ ? &*last_ : nullptr);
  if (prior &&
      (prior->key.c != key.c || prior->value.c != value.c))
    throw StateError("memory bank: channel mismatch with stored entries");
}

bool MemoryBank::write(long frame_index, FeatureMap key, FeatureMap value,
                       bool preserved, bool box_mask) {
  validate_entry(frame_index, key, value);
  last_frame_ = frame_index;
  if (!preserved) return false;

  const long n = preserved_writes_++;
  bool stored = false;
  if (cfg_.interval == 0) {
    if (n == 0) {
      ring_.push_back({frame_index, std::move(key), std::move(value), box_mask});
      stored = true;
    }
    return stored;
  }
  const bool ring_hit = (n % cfg_.interval == 0);
  if (ring_hit) {
    ring_.push_back({frame_index, key, value, box_mask});
    if (ring_size() > cfg_.capacity) ring_.pop_front();
    stored = true;
  }
  if (cfg_.always_include_last) {
    last_ = MemoryEntry{frame_index, std::move(key), std::move(value), box_mask};
    stored = true;
  }
  return stored;
}

void MemoryBank::replace_box_mask_entry(const FeatureMap& key,
                                        const FeatureMap& value) {
  bool found = false;
  for (MemoryEntry& e : ring_)
    if (e.is_box_mask) {
      e.key = key;
      e.value = value;
      e.is_box_mask = false;
      found = true;
    }
  if (last_ && last_->is_box_mask) {
    last_->key = key;
    last_->value = value;
    last_->is_box_mask = false;
    found = true;
  }
  if (!found) throw StateError("memory bank: no box-mask entry to replace");
}

std::vector<const MemoryEntry*> MemoryBank::visible_entries() const {
  std::vector<const MemoryEntry*> out;
  out.reserve(ring_.size() + 1);
  for (const MemoryEntry& e : ring_) out.push_back(&e);
  if (last_) {
    bool dup = false;
    for (const MemoryEntry& e : ring_)
      if (e.frame_index == last_->frame_index) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(&*last_);
  }
  return out;
}

FeatureMap MemoryBank::read(const FeatureMap& query) const {
  const auto ents = visible_entries();
  if (ents.empty()) throw StateError("memory bank: read from empty bank");
  const int ck = query.c;
  for (const MemoryEntry* e : ents)
    if (e->key.c != ck)
      throw StateError("memory bank: query/key channel mismatch");
  const int cv = ents[0]->value.c;

  std::size_t total = 0;
  for (const MemoryEntry* e : ents) total += e->key.pixels();

  FeatureMap out(query.h, query.w, cv);
  const int npix = query.pixels();
  constexpr int kBlock = 4;
  std::vector<double> logits(static_cast<std::size_t>(kBlock) * total);

  for (int q0 = 0; q0 < npix; q0 += kBlock) {
    const int nb = std::min(kBlock, npix - q0);
    const double* qrow[kBlock] = {};
    for (int b = 0; b < nb; ++b)
      qrow[b] = query.data.data() + static_cast<std::size_t>(q0 + b) * ck;

    for (int b = 0; b < nb; ++b) {
      double* dst = logits.data() + static_cast<std::size_t>(b) * total;
      std::size_t off = 0;
      for (const MemoryEntry* e : ents) {
        const double* kp = e->key.data.data();
        const int np = e->key.pixels();
        for (int p = 0; p < np; ++p)
          dst[off + p] = dot(qrow[b], kp + static_cast<std::size_t>(p) * ck, ck);
        off += np;
      }
    }

    for (int b = 0; b < nb; ++b) {
      double* row = logits.data() + static_cast<std::size_t>(b) * total;
      double mx = row[0];
      for (std::size_t m = 1; m < total; ++m)
        if (row[m] > mx) mx = row[m];
      double sum = 0.0;
      for (std::size_t m = 0; m < total; ++m) {
        const double t = std::exp(row[m] - mx);
        row[m] = t;
        sum += t;
      }
      const double inv = 1.0 / sum;
      for (std::size_t m = 0; m < total; ++m) row[m] *= inv;
    }

    double* orow[kBlock] = {};
    for (int b = 0; b < nb; ++b) {
      orow[b] = out.data.data() + static_cast<std::size_t>(q0 + b) * cv;
      std::memset(orow[b], 0, sizeof(double) * cv);
    }
    std::size_t off = 0;
    for (const MemoryEntry* e : ents) {
      const double* vp = e->value.data.data();
      const int np = e->value.pixels();
      for (int p = 0; p < np; ++p) {
        const double* vrow = vp + static_cast<std::size_t>(p) * cv;
        for (int b = 0; b < nb; ++b) {
          const double wgt = logits[static_cast<std::size_t>(b) * total + off + p];
          double* ob = orow[b];
          for (int ch = 0; ch < cv; ++ch) ob[ch] += wgt * vrow[ch];
        }
      }
      off += np;
    }
  }
  return out;
}

void MemoryBank::restore(std::deque<MemoryEntry> ring,
                         std::optional<MemoryEntry> last,
                         long preserved_writes, long last_frame) {
  ring_ = std::move(ring);
  last_ = std::move(last);
  preserved_writes_ = preserved_writes;
  last_frame_ = last_frame;
}

}  // namespace samtrack
