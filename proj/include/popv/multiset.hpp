#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace popv {

// Dense multiset over an indexed universe 0..n-1.
class Multiset {
public:
    Multiset() = default;
    explicit Multiset(std::size_t n) : c_(n, 0) {}
    explicit Multiset(std::vector<int32_t> counts) : c_(std::move(counts)) {}

    std::size_t dim() const { return c_.size(); }
    int32_t operator[](std::size_t i) const { return c_[i]; }
    int32_t& operator[](std::size_t i) { return c_[i]; }
    const std::vector<int32_t>& counts() const { return c_; }
    std::vector<int32_t>& counts() { return c_; }

    int64_t size() const {
        int64_t s = 0;
        for (auto v : c_) s += v;
        return s;
    }
    bool empty() const { return size() == 0; }

    bool leq(const Multiset& o) const {
        for (std::size_t i = 0; i < c_.size(); ++i)
            if (c_[i] > o.c_[i]) return false;
        return true;
    }
    Multiset operator+(const Multiset& o) const {
        Multiset r(*this);
        for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] += o.c_[i];
        return r;
    }
    Multiset operator-(const Multiset& o) const {
        if (!o.leq(*this)) throw std::invalid_argument("multiset subtraction underflow");
        Multiset r(*this);
        for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] -= o.c_[i];
        return r;
    }
    Multiset max(const Multiset& o) const {
        Multiset r(*this);
        for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] = std::max(c_[i], o.c_[i]);
        return r;
    }
    bool operator==(const Multiset& o) const { return c_ == o.c_; }
    bool operator<(const Multiset& o) const { return c_ < o.c_; }

private:
    std::vector<int32_t> c_;
};

struct Configuration {
    Multiset agents;
    Multiset messages;  // empty-dimension for immediate models

    Configuration() = default;
    Configuration(std::size_t nq, std::size_t nm) : agents(nq), messages(nm) {}
    Configuration(Multiset a, Multiset m) : agents(std::move(a)), messages(std::move(m)) {}

    bool zero_message() const { return messages.size() == 0; }
    bool operator==(const Configuration& o) const {
        return agents == o.agents && messages == o.messages;
    }
    bool operator<(const Configuration& o) const {
        if (agents == o.agents) return messages < o.messages;
        return agents < o.agents;
    }
};

inline uint64_t hash_ints(const int32_t* p, std::size_t n) {
    uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<uint32_t>(p[i]);
        h *= 1099511628211ULL;
        h ^= h >> 29;
    }
    return h;
}

// Interns fixed-length int vectors; ids are dense and stable.
class Interner {
public:
    explicit Interner(std::size_t stride = 0) : stride_(stride) {}

    std::size_t stride() const { return stride_; }
    std::size_t size() const { return count_; }
    const int32_t* get(std::size_t id) const { return data_.data() + id * stride_; }

    // Returns (id, inserted).
    std::pair<uint32_t, bool> insert(const int32_t* key) {
        if ((count_ + 1) * 2 > table_.size()) grow();
        uint64_t h = hash_ints(key, stride_);
        std::size_t mask = table_.size() - 1;
        std::size_t pos = h & mask;
        while (true) {
            uint32_t slot = table_[pos];
            if (slot == kEmpty) {
                data_.insert(data_.end(), key, key + stride_);
                table_[pos] = static_cast<uint32_t>(count_);
                return {static_cast<uint32_t>(count_++), true};
            }
            if (equal(get(slot), key)) return {slot, false};
            pos = (pos + 1) & mask;
        }
    }
    std::pair<uint32_t, bool> insert(const std::vector<int32_t>& key) { return insert(key.data()); }

    int64_t find(const int32_t* key) const {
        if (table_.empty()) return -1;
        uint64_t h = hash_ints(key, stride_);
        std::size_t mask = table_.size() - 1;
        std::size_t pos = h & mask;
        while (true) {
            uint32_t slot = table_[pos];
            if (slot == kEmpty) return -1;
            if (equal(get(slot), key)) return slot;
            pos = (pos + 1) & mask;
        }
    }
    int64_t find(const std::vector<int32_t>& key) const { return find(key.data()); }

private:
    static constexpr uint32_t kEmpty = 0xffffffffu;
    bool equal(const int32_t* a, const int32_t* b) const {
        for (std::size_t i = 0; i < stride_; ++i)
            if (a[i] != b[i]) return false;
        return true;
    }
    void grow() {
        std::size_t n = table_.empty() ? 64 : table_.size() * 2;
        table_.assign(n, kEmpty);
        std::size_t mask = n - 1;
        for (std::size_t id = 0; id < count_; ++id) {
            std::size_t pos = hash_ints(get(id), stride_) & mask;
            while (table_[pos] != kEmpty) pos = (pos + 1) & mask;
            table_[pos] = static_cast<uint32_t>(id);
        }
    }

    std::size_t stride_;
    std::size_t count_ = 0;
    std::vector<int32_t> data_;
    std::vector<uint32_t> table_;
};

}  // namespace popv
