#pragma once

/*
 * Indexed binary min-heap over (value, index) pairs with decrease-key.
 *
 * Ties on value are broken by the smaller grid index so the pop order —
 * and with it every downstream artifact — is fully deterministic even on
 * plateaus where many pixels share a distance.
 */

#include <cstdint>
#include <vector>

namespace sfs {

class IndexedMinHeap {
public:
    explicit IndexedMinHeap(int universe) : pos_(universe, -1) {}

    bool empty() const { return heap_.empty(); }
    int size() const { return (int)heap_.size(); }
    bool contains(int id) const { return pos_[id] >= 0; }
    double value_of(int id) const { return heap_[pos_[id]].value; }

    // Insert, or lower the stored value; raising is a caller bug and ignored.
    void push_or_decrease(int id, double value) {
        int p = pos_[id];
        if (p < 0) {
            heap_.push_back({value, id});
            pos_[id] = (int)heap_.size() - 1;
            sift_up((int)heap_.size() - 1);
        } else if (value < heap_[p].value) {
            heap_[p].value = value;
            sift_up(p);
        }
    }

    // Remove and return the (value, index) pair with the smallest value.
    std::pair<double, int> pop_min() {
        Entry top = heap_[0];
        pos_[top.id] = -1;
        Entry last = heap_.back();
        heap_.pop_back();
        if (!heap_.empty()) {
            heap_[0] = last;
            pos_[last.id] = 0;
            sift_down(0);
        }
        return {top.value, top.id};
    }

private:
    struct Entry {
        double value;
        int id;
    };

    bool less(const Entry& a, const Entry& b) const {
        if (a.value != b.value) return a.value < b.value;
        return a.id < b.id;
    }

    void sift_up(int i) {
        Entry e = heap_[i];
        while (i > 0) {
            int parent = (i - 1) / 2;
            if (!less(e, heap_[parent])) break;
            heap_[i] = heap_[parent];
            pos_[heap_[i].id] = i;
            i = parent;
        }
        heap_[i] = e;
        pos_[e.id] = i;
    }

    void sift_down(int i) {
        Entry e = heap_[i];
        const int n = (int)heap_.size();
        for (;;) {
            int child = 2 * i + 1;
            if (child >= n) break;
            if (child + 1 < n && less(heap_[child + 1], heap_[child])) ++child;
            if (!less(heap_[child], e)) break;
            heap_[i] = heap_[child];
            pos_[heap_[i].id] = i;
            i = child;
        }
        heap_[i] = e;
        pos_[e.id] = i;
    }

    std::vector<Entry> heap_;
    std::vector<int> pos_;  // heap slot per index, -1 when absent
};

}  // namespace sfs
