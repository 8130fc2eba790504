#include "nmkt/geometry.hpp"

#include <algorithm>

namespace nmkt {

std::optional<Rat> Affine::solve(const Rat& y) const {
    if (b == 0) return std::nullopt;
    return Rat((y - a) / b);
}

bool Iv::is_empty() const {
    if (lo > hi) return true;
    if (lo == hi) {
        if (!lo.finite()) return true;
        return !(lo_closed && hi_closed);
    }
    return false;
}

bool Iv::contains(const Ext& x) const {
    if (is_empty()) return false;
    if (x < lo || (x == lo && !lo_closed)) return false;
    if (x > hi || (x == hi && !hi_closed)) return false;
    return x.finite() || (x == lo && lo_closed) || (x == hi && hi_closed);
}

bool Iv::positive_length() const { return !is_empty() && lo < hi; }

Iv Iv::intersect(const Iv& o) const {
    Iv r;
    if (lo > o.lo) {
        r.lo = lo;
        r.lo_closed = lo_closed;
    } else if (o.lo > lo) {
        r.lo = o.lo;
        r.lo_closed = o.lo_closed;
    } else {
        r.lo = lo;
        r.lo_closed = lo_closed && o.lo_closed;
    }
    if (hi < o.hi) {
        r.hi = hi;
        r.hi_closed = hi_closed;
    } else if (o.hi < hi) {
        r.hi = o.hi;
        r.hi_closed = o.hi_closed;
    } else {
        r.hi = hi;
        r.hi_closed = hi_closed && o.hi_closed;
    }
    return r;
}

void IvSet::add(Iv iv) {
    if (iv.is_empty()) return;
    parts_.push_back(std::move(iv));
    normalize();
}

void IvSet::normalize() {
    std::sort(parts_.begin(), parts_.end(), [](const Iv& a, const Iv& b) {
        if (a.lo != b.lo) return a.lo < b.lo;
        return b.lo_closed < a.lo_closed;
    });
    std::vector<Iv> merged;
    for (auto& iv : parts_) {
        if (!merged.empty()) {
            Iv& last = merged.back();
            // touching or overlapping?
            const bool overlap =
                iv.lo < last.hi || (iv.lo == last.hi && (iv.lo_closed || last.hi_closed));
            if (overlap) {
                if (iv.hi > last.hi) {
                    last.hi = iv.hi;
                    last.hi_closed = iv.hi_closed;
                } else if (iv.hi == last.hi) {
                    last.hi_closed = last.hi_closed || iv.hi_closed;
                }
                continue;
            }
        }
        merged.push_back(iv);
    }
    parts_ = std::move(merged);
}

bool IvSet::contains(const Rat& x) const {
    for (const auto& iv : parts_)
        if (iv.contains(x)) return true;
    return false;
}

std::optional<Ext> IvSet::sup() const {
    if (parts_.empty()) return std::nullopt;
    return parts_.back().hi;
}

std::optional<Ext> IvSet::inf() const {
    if (parts_.empty()) return std::nullopt;
    return parts_.front().lo;
}

IvSet IvSet::minus_point(const Rat& x) const {
    IvSet out;
    for (const auto& iv : parts_) {
        if (!iv.contains(x)) {
            out.parts_.push_back(iv);
            continue;
        }
        Iv left = iv, right = iv;
        left.hi = Ext(x);
        left.hi_closed = false;
        right.lo = Ext(x);
        right.lo_closed = false;
        if (!left.is_empty()) out.parts_.push_back(left);
        if (!right.is_empty()) out.parts_.push_back(right);
    }
    out.normalize();
    return out;
}

IvSet IvSet::intersect(const Iv& window) const {
    IvSet out;
    for (const auto& iv : parts_) {
        Iv cut = iv.intersect(window);
        if (!cut.is_empty()) out.parts_.push_back(cut);
    }
    out.normalize();
    return out;
}

}  // namespace nmkt
