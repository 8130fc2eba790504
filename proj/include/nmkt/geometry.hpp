#pragma once

#include <optional>
#include <vector>

#include "nmkt/rational.hpp"

namespace nmkt {

/// Affine map x -> a + b*x. The entire solver geometry is piecewise affine,
/// so this is the only segment evaluator the curve types need.
struct Affine {
    Rat a;  // intercept
    Rat b;  // slope

    Rat operator()(const Rat& x) const { return a + b * x; }
    bool constant() const { return b == 0; }
    /// Solves a + b*x == y; nullopt when b == 0 and a != y.
    std::optional<Rat> solve(const Rat& y) const;
    friend bool operator==(const Affine&, const Affine&) = default;
};

/// Interval over the extended line with per-endpoint open/closed flags.
/// Infinite endpoints are always open. Empty intervals normalize to a
/// canonical representation with is_empty() == true.
struct Iv {
    Ext lo = Ext::neg_inf();
    Ext hi = Ext::pos_inf();
    bool lo_closed = false;
    bool hi_closed = false;

    static Iv all() { return Iv{}; }
    static Iv point(const Rat& x) { return Iv{x, x, true, true}; }
    static Iv closed(const Rat& a, const Rat& b) { return Iv{a, b, true, true}; }
    static Iv open_closed(const Ext& a, const Rat& b) { return Iv{a, b, false, true}; }

    bool is_empty() const;
    bool is_point() const { return lo == hi && lo_closed && hi_closed && lo.finite(); }
    bool contains(const Ext& x) const;
    bool contains(const Rat& x) const { return contains(Ext(x)); }
    /// Lebesgue length > 0 (ignores endpoint flags).
    bool positive_length() const;
    Iv intersect(const Iv& other) const;

    friend bool operator==(const Iv&, const Iv&) = default;
};

/// Finite union of disjoint intervals/points in ascending order. Supports
/// exactly the set algebra Algorithm 1 needs (sup, min, membership,
/// point removal, clipping).
class IvSet {
  public:
    IvSet() = default;
    void add(Iv iv);

    bool empty() const { return parts_.empty(); }
    bool contains(const Rat& x) const;
    /// sup of the set; nullopt when empty. (Never +inf in solver use: callers
    /// clip to a finite window first.)
    std::optional<Ext> sup() const;
    std::optional<Ext> inf() const;
    IvSet minus_point(const Rat& x) const;
    IvSet intersect(const Iv& window) const;
    const std::vector<Iv>& parts() const { return parts_; }

  private:
    void normalize();
    std::vector<Iv> parts_;
};

/// One-sided-exact supremum: the value together with whether it is attained
/// by a member of the set. Sentinels {0} / {inf} from the algorithm listing
/// enter as ordinary attained values.
struct SupResult {
    Ext value = Ext::neg_inf();
    bool attained = false;
};

inline SupResult sup_join(SupResult a, SupResult b) {
    if (a.value < b.value) return b;
    if (b.value < a.value) return a;
    a.attained = a.attained || b.attained;
    return a;
}

}  // namespace nmkt
