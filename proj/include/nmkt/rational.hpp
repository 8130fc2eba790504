#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <stdexcept>
#include <string>

namespace nmkt {

/// Exact rational scalar. All prices, volumes and masses in the solver path
/// are carried as `Rat`; no floating point enters any decision. Expression
/// templates are off so values behave like ordinary arithmetic types.
using Rat = boost::multiprecision::number<
    boost::multiprecision::backends::rational_adaptor<boost::multiprecision::cpp_int_backend<>>,
    boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                             boost::multiprecision::et_off>;

inline Rat rat(long n, long d = 1) { return Rat(n, d); }

/// Formats as "p/q" (or "p" when q == 1). Lossless, used by all JSON output.
std::string rat_str(const Rat& x);

/// Parses "p/q", plain integers and finite decimal strings ("0.43" -> 43/100).
/// Throws std::invalid_argument on anything else.
Rat parse_rat(const std::string& text);

double rat_double(const Rat& x);

/// Decimal rendering with `digits` significant digits, truncated (never
/// rounded); exact values print without a trailing marker, truncated ones
/// get an ellipsis.
std::string rat_decimal(const Rat& x, int digits = 20);

/// Scalar extended with -inf/+inf. The graphical algorithm manipulates the
/// paper-style sentinel unions ({0}, {inf}) literally, so the sentinels are
/// first-class values rather than error states.
struct Ext {
    enum Kind : int8_t { NegInf = -1, Finite = 0, PosInf = 1 };
    Kind kind = Finite;
    Rat value;  // meaningful only when finite

    Ext() = default;
    Ext(const Rat& v) : kind(Finite), value(v) {}
    Ext(Rat&& v) : kind(Finite), value(std::move(v)) {}
    static Ext neg_inf() { return Ext(NegInf, Rat(0)); }
    static Ext pos_inf() { return Ext(PosInf, Rat(0)); }

    bool finite() const { return kind == Finite; }
    const Rat& rat_or_throw() const {
        if (!finite()) throw std::domain_error("expected a finite scalar");
        return value;
    }

    friend bool operator==(const Ext& a, const Ext& b) {
        if (a.kind != b.kind) return false;
        return a.kind != Finite || a.value == b.value;
    }
    friend bool operator<(const Ext& a, const Ext& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.kind == Finite && a.value < b.value;
    }
    friend bool operator!=(const Ext& a, const Ext& b) { return !(a == b); }
    friend bool operator<=(const Ext& a, const Ext& b) { return a < b || a == b; }
    friend bool operator>(const Ext& a, const Ext& b) { return b < a; }
    friend bool operator>=(const Ext& a, const Ext& b) { return b <= a; }

  private:
    Ext(Kind k, Rat v) : kind(k), value(std::move(v)) {}
};

std::string ext_str(const Ext& x);

}  // namespace nmkt
