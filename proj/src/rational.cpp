#include "nmkt/rational.hpp"

#include <cctype>

namespace nmkt {

std::string rat_str(const Rat& x) {
    const BigInt num = boost::multiprecision::numerator(x);
    const BigInt den = boost::multiprecision::denominator(x);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

double rat_double(const Rat& x) { return x.convert_to<double>(); }

namespace {

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace

Rat parse_rat(const std::string& text) {
    std::string s = text;
    // trim
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    if (s.empty()) throw std::invalid_argument("empty rational literal");

    bool neg = false;
    if (s[0] == '+' || s[0] == '-') {
        neg = s[0] == '-';
        s.erase(s.begin());
    }
    if (s.empty()) throw std::invalid_argument("bad rational literal: " + text);

    Rat out;
    if (auto slash = s.find('/'); slash != std::string::npos) {
        const std::string n = s.substr(0, slash);
        const std::string d = s.substr(slash + 1);
        if (!all_digits(n) || !all_digits(d)) throw std::invalid_argument("bad rational literal: " + text);
        BigInt den(d);
        if (den == 0) throw std::invalid_argument("zero denominator: " + text);
        out = Rat(BigInt(n), den);
    } else if (auto dot = s.find('.'); dot != std::string::npos) {
        const std::string ip = s.substr(0, dot);
        const std::string fp = s.substr(dot + 1);
        if ((!ip.empty() && !all_digits(ip)) || !all_digits(fp))
            throw std::invalid_argument("bad rational literal: " + text);
        BigInt scale = 1;
        for (size_t i = 0; i < fp.size(); ++i) scale *= 10;
        BigInt num = (ip.empty() ? BigInt(0) : BigInt(ip)) * scale + BigInt(fp);
        out = Rat(num, scale);
    } else {
        if (!all_digits(s)) throw std::invalid_argument("bad rational literal: " + text);
        out = Rat(BigInt(s));
    }
    return neg ? Rat(-out) : out;
}

std::string rat_decimal(const Rat& x, int digits) {
    if (x == 0) return "0";
    BigInt num = boost::multiprecision::numerator(x);
    const BigInt den = boost::multiprecision::denominator(x);
    std::string sign;
    if (num < 0) {
        sign = "-";
        num = -num;
    }
    BigInt whole = num / den;
    BigInt rem = num % den;
    std::string out = sign + whole.str();
    if (rem == 0) return out;
    out += ".";
    int significant = whole == 0 ? 0 : static_cast<int>(whole.str().size());
    while (rem != 0 && significant < digits) {
        rem *= 10;
        const BigInt digit = rem / den;
        rem %= den;
        out += digit.str();
        if (significant > 0 || digit != 0) ++significant;
    }
    if (rem != 0) out += "...";  // truncated, not rounded
    return out;
}

std::string ext_str(const Ext& x) {
    switch (x.kind) {
        case Ext::NegInf: return "-inf";
        case Ext::PosInf: return "inf";
        default: return rat_str(x.value);
    }
}

}  // namespace nmkt
