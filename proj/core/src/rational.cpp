#include "pipelat/rational.hpp"

#include <cctype>
#include <limits>
#include <stdexcept>

namespace pipelat {

namespace {

Integer pow10(unsigned exponent) {
  Integer result = 1;
  for (unsigned i = 0; i < exponent; ++i) result *= 10;
  return result;
}

Integer parse_digits(std::string_view digits, std::string_view whole) {
  if (digits.empty()) throw std::invalid_argument("not a number: '" + std::string(whole) + "'");
  Integer value = 0;
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw std::invalid_argument("not a number: '" + std::string(whole) + "'");
    value = value * 10 + (c - '0');
  }
  return value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  const std::string_view whole = text;
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) throw std::invalid_argument("empty number");

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    if (text.find('/', slash + 1) != std::string_view::npos)
      throw std::invalid_argument("not a number: '" + std::string(whole) + "'");
    Rational num = parse_rational(text.substr(0, slash));
    Rational den = parse_rational(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator: '" + std::string(whole) + "'");
    return num / den;
  }

  bool negative = false;
  if (text.front() == '+' || text.front() == '-') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }

  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_text = text.substr(e + 1);
    bool exp_negative = false;
    if (!exp_text.empty() && (exp_text.front() == '+' || exp_text.front() == '-')) {
      exp_negative = exp_text.front() == '-';
      exp_text.remove_prefix(1);
    }
    if (exp_text.size() > 6) throw std::invalid_argument("exponent too large: '" + std::string(whole) + "'");
    exponent = static_cast<long>(parse_digits(exp_text, whole).convert_to<long>());
    if (exp_negative) exponent = -exponent;
    text = text.substr(0, e);
  }

  std::string digits;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = text.substr(0, dot);
    std::string_view frac_part = text.substr(dot + 1);
    if (int_part.empty() && frac_part.empty())
      throw std::invalid_argument("not a number: '" + std::string(whole) + "'");
    digits = std::string(int_part) + std::string(frac_part);
    exponent -= static_cast<long>(frac_part.size());
  } else {
    digits = std::string(text);
  }

  Rational value(parse_digits(digits, whole));
  if (exponent > 0) value *= pow10(static_cast<unsigned>(exponent));
  if (exponent < 0) value /= pow10(static_cast<unsigned>(-exponent));
  return negative ? Rational(-value) : value;
}

std::string to_string(const Rational& value) {
  Integer num = boost::multiprecision::numerator(value);
  Integer den = boost::multiprecision::denominator(value);

  // Terminating decimal iff the reduced denominator is 2^a 5^b.
  Integer rest = den;
  unsigned twos = 0, fives = 0;
  while (rest % 2 == 0) { rest /= 2; ++twos; }
  while (rest % 5 == 0) { rest /= 5; ++fives; }
  if (rest != 1) return num.str() + "/" + den.str();

  unsigned places = std::max(twos, fives);
  Integer scaled = num * (pow10(places) / den);
  bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string digits = scaled.str();
  if (places > 0) {
    if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
    digits.insert(digits.size() - places, ".");
  }
  return negative ? "-" + digits : digits;
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

Integer floor_integer(const Rational& value) {
  Integer num = boost::multiprecision::numerator(value);
  Integer den = boost::multiprecision::denominator(value);
  Integer q = num / den;  // truncates toward zero
  if (num % den != 0 && num < 0) q -= 1;
  return q;
}

Integer ceil_integer(const Rational& value) { return -floor_integer(Rational(-value)); }

Rational floor_to(const Rational& value, const Rational& step) {
  if (step <= 0) throw std::invalid_argument("floor_to: step must be positive");
  return Rational(floor_integer(value / step)) * step;
}

Rational rational_gcd(const Rational& a, const Rational& b) {
  if (a == 0) return abs(b);
  if (b == 0) return abs(a);
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  Integer num = gcd(numerator(a), numerator(b));
  Integer den = lcm(denominator(a), denominator(b));
  return abs(Rational(num, den));
}

std::int64_t to_int64(const Rational& value) {
  if (boost::multiprecision::denominator(value) != 1)
    throw std::overflow_error("not an integer: " + to_string(value));
  const Integer& n = boost::multiprecision::numerator(value);
  if (n > std::numeric_limits<std::int64_t>::max() || n < std::numeric_limits<std::int64_t>::min())
    throw std::overflow_error("out of int64 range: " + to_string(value));
  return n.convert_to<std::int64_t>();
}

}  // namespace pipelat
