#include "qstrat/channel_spec.hpp"

#include <charconv>
#include <cstdio>
#include <string_view>
#include <vector>

#include "qstrat/errors.hpp"

namespace qstrat {
namespace {

struct Field {
  std::string_view text;
  std::size_t offset;
};

std::vector<Field> split(std::string_view s) {
  std::vector<Field> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ':') {
      out.push_back({s.substr(start, i - start), start});
      start = i + 1;
    }
  }
  return out;
}

double parse_real(const Field& f, const char* what) {
  double v = 0.0;
  const char* end = f.text.data() + f.text.size();
  auto [ptr, ec] = std::from_chars(f.text.data(), end, v);
  if (ec != std::errc() || ptr != end || f.text.empty()) {
    throw ParseError(std::string("expected a real ") + what + ", got '" + std::string(f.text) + "'", f.offset);
  }
  return v;
}

std::uint64_t parse_unsigned(const Field& f, const char* what) {
  std::uint64_t v = 0;
  const char* end = f.text.data() + f.text.size();
  auto [ptr, ec] = std::from_chars(f.text.data(), end, v);
  if (ec != std::errc() || ptr != end || f.text.empty()) {
    throw ParseError(std::string("expected a nonnegative integer ") + what + ", got '" + std::string(f.text) + "'",
                     f.offset);
  }
  return v;
}

std::size_t parse_dim(const Field& f) {
  const auto d = parse_unsigned(f, "dimension");
  if (d < 1) throw ParseError("dimension must be >= 1", f.offset);
  if (d > 64) throw ParseError("dimension above 64 is not supported", f.offset);
  return static_cast<std::size_t>(d);
}

double parse_unit(const Field& f, const char* what) {
  const double v = parse_real(f, what);
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ParseError(std::string(what) + " must lie in [0, 1], got " + std::string(f.text), f.offset);
  }
  return v;
}

void expect_fields(const std::vector<Field>& f, std::size_t count, std::string_view usage) {
  if (f.size() != count) {
    const std::size_t pos = f.size() > count ? f[count].offset - 1 : f.back().offset + f.back().text.size();
    throw ParseError("expected " + std::string(usage), pos);
  }
}

}  // namespace

StrategyChoi ChannelSpec::build() const {
  switch (kind) {
    case Kind::gadc: return gadc_choi(gadc);
    case Kind::identity: return identity_choi(dim_in);
    case Kind::replace: return replacement_choi(dim_in, basis_index);
    case Kind::random: return random_channel_choi(dim_in, dim_out, seed);
  }
  throw DomainError("unknown channel kind");
}

std::string ChannelSpec::to_string() const {
  switch (kind) {
    case Kind::gadc: {
      char buf[80];
      std::snprintf(buf, sizeof buf, "gadc:%.17g:%.17g", gadc.gamma, gadc.noise);
      return buf;
    }
    case Kind::identity: return "identity:" + std::to_string(dim_in);
    case Kind::replace: return "replace:" + std::to_string(dim_in) + ":" + std::to_string(basis_index);
    case Kind::random:
      return "random:" + std::to_string(dim_in) + ":" + std::to_string(dim_out) + ":" + std::to_string(seed);
  }
  return {};
}

ChannelSpec parse_channel_spec(const std::string& s) {
  const auto f = split(s);
  const std::string_view name = f[0].text;
  ChannelSpec c;
  if (name == "gadc") {
    expect_fields(f, 3, "gadc:<gamma>:<noise>");
    c.kind = ChannelSpec::Kind::gadc;
    c.gadc.gamma = parse_unit(f[1], "gamma");
    c.gadc.noise = parse_unit(f[2], "noise");
    c.dim_in = c.dim_out = 2;
  } else if (name == "identity") {
    expect_fields(f, 2, "identity:<d>");
    c.kind = ChannelSpec::Kind::identity;
    c.dim_in = c.dim_out = parse_dim(f[1]);
  } else if (name == "replace") {
    expect_fields(f, 3, "replace:<d>:<basis-index>");
    c.kind = ChannelSpec::Kind::replace;
    c.dim_in = c.dim_out = parse_dim(f[1]);
    const auto k = parse_unsigned(f[2], "basis index");
    if (k >= c.dim_in) throw ParseError("basis index must be below the dimension", f[2].offset);
    c.basis_index = static_cast<std::size_t>(k);
  } else if (name == "random") {
    expect_fields(f, 4, "random:<dA>:<dB>:<seed>");
    c.kind = ChannelSpec::Kind::random;
    c.dim_in = parse_dim(f[1]);
    c.dim_out = parse_dim(f[2]);
    c.seed = parse_unsigned(f[3], "seed");
  } else {
    throw ParseError("unknown channel kind '" + std::string(name) + "' (expected gadc, identity, replace or random)",
                     0);
  }
  return c;
}

}  // namespace qstrat
