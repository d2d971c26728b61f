#include "clickshield/net_registry.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

#include "clickshield/errors.hpp"

namespace clickshield {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

NetRange parse_row(std::string_view row, std::size_t line_no) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= row.size(); ++i) {
    if (i == row.size() || row[i] == ',') {
      fields.push_back(trim(row.substr(start, i - start)));
      start = i + 1;
    }
  }
  if (fields.size() < 2 || fields.size() > 3) {
    throw ParseError("expected 'CIDR,net_id[,pool_size]', got '" +
                         std::string(row) + "'",
                     line_no);
  }

  NetRange range;
  try {
    range.cidr = Cidr::parse_or_throw(fields[0]);
  } catch (const ParseError& e) {
    throw ParseError(e.what(), line_no);
  }
  if (fields[1].empty()) {
    throw ParseError("empty net_id", line_no);
  }
  range.net_id = std::string(fields[1]);

  if (fields.size() == 3) {
    std::uint64_t pool = 0;
    auto text = fields[2];
    auto [next, ec] =
        std::from_chars(text.data(), text.data() + text.size(), pool);
    if (ec != std::errc{} || next != text.data() + text.size()) {
      throw ParseError("invalid pool_size '" + std::string(text) + "'",
                       line_no);
    }
    if (pool == 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "line " + std::to_string(line_no) +
                      ": pool_size must be >= 1");
    }
    range.pool_size = pool;
  } else {
    range.pool_size = range.cidr.address_count();
  }
  return range;
}

}  // namespace

Registry::Registry(std::vector<NetRange> ranges,
                   std::uint64_t fallback_pool_size)
    : ranges_(std::move(ranges)), fallback_pool_size_(fallback_pool_size) {
  if (fallback_pool_size_ == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "fallback_pool_size must be >= 1");
  }
  nodes_.emplace_back();  // root
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    const auto& r = ranges_[i];
    if (r.pool_size == 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "range " + r.cidr.to_string() + ": pool_size must be >= 1");
    }
    if ((r.cidr.base.value & ~r.cidr.mask()) != 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "range " + r.cidr.to_string() + ": host bits set");
    }
    insert(i);
  }
}

void Registry::insert(std::size_t range_index) {
  const Cidr& cidr = ranges_[range_index].cidr;
  std::int32_t node = 0;
  for (int depth = 0; depth < cidr.prefix_len; ++depth) {
    const int bit = (cidr.base.value >> (31 - depth)) & 1;
    if (nodes_[node].child[bit] < 0) {
      nodes_[node].child[bit] = static_cast<std::int32_t>(nodes_.size());
      nodes_.emplace_back();
    }
    node = nodes_[node].child[bit];
  }
  if (nodes_[node].range >= 0) {
    throw ConflictError("duplicate range " + cidr.to_string());
  }
  nodes_[node].range = static_cast<std::int32_t>(range_index);
}

NetRange Registry::lookup(Ipv4 ip) const {
  std::int32_t node = 0;
  std::int32_t best = nodes_[0].range;
  for (int depth = 0; depth < 32; ++depth) {
    const int bit = (ip.value >> (31 - depth)) & 1;
    node = nodes_[node].child[bit];
    if (node < 0) break;
    if (nodes_[node].range >= 0) best = nodes_[node].range;
  }
  if (best >= 0) return ranges_[best];

  NetRange synthetic;
  synthetic.cidr = Cidr{ip, 32};
  synthetic.net_id = synthetic.cidr.to_string();
  synthetic.pool_size = fallback_pool_size_;
  return synthetic;
}

Registry Registry::from_text(std::string_view text,
                             std::uint64_t fallback_pool_size) {
  std::vector<NetRange> ranges;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    auto raw = text.substr(
        start, nl == std::string_view::npos ? text.size() - start
                                            : nl - start);
    ++line_no;
    auto row = trim(raw);
    if (!row.empty() && row.front() != '#') {
      ranges.push_back(parse_row(row, line_no));
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return Registry(std::move(ranges), fallback_pool_size);
}

Registry Registry::from_stream(std::istream& in,
                               std::uint64_t fallback_pool_size) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), fallback_pool_size);
}

Registry Registry::from_file(const std::string& path,
                             std::uint64_t fallback_pool_size) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open registry file '" + path + "'");
  }
  return from_stream(in, fallback_pool_size);
}

}  // namespace clickshield
