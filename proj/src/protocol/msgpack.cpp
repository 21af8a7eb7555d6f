/* Copyright 2026 The vla-eval Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "vlaeval/msgpack.hpp"

#include <bit>
#include <cstring>
#include <limits>

namespace vlaeval::msgpack {

namespace {

void put_be(Bytes& out, std::uint64_t v, int width) {
  for (int shift = (width - 1) * 8; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void put_int(Bytes& out, std::int64_t v) {
  if (v >= 0) {
    auto u = static_cast<std::uint64_t>(v);
    if (u <= 0x7f) {
      out.push_back(static_cast<std::uint8_t>(u));
    } else if (u <= 0xff) {
      out.push_back(0xcc);
      put_be(out, u, 1);
    } else if (u <= 0xffff) {
      out.push_back(0xcd);
      put_be(out, u, 2);
    } else if (u <= 0xffffffffULL) {
      out.push_back(0xce);
      put_be(out, u, 4);
    } else {
      out.push_back(0xcf);
      put_be(out, u, 8);
    }
    return;
  }
  if (v >= -32) {
    out.push_back(static_cast<std::uint8_t>(v));
  } else if (v >= std::numeric_limits<std::int8_t>::min()) {
    out.push_back(0xd0);
    put_be(out, static_cast<std::uint64_t>(v), 1);
  } else if (v >= std::numeric_limits<std::int16_t>::min()) {
    out.push_back(0xd1);
    put_be(out, static_cast<std::uint64_t>(v), 2);
  } else if (v >= std::numeric_limits<std::int32_t>::min()) {
    out.push_back(0xd2);
    put_be(out, static_cast<std::uint64_t>(v), 4);
  } else {
    out.push_back(0xd3);
    put_be(out, static_cast<std::uint64_t>(v), 8);
  }
}

void put_str_header(Bytes& out, std::size_t n) {
  if (n <= 31) {
    out.push_back(static_cast<std::uint8_t>(0xa0 | n));
  } else if (n <= 0xff) {
    out.push_back(0xd9);
    put_be(out, n, 1);
  } else if (n <= 0xffff) {
    out.push_back(0xda);
    put_be(out, n, 2);
  } else {
    out.push_back(0xdb);
    put_be(out, n, 4);
  }
}

void put_container_header(Bytes& out, std::size_t n, std::uint8_t fix, std::uint8_t b16,
                          std::uint8_t b32) {
  if (n <= 15) {
    out.push_back(static_cast<std::uint8_t>(fix | n));
  } else if (n <= 0xffff) {
    out.push_back(b16);
    put_be(out, n, 2);
  } else {
    out.push_back(b32);
    put_be(out, n, 4);
  }
}

void encode_into(const Value& v, Bytes& out, std::string& path) {
  switch (v.kind()) {
    case Value::Kind::kNil:
      out.push_back(0xc0);
      break;
    case Value::Kind::kBool:
      out.push_back(v.as_bool() ? 0xc3 : 0xc2);
      break;
    case Value::Kind::kInt:
      put_int(out, v.as_int());
      break;
    case Value::Kind::kFloat:
      out.push_back(0xcb);
      put_be(out, std::bit_cast<std::uint64_t>(v.as_double()), 8);
      break;
    case Value::Kind::kString: {
      const std::string& s = v.as_string();
      put_str_header(out, s.size());
      out.insert(out.end(), s.begin(), s.end());
      break;
    }
    case Value::Kind::kBinary: {
      const Bytes& b = v.as_binary();
      if (b.size() <= 0xff) {
        out.push_back(0xc4);
        put_be(out, b.size(), 1);
      } else if (b.size() <= 0xffff) {
        out.push_back(0xc5);
        put_be(out, b.size(), 2);
      } else {
        out.push_back(0xc6);
        put_be(out, b.size(), 4);
      }
      out.insert(out.end(), b.begin(), b.end());
      break;
    }
    case Value::Kind::kArray: {
      const auto& items = v.as_array();
      put_container_header(out, items.size(), 0x90, 0xdc, 0xdd);
      const std::size_t mark = path.size();
      for (std::size_t i = 0; i < items.size(); ++i) {
        path += "[" + std::to_string(i) + "]";
        encode_into(items[i], out, path);
        path.resize(mark);
      }
      break;
    }
    case Value::Kind::kMap: {
      const auto& entries = v.as_map();
      put_container_header(out, entries.size(), 0x80, 0xde, 0xdf);
      const std::size_t mark = path.size();
      for (const auto& [key, item] : entries) {
        put_str_header(out, key.size());
        out.insert(out.end(), key.begin(), key.end());
        path += "." + key;
        encode_into(item, out, path);
        path.resize(mark);
      }
      break;
    }
    case Value::Kind::kOpaque:
      throw EncodeError("value at '" + (path.empty() ? std::string("<root>") : path) +
                        "' has no wire representation (" + v.as_opaque().type_name + ")");
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  bool done() const { return pos_ == data_.size(); }

  Value read(int depth) {
    if (depth > kMaxDepth) throw DecodeError("nesting deeper than " + std::to_string(kMaxDepth));
    const std::uint8_t tag = byte();
    if (tag <= 0x7f) return Value(static_cast<std::int64_t>(tag));
    if (tag >= 0xe0) return Value(static_cast<std::int64_t>(static_cast<std::int8_t>(tag)));
    if ((tag & 0xf0) == 0x80) return read_map(tag & 0x0f, depth);
    if ((tag & 0xf0) == 0x90) return read_array(tag & 0x0f, depth);
    if ((tag & 0xe0) == 0xa0) return Value(read_string(tag & 0x1f));
    switch (tag) {
      case 0xc0: return Value();
      case 0xc2: return Value(false);
      case 0xc3: return Value(true);
      case 0xc4: return Value(read_bytes(be(1)));
      case 0xc5: return Value(read_bytes(be(2)));
      case 0xc6: return Value(read_bytes(be(4)));
      case 0xca: {
        auto bits = static_cast<std::uint32_t>(be(4));
        return Value(static_cast<double>(std::bit_cast<float>(bits)));
      }
      case 0xcb: return Value(std::bit_cast<double>(be(8)));
      case 0xcc: return Value(static_cast<std::int64_t>(be(1)));
      case 0xcd: return Value(static_cast<std::int64_t>(be(2)));
      case 0xce: return Value(static_cast<std::int64_t>(be(4)));
      case 0xcf: {
        std::uint64_t u = be(8);
        if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
          throw DecodeError("uint64 value above int64 range");
        }
        return Value(static_cast<std::int64_t>(u));
      }
      case 0xd0: return Value(static_cast<std::int64_t>(static_cast<std::int8_t>(be(1))));
      case 0xd1: return Value(static_cast<std::int64_t>(static_cast<std::int16_t>(be(2))));
      case 0xd2: return Value(static_cast<std::int64_t>(static_cast<std::int32_t>(be(4))));
      case 0xd3: return Value(static_cast<std::int64_t>(be(8)));
      case 0xd9: return Value(read_string(be(1)));
      case 0xda: return Value(read_string(be(2)));
      case 0xdb: return Value(read_string(be(4)));
      case 0xdc: return read_array(be(2), depth);
      case 0xdd: return read_array(be(4), depth);
      case 0xde: return read_map(be(2), depth);
      case 0xdf: return read_map(be(4), depth);
      default: break;
    }
    throw DecodeError("unsupported msgpack tag 0x" + hex(tag));
  }

 private:
  static std::string hex(std::uint8_t b) {
    const char* digits = "0123456789abcdef";
    return {digits[b >> 4], digits[b & 0xf]};
  }

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw DecodeError("truncated input");
  }

  std::uint8_t byte() {
    need(1);
    return data_[pos_++];
  }

  std::uint64_t be(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }

  std::string read_string(std::uint64_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  Bytes read_bytes(std::uint64_t n) {
    need(n);
    Bytes b(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
            data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return b;
  }

  Value read_array(std::uint64_t n, int depth) {
    // Each element takes at least one byte; reject impossible counts early.
    need(n);
    Value::Array items;
    items.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) items.push_back(read(depth + 1));
    return Value(std::move(items));
  }

  Value read_map(std::uint64_t n, int depth) {
    need(n);
    Value::Object entries;
    entries.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      Value key = read(depth + 1);
      if (!key.is_string()) throw DecodeError("map key is not a string");
      if (find_key(entries, key.as_string()) != nullptr) {
        throw DecodeError("duplicate map key '" + key.as_string() + "'");
      }
      Value item = read(depth + 1);
      entries.emplace_back(key.as_string(), std::move(item));
    }
    return Value(std::move(entries));
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

void encode(const Value& value, Bytes& out) {
  std::string path;
  encode_into(value, out, path);
}

Bytes encode(const Value& value) {
  Bytes out;
  encode(value, out);
  return out;
}

Value decode(std::span<const std::uint8_t> data) {
  Reader reader(data);
  Value v = reader.read(0);
  if (!reader.done()) throw DecodeError("trailing bytes after top-level value");
  return v;
}

}  // namespace vlaeval::msgpack
