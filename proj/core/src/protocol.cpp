#include "bridge/protocol.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>

namespace bridge {

namespace {

constexpr std::array<std::pair<MessageKind, std::string_view>, 8> kKindNames = {{
    {MessageKind::Hello, "HELLO"},
    {MessageKind::Ready, "READY"},
    {MessageKind::Return, "RETURN"},
    {MessageKind::ReturnJson, "RETURN_JSON"},
    {MessageKind::Stdout, "STDOUT"},
    {MessageKind::Error, "ERROR"},
    {MessageKind::Command, "COMMAND"},
    {MessageKind::CommandJson, "COMMAND_JSON"},
}};

// Longest legal header: "COMMAND_JSON " plus 20 digits.
constexpr std::size_t kMaxHeaderBytes = 64;
constexpr std::size_t kReadChunk = 64 * 1024;

}  // namespace

std::string_view kind_name(MessageKind kind) noexcept {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<MessageKind> kind_from_name(std::string_view name) noexcept {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

bool is_server_kind(MessageKind kind) noexcept { return !is_client_kind(kind); }

bool is_client_kind(MessageKind kind) noexcept {
  return kind == MessageKind::Command || kind == MessageKind::CommandJson;
}

std::string encode_message(const Message& msg) {
  const std::string_view name = kind_name(msg.kind);
  const std::string length = std::to_string(msg.body.size());
  std::string out;
  out.reserve(name.size() + length.size() + msg.body.size() + 3);
  out += name;
  out += ' ';
  out += length;
  out += '\n';
  out += msg.body;
  out += '\n';
  return out;
}

std::size_t StringSource::read_some(std::span<char> buffer) {
  const std::size_t n = std::min({buffer.size(), data_.size() - pos_, chunk_});
  std::memcpy(buffer.data(), data_.data() + pos_, n);
  pos_ += n;
  return n;
}

namespace {

// `line` excludes the newline.
FrameHeader parse_header_line(std::string_view line) {
  if (line.size() > kMaxHeaderBytes) throw FrameError("header line too long");
  const std::size_t space = line.find(' ');
  if (space == std::string_view::npos) throw FrameError("malformed header: missing length");
  const auto kind = kind_from_name(line.substr(0, space));
  if (!kind) throw FrameError("unknown message kind '" + std::string(line.substr(0, space)) + "'");
  const std::string_view digits = line.substr(space + 1);
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw FrameError("non-decimal length '" + std::string(digits) + "'");
  }
  std::size_t length = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), length);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) throw FrameError("length out of range");
  return FrameHeader{*kind, length};
}

}  // namespace

bool MessageReader::fill() {
  if (pos_ == end_) {
    pos_ = end_ = 0;
  } else if (pos_ > kReadChunk && pos_ * 2 > end_) {
    std::memmove(buffer_.data(), buffer_.data() + pos_, end_ - pos_);
    end_ -= pos_;
    pos_ = 0;
  }
  if (buffer_.size() < end_ + kReadChunk) buffer_.resize(end_ + kReadChunk);
  const std::size_t n = source_.read_some(std::span<char>(buffer_.data() + end_, kReadChunk));
  end_ += n;
  return n > 0;
}

std::optional<FrameHeader> MessageReader::read_header() {
  std::size_t newline = std::string::npos;
  while (true) {
    newline = std::string_view(buffer_.data(), end_).find('\n', pos_);
    if (newline != std::string::npos) break;
    if (end_ - pos_ > kMaxHeaderBytes) throw FrameError("header line too long");
    const bool at_boundary = pos_ == end_;
    if (!fill()) {
      if (at_boundary) return std::nullopt;
      throw FrameError("stream ended mid-header");
    }
  }
  const std::string_view line(buffer_.data() + pos_, newline - pos_);
  const FrameHeader header = parse_header_line(line);
  pos_ = newline + 1;
  consumed_ += line.size() + 1;
  return header;
}

void MessageReader::expect_terminator() {
  if (pos_ == end_ && !fill()) throw FrameError("stream ended before trailing newline");
  if (buffer_[pos_] != '\n') throw FrameError("missing trailing newline after body");
  ++pos_;
  ++consumed_;
}

std::string MessageReader::read_body(const FrameHeader& header) {
  std::string body;
  body.reserve(std::min(header.length, kReadChunk * 16));
  while (body.size() < header.length) {
    if (pos_ == end_ && !fill()) throw FrameError("stream ended mid-body");
    const std::size_t take = std::min(header.length - body.size(), end_ - pos_);
    body.append(buffer_.data() + pos_, take);
    pos_ += take;
  }
  consumed_ += header.length;
  expect_terminator();
  return body;
}

void MessageReader::skip_body(const FrameHeader& header) {
  std::size_t remaining = header.length;
  while (remaining > 0) {
    if (pos_ == end_ && !fill()) throw FrameError("stream ended mid-body");
    const std::size_t take = std::min(remaining, end_ - pos_);
    pos_ += take;
    remaining -= take;
  }
  consumed_ += header.length;
  expect_terminator();
}

std::optional<Message> MessageReader::next() {
  auto header = read_header();
  if (!header) return std::nullopt;
  return Message{header->kind, read_body(*header)};
}

Message decode_message(std::string_view& bytes) {
  if (bytes.empty()) throw FrameError("no message in input");
  const std::size_t newline = bytes.find('\n');
  if (newline == std::string_view::npos) {
    throw FrameError(bytes.size() > kMaxHeaderBytes ? "header line too long" : "stream ended mid-header");
  }
  const FrameHeader header = parse_header_line(bytes.substr(0, newline));
  const std::size_t body_start = newline + 1;
  if (bytes.size() - body_start < header.length) throw FrameError("stream ended mid-body");
  if (bytes.size() - body_start == header.length) throw FrameError("stream ended before trailing newline");
  if (bytes[body_start + header.length] != '\n') throw FrameError("missing trailing newline after body");
  Message msg{header.kind, std::string(bytes.substr(body_start, header.length))};
  bytes.remove_prefix(body_start + header.length + 1);
  return msg;
}

std::string encode_envelope(const Message& msg) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(kind_name(msg.kind));
  j["body"] = msg.body;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

Message decode_envelope(std::string_view frame) {
  nlohmann::json j = nlohmann::json::parse(frame, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw FrameError("envelope is not a JSON object");
  const auto kind_it = j.find("kind");
  const auto body_it = j.find("body");
  if (kind_it == j.end() || !kind_it->is_string()) throw FrameError("envelope lacks a string 'kind'");
  if (body_it == j.end() || !body_it->is_string()) throw FrameError("envelope lacks a string 'body'");
  const auto kind = kind_from_name(kind_it->get_ref<const std::string&>());
  if (!kind) throw FrameError("unknown message kind '" + kind_it->get<std::string>() + "'");
  return Message{*kind, body_it->get<std::string>()};
}

}  // namespace bridge
