#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>
#include <utility>

namespace bridge {

inline constexpr int kProtocolVersion = 1;

enum class MessageKind : std::uint8_t {
  Hello,
  Ready,
  Return,
  ReturnJson,
  Stdout,
  Error,
  Command,
  CommandJson,
};

std::string_view kind_name(MessageKind kind) noexcept;
std::optional<MessageKind> kind_from_name(std::string_view name) noexcept;

/// HELLO, READY, RETURN, RETURN_JSON, STDOUT and ERROR.
bool is_server_kind(MessageKind kind) noexcept;
/// COMMAND and COMMAND_JSON.
bool is_client_kind(MessageKind kind) noexcept;

struct Message {
  MessageKind kind = MessageKind::Ready;
  std::string body;

  friend bool operator==(const Message&, const Message&) = default;
};

/// A framing violation. The stream it came from is no longer usable.
class FrameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `<KIND> <LEN>\n<BODY>\n`
std::string encode_message(const Message& msg);

/// Pull-style byte stream. `read_some` blocks until at least one byte is
/// available and returns 0 only at end of stream.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual std::size_t read_some(std::span<char> buffer) = 0;
};

/// In-memory ByteSource, handy for tests and for decoding captured bytes.
class StringSource final : public ByteSource {
 public:
  explicit StringSource(std::string data, std::size_t chunk = SIZE_MAX)
      : data_(std::move(data)), chunk_(chunk) {}
  std::size_t read_some(std::span<char> buffer) override;

 private:
  std::string data_;
  std::size_t pos_ = 0;
  std::size_t chunk_;
};

struct FrameHeader {
  MessageKind kind;
  std::size_t length;
};

/// Decodes framed messages from a ByteSource, buffering internally.
///
/// `next()` is the usual entry point. The header/body split lets a server
/// look at a declared length and discard an oversized body without
/// buffering it.
class MessageReader {
 public:
  explicit MessageReader(ByteSource& source) : source_(source) {}

  /// Returns nullopt on a clean end of stream at a message boundary.
  std::optional<Message> next();

  std::optional<FrameHeader> read_header();
  std::string read_body(const FrameHeader& header);
  void skip_body(const FrameHeader& header);

  /// Bytes consumed by completed reads so far.
  std::size_t consumed() const noexcept { return consumed_; }

 private:
  bool fill();
  void expect_terminator();

  ByteSource& source_;
  std::vector<char> buffer_;  // unread bytes are [pos_, end_)
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
  std::size_t consumed_ = 0;
};

/// Decodes exactly one message from the front of `bytes`, advancing it.
Message decode_message(std::string_view& bytes);

// WebSocket framing: one JSON text frame per message,
// {"kind":"<KIND>","body":"<body>"}.
std::string encode_envelope(const Message& msg);
/// Throws FrameError on malformed JSON, missing fields or an unknown kind.
Message decode_envelope(std::string_view frame);

}  // namespace bridge
