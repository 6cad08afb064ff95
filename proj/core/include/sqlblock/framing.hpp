// Length-prefixed frames: u32 big-endian payload length, then the payload.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sqlblock::gate {

inline constexpr std::size_t kDefaultMaxFrame = 1u << 20;

std::string encode_frame(std::string_view payload);

// Incremental decoder for a byte stream.
class FrameDecoder {
 public:
  enum class Status { NeedMore, Frame, Oversize };

  explicit FrameDecoder(std::size_t max_frame = kDefaultMaxFrame) : max_(max_frame) {}

  void feed(const char* data, std::size_t n) { buf_.append(data, n); }
  // On Frame, `out` holds the payload and the frame is consumed.
  Status next(std::string& out);
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::size_t max_;
  std::string buf_;
  std::size_t pos_ = 0;
};

// Blocking socket helpers. Both retry on EINTR and short transfers.
bool send_all(int fd, std::string_view data);
bool send_frame(int fd, std::string_view payload);

// Reads one frame. Returns false on EOF or error; `oversize` is set when the
// announced length exceeds max_frame (nothing further is read).
bool recv_frame(int fd, std::string& out, std::size_t max_frame, bool* oversize = nullptr);

}  // namespace sqlblock::gate
