#include "hdrpoly/error.hpp"

namespace hdrpoly {

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::MalformedHeader: return "malformed header";
    case ParseErrorKind::Truncated: return "truncated payload";
    case ParseErrorKind::NanSample: return "NaN sample";
    case ParseErrorKind::NonFiniteSample: return "non-finite sample";
    case ParseErrorKind::NegativeSample: return "negative radiance";
    case ParseErrorKind::UnknownFormat: return "unknown format";
    case ParseErrorKind::BadResolution: return "bad resolution line";
    case ParseErrorKind::RleOverrun: return "RLE overrun";
    case ParseErrorKind::UnsupportedFormat: return "unsupported format";
    case ParseErrorKind::MalformedText: return "malformed text";
  }
  return "parse error";
}

}  // namespace hdrpoly
