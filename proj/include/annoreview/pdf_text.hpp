#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace annoreview {

/// Extraction interface used by the document store. Implementations return
/// one UTF-8 string per page, in reading order, and throw
/// Error(UnsupportedFormat) when there is no usable text layer.
class PdfTextExtractor {
public:
    virtual ~PdfTextExtractor() = default;
    [[nodiscard]] virtual std::vector<std::string> extract_pages(std::string_view pdf_bytes) const = 0;
};

/// Built-in extractor for text-layer PDFs. Handles classic and compressed
/// (object stream) object storage, FlateDecode content streams, simple fonts
/// with WinAnsi/Differences encodings and ToUnicode CMaps. Scanned PDFs,
/// encrypted files and exotic filters are rejected.
class BasicPdfTextExtractor final : public PdfTextExtractor {
public:
    [[nodiscard]] std::vector<std::string> extract_pages(std::string_view pdf_bytes) const override;
};

[[nodiscard]] std::shared_ptr<const PdfTextExtractor> default_pdf_extractor();

}  // namespace annoreview
