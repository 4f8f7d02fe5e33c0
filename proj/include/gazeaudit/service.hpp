#pragma once

#include "gazeaudit/segmentation.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace gazeaudit {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080; // 0 binds an ephemeral port
    std::filesystem::path manifest;
    bool read_only = false;
    std::optional<std::string> token; // Bearer token required when set
    SegmentationConfig segmentation;
    double match_radius_m = 25.0;

    /// Throws InvalidArgument for a port outside [0, 65535].
    void validate() const;
};

/// Local HTTP API over a dataset manifest.
///
///   GET  /videos
///   GET  /videos/{id}/meta
///   GET  /videos/{id}/frames/{n}       image bytes
///   GET  /videos/{id}/telemetry
///   GET  /videos/{id}/annotations      X-Revision header
///   PUT  /videos/{id}/annotations      X-Base-Revision header required
///   GET  /videos/{id}/suggestions
///
/// Writes are serialized per video and persisted before the response.
/// A PUT whose base revision is not the current one gets 409.
class AnnotationService {
public:
    /// Loads the manifest; throws on an invalid config or manifest.
    explicit AnnotationService(ServiceConfig config);
    ~AnnotationService();
    AnnotationService(const AnnotationService&) = delete;
    AnnotationService& operator=(const AnnotationService&) = delete;

    /// Binds and starts serving on a background thread. Returns the bound
    /// port. Throws Io when the address cannot be bound.
    int start();
    /// Stops serving and joins the thread. Idempotent.
    void stop();
    int port() const;
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace gazeaudit
