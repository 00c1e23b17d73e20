#pragma once

#include <stdexcept>
#include <string>

namespace scra {

// Base class for everything this library throws on purpose.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Matrix / tensor dimensions do not line up.
class shape_error : public error {
public:
    explicit shape_error(const std::string& msg) : error(msg) {}
};

// Input violates a stated precondition (non-finite values, empty text, bad counts).
class validation_error : public error {
public:
    explicit validation_error(const std::string& msg) : error(msg) {}
};

// A model backend call failed. retriable() tells the orchestrator whether a
// second attempt is worth making.
class backend_error : public error {
public:
    backend_error(const std::string& backend_id, const std::string& msg, bool retriable = true)
        : error("backend '" + backend_id + "': " + msg),
          backend_id_(backend_id),
          retriable_(retriable) {}

    const std::string& backend_id() const { return backend_id_; }
    bool retriable() const { return retriable_; }

private:
    std::string backend_id_;
    bool retriable_;
};

// Captioning produced no usable text; callers fall back to whole-image captions.
class empty_caption_error : public error {
public:
    explicit empty_caption_error(const std::string& msg) : error(msg) {}
};

// A prompt component required by the selected content variant is missing.
class composition_error : public error {
public:
    composition_error(const std::string& slot, const std::string& msg)
        : error(msg), slot_(slot) {}

    const std::string& slot() const { return slot_; }

private:
    std::string slot_;
};

// Dataset file could not be parsed into records.
class ingestion_error : public error {
public:
    explicit ingestion_error(const std::string& msg) : error(msg) {}
};

class aggregation_error : public error {
public:
    explicit aggregation_error(const std::string& msg) : error(msg) {}
};

class config_error : public error {
public:
    explicit config_error(const std::string& msg) : error(msg) {}
};

class io_error : public error {
public:
    explicit io_error(const std::string& msg) : error(msg) {}
};

} // namespace scra
