#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ragaudit {

/// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Errors caused by bad input or configuration (CLI exit code 1).
class UserError : public Error {
 public:
  using Error::Error;
};

class ConfigInvalid : public UserError {
 public:
  using UserError::UserError;
};

class CorpusError : public UserError {
 public:
  using UserError::UserError;
};

class MalformedRecord : public CorpusError {
 public:
  MalformedRecord(std::size_t line_no, const std::string& why)
      : CorpusError("malformed record at line " + std::to_string(line_no) + ": " + why),
        line_no_(line_no) {}
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

class EmptyCorpus : public CorpusError {
 public:
  EmptyCorpus() : CorpusError("no documents survived filtering") {}
};

class InsufficientPool : public UserError {
 public:
  InsufficientPool(const std::string& cls, std::size_t available, std::size_t requested)
      : UserError("insufficient " + cls + " pool: available " + std::to_string(available) +
                  ", requested " + std::to_string(requested)),
        available_(available),
        requested_(requested) {}
  std::size_t available() const { return available_; }
  std::size_t requested() const { return requested_; }

 private:
  std::size_t available_;
  std::size_t requested_;
};

class NoEvidenceFound : public Error {
 public:
  explicit NoEvidenceFound(const std::string& doc_id)
      : Error("no evidence units found in document " + doc_id) {}
};

class SpecOutOfRange : public UserError {
 public:
  using UserError::UserError;
};

/// An evidence unit cannot be turned into the requested item type.
class ItemUnbuildable : public Error {
 public:
  using Error::Error;
};

class InsufficientDistractors : public ItemUnbuildable {
 public:
  explicit InsufficientDistractors(const std::string& unit_id)
      : ItemUnbuildable("insufficient distractors for evidence unit " + unit_id), unit_id_(unit_id) {}
  const std::string& unit_id() const { return unit_id_; }

 private:
  std::string unit_id_;
};

class InsufficientEvidence : public Error {
 public:
  InsufficientEvidence(std::size_t needed, std::size_t available)
      : Error("insufficient evidence: needed " + std::to_string(needed) + " distinct units, " +
              std::to_string(available) + " usable"),
        needed_(needed),
        available_(available) {}
  std::size_t needed() const { return needed_; }
  std::size_t available() const { return available_; }

 private:
  std::size_t needed_;
  std::size_t available_;
};

class ItemMismatch : public Error {
 public:
  ItemMismatch(const std::string& item_id, const std::string& response_id)
      : Error("response " + response_id + " does not belong to item " + item_id) {}
};

class MissingResponse : public Error {
 public:
  explicit MissingResponse(const std::string& item_id)
      : Error("missing response for item " + item_id) {}
};

class DuplicateResponse : public Error {
 public:
  explicit DuplicateResponse(const std::string& item_id)
      : Error("duplicate response for item " + item_id) {}
};

class SingleClass : public Error {
 public:
  SingleClass() : Error("metric requires both member and non-member scores") {}
};

/// Every per-type KL divergence is zero; weights cannot be derived.
class DegenerateDistribution : public Error {
 public:
  DegenerateDistribution() : Error("all per-type KL divergences are zero") {}
};

class TargetUnavailable : public Error {
 public:
  using Error::Error;
};

class DocumentTooShort : public Error {
 public:
  explicit DocumentTooShort(const std::string& doc_id)
      : Error("document too short for attack: " + doc_id) {}
};

class ManifestCorrupt : public Error {
 public:
  using Error::Error;
};

/// Resume refused because the effective configuration changed since the run started.
class ConfigDrift : public ManifestCorrupt {
 public:
  using ManifestCorrupt::ManifestCorrupt;
};

}  // namespace ragaudit
