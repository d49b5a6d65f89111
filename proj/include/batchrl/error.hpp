#pragma once

#include <stdexcept>
#include <string>

namespace batchrl {

/// Base class of every error thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define BATCHRL_DEFINE_ERROR(Name)                       \
    class Name : public error {                          \
    public:                                              \
        explicit Name(const std::string& what)           \
            : error(std::string(#Name ": ") + what) {}   \
    }

BATCHRL_DEFINE_ERROR(InvalidModel);
BATCHRL_DEFINE_ERROR(DomainError);
BATCHRL_DEFINE_ERROR(ShapeMismatch);
BATCHRL_DEFINE_ERROR(SingularSystem);
BATCHRL_DEFINE_ERROR(UnsupportedAverageReward);
BATCHRL_DEFINE_ERROR(TooLarge);
BATCHRL_DEFINE_ERROR(InvalidDistribution);
BATCHRL_DEFINE_ERROR(IndexOutOfRange);
BATCHRL_DEFINE_ERROR(EpsilonTooLarge);
BATCHRL_DEFINE_ERROR(FormatError);

#undef BATCHRL_DEFINE_ERROR

} // namespace batchrl
