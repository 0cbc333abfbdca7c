// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace para {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PARA_DEFINE_ERROR(Name)                  \
    class Name : public Error {                  \
    public:                                      \
        using Error::Error;                      \
    }

PARA_DEFINE_ERROR(DimensionError);
PARA_DEFINE_ERROR(DomainError);
PARA_DEFINE_ERROR(FormatError);
PARA_DEFINE_ERROR(PairingError);
PARA_DEFINE_ERROR(UnknownLayerTypeError);
PARA_DEFINE_ERROR(IoError);
PARA_DEFINE_ERROR(EmptySetError);
PARA_DEFINE_ERROR(EmptyInputError);
PARA_DEFINE_ERROR(DegenerateError);
PARA_DEFINE_ERROR(MaskLengthError);
PARA_DEFINE_ERROR(PlanMismatchError);
PARA_DEFINE_ERROR(SizeGuardError);

#undef PARA_DEFINE_ERROR

} // namespace para
