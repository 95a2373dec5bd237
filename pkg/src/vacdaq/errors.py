"""Exception hierarchy shared across the vacdaq packages."""


class VacdaqError(Exception):
    """Base class for all vacdaq errors."""


class DomainError(VacdaqError, ValueError):
    """An argument is outside the mathematical/physical domain of an operation."""


class RangeError(DomainError):
    """A signal value lies outside the instrument's analog span."""


class StateError(VacdaqError):
    """Operation invoked in a state where it has no defined meaning."""


class ConfigurationError(VacdaqError):
    """Invalid or incomplete configuration (files, specs, missing fields)."""


# --- codec ---------------------------------------------------------------

class CodecError(VacdaqError):
    """Base class for wire-format errors."""


class EncodeError(CodecError):
    """A protocol object violates its invariants and cannot be encoded."""


class DecodeError(CodecError):
    """Received bytes cannot be decoded."""


class FramingError(DecodeError):
    """Truncated frame, trailing bytes, or a length field that does not match."""


class ProtocolError(DecodeError):
    """Structurally valid frame that violates protocol rules (e.g. protocol id != 0)."""


class UnsupportedFunctionError(DecodeError):
    """Function code outside the supported set.

    Distinct from a device's IllegalFunction exception response: this is the
    local decoder refusing the code, not the remote device.
    """

    def __init__(self, function: int, message: str | None = None):
        super().__init__(message or f"unsupported function code 0x{function:02X}")
        self.function = function


class InvalidFieldError(DecodeError):
    """A decodable frame carries a field value outside its valid set."""

    def __init__(self, function: int, message: str):
        super().__init__(message)
        self.function = function


# --- transport ------------------------------------------------------------

class TransportError(VacdaqError):
    """TCP-level failure: connect refused, reset, unexpected close."""


class RequestTimeout(TransportError):
    """No matching response arrived within the configured timeout."""


class StartupError(VacdaqError):
    """A server could not start (bind failure and the like)."""


# --- acquisition ----------------------------------------------------------

class PollError(VacdaqError):
    """One poll cycle failed; carries the Modbus exception code when present."""

    def __init__(self, message: str, exception_code: int | None = None):
        super().__init__(message)
        self.exception_code = exception_code
