# coding=utf-8


class UadpsError(Exception):
    pass


class InvalidInput(UadpsError, ValueError):
    pass


class DegenerateWeights(UadpsError):
    pass


class SolveFailure(UadpsError):
    def __init__(self, f, c, message=None):
        self.f = f
        self.c = c
        super(SolveFailure, self).__init__(
            message or 'normal equations singular at bin {} channel {}'.format(
                f, c))


class NumericalError(UadpsError):
    pass


class CapabilityError(UadpsError):
    pass


class DenoiserProtocolError(UadpsError):
    """Raised on a malformed frame or a dead denoiser process.

    ``diagnostics`` holds whatever was known about the offending frame
    (expected/received sizes, header fields, process exit code)."""

    def __init__(self, message, **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            details = ', '.join('{}={}'.format(k, v)
                                for k, v in sorted(diagnostics.items()))
            message = '{} ({})'.format(message, details)
        super(DenoiserProtocolError, self).__init__(message)


class ConfigurationError(UadpsError):
    """Bad command-line flag or config file entry; the message names it."""
