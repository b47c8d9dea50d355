"""Exception types shared across the package.

ParseError covers malformed inputs and IO-shaped problems (CLI exit 2),
EvalError covers evaluation-domain failures such as empty denominators
(CLI exit 1).
"""

from __future__ import annotations


class CorefmtError(Exception):
    pass


class ParseError(CorefmtError):
    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = str(path) if path is not None else None
        self.line = line
        prefix = ""
        if self.path is not None:
            prefix = self.path
            if line is not None:
                prefix += f":{line}"
            prefix += ": "
        super().__init__(prefix + message)


class EvalError(CorefmtError):
    pass
