"""Exception types shared by every patchlab module.

Each error carries a short machine-readable ``code`` in addition to the
human message; the CLI echoes both in its JSON error reports.
"""


class PatchlabError(Exception):
    code = "error"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def to_json(self):
        return {"code": self.code, "message": str(self)}


class RingError(PatchlabError):
    code = "ring"


class SizeCapError(PatchlabError):
    code = "size-cap"


class ComplexError(PatchlabError):
    code = "complex"


class OperatorError(PatchlabError):
    code = "operator"


class GradedError(PatchlabError):
    code = "graded"


class BoundTooSmall(GradedError):
    code = "bound-too-small"


class PatchingError(PatchlabError):
    code = "patching"


class NumerologyError(PatchlabError):
    code = "numerology"


class ScenarioError(PatchlabError):
    code = "scenario"
