"""Exception hierarchy shared by every ober module."""


class OberError(Exception):
    """Base class for all ober errors."""


class ModelError(OberError, ValueError):
    """Invalid outcome, item or alignment data."""


class DuplicateId(ModelError):
    def __init__(self, kind, ident):
        super().__init__(f"duplicate {kind} id {ident!r}")
        self.ident = ident


class MissingParent(ModelError):
    def __init__(self, ident, parent_id):
        super().__init__(f"outcome {ident!r} references missing parent {parent_id!r}")
        self.ident = ident
        self.parent_id = parent_id


class CycleDetected(ModelError):
    def __init__(self, path):
        super().__init__("refines cycle: " + " -> ".join(path))
        self.path = list(path)


class UnknownKind(ModelError):
    def __init__(self, ident, raw):
        super().__init__(f"item {ident!r} has unknown type {raw!r}")
        self.ident = ident
        self.raw = raw


class DanglingOutcome(ModelError):
    def __init__(self, ident):
        super().__init__(f"alignment references unknown outcome {ident!r}")
        self.ident = ident


class DanglingItem(ModelError):
    def __init__(self, ident):
        super().__init__(f"alignment references unknown item {ident!r}")
        self.ident = ident


class DuplicateMapping(ModelError):
    def __init__(self, outcome_id, alignment_type):
        super().__init__(f"more than one {alignment_type!r} mapping for outcome {outcome_id!r}")
        self.outcome_id = outcome_id
        self.alignment_type = alignment_type


class UnknownOutcome(OberError, KeyError):
    def __init__(self, ident):
        super().__init__(ident)
        self.ident = ident

    def __str__(self):
        return f"unknown outcome {self.ident!r}"


class ValidationFailed(OberError, ValueError):
    """An interaction event violates its invariants."""


class StorageFailure(OberError, OSError):
    """The event file could not be read or written."""


class WeightUndefined(OberError, ValueError):
    def __init__(self, outcome_id):
        super().__init__(f"no roll-up weight defined for outcome {outcome_id!r}")
        self.outcome_id = outcome_id


class ZeroWeightSum(OberError, ValueError):
    def __init__(self, parent_id):
        super().__init__(f"children of {parent_id!r} have zero total weight")
        self.parent_id = parent_id


class UnknownMethod(OberError, KeyError):
    def __init__(self, label):
        super().__init__(label)
        self.label = label

    def __str__(self):
        return f"unknown recommendation method {self.label!r}"


class EmptySequence(OberError, ValueError):
    pass


class EmptyGroup(OberError, ValueError):
    def __init__(self, group=None):
        msg = "group has no learners" if group is None else f"group {group!r} has no learners"
        super().__init__(msg)
        self.group = group


class NoImpressions(OberError, ValueError):
    def __init__(self, group=None):
        msg = "no learner in group saw a recommendation"
        if group is not None:
            msg = f"no learner in group {group!r} saw a recommendation"
        super().__init__(msg)
        self.group = group


class ConfigError(OberError, ValueError):
    pass
