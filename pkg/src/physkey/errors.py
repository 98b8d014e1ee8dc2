"""Domain exceptions shared across the package."""


class PhyskeyError(Exception):
    """Base class for domain errors (CLI maps these to exit code 1)."""


class ImpossibleObservationError(PhyskeyError):
    """An observation sequence has zero probability under the model."""


class UncorrectableBlockError(PhyskeyError):
    """A sketch block's error weight exceeds the code's correction capacity."""

    def __init__(self, block: int, detail: str = ""):
        self.block = block
        msg = f"uncorrectable block {block}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class CalibrationError(PhyskeyError):
    """No member of the channel search family reaches the target rates."""


class InfeasiblePlanError(PhyskeyError):
    """No sample count satisfies the requested key-length/security conditions."""
