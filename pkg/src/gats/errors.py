"""Exception types shared across modules."""


class GatsError(Exception):
    pass


class ShapeError(GatsError, ValueError):
    pass


class NotPositiveDefinite(GatsError, ArithmeticError):
    """Smallest eigenvalue fell at or below the positive-definiteness floor."""

    def __init__(self, min_eig, floor, message=None):
        self.min_eig = float(min_eig)
        self.floor = float(floor)
        super().__init__(message or f"matrix not positive definite: lambda_min={min_eig:.3e} <= floor={floor:.3e}")


class OverlapViolation(NotPositiveDefinite):
    """The anchor-overlap condition ``V0^T V V^T V0 > 0`` fails.

    Carries ``min_eig`` so callers can report how close a sample sits to the
    boundary, plus optional ``mode`` and ``sample`` identifiers.
    """

    def __init__(self, min_eig, floor, mode=None, sample=None):
        self.mode = mode
        self.sample = sample
        where = []
        if sample is not None:
            where.append(f"sample={sample}")
        if mode is not None:
            where.append(f"mode={mode}")
        loc = f" ({', '.join(where)})" if where else ""
        super().__init__(
            min_eig,
            floor,
            f"anchor-overlap condition violated{loc}: lambda_min={min_eig:.3e} <= {floor:.3e}",
        )


class TrainingDiverged(GatsError, FloatingPointError):
    pass
