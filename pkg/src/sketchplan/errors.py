"""Exception hierarchy shared by every pipeline stage.

Each error carries a ``stage`` tag so the CLI and the HTTP service can emit
machine-readable ``{stage, code, message}`` payloads without inspecting
exception types one by one.
"""


class SketchPlanError(Exception):
    """Base class for all pipeline errors."""

    stage = "general"

    @property
    def code(self) -> str:
        return type(self).__name__

    def payload(self) -> dict:
        return {"stage": self.stage, "code": self.code, "message": str(self)}


# palette -------------------------------------------------------------------

class PaletteError(SketchPlanError):
    stage = "palette"


class DuplicateOrdinal(PaletteError):
    pass


class NonContiguousOrdinals(PaletteError):
    pass


class ColorsTooClose(PaletteError):
    pass


# sketch parsing ------------------------------------------------------------

class ParseError(SketchPlanError):
    stage = "parse"


class NoSymbolsFound(ParseError):
    pass


class ComponentTooSmall(ParseError):
    pass


class AmbiguousHead(ParseError):
    pass


class DegenerateArrow(ParseError):
    pass


class NotAnnular(ParseError):
    pass


# planning ------------------------------------------------------------------

class PlanError(SketchPlanError):
    stage = "plan"


class EmptySymbolSet(PlanError):
    pass


class MissingStepColor(PlanError):
    pass


class UnsupportedSymbolCombination(PlanError):
    pass


class PlannerTimeout(PlanError):
    pass


class PlannerUnreachable(PlanError):
    pass


class SchemaViolation(PlanError):
    pass


# lifting -------------------------------------------------------------------

class LiftError(SketchPlanError):
    stage = "lift"


class DepthUnavailable(LiftError):
    pass


class BehindCamera(LiftError):
    pass


# policy --------------------------------------------------------------------

class PolicyError(SketchPlanError):
    stage = "policy"


class DegenerateRadius(PolicyError):
    pass


class TickBudgetExhausted(PolicyError):
    pass


class PlanExecutionError(PolicyError):
    """Wraps a failure with the ordinal of the step that caused it."""

    def __init__(self, step_ordinal, cause):
        super().__init__(f"step {step_ordinal}: {cause}")
        self.step_ordinal = step_ordinal
        self.cause = cause

    @property
    def stage(self):  # type: ignore[override]
        return getattr(self.cause, "stage", "policy")


# simulator -----------------------------------------------------------------

class SimError(SketchPlanError):
    stage = "sim"


class SceneFormatError(SimError):
    pass


class NothingToGrasp(SimError):
    pass


class AlreadyHolding(SimError):
    pass


class NotHolding(SimError):
    pass


# dataset generation --------------------------------------------------------

class DatagenError(SketchPlanError):
    stage = "datagen"


class SymbolOutOfBounds(DatagenError):
    pass


# evaluation ----------------------------------------------------------------

class EvalError(SketchPlanError):
    stage = "eval"


class EmptyGroundTruth(EvalError):
    pass


class UnpairedVariants(EvalError):
    pass
