"""
Pydantic schemas for run configuration, reports and scheme descriptors.
"""

from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, model_validator

from .errors import DomainError
from .optics import Checkpoint, Network, OpticalElement, element_from_params
from .schemes import SCHEMES, CoincidenceTable, SchemeDescriptor
from .synthesis import MAX_ORACLE_CONTROLS


class Command(str, Enum):
    verify = "verify"
    optics = "optics"
    table1 = "table1"
    cost = "cost"
    describe = "describe"


class OutputFormat(str, Enum):
    json = "json"
    csv = "csv"
    text = "text"


# ==================== Run Configuration ====================

class RunConfig(BaseModel):
    """Validated options of one CLI invocation."""
    command: Command
    gate: Optional[str] = None
    scheme: Optional[str] = None
    controls: Optional[int] = None
    input: Optional[str] = None
    seed: Optional[int] = None
    qubits: Optional[int] = None
    feed_forward: bool = True
    format: OutputFormat = OutputFormat.json
    out: Optional[Path] = None
    timing: bool = False
    record: bool = False

    @model_validator(mode="after")
    def check_selector(self):
        if self.command == Command.verify:
            if self.gate not in ("cnot", "toffoli"):
                raise ValueError(f"--gate must be cnot or toffoli, got {self.gate!r}")
            if self.gate == "toffoli" and (self.controls is None or self.controls < 2):
                raise ValueError(f"--controls must be at least 2 for toffoli, got {self.controls}")
            if self.gate == "toffoli" and self.controls > MAX_ORACLE_CONTROLS:
                raise ValueError(f"--controls must be at most {MAX_ORACLE_CONTROLS}, got {self.controls}")
        elif self.command in (Command.optics, Command.describe):
            if self.scheme not in SCHEMES:
                raise ValueError(f"--scheme must be one of {sorted(SCHEMES)}, got {self.scheme!r}")
        elif self.command == Command.table1:
            if self.scheme != "pswap":
                raise ValueError(f"coincidence tables exist for the pswap scheme only, got {self.scheme!r}")
        elif self.command == Command.cost:
            if self.qubits is None or self.qubits < 3:
                raise ValueError(f"--qubits must be at least 3, got {self.qubits}")
        if self.input == "random" and self.seed is None:
            raise ValueError("--seed is required with --input random")
        return self

    def arguments(self) -> Dict[str, Any]:
        """Echo of the options that determine the report contents."""
        return self.model_dump(mode="json", exclude={"out", "record", "timing"}, exclude_none=True)


# ==================== Reports ====================

class CheckResult(BaseModel):
    """One measured value against its expectation."""
    name: str
    passed: bool
    measured: Optional[float] = None
    expected: Optional[float] = None
    tolerance: Optional[float] = None
    exact: Optional[str] = None
    detail: Optional[str] = None


class Report(BaseModel):
    command: str
    arguments: Dict[str, Any] = {}
    status: Literal["pass", "fail"]
    checks: List[CheckResult] = []
    values: Dict[str, Any] = {}
    duration_seconds: Optional[float] = None

    @model_validator(mode="after")
    def status_matches_checks(self):
        expected = "pass" if all(c.passed for c in self.checks) else "fail"
        if self.status != expected:
            raise ValueError(f"status {self.status!r} disagrees with checks ({expected!r})")
        return self

    @classmethod
    def from_checks(
        cls,
        command: str,
        arguments: Dict[str, Any],
        checks: List[CheckResult],
        values: Optional[Dict[str, Any]] = None,
    ) -> "Report":
        status = "pass" if all(c.passed for c in checks) else "fail"
        return cls(command=command, arguments=arguments, status=status, checks=checks, values=values or {})

    @property
    def passed(self) -> bool:
        return self.status == "pass"


class RunSummary(BaseModel):
    """Ledger row as listed by the runs command."""
    id: int
    command: str
    status: str
    arguments: Optional[Dict[str, Any]] = None
    created_at: Optional[datetime] = None

    class Config:
        from_attributes = True


# ==================== Coincidence Table ====================

class CoincidenceTableSchema(BaseModel):
    inputs: List[str]
    columns: List[str]
    signed: List[List[float]]
    corrected: List[List[float]]

    @classmethod
    def from_table(cls, table: CoincidenceTable) -> "CoincidenceTableSchema":
        return cls(
            inputs=list(table.inputs),
            columns=list(table.columns),
            signed=table.signed.tolist(),
            corrected=table.corrected.tolist(),
        )


# ==================== Networks ====================

class ElementSchema(BaseModel):
    kind: str
    params: Dict[str, Any]

    @classmethod
    def from_element(cls, element: OpticalElement) -> "ElementSchema":
        return cls(kind=element.kind, params=element.params())

    def to_element(self) -> OpticalElement:
        return element_from_params(self.kind, self.params)


class CheckpointSchema(BaseModel):
    """Named snapshot taken after the first ``after`` elements."""
    name: str
    after: int


class NetworkSchema(BaseModel):
    ports: List[str]
    modes: List[str]
    elements: List[ElementSchema]
    checkpoints: List[CheckpointSchema] = []

    @classmethod
    def from_network(cls, net: Network) -> "NetworkSchema":
        elements, checkpoints = [], []
        for step in net.steps:
            if isinstance(step, Checkpoint):
                checkpoints.append(CheckpointSchema(name=step.name, after=len(elements)))
            else:
                elements.append(ElementSchema.from_element(step))
        return cls(
            ports=list(net.ports),
            modes=[str(m) for m in net.registry.modes],
            elements=elements,
            checkpoints=checkpoints,
        )

    def to_network(self) -> Network:
        # 1. Interleave checkpoints back between the elements
        marks: Dict[int, List[str]] = {}
        for mark in self.checkpoints:
            marks.setdefault(mark.after, []).append(mark.name)
        steps = []
        for position, element in enumerate(self.elements):
            steps.extend(Checkpoint(name) for name in marks.get(position, []))
            steps.append(element.to_element())
        steps.extend(Checkpoint(name) for name in marks.get(len(self.elements), []))
        net = Network(tuple(steps), tuple(self.ports))

        # 2. The declared modes must be the ones the network registers
        if self.modes and [str(m) for m in net.registry.modes] != self.modes:
            raise DomainError("declared modes do not match the network's rails")
        return net


# ==================== Scheme Descriptors ====================

class BranchSchema(BaseModel):
    label: str
    slots: List[List[str]]
    recombine: List[ElementSchema] = []
    feed_forward: List[ElementSchema] = []
    routes: Dict[str, str] = {}


class StageSchema(BaseModel):
    name: str
    network: NetworkSchema
    branches: List[BranchSchema]


class EncodingSchema(BaseModel):
    dims: List[int]
    output_dims: List[int]
    encode: List[Dict[str, str]]
    decode: Dict[str, List[Dict[str, int]]]


class SchemeSchema(BaseModel):
    name: str
    expected_success: str
    stages: List[StageSchema]
    encoding: EncodingSchema

    @classmethod
    def from_descriptor(cls, scheme: SchemeDescriptor) -> "SchemeSchema":
        stages = []
        for stage in scheme.stages:
            branches = [
                BranchSchema(
                    label=branch.label,
                    slots=[sorted(str(m) for m in slot) for slot in branch.slots],
                    recombine=[ElementSchema.from_element(e) for e in branch.recombine],
                    feed_forward=[ElementSchema.from_element(e) for e in stage.feed_forward.for_branch(branch.label)],
                    routes={
                        str(src): str(dst)
                        for src, dst in sorted(stage.routes.get(branch.label, {}).items())
                    },
                )
                for branch in stage.post_selection.branches
            ]
            stages.append(StageSchema(name=stage.name, network=NetworkSchema.from_network(stage.network), branches=branches))
        enc = scheme.encoding
        encoding = EncodingSchema(
            dims=list(enc.dims),
            output_dims=list(enc.output_dims),
            encode=[{str(level): str(mode) for level, mode in sorted(table.items())} for table in enc.encode],
            decode={
                label: [{str(mode): level for mode, level in sorted(table.items())} for table in tables]
                for label, tables in enc.decode.items()
            },
        )
        return cls(
            name=scheme.name,
            expected_success=str(scheme.expected_success),
            stages=stages,
            encoding=encoding,
        )
