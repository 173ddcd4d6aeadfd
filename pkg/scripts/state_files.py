#!/usr/bin/env python3
"""
State, channel and report files.

StateFiles and ChannelFiles are strict, versioned YAML documents; matrices are
row-major lists of [re, im] pairs. Verification reports are written as a JSON
document with a key-value text twin next to it.
"""

import json
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from entropy_lib import ContractViolation, EntropyConfig, EntropyLogger, StateFileError
from quantum import Channel, State, SystemLayout

_log = EntropyLogger("smooth_entropy.files")

STATE_KEYS = {"format_version", "kind", "layout", "matrix", "comment"}
STATE_REQUIRED = {"format_version", "layout", "matrix"}
CHANNEL_KEYS = {"format_version", "kind", "input_layout", "output_layout", "trace_preserving", "kraus", "comment"}
CHANNEL_REQUIRED = {"format_version", "kind", "input_layout", "output_layout", "kraus"}


# =============================================================================
# MATRIX AND LAYOUT ENCODING
# =============================================================================

def encode_matrix(m: np.ndarray) -> List[List[List[float]]]:
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _decode_matrix(raw: Any, shape: Tuple[int, int], where: str, errors: List[str]) -> Optional[np.ndarray]:
    rows, cols = shape
    if not isinstance(raw, list) or len(raw) != rows:
        errors.append(f"{where}: expected {rows} rows")
        return None
    out = np.zeros(shape, dtype=np.complex128)
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != cols:
            errors.append(f"{where}: row {i} must have {cols} entries")
            return None
        for j, entry in enumerate(row):
            if (not isinstance(entry, list) or len(entry) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)):
                errors.append(f"{where}[{i}][{j}]: entries must be [re, im] number pairs")
                return None
            out[i, j] = complex(entry[0], entry[1])
    if not np.all(np.isfinite(out)):
        errors.append(f"{where}: non-finite entries")
        return None
    return out


def encode_layout(layout: SystemLayout) -> List[Dict[str, Any]]:
    return [{"label": label, "dim": dim} for label, dim in layout.factors]


def _decode_layout(raw: Any, where: str, errors: List[str]) -> Optional[SystemLayout]:
    if not isinstance(raw, list) or not raw:
        errors.append(f"{where}: must be a non-empty list of {{label, dim}}")
        return None
    pairs = []
    for i, factor in enumerate(raw):
        if not isinstance(factor, dict) or set(factor) != {"label", "dim"}:
            errors.append(f"{where}[{i}]: factor must have exactly the keys label and dim")
            return None
        if not isinstance(factor["dim"], int) or isinstance(factor["dim"], bool):
            errors.append(f"{where}[{i}]: dim must be an integer")
            return None
        pairs.append((str(factor["label"]), factor["dim"]))
    try:
        return SystemLayout(tuple(pairs))
    except ContractViolation as e:
        errors.append(f"{where}: {e.message}")
        return None


def _check_header(data: Any, allowed: set, required: set, kind: str, errors: List[str]) -> bool:
    if not isinstance(data, dict):
        errors.append("document must be a mapping")
        return False
    unknown = sorted(set(data) - allowed)
    if unknown:
        errors.append(f"unknown keys: {', '.join(unknown)}")
    missing = sorted(required - set(data))
    if missing:
        errors.append(f"missing keys: {', '.join(missing)}")
    version = data.get("format_version")
    if version != EntropyConfig.STATE_FILE_VERSION:
        errors.append(f"format_version must be {EntropyConfig.STATE_FILE_VERSION}, got {version!r}")
    if data.get("kind", kind) != kind:
        errors.append(f"kind must be {kind!r}, got {data.get('kind')!r}")
    if "comment" in data and not isinstance(data["comment"], str):
        errors.append("comment must be a string")
    return not missing


# =============================================================================
# STATE FILES
# =============================================================================

@dataclass(frozen=True)
class StateFile:
    layout: SystemLayout
    matrix: np.ndarray
    comment: Optional[str] = None

    @classmethod
    def from_state(cls, state: State, comment: Optional[str] = None) -> "StateFile":
        return cls(state.layout, state.matrix, comment)

    def to_state(self) -> State:
        """Applies the State invariants; violations name the failing invariant"""
        try:
            return State(self.layout, self.matrix)
        except ContractViolation as e:
            raise StateFileError(f"matrix violates state invariant: {e.message}") from e

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "format_version": EntropyConfig.STATE_FILE_VERSION,
            "kind": "state",
            "layout": encode_layout(self.layout),
            "matrix": encode_matrix(self.matrix),
        }
        if self.comment:
            data["comment"] = self.comment
        return data


def validate_state_data(data: Any) -> Tuple[bool, List[str]]:
    """Check a parsed StateFile document; returns (ok, errors)"""
    errors: List[str] = []
    if not _check_header(data, STATE_KEYS, STATE_REQUIRED, "state", errors):
        return False, errors
    layout = _decode_layout(data["layout"], "layout", errors)
    if layout is not None:
        n = layout.total_dim
        _decode_matrix(data["matrix"], (n, n), "matrix", errors)
    return not errors, errors


def parse_state(data: Any) -> StateFile:
    ok, errors = validate_state_data(data)
    if not ok:
        raise StateFileError("; ".join(errors), errors=errors)
    layout = _decode_layout(data["layout"], "layout", [])
    matrix = _decode_matrix(data["matrix"], (layout.total_dim, layout.total_dim), "matrix", [])
    return StateFile(layout, matrix, data.get("comment"))


# =============================================================================
# CHANNEL FILES
# =============================================================================

@dataclass(frozen=True)
class ChannelFile:
    input_layout: SystemLayout
    output_layout: SystemLayout
    kraus: Tuple[np.ndarray, ...]
    trace_preserving: bool = True
    comment: Optional[str] = None

    @classmethod
    def from_channel(cls, channel: Channel, comment: Optional[str] = None) -> "ChannelFile":
        return cls(channel.input_layout, channel.output_layout, channel.kraus, channel.trace_preserving, comment)

    def to_channel(self) -> Channel:
        try:
            return Channel(self.input_layout, self.output_layout, tuple(self.kraus), self.trace_preserving)
        except ContractViolation as e:
            raise StateFileError(f"kraus operators violate channel invariant: {e.message}") from e

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "format_version": EntropyConfig.STATE_FILE_VERSION,
            "kind": "channel",
            "input_layout": encode_layout(self.input_layout),
            "output_layout": encode_layout(self.output_layout),
            "trace_preserving": bool(self.trace_preserving),
            "kraus": [encode_matrix(k) for k in self.kraus],
        }
        if self.comment:
            data["comment"] = self.comment
        return data


def validate_channel_data(data: Any) -> Tuple[bool, List[str]]:
    errors: List[str] = []
    if not _check_header(data, CHANNEL_KEYS, CHANNEL_REQUIRED, "channel", errors):
        return False, errors
    source = _decode_layout(data["input_layout"], "input_layout", errors)
    target = _decode_layout(data["output_layout"], "output_layout", errors)
    if not isinstance(data.get("trace_preserving", True), bool):
        errors.append("trace_preserving must be a boolean")
    kraus = data["kraus"]
    if not isinstance(kraus, list) or not kraus:
        errors.append("kraus: must be a non-empty list of matrices")
    elif source is not None and target is not None:
        for i, k in enumerate(kraus):
            _decode_matrix(k, (target.total_dim, source.total_dim), f"kraus[{i}]", errors)
    return not errors, errors


def parse_channel(data: Any) -> ChannelFile:
    ok, errors = validate_channel_data(data)
    if not ok:
        raise StateFileError("; ".join(errors), errors=errors)
    source = _decode_layout(data["input_layout"], "input_layout", [])
    target = _decode_layout(data["output_layout"], "output_layout", [])
    shape = (target.total_dim, source.total_dim)
    kraus = tuple(_decode_matrix(k, shape, "kraus", []) for k in data["kraus"])
    return ChannelFile(source, target, kraus, data.get("trace_preserving", True), data.get("comment"))


# =============================================================================
# FILE I/O
# =============================================================================

def read_yaml_file(path: str) -> Any:
    if not os.path.exists(path):
        raise StateFileError(f"{path}: no such file")
    try:
        with open(path, "r") as f:
            return yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise StateFileError(f"{path}: not valid YAML ({e})") from e


def write_yaml_file(path: str, data: Dict[str, Any]) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(data, f, default_flow_style=None, sort_keys=False)
    _log.debug(f"wrote {path}")
    return path


def load_state(path: str) -> State:
    try:
        return parse_state(read_yaml_file(path)).to_state()
    except StateFileError as e:
        raise StateFileError(f"{path}: {e.message}", **e.details) from e


def save_state(state: State, path: str, comment: Optional[str] = None) -> str:
    return write_yaml_file(path, StateFile.from_state(state, comment).to_dict())


def load_channel(path: str) -> Channel:
    try:
        return parse_channel(read_yaml_file(path)).to_channel()
    except StateFileError as e:
        raise StateFileError(f"{path}: {e.message}", **e.details) from e


def save_channel(channel: Channel, path: str, comment: Optional[str] = None) -> str:
    return write_yaml_file(path, ChannelFile.from_channel(channel, comment).to_dict())


def load_any(path: str) -> Union[State, Channel]:
    """State or channel, by the document's ``kind`` (default state)"""
    data = read_yaml_file(path)
    if isinstance(data, dict) and data.get("kind") == "channel":
        return load_channel(path)
    return load_state(path)


# =============================================================================
# REPORTS
# =============================================================================

def report_document(reports: Sequence[Any], include_timing: bool = True) -> Dict[str, Any]:
    """JSON body for a list of VerificationReport objects"""
    return {
        "format_version": EntropyConfig.REPORT_FORMAT_VERSION,
        "passed": all(r.passed for r in reports),
        "failures": sum(r.failures for r in reports),
        "sdp_failures": sum(r.sdp_failures for r in reports),
        "reports": [r.to_dict(include_timing) for r in reports],
    }


def text_report_path(json_path: str) -> str:
    root, ext = os.path.splitext(json_path)
    return (root if ext.lower() == ".json" else json_path) + ".txt"


def write_reports(reports: Sequence[Any], path: str, include_timing: bool = True) -> Tuple[str, str]:
    """Write the JSON report to ``path`` and the text form next to it"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as f:
        json.dump(report_document(reports, include_timing), f, indent=2, sort_keys=True)
        f.write("\n")
    text_path = text_report_path(path)
    with open(text_path, "w") as f:
        f.write(f"format_version={EntropyConfig.REPORT_FORMAT_VERSION}\n")
        for report in reports:
            f.write("\n")
            f.write(report.to_text(include_timing))
    return path, text_path
