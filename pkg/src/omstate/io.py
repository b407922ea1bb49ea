"""File formats: scenario files, outer-measure files, trajectory/diagnostic CSV.

Scenario files are sectioned text: a [meta] section, an optional [carrier]
for finite state spaces, a [prior] section, per-step [transition t] and
[observation t] sections, and an optional [dynamics] section holding
ground-truth linear-Gaussian parameters for simulation.  All matrices are
row-major, full round-trip decimal precision.
"""

from __future__ import annotations

import os
import re

import numpy as np

from .errors import ValidationError
from .gaussian import GaussianTransition
from .model import (
    GridTransition,
    IndicatorTransition,
    LinearGaussianDynamics,
    LinearGaussianKernel,
    MarkovKernel,
    ObservedInfo,
    Scenario,
    Trajectory,
    vacuous_observation,
)
from .outer_measure import FiniteOuterMeasure
from .possibility import from_record, to_record

_SECTION_RE = re.compile(r"^\[([a-z\-]+)(?:\s+(\d+))?\]$")


def _fmt(values):
    return " ".join(format(float(v), ".17g") for v in np.asarray(values).ravel())


def _parse_floats(tokens, lineno, expected=None):
    try:
        arr = np.array(tokens, dtype=float)
    except ValueError as exc:
        raise ValidationError(f"line {lineno}: expected numbers, got {tokens}") from exc
    if expected is not None and arr.size != expected:
        raise ValidationError(
            f"line {lineno}: expected {expected} numbers, got {arr.size}"
        )
    return arr


def _split_sections(text):
    sections = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            current = (m.group(1), None if m.group(2) is None else int(m.group(2)), [])
            sections.append(current)
        else:
            if current is None:
                raise ValidationError(f"line {lineno}: content before any section header")
            current[2].append((lineno, line))
    return sections


def _meta_value(lines, key, lineno_hint=0, required=True, default=None):
    for lineno, line in lines:
        parts = line.split(None, 1)
        if parts[0] == key:
            return parts[1] if len(parts) > 1 else ""
    if required:
        raise ValidationError(f"missing meta key {key!r}")
    return default


def _parse_matrix_line(lines, key, rows, cols):
    for lineno, line in lines:
        parts = line.split()
        if parts[0] == key:
            arr = _parse_floats(parts[1:], lineno, rows * cols)
            return arr.reshape(rows, cols)
    raise ValidationError(f"missing matrix {key!r}")


def _parse_transition(kind, lineno, tokens, carrier):
    if kind == "gaussian":
        d = int(tokens[0])
        nums = _parse_floats(tokens[1:], lineno, 2 * d * d)
        return GaussianTransition(nums[: d * d].reshape(d, d), nums[d * d :].reshape(d, d))
    if carrier is None:
        raise ValidationError(f"line {lineno}: {kind} transition needs a [carrier]")
    n = carrier.shape[0]
    nums = _parse_floats(tokens, lineno, n * n)
    mat = nums.reshape(n, n)
    if kind == "grid":
        return GridTransition(carrier, mat)
    if kind == "indicator":
        return IndicatorTransition(carrier, mat > 0.5)
    if kind == "markov":
        return MarkovKernel(carrier, mat)
    raise ValidationError(f"line {lineno}: unknown transition kind {kind!r}")


def _record_at(tokens, lineno):
    try:
        return from_record(" ".join(tokens))
    except ValidationError as exc:
        raise ValidationError(f"line {lineno}: {exc}") from exc


def _parse_observation(lines, carrier):
    obs_map = None
    atoms = []
    for lineno, line in lines:
        parts = line.split()
        if parts[0] == "map":
            if parts[1] == "identity":
                obs_map = None
            elif parts[1] == "linear":
                k, d = int(parts[2]), int(parts[3])
                obs_map = _parse_floats(parts[4:], lineno, k * d).reshape(k, d)
            elif parts[1] == "table":
                try:
                    obs_map = np.array(parts[2:], dtype=int)
                except ValueError as exc:
                    raise ValidationError(
                        f"line {lineno}: table entries must be integers"
                    ) from exc
            else:
                raise ValidationError(f"line {lineno}: unknown map kind {parts[1]!r}")
        elif parts[0] == "atom":
            try:
                w = float(parts[1])
            except ValueError as exc:
                raise ValidationError(f"line {lineno}: bad atom weight") from exc
            atoms.append((w, _record_at(parts[2:], lineno)))
        else:
            raise ValidationError(f"line {lineno}: unexpected observation entry {parts[0]!r}")
    if not atoms:
        raise ValidationError("observation section has no atoms")
    return ObservedInfo(atoms, obs_map=obs_map)


def _parse_dynamics(lines):
    d = int(_meta_value(lines, "state_dim"))
    k = int(_meta_value(lines, "obs_dim"))
    F = _parse_matrix_line(lines, "F", d, d)
    Q = _parse_matrix_line(lines, "Q", d, d)
    x0 = _parse_matrix_line(lines, "x0", 1, d).ravel()
    O = _parse_matrix_line(lines, "O", k, d)
    try:
        R = _parse_matrix_line(lines, "R", k, k)
    except ValidationError:
        R = None
    return LinearGaussianDynamics(F=F, Q=Q, x0=x0, O=O, R=R)


def parse_scenario(text) -> Scenario:
    sections = _split_sections(text)
    by_name = {}
    for name, index, lines in sections:
        by_name.setdefault(name, {})[index] = lines

    if "meta" not in by_name:
        raise ValidationError("scenario file has no [meta] section")
    meta = by_name["meta"][None]
    horizon = int(_meta_value(meta, "horizon"))
    seed = int(_meta_value(meta, "seed", required=False, default="0"))

    carrier = None
    if "carrier" in by_name:
        lines = by_name["carrier"][None]
        lineno, header = lines[0]
        parts = header.split()
        if parts[0] != "points":
            raise ValidationError(f"line {lineno}: carrier must start with 'points n d'")
        n, d = int(parts[1]), int(parts[2])
        nums = []
        for lineno, line in lines[1:]:
            nums.extend(line.split())
        carrier = _parse_floats(nums, lineno, n * d).reshape(n, d)

    if "prior" not in by_name:
        raise ValidationError("scenario file has no [prior] section")
    prior_atoms = []
    for lineno, line in by_name["prior"][None]:
        parts = line.split()
        if parts[0] != "atom":
            raise ValidationError(f"line {lineno}: prior entries must start with 'atom'")
        prior_atoms.append((float(parts[1]), _record_at(parts[2:], lineno)))
    prior = FiniteOuterMeasure(prior_atoms)

    transitions = []
    for t in range(1, horizon + 1):
        if "transition" not in by_name or t not in by_name["transition"]:
            raise ValidationError(f"missing [transition {t}] section")
        lines = by_name["transition"][t]
        lineno, line = lines[0]
        parts = line.split()
        transitions.append(_parse_transition(parts[0], lineno, parts[1:], carrier))

    dynamics = _parse_dynamics(by_name["dynamics"][None]) if "dynamics" in by_name else None

    observations = []
    for t in range(horizon + 1):
        if "observation" in by_name and t in by_name["observation"]:
            observations.append(_parse_observation(by_name["observation"][t], carrier))
        else:
            observations.append(vacuous_observation(prior.dim))

    return Scenario(
        horizon=horizon,
        prior=prior,
        transitions=transitions,
        observations=observations,
        rng_seed=seed,
        dynamics=dynamics,
    )


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return parse_scenario(fh.read())


# ---------------------------------------------------------------------------
# outer-measure files


def write_outer_measure(P: FiniteOuterMeasure, path):
    lines = [f"dim {P.dim}", f"atoms {len(P)}"]
    for w, f in P.atoms:
        lines.append(f"{format(w, '.17g')} {to_record(f)}")
    _atomic_write(path, "\n".join(lines) + "\n")


def parse_outer_measure(text) -> FiniteOuterMeasure:
    lines = [l.split("#", 1)[0].strip() for l in text.splitlines()]
    lines = [l for l in lines if l]
    if len(lines) < 3:
        raise ValidationError("outer-measure file too short")
    if not lines[0].startswith("dim ") or not lines[1].startswith("atoms "):
        raise ValidationError("outer-measure file must start with dim/atoms header")
    count = int(lines[1].split()[1])
    atoms = []
    for line in lines[2 : 2 + count]:
        parts = line.split(None, 1)
        atoms.append((float(parts[0]), from_record(parts[1])))
    if len(atoms) != count:
        raise ValidationError("outer-measure file atom count mismatch")
    return FiniteOuterMeasure(atoms)


def load_outer_measure(path) -> FiniteOuterMeasure:
    with open(path) as fh:
        return parse_outer_measure(fh.read())


# ---------------------------------------------------------------------------
# CSV output


def _atomic_write(path, content):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(content)
    os.replace(tmp, path)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(
                format(float(v), ".17g") if not isinstance(v, (int, np.integer)) else str(v)
                for v in row
            )
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def write_trajectory(traj: Trajectory, path):
    d = len(traj.states[0])
    k = len(traj.observations[0])
    header = ["t"] + [f"x_{i+1}" for i in range(d)] + [f"y_{i+1}" for i in range(k)]
    rows = [
        [t, *traj.states[t], *traj.observations[t]] for t in range(len(traj.states))
    ]
    write_csv(path, header, rows)
