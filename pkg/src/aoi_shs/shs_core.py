"""Generic solver for finite Markov chains carrying linearly-reset age vectors.

A model couples a finite continuous-time Markov chain with a vector of age
components. Inside a state, each component either grows at unit rate or stays
frozen (binary slope). Every transition applies a linear reset map, read in
row-vector convention ``x_new = x_old @ A``: column ``j`` of ``A`` selects the
single pre-transition component copied into post-transition component ``j``,
or is all zero if that component restarts from 0.

Two dense linear solves extract the long-run behaviour:

* the stationary distribution of the discrete chain, from the global balance
  equations plus normalization, and
* the stationary state-conditioned age expectations ("correlation vectors"),
  from the coupled linear system those reset maps induce.

Summing a correlation component over all states gives the long-run time
average of that age process; component 0 is conventionally the monitor age.

All functions are pure and the returned arrays are read-only, so values can
be shared freely across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

#: Solves whose 2-norm condition estimate exceeds this are rejected; a huge
#: condition number almost always means a structurally broken chain (for
#: example an age component that is never reset) rather than a hard instance.
CONDITION_LIMIT = 1e12

#: Residual ceilings, roughly 100x double round-off for systems of this size.
BALANCE_RESIDUAL_TOL = 1e-10
CORRELATION_RESIDUAL_TOL = 1e-10
NORMALIZATION_TOL = 1e-12

_TINY_NEGATIVE = -1e-12


class IllConditionedSystemError(RuntimeError):
    """A balance or correlation system is numerically singular."""


def _read_only(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TransitionSpec:
    """One chain transition: source, destination, rate, and age reset map."""

    from_state: int
    to_state: int
    rate: float
    reset_map: np.ndarray


@dataclass(frozen=True)
class ShsModel:
    """Validated chain description; construct through :func:`build_model`."""

    num_states: int
    num_components: int
    transitions: tuple[TransitionSpec, ...]
    slopes: np.ndarray


@dataclass(frozen=True)
class StationaryDistribution:
    """Per-state long-run probabilities of the discrete chain."""

    probs: np.ndarray


@dataclass(frozen=True)
class CorrelationVectors:
    """Per-state stationary age expectations, shape (num_states, num_components).

    Row ``q`` is the expectation of the age vector restricted to state ``q``;
    summing a column over all states yields that component's time average.
    """

    vectors: np.ndarray


def build_model(num_states, num_components, transitions, slopes) -> ShsModel:
    """Assemble and validate a model.

    ``transitions`` may hold :class:`TransitionSpec` instances or plain
    ``(from_state, to_state, rate, reset_map)`` tuples. Raises ``ValueError``
    naming the offending transition or state on any violation: nonpositive or
    non-finite rates, out-of-range state indices, reset-map columns that are
    not "zero or copy exactly one component", non-binary slopes, or a chain
    that is not strongly connected.
    """
    num_states = int(num_states)
    num_components = int(num_components)
    if num_states < 1:
        raise ValueError(f"num_states must be >= 1, got {num_states}")
    if num_components < 1:
        raise ValueError(f"num_components must be >= 1, got {num_components}")

    specs: list[TransitionSpec] = []
    for idx, item in enumerate(transitions):
        if isinstance(item, TransitionSpec):
            frm, to, rate, amap = item.from_state, item.to_state, item.rate, item.reset_map
        else:
            frm, to, rate, amap = item
        frm = int(frm)
        to = int(to)
        rate = float(rate)
        for label, state in (("from_state", frm), ("to_state", to)):
            if not 0 <= state < num_states:
                raise ValueError(
                    f"transition {idx}: {label} {state} out of range [0, {num_states})"
                )
        if not np.isfinite(rate) or rate <= 0.0:
            raise ValueError(f"transition {idx} ({frm}->{to}): nonpositive rate {rate}")
        amap = np.array(amap, dtype=float)
        if amap.shape != (num_components, num_components):
            raise ValueError(
                f"transition {idx}: reset_map shape {amap.shape} != "
                f"({num_components}, {num_components})"
            )
        if not np.isin(amap, (0.0, 1.0)).all():
            raise ValueError(f"transition {idx}: reset_map entries must be 0 or 1")
        col_counts = amap.sum(axis=0)
        if (col_counts > 1).any():
            bad = int(np.argmax(col_counts > 1))
            raise ValueError(
                f"transition {idx}: reset_map column {bad} has "
                f"{int(col_counts[bad])} nonzero entries; at most one allowed"
            )
        amap.setflags(write=False)
        specs.append(TransitionSpec(frm, to, rate, amap))

    slopes = np.array(slopes, dtype=float)
    if slopes.shape != (num_states, num_components):
        raise ValueError(
            f"slopes shape {slopes.shape} != ({num_states}, {num_components})"
        )
    if not np.isin(slopes, (0.0, 1.0)).all():
        bad = int(np.argwhere(~np.isin(slopes, (0.0, 1.0)))[0][0])
        raise ValueError(f"slope entries must be 0 or 1 (state {bad})")
    slopes.setflags(write=False)

    _check_irreducible(num_states, specs)
    return ShsModel(num_states, num_components, tuple(specs), slopes)


def _check_irreducible(num_states: int, specs: list[TransitionSpec]) -> None:
    if num_states == 1:
        return
    forward: list[list[int]] = [[] for _ in range(num_states)]
    backward: list[list[int]] = [[] for _ in range(num_states)]
    for t in specs:
        forward[t.from_state].append(t.to_state)
        backward[t.to_state].append(t.from_state)
    for graph, direction in ((forward, "from"), (backward, "to")):
        seen = {0}
        stack = [0]
        while stack:
            for nxt in graph[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if len(seen) != num_states:
            missing = min(set(range(num_states)) - seen)
            if direction == "from":
                raise ValueError(
                    f"chain is not irreducible: state {missing} unreachable from state 0"
                )
            raise ValueError(
                f"chain is not irreducible: state 0 unreachable from state {missing}"
            )


def _outgoing_rates(model: ShsModel) -> np.ndarray:
    out = np.zeros(model.num_states)
    for t in model.transitions:
        out[t.from_state] += t.rate
    return out


def _guard_condition(matrix: np.ndarray, label: str) -> None:
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise IllConditionedSystemError(
            f"{label} system is ill-conditioned "
            f"(condition estimate {cond:.3e} exceeds {CONDITION_LIMIT:.0e})"
        )


def solve_stationary(model: ShsModel) -> StationaryDistribution:
    """Solve global balance plus normalization for the stationary distribution.

    The balance equations are rank-deficient by one for an irreducible chain,
    so the last balance row is replaced by the normalization constraint and
    the system is solved by dense LU with partial pivoting. The full set of
    balance residuals is re-checked afterwards.
    """
    n = model.num_states
    balance = np.zeros((n, n))
    for t in model.transitions:
        balance[t.from_state, t.from_state] += t.rate
        balance[t.to_state, t.from_state] -= t.rate

    system = balance.copy()
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    _guard_condition(system, "stationary balance")
    probs = np.linalg.solve(system, rhs)

    residual = np.abs(balance @ probs).max()
    if residual > BALANCE_RESIDUAL_TOL:
        raise IllConditionedSystemError(
            f"stationary solve left balance residual {residual:.3e} "
            f"above {BALANCE_RESIDUAL_TOL:.0e}"
        )
    if probs.min() < _TINY_NEGATIVE:
        raise IllConditionedSystemError(
            f"stationary solve produced negative probability {probs.min():.3e}"
        )
    probs[probs < 0.0] = 0.0
    if abs(probs.sum() - 1.0) > NORMALIZATION_TOL:
        raise IllConditionedSystemError(
            f"stationary probabilities sum to {probs.sum()!r}, not 1"
        )
    return StationaryDistribution(probs=_read_only(probs))


def solve_correlation(model: ShsModel, pi: StationaryDistribution) -> CorrelationVectors:
    """Solve for the stationary state-conditioned age expectations.

    All per-state vectors are stacked into one unknown of length
    ``num_states * num_components`` and the coupled equations

        v_q * (total outgoing rate of q)
            = slope_q * pi_q + sum over incoming transitions of rate * (v_src @ A)

    are solved as a single dense system. Nonnegativity of the solution is
    verified a posteriori rather than assumed.
    """
    n, c = model.num_states, model.num_components
    size = n * c
    out_rates = _outgoing_rates(model)

    system = np.zeros((size, size))
    system[np.arange(size), np.arange(size)] = np.repeat(out_rates, c)
    for t in model.transitions:
        rows = slice(t.to_state * c, (t.to_state + 1) * c)
        cols = slice(t.from_state * c, (t.from_state + 1) * c)
        # (v_src @ A)[j] = sum_i v_src[i] A[i, j], hence the transpose
        system[rows, cols] -= t.rate * t.reset_map.T
    rhs = (model.slopes * pi.probs[:, None]).ravel()

    _guard_condition(system, "correlation")
    stacked = np.linalg.solve(system, rhs)

    residual = np.abs(system @ stacked - rhs).max()
    if residual > CORRELATION_RESIDUAL_TOL:
        raise IllConditionedSystemError(
            f"correlation solve left residual {residual:.3e} "
            f"above {CORRELATION_RESIDUAL_TOL:.0e}"
        )
    scale = max(1.0, float(np.abs(stacked).max()))
    if stacked.min() < _TINY_NEGATIVE * scale:
        raise IllConditionedSystemError(
            f"correlation solve produced negative expectation {stacked.min():.3e}; "
            "the chain likely has an age component that can drift without reset"
        )
    stacked[stacked < 0.0] = 0.0
    return CorrelationVectors(vectors=_read_only(stacked.reshape(n, c)))


def average_age(v: CorrelationVectors, component: int = 0) -> float:
    """Long-run time average of one age component: the column sum over states."""
    num_components = v.vectors.shape[1]
    if not 0 <= component < num_components:
        raise IndexError(
            f"component {component} out of range [0, {num_components})"
        )
    return float(v.vectors[:, component].sum())


def model_to_json(model: ShsModel) -> str:
    """Serialize a model to the documented JSON schema (see README)."""
    doc = {
        "num_states": model.num_states,
        "num_components": model.num_components,
        "transitions": [
            {
                "from_state": t.from_state,
                "to_state": t.to_state,
                "rate": t.rate,
                "reset_map": t.reset_map.astype(int).tolist(),
            }
            for t in model.transitions
        ],
        "slopes": model.slopes.astype(int).tolist(),
    }
    return json.dumps(doc, indent=2) + "\n"


def model_from_json(text: str) -> ShsModel:
    """Parse and fully re-validate a model from its JSON document."""
    doc = json.loads(text)
    transitions = [
        (t["from_state"], t["to_state"], t["rate"], t["reset_map"])
        for t in doc["transitions"]
    ]
    return build_model(
        doc["num_states"], doc["num_components"], transitions, doc["slopes"]
    )
