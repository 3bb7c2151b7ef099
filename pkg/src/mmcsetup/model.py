"""Model primitives: parameters, states, costs, and the transition law.

The chain lives on S = {(i, j) : 0 <= i <= c, j >= i} where i counts servers
that are on (busy serving) and j counts jobs in the system.  Jobs beyond the
on servers trigger setups: min(j - i, c - i) of the off servers are warming
up at rate alpha each.  A server that finishes a job with no one waiting
turns off instantly (and any now-redundant setup is cancelled), so j = i is
the only way a server powers down.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

from .errors import InvalidConfigError, InvalidParameterError, InvalidStateError, UnstableError


class State(NamedTuple):
    i: int
    j: int


@dataclass(frozen=True)
class QueueParams:
    """Arrival rate, per-server service rate, server count, setup rate.

    Construction is permissive; call :func:`validate` (or any solver, they
    all do) to enforce positivity and stability.
    """

    lam: float
    mu: float
    c: int
    alpha: float

    @property
    def rho(self) -> float:
        return self.lam / (self.c * self.mu)


@dataclass(frozen=True)
class CostParams:
    """Power-cost weights per unit time.

    c_active prices a serving server, c_setup a warming one, c_idle an idle
    but powered server (only the always-on baseline has those), and c_switch
    prices each completed off->on switch rather than a time average.
    """

    c_active: float = 1.0
    c_setup: float = 1.0
    c_idle: float = 0.6
    c_switch: float = 0.0


def validate(params: QueueParams) -> None:
    """Raise if the parameters are out of domain or the queue is unstable."""
    lam, mu, c, alpha = params.lam, params.mu, params.c, params.alpha
    if not isinstance(c, int) or isinstance(c, bool):
        raise InvalidParameterError(f"c must be an int, got {c!r}")
    if c < 1:
        raise InvalidParameterError(f"c must be >= 1, got {c}")
    for name, v in (("lambda", lam), ("mu", mu), ("alpha", alpha)):
        if not (isinstance(v, (int, float)) and math.isfinite(v)):
            raise InvalidParameterError(f"{name} must be a finite number, got {v!r}")
        if v <= 0:
            raise InvalidParameterError(f"{name} must be > 0, got {v}")
    if params.rho >= 1.0:
        raise UnstableError(params.rho)


def validate_state(state: State, params: QueueParams) -> None:
    i, j = state
    if not (0 <= i <= params.c) or j < i:
        raise InvalidStateError(f"state (i={i}, j={j}) outside 0 <= i <= c = {params.c}, j >= i")


def n_setup(state: State, params: QueueParams) -> int:
    """Servers currently in setup at this state: min(j - i, c - i)."""
    return min(state.j - state.i, params.c - state.i)


def transition_rates(state: State, params: QueueParams) -> list[tuple[State, float]]:
    """Outgoing transitions from ``state`` as (target, rate) pairs.

    Order is fixed (arrival, service, setup) so downstream consumers can
    build matrices deterministically.
    """
    validate_state(state, params)
    i, j = state
    lam, mu, alpha = params.lam, params.mu, params.alpha
    out: list[tuple[State, float]] = [(State(i, j + 1), lam)]
    if i > 0:
        if j > i:
            # a departure leaves someone waiting; the server stays on
            out.append((State(i, j - 1), i * mu))
        else:
            # j == i: the freed server finds no work and powers off
            out.append((State(i - 1, j - 1), i * mu))
    k = n_setup(state, params)
    if k > 0:
        out.append((State(i + 1, j), k * alpha))
    return out


def iter_states(params: QueueParams, j_max: int) -> Iterator[State]:
    """All states with j <= j_max, in (j, i) lexicographic order."""
    for j in range(j_max + 1):
        for i in range(min(j, params.c) + 1):
            yield State(i, j)


# ---------------------------------------------------------------------------
# config file I/O


_PARAM_KEYS = {"lambda", "mu", "c", "alpha", "rho"}
_COST_KEYS = {"ca": "c_active", "cs": "c_setup", "ci": "c_idle", "csw": "c_switch"}


def read_config(path: str) -> dict[str, float]:
    """Parse ``key = value`` lines (# comments allowed) without resolving them.

    Keeps ``rho`` as written so a caller merging in overrides (say a new c
    from the command line) can recompute lambda afterwards. Unknown keys are
    an error so typos don't pass silently.
    """
    raw: dict[str, float] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, val = line.partition("=")
            key = key.strip().lower()
            if key not in _PARAM_KEYS and key not in _COST_KEYS:
                raise InvalidConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in raw:
                raise InvalidConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            try:
                raw[key] = float(val.strip())
            except ValueError:
                raise InvalidConfigError(f"{path}:{lineno}: bad number {val.strip()!r}") from None
    if "lambda" in raw and "rho" in raw:
        raise InvalidConfigError(f"{path}: give lambda or rho, not both")
    if "c" in raw and raw["c"] != int(raw["c"]):
        raise InvalidConfigError(f"{path}: c must be an integer, got {raw['c']}")
    return raw


def params_from_config(path: str) -> tuple[QueueParams, CostParams]:
    """Read a config file into parameter objects.

    Accepts either ``lambda`` or ``rho`` (converted as lambda = rho * c * mu)
    but not both.
    """
    raw = read_config(path)

    mu = raw.get("mu", 1.0)
    c = raw.get("c")
    if c is None:
        raise InvalidConfigError(f"{path}: missing required key 'c'")
    c = int(c)
    if "rho" in raw:
        lam = raw["rho"] * c * mu
    elif "lambda" in raw:
        lam = raw["lambda"]
    else:
        raise InvalidConfigError(f"{path}: missing 'lambda' (or 'rho')")
    if "alpha" not in raw:
        raise InvalidConfigError(f"{path}: missing required key 'alpha'")
    params = QueueParams(lam=lam, mu=mu, c=c, alpha=raw["alpha"])

    cost_kwargs = {attr: raw[k] for k, attr in _COST_KEYS.items() if k in raw}
    return params, CostParams(**cost_kwargs)


def params_to_dict(params: QueueParams) -> dict:
    """Canonical JSON-friendly echo of the parameters (fixed key order)."""
    return {
        "lambda": params.lam,
        "mu": params.mu,
        "c": params.c,
        "alpha": params.alpha,
        "rho": params.rho,
    }


def dump_params(params: QueueParams) -> str:
    return json.dumps(params_to_dict(params), indent=2)
