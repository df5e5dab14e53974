"""Run configuration: an INI file parsed with :mod:`configparser`.

Sections and keys (all optional except ``[model] name`` and a seed)::

    [run]          seed
    [model]        name, plus any model parameter (e.g. m = 1.0)
    [candidate]    kinetic = same | scaled | constant | default
                   scale (for "scaled"), Hhat or Mhat (for "constant")
                   potential = same | zero | quadratic | derived
                   Khat (for "quadratic"), stiffness (for "derived")
                   cos = c1, ..., cn        adds sum c_i (1 - cos(q_i - q*_i))
                   perturb = c1, ..., cn    adds sum c_i (q_i - q*_i)^2
    [equilibrium]  q_star
    [box]          lower, upper (default: model box); radius (neighbourhood
                   of q* on which the candidate must be positive definite)
    [sampler]      count, radius (momentum radius), seed (default: run seed)
    [dissipation]  gain, xi (constant covector in W)
    [gyro]         kind = zero | random, scale
    [connection]   kind = flat | levi-civita | random, scale
    [integrator]   dt, T, q0, p0, radius (convergence radius)

Vectors are comma separated; matrices separate rows with ``;``.  The
environment variable SHAPESTAB_SEED overrides ``[run] seed``.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, UnknownModelError
from .model import (DEFAULT_HHAT, Equilibrium, MechanicalModel, ShapingCandidate,
                    derived_quadratic_shaping, model_defaults, registry_get)
from .sampling import Box, Sampler
from .synthesis import DissipationSpec, GyroSpec, admissible_B, antisymmetric_part
from .tensor_core import QuadBasicFn, constant_connection, flat_connection, levi_civita

SEED_ENV = "SHAPESTAB_SEED"

KNOWN = {
    "run": {"seed"},
    "candidate": {"kinetic", "scale", "hhat", "mhat", "potential", "khat", "stiffness", "cos", "perturb"},
    "equilibrium": {"q_star"},
    "box": {"lower", "upper", "radius"},
    "sampler": {"count", "radius", "seed"},
    "dissipation": {"gain", "xi"},
    "gyro": {"kind", "scale"},
    "connection": {"kind", "scale"},
    "integrator": {"dt", "t", "q0", "p0", "radius"},
}


@dataclass
class RunConfig:
    seed: int
    model: MechanicalModel
    candidate: ShapingCandidate
    equilibrium: Equilibrium
    box: Box
    neighborhood: Box
    sampler: Sampler
    diss: DissipationSpec
    gyro: GyroSpec
    connection: object
    dt: float = 1e-3
    T: float = 30.0
    q0: Optional[np.ndarray] = None
    p0: Optional[np.ndarray] = None
    conv_radius: float = 1e-2
    raw: dict = field(default_factory=dict)


def _floats(text, what):
    try:
        vals = [float(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"{what}: cannot parse numbers from {text!r}") from exc
    if not vals or not all(np.isfinite(vals)):
        raise ConfigError(f"{what}: values must be finite numbers")
    return np.array(vals)


def _vector(text, n, what):
    v = _floats(text, what)
    if v.shape != (n,):
        raise ConfigError(f"{what}: expected {n} values, got {v.size}")
    return v


def _matrix(text, n, what):
    rows = [r for r in text.split(";") if r.strip()]
    M = np.array([_floats(r, what) for r in rows]) if rows else np.zeros((0, 0))
    if M.shape != (n, n):
        raise ConfigError(f"{what}: expected a {n}x{n} matrix")
    return M


def _number(sec, key, default, what, positive=False, integer=False):
    if key not in sec:
        return default
    try:
        v = int(sec[key]) if integer else float(sec[key])
    except ValueError as exc:
        raise ConfigError(f"{what}: {sec[key]!r} is not a number") from exc
    if not np.isfinite(v) or (positive and v <= 0):
        raise ConfigError(f"{what}: must be {'positive and ' if positive else ''}finite")
    return v


def read_config(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # model parameters are case sensitive (M vs m)
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return cp


def load_config(path, env=None) -> RunConfig:
    return build_config(read_config(path), env=env)


def build_config(cp: configparser.ConfigParser, env=None) -> RunConfig:
    env = os.environ if env is None else env
    sec = {s: {} for s in KNOWN}
    sec["model"] = {}
    for name in cp.sections():
        if name == "model":
            sec[name] = dict(cp[name])
            continue
        if name not in KNOWN:
            raise ConfigError(f"unknown section [{name}]")
        sec[name] = {k.lower(): v for k, v in cp[name].items()}
        extra = set(sec[name]) - KNOWN[name]
        if extra:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(extra))}")

    seed_text = env.get(SEED_ENV) or sec["run"].get("seed")
    if seed_text is None:
        raise ConfigError("a seed is required ([run] seed or SHAPESTAB_SEED)")
    try:
        seed = int(seed_text)
    except ValueError as exc:
        raise ConfigError(f"seed must be an integer, got {seed_text!r}") from exc
    if seed < 0:
        raise ConfigError("seed must be non-negative")

    name = sec["model"].get("name")
    if not name:
        raise ConfigError("[model] name is required")
    params = {k: v for k, v in sec["model"].items() if k != "name"}
    try:
        defaults = model_defaults(name)
        parsed = {}
        for k in params:
            if k not in defaults:
                raise ConfigError(f"unknown parameter {k!r} for model {name}")
            parsed[k] = _number(params, k, None, f"[model] {k}")
        model = registry_get(name, **parsed)
    except UnknownModelError as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    n = model.n

    q_star = _vector(sec["equilibrium"]["q_star"], n, "[equilibrium] q_star") \
        if "q_star" in sec["equilibrium"] else np.zeros(n)
    eq = Equilibrium(q_star)

    try:
        box = Box(_vector(sec["box"]["lower"], n, "[box] lower") if "lower" in sec["box"] else model.box.lower,
                  _vector(sec["box"]["upper"], n, "[box] upper") if "upper" in sec["box"] else model.box.upper)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[box]: {exc}") from exc
    if not box.contains(q_star):
        raise ConfigError(f"q_star {q_star.tolist()} lies outside the box")
    nb_radius = _number(sec["box"], "radius", 1.0, "[box] radius", positive=True)
    neighborhood = box.around(q_star, nb_radius)

    candidate = _build_candidate(sec["candidate"], model, eq)

    sampler = Sampler(box,
                      count=_number(sec["sampler"], "count", 200, "[sampler] count", positive=True, integer=True),
                      radius=_number(sec["sampler"], "radius", 1.0, "[sampler] radius", positive=True),
                      seed=_number(sec["sampler"], "seed", seed, "[sampler] seed", integer=True)
                      if SEED_ENV not in env else seed)

    gain = _number(sec["dissipation"], "gain", 1.0, "[dissipation] gain")
    if gain < 0:
        raise ConfigError("[dissipation] gain must be non-negative")
    xi = None
    if "xi" in sec["dissipation"]:
        xv = _vector(sec["dissipation"]["xi"], n, "[dissipation] xi")
        xi = lambda q, xv=xv: xv  # noqa: E731
    diss = DissipationSpec(xi=xi, gain=gain)

    rng = np.random.default_rng(seed)
    gkind = sec["gyro"].get("kind", "zero")
    gscale = _number(sec["gyro"], "scale", 1.0, "[gyro] scale")
    if gkind == "zero":
        gyro = GyroSpec()
    elif gkind == "random":
        gyro = GyroSpec(A=gscale * antisymmetric_part(rng.standard_normal((n, n, n))),
                        B=gscale * admissible_B(rng.standard_normal((n, n, n))))
    else:
        raise ConfigError(f"[gyro] kind must be zero or random, got {gkind!r}")

    ckind = sec["connection"].get("kind", "flat")
    cscale = _number(sec["connection"], "scale", 1.0, "[connection] scale")
    if ckind == "flat":
        conn = flat_connection(n)
    elif ckind == "levi-civita":
        conn = levi_civita(model.kinetic)
    elif ckind == "random":
        conn = constant_connection(cscale * rng.standard_normal((n, n, n)))
    else:
        raise ConfigError(f"[connection] kind must be flat, levi-civita or random, got {ckind!r}")

    it = sec["integrator"]
    dt = _number(it, "dt", 1e-3, "[integrator] dt", positive=True)
    T = _number(it, "t", 30.0, "[integrator] T", positive=True)
    if T < dt:
        raise ConfigError("[integrator] T must be at least dt")
    q0 = _vector(it["q0"], n, "[integrator] q0") if "q0" in it else None
    p0 = _vector(it["p0"], n, "[integrator] p0") if "p0" in it else None
    conv = _number(it, "radius", 1e-2, "[integrator] radius", positive=True)

    return RunConfig(seed, model, candidate, eq, box, neighborhood, sampler, diss, gyro, conn,
                     dt, T, q0, p0, conv, raw={s: dict(cp[s]) for s in cp.sections()})


def _build_candidate(sec, model, eq) -> ShapingCandidate:
    n = model.n
    kin = sec.get("kinetic", "same")
    pot = sec.get("potential", "same")
    F = model.kinetic
    if pot == "derived":
        if kin == "same":
            Hhat = F.A(np.zeros(n))
        elif kin == "constant":
            Hhat = _constant_hhat(sec, n)
        elif kin == "default":
            if model.name not in DEFAULT_HHAT:
                raise ConfigError(f"no default shaped inertia for {model.name}")
            Hhat = DEFAULT_HHAT[model.name]
        else:
            raise ConfigError("potential = derived needs kinetic = same, constant or default")
        stiff = _number(sec, "stiffness", 1.0, "[candidate] stiffness", positive=True)
        try:
            base = derived_quadratic_shaping(model, Hhat, stiff)
        except ValueError as exc:
            raise ConfigError(f"derived shaping unavailable: {exc}") from exc
        A, dA, f, df = base.kinetic_hat.A, base.kinetic_hat.dA, base.kinetic_hat.f, base.kinetic_hat.df
        constant = True
    else:
        if kin == "same":
            A, dA, constant = F.A, F.dA, F.constant
        elif kin == "scaled":
            s = _number(sec, "scale", 1.0, "[candidate] scale", positive=True)
            A = lambda q, s=s: s * F.A(q)  # noqa: E731
            dA = lambda q, s=s: s * F.dA(q)  # noqa: E731
            constant = F.constant
        elif kin == "constant":
            M = _constant_hhat(sec, n)
            Z = np.zeros((n, n, n))
            A, dA, constant = (lambda q, M=M: M), (lambda q, Z=Z: Z), True
        else:
            raise ConfigError(f"[candidate] kinetic must be same, scaled, constant or default, got {kin!r}")
        if pot == "same":
            f, df = F.f, F.df
        elif pot == "zero":
            f, df = (lambda q: 0.0), (lambda q: np.zeros(n))
        elif pot == "quadratic":
            if "khat" not in sec:
                raise ConfigError("potential = quadratic needs Khat")
            K = _matrix(sec["khat"], n, "[candidate] Khat")
            if np.max(np.abs(K - K.T)) > 0:
                raise ConfigError("[candidate] Khat must be symmetric")
            c = eq.q_star
            f = lambda q, K=K, c=c: 0.5 * (q - c) @ K @ (q - c)  # noqa: E731
            df = lambda q, K=K, c=c: K @ (q - c)  # noqa: E731
        else:
            raise ConfigError(f"[candidate] potential must be same, zero, quadratic or derived, got {pot!r}")
    f, df = _extra_terms(sec, n, eq.q_star, f, df)
    return ShapingCandidate(QuadBasicFn(n, A, dA, f, df, constant=constant), name=f"{model.name}:{kin}/{pot}")


def _constant_hhat(sec, n):
    if "hhat" in sec:
        M = _matrix(sec["hhat"], n, "[candidate] Hhat")
    elif "mhat" in sec:
        Mh = _matrix(sec["mhat"], n, "[candidate] Mhat")
        try:
            M = np.linalg.inv(Mh)
        except np.linalg.LinAlgError as exc:
            raise ConfigError("[candidate] Mhat is singular") from exc
    else:
        raise ConfigError("kinetic = constant needs Hhat or Mhat")
    if np.max(np.abs(M - M.T)) > 1e-12 * max(1.0, np.abs(M).max()):
        raise ConfigError("shaped inertia must be symmetric")
    return 0.5 * (M + M.T)


def _extra_terms(sec, n, c, f, df):
    if "cos" in sec:
        w = _vector(sec["cos"], n, "[candidate] cos")
        f0, df0 = f, df
        f = lambda q, w=w: f0(q) + float(w @ (1.0 - np.cos(q - c)))  # noqa: E731
        df = lambda q, w=w: df0(q) + w * np.sin(q - c)  # noqa: E731
    if "perturb" in sec:
        w = _vector(sec["perturb"], n, "[candidate] perturb")
        f1, df1 = f, df
        f = lambda q, w=w: f1(q) + float(w @ (q - c) ** 2)  # noqa: E731
        df = lambda q, w=w: df1(q) + 2.0 * w * (q - c)  # noqa: E731
    return f, df
