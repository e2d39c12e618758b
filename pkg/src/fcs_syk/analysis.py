"""Scaling fits, data-driven phase labels, CSV output, Green's-function cache
and run configuration."""
from dataclasses import dataclass, field
import csv
import hashlib
import io
import json
import math
import os
import struct

import jsonschema
import numpy as np

from .errors import ConfigError

LOG_CHORD = "LogChord"
PHI_SQUARED = "PhiSquared"
ONE_MINUS_COS = "OneMinusCos"
AREA_SATURATION = "AreaSaturation"
MODELS = (LOG_CHORD, PHI_SQUARED, ONE_MINUS_COS, AREA_SATURATION)

LOG_LAW = "LogLaw"
AREA = "AreaLaw"


def chord_length(A_size, L):
    if not 0 < A_size < L:
        raise ValueError(f"chord length needs 0 < |A| < L, got {A_size}, {L}")
    return L * math.sin(math.pi * A_size / L) / math.pi


@dataclass
class FitReport:
    model: str
    slope: float
    intercept: float
    r_squared: float
    residual_max: float
    n: int = 0


def transform(x, model, L=None):
    x = np.asarray(x, float)
    if model in (LOG_CHORD, AREA_SATURATION):
        if L is None:
            raise ValueError(f"{model} needs L")
        return np.log(L * np.sin(np.pi * x / L) / np.pi)
    if model == PHI_SQUARED:
        return x * x
    if model == ONE_MINUS_COS:
        return 1 - np.cos(x)
    raise ValueError(f"unknown model {model!r}")


def fit_scaling(points, model, L=None):
    """Least-squares line of y against the model abscissa.

    points: iterable of (x, y) with x = |A| for LogChord/AreaSaturation and
    x = phi otherwise.
    """
    pts = [(float(a), float(b)) for a, b in points]
    if len(pts) < 3:
        raise ValueError("fit_scaling needs at least 3 points")
    x = transform([p[0] for p in pts], model, L)
    y = np.array([p[1] for p in pts])
    X = np.stack([x, np.ones_like(x)], 1)
    (slope, icpt), *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - (slope * x + icpt)
    ss_res = float(res @ res)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0:
        r2 = 1.0 if ss_res <= 1e-30 else 0.0
    else:
        r2 = min(1.0, max(0.0, 1 - ss_res / ss_tot))
    return FitReport(model, float(slope), float(icpt), r2, float(np.abs(res).max()), len(pts))


@dataclass
class DataPhase:
    label: str
    log_fit: FitReport
    phi_fits: dict
    theta: float
    flags: list = field(default_factory=list)


def _finite(results):
    return [r for r in results if np.isfinite(r.f_per_N.real)]


def classify_from_data(sweep, L, theta=None, scan_slopes=(), r2_log=0.98):
    """LogLaw vs AreaLaw from one sweep.

    The log-chord slope is taken at the phi with most |A| values (largest
    |phi| on ties), the phi fits at the |A| with most phi values.  theta
    defaults to 10% of the largest slope among this sweep and
    ``scan_slopes``.  Thresholds are relative, so rescaling F does not change
    the label.
    """
    from .action import min_branch
    res = [r for r in min_branch(_finite(sweep)) if r.phi != 0 or r.A_size]
    by_phi, by_A = {}, {}
    for r in res:
        if 0 < r.A_size < L and r.phi != 0:
            by_phi.setdefault(r.phi, []).append(r)
        if r.phi > 0:
            by_A.setdefault(r.A_size, []).append(r)
    if not by_phi or not by_A:
        raise ValueError("sweep needs several |A| at fixed phi and several phi at fixed |A|")
    phi0 = max(by_phi, key=lambda p: (len(by_phi[p]), abs(p)))
    A0 = max(by_A, key=lambda a: (len(by_A[a]), -abs(a - L / 2)))
    pts = sorted((r.A_size, r.f_per_N.real) for r in by_phi[phi0])
    log_fit = fit_scaling(pts, LOG_CHORD, L)
    ppts = sorted((r.phi, r.f_per_N.real) for r in by_A[A0])
    phi_fits = {m: fit_scaling(ppts, m) for m in (PHI_SQUARED, ONE_MINUS_COS)}
    flags = []
    scale = max([abs(y) for _, y in pts + ppts] + [0.0])
    if scale < 1e-12:
        flags.append("degenerate")
        return DataPhase(AREA, log_fit, phi_fits, 0.0, flags)
    if theta is None:
        theta = 0.1 * max([abs(log_fit.slope)] + [abs(s) for s in scan_slopes])
    if log_fit.slope > theta and log_fit.r_squared > r2_log:
        label = LOG_LAW
    else:
        label = AREA
        if phi_fits[ONE_MINUS_COS].r_squared < phi_fits[PHI_SQUARED].r_squared:
            flags.append("phi-shape favours phi^2")
    if label == LOG_LAW and phi_fits[PHI_SQUARED].r_squared < phi_fits[ONE_MINUS_COS].r_squared:
        flags.append("phi-shape favours 1-cos")
    return DataPhase(label, log_fit, phi_fits, theta, flags)


# CSV

CSV_COLUMNS = ("zeta", "V", "mu", "L", "T", "n_t", "phi", "A_size", "reF_perN",
               "imF_perN", "branch", "iters", "converged")


def result_rows(results, params, grid):
    for r in results:
        yield {"zeta": params.zeta, "V": params.V, "mu": params.mu, "L": params.L,
               "T": grid.T, "n_t": grid.n_t, "phi": r.phi, "A_size": r.A_size,
               "reF_perN": r.f_per_N.real, "imF_perN": r.f_per_N.imag,
               "branch": r.branch, "iters": r.meta.get("iterations", 0),
               "converged": bool(r.meta.get("converged", True))}


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, rows, config=None):
    """Write rows; the run configuration is echoed as a leading comment."""
    with open(path, "w", newline="") as fh:
        if config is not None:
            fh.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])


def read_csv(path):
    """Rows as dicts with numeric types restored, plus the echoed config."""
    config = None
    with open(path) as fh:
        lines = fh.readlines()
    body = []
    for ln in lines:
        if ln.startswith("# config: "):
            config = json.loads(ln[len("# config: "):])
        elif not ln.startswith("#"):
            body.append(ln)
    rows = []
    for rec in csv.DictReader(io.StringIO("".join(body))):
        rows.append({
            "zeta": float(rec["zeta"]), "V": float(rec["V"]), "mu": float(rec["mu"]),
            "L": int(rec["L"]), "T": float(rec["T"]), "n_t": int(rec["n_t"]),
            "phi": float(rec["phi"]), "A_size": int(rec["A_size"]),
            "reF_perN": float(rec["reF_perN"]), "imF_perN": float(rec["imF_perN"]),
            "branch": rec["branch"], "iters": int(rec["iters"]),
            "converged": rec["converged"] in ("1", "True", "true")})
    return rows, config


def rows_to_results(rows):
    from .action import FcsResult
    return [FcsResult(r["phi"], r["A_size"], complex(r["reF_perN"], r["imF_perN"]),
                      r["branch"], {"iterations": r["iters"], "converged": r["converged"]})
            for r in rows]


# Green's-function cache

CACHE_MAGIC = b"FCSG"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIIII32s12x")
assert _HEADER.size == 64


def parameter_hash(*objs):
    """sha256 over a canonical JSON dump of the given dataclasses / dicts."""
    def norm(o):
        if hasattr(o, "__dataclass_fields__"):
            return {k: norm(getattr(o, k)) for k in o.__dataclass_fields__
                    if not isinstance(getattr(o, k), (np.ndarray,)) and k != "init"}
        if isinstance(o, dict):
            return {str(k): norm(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [norm(v) for v in o]
        if isinstance(o, float):
            return repr(o)
        return o
    blob = json.dumps([norm(o) for o in objs], sort_keys=True).encode()
    return hashlib.sha256(blob).digest()


def save_cache(path, arrays, D, L, phash):
    """Store complex arrays (each L x D/2) after a 64-byte header."""
    arrs = [np.ascontiguousarray(a, dtype="<c16") for a in arrays]
    for a in arrs:
        if a.shape != (L, D // 2):
            raise ValueError(f"cache array shape {a.shape} != {(L, D // 2)}")
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, D, L, len(arrs), phash))
        for a in arrs:
            fh.write(a.tobytes())
    os.replace(tmp, path)


def load_cache(path, phash=None):
    """Arrays from a cache file; None if missing or the hash does not match."""
    if not os.path.exists(path):
        return None
    with open(path, "rb") as fh:
        head = fh.read(64)
        if len(head) != 64:
            return None
        magic, ver, D, L, nf, h = _HEADER.unpack(head)
        if magic != CACHE_MAGIC or ver != CACHE_VERSION:
            return None
        if phash is not None and h != phash:
            return None
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != nf * L * (D // 2):
        return None
    return [a.reshape(L, D // 2).astype(complex) for a in data.reshape(nf, -1)]


# configuration

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "J": {"type": "number", "minimum": 0},
        "V": {"oneOf": [{"type": "number", "minimum": 0},
                        {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}]},
        "zeta": {"oneOf": [{"type": "number", "minimum": 0},
                           {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}]},
        "mu": {"type": "number"},
        "L": {"type": "integer", "minimum": 2, "multipleOf": 2},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "N": {"type": "integer", "minimum": 1},
        "n_t": {"type": "integer", "minimum": 16},
        "phis": {"type": "array", "items": {"type": "number"}},
        "A_sizes": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "phi": {"type": "number"},
        "A_size": {"type": "integer", "minimum": 0},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iters": {"type": "integer", "minimum": 1},
                "mixing": {"enum": ["anderson", "damped"]},
                "history": {"type": "integer", "minimum": 1},
                "periodic": {"type": "boolean"},
                "ordering": {"enum": ["symmetric", "flipped"]},
                "engine": {"enum": ["transfer", "dense"]},
            },
        },
        "out": {"type": "string"},
        "cache": {"type": "boolean"},
    },
}

DEFAULT_CONFIG = {
    "J": 1.0, "V": 0.0, "zeta": 0.5, "mu": 0.5, "L": 20, "T": 60.0, "N": 1,
    "n_t": 192,
    "phis": [k * math.pi / 8 for k in range(-8, 9)],
    "A_sizes": [2, 4, 6, 8, 10, 12, 14, 16, 18],
    "phi": math.pi / 2, "A_size": 10,
    "solver": {"alpha": 0.5, "tol": 1e-8, "max_iters": 2000, "mixing": "anderson",
               "history": 8, "periodic": False, "ordering": "symmetric",
               "engine": "transfer"},
    "out": "out",
    "cache": True,
}


@dataclass
class RunConfig:
    data: dict

    def __getitem__(self, k):
        return self.data[k]

    def model_params(self, zeta=None, V=None):
        from .saddle import ModelParams
        d = self.data
        return ModelParams(J=d["J"], V=d["V"] if V is None else V,
                           zeta=d["zeta"] if zeta is None else zeta,
                           mu=d["mu"], L=d["L"], T=d["T"], N=d["N"])

    def grid(self):
        from .contour import build_grid
        return build_grid(self.data["T"], self.data["n_t"])

    def solve_options(self):
        from .solver import SolveOptions
        return SolveOptions(**self.data["solver"])

    def values(self, key):
        v = self.data[key]
        return list(v) if isinstance(v, list) else [v]


def validate_config(raw):
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {e.message}") from None
    data = json.loads(json.dumps(DEFAULT_CONFIG))
    solver = dict(data["solver"])
    solver.update(raw.get("solver", {}))
    data.update(raw)
    data["solver"] = solver
    return RunConfig(data)


def load_config(path=None):
    """Read a JSON run configuration, fill defaults, reject unknown keys."""
    if path is None:
        return validate_config({})
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return validate_config(raw)


class GreensCache:
    """Directory of converged solutions keyed by parameter hash.

    Used by :func:`fcs_sweep` to restart a continuation: a cached Sigma is
    taken as the initial guess, so a finished point re-converges at once.
    """

    def __init__(self, directory, params, grid, opts):
        self.directory = str(directory)
        os.makedirs(self.directory, exist_ok=True)
        self._base = (params, {"T": grid.T, "n_t": grid.n_t}, opts)
        self.L, self.D = params.L, grid.D

    def key(self, phi, A_size, branch):
        return parameter_hash(*self._base, {"phi": float(phi), "A": int(A_size), "b": branch})

    def path(self, h):
        return os.path.join(self.directory, h.hex()[:24] + ".fcsg")

    def get(self, phi, A_size, branch):
        from .solver import SelfEnergy
        h = self.key(phi, A_size, branch)
        arrs = load_cache(self.path(h), h)
        if arrs is None or len(arrs) != 6:
            return None
        return SelfEnergy(arrs[3], arrs[4], arrs[5])

    def put(self, phi, A_size, branch, G, sig):
        h = self.key(phi, A_size, branch)
        save_cache(self.path(h), [G.m, G.ud, G.du, sig.uu, sig.ud, sig.du], self.D, self.L, h)
