"""Named figure setups for the PDE runner."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Grid1D
from .errors import BadInput, UnknownScenario
from .forcing import parse_forcing
from .pde import ExplicitRK4, ImexTheta, PdeRunConfig, multifront_ic

TWO_FRONT = "1:-4,-1:4"
THREE_FRONT = "1:-7,-1:1,1:9.1"
FIVE_FRONT_A = "1:1,-1:15,1:25,-1:37,1:48"
FIVE_FRONT_B = "1:-6,-1:-0.5,1:6,-1:11.5,1:17.5"


@dataclass
class Scenario:
    id: str
    description: str
    defaults: dict
    exploratory: bool = False
    tags: list = field(default_factory=list)

    def params(self, overrides=None):
        p = dict(self.defaults)
        for k, v in (overrides or {}).items():
            if k not in p:
                raise BadInput(f"scenario {self.id} has no parameter {k!r}")
            if k == "dt" and isinstance(v, str) and v.lower() in ("auto", "none"):
                p[k] = None
                continue
            try:
                p[k] = _coerce(p[k], v)
            except ValueError:
                raise BadInput(f"bad value {v!r} for {k}") from None
        return p

    def build(self, overrides=None) -> PdeRunConfig:
        p = self.params(overrides)
        grid = Grid1D.with_spacing(p["x_min"], p["x_max"], p["dx"])
        ic = multifront_ic(grid, parse_ic(p["ic"]), offset=p["offset"])
        scheme = ExplicitRK4() if p["scheme"] == "rk4" else ImexTheta(float(p["theta"]))
        dt = None if p["dt"] in (None, "auto") else float(p["dt"])
        return PdeRunConfig(grid, parse_forcing(p["forcing"]), float(p["eps"]), float(p["t_end"]),
                            ic, dt=dt, scheme=scheme, output_every=float(p["output_every"]),
                            snapshot_every=float(p["snapshot_every"]),
                            stop_when_settled=bool(p["stop_when_settled"]))


def _coerce(default, value):
    if not isinstance(value, str):
        return value
    if isinstance(default, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int) and not isinstance(default, bool):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if default is None and value.lower() in ("none", "auto"):
        return None
    return value


def parse_ic(text):
    """'s:c[:a],s:c[:a],...' -> [(s, c, a), ...] for sum s tanh(a (x - c))."""
    out = []
    for part in text.split(","):
        bits = part.strip().split(":")
        if len(bits) not in (2, 3):
            raise BadInput(f"bad initial-condition term {part!r}")
        s, c = float(bits[0]), float(bits[1])
        a = float(bits[2]) if len(bits) == 3 else 1.0
        out.append((s, c, a))
    return out


def _base(**kw):
    d = {"forcing": "zero", "eps": 0.1, "x_min": -10.0, "x_max": 10.0, "dx": 0.05,
         "ic": TWO_FRONT, "offset": -1.0, "t_end": 2000.0, "dt": 0.1, "scheme": "imex",
         "theta": 0.5, "output_every": 1.0, "snapshot_every": 50.0,
         "stop_when_settled": False}
    d.update(kw)
    return d


_CATALOG: dict[str, Scenario] = {}


def _add(sid, desc, exploratory=False, **kw):
    _CATALOG[sid] = Scenario(sid, desc, _base(**kw), exploratory)


_add("fig1a", "homogeneous two-front: attraction and annihilation", eps=0.0, t_end=4000.0,
     stop_when_settled=True)
_add("fig1b", "two-front over a hill H_exp(x;1): fronts pushed outward", forcing="exp:1.0",
     t_end=1000.0)
_add("fig1c", "two-front over H = sin 2x: both fronts pinned", forcing="sin:1.0:2.0",
     t_end=1000.0, stop_when_settled=True)
_add("fig1d", "homogeneous three-front", eps=0.0, x_min=-25.0, x_max=25.0, ic=THREE_FRONT,
     offset=0.0, t_end=2000.0)
_add("fig1e", "three-front over H_exp(x;1)", forcing="exp:1.0", x_min=-25.0, x_max=25.0,
     ic=THREE_FRONT, offset=0.0, t_end=2000.0)
_add("fig1f", "three-front over H = sin 2x", forcing="sin:1.0:2.0", x_min=-25.0, x_max=25.0,
     ic=THREE_FRONT, offset=0.0, t_end=1000.0)
_add("fig2-pinned-multifront", "four fronts at stable phases of f1 = cos(4 pi x / 15)",
     forcing=f"triple:1.0,0.0,0.0,{4 * math.pi / 15!r}", x_min=-60.0, x_max=60.0,
     ic="1:-26.25,-1:-11.25,1:3.75,-1:18.75", offset=-1.0, t_end=2000.0)
_add("fig3-5fronts-per", "five-front, periodic f1 = sin(x/5)", forcing="f1sin:1.0:0.2",
     x_min=-500.0, x_max=1500.0, dx=0.1, ic=FIVE_FRONT_A, offset=0.0, t_end=2000.0,
     snapshot_every=200.0)
_add("fig3-5fronts-alg025", "five-front, valley -H_alg(x;0.25)", forcing="alg:0.25:-1",
     x_min=-500.0, x_max=1500.0, dx=0.1, ic=FIVE_FRONT_A, offset=0.0, t_end=2000.0,
     snapshot_every=200.0)
_add("fig3-5fronts-algm050", "five-front, -H_alg(x;-0.5)", forcing="alg:-0.5:-1",
     x_min=-500.0, x_max=1500.0, dx=0.1, ic=FIVE_FRONT_A, offset=0.0, t_end=500.0, dt=0.01,
     snapshot_every=200.0)
_add("fig11-4front-a", "four-front over -H_alg(x;0.5): middle pair merges", forcing="alg:0.5:-1",
     eps=0.02, x_min=-20.0, x_max=20.0, ic="1:-10:5,-1:-2.5:5,1:2.5:5,-1:10:5", offset=-1.0,
     t_end=2000.0)
_add("fig11-4front-c", "four-front over -H_alg(x;0.5): left pair merges first",
     forcing="alg:0.5:-1", eps=0.02, x_min=-20.0, x_max=20.0,
     ic="1:-7.5:5,-1:-2.5:5,1:2.5:5,-1:10:5", offset=-1.0, t_end=800.0)
_add("fig12-5front-a", "five-front over H_alg(x;1.25): single survivor", forcing="alg:1.25",
     eps=0.2, x_min=-50.0, x_max=50.0, ic=FIVE_FRONT_B, offset=0.0, t_end=8000.0,
     snapshot_every=100.0)
_add("fig12-5front-c", "five-front over H_alg(x;1.25): middle front pinned at 0",
     forcing="alg:1.25", eps=0.2, x_min=-50.0, x_max=50.0,
     ic="1:-7,-1:-0.5,1:6,-1:11.5,1:17.5", offset=0.0, t_end=8000.0, snapshot_every=100.0)
for _e in ("0", "0.01", "0.1", "0.4"):
    _add(f"fig13-2front-periodic-eps{_e}", f"two-front over sin(0.8977 x), eps = {_e}",
         forcing="sin:1.0:0.8977", eps=float(_e), x_min=-40.0, x_max=40.0, ic="1:-3.5,-1:6",
         offset=-1.0, t_end=2000.0)
_add("fig18-3front-periodic", "three-front over f1 = cos x", forcing="triple:1.0,0.0,0.0,1.0",
     x_min=-15.0, x_max=15.0, ic="1:-8.5,-1:-1,1:8", offset=0.0, t_end=2000.0)
_SIX = "1:-13.0,-1:-7.5,1:-1.1,-1:5.0,1:10.0,-1:15.9"
_add("fig19-coarsen-flat", "six-front coarsening, flat", eps=0.0, x_min=-30.0, x_max=30.0,
     ic=_SIX, offset=-1.0, t_end=2000.0)
_add("fig19-coarsen-valley", "six-front coarsening, valley -H_alg(x;2)", forcing="alg:2.0:-1",
     x_min=-30.0, x_max=30.0, ic=_SIX, offset=-1.0, t_end=2000.0)
_add("fig19-coarsen-hill", "six-front coarsening, hill H_alg(x;2)", forcing="alg:2.0",
     x_min=-30.0, x_max=30.0, ic=_SIX, offset=-1.0, t_end=2000.0)
for _d in ("0", "0.025", "0.04", "0.06"):
    _add(f"fig20-mixed-delta{_d}", f"three-front over -H_alg(x;0.5) + {_d} sin 3x",
         forcing=f"mixed:alg:0.5:-1;sin:1.0:3.0;{_d}", x_min=-200.0, x_max=200.0,
         ic="1:1,-1:19,1:30", offset=0.0, t_end=2000.0, snapshot_every=100.0)
# explicit advection by eps H' needs dt < dx / (eps max|H'|) for the growing cases
for _p, _dt in (("0.4", 0.1), ("0.0", 0.05), ("-0.4", 0.02)):
    _add(f"fig21-5front-p{_p}", f"five-front over -H_alg(x;{_p})", forcing=f"alg:{_p}:-1",
         x_min=-500.0, x_max=500.0, dx=0.1, ic=FIVE_FRONT_B, offset=0.0, t_end=2000.0,
         dt=_dt, snapshot_every=100.0)
_add("fig22-beyond-p-1.5", "one-front over -H_alg(x;-1.5), outside the theory",
     exploratory=True, forcing="alg:-1.5:-1", x_min=-100.0, x_max=300.0, ic="1:10",
     offset=0.0, t_end=1.0, dt=1e-5, output_every=0.01, snapshot_every=0.1)
_add("fig22-beyond-p-1.2", "five-front over -H_alg(x;-1.2), outside the theory",
     exploratory=True, forcing="alg:-1.2:-1", x_min=-100.0, x_max=300.0,
     ic="1:1,-1:15,1:25,-1:37,1:50", offset=0.0, t_end=2.0, dt=1e-4, output_every=0.01,
     snapshot_every=0.1)

def scenario_ids():
    return list(_CATALOG)


def get_scenario(sid) -> Scenario:
    if sid in _CATALOG:
        return _CATALOG[sid]
    # short forms such as fig19-valley or fig21-p-0.4
    head, _, tail = sid.partition("-")
    hits = [k for k in _CATALOG if tail and k.startswith(head + "-") and k.endswith("-" + tail)]
    hits += [k for k in _CATALOG if tail and k.startswith(head + "-") and k.endswith(tail)
             and k not in hits and not k.endswith("-" + tail)]
    if len(hits) >= 1 and len(set(hits)) == 1:
        return _CATALOG[hits[0]]
    raise UnknownScenario(f"unknown scenario {sid!r}")


def match_scenarios(pattern):
    import fnmatch
    ids = [s for s in _CATALOG if fnmatch.fnmatchcase(s, pattern)]
    if not ids:
        raise UnknownScenario(f"no scenario matches {pattern!r}")
    return ids
