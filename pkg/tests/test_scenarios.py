import numpy as np
import pytest

from acfronts.errors import BadInput, UnknownScenario
from acfronts.pde import ExplicitRK4, ImexTheta, run
from acfronts.scenarios import get_scenario, match_scenarios, parse_ic, scenario_ids

REQUIRED = (
    [f"fig1{c}" for c in "abcdef"]
    + ["fig2-pinned-multifront", "fig3-5fronts-per", "fig3-5fronts-alg025",
       "fig3-5fronts-algm050", "fig11-4front-a", "fig11-4front-c", "fig12-5front-a",
       "fig12-5front-c", "fig18-3front-periodic"]
    + [f"fig13-2front-periodic-eps{e}" for e in ("0", "0.01", "0.1", "0.4")]
    + [f"fig19-coarsen-{k}" for k in ("flat", "valley", "hill")]
    + [f"fig20-mixed-delta{d}" for d in ("0", "0.025", "0.04", "0.06")]
    + [f"fig21-5front-p{p}" for p in ("0.4", "0.0", "-0.4")]
    + ["fig22-beyond-p-1.5", "fig22-beyond-p-1.2"]
)


def test_catalog_complete():
    ids = scenario_ids()
    assert set(REQUIRED) <= set(ids)
    assert len(ids) == len(set(ids))


@pytest.mark.filterwarnings("ignore::acfronts.errors.UnboundedTopographyWarning")
@pytest.mark.parametrize("sid", REQUIRED)
def test_every_scenario_builds(sid):
    sc = get_scenario(sid)
    cfg = sc.build()
    assert cfg.t_end > 0
    assert cfg.ic.grid == cfg.grid
    assert sc.exploratory == sid.startswith("fig22")
    d = cfg.to_dict()
    assert d["forcing"] == cfg.forcing.spec()


def test_short_forms():
    assert get_scenario("fig19-valley").id == "fig19-coarsen-valley"
    assert get_scenario("fig21-p-0.4").id == "fig21-5front-p-0.4"
    assert get_scenario("fig21-p0.4").id == "fig21-5front-p0.4"
    with pytest.raises(UnknownScenario):
        get_scenario("fig7")
    assert match_scenarios("fig13-*") == [f"fig13-2front-periodic-eps{e}"
                                          for e in ("0", "0.01", "0.1", "0.4")]
    with pytest.raises(UnknownScenario):
        match_scenarios("nothing*")


def test_overrides():
    sc = get_scenario("fig1c")
    p = sc.params({"t_end": "50", "eps": "0.2", "scheme": "rk4", "dt": "auto",
                   "stop_when_settled": "false"})
    assert p["t_end"] == 50.0 and p["eps"] == 0.2 and p["stop_when_settled"] is False
    cfg = sc.build({"scheme": "rk4", "dt": "auto", "dx": "0.1"})
    assert isinstance(cfg.scheme, ExplicitRK4)
    assert cfg.resolved_dt() * 2 / cfg.grid.dx ** 2 < 1
    assert isinstance(sc.build().scheme, ImexTheta)
    with pytest.raises(BadInput):
        sc.params({"bogus": 1})


def test_parse_ic():
    assert parse_ic("1:-4,-1:4:5") == [(1.0, -4.0, 1.0), (-1.0, 4.0, 5.0)]
    with pytest.raises(BadInput):
        parse_ic("1")


def test_fig1a_short_run_annihilates():
    res = run(get_scenario("fig1a").build({"ic": "1:-2,-1:2", "t_end": "100"}))
    assert len(res.annihilations()) == 1
    assert np.max(np.abs(res.final.values + 1)) < 1e-6


def test_fig1c_settles_pinned():
    res = run(get_scenario("fig1c").build())
    assert len(res.fronts_at_end()) == 2
    assert len(res.pinned()) == 2
    assert res.max_final_speed() < 1e-5


def _extent(res, t):
    times, P = res.track_array()
    row = P[min(np.searchsorted(times, t), len(times) - 1)]
    row = row[~np.isnan(row)]
    return row


def test_fig19_valley_squeezes_hill_pins():
    ext = {}
    for k in ("flat", "valley", "hill"):
        res = run(get_scenario(f"fig19-coarsen-{k}").build({"t_end": "1000", "dx": "0.1"}))
        assert len(res.annihilations()) == 2
        ext[k] = [_extent(res, t) for t in (200.0, 1000.0)]
    d = {k: [r[-1] - r[0] for r in v] for k, v in ext.items()}
    assert abs(d["flat"][1] - d["flat"][0]) < 1e-3
    assert d["valley"][1] < d["valley"][0] - 0.1
    # the hill pins one front at its top and pushes the other outward
    assert ext["hill"][1][-1] > ext["hill"][0][-1] + 0.1
    assert abs(ext["hill"][1][0]) < 0.05


def test_bad_override_value():
    with pytest.raises(BadInput):
        get_scenario("fig1c").params({"t_end": "soon"})
