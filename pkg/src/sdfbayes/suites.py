"""Catalogued experiment suites: the study tables as experiment lists."""

from __future__ import annotations

from .core import SdfConfig
from .scenarios import builtin_scenario
from .simulate import Experiment

TABLE3_SCENARIOS = ("A", "B", "C", "D", "RW")
EXTRA_SCENARIOS = ("E", "F", "G", "H", "I")
TABLE3_ALGORITHMS = ("sdf", "df", "sota", "structmab", "indepts")
TABLE4_ALGORITHMS = ("sdf-ar", "sdf-ur", "df-ur", "sota-ar", "sota-ur",
                     "sdf-ep", "df-ep", "sota-ep")

# The real-world scenario runs at a slightly laxer conservative percentile.
RW_V = 0.85


def _single_group_table(scenario_names) -> list[Experiment]:
    arms = []
    for name in scenario_names:
        sc = builtin_scenario(name)
        config = SdfConfig(T=60, v=RW_V if name == "RW" else 0.9)
        for algorithm in TABLE3_ALGORITHMS:
            arms.append(Experiment(scenarios=(sc,), algorithm=algorithm, config=config))
    return arms


def _table3() -> list[Experiment]:
    return _single_group_table(TABLE3_SCENARIOS)


def _tables_extra() -> list[Experiment]:
    return _single_group_table(EXTRA_SCENARIOS)


def _table4() -> list[Experiment]:
    pair = (builtin_scenario("A"), builtin_scenario("B"))
    config = SdfConfig(T=80)
    return [Experiment(scenarios=pair, algorithm=a, config=config)
            for a in TABLE4_ALGORITHMS]


def _table5() -> list[Experiment]:
    pair = (builtin_scenario("A"), builtin_scenario("B"))
    config = SdfConfig(T=80)
    arms = []
    for tp in (20, 40, 60):
        for algorithm in ("sdf-ar", "sdf-ur"):
            arms.append(Experiment(scenarios=pair, algorithm=algorithm, config=config,
                                   tp=(0, tp), label=f"A+B Tp={tp}"))
    return arms


def _vsweep() -> list[Experiment]:
    sc = builtin_scenario("A")
    return [Experiment(scenarios=(sc,), algorithm="sdf",
                       config=SdfConfig(T=60, v=v), label=f"A v={v:.2f}")
            for v in (0.80, 0.85, 0.90, 0.95)]


def _prior_sensitivity() -> list[Experiment]:
    sc = builtin_scenario("A")
    config = SdfConfig(T=60)
    return [Experiment(scenarios=(sc,), algorithm="sdf", config=config,
                       prior=prior, label=f"A prior={prior}")
            for prior in ("default", "hivar", "noninfo")]


def _safety_sweep() -> list[Experiment]:
    sc = builtin_scenario("A")
    return [Experiment(scenarios=(sc,), algorithm="sdf",
                       config=SdfConfig(T=60, psi_s=level), label=f"A psi_s={level:.2f}")
            for level in (0.35, 0.40, 0.45, 0.50)]


_SUITES = {
    "table3": _table3,
    "table4": _table4,
    "table5-prior": _table5,
    "vsweep": _vsweep,
    "prior-sensitivity": _prior_sensitivity,
    "safety-sweep": _safety_sweep,
    "tables-extra": _tables_extra,
}

SUITE_NAMES = tuple(_SUITES)


def experiment_suite(name: str) -> list[Experiment]:
    """The full scenarios x algorithms x configs cross-product for a suite."""
    try:
        builder = _SUITES[name.lower()]
    except KeyError:
        raise KeyError(f"unknown suite {name!r}; choices: {', '.join(SUITE_NAMES)}") from None
    return builder()
