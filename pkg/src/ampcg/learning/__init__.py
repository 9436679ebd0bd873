from dataclasses import replace

from ..exceptions import ConfigError
from .lcd import LCDResult, SeparationTree, UIGMethod, lcd_amp
from .orientation import pattern
from .pc import LearnConfig, LearnResult, Variant, learn, learn_report

ALGORITHMS = {
    "pc": Variant.ORIGINAL,
    "stable": Variant.STABLE,
    "conservative": Variant.CONSERVATIVE,
    "stable-conservative": Variant.STABLE_CONSERVATIVE,
    "lcd": None,
}


def run_learner(algo, src, cfg, uig=None):
    """
    Run the learner named ``algo`` (a key of ALGORITHMS). Returns a LearnResult or an LCDResult;
    both carry ``graph``, ``query_count``, ``elapsed`` and ``conflicts``.
    """
    if algo not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm '{algo}', expected one of {', '.join(ALGORITHMS)}")
    if algo == "lcd":
        return lcd_amp(src, cfg, uig)
    return learn_report(src, replace(cfg, variant=ALGORITHMS[algo]))


__all__ = [
    "ALGORITHMS",
    "LCDResult",
    "LearnConfig",
    "LearnResult",
    "SeparationTree",
    "UIGMethod",
    "Variant",
    "lcd_amp",
    "learn",
    "learn_report",
    "pattern",
    "run_learner",
]
