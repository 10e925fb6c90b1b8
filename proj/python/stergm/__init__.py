"""Exact likelihood inference for separable temporal ERGMs on small dynamic networks.

The heavy lifting lives in the compiled ``_core`` module; these wrappers
translate between Python dicts and the JSON documents the core speaks
(``stergm-panel/1`` and ``stergm-fit/1``).
"""

import json

from ._core import __version__
from ._core import fit as _fit
from ._core import loglik as _loglik
from ._core import lr_test as _lr_test
from ._core import panel_digest as _panel_digest
from ._core import simulate as _simulate
from ._core import stat_totals as _stat_totals

__all__ = [
    "__version__",
    "fit",
    "simulate",
    "loglik",
    "lr_test",
    "panel_digest",
    "stat_totals",
]


def _panel_json(panel):
    return panel if isinstance(panel, str) else json.dumps(panel)


def fit(panel, formation="", persistence="", **kwargs):
    """Exact MLE fit of a panel; returns the fit document as a dict.

    ``panel`` may be a ``stergm-panel/1`` dict or its JSON text.  Keyword
    arguments: ``tol``, ``max_iters``, ``threads``, ``by_time``.
    """
    return json.loads(_fit(_panel_json(panel), formation, persistence, **kwargs))


def simulate(**kwargs):
    """Draw a synthetic panel; returns a ``stergm-panel/1`` dict.

    Keyword arguments: ``n``, ``games``, ``transitions``, ``initial_ties``,
    ``seed``, ``formation``, ``persistence``, ``theta_formation``,
    ``theta_persistence``, ``attr_source``.
    """
    return json.loads(_simulate(**kwargs))


def loglik(panel, formation, persistence, theta_formation, theta_persistence, threads=0):
    """Exact panel log-likelihood at the given coefficients."""
    return _loglik(_panel_json(panel), formation, persistence, list(theta_formation),
                   list(theta_persistence), threads)


def lr_test(reduced_fit, full_fit):
    """Deviance test of two nested fits (dicts or JSON documents)."""
    return _lr_test(_panel_json(reduced_fit), _panel_json(full_fit))


def panel_digest(panel):
    """Canonical sha256 digest of a panel."""
    return _panel_digest(_panel_json(panel))


def stat_totals(panel, formation, persistence):
    """Summed observed statistics, formation side then persistence side."""
    return _stat_totals(_panel_json(panel), formation, persistence)
