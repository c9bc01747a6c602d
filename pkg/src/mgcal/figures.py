"""
Plot data for the phase-curve and calibration figures, as tidy frames with
columns (series, x, y). Rendering is left to the reader's tool of choice.

 1  sigma^2_N/N against alpha or alpha_ns, one series per phase curve
 2  fitted control and critical control across calibrations indexed by M or L
 3-7 game and market implied vols against maturity, per moneyness
 8  calibrated w with and without time rescaling, indexed by M or L
"""

import logging

import pandas as pd

logger = logging.getLogger(__name__)

FIGURES = tuple(range(1, 9))
COLUMNS = ['series', 'x', 'y']


def _rows(series, xs, ys):
    return [{'series': series, 'x': float(x), 'y': float(y)} for x, y in zip(xs, ys)]


def _index(result):
    curve_meta = result.meta.get('curve', {})
    for key in ('M', 'L'):
        if curve_meta.get(key) is not None:
            return key, curve_meta[key]
    return 'N', result.N


def phase_figure(curves, labels=None):
    if not curves:
        raise ValueError('Figure 1 needs at least one phase curve')
    labels = labels or [f'{c.kind}:{k}' for k, c in enumerate(curves)]
    rows = []
    for label, curve in zip(labels, curves):
        rows += _rows(label, curve.controls(), curve.per_N())
        if curve.critical is not None:
            rows += _rows(f'{label}:critical', [curve.critical.control],
                          [curve.per_N()[curve.critical.index]])
    return pd.DataFrame(rows, columns=COLUMNS)


def control_figure(results):
    if not results:
        raise ValueError('Figure 2 needs at least one calibration result')
    rows = []
    for result in sorted(results, key=lambda r: _index(r)[1]):
        _, x = _index(result)
        rows += _rows('fitted', [x], [result.fitted_control])
        rows += _rows('critical', [x], [result.critical_control])
    return pd.DataFrame(rows, columns=COLUMNS)


def term_structure_figure(result):
    rows = []
    for m in sorted({round(o['moneyness'], 6) for o in result.per_option}, reverse=True):
        quotes = sorted((o for o in result.per_option if round(o['moneyness'], 6) == m),
                        key=lambda o: o['maturity_years'])
        mat = [o['maturity_years'] for o in quotes]
        rows += _rows(f'market m={m:g}', mat, [o['market_iv'] for o in quotes])
        rows += _rows(f'game m={m:g}', mat, [o['model_iv'] for o in quotes])
    return pd.DataFrame(rows, columns=COLUMNS)


def w_figure(results):
    if not results:
        raise ValueError('Figure 8 needs at least one calibration result')
    rows = []
    for result in sorted(results, key=lambda r: _index(r)[1]):
        _, x = _index(result)
        rows += _rows('w_bar', [x], [result.w_bar])
        rows += _rows('w_unrescaled', [x], [result.w_unrescaled])
        rows += _rows('w_rescaled_by_N', [x], [result.w_rescaled_by_N])
    return pd.DataFrame(rows, columns=COLUMNS)


def figure_data(figure_id, curves=None, results=None, labels=None):
    if figure_id not in FIGURES:
        raise ValueError(f'Unknown figure id {figure_id}; valid ids are {list(FIGURES)}')
    if figure_id == 1:
        return phase_figure(curves or [], labels)
    if figure_id == 2:
        return control_figure(results or [])
    if figure_id == 8:
        return w_figure(results or [])
    if not results:
        raise ValueError(f'Figure {figure_id} needs a calibration result')
    if len(results) > 1:
        logger.warning(f'Figure {figure_id} uses the first of {len(results)} calibration results')
    return term_structure_figure(results[0])


def write_figure(frame, path):
    frame.to_csv(path, index=False, float_format='%.17g')
    return path
