"""
Two-step calibration of the game to option data:

1. w_bar from the minimum of a market volatility index,
   sqrt(nu_min) = sqrt(alpha_c) sigma_c / (w_bar N);
2. the control parameter on the asymmetric branch of the phase curve that
   minimizes the squared difference between game and market implied vols.
"""

import json
import logging
import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from mgcal.utilities import BranchError, CriticalPointError, file_digest

logger = logging.getLogger(__name__)

MODES = ('flat', 'maturity')


def _critical(curve):
    if curve.critical is None:
        raise CriticalPointError('Phase curve has no detected critical point; '
                                 'extend the sweep around the volatility minimum')
    return curve.critical


def calibrate_w(series, curve, N=None):
    '''
    w_bar = sqrt(control_c) sigma_c / (N min(series)). sigma_c is measured at the
    curve's own N; another N is used as given, with a warning, and the
    caller is responsible for sigma_c still describing that game.
    '''
    crit = _critical(curve)
    N = crit.N if N is None else N
    if N < 1:
        raise ValueError(f'Number of agents N should be >= 1, got {N}')
    if N != crit.N:
        logger.warning(f'calibrate_w with N = {N} but sigma_c = {crit.sigma_c:.4g} was measured at N = {crit.N}')
    if len(series) == 0:
        raise ValueError('Volatility index series is empty')
    return math.sqrt(crit.control)*crit.sigma_c/(N*series.min_value)


def effective_N(N, quote=None, mode='flat', time_scale=None, N_min=1):
    if mode == 'flat':
        return N
    if mode != 'maturity':
        raise ValueError(f'Please provide a valid fit mode {MODES}')
    if quote is None or time_scale is None:
        raise ValueError('Maturity-scaled mode needs a quote and a time scale')
    return max(N_min, int(round(quote.maturity/time_scale)))


def branch_per_N(control, curve):
    '''
    sigma^2_N/N at `control` by linear interpolation between the branch nodes
    at and above the critical point.
    '''
    crit = _critical(curve)
    controls, per_N = curve.branch()
    if control < crit.control*(1 - 1e-12):
        raise BranchError(f'{curve.control_name} = {control} lies below the critical value {crit.control}')
    if control > controls[-1]*(1 + 1e-12):
        raise ValueError(f'{curve.control_name} = {control} lies above the phase curve range {controls[-1]}')
    return float(np.interp(control, controls, per_N))


def model_iv(control, curve, w_bar, N, quote=None, mode='flat', time_scale=None, N_min=1):
    '''
    sqrt(control sigma^2_N(control))/(w_bar N), with sigma^2_N = N per_N(control).
    In maturity mode N is replaced by max(N_min, round(maturity/time_scale)).
    '''
    if not w_bar > 0:
        raise ValueError(f'w_bar should be > 0, got {w_bar}')
    N_eff = effective_N(N, quote, mode, time_scale, N_min)
    sigma2_N = N_eff*branch_per_N(control, curve)
    return math.sqrt(control*sigma2_N)/(w_bar*N_eff)


@dataclass
class CalibrationResult:
    w_bar: float
    fitted_control: float
    fitted_sigma2_N: float
    sse: float
    per_option: list
    critical_control: float
    critical_gap: float
    w_unrescaled: float
    w_rescaled_by_N: float
    mode: str
    N: int
    kind: str = 'MG'
    boundary: Optional[str] = None
    inputs: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def control_name(self):
        return 'alpha' if self.kind == 'MG' else 'alpha_ns'

    @property
    def pinned_at_critical(self):
        return self.boundary == 'critical'

    def residuals(self):
        return np.array([row['residual'] for row in self.per_option])

    def to_dict(self):
        out = asdict(self)
        out['control_name'] = self.control_name
        return out

    @classmethod
    def from_dict(cls, d):
        d = {k: v for k, v in d.items() if k != 'control_name'}
        return cls(**d)

    def write_json(self, path):
        with open(path, 'w', encoding='utf-8') as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
        return path

    @classmethod
    def read_json(cls, path):
        with open(path, 'r', encoding='utf-8') as fh:
            return cls.from_dict(json.load(fh))


def calibrate_chain(chain, curve, w_bar, N, mode='flat', time_scale=None, N_min=1, tolerance=1e-6):
    '''
    Minimize SSE(control) = sum_j (model_iv_j - market_iv_j)^2 over the
    asymmetric branch: best sweep node first, then a bounded scalar search on
    the neighbouring intervals, then a least-squares polish on the residual
    vector. The result never has a larger SSE than the best node.
    '''
    chain = list(chain)
    if not chain:
        raise ValueError('Option chain is empty')
    if mode not in MODES:
        raise ValueError(f'Please provide a valid fit mode {MODES}')
    crit = _critical(curve)
    controls, _ = curve.branch()
    if len(controls) < 2:
        raise BranchError('Phase curve has no nodes above the critical point')

    market = np.array([q.market_iv for q in chain])

    def model(c):
        c = float(np.clip(np.ravel(c)[0], controls[0], controls[-1]))
        return np.array([model_iv(c, curve, w_bar, N, q, mode, time_scale, N_min) for q in chain])

    def residuals(c):
        return model(c) - market

    def sse(c):
        return float((residuals(c)**2).sum())

    grid_sse = np.array([sse(c) for c in controls])
    k = int(np.argmin(grid_sse))
    best_c, best_sse = float(controls[k]), float(grid_sse[k])

    lo, hi = float(controls[max(k - 1, 0)]), float(controls[min(k + 1, len(controls) - 1)])
    scalar = minimize_scalar(sse, bounds=(lo, hi), method='bounded',
                             options={'xatol': tolerance*max(abs(best_c), 1e-12)*1e-3})
    if scalar.fun < best_sse:
        best_c, best_sse = float(scalar.x), float(scalar.fun)

    if best_sse > 0 and hi > lo:
        polish = least_squares(residuals, x0=[min(max(best_c, lo), hi)], bounds=([lo], [hi]),
                               xtol=1e-15, ftol=1e-15, gtol=1e-15)
        polished = sse(polish.x[0])
        if polished <= best_sse:
            best_c, best_sse = float(polish.x[0]), polished

    boundary = None
    if abs(best_c - controls[0]) <= tolerance*controls[0]:
        boundary = 'critical'
        logger.warning(f'Fit pinned at the critical point {curve.control_name}_c = {controls[0]:.6g}')
    elif abs(best_c - controls[-1]) <= tolerance*controls[-1]:
        boundary = 'upper'
        logger.warning(f'Fit pinned at the upper end of the phase curve {controls[-1]:.6g}')

    per_option = []
    for q, iv in zip(chain, model(best_c)):
        row = q.to_dict()
        row.update({'moneyness': q.moneyness, 'model_iv': float(iv), 'residual': float(iv - q.market_iv)})
        per_option.append(row)

    result = CalibrationResult(
        w_bar=float(w_bar), fitted_control=best_c, fitted_sigma2_N=N*branch_per_N(best_c, curve),
        sse=best_sse, per_option=per_option, critical_control=float(crit.control),
        critical_gap=best_c - float(crit.control), w_unrescaled=float(w_bar)*math.sqrt(N),
        w_rescaled_by_N=float(w_bar)/math.sqrt(crit.control), mode=mode, N=int(N),
        kind=curve.kind, boundary=boundary,
        meta={'time_scale': time_scale, 'N_min': N_min, 'grid_nodes': len(controls)})
    logger.info(f'Fitted {curve.control_name} = {best_c:.6g} (critical gap {result.critical_gap:.3g}), '
                f'SSE = {best_sse:.3e}')
    return result


class Calibrator():

    '''
    INPUTS
    ------------------------------------

    mode:             'flat' (one game vol for the whole chain) or
                      'maturity' (N tied to each quote's maturity)
                      Default: 'flat'

    time_scale:       years per agent in maturity mode, N_j = round(maturity/time_scale)

    N_min:            smallest N used in maturity mode. Default: 1

    tolerance:        relative tolerance of the scalar search and the
                      boundary flags. Default: 1e-6

    print_status:     print the fitted control and SSE
    '''

    def __init__(
        self,
        mode: str = 'flat',
        time_scale: float = None,
        N_min: int = 1,
        tolerance: float = 1e-6,
        print_status: bool = False,
    ):
        self.mode = mode
        if self.mode not in MODES:
            raise ValueError('Please provide a valid fit mode')

        self.time_scale = time_scale
        if self.mode == 'maturity' and (self.time_scale is None or self.time_scale <= 0):
            raise ValueError('Please provide a positive time scale for the maturity mode')

        self.N_min = N_min
        if self.N_min < 1:
            raise ValueError('Please provide N_min >= 1')

        self.tolerance = tolerance
        if not 0 < self.tolerance < 1:
            raise ValueError('Please provide a tolerance in (0, 1)')

        self.print_status = print_status

    def run_calibration(self, chain, series, curve, N=None, inputs=None):
        N = _critical(curve).N if N is None else N
        w_bar = calibrate_w(series, curve, N)
        result = calibrate_chain(chain, curve, w_bar, N, mode=self.mode, time_scale=self.time_scale,
                                 N_min=self.N_min, tolerance=self.tolerance)
        result.meta['vol_index_min'] = series.min_value
        result.meta['curve'] = dict(curve.meta)
        if inputs:
            result.inputs.update(inputs)
        if self.print_status:
            print(f'w_bar = {result.w_bar:.6g}, {result.control_name} = {result.fitted_control:.6g} '
                  f'(gap {result.critical_gap:.3g}), SSE = {result.sse:.3e}')
        return result

    def calibrate_files(self, chain_path, index_path, curve_path, N=None):
        from mgcal.calibration.market_data import ingest_chain, ingest_vol_index
        from mgcal.simulator.sweeps import read_phase_curve, sidecar_path

        curve = read_phase_curve(curve_path)
        inputs = {'chain': file_digest(chain_path), 'vol_index': file_digest(index_path),
                  'curve': file_digest(curve_path)}
        sidecar = sidecar_path(curve_path)
        try:
            inputs['curve_sidecar'] = file_digest(sidecar)
        except FileNotFoundError:
            pass
        return self.run_calibration(ingest_chain(chain_path), ingest_vol_index(index_path), curve,
                                    N=N, inputs=inputs)
