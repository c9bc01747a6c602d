"""
Phase-curve sweeps: sigma^2_N/N against the control parameter (alpha for the
MG, alpha_ns for the GCMG), with detection of the volatility minimum.
"""

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from mgcal.game.config import GameConfig
from mgcal.game.streams import replica_seed
from mgcal.utilities import moving_average

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhasePoint:
    control: float
    sigma2_over_N: float
    stderr: float
    n_seeds: int
    N: int
    P: int = 0
    deviation: float = 0.0


@dataclass(frozen=True)
class CriticalPoint:
    control: float
    sigma_c: float
    N: int
    index: int


@dataclass
class PhaseCurve:
    points: list
    critical: Optional[CriticalPoint] = None
    kind: str = 'MG'
    meta: dict = field(default_factory=dict)

    @property
    def control_name(self):
        return 'alpha' if self.kind == 'MG' else 'alpha_ns'

    @property
    def detected(self):
        return self.critical is not None

    def controls(self):
        return np.array([p.control for p in self.points])

    def per_N(self):
        return np.array([p.sigma2_over_N for p in self.points])

    def stderrs(self):
        return np.array([p.stderr for p in self.points])

    def branch(self):
        '''
        Nodes at or above the critical point: (controls, sigma2_over_N).
        '''
        if self.critical is None:
            raise ValueError('Phase curve has no detected critical point')
        keep = slice(self.critical.index, None)
        return self.controls()[keep], self.per_N()[keep]


def detect_critical(points):
    '''
    Critical point as the argmin of a 3-point moving average of sigma^2_N/N;
    ties go to the smaller control. Needs at least 3 points.
    '''
    if len(points) < 3:
        logger.warning(f'Critical point detection needs >= 3 points, got {len(points)}')
        return None
    smoothed = moving_average([p.sigma2_over_N for p in points], 3)
    index = int(np.argmin(smoothed)) + 1
    node = points[index]
    return CriticalPoint(control=node.control, sigma_c=math.sqrt(node.N*node.sigma2_over_N),
                         N=node.N, index=index)


def _replica_task(args):
    config, options = args
    from mgcal.simulator.estimators import estimate_sigma
    est = estimate_sigma(config, **options)
    return est.per_N, est.stderr/config.N


def _point_key(config, n_seeds, options):
    '''
    Checkpoint key of a phase point: the game, the replica count and every
    estimator setting that changes its value.
    '''
    return [config.kind, config.N, config.P, config.N_s, config.N_p, config.seed,
            config.gamma, config.w, config.epsilon, n_seeds,
            options['burn_in'], options['measure'], options['n_batches'], options['activation'],
            np.asarray(options['init_scores'], dtype=float).tolist()]


def _load_checkpoint(path):
    done = {}
    if path is None or not os.path.exists(path):
        return done
    with open(path, 'r', encoding='utf-8') as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            done[json.dumps(record['key'])] = record['point']
    logger.info(f'Resuming sweep: {len(done)} points found in {path}')
    return done


def _append_checkpoint(path, key, point):
    if path is None:
        return
    with open(path, 'a', encoding='utf-8') as fh:
        fh.write(json.dumps({'key': key, 'point': asdict(point)}) + '\n')


def sweep_phase(configs, seeds=1, burn_in=None, measure=None, n_batches=10, activation='prose',
                init_scores=0.0, n_jobs=1, checkpoint=None, deviations=None, meta=None):
    '''
    One phase-curve point per configuration, averaged over `seeds` replicas
    (each replica draws its own strategy table and information sequence).
    Per-point results are appended to `checkpoint` as they complete, and
    points already present there are not recomputed.
    '''
    configs = list(configs)
    if not configs:
        raise ValueError('Sweep needs at least one configuration')
    if seeds < 1:
        raise ValueError('Sweep needs at least one seed per point')
    first = configs[0]
    for c in configs:
        if (c.kind, c.w, c.gamma) != (first.kind, first.w, first.gamma):
            raise ValueError('All sweep configurations should share kind, w and gamma')
    if deviations is None:
        deviations = [0.0]*len(configs)
    order = sorted(range(len(configs)), key=lambda k: (configs[k].control, configs[k].N))
    configs = [configs[k] for k in order]
    deviations = [deviations[k] for k in order]

    options = {'burn_in': burn_in, 'measure': measure, 'n_batches': n_batches,
               'activation': activation, 'init_scores': init_scores}
    done = _load_checkpoint(checkpoint)
    pending = []
    for c in configs:
        if json.dumps(_point_key(c, seeds, options)) in done:
            continue
        for k in range(seeds):
            pending.append((c.replace(seed=replica_seed(c.seed, k)), options))

    if n_jobs > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as executor:
            results = iter(executor.map(_replica_task, pending))
            points = _collect(configs, deviations, seeds, options, done, results, checkpoint)
    else:
        points = _collect(configs, deviations, seeds, options, done, map(_replica_task, pending), checkpoint)

    curve_meta = {'gamma': first.gamma, 'w': first.w}
    Ns = {c.N for c in configs}
    Ms = {c.M for c in configs}
    curve_meta['N'] = Ns.pop() if len(Ns) == 1 else None
    curve_meta['M'] = Ms.pop() if len(Ms) == 1 else None
    curve_meta.update(meta or {})
    curve = PhaseCurve(points=points, critical=detect_critical(points), kind=first.kind, meta=curve_meta)
    if curve.critical is None:
        logger.warning('Phase curve has no detected critical point')
    else:
        logger.info(f'Critical point {curve.control_name}_c = {curve.critical.control:.4g}, '
                    f'sigma_c = {curve.critical.sigma_c:.4g}')
    return curve


def _collect(configs, deviations, seeds, options, done, results, checkpoint):
    points = []
    for c, dev in zip(configs, deviations):
        key = _point_key(c, seeds, options)
        if json.dumps(key) in done:
            points.append(PhasePoint(**done[json.dumps(key)]))
            continue
        per_N, errs = zip(*[next(results) for _ in range(seeds)])
        per_N = np.array(per_N)
        if seeds > 1:
            stderr = float(per_N.std(ddof=1)/math.sqrt(seeds))
        else:
            stderr = float(errs[0])
        point = PhasePoint(control=c.control, sigma2_over_N=float(per_N.mean()), stderr=stderr,
                           n_seeds=seeds, N=c.N, P=c.P, deviation=float(dev))
        logger.info(f'{c.control_name} = {c.control:.4g} (N={c.N}, P={c.P}): '
                    f'sigma2_N/N = {point.sigma2_over_N:.4f} +/- {stderr:.4f}')
        _append_checkpoint(checkpoint, key, point)
        points.append(point)
    return points


def mg_grid(alphas, N=None, M=None, gamma=1.0, w=1.0, seed=0):
    '''
    MG configurations for a grid of alpha: either N fixed and P = round(alpha N),
    or P = 2**M fixed and N = round(P/alpha).
    '''
    if (N is None) == (M is None):
        raise ValueError('Please provide exactly one of N (fixed agents) or M (fixed memory)')
    configs = []
    for a in alphas:
        if a <= 0:
            raise ValueError(f'alpha should be > 0, got {a}')
        if N is not None:
            configs.append(GameConfig(kind='MG', N=N, P=max(1, round(a*N)), gamma=gamma, w=w, seed=seed))
        else:
            P = 2**int(M)
            configs.append(GameConfig.from_memory('MG', max(1, round(P/a)), M, gamma=gamma, w=w, seed=seed))
    return configs


def gcmg_grid(base, n_s_grid, n_p, L, epsilon):
    '''
    GCMG configurations with P N_s = L and N_s/P = n_s for each grid value, and
    N_p = round(n_p P). Returns (configs, relative deviations of P N_s from L).
    '''
    if L < 1:
        raise ValueError(f'L should be >= 1, got {L}')
    configs, deviations = [], []
    for n_s in n_s_grid:
        if n_s <= 0:
            raise ValueError(f'n_s should be > 0, got {n_s}')
        P = max(1, round(math.sqrt(L/n_s)))
        N_s = round(L/P)
        N_p = round(n_p*P)
        if N_s + N_p < 1:
            raise ValueError(f'Grid point n_s = {n_s} gives an empty game')
        dev = abs(P*N_s - L)/L
        if dev > 0:
            logger.info(f'n_s = {n_s}: nearest integral pair P = {P}, N_s = {N_s} (P N_s = {P*N_s}, L = {L})')
        configs.append(GameConfig.gcmg(N_s, N_p, P, gamma=base.gamma, w=base.w,
                                       epsilon=epsilon, seed=base.seed))
        deviations.append(dev)
    return configs, deviations


def sweep_phase_gcmg(base, n_s_grid, n_p, L, epsilon, seeds=1, burn_in=None, measure=None,
                     n_batches=10, activation='prose', init_scores=0.0, n_jobs=1, checkpoint=None):
    configs, deviations = gcmg_grid(base, n_s_grid, n_p, L, epsilon)
    meta = {'L': L, 'n_p': n_p, 'epsilon': epsilon}
    return sweep_phase(configs, seeds, burn_in=burn_in, measure=measure, n_batches=n_batches,
                       activation=activation, init_scores=init_scores, n_jobs=n_jobs,
                       checkpoint=checkpoint, deviations=deviations, meta=meta)


def sidecar_path(csv_path):
    return Path(csv_path).with_suffix('.json')


def write_phase_curve(curve, csv_path, json_path=None):
    control_col = 'control' if curve.kind == 'MG' else 'alpha_ns'
    frame = pd.DataFrame({
        control_col: curve.controls(),
        'sigma2_over_N': curve.per_N(),
        'stderr': curve.stderrs(),
        'n_seeds': [p.n_seeds for p in curve.points],
        'N': [p.N for p in curve.points],
        'P': [p.P for p in curve.points],
        'deviation': [p.deviation for p in curve.points],
    })
    frame.to_csv(csv_path, index=False, float_format='%.17g')

    crit = curve.critical
    if curve.kind == 'MG':
        sidecar = {'alpha_c': crit.control if crit else None}
    else:
        sidecar = {'alpha_ns_c': crit.control if crit else None}
    sidecar.update({'sigma_c': crit.sigma_c if crit else None,
                    'N': crit.N if crit else curve.meta.get('N'),
                    'kind': curve.kind, 'detected': crit is not None})
    sidecar.update({k: v for k, v in curve.meta.items() if k != 'N'})
    json_path = sidecar_path(csv_path) if json_path is None else json_path
    with open(json_path, 'w', encoding='utf-8') as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
    return csv_path, json_path


def read_phase_curve(csv_path, json_path=None):
    frame = pd.read_csv(csv_path, float_precision='round_trip')
    json_path = sidecar_path(csv_path) if json_path is None else json_path
    sidecar = {}
    if os.path.exists(json_path):
        with open(json_path, 'r', encoding='utf-8') as fh:
            sidecar = json.load(fh)
    if 'alpha_ns' in frame.columns:
        kind, control_col = 'GCMG', 'alpha_ns'
    else:
        kind, control_col = sidecar.get('kind', 'MG'), 'control'
    if control_col not in frame.columns:
        raise ValueError(f'Phase curve file {csv_path} has no {control_col!r} column')

    points = []
    for row in frame.itertuples(index=False):
        row = row._asdict()
        points.append(PhasePoint(control=float(row[control_col]), sigma2_over_N=float(row['sigma2_over_N']),
                                 stderr=float(row['stderr']), n_seeds=int(row['n_seeds']),
                                 N=int(row.get('N', sidecar.get('N') or 0)),
                                 P=int(row.get('P', 0)), deviation=float(row.get('deviation', 0.0))))

    crit_control = sidecar.get('alpha_c' if kind == 'MG' else 'alpha_ns_c')
    if sidecar.get('detected') and crit_control is not None:
        index = int(np.argmin([abs(p.control - crit_control) for p in points]))
        critical = CriticalPoint(control=points[index].control, sigma_c=float(sidecar['sigma_c']),
                                 N=int(sidecar.get('N') or points[index].N), index=index)
    else:
        critical = detect_critical(points)
    meta = {k: v for k, v in sidecar.items()
            if k not in ('alpha_c', 'alpha_ns_c', 'sigma_c', 'detected', 'kind')}
    return PhaseCurve(points=points, critical=critical, kind=kind, meta=meta)
