# -*- coding: utf-8 -*-
"""
Shared numerical helpers and the package exception hierarchy.
"""

import hashlib
import json
import logging

import numpy as np
import scipy.linalg as LA

logger = logging.getLogger(__name__)


class MgcalError(Exception):
    pass


class FactorizationError(MgcalError, ArithmeticError):
    """Raised when a covariance table cannot be factorized as A A'."""
    pass


class NoArbitrageError(MgcalError, ValueError):
    pass


class BranchError(MgcalError, ValueError):
    """Raised when a control value lies below the detected critical point."""
    pass


class CriticalPointError(MgcalError, ValueError):
    pass


class IngestError(MgcalError, ValueError):
    """Raised by the CSV readers; `errors` lists 'line n: reason' strings."""

    def __init__(self, message, errors=None):
        self.errors = list(errors or [])
        if self.errors:
            message = message + '\n' + '\n'.join(self.errors)
        super().__init__(message)


def is_psd(P, scale=1.0, tol=1e-10):
    P = np.asarray(P, dtype=float)
    if P.size == 0:
        return True
    if not np.allclose(P, P.T, atol=tol*max(scale, 1e-300)):
        return False
    return bool(LA.eigvalsh(P).min() >= -tol*scale)


def psd_factor(cov, jitters=(0.0, 1e-12, 1e-10), max_negative=1e-6):
    '''
    Factor a symmetric positive semidefinite table as A A'.

    Cholesky is tried first with an escalating diagonal jitter (relative to the
    mean diagonal). Rank-deficient tables fall back to a clipped eigenvalue
    factor, which reconstructs the table to rounding. Eigenvalues more negative
    than max_negative (relative) are not a covariance and raise.
    '''
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError('Covariance table should be a square matrix')
    n = cov.shape[0]
    cov = 0.5*(cov + cov.T)
    scale = float(np.mean(np.diag(cov))) if n > 0 else 0.0
    if not np.isfinite(cov).all():
        raise FactorizationError('Covariance table has non-finite entries')
    if scale <= 0.0:
        if np.allclose(cov, 0.0):
            return np.zeros_like(cov)
        raise FactorizationError(f'Covariance table has non-positive mean diagonal {scale:.3e}')

    for jitter in jitters:
        try:
            return LA.cholesky(cov + jitter*scale*np.eye(n), lower=True)
        except LA.LinAlgError:
            logger.debug(f'Cholesky failed with relative jitter {jitter:.1e}')

    eig_val, eig_vec = LA.eigh(cov)
    min_eig = float(eig_val.min())
    if min_eig < -max_negative*scale:
        cond = abs(eig_val).max()/max(abs(min_eig), 1e-300)
        raise FactorizationError(
            f'Covariance table is not positive semidefinite: min eigenvalue {min_eig:.3e} '
            f'(relative {min_eig/scale:.3e}), |max/min| eigenvalue ratio {cond:.3e}')
    return eig_vec*np.sqrt(np.maximum(eig_val, 0.0))


def batch_means(values, n_batches=10):
    '''
    Mean and batch-means standard error of a correlated time series.
    '''
    values = np.asarray(values, dtype=float)
    if n_batches < 2:
        raise ValueError('Batch means need at least 2 batches')
    if len(values) < n_batches:
        raise ValueError(f'Cannot form {n_batches} batches from {len(values)} values')
    usable = (len(values)//n_batches)*n_batches
    batches = values[:usable].reshape(n_batches, -1).mean(axis=1)
    mean = float(values.mean())
    stderr = float(batches.std(ddof=1)/np.sqrt(n_batches))
    return mean, stderr


def moving_average(values, width=3):
    values = np.asarray(values, dtype=float)
    if len(values) < width:
        return np.array([])
    return np.convolve(values, np.ones(width)/width, mode='valid')


def file_digest(path):
    h = hashlib.sha256()
    with open(path, 'rb') as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b''):
            h.update(chunk)
    return h.hexdigest()


def dict_digest(d):
    text = json.dumps(d, sort_keys=True, default=str)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def parse_grid(spec):
    '''
    'lo:hi:n' gives n log-spaced points from lo to hi (inclusive);
    'a,b,c' gives an explicit list.
    '''
    spec = spec.strip()
    if ':' in spec:
        parts = spec.split(':')
        if len(parts) != 3:
            raise ValueError(f'Grid spec should read lo:hi:n, got {spec!r}')
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if not (0 < lo < hi):
            raise ValueError(f'Grid spec needs 0 < lo < hi, got {spec!r}')
        if n < 1:
            raise ValueError(f'Grid spec needs n >= 1, got {spec!r}')
        if n == 1:
            return [lo]
        return np.geomspace(lo, hi, n).tolist()
    values = [float(v) for v in spec.split(',') if v.strip()]
    if not values:
        raise ValueError(f'Empty grid spec {spec!r}')
    return sorted(values)
