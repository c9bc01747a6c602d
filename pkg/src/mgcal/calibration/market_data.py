"""
Option-chain and volatility-index inputs.

Chain CSV header:  spot,strike,maturity_years,rate,market_iv
Index CSV header:  date,level   (ISO-8601 dates, decimal levels)
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from mgcal.utilities import IngestError

logger = logging.getLogger(__name__)

CHAIN_COLUMNS = ['spot', 'strike', 'maturity_years', 'rate', 'market_iv']
INDEX_COLUMNS = ['date', 'level']

# moneyness triples of the two reference chains
MONEYNESS_SETS = ((1.06, 1.00, 0.94), (1.1, 0.98, 0.88))
VDAX_MINIMUM = 0.1098


@dataclass(frozen=True)
class OptionQuote:
    spot: float
    strike: float
    maturity: float
    rate: float
    market_iv: float

    def __post_init__(self):
        if not (self.spot > 0 and self.strike > 0):
            raise ValueError('Spot and strike should be > 0')
        if not self.maturity > 0:
            raise ValueError(f'Maturity should be > 0, got {self.maturity}')
        if not self.market_iv > 0:
            raise ValueError(f'Market implied volatility should be > 0, got {self.market_iv}')

    @property
    def moneyness(self):
        return self.spot/self.strike

    def to_dict(self):
        return {'spot': self.spot, 'strike': self.strike, 'maturity_years': self.maturity,
                'rate': self.rate, 'market_iv': self.market_iv}


@dataclass(frozen=True)
class VolIndexSeries:
    dates: tuple
    levels: tuple

    def __post_init__(self):
        if len(self.levels) == 0:
            raise ValueError('Volatility index series is empty')
        if len(self.dates) != len(self.levels):
            raise ValueError('Dates and levels should have the same length')
        if any(not (0 < lvl < 5) for lvl in self.levels):
            raise ValueError('Volatility index levels should lie in (0, 5)')
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError('Volatility index dates should be strictly increasing')

    @property
    def min_value(self):
        return min(self.levels)

    def __len__(self):
        return len(self.levels)


def _read_frame(path, columns, what):
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise IngestError(f'{what} file {path} is empty') from None
    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise IngestError(f'{what} file {path} is missing columns {missing}; expected header {",".join(columns)}')
    if frame.empty:
        raise IngestError(f'{what} file {path} has a header but no rows')
    return frame


def _parse_float(text):
    '''
    Correctly rounded float of a CSV cell, or None when malformed or not finite.
    '''
    try:
        value = float(text)
    except (TypeError, ValueError):
        return None
    return value if math.isfinite(value) else None


def ingest_chain(path):
    frame = _read_frame(path, CHAIN_COLUMNS, 'Option chain')
    quotes, errors = [], []
    for k, row in enumerate(frame[CHAIN_COLUMNS].itertuples(index=False)):
        line = k + 2
        values = {c: _parse_float(text) for c, text in zip(CHAIN_COLUMNS, row)}
        bad = [c for c in CHAIN_COLUMNS if values[c] is None]
        if bad:
            errors.append(f'line {line}: malformed numeric field(s) {", ".join(bad)}')
            continue
        try:
            quotes.append(OptionQuote(spot=values['spot'], strike=values['strike'],
                                      maturity=values['maturity_years'], rate=values['rate'],
                                      market_iv=values['market_iv']))
        except ValueError as err:
            errors.append(f'line {line}: {err}')
    if errors:
        raise IngestError(f'Option chain {path} has {len(errors)} invalid row(s)', errors)
    logger.info(f'Read {len(quotes)} option quotes from {path}')
    return quotes


def ingest_vol_index(path):
    frame = _read_frame(path, INDEX_COLUMNS, 'Volatility index')
    dates = pd.to_datetime(frame['date'].str.strip(), format='ISO8601', errors='coerce')
    levels = [_parse_float(text) for text in frame['level']]
    errors = []
    previous = None
    for k, (date, level) in enumerate(zip(dates, levels)):
        line = k + 2
        if pd.isna(date):
            errors.append(f'line {line}: date {frame["date"].iloc[k]!r} is not ISO-8601')
            continue
        if level is None:
            errors.append(f'line {line}: malformed level {frame["level"].iloc[k]!r}')
        elif not 0 < level < 5:
            errors.append(f'line {line}: level {level} outside (0, 5)')
        if previous is not None and date <= previous:
            errors.append(f'line {line}: date {date.date()} does not follow {previous.date()}')
        previous = date
    if errors:
        raise IngestError(f'Volatility index {path} has {len(errors)} invalid row(s)', errors)
    series = VolIndexSeries(dates=tuple(d.date() for d in dates), levels=tuple(float(v) for v in levels))
    logger.info(f'Read {len(series)} index levels from {path}, minimum {series.min_value:.4f}')
    return series


def write_chain(quotes, path):
    pd.DataFrame([q.to_dict() for q in quotes], columns=CHAIN_COLUMNS).to_csv(
        path, index=False, float_format='%.17g')
    return path


def write_vol_index(series, path):
    pd.DataFrame({'date': [d.isoformat() for d in series.dates], 'level': series.levels}).to_csv(
        path, index=False, float_format='%.17g')
    return path


def chain_grid(spot=100.0, rate=0.0, moneyness=None, maturities=(0.1, 0.5, 2.0)):
    '''
    Quotes (with a placeholder IV) over every moneyness/maturity pair; the
    defaults give the 18-option layout of the two reference chains.
    '''
    if moneyness is None:
        moneyness = [m for triple in MONEYNESS_SETS for m in triple]
    return [OptionQuote(spot=spot, strike=spot/m, maturity=float(t), rate=rate, market_iv=1.0)
            for m in moneyness for t in maturities]


def synthetic_chain(iv_of_quote, spot=100.0, rate=0.0, moneyness=None, maturities=(0.1, 0.5, 2.0),
                    noise=0.0, rng=None):
    '''
    Chain whose market IVs are iv_of_quote(quote), plus optional additive
    Gaussian noise of standard deviation `noise` (in volatility units).
    '''
    quotes = chain_grid(spot, rate, moneyness, maturities)
    ivs = np.array([iv_of_quote(q) for q in quotes], dtype=float)
    if noise > 0:
        rng = np.random.default_rng(0) if rng is None else rng
        ivs = ivs + noise*rng.standard_normal(len(ivs))
    return [OptionQuote(spot=q.spot, strike=q.strike, maturity=q.maturity, rate=q.rate, market_iv=float(iv))
            for q, iv in zip(quotes, ivs)]


def synthetic_vol_index(minimum=VDAX_MINIMUM, n_days=250, start='2010-01-04', seed=0):
    '''
    Business-day index path whose minimum equals `minimum` exactly.
    '''
    rng = np.random.default_rng(seed)
    dates = pd.bdate_range(start=start, periods=n_days)
    path = np.exp(np.cumsum(0.03*rng.standard_normal(n_days)))
    levels = minimum*path/path.min()
    levels[int(np.argmin(path))] = minimum
    return VolIndexSeries(dates=tuple(d.date() for d in dates), levels=tuple(float(v) for v in levels))
