import logging

from mgcal.game.strategies import generate_strategies

logger = logging.getLogger(__name__)


def simulate(config, n_steps, table=None, state=None, streams=None, init_scores=0.0,
             activation='prose', **kwargs):
    '''
    Run either engine for n_steps; returns the engine's output dictionary
    with the strategy table added under 'table'.
    '''
    if n_steps < 0:
        raise ValueError(f'Number of steps should be >= 0, got {n_steps}')
    if table is None:
        table = generate_strategies(config)

    if config.kind == 'MG':
        from mgcal.simulator.implementations.MG_engine import run_mg
        output = run_mg(config, table, n_steps, state=state, streams=streams, init_scores=init_scores)
    elif config.kind == 'GCMG':
        from mgcal.simulator.implementations.GCMG_engine import run_gcmg
        output = run_gcmg(config, table, n_steps, state=state, streams=streams,
                          init_scores=init_scores, activation=activation, **kwargs)
    else:
        raise NotImplementedError(f"Game kind {config.kind!r} not implemented. kind should be in ['MG', 'GCMG']")

    output['table'] = table
    return output


class GameSimulator():

    '''
    INPUTS
    ------------------------------------

    burn_in:          steps discarded before measuring; None gives 200*P

    measure:          steps averaged for sigma^2_N; None gives 1000*P

    n_batches:        batches used for the batch-means standard error (>= 2)

    activation:       GCMG activation convention
                      Can take values: 'prose' (1/(1+exp(-Gamma U))),
                      'literal' (1/(1+exp(Gamma U)))
                      Default: 'prose'

    init_scores:      initial scores. MG: score difference U_+ - U_-, scalar or
                      per agent, or an (N, 2) score array. GCMG: scalar or one
                      score per speculator. Default: 0

    n_jobs:           worker processes used by sweeps. Default: 1

    print_status:     print a one-line summary after each estimate
    '''

    def __init__(
        self,
        burn_in: int = None,
        measure: int = None,
        n_batches: int = 10,
        activation: str = 'prose',
        init_scores=0.0,
        n_jobs: int = 1,
        print_status: bool = False,
    ):
        self.burn_in = burn_in
        self.measure = measure
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError('Please provide a non-negative burn-in')
        if self.measure is not None and self.measure < 1:
            raise ValueError('Please provide a positive measurement window')

        self.n_batches = n_batches
        if self.n_batches < 2:
            raise ValueError('Please provide at least 2 batches')

        self.activation = activation
        if self.activation not in ['prose', 'literal']:
            raise ValueError('Please provide a valid activation convention')

        self.init_scores = init_scores

        self.n_jobs = n_jobs
        if self.n_jobs < 1:
            raise ValueError('Please provide n_jobs >= 1')

        self.print_status = print_status

    def options(self):
        return {'burn_in': self.burn_in, 'measure': self.measure, 'n_batches': self.n_batches,
                'activation': self.activation, 'init_scores': self.init_scores}

    def run_game(self, config, n_steps, table=None):
        return simulate(config, n_steps, table=table, init_scores=self.init_scores,
                        activation=self.activation)

    def estimate_sigma(self, config, table=None):
        from mgcal.simulator.estimators import estimate_sigma
        estimate = estimate_sigma(config, table, **self.options())
        if self.print_status:
            print(f'{config.kind} {config.control_name}={config.control:.4g}: '
                  f'sigma2_N/N = {estimate.per_N:.4f} +/- {estimate.stderr/config.N:.4f}')
        return estimate

    def run_sweep(self, configs, seeds=1, checkpoint=None):
        from mgcal.simulator.sweeps import sweep_phase
        return sweep_phase(configs, seeds, burn_in=self.burn_in, measure=self.measure,
                           n_batches=self.n_batches, activation=self.activation,
                           init_scores=self.init_scores, n_jobs=self.n_jobs, checkpoint=checkpoint)
