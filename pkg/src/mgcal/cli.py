"""
Command-line front end.

    mgcal sweep      phase curve (CSV + JSON sidecar)
    mgcal simulate   one game: attendance, price path and sigma^2_N
    mgcal price      call price for a given nu
    mgcal implied    implied nu for a given call price
    mgcal calibrate  w_bar and the fitted control from chain, index and curve
    mgcal figure     plot data for figures 1-8

Exit codes: 0 success, 2 usage, 3 missing input file, 4 numerical failure.
The default output directory is $MGCAL_OUTPUT_DIR, or the working directory.
"""

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from mgcal.utilities import IngestError, MgcalError, dict_digest, parse_grid

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_MISSING, EXIT_NUMERIC = 0, 2, 3, 4
OUTPUT_ENV = 'MGCAL_OUTPUT_DIR'


def _now():
    return datetime.now(timezone.utc).isoformat(timespec='seconds')


class Run():
    '''
    Collects the outputs of one command and writes its manifest.
    '''

    def __init__(self, command, args, out_dir, name, seed=None):
        self.command = command
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.name = name
        self.seed = seed
        self.parameters = {k: v for k, v in vars(args).items() if k not in ('func', 'verbose', 'out')}
        self.started = _now()
        self.outputs = []

    def path(self, suffix):
        return self.out_dir/f'{self.name}{suffix}'

    def add(self, *paths):
        self.outputs += [str(p) for p in paths]

    def finish(self):
        from mgcal import __version__
        manifest = {'command': self.command, 'config_digest': dict_digest(self.parameters),
                    'parameters': self.parameters, 'seed': self.seed, 'started': self.started,
                    'finished': _now(), 'outputs': self.outputs, 'version': __version__}
        path = self.path('.manifest.json')
        with open(path, 'w', encoding='utf-8') as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        logger.info(f'Wrote manifest {path}')
        return path


def _write_json(record, path):
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
    return path


def _check_exists(*paths):
    for p in paths:
        if p is not None and not os.path.exists(p):
            raise FileNotFoundError(f'Input file {p} does not exist')


def cmd_sweep(args):
    from mgcal.game.config import GameConfig, load_config
    from mgcal.simulator.game_simulator import GameSimulator
    from mgcal.simulator.sweeps import mg_grid, sweep_phase_gcmg, write_phase_curve

    _check_exists(args.config)
    base = {'gamma': 1.0, 'w': 1.0, 'seed': 0, 'N': None, 'M': None, 'epsilon': 0.0}
    if args.config:
        cfg = load_config(args.config)
        base.update({'gamma': cfg.gamma, 'w': cfg.w, 'seed': cfg.seed, 'N': cfg.N, 'M': cfg.M,
                     'epsilon': cfg.epsilon})
    for key in ('gamma', 'w', 'seed', 'N', 'M'):
        if getattr(args, key) is not None:
            base[key] = getattr(args, key)
    if args.eps is not None:
        base['epsilon'] = args.eps

    simulator = GameSimulator(burn_in=args.burn_in, measure=args.measure, n_batches=args.batches,
                              activation=args.activation, n_jobs=args.jobs, print_status=False)
    name = args.name or f'{args.kind}_sweep'
    run = Run('sweep', args, args.out, name, seed=base['seed'])
    if args.kind == 'mg':
        alphas = parse_grid(args.alpha)
        if base['M'] is not None and args.N is None:
            configs = mg_grid(alphas, M=base['M'], gamma=base['gamma'], w=base['w'], seed=base['seed'])
        else:
            configs = mg_grid(alphas, N=base['N'] or 101, gamma=base['gamma'], w=base['w'], seed=base['seed'])
        curve = simulator.run_sweep(configs, seeds=args.seeds, checkpoint=args.checkpoint)
    else:
        template = GameConfig.gcmg(1, 0, 1, gamma=base['gamma'], w=base['w'], seed=base['seed'])
        curve = sweep_phase_gcmg(template, parse_grid(args.ns), args.np, args.L, base['epsilon'],
                                 seeds=args.seeds, burn_in=args.burn_in, measure=args.measure,
                                 n_batches=args.batches, activation=args.activation, n_jobs=args.jobs,
                                 checkpoint=args.checkpoint)
    run.add(*write_phase_curve(curve, run.path('.csv')))
    if args.checkpoint:
        run.add(args.checkpoint)
    run.finish()
    if curve.critical is None:
        logger.warning('No critical point detected; the sidecar records detected = false')
    return EXIT_OK


def _game_config(args):
    from mgcal.game.config import GameConfig, load_config

    overrides = {'gamma': args.gamma, 'w': args.w, 'seed': args.seed, 'epsilon': args.eps}
    if args.config:
        _check_exists(args.config)
        overrides.update({'N': args.N, 'P': args.P, 'M': args.M, 'N_s': args.Ns, 'N_p': args.Np})
        if args.kind:
            overrides['kind'] = args.kind.upper()
        return load_config(args.config, **overrides)
    if args.kind is None:
        raise ValueError('Please provide --kind or --config')
    kwargs = {k: v for k, v in overrides.items() if v is not None}
    if args.kind == 'gcmg':
        if args.Ns is None or args.Np is None or args.P is None:
            raise ValueError('A GCMG run needs --Ns, --Np and --P')
        return GameConfig.gcmg(args.Ns, args.Np, args.P, **kwargs)
    if args.N is None or (args.P is None and args.M is None):
        raise ValueError('An MG run needs --N and one of --P or --M')
    if args.M is not None:
        return GameConfig.from_memory('MG', args.N, args.M, **kwargs)
    return GameConfig(kind='MG', N=args.N, P=args.P, **kwargs)


def cmd_simulate(args):
    import pandas as pd
    from mgcal.sde.continuum import price_path_discrete
    from mgcal.simulator.estimators import default_windows, sigma_from_attendance
    from mgcal.simulator.game_simulator import GameSimulator

    config = _game_config(args)
    burn_in, measure = default_windows(config, args.burn_in, args.measure)
    simulator = GameSimulator(burn_in=burn_in, measure=measure, n_batches=args.batches,
                              activation=args.activation)
    output = simulator.run_game(config, burn_in + measure)
    sigma2, stderr = sigma_from_attendance(output['attendance'][burn_in:], config, args.batches)

    run = Run('simulate', args, args.out, args.name or f'{config.kind.lower()}_run', seed=config.seed)
    attendance = run.path('_attendance.csv')
    pd.DataFrame({'t': range(len(output['attendance'])), 'mu': output['mu'],
                  'attendance': output['attendance']}).to_csv(attendance, index=False, float_format='%.17g')
    price = price_path_discrete(output['attendance'], config, args.p0).write_csv(run.path('_price.csv'))
    record = {'config': config.to_dict(), 'sigma2_N': sigma2, 'sigma2_over_N': sigma2/config.N,
              'stderr': stderr, 'burn_in': burn_in, 'measure': measure}
    summary = _write_json(record, run.path('_sigma.json'))
    run.add(attendance, price, summary)
    run.finish()
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


def cmd_price(args):
    from mgcal.pricing.black_scholes import PricingInput, call_price

    inp = PricingInput(spot=args.spot, strike=args.strike, rate=args.rate, theta=args.theta, nu=args.nu)
    record = {'spot': inp.spot, 'strike': inp.strike, 'rate': inp.rate, 'theta': inp.theta,
              'nu': inp.nu, 'call_price': call_price(inp)}
    run = Run('price', args, args.out, args.name or 'price', seed=args.seed if args.samples else None)
    run.add(_write_json(record, run.path('.json')))
    if args.samples:
        from mgcal.game.streams import substream
        from mgcal.samplers.sampling import risk_neutral_terminal, terminal_summary, write_summary

        samples = risk_neutral_terminal(inp.spot, inp.rate, inp.theta, inp.nu, args.samples,
                                        rng=substream(args.seed, 'terminal'))
        run.add(write_summary(terminal_summary(samples, args.seed), run.path('_terminal.json')))
    run.finish()
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


def cmd_implied(args):
    from mgcal.pricing.black_scholes import PricingInput, implied_nu

    inp = PricingInput(spot=args.spot, strike=args.strike, rate=args.rate, theta=args.theta)
    nu = implied_nu(args.price, inp)
    record = {'spot': inp.spot, 'strike': inp.strike, 'rate': inp.rate, 'theta': inp.theta,
              'call_price': args.price, 'nu': nu, 'implied_vol': nu**0.5}
    run = Run('implied', args, args.out, args.name or 'implied')
    run.add(_write_json(record, run.path('.json')))
    run.finish()
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


def cmd_calibrate(args):
    from mgcal.calibration.calibrator import Calibrator

    _check_exists(args.chain, args.index, args.curve)
    calibrator = Calibrator(mode=args.mode, time_scale=args.time_scale, N_min=args.N_min)
    result = calibrator.calibrate_files(args.chain, args.index, args.curve, N=args.N)
    run = Run('calibrate', args, args.out, args.name or 'calibration')
    run.add(result.write_json(run.path('.json')))
    run.finish()
    return EXIT_OK


def cmd_figure(args):
    from mgcal.calibration.calibrator import CalibrationResult
    from mgcal.figures import figure_data, write_figure
    from mgcal.simulator.sweeps import read_phase_curve

    _check_exists(*(args.curve or []), *(args.result or []))
    curves = [read_phase_curve(p) for p in args.curve or []]
    results = [CalibrationResult.read_json(p) for p in args.result or []]
    labels = [Path(p).stem for p in args.curve or []]
    frame = figure_data(args.id, curves=curves, results=results, labels=labels)
    run = Run('figure', args, args.out, args.name or f'figure{args.id}')
    run.add(write_figure(frame, run.path('.csv')))
    run.finish()
    return EXIT_OK


def _add_common(parser):
    parser.add_argument('--out', default=os.environ.get(OUTPUT_ENV, '.'), help='output directory')
    parser.add_argument('--name', default=None, help='stem of the output file names')


def _add_game(parser):
    parser.add_argument('--config', default=None, help='flat key = value game configuration file')
    parser.add_argument('--gamma', type=float, default=None, help='learning rate Gamma')
    parser.add_argument('--w', type=float, default=None, help='strategy weight w')
    parser.add_argument('--seed', type=int, default=None, help='root seed')
    parser.add_argument('--N', type=int, default=None, help='number of agents')
    parser.add_argument('--M', type=int, default=None, help='memory, P = 2**M')
    parser.add_argument('--eps', type=float, default=None, help='speculator threshold epsilon')
    parser.add_argument('--burn-in', dest='burn_in', type=int, default=None, help='default 200 P')
    parser.add_argument('--measure', type=int, default=None, help='default 1000 P')
    parser.add_argument('--batches', type=int, default=10)
    parser.add_argument('--activation', choices=['prose', 'literal'], default='prose')


def build_parser():
    parser = argparse.ArgumentParser(prog='mgcal', description='Minority Game simulation and option calibration')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('sweep', help='phase curve sweep')
    p.add_argument('--kind', choices=['mg', 'gcmg'], required=True)
    _add_game(p)
    p.add_argument('--alpha', default='0.05:8:16', help="alpha grid, 'lo:hi:n' or 'a,b,c'")
    p.add_argument('--ns', default='0.1:10:12', help='n_s grid (GCMG)')
    p.add_argument('--L', type=int, default=8000, help='P N_s held fixed (GCMG)')
    p.add_argument('--np', type=float, default=1.0, help='producers per information state (GCMG)')
    p.add_argument('--seeds', type=int, default=1)
    p.add_argument('--jobs', type=int, default=1)
    p.add_argument('--checkpoint', default=None, help='JSON-lines file for restartable sweeps')
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser('simulate', help='single game run')
    p.add_argument('--kind', choices=['mg', 'gcmg'], default=None)
    _add_game(p)
    p.add_argument('--P', type=int, default=None)
    p.add_argument('--Ns', type=int, default=None)
    p.add_argument('--Np', type=int, default=None)
    p.add_argument('--p0', type=float, default=1.0, help='initial price')
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    for name, func, last in (('price', cmd_price, '--nu'), ('implied', cmd_implied, '--price')):
        p = sub.add_parser(name, help='call price' if name == 'price' else 'implied variance')
        p.add_argument('--spot', type=float, required=True)
        p.add_argument('--strike', type=float, required=True)
        p.add_argument('--rate', type=float, default=0.0)
        p.add_argument('--theta', type=float, required=True, help='maturity in years')
        p.add_argument(last, type=float, required=True)
        if name == 'price':
            p.add_argument('--samples', type=int, default=0, help='risk-neutral terminal samples to summarize')
            p.add_argument('--seed', type=int, default=0)
        _add_common(p)
        p.set_defaults(func=func)

    p = sub.add_parser('calibrate', help='calibrate w and the control parameter')
    p.add_argument('--chain', required=True)
    p.add_argument('--index', required=True)
    p.add_argument('--curve', required=True)
    p.add_argument('--mode', choices=['flat', 'maturity'], default='flat')
    p.add_argument('--time-scale', dest='time_scale', type=float, default=None)
    p.add_argument('--N-min', dest='N_min', type=int, default=1)
    p.add_argument('--N', type=int, default=None, help='defaults to the N of the critical node')
    _add_common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser('figure', help='plot data')
    p.add_argument('--id', type=int, required=True)
    p.add_argument('--curve', action='append', help='phase curve CSV (repeatable)')
    p.add_argument('--result', action='append', help='calibration JSON (repeatable)')
    _add_common(p)
    p.set_defaults(func=cmd_figure)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s - %(levelname)s - %(message)s')
    try:
        return args.func(args)
    except FileNotFoundError as err:
        logger.error(str(err))
        return EXIT_MISSING
    except IngestError as err:
        logger.error(str(err))
        return EXIT_USAGE
    except MgcalError as err:
        logger.error(str(err))
        return EXIT_NUMERIC
    except ValueError as err:
        logger.error(str(err))
        return EXIT_USAGE
    except ArithmeticError as err:
        logger.error(str(err))
        return EXIT_NUMERIC


if __name__ == '__main__':
    sys.exit(main())
