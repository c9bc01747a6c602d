import contextlib
import io
import json
import os
import tempfile
import unittest

import pandas as pd

from mgcal.calibration.calibrator import CalibrationResult
from mgcal.cli import main
from mgcal.simulator.sweeps import PhaseCurve, PhasePoint, detect_critical, write_phase_curve

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')


def run(argv):
    with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
        return main(argv)


def write_curve(folder):
    controls = [0.1, 0.2, 0.3, 0.34, 0.5, 0.8, 1.2, 2.0, 4.0]
    per_N = [3.0, 1.5, 0.4, 0.2, 0.5, 0.7, 0.85, 0.95, 1.0]
    points = [PhasePoint(control=c, sigma2_over_N=v, stderr=0.01, n_seeds=4, N=101) for c, v in zip(controls, per_N)]
    curve = PhaseCurve(points=points, critical=detect_critical(points), kind='MG', meta={'gamma': 1.0, 'w': 1.0, 'N': 101})
    path, _ = write_phase_curve(curve, os.path.join(folder, 'curve.csv'))
    return str(path)


class TestPriceCommands(unittest.TestCase):
    def runTest(self):
        """
        price and implied write their records and manifests; prices above spot exit with 4
        """
        with tempfile.TemporaryDirectory() as tmp:
            code = run(['price', '--spot', '100', '--strike', '90', '--theta', '1', '--nu', '0', '--out', tmp])
            self.assertTrue(code == 0, f"exit code {code}")
            with open(os.path.join(tmp, 'price.json')) as fh:
                record = json.load(fh)
            self.assertTrue(record['call_price'] == 10.0, f"price {record['call_price']}")
            with open(os.path.join(tmp, 'price.manifest.json')) as fh:
                manifest = json.load(fh)
            for key in ('command', 'config_digest', 'parameters', 'seed', 'started', 'finished', 'outputs', 'version'):
                self.assertTrue(key in manifest, f"{key} missing from the manifest")

            code = run(['price', '--spot', '100', '--strike', '100', '--theta', '1', '--nu', '0.04',
                        '--samples', '1000', '--seed', '5', '--out', tmp, '--name', 'mc'])
            self.assertTrue(code == 0, f"exit code {code}")
            with open(os.path.join(tmp, 'mc_terminal.json')) as fh:
                summary = json.load(fh)
            self.assertTrue(summary['count'] == 1000 and summary['seed'] == 5, f"summary {summary}")
            self.assertTrue(set(summary) == {'mean', 'variance', 'count', 'seed'}, f"summary keys {set(summary)}")

            code = run(['implied', '--spot', '100', '--strike', '100', '--theta', '1', '--price', '7.965567455405804',
                        '--out', tmp])
            self.assertTrue(code == 0, f"exit code {code}")
            with open(os.path.join(tmp, 'implied.json')) as fh:
                self.assertAlmostEqual(json.load(fh)['nu'], 0.04, places=8)

            code = run(['implied', '--spot', '100', '--strike', '100', '--theta', '1', '--price', '120', '--out', tmp])
            self.assertTrue(code == 4, f"price above spot gave exit code {code}")


class TestUsageErrors(unittest.TestCase):
    def runTest(self):
        """
        malformed arguments exit with 2, missing inputs with 3
        """
        with tempfile.TemporaryDirectory() as tmp:
            self.assertTrue(run(['price', '--spot', '100']) == 2, "missing arguments")
            self.assertTrue(run(['sweep', '--kind', 'mg', '--alpha', '2:1:4', '--out', tmp]) == 2, "invalid grid")
            self.assertTrue(run(['price', '--spot', '-1', '--strike', '1', '--theta', '1', '--nu', '0',
                                 '--out', tmp]) == 2, "negative spot")
            code = run(['calibrate', '--chain', os.path.join(FIXTURES, 'chain_fig3.csv'),
                        '--index', os.path.join(FIXTURES, 'vol_index.csv'),
                        '--curve', os.path.join(tmp, 'missing.csv'), '--out', tmp])
            self.assertTrue(code == 3, f"missing curve gave exit code {code}")
            curve = write_curve(tmp)
            code = run(['calibrate', '--chain', os.path.join(FIXTURES, 'chain_bad.csv'),
                        '--index', os.path.join(FIXTURES, 'vol_index.csv'), '--curve', curve, '--out', tmp])
            self.assertTrue(code == 2, f"malformed chain gave exit code {code}")


class TestCalibrateAndFigures(unittest.TestCase):
    def runTest(self):
        """
        calibrate on the reference fixtures, then render phase-curve and term-structure data
        """
        with tempfile.TemporaryDirectory() as tmp:
            curve = write_curve(tmp)
            code = run(['calibrate', '--chain', os.path.join(FIXTURES, 'chain_fig3.csv'),
                        '--index', os.path.join(FIXTURES, 'vol_index.csv'), '--curve', curve,
                        '--out', tmp, '--name', 'fig3'])
            self.assertTrue(code == 0, f"exit code {code}")
            result = CalibrationResult.read_json(os.path.join(tmp, 'fig3.json'))
            self.assertTrue(result.fitted_control >= result.critical_control, "fit below the critical point")
            self.assertTrue(len(result.per_option) == 9 and 'chain' in result.inputs, "incomplete result")

            self.assertTrue(run(['figure', '--id', '1', '--curve', curve, '--out', tmp]) == 0, "figure 1")
            frame = pd.read_csv(os.path.join(tmp, 'figure1.csv'))
            self.assertTrue(list(frame.columns) == ['series', 'x', 'y'], f"columns {list(frame.columns)}")
            self.assertTrue(run(['figure', '--id', '3', '--result', os.path.join(tmp, 'fig3.json'), '--out', tmp]) == 0,
                            "figure 3")
            self.assertTrue(run(['figure', '--id', '3', '--out', tmp]) == 2, "figure 3 without a result")


class TestSimulationCommands(unittest.TestCase):
    def runTest(self):
        """
        a small sweep and a single run write their CSV, JSON and manifest files
        """
        with tempfile.TemporaryDirectory() as tmp:
            code = run(['sweep', '--kind', 'mg', '--N', '11', '--alpha', '0.5,1,2,4', '--burn-in', '100',
                        '--measure', '1000', '--out', tmp, '--name', 'small'])
            self.assertTrue(code == 0, f"sweep exit code {code}")
            for suffix in ('.csv', '.json', '.manifest.json'):
                self.assertTrue(os.path.exists(os.path.join(tmp, f'small{suffix}')), f"small{suffix} missing")
            self.assertTrue(len(pd.read_csv(os.path.join(tmp, 'small.csv'))) == 4, "one row per alpha")

            code = run(['simulate', '--kind', 'gcmg', '--Ns', '20', '--Np', '10', '--P', '8', '--eps', '0.01',
                        '--seed', '3', '--burn-in', '50', '--measure', '500', '--out', tmp])
            self.assertTrue(code == 0, f"simulate exit code {code}")
            for suffix in ('_attendance.csv', '_price.csv', '_sigma.json', '.manifest.json'):
                self.assertTrue(os.path.exists(os.path.join(tmp, f'gcmg_run{suffix}')), f"gcmg_run{suffix} missing")
            attendance = pd.read_csv(os.path.join(tmp, 'gcmg_run_attendance.csv'))
            self.assertTrue(len(attendance) == 550, f"{len(attendance)} attendance rows")


if __name__ == '__main__':
    unittest.main()
